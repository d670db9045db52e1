"""Tests for hafpn"""
