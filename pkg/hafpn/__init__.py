"""Hybrid attention feature pyramid necks and detection metrics"""
