import logging

import pytest

from hafpn.utils.logging import setup_logger


def test_handlers_are_replaced(tmp_path):
    logger = setup_logger("WARNING")
    logger = setup_logger("INFO", tmp_path / "run.log")
    assert len(logger.handlers) == 2
    assert not logger.propagate
    console, file_handler = logger.handlers
    assert console.level == logging.INFO
    assert file_handler.level == logging.DEBUG


def test_file_gets_debug_records(tmp_path):
    logger = setup_logger("ERROR", tmp_path / "run.log")
    logging.getLogger("hafpn").debug("fine detail")
    logger.handlers[1].flush()
    assert "fine detail" in (tmp_path / "run.log").read_text()


def test_unknown_level():
    with pytest.raises(ValueError):
        setup_logger("LOUD")
