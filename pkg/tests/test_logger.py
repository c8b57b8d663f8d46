import io
import logging
import sys

from vqtk.utils.logger import setup_logger


def test_logger_follows_a_replaced_stderr(monkeypatch):
    name = "vqtk.test_stderr_swap"
    first = io.StringIO()
    monkeypatch.setattr(sys, "stderr", first)
    log = setup_logger(name, "INFO")
    log.info("one")
    first.close()

    second = io.StringIO()
    monkeypatch.setattr(sys, "stderr", second)
    setup_logger(name, "INFO")
    log.info("two")
    assert "two" in second.getvalue()
    assert len(log.handlers) == 1


def test_level_applies_on_reconfigure():
    log = setup_logger("vqtk.test_levels", "INFO")
    setup_logger("vqtk.test_levels", "error")
    assert log.level == logging.ERROR
    assert all(h.level == logging.ERROR for h in log.handlers)
    assert not log.propagate


def test_explicit_stream_is_kept():
    buf = io.StringIO()
    log = setup_logger("vqtk.test_explicit", "INFO", stream=buf)
    log.info("hello")
    assert "vqtk.test_explicit - INFO - hello" in buf.getvalue()
