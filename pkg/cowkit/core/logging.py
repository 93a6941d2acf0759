# cowkit/core/logging.py
from __future__ import annotations

import logging
import os
import sys
import uuid
from typing import Optional

from pythonjsonlogger import jsonlogger

_DEF_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
_DEF_DATEFMT = "%Y-%m-%dT%H:%M:%S%z"
_JSON_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s %(run_id)s"

_RUN_ID = uuid.uuid4().hex


def current_run_id() -> str:
    return _RUN_ID


class RunIdFilter(logging.Filter):
    """Stamps every record with the per-invocation `run_id`."""

    def __init__(self, run_id: Optional[str] = None):
        super().__init__()
        self.run_id = run_id or _RUN_ID

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "run_id"):
            record.run_id = self.run_id
        return True


def setup_logging(level: Optional[str] = None, json_format: Optional[bool] = None) -> None:
    """
    Idempotent logging setup.
    - Honors LOG_LEVEL env (default INFO) unless an explicit level is passed.
    - COWKIT_LOG_JSON=1 (or json_format=True) switches to one JSON object per record.
    - Writes to stderr; stdout is reserved for command results.
    """
    root = logging.getLogger()
    if root.handlers:
        return  # already configured

    log_level = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    parsed_level = getattr(logging, log_level, None)
    if not isinstance(parsed_level, int):
        parsed_level = logging.INFO

    if json_format is None:
        json_format = os.getenv("COWKIT_LOG_JSON", "").strip().lower() in ("1", "true", "yes", "on")

    handler = logging.StreamHandler(sys.stderr)
    if json_format:
        formatter: logging.Formatter = jsonlogger.JsonFormatter(_JSON_FORMAT, datefmt=_DEF_DATEFMT)
    else:
        formatter = logging.Formatter(_DEF_FORMAT, datefmt=_DEF_DATEFMT)
    handler.setFormatter(formatter)
    handler.addFilter(RunIdFilter())

    root.setLevel(parsed_level)
    root.addHandler(handler)


def set_level(level: str) -> None:
    """Re-level the root logger after setup (the CLI's --log-level)."""
    parsed = getattr(logging, level.upper(), None)
    if isinstance(parsed, int):
        logging.getLogger().setLevel(parsed)


__all__ = ["setup_logging", "set_level", "RunIdFilter", "current_run_id"]
