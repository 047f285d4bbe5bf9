# --- Logging Utilities Module ---
"""
Timestamped console logging with a level filter, plus output-directory helpers
"""

import datetime
import os

LOG_LEVELS = {"DEBUG": 10, "INFO": 20, "WARNING": 30, "ERROR": 40}

_current_level = LOG_LEVELS["INFO"]


def set_log_level(level: str) -> None:
    """Set the minimum level printed by logger()"""
    global _current_level
    key = str(level).upper()
    if key not in LOG_LEVELS:
        raise ValueError(f"Unknown log level '{level}', expected one of {list(LOG_LEVELS)}")
    _current_level = LOG_LEVELS[key]


def get_log_level() -> str:
    for name, value in LOG_LEVELS.items():
        if value == _current_level:
            return name
    return "INFO"


def logger(msg: str, level: str = "INFO") -> None:
    """Print a timestamped message if its level passes the filter"""
    if LOG_LEVELS.get(level.upper(), LOG_LEVELS["INFO"]) < _current_level:
        return
    timestamp = datetime.datetime.now().strftime("%H:%M:%S")
    print(f"[{timestamp}] {msg}", flush=True)


def ensure_output_directory(path: str) -> bool:
    """Ensure an output directory exists with proper error handling"""
    try:
        if path and not os.path.exists(path):
            os.makedirs(path, exist_ok=True)
            logger(f"📁 Created output directory: {path}")
        return True
    except OSError as e:
        logger(f"❌ Error creating output directory {path}: {str(e)}", level="ERROR")
        return False
