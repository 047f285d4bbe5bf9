# --- Validation Utilities Module ---
"""
Error types and input validation shared by the simulator and the harness
"""

import math
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from logger_utils import logger


class SafebanError(Exception):
    """Base class for every error raised by the simulator"""


class ConfigurationError(SafebanError, ValueError):
    """Invalid experiment config, sampler setup or preset name"""


class NumericDomainError(SafebanError, ArithmeticError):
    """Input outside the numeric domain of an operation (non-PD matrix, Δ ≤ 0)"""


class EnvironmentContractError(SafebanError):
    """The environment broke one of its guarantees (no safe arm in a context)"""


class NoSafeActionError(SafebanError):
    """The estimated safe set is empty"""


class UnsupportedDimensionError(SafebanError, ValueError):
    """Operation only defined for a specific dimension"""


def validate_positive(value: Any, name: str, allow_zero: bool = False) -> float:
    """Validate a finite positive real with the config key in the message"""
    try:
        numeric_value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name}: expected a number, got {value!r}")
    if not math.isfinite(numeric_value):
        raise ConfigurationError(f"{name}: value must be finite, got {numeric_value}")
    if numeric_value < 0 or (numeric_value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ConfigurationError(f"{name}: value {numeric_value} must be {bound}")
    return numeric_value


def validate_probability(value: Any, name: str) -> float:
    """Validate a value in the open interval (0, 1)"""
    numeric_value = validate_positive(value, name)
    if numeric_value >= 1.0:
        raise ConfigurationError(f"{name}: value {numeric_value} must be in (0, 1)")
    return numeric_value


def validate_int_range(value: Any, name: str, min_val: int = 0, max_val: Optional[int] = None) -> int:
    """Validate an integer in [min_val, max_val]"""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigurationError(f"{name}: expected an integer, got {value!r}")
    int_value = int(value)
    if int_value < min_val:
        raise ConfigurationError(f"{name}: value {int_value} is below minimum {min_val}")
    if max_val is not None and int_value > max_val:
        raise ConfigurationError(f"{name}: value {int_value} exceeds maximum {max_val}")
    return int_value


def validate_choice(value: Any, name: str, allowed_values: Iterable[str]) -> str:
    """Validate a string against a fixed vocabulary"""
    allowed = list(allowed_values)
    if not isinstance(value, str) or value not in allowed:
        raise ConfigurationError(f"{name}: value {value!r} not in allowed values: {allowed}")
    return value


def validate_vector(value: Any, name: str, dim: Optional[int] = None) -> np.ndarray:
    """Validate a finite real vector, optionally of fixed length"""
    try:
        vector = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name}: expected a list of numbers, got {value!r}")
    if vector.ndim != 1 or vector.size == 0:
        raise ConfigurationError(f"{name}: expected a non-empty flat list, got shape {vector.shape}")
    if dim is not None and vector.size != dim:
        raise ConfigurationError(f"{name}: expected length {dim}, got {vector.size}")
    if not np.all(np.isfinite(vector)):
        raise ConfigurationError(f"{name}: entries must be finite")
    return vector


def validate_matrix(value: Any, name: str, dim: int) -> np.ndarray:
    """Validate a finite dim x dim real matrix"""
    try:
        matrix = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name}: expected a nested list of numbers, got {value!r}")
    if matrix.shape != (dim, dim):
        raise ConfigurationError(f"{name}: expected shape ({dim}, {dim}), got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ConfigurationError(f"{name}: entries must be finite")
    return matrix


def validate_known_keys(section: dict, allowed_keys: Sequence[str], where: str) -> None:
    """Reject unknown keys in a config section"""
    if not isinstance(section, dict):
        raise ConfigurationError(f"{where}: expected an object, got {type(section).__name__}")
    unknown = sorted(set(section) - set(allowed_keys))
    if unknown:
        logger(f"❌ Unknown keys in {where}: {unknown}", level="ERROR")
        raise ConfigurationError(f"{where}: unknown keys {unknown}; allowed: {sorted(allowed_keys)}")
