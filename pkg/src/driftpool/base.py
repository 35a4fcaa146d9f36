"""Shared estimator base class, exceptions and validation helpers."""

import inspect


class DriftpoolError(Exception):
    """Base class for all driftpool errors."""


class ConfigError(DriftpoolError, ValueError):
    """Invalid configuration value (bad parameter, unknown key, ...)."""


class ParseError(DriftpoolError, ValueError):
    """Malformed file header or structure.

    ``line`` is the 1-based line number of the offending line when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RowError(DriftpoolError, ValueError):
    """Invalid data row (arity mismatch, unknown nominal value, missing value).

    ``row`` is the 1-based data-row number.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SchemaError(DriftpoolError, ValueError):
    """Instance does not conform to the stream's schema."""


class StreamError(DriftpoolError, RuntimeError):
    """Underlying read failure while consuming a stream."""


class StreamEstimator:
    """Minimal estimator base in the scikit-learn parameter idiom.

    Subclasses must accept all of their configuration as explicit keyword
    arguments of ``__init__`` and store each one on an attribute of the same
    name.  ``get_params``/``set_params`` then work by introspection, which
    keeps configs serializable for the CLI's config echo.
    """

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [
            p.name
            for p in sig.parameters.values()
            if p.name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ConfigError(
                    f"unknown parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters: {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({params})"


def check_fraction(name, value, low=0.0, high=1.0):
    """Validate a numeric parameter lies in [low, high]."""
    if not isinstance(value, (int, float)) or not low <= value <= high:
        raise ConfigError(f"{name} must be in [{low}, {high}], got {value!r}")
    return float(value)


def check_positive_int(name, value, minimum=1):
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def mix_seed(seed, *salts):
    """Derive a child seed from a base seed and integer salts.

    Plain integer arithmetic so the derivation is identical on every
    platform and Python build (no reliance on hash()).
    """
    h = (int(seed) * 0x9E3779B1 + 0x85EBCA77) & 0xFFFFFFFFFFFFFFFF
    for salt in salts:
        h ^= (int(salt) + 0x165667B1) & 0xFFFFFFFFFFFFFFFF
        h = (h * 0xC2B2AE3D) & 0xFFFFFFFFFFFFFFFF
        h ^= h >> 29
    return h
