"""Study configuration: ``key = value`` files, validation and canonical dump."""

import io
import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from .errors import ConfigError
from .mesh import GENERATORS
from .problems import PROBLEMS
from .system import SOLVERS

FILE_PREFIX = "file:"
FIXED_PREFIX = "fixed:"
TAU_H2 = "h2"

THREADS_ENV = "WG_BIOT_THREADS"
LOG_FILE_ENV = "WG_BIOT_LOG_FILE"

KEY_ORDER = ("problem", "mesh", "levels", "degree", "lambdas", "tau", "final_time",
             "mu", "kappa", "c0", "solver", "out", "threads", "verbose")


def _parse_ints(text: str, key: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {text!r}") from None
    return values


def _parse_floats(text: str, key: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def _parse_float(text, key: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _parse_int(text, key: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _fixed_tau(tau: str) -> Optional[float]:
    if tau == TAU_H2:
        return None
    if not tau.startswith(FIXED_PREFIX):
        raise ConfigError(f"tau: expected {TAU_H2} or {FIXED_PREFIX}<value>, got {tau!r}")
    value = _parse_float(tau[len(FIXED_PREFIX):], "tau")
    if not value > 0.0:
        raise ConfigError(f"tau: fixed step must be positive, got {value}")
    return value


def _parse_bool(text, key: str) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"{key}: expected true or false, got {text!r}")


@dataclass(frozen=True)
class StudyConfig:
    problem: str = "poly"
    mesh: str = "triangular"
    levels: Tuple[int, ...] = (2, 4, 8, 16)
    degree: int = 1
    lambdas: Tuple[float, ...] = (1.0,)
    tau: str = TAU_H2
    final_time: float = 1.0
    mu: float = 1.0
    kappa: float = 1.0
    c0: float = 1.0
    solver: str = "direct"
    out: str = "results"
    threads: int = 1
    verbose: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem: expected one of {', '.join(PROBLEMS)}, got {self.problem!r}")
        if not (self.mesh in GENERATORS or self.mesh.startswith(FILE_PREFIX)):
            raise ConfigError(f"mesh: expected one of {', '.join(GENERATORS)} or "
                              f"{FILE_PREFIX}<path>, got {self.mesh!r}")
        if self.mesh.startswith(FILE_PREFIX) and not self.mesh_path:
            raise ConfigError("mesh: file: needs a path")
        if not self.levels:
            raise ConfigError("levels: at least one level is required")
        if any(n < 1 for n in self.levels):
            raise ConfigError(f"levels: every level must be >= 1, got {list(self.levels)}")
        if self.degree < 1:
            raise ConfigError(f"degree: j must be >= 1, got {self.degree}")
        if not self.lambdas:
            raise ConfigError("lambdas: at least one value is required")
        if any(not (lam > 0.0 and math.isfinite(lam)) for lam in self.lambdas):
            raise ConfigError(f"lambdas: every value must be positive, got {list(self.lambdas)}")
        _fixed_tau(self.tau)
        if not self.final_time > 0.0:
            raise ConfigError(f"final_time: must be positive, got {self.final_time}")
        if not self.mu > 0.0:
            raise ConfigError(f"mu: must be positive, got {self.mu}")
        if not self.kappa > 0.0:
            raise ConfigError(f"kappa: must be positive, got {self.kappa}")
        if not self.c0 >= 0.0:
            raise ConfigError(f"c0: must be nonnegative, got {self.c0}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver: expected one of {', '.join(SOLVERS)}, got {self.solver!r}")
        if self.threads < 1:
            raise ConfigError(f"threads: must be >= 1, got {self.threads}")

    @property
    def mesh_path(self) -> Optional[Path]:
        if not self.mesh.startswith(FILE_PREFIX):
            return None
        rest = self.mesh[len(FILE_PREFIX):]
        return Path(rest) if rest else None

    @property
    def fixed_tau(self) -> Optional[float]:
        return _fixed_tau(self.tau)

    def tau_for(self, label: float) -> float:
        """Time step for a level: label^2 under the h2 rule, else the fixed value."""
        fixed = self.fixed_tau
        return label * label if fixed is None else fixed

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "StudyConfig":
        unknown = sorted(set(values) - set(KEY_ORDER))
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
        return cls(**_coerce(values))

    def merged(self, **overrides) -> "StudyConfig":
        """Copy with every non-None override applied (command-line flags win)."""
        given = {k: v for k, v in overrides.items() if v is not None}
        unknown = sorted(set(given) - {f.name for f in fields(self)})
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
        return replace(self, **_coerce(given))


def _coerce(values: Mapping[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, raw in values.items():
        if raw is None:
            raise ConfigError(f"{key}: missing value")
        if key == "levels":
            out[key] = (tuple(int(v) for v in raw) if isinstance(raw, (tuple, list))
                        else _parse_ints(raw, key))
        elif key == "lambdas":
            out[key] = (tuple(float(v) for v in raw) if isinstance(raw, (tuple, list))
                        else _parse_floats(raw, key))
        elif key in ("degree", "threads"):
            out[key] = _parse_int(raw, key)
        elif key in ("final_time", "mu", "kappa", "c0"):
            out[key] = _parse_float(raw, key)
        elif key == "verbose":
            out[key] = _parse_bool(raw, key)
        else:
            out[key] = str(raw).strip()
    return out


def load_config(path, **defaults) -> StudyConfig:
    """Read a study file; keys it sets win over ``defaults``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text(), **defaults)


def parse_config(text: str, **defaults) -> StudyConfig:
    values = dict(defaults)
    values.update(dotenv_values(stream=io.StringIO(text)))
    return StudyConfig.from_mapping(values)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)


def dump_config(config: StudyConfig) -> str:
    """Canonical ``key = value`` text, one key per line in a fixed order."""
    return "".join(f"{key} = {_format(getattr(config, key))}\n" for key in KEY_ORDER)


def default_threads() -> int:
    raw = os.getenv(THREADS_ENV)
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value
