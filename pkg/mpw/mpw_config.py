import dataclasses
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ParameterError, UsageError

logger = logging.getLogger(__name__)

SOLVER_PATHS = ("full", "column", "collective")
REORTHOGONALIZATION_MODES = ("full", "none")
MAX_DENSE_DIMENSION = 20_000


@dataclass(frozen=True)
class SystemParams:
    n_f: int
    n_b: int
    eps_f: float = 1.0
    eps_b: float = 1.0
    v_f: float = 0.0
    v_b: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        # frozen, so coercion goes through object.__setattr__
        for name in ("n_f", "n_b"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ParameterError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise ParameterError(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, int(value))
        if self.n_f == 0 and self.n_b == 0:
            raise ParameterError("at least one sector must hold particles (n_f = n_b = 0)")
        for name in ("eps_f", "eps_b", "v_f", "v_b", "mu"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.mu != 0.0 and self.n_f != self.n_b:
            raise ParameterError(
                f"the cross-sector exchange needs n_f == n_b when mu != 0, got n_f={self.n_f}, n_b={self.n_b}"
            )

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def n_particles(self, sector) -> int:
        return self.n_f if str(getattr(sector, "value", sector)) == "fermion" else self.n_b


@dataclass(frozen=True)
class SolveOptions:
    solver: str = "column"
    tolerance: float = 1e-10
    max_iterations: int = 500
    reorthogonalization: str = "full"
    seed: int = 1234
    dense_threshold: int = MAX_DENSE_DIMENSION
    krylov_size: int = 120
    memory_budget: int = 4 * 1024**3  # bytes
    use_tqdm: bool = False

    def __post_init__(self):
        if self.solver not in SOLVER_PATHS:
            raise ParameterError(f"solver must be one of {SOLVER_PATHS}, got {self.solver!r}")
        if self.reorthogonalization not in REORTHOGONALIZATION_MODES:
            raise ParameterError(
                f"reorthogonalization must be one of {REORTHOGONALIZATION_MODES}, got {self.reorthogonalization!r}"
            )
        if not self.tolerance > 0:
            raise ParameterError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.krylov_size < 2:
            raise ParameterError(f"krylov_size must be >= 2, got {self.krylov_size}")
        if self.dense_threshold > MAX_DENSE_DIMENSION:
            logger.warning(
                f"dense_threshold={self.dense_threshold} exceeds {MAX_DENSE_DIMENSION}; clamping to {MAX_DENSE_DIMENSION}."
            )
            object.__setattr__(self, "dense_threshold", MAX_DENSE_DIMENSION)

    def replace(self, **changes) -> "SolveOptions":
        return dataclasses.replace(self, **changes)


# flag spellings accepted besides the dataclass field names
CONFIG_ALIASES = {
    "nf": "n_f",
    "nb": "n_b",
    "vf": "v_f",
    "vb": "v_b",
    "tol": "tolerance",
    "max_iter": "max_iterations",
    "reorth": "reorthogonalization",
}
REQUIRED_KEYS = ("n_f", "n_b")


def _field_types(cls) -> dict:
    return {f.name: f.type for f in fields(cls)}


PARAM_FIELDS = _field_types(SystemParams)
OPTION_FIELDS = _field_types(SolveOptions)


def canonical_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    return CONFIG_ALIASES.get(key, key)


def _convert(key: str, raw, kind):
    kind = kind if isinstance(kind, str) else kind.__name__
    try:
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if kind == "float":
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for {key}: {raw!r}") from None


def parse_config_file(path) -> dict:
    """Read a ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        values[canonical_key(key)] = value.strip()
    return values


@dataclass
class RunConfig:
    params: SystemParams
    options: SolveOptions = field(default_factory=SolveOptions)
    preset: str = None

    @classmethod
    def from_sources(cls, config_path=None, overrides: dict = None, preset: str = None) -> "RunConfig":
        """Merge defaults < preset < config file < flag overrides."""
        merged = {}
        if preset:
            from .presets import get_preset

            merged.update(dataclasses.asdict(get_preset(preset).base))
        if config_path is not None:
            merged.update(parse_config_file(config_path))
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[canonical_key(key)] = value

        unknown = sorted(set(merged) - set(PARAM_FIELDS) - set(OPTION_FIELDS))
        if unknown:
            raise UsageError(f"unknown configuration key(s): {', '.join(unknown)}")
        missing = [key for key in REQUIRED_KEYS if key not in merged]
        if missing:
            raise UsageError(f"missing required configuration key(s): {', '.join(missing)}")

        param_kwargs = {k: _convert(k, v, PARAM_FIELDS[k]) for k, v in merged.items() if k in PARAM_FIELDS}
        option_kwargs = {k: _convert(k, v, OPTION_FIELDS[k]) for k, v in merged.items() if k in OPTION_FIELDS}
        try:
            return cls(SystemParams(**param_kwargs), SolveOptions(**option_kwargs), preset=preset)
        except ParameterError as exc:
            raise UsageError(str(exc)) from exc

    def to_lines(self) -> list:
        lines = []
        if self.preset:
            lines.append(f"# preset: {self.preset}")
        for name in PARAM_FIELDS:
            lines.append(f"{name} = {getattr(self.params, name)}")
        for name in OPTION_FIELDS:
            lines.append(f"{name} = {getattr(self.options, name)}")
        return lines
