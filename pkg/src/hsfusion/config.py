"""Flat key=value run configuration shared by the CLI commands.

Unknown keys are rejected; every value is range-checked against the solver
and degradation invariants. Command-line flags override file values, which
override the defaults below.
"""

from dataclasses import dataclass

from .degradation import NAMED_BAND_TABLES
from .solver import TAU_MODES, SolverConfig


def _parse_int(text):
    return int(text)


def _parse_float(text):
    return float(text)


def _parse_str(text):
    return text


_KEY_PARSERS = {
    "r": _parse_int,
    "gamma": _parse_float,
    "rho0": _parse_float,
    "nu": _parse_float,
    "eps": _parse_float,
    "max_iter": _parse_int,
    "tau_mode": _parse_str,
    "factor": _parse_int,
    "kernel_size": _parse_int,
    "sigma": _parse_float,
    "band_table": _parse_str,
    "seed": _parse_int,
    "peak": _parse_float,
}


@dataclass(frozen=True)
class RunConfig:
    r: int | None = None
    gamma: float = 0.1
    rho0: float = 1e-3
    nu: float = 1.05
    eps: float = 1e-5
    max_iter: int = 500
    tau_mode: str = "safe"
    factor: int = 8
    kernel_size: int = 9
    sigma: float = 3.3973
    band_table: str | None = None
    seed: int = 0
    peak: float | None = None

    def __post_init__(self):
        if self.r is not None and self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if not self.nu > 1:
            raise ValueError(f"nu must exceed 1, got {self.nu}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.tau_mode not in TAU_MODES:
            raise ValueError(f"tau_mode must be one of {TAU_MODES}, got {self.tau_mode!r}")
        if self.factor < 1:
            raise ValueError(f"factor must be >= 1, got {self.factor}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and positive, got {self.kernel_size}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.peak is not None and not self.peak > 0:
            raise ValueError(f"peak must be positive, got {self.peak}")

    def require_r(self):
        if self.r is None:
            raise ValueError("r (subspace dimension) is required; set it via "
                             "--r or a config file")
        return self.r

    def solver_config(self, eps_mode="absolute"):
        return SolverConfig(
            r=self.require_r(),
            gamma=self.gamma,
            rho0=self.rho0,
            nu=self.nu,
            eps=self.eps,
            max_iter=self.max_iter,
            tau_mode=self.tau_mode,
            eps_mode=eps_mode,
        )


def parse_config_text(text, source="<config>"):
    """Parse key=value lines ('#' comments allowed) into a raw value dict."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _KEY_PARSERS:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _KEY_PARSERS[key](val)
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    return values


def load_config_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def build_run_config(file_values=None, overrides=None):
    """Merge defaults <- config file <- explicit overrides into a RunConfig."""
    merged = {}
    for source in (file_values or {}, overrides or {}):
        for key, val in source.items():
            if key not in _KEY_PARSERS:
                raise ValueError(f"unknown config key {key!r}")
            if val is not None:
                merged[key] = val
    return RunConfig(**merged)


def read_band_table(path_or_name):
    """Resolve a band table: a built-in name or a file of 'low high' lines."""
    if path_or_name in NAMED_BAND_TABLES:
        return NAMED_BAND_TABLES[path_or_name]
    bands = []
    with open(path_or_name, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    f"{path_or_name}:{lineno}: expected 'low_nm high_nm', got {raw!r}"
                )
            low, high = float(parts[0]), float(parts[1])
            if not high > low:
                raise ValueError(
                    f"{path_or_name}:{lineno}: band upper bound must exceed lower"
                )
            bands.append((low, high))
    if not bands:
        raise ValueError(f"{path_or_name}: band table is empty")
    return tuple(bands)
