"""Flat ``key = value`` run configuration with one section per subcommand.

Example::

    # keys before any section apply to every subcommand
    n = 64
    [dn-verify]
    study = expansion
    epsilons = 0.1, 0.05, 0.025, 0.0125
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

SUBCOMMANDS = ("dn-verify", "symmetry-solve", "simulate", "consistency", "compare")
STUDIES = {
    "dn-verify": ("expansion", "flat-oracle", "coercivity", "wkb"),
    "symmetry-solve": ("root", "identities", "positivity", "spectrum"),
    "simulate": ("run",),
    "consistency": ("residual", "roundtrip"),
    "compare": ("error",),
}
BATHYMETRIES = ("flat", "cosine", "bump", "file")
MODEL_NAMES = ("b1", "b2", "s1", "t1", "tb", "s_strong")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key, self.line, self.message = key, line, message
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _words(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _opt_float(text: str):
    return None if text.strip() == "auto" else float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str = "dn-verify"
    study: str = "auto"
    # grid
    d: int = 1
    n: int = 64
    length: float = 2 * math.pi
    nz: int = 48
    # physics
    regime: str = "small"
    regimes: tuple[str, ...] = ("small",)
    epsilon: float = 0.1
    epsilons: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    h_min: float = 0.05
    # bathymetry
    bathymetry: str = "flat"
    bath_amplitude: float = 0.0
    bath_wavenumber: int = 1
    bath_center: float = math.pi
    bath_width: float = 0.5
    bath_height: float = 0.0
    bath_file: str = ""
    long_horizon: bool = False
    long_bath_amplitude: float = 3.0
    # initial data / Dirichlet datum: amplitudes of modes 1, 2, ...
    eta0_cos: tuple[float, ...] = ()
    eta0_sin: tuple[float, ...] = ()
    psi0_cos: tuple[float, ...] = (1.0,)
    psi0_sin: tuple[float, ...] = ()
    # models
    model: str = "t1"
    targets: tuple[str, ...] = ("b1", "s1")
    theta: float | None = None
    lam: float | None = None
    mu: float | None = None
    lam1: float | None = None
    lam2: float | None = None
    guess: tuple[float, ...] = (0.6, -0.3, -2.8, -3.1)
    # time
    horizon: float = 1.0
    dt: float | None = None
    n_snapshots: int = 10
    # studies
    order: int = 2
    modes: tuple[int, ...] = (1, 2, 4)
    samples: int = 10_000
    factors: tuple[float, ...] = (0.5, 10.0)
    seed: int = 0
    out: str = "out"

    def default_study(self) -> str:
        return STUDIES[self.subcommand][0] if self.study == "auto" else self.study


def _parser_for(name: str):
    f = {f.name: f for f in fields(RunConfig)}[name]
    t = f.type if isinstance(f.type, str) else f.type.__name__
    if t.startswith("tuple[float"):
        return _floats
    if t.startswith("tuple[int"):
        return _ints
    if t.startswith("tuple[str"):
        return _words
    if "None" in t:
        return _opt_float
    return {"int": int, "float": float, "str": lambda s: s.strip(), "bool": _bool}[t]


_KEYS = {f.name for f in fields(RunConfig)} - {"subcommand"}


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str, subcommand: str | None = None) -> RunConfig:
    """Parse and validate a configuration.

    Keys before the first ``[section]`` are shared. With ``subcommand`` given,
    that section is used; otherwise the file must hold exactly one section.
    """
    shared: dict[str, tuple[str, int]] = {}
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = shared
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", line=lineno)
            name = line[1:-1].strip()
            if name not in SUBCOMMANDS:
                raise ConfigError(f"unknown section {name!r}", line=lineno)
            if name in sections:
                raise ConfigError(f"duplicate section {name!r}", line=lineno)
            current = sections[name] = {}
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in current:
            raise ConfigError("duplicate key", key=key, line=lineno)
        current[key] = (value, lineno)
    if subcommand is None:
        if len(sections) != 1:
            raise ConfigError("config must contain exactly one [subcommand] section")
        subcommand = next(iter(sections))
    elif subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    merged = dict(shared)
    merged.update(sections.get(subcommand, {}))
    values = {"subcommand": subcommand}
    for key, (value, lineno) in merged.items():
        try:
            values[key] = _parser_for(key)(value)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r}: {exc}", key=key, line=lineno) from None
    cfg = RunConfig(**values)
    try:
        validate(cfg)
    except ConfigError as exc:
        if exc.key in merged and exc.line is None:
            raise ConfigError(exc.message, key=exc.key, line=merged[exc.key][1]) from None
        raise
    return cfg


def emit_config(cfg: RunConfig) -> str:
    lines = [f"[{cfg.subcommand}]"]
    for f in fields(cfg):
        if f.name == "subcommand":
            continue
        lines.append(f"{f.name} = {_format(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def validate(cfg: RunConfig) -> None:
    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {cfg.subcommand!r}", key="subcommand")
    if cfg.study != "auto" and cfg.study not in STUDIES[cfg.subcommand]:
        raise ConfigError(f"expected one of {STUDIES[cfg.subcommand]}", key="study")
    if cfg.d not in (1, 2):
        raise ConfigError("must be 1 or 2", key="d")
    if cfg.n < 8 or cfg.n & (cfg.n - 1):
        raise ConfigError("must be a power of two >= 8", key="n")
    if not cfg.length > 0:
        raise ConfigError("must be positive", key="length")
    if cfg.nz < 8:
        raise ConfigError("must be >= 8", key="nz")
    for key in ("regime",):
        if getattr(cfg, key) not in ("small", "strong"):
            raise ConfigError("expected small or strong", key=key)
    if not cfg.regimes or any(r not in ("small", "strong") for r in cfg.regimes):
        raise ConfigError("expected a list of small/strong", key="regimes")
    if not 0 < cfg.epsilon < 1:
        raise ConfigError(f"{cfg.epsilon} outside (0, 1)", key="epsilon")
    if not cfg.epsilons or any(not 0 < e < 1 for e in cfg.epsilons):
        raise ConfigError("values must lie in (0, 1)", key="epsilons")
    if not cfg.h_min > 0:
        raise ConfigError("must be positive", key="h_min")
    if cfg.bathymetry not in BATHYMETRIES:
        raise ConfigError(f"expected one of {BATHYMETRIES}", key="bathymetry")
    if cfg.bathymetry == "file" and not cfg.bath_file:
        raise ConfigError("bathymetry = file needs a path", key="bath_file")
    if cfg.bath_width <= 0:
        raise ConfigError("must be positive", key="bath_width")
    if cfg.model not in MODEL_NAMES:
        raise ConfigError(f"expected one of {MODEL_NAMES}", key="model")
    if any(t not in MODEL_NAMES for t in cfg.targets):
        raise ConfigError(f"expected models from {MODEL_NAMES}", key="targets")
    if cfg.theta is not None and not 0 <= cfg.theta <= 1:
        raise ConfigError("must lie in [0, 1]", key="theta")
    if len(cfg.guess) != 4:
        raise ConfigError("expected theta, lam1, lam2, mu", key="guess")
    if not cfg.horizon > 0:
        raise ConfigError("must be positive", key="horizon")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError("must be positive", key="dt")
    if cfg.n_snapshots < 1:
        raise ConfigError("must be >= 1", key="n_snapshots")
    if cfg.order not in (1, 2):
        raise ConfigError("must be 1 or 2", key="order")
    if cfg.samples < 1:
        raise ConfigError("must be >= 1", key="samples")
    if cfg.bathymetry != "file":
        _check_depth(cfg)


def _check_depth(cfg: RunConfig):
    x = np.arange(cfg.n) * cfg.length / cfg.n
    b = analytic_bathymetry(cfg, x)
    eps_max = max((cfg.epsilon,) + tuple(cfg.epsilons))
    for regime in set(cfg.regimes) | {cfg.regime}:
        depth = 1 - (eps_max * b if regime == "small" else b)
        if depth.min() < cfg.h_min:
            raise ConfigError(
                f"still water depth {depth.min():.4g} below h_min={cfg.h_min} ({regime} regime)",
                key="bath_amplitude" if cfg.bathymetry == "cosine" else "bath_height",
            )


def analytic_bathymetry(cfg: RunConfig, x: np.ndarray) -> np.ndarray:
    """Bottom profile of the named analytic shapes on 1D coordinates ``x``."""
    if cfg.bathymetry == "flat":
        return np.zeros_like(x)
    if cfg.bathymetry == "cosine":
        return cfg.bath_amplitude * np.cos(cfg.bath_wavenumber * 2 * np.pi / cfg.length * x)
    if cfg.bathymetry == "bump":
        dist = (x - cfg.bath_center + cfg.length / 2) % cfg.length - cfg.length / 2
        return cfg.bath_height * np.exp(-((dist / cfg.bath_width) ** 2))
    raise ConfigError("no analytic form", key="bathymetry")


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    new = replace(cfg, **kw)
    validate(new)
    return new
