"""Experiment configuration: dataclasses, loading and object construction.

A config is a YAML (or JSON) mapping::

    diffusion:                 # built-in measure or a tabulated density
      kind: cev                # brownian | cev | cev-extended | sticky-brownian | tabulated
      p: 0.5
    scheme:
      kind: emcel              # emcel | weak-euler | truncated-emcel | custom
    h: [0.1, 0.01, 0.001]
    y0: 1.0
    n_paths: 10000
    horizon_T: 10.0
    base_seed: 20190401        # required, no implicit randomness
    reference:                 # optional: cev-absorption | besq-hit-zero | bm-exit
      kind: cev-absorption
    K: [0.5, 2.0]              # optional compact for the condition audits

See README.md for every key.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError, DomainError
from .measure import (
    SpeedMeasure,
    brownian_speed_measure,
    cev_speed_measure,
    sticky_brownian_speed_measure,
    tabulated_speed_measure,
)
from .reference import bm_exit_interval_law, besq_hit_zero_law, cev_absorption_law
from .scalefactors import (
    CustomScheme,
    EMCELScheme,
    ScaleFactorScheme,
    TruncatedEMCELScheme,
    WeakEulerCEVScheme,
)

DIFFUSIONS = ("brownian", "cev", "cev-extended", "sticky-brownian", "tabulated")
SCHEMES = ("emcel", "weak-euler", "truncated-emcel", "custom")
REFERENCES = ("cev-absorption", "besq-hit-zero", "bm-exit")


def _num(v):
    # YAML has no literal for infinity in flow style that everyone writes the same way
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity", ".inf"):
        return math.inf
    if isinstance(v, str) and v.strip().lower() in ("-inf", "-infinity", "-.inf"):
        return -math.inf
    return float(v)


@dataclass
class DiffusionConfig:
    kind: str = "cev"
    params: dict = field(default_factory=dict)


@dataclass
class SchemeConfig:
    kind: str = "emcel"
    params: dict = field(default_factory=dict)


@dataclass
class ReferenceConfig:
    kind: str = "cev-absorption"
    params: dict = field(default_factory=dict)


@dataclass
class TrendConfig:
    zero_tol: float = 1e-5
    shrink: float = 0.5
    final_max: float = 0.1
    monotone_tol: float = 0.1


@dataclass
class ExperimentConfig:
    diffusion: DiffusionConfig
    scheme: SchemeConfig
    h: list[float]
    y0: float
    n_paths: int
    horizon_T: float
    base_seed: int
    output_dir: Optional[str] = None
    reference: Optional[ReferenceConfig] = None
    K: Optional[list[float]] = None
    grid_size: int = 100
    max_steps: int = 100_000_000
    bootstrap: int = 0
    dump_paths: int = 1
    law_grid: Optional[list[float]] = None
    trend: TrendConfig = field(default_factory=TrendConfig)

    def to_dict(self) -> dict:
        return _jsonable(dataclasses.asdict(self))

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def t_grid(self) -> np.ndarray:
        if self.law_grid is not None:
            return np.asarray(self.law_grid, dtype=float)
        return self.horizon_T * np.arange(1, 101) / 100.0


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _require(d: dict, key: str):
    if key not in d or d[key] is None:
        raise ConfigError(f"missing required field '{key}'", field=key)
    return d[key]


def _section(d, key, cls, kinds):
    raw = d.get(key)
    if raw is None:
        return None
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"'{key}' must be a mapping with a 'kind'", field=key)
    kind = raw["kind"]
    if kind not in kinds:
        raise ConfigError(f"unknown {key} kind {kind!r}; expected one of {', '.join(kinds)}", field=f"{key}.kind")
    params = {k: v for k, v in raw.items() if k not in ("kind", "params")}
    params.update(raw.get("params") or {})
    return cls(kind=kind, params=params)


def from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a mapping")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}", field=unknown[0])
    diffusion = _section(d, "diffusion", DiffusionConfig, DIFFUSIONS)
    if diffusion is None:
        raise ConfigError("missing required field 'diffusion'", field="diffusion")
    scheme = _section(d, "scheme", SchemeConfig, SCHEMES) or SchemeConfig()
    reference = _section(d, "reference", ReferenceConfig, REFERENCES)
    h = _require(d, "h")
    h = [float(v) for v in (h if isinstance(h, list) else [h])]
    seed = _require(d, "base_seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("base_seed must be an integer in [0, 2^64)", field="base_seed")
    try:
        trend = TrendConfig(**(d.get("trend") or {}))
        cfg = ExperimentConfig(
            diffusion=diffusion,
            scheme=scheme,
            h=h,
            y0=float(_require(d, "y0")),
            n_paths=int(_require(d, "n_paths")),
            horizon_T=float(_require(d, "horizon_T")),
            base_seed=seed,
            output_dir=d.get("output_dir"),
            reference=reference,
            K=[float(v) for v in d["K"]] if d.get("K") is not None else None,
            grid_size=int(d.get("grid_size", 100)),
            max_steps=int(d.get("max_steps", 100_000_000)),
            bootstrap=int(d.get("bootstrap", 0)),
            dump_paths=int(d.get("dump_paths", 1)),
            law_grid=[float(v) for v in d["law_grid"]] if d.get("law_grid") is not None else None,
            trend=trend,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed config value: {exc}") from exc
    validate(cfg)
    return cfg


def load(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        d = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return from_dict(d)


def validate(cfg: ExperimentConfig) -> None:
    """Check every precondition by building the objects the config describes."""
    if not cfg.h or any(not (v > 0.0) for v in cfg.h):
        raise ConfigError("h values must be positive", field="h")
    if cfg.n_paths < 1:
        raise ConfigError("n_paths must be at least 1", field="n_paths")
    if not cfg.horizon_T > 0.0:
        raise ConfigError("horizon_T must be positive", field="horizon_T")
    if cfg.grid_size < 2:
        raise ConfigError("grid_size must be at least 2", field="grid_size")
    if cfg.K is not None and len(cfg.K) != 2:
        raise ConfigError("K must be a pair [lo, hi]", field="K")
    scheme = build_scheme(cfg)
    for v in cfg.h:
        try:
            scheme.check_h(v)
        except DomainError as exc:
            raise ConfigError(str(exc), field="h") from exc
    if not scheme.space.in_interior(cfg.y0):
        raise ConfigError(f"y0={cfg.y0} is not in the interior of the state space", field="y0")
    if cfg.reference is not None:
        build_reference(cfg)


def build_measure(cfg: ExperimentConfig) -> SpeedMeasure:
    d = cfg.diffusion
    p = dict(d.params)
    try:
        if d.kind == "brownian":
            return brownian_speed_measure(_num(p.get("l", -math.inf)), _num(p.get("r", math.inf)), float(p.get("sigma", 1.0)))
        if d.kind == "sticky-brownian":
            atoms = [tuple(map(float, a)) for a in _require(p, "atoms")]
            return sticky_brownian_speed_measure(
                atoms, _num(p.get("l", -math.inf)), _num(p.get("r", math.inf)), float(p.get("sigma", 1.0))
            )
        if d.kind in ("cev", "cev-extended"):
            return cev_speed_measure(float(_require(p, "p")), extended=d.kind == "cev-extended")
        if d.kind == "tabulated":
            return tabulated_speed_measure(
                _require(p, "x"),
                _require(p, "values"),
                atoms=[tuple(map(float, a)) for a in p.get("atoms", [])],
                l=_num(p.get("l", -math.inf)),
                r=_num(p.get("r", math.inf)),
                include_l=p.get("include_l"),
                include_r=p.get("include_r"),
            )
    except ConfigError as exc:
        exc.field = f"diffusion.{exc.field}"
        raise
    except DomainError as exc:
        raise ConfigError(str(exc), field="diffusion") from exc
    raise ConfigError(f"unknown diffusion kind {d.kind!r}", field="diffusion.kind")


def _custom_fn(p: dict):
    form = p.get("form", "sqrt_h")
    if form == "zero":

        def fn(h, y):
            return np.zeros(np.shape(y))

    elif form == "sqrt_h":
        c = float(p.get("c", 1.0))

        def fn(h, y):
            return np.full(np.shape(y), c * math.sqrt(h))

    elif form == "table":
        xs = np.asarray(_require(p, "y"), dtype=float)
        vs = np.asarray(_require(p, "a_over_sqrt_h"), dtype=float)
        if xs.shape != vs.shape or xs.ndim != 1 or np.any(np.diff(xs) <= 0) or np.any(vs < 0):
            raise ConfigError("custom table needs increasing 'y' and nonnegative 'a_over_sqrt_h'", field="scheme.y")

        def fn(h, y):
            return math.sqrt(h) * np.interp(y, xs, vs)

    else:
        raise ConfigError(f"unknown custom scheme form {form!r}", field="scheme.form")
    return fn


def build_scheme(cfg: ExperimentConfig, measure: Optional[SpeedMeasure] = None) -> ScaleFactorScheme:
    m = measure if measure is not None else build_measure(cfg)
    s = cfg.scheme
    p = dict(s.params)
    h_max = float(p.pop("h_max", 1.0))
    try:
        if s.kind == "emcel":
            return EMCELScheme(m, h_max=h_max)
        if s.kind == "weak-euler":
            if not m.family or m.family[0] != "cev":
                raise ConfigError("weak-euler needs a cev diffusion", field="scheme.kind")
            return WeakEulerCEVScheme(m, h_max=h_max, p=m.family[1])
        if s.kind == "truncated-emcel":
            return TruncatedEMCELScheme(m, h_max=h_max, factor=float(p.get("truncation_factor", 2.0)))
        if s.kind == "custom":
            return CustomScheme(m, h_max=h_max, fn=_custom_fn(p))
    except DomainError as exc:
        raise ConfigError(str(exc), field="scheme") from exc
    raise ConfigError(f"unknown scheme kind {s.kind!r}", field="scheme.kind")


def build_reference(cfg: ExperimentConfig):
    """``(law, p_lower)``; ``p_lower`` is ``None`` for one-sided laws."""
    r = cfg.reference
    if r is None:
        raise ConfigError("this subcommand needs a 'reference' section", field="reference")
    p = dict(r.params)
    try:
        if r.kind == "cev-absorption":
            pp = p.get("p")
            if pp is None:
                fam = build_measure(cfg).family
                if not fam or fam[0] != "cev":
                    raise ConfigError("cev-absorption needs 'p' or a cev diffusion", field="reference.p")
                pp = fam[1]
            return cev_absorption_law(float(pp), float(p.get("y0", cfg.y0))), None
        if r.kind == "besq-hit-zero":
            return besq_hit_zero_law(float(_require(p, "delta")), float(_require(p, "z0"))), None
        if r.kind == "bm-exit":
            sp = build_measure(cfg).space
            a = float(p.get("a", sp.l))
            b = float(p.get("b", sp.r))
            ex = bm_exit_interval_law(float(p.get("y0", cfg.y0)), a, b)
            return ex.law, ex.p_lower
    except ConfigError as exc:
        if exc.field and not exc.field.startswith("reference"):
            exc.field = f"reference.{exc.field}"
        raise
    except DomainError as exc:
        raise ConfigError(str(exc), field="reference") from exc
    raise ConfigError(f"unknown reference kind {r.kind!r}", field="reference.kind")


__all__ = [
    "DiffusionConfig",
    "ExperimentConfig",
    "ReferenceConfig",
    "SchemeConfig",
    "TrendConfig",
    "build_measure",
    "build_reference",
    "build_scheme",
    "from_dict",
    "load",
    "validate",
]
