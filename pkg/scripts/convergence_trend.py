"""KS distance of chain absorption times to the exact CEV law as h shrinks.

Prints one row per (scheme, h) and a log-log slope per scheme. No rate is
claimed; the slope is descriptive.

    python scripts/convergence_trend.py --p 0.5 --h 0.1 0.01 0.001 --n-paths 100000
"""

from dataclasses import dataclass, field

import numpy as np

from _common import Timer, dump_config, emit, parse_into
from emcel import WeakEulerCEVScheme, cev_absorption_law, ks_distance_truncated, simulate_exit_sample
from emcel.montecarlo import ks_noise
from emcel.scalefactors import cev_emcel


@dataclass
class Config:
    p: float = 0.5
    y0: float = 1.0
    h: list = field(default_factory=lambda: [0.1, 0.03, 0.01, 0.003, 0.001])
    n_paths: int = 100_000
    horizon: float = 10.0
    schemes: list = field(default_factory=lambda: ["emcel", "weak-euler"])
    seed: int = 20190401
    out: str = ""


def build(name, p):
    if name == "emcel":
        return cev_emcel(p)
    if name == "weak-euler":
        return WeakEulerCEVScheme.for_cev(p)
    raise SystemExit(f"unknown scheme {name!r}")


def main(cfg: Config):
    dump_config(cfg)
    ref = cev_absorption_law(cfg.p, cfg.y0)
    rows = []
    for name in cfg.schemes:
        scheme = build(name, cfg.p)
        ks = []
        for h in cfg.h:
            with Timer() as tm:
                sample = simulate_exit_sample(scheme, cfg.y0, h, cfg.n_paths, cfg.horizon, cfg.seed)
            d = ks_distance_truncated(sample.laws()[0], ref, cfg.horizon)
            ks.append(d)
            rows.append((name, h, d, ks_noise(cfg.n_paths), tm.elapsed))
        if len(cfg.h) > 1:
            slope = np.polyfit(np.log(cfg.h), np.log(ks), 1)[0]
            print(f"# {name}: log-log slope {slope:.3f}")
    emit(rows, ("scheme", "h", "ks", "ks_noise", "seconds"), cfg.out or None)
    return 0


if __name__ == "__main__":
    raise SystemExit(main(parse_into(Config, __doc__.splitlines()[0])))
