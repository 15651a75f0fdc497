"""Sampled verdicts of Conditions A, B and D for a family of schemes.

    python scripts/condition_table.py --h 0.1 0.01 0.001 0.0001 --grid 400
"""

import math
from dataclasses import dataclass, field

from _common import dump_config, emit, parse_into
from emcel import (
    CustomScheme,
    WeakEulerCEVScheme,
    brownian_speed_measure,
    check_condition_A,
    check_condition_B,
    check_condition_D,
)
from emcel.scalefactors import cev_emcel, cev_truncated


@dataclass
class Config:
    h: list = field(default_factory=lambda: [0.1, 0.01, 0.001, 1e-4, 1e-5])
    grid: int = 200
    K: list = field(default_factory=lambda: [0.5, 2.0])
    out: str = ""


def schemes():
    yield "emcel p=1/2", cev_emcel(0.5)
    yield "emcel p=1/4", cev_emcel(0.25)
    yield "emcel p=-1", cev_emcel(-1.0)
    yield "weak euler p=1/2", WeakEulerCEVScheme.for_cev(0.5)
    yield "weak euler p=1/4", WeakEulerCEVScheme.for_cev(0.25)
    yield "truncated p=1/2", cev_truncated(0.5)
    yield "sqrt(h) walk", CustomScheme(brownian_speed_measure(), fn=lambda h, y: math.sqrt(h))


def main(cfg: Config):
    dump_config(cfg)
    K = tuple(cfg.K)
    rows = []
    for name, s in schemes():
        a = check_condition_A(s, K, cfg.h, cfg.grid)
        b = check_condition_B(s, K, cfg.h, cfg.grid)
        d = check_condition_D(s, cfg.h, cfg.grid)
        last = d.rows[-1]
        rows.append((name, a.verdicts["A"], b.verdicts["B(i)"], b.verdicts["B(ii)"], d.verdicts["D"],
                     b.rows[-1].alpha_ratio, b.fitted.get("B", math.nan), b.fitted.get("gamma", math.nan),
                     d.deviation_sup(last) / last.h))
    emit(rows, ("scheme", "A", "B(i)", "B(ii)", "D", "inf_ratio", "B", "gamma", "dev_over_h"), cfg.out or None)
    return 0


if __name__ == "__main__":
    raise SystemExit(main(parse_into(Config, __doc__.splitlines()[0])))
