"""Exit of Brownian motion (plain or with a sticky point) from an interval.

For the plain case the exit side, mean exit time and KS distance are checked
against the eigenfunction series. With ``--stick`` > 0 the speed measure gets
an atom of that mass at the midpoint. The exit side law does not change, and
the mean exit time grows by the atom mass times the Green function at the
midpoint. Only side and mean are compared in that case.

    python scripts/brownian_exit.py --a 0 --b 2 --y0 1 --h 0.001
"""

import math
from dataclasses import dataclass

import numpy as np

from _common import Timer, dump_config, emit, parse_into
from emcel import (
    EMCELScheme,
    EmpiricalLaw,
    bm_exit_interval_law,
    brownian_speed_measure,
    ks_distance_truncated,
    simulate_exit_sample,
    sticky_brownian_speed_measure,
)


@dataclass
class Config:
    a: float = 0.0
    b: float = 2.0
    y0: float = 1.0
    h: float = 1e-3
    n_paths: int = 100_000
    horizon: float = 20.0
    stick: float = 0.0
    seed: int = 20190404
    out: str = ""


def main(cfg: Config):
    dump_config(cfg)
    if cfg.stick > 0:
        m = sticky_brownian_speed_measure([(0.5 * (cfg.a + cfg.b), cfg.stick)], cfg.a, cfg.b)
    else:
        m = brownian_speed_measure(cfg.a, cfg.b)
    with Timer() as tm:
        sample = simulate_exit_sample(EMCELScheme(m), cfg.y0, cfg.h, cfg.n_paths, cfg.horizon, cfg.seed)
    times = sample.exit_times()
    fin = times[np.isfinite(times)]
    p_low = float(np.mean(np.isfinite(sample.lower)))
    ex = bm_exit_interval_law(cfg.y0, cfg.a, cfg.b)
    # expected exit time is the Green integral: int G(y0, u) m(du) with G the interval Green function
    L = cfg.b - cfg.a
    mean_ref = (cfg.y0 - cfg.a) * (cfg.b - cfg.y0)
    if cfg.stick > 0:
        c = 0.5 * (cfg.a + cfg.b)
        lo, hi = min(cfg.y0, c), max(cfg.y0, c)
        mean_ref += cfg.stick * (lo - cfg.a) * (cfg.b - hi) / L
    rows = [
        ("p_lower", p_low, ex.p_lower, 3 * math.sqrt(ex.p_lower * (1 - ex.p_lower) / cfg.n_paths)),
        ("mean_exit", float(fin.mean()), mean_ref, 3 * float(fin.std(ddof=1)) / math.sqrt(fin.size)),
        ("censored", float(np.isnan(times).sum()), 0.0, 0.0),
    ]
    if cfg.stick == 0:
        ks = ks_distance_truncated(EmpiricalLaw.from_array(times, sample.horizon), ex.law, cfg.horizon)
        rows.append(("ks", ks, 0.0, math.nan))
    rows.append(("seconds", tm.elapsed, math.nan, math.nan))
    emit(rows, ("quantity", "chain", "reference", "3_se"), cfg.out or None)
    return 0


if __name__ == "__main__":
    raise SystemExit(main(parse_into(Config, __doc__.splitlines()[0])))
