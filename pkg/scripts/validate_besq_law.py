"""Check the gamma law of the BESQ zero-hitting time against fine EMCEL chains.

A CEV(p) diffusion in natural scale is a power of BESQ(2 - 1/(1-p)), so the
chain absorption time estimates the BESQ hitting time directly. The table
lists the chain cdf, the closed form and the KS noise band.

    python scripts/validate_besq_law.py --n-paths 200000 --h 1e-4
"""

import math
from dataclasses import dataclass, field

import numpy as np

from _common import Timer, dump_config, emit, parse_into
from emcel import cev_to_besq, besq_hit_zero_law, simulate_exit_sample
from emcel.montecarlo import ks_noise
from emcel.scalefactors import cev_emcel


@dataclass
class Config:
    p: list = field(default_factory=lambda: [0.5, 0.25, 0.0, -1.0])
    z0: float = 2.0
    h: float = 1e-4
    n_paths: int = 100_000
    t: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 5.0])
    seed: int = 1
    out: str = ""


def main(cfg: Config):
    dump_config(cfg)
    rows = []
    T = max(cfg.t)
    ts = np.array(cfg.t, dtype=float)
    for p in cfg.p:
        tr = cev_to_besq(p)
        y0 = tr.s(cfg.z0)
        law = besq_hit_zero_law(tr.delta, cfg.z0)
        with Timer() as tm:
            sample = simulate_exit_sample(cev_emcel(p), y0, cfg.h, cfg.n_paths, T, cfg.seed)
        emp = sample.laws()[0].cdf(ts)
        ref = law.cdf(ts)
        for t, e, r in zip(ts, emp, ref):
            rows.append((p, tr.delta, y0, float(t), float(e), float(r), float(e - r),
                         3 * ks_noise(cfg.n_paths), tm.elapsed))
    emit(rows, ("p", "delta", "y0", "t", "F_chain", "F_gamma", "diff", "3_ks_noise", "seconds"), cfg.out or None)
    worst = max(abs(r[6]) for r in rows)
    print(f"# worst |diff| = {worst:.5f}, band {3 * ks_noise(cfg.n_paths):.5f}")
    return 0 if worst <= 3 * ks_noise(cfg.n_paths) + 5 * math.sqrt(cfg.h) else 1


if __name__ == "__main__":
    raise SystemExit(main(parse_into(Config, __doc__.splitlines()[0])))
