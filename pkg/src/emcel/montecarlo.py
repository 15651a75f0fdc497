"""Monte Carlo estimates of exit-time laws and path functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels, _rng
from .chain import (
    DEFAULT_MAX_STEPS,
    INFINITE,
    ExtendedTime,
    boundary_times,
    n_steps_for,
    simulate_chain,
)
from .errors import DomainError
from .reference import ReferenceLaw
from .scalefactors import ScaleFactorScheme

# asymptotic 95% quantile of the Kolmogorov distribution
KS_95 = 1.358


def ks_noise(n: int) -> float:
    """Typical KS fluctuation ``1.358 / sqrt(n)`` of an n-sample empirical cdf."""
    return KS_95 / math.sqrt(n)


@dataclass(frozen=True, eq=False)
class EmpiricalLaw:
    """Sample of times on ``[0, inf]`` with right-censoring at ``horizon``."""

    times: np.ndarray
    n_infinite: int
    n_censored: int
    horizon: float
    n_total: int

    def __post_init__(self):
        if self.n_total != self.times.size + self.n_infinite + self.n_censored:
            raise DomainError("sample counts do not add up")

    @classmethod
    def from_array(cls, t: np.ndarray, horizon: float) -> "EmpiricalLaw":
        """``nan`` marks censored observations, ``inf`` never-hit ones."""
        t = np.asarray(t, dtype=float)
        cens = np.isnan(t)
        inf = np.isposinf(t)
        fin = np.sort(t[~cens & ~inf])
        return cls(fin, int(inf.sum()), int(cens.sum()), float(horizon), int(t.size))

    @property
    def n_finite(self) -> int:
        return self.times.size

    def cdf(self, t):
        """``P(H <= t)``; censored and infinite mass never enters."""
        t = np.asarray(t, dtype=float)
        out = np.searchsorted(self.times, t, side="right") / self.n_total
        return out if out.ndim else float(out)

    def cdf_left(self, t):
        t = np.asarray(t, dtype=float)
        out = np.searchsorted(self.times, t, side="left") / self.n_total
        return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class ExitSample:
    """Per-path batch results; ``lower``/``upper`` use ``nan`` for censored times."""

    lower: np.ndarray
    upper: np.ndarray
    final: np.ndarray
    status: np.ndarray
    h: float
    horizon: float

    def laws(self) -> tuple[EmpiricalLaw, EmpiricalLaw]:
        return (
            EmpiricalLaw.from_array(self.lower, self.horizon),
            EmpiricalLaw.from_array(self.upper, self.horizon),
        )

    def exit_times(self) -> np.ndarray:
        """``H_l ^ H_r`` per path (``nan`` when censored)."""
        return np.fmin(self.lower, self.upper)


def simulate_exit_sample(
    scheme: ScaleFactorScheme,
    y0: float,
    h: float,
    n_paths: int,
    horizon_T: float,
    base_seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> ExitSample:
    if n_paths < 1:
        raise DomainError(f"n_paths must be at least 1, got {n_paths}")
    scheme.space.require_interior(y0, "y0")
    scheme.check_h(h)
    n = n_steps_for(horizon_T, h)
    if n > max_steps:
        raise DomainError(f"{n} steps exceed max_steps={max_steps}")
    seeds = _rng.derive_seeds(base_seed, n_paths)
    status, steps, final = _kernels.simulate_batch(scheme, y0, h, n, seeds)
    lower, upper = boundary_times(status, steps, h, horizon_T)
    return ExitSample(lower, upper, final, status, h, n * h)


def estimate_exit_law(
    scheme: ScaleFactorScheme,
    y0: float,
    h: float,
    n_paths: int,
    horizon_T: float,
    base_seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[EmpiricalLaw, EmpiricalLaw]:
    """Empirical laws of ``H_l`` and ``H_r`` over ``n_paths`` chains."""
    return simulate_exit_sample(scheme, y0, h, n_paths, horizon_T, base_seed, max_steps).laws()


def ks_distance_truncated(emp: EmpiricalLaw, ref: ReferenceLaw, T: float) -> float:
    """``sup_{t in [0, T]} |F_emp(t) - F_ref(t)|``.

    The reference cdf may jump at zero but must be continuous on ``(0, T]``.
    """
    if T > emp.horizon * (1.0 + 1e-12):
        raise DomainError(f"T={T} exceeds the simulated horizon {emp.horizon}")
    jumps = emp.times[(emp.times > 0.0) & (emp.times <= T)]
    pts = np.concatenate([[0.0], jumps, [T]])
    ref_vals = np.asarray(ref.cdf(pts), dtype=float)
    right = np.abs(np.asarray(emp.cdf(pts)) - ref_vals)
    # left limits at the jumps; zero has no left neighbour inside [0, T]
    left = np.abs(np.asarray(emp.cdf_left(jumps)) - ref_vals[1:-1])
    return float(max(right.max(), left.max(initial=0.0)))


def _boot_se(values: np.ndarray, n_boot: int, seed: int) -> float:
    rng = np.random.Generator(np.random.PCG64(seed))
    n = values.size
    means = np.array([values[rng.integers(0, n, n)].mean() for _ in range(n_boot)])
    return float(means.std(ddof=1))


def expected_functional(
    scheme: ScaleFactorScheme,
    y0: float,
    h: float,
    n_paths: int,
    F: Callable,
    horizon_T: float,
    base_seed: int,
    needs_path: bool = False,
    bootstrap: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[float, float]:
    """Mean and standard error of ``F(H_l, H_r, path)`` over simulated chains.

    ``H_l``, ``H_r`` are :class:`ExtendedTime` values (censored at the horizon
    when the chain is still running). ``path`` is a :class:`ChainPath` if
    ``needs_path`` is set and ``None`` otherwise; path mode simulates chains one
    by one with the same seeds as the batch engine. ``bootstrap > 0`` replaces
    the plug-in standard error by a bootstrap estimate with that many resamples.
    """
    if n_paths < 2:
        raise DomainError(f"n_paths must be at least 2, got {n_paths}")
    vals = np.empty(n_paths)
    if needs_path:
        seeds = _rng.derive_seeds(base_seed, n_paths)
        for i in range(n_paths):
            path = simulate_chain(scheme, y0, h, horizon_T, int(seeds[i]), max_steps)
            hl, hr = path.exit_times()
            vals[i] = F(hl, hr, path)
    else:
        sample = simulate_exit_sample(scheme, y0, h, n_paths, horizon_T, base_seed, max_steps)
        for i in range(n_paths):
            vals[i] = F(_ext(sample.lower[i], sample.horizon), _ext(sample.upper[i], sample.horizon), None)
    mean = float(np.mean(vals))
    if bootstrap > 0:
        return mean, _boot_se(vals, bootstrap, base_seed)
    return mean, float(np.std(vals, ddof=1) / math.sqrt(n_paths))


def _ext(t: float, horizon: float) -> ExtendedTime:
    if math.isnan(t):
        return ExtendedTime(horizon, censored=True)
    if math.isinf(t):
        return INFINITE
    return ExtendedTime(float(t))
