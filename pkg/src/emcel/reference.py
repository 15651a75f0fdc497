"""Benchmark laws for absorption and exit times.

The zero-hitting time of ``BESQ(delta)`` started at ``z0 > 0`` with
``delta < 2`` is distributed as ``z0 / (2 G)`` with ``G ~ Gamma(1 - delta/2)``,
so ``P(H_0 <= t) = Q(1 - delta/2, z0 / (2t))`` with ``Q`` the upper regularised
incomplete gamma function. This identity is standard in the literature on
Bessel processes; ``scripts/validate_besq_law.py`` checks it against fine
chains. CEV absorption follows by the power scale map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import DomainError

SERIES_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ReferenceLaw:
    """Law of a time in ``[0, inf]`` through its cdf on ``[0, inf)``.

    ``cdf`` and ``ppf`` are vectorised; ``ppf`` is optional and only defined on
    ``(0, total_mass_finite)``. ``cdf_fn`` is only called for ``t > 0``; the
    value at zero is ``mass_at_zero``.
    """

    cdf_fn: Callable[[np.ndarray], np.ndarray]
    total_mass_finite: float = 1.0
    description: str = ""
    ppf_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    mean: float = math.nan
    params: dict = field(default_factory=dict)
    mass_at_zero: float = 0.0

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t > 0.0, self.cdf_fn(np.where(t > 0.0, t, 1.0)), np.where(t == 0.0, self.mass_at_zero, 0.0))
        out = np.where(np.isposinf(t), self.total_mass_finite, out)
        return out if out.ndim else float(out)

    def ppf(self, u):
        if self.ppf_fn is None:
            raise DomainError(f"no quantile function for {self.description}")
        return self.ppf_fn(np.asarray(u, dtype=float))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-transform sample; mass beyond ``total_mass_finite`` becomes ``inf``."""
        u = rng.random(n)
        out = np.full(n, math.inf)
        fin = u < self.total_mass_finite
        out[fin] = self.ppf(u[fin])
        return out


@dataclass(frozen=True, eq=False)
class BesqTransform:
    delta: float
    s: Callable[[float], float]
    s_inverse: Callable[[float], float]


def cev_to_besq(p: float) -> BesqTransform:
    """Dimension ``delta = 2 - 1/(1-p)`` and the map ``s`` taking ``BESQ(delta)`` to natural scale."""
    if not p < 1.0:
        raise DomainError(f"CEV exponent must satisfy p < 1, got {p}")
    delta = 2.0 - 1.0 / (1.0 - p)
    c = (2.0 - delta) ** (delta - 2.0)
    e = 1.0 - delta / 2.0

    def s(z):
        return c * z**e

    def s_inverse(y):
        return (y / c) ** (1.0 / e)

    return BesqTransform(delta, s, s_inverse)


def besq_hit_zero_law(delta: float, z0: float) -> ReferenceLaw:
    """Law of ``H_0`` for ``dZ = delta dt + 2 sqrt(Z) dW`` from ``z0``."""
    if not delta < 2.0:
        raise DomainError(f"zero is inaccessible for delta={delta} >= 2")
    if not z0 > 0.0:
        raise DomainError(f"z0 must be positive, got {z0}")
    nu = 1.0 - delta / 2.0
    x = z0 / 2.0
    mean = x / (nu - 1.0) if nu > 1.0 else math.inf
    return ReferenceLaw(
        cdf_fn=lambda t: special.gammaincc(nu, x / t),
        ppf_fn=lambda u: x / special.gammainccinv(nu, u),
        mean=mean,
        description=f"BESQ({delta:g}) zero-hitting time from z0={z0:g}",
        params={"delta": delta, "z0": z0},
    )


def cev_absorption_law(p: float, y0: float) -> ReferenceLaw:
    """Law of ``H_0`` for ``dY = Y^p dW`` from ``y0 > 0``."""
    if not y0 > 0.0:
        raise DomainError(f"y0 must be positive, got {y0}")
    tr = cev_to_besq(p)
    law = besq_hit_zero_law(tr.delta, tr.s_inverse(y0))
    return ReferenceLaw(
        cdf_fn=law.cdf_fn,
        ppf_fn=law.ppf_fn,
        mean=law.mean,
        description=f"CEV(p={p:g}) absorption time from y0={y0:g}",
        params={"p": p, "y0": y0},
    )


def _exit_survival(t: np.ndarray, x: float, L: float) -> np.ndarray:
    # P(H > t) = sum over odd n of 4/(n pi) sin(n pi x / L) exp(-n^2 pi^2 t / (2 L^2))
    t = np.atleast_1d(t)
    rate = math.pi**2 / (2.0 * L * L)
    out = np.empty(t.shape)
    for i, ti in enumerate(t.flat):
        # last odd n whose exponential factor still exceeds the tolerance
        n_max = math.sqrt(-math.log(SERIES_TOL) / (rate * ti)) + 2.0
        if n_max > 2e5:
            # tiny t: only the two nearest images matter
            out.flat[i] = 1.0 - 2.0 * (special.ndtr(-x / math.sqrt(ti)) + special.ndtr(-(L - x) / math.sqrt(ti)))
            continue
        n = np.arange(1, int(n_max) + 2, 2, dtype=float)
        terms = 4.0 / (n * math.pi) * np.sin(n * math.pi * x / L) * np.exp(-n * n * rate * ti)
        out.flat[i] = terms.sum()
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class ExitLaw:
    law: ReferenceLaw
    p_lower: float


def bm_exit_interval_law(y0: float, a: float, b: float) -> ExitLaw:
    """Law of ``H_{a,b}`` for standard Brownian motion and the probability of leaving at ``a``."""
    if not (math.isfinite(a) and math.isfinite(b) and a < y0 < b):
        raise DomainError(f"need finite a < y0 < b, got a={a}, y0={y0}, b={b}")
    L = b - a
    x = y0 - a
    law = ReferenceLaw(
        cdf_fn=lambda t: 1.0 - _exit_survival(t, x, L).reshape(np.shape(t)),
        mean=x * (L - x),
        description=f"Brownian exit time of ({a:g}, {b:g}) from {y0:g}",
        params={"y0": y0, "a": a, "b": b},
    )
    return ExitLaw(law, (b - y0) / L)
