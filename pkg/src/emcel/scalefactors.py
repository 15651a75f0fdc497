"""Scale-factor families ``h -> a_h(.)`` for coin-tossing chains.

The chain moves from ``y`` to ``y + a_h(y)`` or ``y - a_h(y)`` with probability
1/2 each. Provided here:

* :class:`EMCELScheme`: ``a_h(y)`` solves ``Phi(y, a) = h``, clamped so that
  starts outside ``(l_h, r_h)`` jump onto the boundary.
* :class:`WeakEulerCEVScheme`: ``min(sqrt(h) y^p, y)`` for ``dY = Y^p dW``.
* :class:`TruncatedEMCELScheme`: EMCEL above a level ``lbar_h > l_h`` and zero
  below; it satisfies Condition (A) but its chains never reach ``l``.
* :class:`CustomScheme`: any user function ``(h, y) -> a``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Optional

import numba as nb
import numpy as np
from scipy import optimize

from . import _cev
from .errors import ConfigError, DomainError, InconsistencyError
from .measure import SpeedMeasure, StateSpace, cev_speed_measure, kernel_integral

# well inside the required 1e-12 * max(1, |y|)
ROOT_XTOL = 1e-15
ROOT_MAXITER = 200


@dataclass(frozen=True)
class BoundaryThresholds:
    l_h: float
    r_h: float


@dataclass(frozen=True)
class JitSpec:
    """Compiled scale factor ``full(y, h, params)`` for the batch kernels.

    ``bulk`` is a branch-free variant valid wherever ``easy`` holds; the
    kernels evaluate it vectorised and fall back to ``full`` elsewhere. Both
    must return bit-identical values on the easy set.
    """

    full: object
    params: np.ndarray
    bulk: object = None
    easy: object = None


# ------------------------------------------------------------ root finding


@functools.lru_cache(maxsize=1 << 16)
def _emcel_root(m: SpeedMeasure, y: float, h: float) -> float:
    # sup{a in [0, a_I(y)] : Phi(y, a) <= h}
    a_max = m.space.distance_to_boundary(y)

    def phi(a):
        return kernel_integral(m, y, a).value

    if math.isfinite(a_max) and phi(a_max) <= h:
        return a_max
    hi = min(a_max, 1.0)
    for _ in range(ROOT_MAXITER):
        v = phi(hi)
        if v >= h:
            break
        if hi >= a_max:
            raise InconsistencyError(
                f"Phi({y}, a) stays below h={h} up to a_I(y) although Phi({y}, a_I) > h"
            )
        hi = min(2.0 * hi, a_max)
    else:
        raise InconsistencyError(f"could not bracket the EMCEL root at y={y}, h={h}")
    if v == h:
        return hi
    return optimize.brentq(
        lambda a: (phi(a) if a > 0.0 else 0.0) - h,
        0.0,
        hi,
        xtol=ROOT_XTOL * max(1.0, abs(y)),
        rtol=4 * np.finfo(float).eps,
        maxiter=ROOT_MAXITER,
    )


@functools.lru_cache(maxsize=1 << 12)
def _threshold(m: SpeedMeasure, h: float, side: str) -> float:
    l, r = m.space.l, m.space.r
    if side == "lower":
        if math.isinf(l):
            return l

        def phi(a):
            return kernel_integral(m, l + a, a).value if a > 0.0 else 0.0
    else:
        if math.isinf(r):
            return r

        def phi(a):
            return kernel_integral(m, r - a, a).value if a > 0.0 else 0.0

    a_max = 0.5 * (r - l)
    probe = min(a_max, 1.0) * 1e-9
    # shrink until Phi < h; if it never gets there (or diverges) the boundary is inaccessible
    for _ in range(100):
        v = phi(probe)
        if v < h:
            break
        if math.isinf(v):
            return l if side == "lower" else r
        probe *= 1e-3
    else:
        return l if side == "lower" else r
    if math.isfinite(a_max):
        if phi(a_max) < h:
            return math.inf if side == "lower" else -math.inf
        hi = a_max
    else:
        hi = 1.0
        for _ in range(2000):
            if phi(hi) >= h:
                break
            hi *= 2.0
        else:
            return math.inf if side == "lower" else -math.inf
    a_star = optimize.brentq(
        lambda a: phi(a) - h, probe, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500
    )
    return l + a_star if side == "lower" else r - a_star


# ------------------------------------------------------------ schemes


@dataclass(frozen=True, eq=False)
class ScaleFactorScheme:
    measure: SpeedMeasure
    h_max: float = 1.0
    kind: ClassVar[str] = "abstract"

    def __post_init__(self):
        if not 0.0 < self.h_max < math.inf:
            raise ConfigError(f"h_max must be positive and finite, got {self.h_max}", field="h_max")

    @property
    def space(self) -> StateSpace:
        return self.measure.space

    def check_h(self, h: float) -> None:
        if not 0.0 < h < self.h_max:
            raise DomainError(f"h={h} outside (0, {self.h_max})")

    def scale(self, y: float, h: float) -> float:
        """``a_h(y)`` on the closure of the state space (zero at the endpoints)."""
        self.check_h(h)
        space = self.space
        if y == space.l or y == space.r:
            return 0.0
        space.require_interior(y)
        spec = self.jit_spec(h)
        if spec is not None:
            return float(spec.full(y, h, spec.params))
        return float(self._scale(y, h))

    def _scale(self, y: float, h: float) -> float:
        raise NotImplementedError

    def scale_array(self, ys: np.ndarray, h: float) -> np.ndarray:
        return np.array([self.scale(float(y), h) for y in np.asarray(ys, dtype=float)])

    def thresholds(self, h: float) -> BoundaryThresholds:
        self.check_h(h)
        return BoundaryThresholds(_threshold(self.measure, h, "lower"), _threshold(self.measure, h, "upper"))

    def critical_points(self, h: float) -> list[float]:
        """Levels near which the scheme changes behaviour; audits refine around them."""
        t = self.thresholds(h)
        return [v for v in (t.l_h, t.r_h) if math.isfinite(v)]

    def jit_spec(self, h: float) -> Optional[JitSpec]:
        return None

    def describe(self) -> dict:
        return {"kind": self.kind, "measure": self.measure.name, **self.measure.params}


# compiled scale factors, signature (y, h, params)


@nb.njit(cache=True)
def _full_cev_half(y, h, prm):
    return _cev.emcel_half(y, h)


@nb.njit(inline="always")
def _bulk_cev_half(y, h, prm):
    return _cev.emcel_half_bulk(y, h)


@nb.njit(inline="always")
def _easy_cev_half(y, h, prm):
    return _cev.emcel_half_easy(y, h)


@nb.njit(cache=True)
def _full_cev_pow(y, h, prm):
    if y > prm[2]:
        return _cev.emcel_pow_bulk(y, h, prm)
    return _cev.emcel_pow(y, h, prm[0])


@nb.njit(inline="always")
def _bulk_cev_pow(y, h, prm):
    return _cev.emcel_pow_bulk(y, h, prm)


@nb.njit(inline="always")
def _easy_cev_pow(y, h, prm):
    return y > prm[2]


@functools.lru_cache(maxsize=64)
def _pow_series(p):
    return _cev.pow_reversion(2.0 * (1.0 - p))


def _cev_pow_params(p, h):
    coeffs, z_bulk = _pow_series(p)
    q = 2.0 * (1.0 - p)
    y_bulk = (h / z_bulk) ** (1.0 / q)
    return np.concatenate([[p, q, y_bulk, coeffs.size], coeffs])


@nb.njit(cache=True)
def _full_constant(y, h, prm):
    return min(prm[0], y - prm[1], prm[2] - y)


@nb.njit(cache=True)
def _full_sticky(y, h, prm):
    # prm = [c, l, r, x_1, w_1, x_2, w_2, ...] for m = c du + sum w_i delta_{x_i};
    # Phi(y, a) = c a^2 / 2 + sum w_i (a - |x_i - y|)^+ / 2 is solved segment by segment
    c = prm[0]
    n = (prm.size - 3) // 2
    W = 0.0
    WD = 0.0
    last = -1.0
    while True:
        K = 0.5 * WD + h
        a = 2.0 * K / (0.5 * W + math.sqrt(0.25 * W * W + 2.0 * c * K))
        nxt = math.inf
        for i in range(n):
            d = abs(prm[3 + 2 * i] - y)
            if last < d < nxt:
                nxt = d
        if a <= nxt:
            break
        for i in range(n):
            d = abs(prm[3 + 2 * i] - y)
            if d == nxt:
                W += prm[4 + 2 * i]
                WD += prm[4 + 2 * i] * d
        last = nxt
    return min(a, y - prm[1], prm[2] - y)


@nb.njit(cache=True)
def _full_weak_euler_half(y, h, prm):
    return min(math.sqrt(h * y), y)


@nb.njit(cache=True)
def _full_weak_euler_pow(y, h, prm):
    return min(prm[1] * y ** prm[0], y)


@nb.njit(cache=True)
def _full_truncated_half(y, h, prm):
    if y < prm[0]:
        return 0.0
    return _cev.emcel_half(y, h)


@nb.njit(inline="always")
def _easy_truncated_half(y, h, prm):
    return y >= prm[0] and _cev.emcel_half_easy(y, h)


@nb.njit(cache=True)
def _full_truncated_pow(y, h, prm):
    if y < prm[0]:
        return 0.0
    return _cev.emcel_pow(y, h, prm[1])


def _emcel_jit_spec(m: SpeedMeasure, h: float) -> Optional[JitSpec]:
    if m.family and m.family[0] == "sticky":
        prm = [m.family[1], m.space.l, m.space.r]
        for at in m.atoms:
            prm += [at.position, at.mass]
        return JitSpec(_full_sticky, np.array(prm))
    if not m.family or m.atoms:
        return None
    name, value = m.family
    if name == "cev":
        if value == 0.5:
            return JitSpec(_full_cev_half, np.zeros(1), _bulk_cev_half, _easy_cev_half)
        return JitSpec(_full_cev_pow, _cev_pow_params(value, h), _bulk_cev_pow, _easy_cev_pow)
    if name == "constant":
        step = math.sqrt(2.0 * h / value)
        prm = np.array([step, m.space.l, m.space.r])
        return JitSpec(_full_constant, prm, _full_constant, None)
    return None


@dataclass(frozen=True, eq=False)
class EMCELScheme(ScaleFactorScheme):
    kind: ClassVar[str] = "emcel"

    def _scale(self, y, h):
        return _emcel_root(self.measure, y, h)

    def jit_spec(self, h):
        return _emcel_jit_spec(self.measure, h)


@dataclass(frozen=True, eq=False)
class WeakEulerCEVScheme(ScaleFactorScheme):
    p: float = 0.5
    kind: ClassVar[str] = "weak-euler"

    def __post_init__(self):
        super().__post_init__()
        if not self.p < 1.0:
            raise ConfigError(f"weak Euler CEV needs p < 1, got {self.p}", field="p")

    @classmethod
    def for_cev(cls, p: float, h_max: float = 1.0) -> "WeakEulerCEVScheme":
        if not p < 1.0:
            raise ConfigError(f"weak Euler CEV needs p < 1, got {p}", field="p")
        return cls(cev_speed_measure(p), h_max=h_max, p=p)

    def _scale(self, y, h):
        return weak_euler_cev_scale(self.p, y, h)

    def critical_points(self, h):
        return super().critical_points(h) + [h ** (1.0 / (2.0 * (1.0 - self.p)))]

    def jit_spec(self, h):
        if self.p == 0.5:
            return JitSpec(_full_weak_euler_half, np.zeros(1), _full_weak_euler_half, None)
        return JitSpec(_full_weak_euler_pow, np.array([self.p, math.sqrt(h)]), _full_weak_euler_pow, None)

    def describe(self):
        return {**super().describe(), "p": self.p}


@dataclass(frozen=True, eq=False)
class TruncatedEMCELScheme(ScaleFactorScheme):
    """EMCEL at and above ``lbar_h``, zero on ``[l, lbar_h)``.

    ``truncation`` maps ``h`` to ``lbar_h``; without it ``lbar_h = l + factor (l_h - l)``
    with ``factor = 2`` by default.
    """

    truncation: Optional[Callable[[float], float]] = None
    factor: float = 2.0
    kind: ClassVar[str] = "truncated-emcel"

    def __post_init__(self):
        super().__post_init__()
        if math.isinf(self.space.l):
            raise ConfigError("the truncated scheme needs a finite lower boundary")
        if not self.factor > 1.0:
            raise ConfigError(f"truncation factor must exceed 1, got {self.factor}", field="factor")

    def level(self, h: float) -> float:
        self.check_h(h)
        l_h = _threshold(self.measure, h, "lower")
        l = self.space.l
        if not l_h > l:
            raise ConfigError(f"lower boundary is not accessible (l_h = l at h={h})")
        lbar = l + self.factor * (l_h - l) if self.truncation is None else float(self.truncation(h))
        if not lbar > l_h:
            raise ConfigError(f"truncation level {lbar} must exceed l_h={l_h} at h={h}", field="truncation")
        return lbar

    def _scale(self, y, h):
        if y < self.level(h):
            return 0.0
        return _emcel_root(self.measure, y, h)

    def critical_points(self, h):
        return super().critical_points(h) + [self.level(h)]

    def jit_spec(self, h):
        m = self.measure
        if m.atoms or not m.family or m.family[0] != "cev":
            return None
        p = m.family[1]
        lbar = self.level(h)
        if p == 0.5:
            return JitSpec(_full_truncated_half, np.array([lbar]), _bulk_cev_half, _easy_truncated_half)
        return JitSpec(_full_truncated_pow, np.array([lbar, p]))


@dataclass(frozen=True, eq=False)
class CustomScheme(ScaleFactorScheme):
    """Scale factors from a user function ``fn(h, y) -> a``.

    ``fn`` may accept numpy arrays for ``y``; otherwise it is applied pointwise.
    """

    fn: Callable[[float, float], float] = None
    kind: ClassVar[str] = "custom"

    def __post_init__(self):
        super().__post_init__()
        if self.fn is None:
            raise ConfigError("custom scheme needs a scale function", field="fn")

    def _scale(self, y, h):
        a = float(self.fn(h, y))
        if not a >= 0.0:
            raise DomainError(f"custom scale factor is negative at y={y}: {a}")
        return a

    def scale_array(self, ys, h):
        ys = np.asarray(ys, dtype=float)
        try:
            out = np.broadcast_to(np.asarray(self.fn(h, ys), dtype=float), ys.shape).copy()
        except (TypeError, ValueError):
            out = np.array([float(self.fn(h, float(y))) for y in ys])
        out[(ys == self.space.l) | (ys == self.space.r)] = 0.0
        return out


# ------------------------------------------------------------ operations


def emcel_scale(scheme: ScaleFactorScheme, y: float, h: float) -> float:
    """EMCEL step ``a_h(y)`` for the scheme's speed measure, by bracketed root search."""
    scheme.check_h(h)
    scheme.space.require_interior(y)
    return _emcel_root(scheme.measure, y, h)


def boundary_threshold(scheme: ScaleFactorScheme, h: float, side: str) -> float:
    """``l_h`` (``side="lower"``) or ``r_h`` (``side="upper"``).

    An inaccessible boundary gives back the boundary itself. When no half-width
    up to ``(r - l)/2`` reaches ``h`` the empty infimum is ``+inf`` for ``l_h``
    (``-inf`` for ``r_h``).
    """
    scheme.check_h(h)
    if side not in ("lower", "upper"):
        raise DomainError(f"side must be 'lower' or 'upper', got {side!r}")
    return _threshold(scheme.measure, h, side)


def admissible_set_contains(scheme: ScaleFactorScheme, h: float, y: float) -> bool:
    """Membership in ``I_h = (l_h, r_h) U {y : y +- a_h(y) interior}``."""
    space = scheme.space
    space.require_interior(y)
    t = scheme.thresholds(h)
    if t.l_h < y < t.r_h:
        return True
    a = scheme.scale(y, h)
    return space.in_interior(y - a) and space.in_interior(y + a)


def weak_euler_cev_scale(p: float, y: float, h: float) -> float:
    """``min(sqrt(h) y^p, y)``."""
    if not p < 1.0:
        raise DomainError(f"weak Euler CEV needs p < 1, got {p}")
    if not 0.0 < h < 1.0:
        raise DomainError(f"h={h} outside (0, 1)")
    if not y >= 0.0:
        raise DomainError(f"y={y} must be nonnegative")
    if y == 0.0:
        return 0.0
    return min(math.sqrt(h) * y**p, y)


def truncated_emcel_scale(scheme: TruncatedEMCELScheme, y: float, h: float) -> float:
    return scheme.scale(y, h)


def scheme_diagnostics(scheme: ScaleFactorScheme, h: float, ys) -> list[tuple[float, float, float]]:
    """Rows ``(y, a_h(y), Phi(y, a_h(y)))`` over interior grid points."""
    rows = []
    for y in ys:
        y = float(y)
        a = scheme.scale(y, h)
        rows.append((y, a, kernel_integral(scheme.measure, y, a).value))
    return rows


def cev_emcel(p: float, h_max: float = 1.0) -> EMCELScheme:
    return EMCELScheme(cev_speed_measure(p), h_max=h_max)


def cev_truncated(p: float, truncation=None, h_max: float = 1.0, factor: float = 2.0) -> TruncatedEMCELScheme:
    return TruncatedEMCELScheme(cev_speed_measure(p), h_max=h_max, truncation=truncation, factor=factor)
