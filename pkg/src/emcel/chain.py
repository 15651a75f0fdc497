"""Single chains, their interpolated paths and hitting times."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from . import _kernels, _rng
from .errors import DomainError, SchemeIntegrityError
from .scalefactors import ScaleFactorScheme

DEFAULT_MAX_STEPS = 100_000_000


@dataclass(frozen=True)
class ExtendedTime:
    """A time in ``[0, inf]``, or a censored observation known only to exceed ``value``."""

    value: float
    censored: bool = False

    def __post_init__(self):
        if not self.value >= 0.0:
            raise DomainError(f"times are nonnegative, got {self.value}")
        if self.censored and math.isinf(self.value):
            raise DomainError("a censored time needs a finite horizon")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value) and not self.censored

    def compactified(self) -> float:
        """``t / (1 + t)`` with ``inf -> 1``."""
        if self.censored:
            raise DomainError("a censored time has no compactified value")
        return compactify(self.value)


INFINITE = ExtendedTime(math.inf)


def compactify(t: float) -> float:
    return 1.0 if math.isinf(t) else t / (1.0 + t)


def extended_time_distance(s: Union[ExtendedTime, float], t: Union[ExtendedTime, float]) -> float:
    """``d(s, t) = |s/(1+s) - t/(1+t)|`` on ``[0, inf]``."""
    s = s if isinstance(s, ExtendedTime) else ExtendedTime(float(s))
    t = t if isinstance(t, ExtendedTime) else ExtendedTime(float(t))
    return abs(s.compactified() - t.compactified())


def n_steps_for(horizon_T: float, h: float) -> int:
    """``ceil(T / h)``, forgiving rounding when ``T`` is a multiple of ``h``."""
    if not horizon_T > 0.0:
        raise DomainError(f"horizon must be positive, got {horizon_T}")
    return max(1, math.ceil(horizon_T / h - 1e-9))


@dataclass(frozen=True, eq=False)
class ChainPath:
    """Grid values ``X_0, X_h, ..., X_{Nh}`` of one chain.

    ``absorbed_at`` is ``(side, k)`` when ``X_{kh}`` is the first boundary
    visit; ``frozen_at`` is the first ``k`` with ``a_h(X_{kh}) = 0`` in the
    interior. In both cases the path is constant after the last stored value.
    """

    h: float
    y0: float
    values: np.ndarray
    absorbed_at: Optional[tuple[str, int]] = None
    frozen_at: Optional[int] = None
    lower: float = -math.inf
    upper: float = math.inf

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def finished(self) -> bool:
        return self.absorbed_at is not None or self.frozen_at is not None

    @property
    def horizon(self) -> float:
        return math.inf if self.finished else self.n_steps * self.h

    def exit_times(self) -> tuple[ExtendedTime, ExtendedTime]:
        return hitting_time(self, self.lower), hitting_time(self, self.upper)


def _step_event(y_new, a, l, r, tol_l, tol_r, inc_l, inc_r):
    # mirrors the event scan of the compiled kernels
    if a == 0.0:
        return _kernels.FROZEN, y_new
    if y_new <= l + tol_l:
        if y_new < l - tol_l or not inc_l:
            return _kernels.ESCAPED, y_new
        return _kernels.LOWER, l
    if y_new >= r - tol_r:
        if y_new > r + tol_r or not inc_r:
            return _kernels.ESCAPED, y_new
        return _kernels.UPPER, r
    return -1, y_new


def simulate_chain(
    scheme: ScaleFactorScheme,
    y0: float,
    h: float,
    horizon_T: float,
    rng_seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> ChainPath:
    """Run one chain from ``y0`` for ``ceil(T/h)`` steps or until absorption.

    The coins come from the counter stream ``rng_seed``; batch simulation with
    the same seed produces the same trajectory bit for bit.
    """
    space = scheme.space
    space.require_interior(y0, "y0")
    scheme.check_h(h)
    n = n_steps_for(horizon_T, h)
    if n > max_steps:
        raise DomainError(f"{n} steps exceed max_steps={max_steps}")
    l, r = float(space.l), float(space.r)
    tol_l = _kernels._snap_width(l) if space.include_l else 0.0
    tol_r = _kernels._snap_width(r) if space.include_r else 0.0
    spec = scheme.jit_spec(h)
    if spec is not None:
        full, prm = spec.full, np.ascontiguousarray(spec.params, dtype=float)

        def step(y):
            return full(y, h, prm)
    else:

        def step(y):
            return scheme.scale(y, h)

    values = [float(y0)]
    y = float(y0)
    word = 0
    absorbed = None
    frozen = None
    for k in range(n):
        if (k & 63) == 0:
            word = _rng.coin_word(rng_seed, k >> 6)
        a = float(step(y))
        s = 1.0 if (word >> (k & 63)) & 1 else -1.0
        code, y_new = _step_event(y + s * a, a, l, r, tol_l, tol_r, space.include_l, space.include_r)
        if code == _kernels.FROZEN:
            frozen = k
            break
        if code == _kernels.ESCAPED or math.isnan(y_new):
            raise SchemeIntegrityError(f"step {k} from {y} with a={a} leaves the state space")
        y = y_new
        values.append(y)
        if code == _kernels.LOWER:
            absorbed = ("lower", k + 1)
            break
        if code == _kernels.UPPER:
            absorbed = ("upper", k + 1)
            break
    return ChainPath(h, float(y0), np.array(values), absorbed, frozen, l, r)


def path_value(path: ChainPath, t: float) -> float:
    """Linear interpolation of the grid values at time ``t``."""
    if not t >= 0.0:
        raise DomainError(f"t must be nonnegative, got {t}")
    v = path.values
    u = t / path.h
    k = math.floor(u)
    if k >= path.n_steps:
        if path.finished or (k == path.n_steps and u == k):
            return float(v[-1])
        raise DomainError(f"t={t} lies beyond the simulated horizon {path.horizon}")
    return float(v[k] + (u - k) * (v[k + 1] - v[k]))


def hitting_time(path: ChainPath, b: float) -> ExtendedTime:
    """First time the interpolated path equals ``b``.

    Crossings inside a segment are solved in exact rational arithmetic and
    rounded once. A path that ends without reaching ``b`` gives ``inf``; an
    unfinished one gives a censored time at its horizon.
    """
    if not (path.lower <= b <= path.upper) or math.isinf(b):
        if math.isinf(b) and b in (path.lower, path.upper):
            return INFINITE
        raise DomainError(f"level {b} is outside the closure [{path.lower}, {path.upper}]")
    v = path.values
    d = np.sign(v - b)
    hit = np.flatnonzero(d == 0.0)
    cross = np.flatnonzero(d[:-1] * d[1:] < 0.0)
    first_hit = int(hit[0]) if hit.size else None
    first_cross = int(cross[0]) if cross.size else None
    if first_cross is not None and (first_hit is None or first_cross < first_hit):
        k = first_cross
        x0, x1 = Fraction(float(v[k])), Fraction(float(v[k + 1]))
        frac = (Fraction(b) - x0) / (x1 - x0)
        return ExtendedTime(float((k + frac) * Fraction(path.h)))
    if first_hit is not None:
        return ExtendedTime(first_hit * path.h)
    if path.finished:
        return INFINITE
    return ExtendedTime(path.n_steps * path.h, censored=True)


def boundary_times(status, steps, h, horizon_T):
    """Per-path ``(H_l, H_r)`` arrays from batch results.

    Infinite times are ``inf``; censored ones are ``nan`` (known only to exceed the horizon).
    """
    lower = np.full(status.shape, np.nan)
    upper = np.full(status.shape, np.nan)
    t = steps * h
    is_l = status == _kernels.LOWER
    is_u = status == _kernels.UPPER
    is_f = status == _kernels.FROZEN
    lower[is_l] = t[is_l]
    upper[is_u] = t[is_u]
    lower[is_u | is_f] = math.inf
    upper[is_l | is_f] = math.inf
    return lower, upper
