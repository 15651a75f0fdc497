"""State spaces, speed measures and the triangular-kernel integral.

For a diffusion in natural scale with speed measure ``m`` the quantity

    Phi(y, a) = 1/2 * integral over (y - a, y + a) of (a - |u - y|) m(du)

is the expected time the diffusion started at ``y`` needs to leave
``(y - a, y + a)``. Every scale-factor scheme in the package is built on it.

Endpoints are plain floats; ``math.inf`` / ``-math.inf`` mark infinite ends.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from . import _cev
from .errors import DomainError, NumericalError

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
# Geometric halvings toward a singular point; beyond ~1074 the pieces underflow.
MAX_HALVINGS = 1100


@dataclass(frozen=True)
class StateSpace:
    l: float
    r: float
    include_l: bool = False
    include_r: bool = False

    def __post_init__(self):
        if not self.l < self.r:
            raise DomainError(f"state space needs l < r, got ({self.l}, {self.r})")
        if self.include_l and math.isinf(self.l):
            raise DomainError("an infinite endpoint cannot belong to the state space")
        if self.include_r and math.isinf(self.r):
            raise DomainError("an infinite endpoint cannot belong to the state space")

    def in_interior(self, y: float) -> bool:
        return self.l < y < self.r

    def in_space(self, y: float) -> bool:
        if self.l < y < self.r:
            return True
        return (y == self.l and self.include_l) or (y == self.r and self.include_r)

    def in_closure(self, y: float) -> bool:
        return self.l <= y <= self.r and math.isfinite(y)

    def distance_to_boundary(self, y: float) -> float:
        """``a_I(y) = min(y - l, r - y)``."""
        return min(y - self.l, self.r - y)

    def require_interior(self, y: float, what: str = "y") -> None:
        if not self.in_interior(y):
            raise DomainError(f"{what}={y} is not in the interior ({self.l}, {self.r})")


@dataclass(frozen=True)
class Atom:
    position: float
    mass: float


@dataclass(frozen=True)
class KernelValue:
    value: float
    quadrature_error_bound: float = 0.0

    def __float__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class SpeedMeasure:
    """Density part plus finitely many atoms (sticky points).

    ``kernel_closed_form(y, a)`` replaces quadrature of the density part when
    present; atoms are always added exactly. ``family`` tags measures for
    which compiled EMCEL solvers exist: ``("cev", p)``, ``("constant", c)`` or
    ``("sticky", c)`` (constant density plus the atoms).
    """

    space: StateSpace
    density: Optional[Callable[[float], float]] = None
    atoms: tuple[Atom, ...] = ()
    kernel_closed_form: Optional[Callable[[float, float], float]] = None
    singular_points: tuple[float, ...] = ()
    breakpoints: tuple[float, ...] = ()
    family: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        positions = [atom.position for atom in self.atoms]
        for atom in self.atoms:
            if not self.space.in_interior(atom.position):
                raise DomainError(f"atom at {atom.position} is not interior")
            if not atom.mass > 0:
                raise DomainError(f"atom mass must be positive, got {atom.mass}")
        if len(set(positions)) != len(positions):
            raise DomainError("atom positions must be distinct")
        if self.density is None and not self.atoms:
            raise DomainError("a speed measure needs a density or atoms")

    def without_closed_form(self) -> SpeedMeasure:
        return dataclasses.replace(self, kernel_closed_form=None, family=())

    def density_part(self) -> SpeedMeasure:
        return dataclasses.replace(self, atoms=())

    def atom_part(self) -> SpeedMeasure:
        return dataclasses.replace(
            self, density=None, kernel_closed_form=None, family=(), singular_points=()
        )

    def scaled(self, factor: float) -> SpeedMeasure:
        """The measure ``factor * m``."""
        dens = self.density
        cf = self.kernel_closed_form
        family = self.family
        if family and family[0] == "constant":
            family = ("constant", family[1] * factor)
        elif family:
            family = ()
        return dataclasses.replace(
            self,
            density=None if dens is None else (lambda u: factor * dens(u)),
            kernel_closed_form=None if cf is None else (lambda y, a: factor * cf(y, a)),
            atoms=tuple(Atom(at.position, at.mass * factor) for at in self.atoms),
            family=family,
        )


def _quad(f, lo, hi, points=()):
    pts = [p for p in points if lo < p < hi]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200,
            points=pts or None,
        )
    return val, err


def _quad_toward(f, s, d, sign, points=()):
    """Integrate ``f`` over the segment of length ``d`` ending at the suspect point ``s``.

    The segment is cut into pieces ``[s + d 2^-(j+1), s + d 2^-j]`` (mirrored for
    ``sign = -1``); the running sum is accepted once the geometric tail
    estimate is below tolerance. A sum that never settles is divergent.
    """
    total = 0.0
    err = 0.0
    prev = None
    zero_run = 0
    for j in range(MAX_HALVINGS):
        near = d * 2.0 ** -(j + 1)
        far = d * 2.0 ** -j
        if near == 0.0:
            break
        if sign > 0:
            piece, e = _quad(f, s + near, s + far, points)
        else:
            piece, e = _quad(f, s - far, s - near, points)
        if not math.isfinite(piece):
            return math.inf, math.inf
        total += piece
        err += e
        tol = max(QUAD_EPSABS, QUAD_EPSREL * abs(total))
        if piece == 0.0:
            zero_run += 1
            if zero_run >= 3:
                return total, err
        else:
            zero_run = 0
        if prev is not None and prev > 0.0 and piece >= 0.0:
            rho = piece / prev
            if rho < 1.0:
                tail = piece * rho / (1.0 - rho)
                if tail <= 1e-2 * tol:
                    return total + tail, err + tail
        prev = piece
    return math.inf, math.inf


def _integrate_density(m: SpeedMeasure, f, lo: float, hi: float) -> tuple[float, float]:
    """Integrate ``f`` (density times a bounded weight) over ``(lo, hi)``.

    Splits at interior singular points and approaches them, and any finite
    state-space boundary, geometrically.
    """
    if hi <= lo:
        return 0.0, 0.0
    space = m.space
    cuts = sorted({lo, hi, *(s for s in m.singular_points if lo < s < hi)})
    suspects = set(m.singular_points)
    if math.isfinite(space.l):
        suspects.add(space.l)
    if math.isfinite(space.r):
        suspects.add(space.r)
    total = 0.0
    err = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if math.isinf(a) or math.isinf(b):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, e = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
            if not math.isfinite(val) or e > max(1.0, abs(val)):
                return math.inf, math.inf
            total += val
            err += e
            continue
        sing_a = a in suspects
        sing_b = b in suspects
        if sing_a and sing_b:
            mid = 0.5 * (a + b)
            v1, e1 = _quad_toward(f, a, mid - a, +1, m.breakpoints)
            v2, e2 = _quad_toward(f, b, b - mid, -1, m.breakpoints)
            val, e = v1 + v2, e1 + e2
        elif sing_a:
            val, e = _quad_toward(f, a, b - a, +1, m.breakpoints)
        elif sing_b:
            val, e = _quad_toward(f, b, b - a, -1, m.breakpoints)
        else:
            val, e = _quad(f, a, b, m.breakpoints)
        if not math.isfinite(val):
            return math.inf, math.inf
        total += val
        err += e
    return total, err


def kernel_integral(m: SpeedMeasure, y: float, a: float) -> KernelValue:
    """``Phi(y, a) = 1/2 * int_{(y-a, y+a)} (a - |u - y|) m(du)``.

    Divergent integrals are reported as ``inf``.
    """
    space = m.space
    space.require_interior(y)
    if not a >= 0.0:
        raise DomainError(f"kernel half-width must be nonnegative, got {a}")
    if a == 0.0:
        return KernelValue(0.0, 0.0)
    slack = 1e-12 * max(1.0, abs(y), a)
    if y - a < space.l - slack or y + a > space.r + slack:
        raise DomainError(f"(y-a, y+a) = ({y - a}, {y + a}) leaves the closure of the state space")
    a = min(a, space.distance_to_boundary(y)) if math.isfinite(a) else a

    atom_part = 0.0
    for atom in m.atoms:
        w = a - abs(atom.position - y)
        if w > 0.0:
            atom_part += 0.5 * atom.mass * w

    if m.density is None:
        return KernelValue(atom_part, 0.0)
    if m.kernel_closed_form is not None:
        return KernelValue(float(m.kernel_closed_form(y, a)) + atom_part, 0.0)

    dens = m.density
    lo = max(y - a, space.l)
    hi = min(y + a, space.r)
    # weights written as distances to the kernel edges stay exact near a boundary
    left_edge = y - a
    right_edge = y + a
    left, e1 = _integrate_density(m, lambda u: 0.5 * (u - left_edge) * dens(u), lo, y)
    right, e2 = _integrate_density(m, lambda u: 0.5 * (right_edge - u) * dens(u), y, hi)
    return KernelValue(left + right + atom_part, e1 + e2)


def measure_of_interval(m: SpeedMeasure, lo: float, hi: float, closed: bool = False) -> float:
    """``m((lo, hi))`` (or ``m([lo, hi])`` with ``closed=True``); may be ``inf``."""
    if not lo < hi:
        raise DomainError(f"need lo < hi, got ({lo}, {hi})")
    if lo < m.space.l or hi > m.space.r:
        raise DomainError(f"({lo}, {hi}) is not inside [{m.space.l}, {m.space.r}]")
    total = 0.0
    for atom in m.atoms:
        if lo < atom.position < hi or (closed and atom.position in (lo, hi)):
            total += atom.mass
    if m.density is not None:
        val, _ = _integrate_density(m, m.density, lo, hi)
        total += val
    return total


def is_locally_finite_on(m: SpeedMeasure, lo: float, hi: float) -> bool:
    """Check ``0 < m([lo, hi]) < inf`` for a compact ``[lo, hi]`` in the interior."""
    if not (m.space.in_interior(lo) and m.space.in_interior(hi)):
        raise DomainError(f"[{lo}, {hi}] is not a compact subset of the interior")
    mass = measure_of_interval(m, lo, hi, closed=True)
    return 0.0 < mass < math.inf


# ---------------------------------------------------------------- builders


def _constant_closed_form(c: float):
    return lambda y, a: 0.5 * c * a * a


def brownian_speed_measure(
    l: float = -math.inf, r: float = math.inf, sigma: float = 1.0
) -> SpeedMeasure:
    """``m(du) = 2 / sigma^2 du``; finite endpoints are absorbing and included."""
    c = 2.0 / sigma**2
    space = StateSpace(l, r, include_l=math.isfinite(l), include_r=math.isfinite(r))
    return SpeedMeasure(
        space=space,
        density=lambda u: c,
        kernel_closed_form=_constant_closed_form(c),
        family=("constant", c),
        name="brownian",
        params={"l": l, "r": r, "sigma": sigma},
    )


def sticky_brownian_speed_measure(
    atoms: Sequence[tuple[float, float]],
    l: float = -math.inf,
    r: float = math.inf,
    sigma: float = 1.0,
) -> SpeedMeasure:
    """Brownian speed density plus point masses at the sticky points."""
    c = 2.0 / sigma**2
    space = StateSpace(l, r, include_l=math.isfinite(l), include_r=math.isfinite(r))
    return SpeedMeasure(
        space=space,
        density=lambda u: c,
        atoms=tuple(Atom(float(x), float(w)) for x, w in atoms),
        kernel_closed_form=_constant_closed_form(c),
        family=("sticky", c),
        name="sticky-brownian",
        params={"l": l, "r": r, "sigma": sigma, "atoms": [list(map(float, a)) for a in atoms]},
    )


def _abs_power_density(u: float, p: float) -> float:
    if u == 0.0:
        return math.inf if p > 0 else (2.0 if p == 0 else 0.0)
    return 2.0 * abs(u) ** (-2.0 * p)


def cev_speed_measure(p: float, extended: bool = False) -> SpeedMeasure:
    """Speed measure ``2 x^(-2p) dx`` of ``dY = Y^p dW``.

    The plain version lives on ``[0, inf)`` with the closed-form kernel
    installed. ``extended=True`` gives ``2 |x|^(-2p) dx`` on the whole line,
    which is only locally finite for ``p < 1/2``.
    """
    if not p < 1.0:
        raise DomainError(f"CEV exponent must satisfy p < 1, got {p}")
    if extended:
        if not p < 0.5:
            raise DomainError(f"the extended CEV measure needs p < 1/2, got {p}")
        return SpeedMeasure(
            space=StateSpace(-math.inf, math.inf),
            density=lambda u: _abs_power_density(u, p),
            singular_points=(0.0,),
            name="cev-extended",
            params={"p": p},
        )
    return SpeedMeasure(
        space=StateSpace(0.0, math.inf, include_l=True),
        density=lambda u: 2.0 * u ** (-2.0 * p),
        kernel_closed_form=lambda y, a: float(_cev.cev_kernel(y, a, p)),
        family=("cev", p),
        name="cev",
        params={"p": p},
    )


def tabulated_speed_measure(
    x: Sequence[float],
    values: Sequence[float],
    atoms: Sequence[tuple[float, float]] = (),
    l: float = -math.inf,
    r: float = math.inf,
    include_l: Optional[bool] = None,
    include_r: Optional[bool] = None,
) -> SpeedMeasure:
    """Piecewise-linear density through ``(x_i, values_i)``, flat beyond the table."""
    xs = np.asarray(x, dtype=float)
    vs = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or xs.shape != vs.shape:
        raise DomainError("tabulated density needs matching 1-d arrays with at least two points")
    if np.any(np.diff(xs) <= 0):
        raise DomainError("tabulated density points must be strictly increasing")
    if np.any(vs < 0) or not np.all(np.isfinite(vs)):
        raise DomainError("tabulated density values must be finite and nonnegative")
    include_l = math.isfinite(l) if include_l is None else include_l
    include_r = math.isfinite(r) if include_r is None else include_r
    space = StateSpace(l, r, include_l=include_l, include_r=include_r)
    return SpeedMeasure(
        space=space,
        density=lambda u: float(np.interp(u, xs, vs)),
        atoms=tuple(Atom(float(p), float(w)) for p, w in atoms),
        breakpoints=tuple(float(v) for v in xs),
        name="tabulated",
        params={"x": xs.tolist(), "values": vs.tolist(), "atoms": [list(map(float, a)) for a in atoms]},
    )

