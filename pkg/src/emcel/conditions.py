"""Sampled audits of Conditions (A), (B) and (D).

Every supremum and infimum is taken over a finite grid, so each verdict is a
sampled verdict. The grid for ``I_h`` combines log-spaced distances to the
finite boundaries, a uniform or log-spaced spread over infinite sides, the
compact ``K``, and geometric refinement around the scheme's critical points
(``l_h``, truncation levels, weak Euler switch points). Grids for sizes ``n``
and ``2n - 1`` are nested, so refining never loses a point.

``o(h)`` is checked by a trend test whose thresholds live in :class:`TrendPolicy`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .measure import kernel_integral
from .scalefactors import ScaleFactorScheme, admissible_set_contains

REFINE_DEPTH = 20
MIN_LOG_DISTANCE = 1e-14
DEFAULT_EXTENT = 1e3


@dataclass(frozen=True)
class TrendPolicy:
    """When does a sequence of ratios count as tending to zero.

    Passing needs the last value below ``zero_tol``, or below both
    ``shrink`` times the first value and ``final_max``, with no step up by
    more than ``monotone_tol`` (relative).
    """

    # refinement around critical points resolves relative offsets of 2^-20 ~ 1e-6,
    # so ratios within 1e-5 of their limit are indistinguishable from it
    zero_tol: float = 1e-5
    shrink: float = 0.5
    final_max: float = 0.1
    monotone_tol: float = 0.1
    cover_rtol: float = 1e-9

    def tends_to_zero(self, values: Sequence[float]) -> bool:
        v = [abs(x) for x in values]
        if not v or any(math.isnan(x) for x in v):
            return False
        if v[-1] <= self.zero_tol:
            return True
        if len(v) < 2:
            return False
        if not (v[-1] < self.shrink * v[0] and v[-1] < self.final_max):
            return False
        return all(b <= a * (1.0 + self.monotone_tol) for a, b in zip(v, v[1:]))


@dataclass(frozen=True)
class ConditionRow:
    h: float
    inf_Ih: float
    sup_Ih: float
    sup_K: float
    deviation_Ih: float
    deviation_K: float
    n_Ih: int
    n_K: int

    @property
    def alpha_ratio(self) -> float:
        return self.inf_Ih / self.h

    @property
    def sup_ratio(self) -> float:
        return self.sup_Ih / self.h

    @property
    def beta_ratio(self) -> float:
        return self.sup_K / self.h


CSV_COLUMNS = (
    "h", "inf_Ih", "sup_Ih", "sup_K", "deviation_sup", "deviation_Ih", "deviation_K",
    "alpha_ratio", "sup_ratio", "beta_ratio", "deviation_ratio", "n_Ih", "n_K",
)


@dataclass
class ConditionReport:
    condition: str
    rows: list[ConditionRow]
    verdicts: dict
    fitted: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def deviation_sup(self, row: ConditionRow) -> float:
        return row.deviation_K if self.condition == "A" else row.deviation_Ih

    def alpha_ratio(self, h: float) -> float:
        return self._row(h).alpha_ratio

    def beta_ratio(self, h: float) -> float:
        return self._row(h).beta_ratio

    def _row(self, h):
        for row in self.rows:
            if row.h == h:
                return row
        raise DomainError(f"h={h} was not audited")

    def table(self) -> list[tuple]:
        out = []
        for r in self.rows:
            dev = self.deviation_sup(r)
            out.append((
                r.h, r.inf_Ih, r.sup_Ih, r.sup_K, dev, r.deviation_Ih, r.deviation_K,
                r.alpha_ratio, r.sup_ratio, r.beta_ratio, dev / r.h, r.n_Ih, r.n_K,
            ))
        return out

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "verdicts": self.verdicts,
            "fitted": self.fitted,
            "grid": self.grid,
            "notes": self.notes,
            "rows": [asdict(r) for r in self.rows],
        }


# ------------------------------------------------------------ sampling


def _unit(n: int) -> np.ndarray:
    # k / (n - 1) is exact for both n and 2n - 1, which keeps grids nested
    return np.arange(n) / (n - 1)


def _log_spread(lo: float, hi: float, n: int) -> np.ndarray:
    a, b = math.log10(lo), math.log10(hi)
    return 10.0 ** (a + _unit(n) * (b - a))


def _space_grid(scheme: ScaleFactorScheme, n: int, extent: float) -> np.ndarray:
    space = scheme.space
    l, r = space.l, space.r
    pts = []
    if math.isfinite(l) and math.isfinite(r):
        half = 0.5 * (r - l)
        d = _log_spread(MIN_LOG_DISTANCE * max(1.0, half), half, n)
        pts += [l + d, r - d, l + _unit(n) * (r - l)]
    elif math.isfinite(l):
        d = _log_spread(MIN_LOG_DISTANCE * max(1.0, abs(l)), extent, n)
        pts.append(l + d)
    elif math.isfinite(r):
        d = _log_spread(MIN_LOG_DISTANCE * max(1.0, abs(r)), extent, n)
        pts.append(r - d)
    else:
        pts.append(-extent + _unit(n) * (2.0 * extent))
    return np.concatenate(pts)


def _refinement(scheme: ScaleFactorScheme, h: float) -> list[float]:
    space = scheme.space
    out = []
    for c in scheme.critical_points(h):
        if not space.in_interior(c):
            continue
        d = space.distance_to_boundary(c)
        if math.isinf(d):
            d = max(1.0, abs(c))
        out.append(c)
        for j in range(REFINE_DEPTH + 1):
            out += [c - d * 2.0**-j, c + d * 2.0**-j]
    return out


def _sample(scheme, h, grid_size, K, extent):
    space = scheme.space
    ys = np.concatenate([_space_grid(scheme, grid_size, extent), _refinement(scheme, h)])
    if K is not None:
        ys = np.concatenate([ys, _k_grid(K, grid_size)])
    ys = np.unique(ys)
    return ys[(ys > space.l) & (ys < space.r)]


def _k_grid(K, n):
    lo, hi = K
    return lo + _unit(n) * (hi - lo)


def _check_K(scheme, K):
    if K is None:
        return None
    lo, hi = float(K[0]), float(K[1])
    if not (lo <= hi and scheme.space.in_interior(lo) and scheme.space.in_interior(hi)):
        raise DomainError(f"K=[{lo}, {hi}] is not a compact subset of the interior")
    return lo, hi


def _phi(scheme, y, h):
    return kernel_integral(scheme.measure, y, scheme.scale(y, h)).value


def _audit_h(scheme, h, grid_size, K, extent, need_Ih=True) -> ConditionRow:
    inf_i, sup_i, dev_i, n_i = math.inf, 0.0, 0.0, 0
    if need_Ih:
        for y in _sample(scheme, h, grid_size, K, extent):
            y = float(y)
            if not admissible_set_contains(scheme, h, y):
                continue
            v = _phi(scheme, y, h)
            n_i += 1
            inf_i = min(inf_i, v)
            sup_i = max(sup_i, v)
            dev_i = max(dev_i, abs(v - h))
    sup_k, dev_k, n_k = math.nan, math.nan, 0
    if K is not None:
        vals = [_phi(scheme, float(y), h) for y in np.unique(_k_grid(K, grid_size))]
        n_k = len(vals)
        sup_k = max(vals)
        dev_k = max(abs(v - h) for v in vals)
    if n_i == 0:
        inf_i = sup_i = dev_i = math.nan
    return ConditionRow(h, inf_i, sup_i, sup_k, dev_i, dev_k, n_i, n_k)


def _check_h_sequence(scheme, hs):
    hs = [float(h) for h in hs]
    if not hs:
        raise DomainError("h_sequence is empty")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise DomainError("h_sequence must be strictly decreasing")
    for h in hs:
        scheme.check_h(h)
    return hs


def _grid_meta(grid_size, K, extent):
    if grid_size < 2:
        raise DomainError(f"grid_size must be at least 2, got {grid_size}")
    return {
        "grid_size": grid_size,
        "K": list(K) if K is not None else None,
        "extent": extent,
        "refine_depth": REFINE_DEPTH,
        "min_log_distance": MIN_LOG_DISTANCE,
        "sampled": True,
    }


SAMPLING_NOTE = "sups and infs are taken over finite grids; verdicts are sampled verdicts"
TREND_NOTE = "o(h) is judged by a trend test over the audited h values (see TrendPolicy)"


def check_condition_A(
    scheme: ScaleFactorScheme,
    K: tuple[float, float],
    h_sequence: Sequence[float],
    grid_size: int,
    policy: TrendPolicy = TrendPolicy(),
    extent: float = DEFAULT_EXTENT,
) -> ConditionReport:
    """``sup_K |Phi(y, a_h(y)) - h| = o(h)`` on a uniform grid of ``K``."""
    grid = _grid_meta(grid_size, K, extent)
    K = _check_K(scheme, K)
    if K is None:
        raise DomainError("Condition (A) needs a compact K")
    hs = _check_h_sequence(scheme, h_sequence)
    rows = [_audit_h(scheme, h, grid_size, K, extent, need_Ih=False) for h in hs]
    ok = policy.tends_to_zero([r.deviation_K / r.h for r in rows])
    return ConditionReport("A", rows, {"A": ok}, grid=grid, notes=[SAMPLING_NOTE, TREND_NOTE])


def fit_power_bound(hs, sups, policy: TrendPolicy = TrendPolicy()) -> dict:
    """Least-squares ``log sup ~ log B + gamma log h`` with ``gamma`` in ``(1/2, 1]``, ``B >= 1``."""
    x = np.log(np.asarray(hs, dtype=float))
    y = np.log(np.asarray(sups, dtype=float))
    if x.size >= 2 and np.ptp(x) > 0:
        gamma = float(np.polyfit(x, y, 1)[0])
    else:
        gamma = 1.0
    gamma = min(1.0, max(0.5 + 1e-6, gamma))
    B = max(1.0, float(math.exp(np.mean(y - gamma * x))))
    covers = bool(np.all(y <= math.log(B) + gamma * x + math.log1p(policy.cover_rtol)))
    B_cover = max(1.0, float(np.exp(np.max(y - gamma * x))))
    return {"B": B, "gamma": gamma, "covers": covers, "B_cover": B_cover}


def check_condition_B(
    scheme: ScaleFactorScheme,
    K: tuple[float, float],
    h_sequence: Sequence[float],
    grid_size: int,
    policy: TrendPolicy = TrendPolicy(),
    extent: float = DEFAULT_EXTENT,
) -> ConditionReport:
    """(i) ``alpha(h) <= Phi <= B h^gamma`` on ``I_h`` with ``alpha(h)/h -> 1``;
    (ii) ``Phi <= beta_K(h)`` on ``K`` with ``beta_K(h)/h -> 1``."""
    grid = _grid_meta(grid_size, K, extent)
    K = _check_K(scheme, K)
    hs = _check_h_sequence(scheme, h_sequence)
    rows = [_audit_h(scheme, h, grid_size, K, extent) for h in hs]
    notes = [SAMPLING_NOTE, TREND_NOTE]
    verdicts = {}
    if any(r.n_Ih == 0 for r in rows):
        notes.append("sampled I_h is empty for some h; Condition (B)(i) is vacuous there")
        verdicts["B(i)"] = False
        fitted = {}
    else:
        fitted = fit_power_bound(hs, [r.sup_Ih for r in rows], policy)
        alpha_ok = policy.tends_to_zero([r.alpha_ratio - 1.0 for r in rows])
        fitted["alpha_ratio"] = [r.alpha_ratio for r in rows]
        verdicts["B(i)"] = bool(alpha_ok and fitted["covers"])
    if K is not None:
        fitted["beta_ratio"] = [r.beta_ratio for r in rows]
        verdicts["B(ii)"] = policy.tends_to_zero([r.beta_ratio - 1.0 for r in rows])
    else:
        notes.append("no K given; Condition (B)(ii) not audited")
        verdicts["B(ii)"] = False
    verdicts["B"] = verdicts["B(i)"] and verdicts["B(ii)"]
    return ConditionReport("B", rows, verdicts, fitted=fitted, grid=grid, notes=notes)


def check_condition_D(
    scheme: ScaleFactorScheme,
    h_sequence: Sequence[float],
    grid_size: int,
    policy: TrendPolicy = TrendPolicy(),
    extent: float = DEFAULT_EXTENT,
    K: Optional[tuple[float, float]] = None,
) -> ConditionReport:
    """``sup_{I_h} |Phi(y, a_h(y)) - h| = o(h)``."""
    grid = _grid_meta(grid_size, K, extent)
    K = _check_K(scheme, K)
    hs = _check_h_sequence(scheme, h_sequence)
    rows = [_audit_h(scheme, h, grid_size, K, extent) for h in hs]
    notes = [SAMPLING_NOTE, TREND_NOTE]
    if any(r.n_Ih == 0 for r in rows):
        notes.append("sampled I_h is empty for some h; Condition (D) reported as failing")
        ok = False
    else:
        ok = policy.tends_to_zero([r.deviation_Ih / r.h for r in rows])
    return ConditionReport("D", rows, {"D": ok}, grid=grid, notes=notes)
