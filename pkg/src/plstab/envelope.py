"""Concave/convex envelopes of level profiles and interpolation checks.

On the log-level axis ``T = log t``, near-equality forces the boundary
functions of a triple's superlevel intervals to be almost concave (right
boundaries) or almost convex (left boundaries).  This module fits those
envelopes and quantifies almost-concavity through two interpolation
checks:

* the *three-point check* compares profile half-widths of f and g at two
  levels against their interpolated level,
* the *four-point check* tests a single sampled function psi(T) at the pair
  of conjugate combinations

      T_{1,2} = (T_1 + (1-lam) T_2) / (2 - lam),
      T_{2,1} = (lam T_1 + T_2)     / (2 - lam),

  which satisfy T_{1,2} + T_{2,1} = T_1 + T_2, requiring
  ``psi(T_1) + psi(T_2) <= psi(T_{1,2}) + psi(T_{2,1}) + sigma``.

Both checks snap the interpolated points to the sampling grid and grant a
slack proportional to the actual snap distance times the local Lipschitz
constant (max adjacent difference), so exactly concave data never
produces false violations at sigma = 0, and points that need no snapping
get no slack at all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .gridfn import DomainError
from .profiles import LevelProfile

__all__ = [
    "EnvelopePair",
    "ViolationReport",
    "least_concave_majorant",
    "greatest_convex_minorant",
    "monotonize",
    "three_point_check",
    "four_point_check",
]


@dataclass(frozen=True)
class EnvelopePair:
    """Convex lower / concave upper boundary fits on a log-level grid.

    Attributes:
        T: Increasing log-levels.
        lower: Convex nondecreasing fit of the left boundary.
        upper: Concave nonincreasing fit of the right boundary.
        fit_error_lower: Max absolute gap to the fitted points (lower).
        fit_error_upper: Max absolute gap to the fitted points (upper).
    """

    T: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    fit_error_lower: float = 0.0
    fit_error_upper: float = 0.0

    def __post_init__(self) -> None:
        if not (self.T.size == self.lower.size == self.upper.size):
            raise DomainError("envelope arrays must share one length")
        if self.T.size < 2:
            raise DomainError("envelope grid needs at least two points")
        if not np.all(np.diff(self.T) > 0):
            raise DomainError("T must be strictly increasing")

    @property
    def domain(self) -> tuple[float, float]:
        return (float(self.T[0]), float(self.T[-1]))


def _upper_hull(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the upper convex hull of points sorted by x.

    Standard monotone chain: keep only clockwise turns, popping the middle
    point whenever the chain turns counterclockwise or runs collinear.
    """
    keep_x: list[float] = []
    keep_y: list[float] = []
    for px, py in zip(x, y):
        while len(keep_x) >= 2:
            ax, ay = keep_x[-2], keep_y[-2]
            bx, by = keep_x[-1], keep_y[-1]
            cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
            if cross >= 0:
                keep_x.pop()
                keep_y.pop()
            else:
                break
        keep_x.append(px)
        keep_y.append(py)
    return np.asarray(keep_x), np.asarray(keep_y)


def least_concave_majorant(
    T: np.ndarray, psi: np.ndarray, valid: np.ndarray | None = None
) -> np.ndarray:
    """Smallest concave function dominating ``psi`` on its valid points.

    The hull is computed on the valid points and evaluated on the whole
    grid: linear interpolation between hull vertices inside the valid
    range and linear extrapolation with the end slopes outside it, so the
    returned samples are concave on the entire grid.

    Args:
        T: Strictly increasing sample points.
        psi: Sampled values (entries at invalid points are ignored and may
            be NaN).
        valid: Optional mask of usable points; defaults to finite entries.

    Returns:
        Array of majorant values on all of ``T``.

    Raises:
        DomainError: If fewer than two points are valid.
    """
    T = np.asarray(T, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if T.size != psi.size:
        raise DomainError("T and psi must have equal length")
    if T.size >= 2 and not np.all(np.diff(T) > 0):
        raise DomainError("T must be strictly increasing")
    if valid is None:
        valid = np.isfinite(psi)
    else:
        valid = np.asarray(valid, dtype=bool) & np.isfinite(psi)
    if valid.sum() < 2:
        raise DomainError("least_concave_majorant needs at least two valid points")
    hx, hy = _upper_hull(T[valid], psi[valid])
    out = np.interp(T, hx, hy)
    if hx.size >= 2:
        s0 = (hy[1] - hy[0]) / (hx[1] - hx[0])
        s1 = (hy[-1] - hy[-2]) / (hx[-1] - hx[-2])
    else:
        s0 = s1 = 0.0
    lo = T < hx[0]
    hi = T > hx[-1]
    out[lo] = hy[0] + s0 * (T[lo] - hx[0])
    out[hi] = hy[-1] + s1 * (T[hi] - hx[-1])
    return out


def greatest_convex_minorant(
    T: np.ndarray, psi: np.ndarray, valid: np.ndarray | None = None
) -> np.ndarray:
    """Largest convex function below ``psi`` on its valid points.

    Implemented by duality: ``-least_concave_majorant(T, -psi)``.
    """
    return -least_concave_majorant(T, -np.asarray(psi, dtype=float), valid)


def monotonize(env: np.ndarray, direction: str) -> np.ndarray:
    """Smallest monotone majorant of a sampled concave function.

    For concave input the result is concave again and coincides with the
    input on one side of its argmax while staying constant at the max on
    the other side:

    * ``direction="nonincreasing"``: running maximum from the right
      (constant at the max left of the argmax, equal to env to its right).
    * ``direction="nondecreasing"``: running maximum from the left.

    To monotonize a *convex* sample u (e.g. a fitted left boundary),
    negate: ``-monotonize(-u, "nonincreasing")`` is the nondecreasing
    convex version plateauing at the minimum.
    """
    env = np.asarray(env, dtype=float)
    if direction == "nonincreasing":
        return np.maximum.accumulate(env[::-1])[::-1]
    if direction == "nondecreasing":
        return np.maximum.accumulate(env)
    raise DomainError(f"unknown direction {direction!r}")


@dataclass(frozen=True)
class ViolationReport:
    """Outcome of an interpolation check.

    Attributes:
        count: Number of violating tuples.
        checked: Number of tuples examined.
        max_excess: Largest violation beyond sigma and the snap slack
            (0.0 when count == 0).
        worst: Grid coordinates of the worst tuple (levels for the
            three-point check, T values for the four-point check), or None.
    """

    count: int
    checked: int
    max_excess: float
    worst: tuple[float, ...] | None

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "checked": self.checked,
            "max_excess": self.max_excess,
            "worst_quadruple": list(self.worst) if self.worst else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _lipschitz(y: np.ndarray, valid: np.ndarray) -> float:
    """Max adjacent difference over consecutive valid samples."""
    idx = np.flatnonzero(valid)
    if idx.size < 2:
        return 0.0
    vals = y[idx]
    adj = np.abs(np.diff(vals)) / np.maximum(np.diff(idx), 1)
    return float(adj.max())


def three_point_check(
    profile_a: LevelProfile,
    profile_b: LevelProfile,
    profile_c: LevelProfile,
    lam: float,
    sigma: float = 0.0,
) -> ViolationReport:
    """Half-width interpolation check between two profiles.

    With half-widths ``a(T) = (right-left)/2`` of profile_a and ``b(T)``
    of profile_b on a shared geometric level grid, checks for all usable
    level pairs (R, S) with T = (1-lam) R + lam S (snapped to the grid):

        (1-lam) a(R) + lam b(S) <= (1-lam) a(T) + lam b(T) + sigma + slack.

    ``profile_c`` (the combined function's profile) contributes validity
    at the interpolated level: all of a, b, c must be usable at T.  The
    slack is the snap distance times the local Lipschitz constants of the
    half-width samples, so unsnapped grid points get none.
    """
    levels = profile_a.levels
    for other in (profile_b, profile_c):
        if other.levels.size != levels.size or not np.allclose(
            other.levels, levels, rtol=1e-9, atol=0.0
        ):
            raise DomainError("three_point_check requires one shared level grid")
    n = levels.size
    if n < 2:
        raise DomainError("need at least two levels")
    logs = np.log(levels)
    dT = np.diff(logs)
    if not np.allclose(dT, dT[0], rtol=1e-6, atol=0.0):
        raise DomainError("three_point_check requires a geometric level grid")
    wa = 0.5 * (profile_a.right - profile_a.left)
    wb = 0.5 * (profile_b.right - profile_b.left)
    ua = profile_a.usable()
    ub = profile_b.usable()
    uc = profile_c.usable()
    la = _lipschitz(wa, ua)
    lb = _lipschitz(wb, ub)
    scale = 1.0 + max(
        float(np.nanmax(np.abs(wa[ua]))) if ua.any() else 0.0,
        float(np.nanmax(np.abs(wb[ub]))) if ub.any() else 0.0,
    )
    guard = 1e-12 * scale
    count = 0
    checked = 0
    max_excess = 0.0
    worst = None
    jj = np.arange(n, dtype=float)
    for i in range(n):
        if not ua[i]:
            continue
        u = (1.0 - lam) * i + lam * jj
        k = np.clip(np.floor(u + 0.5).astype(np.int64), 0, n - 1)
        ok = ub & ua[k] & ub[k] & uc[k]
        if not ok.any():
            continue
        j = np.flatnonzero(ok)
        kk = k[j]
        snap = np.abs(u[j] - kk)
        slack = (la + lb) * snap
        lhs = (1.0 - lam) * wa[i] + lam * wb[j]
        rhs = (1.0 - lam) * wa[kk] + lam * wb[kk]
        excess = lhs - rhs - sigma - slack
        checked += j.size
        bad = excess > guard
        nbad = int(bad.sum())
        if nbad:
            count += nbad
            w = int(np.argmax(excess[bad]))
            if excess[bad][w] > max_excess:
                max_excess = float(excess[bad][w])
                jw = j[bad][w]
                worst = (float(levels[i]), float(levels[jw]), float(levels[k[jw]]))
    return ViolationReport(count=count, checked=checked, max_excess=max_excess, worst=worst)


def four_point_check(
    T: np.ndarray,
    psi: np.ndarray,
    lam: float,
    sigma: float = 0.0,
    valid: np.ndarray | None = None,
    max_points: int = 4096,
) -> ViolationReport:
    """Conjugate-pair interpolation check of a sampled function.

    For every valid index pair i <= j, forms the conjugate combinations
    ``T_{1,2} = (T_i + (1-lam) T_j)/(2-lam)`` and ``T_{2,1} = ((1-lam) T_i +
    T_j)/(2-lam)`` (which sum to ``T_i + T_j``, so affine samples saturate),
    snaps them to the uniform grid, and requires

        psi_i + psi_j <= psi[k12] + psi[k21] + sigma + slack,

    where the slack is the local Lipschitz constant (max adjacent
    difference of psi over valid points) times the total snap distance of
    the two combinations.  Violations are counted only when all four
    points are valid.

    Raises:
        DomainError: If the grid is not uniform or exceeds ``max_points``.
    """
    T = np.asarray(T, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if T.size != psi.size:
        raise DomainError("T and psi must have equal length")
    n = T.size
    if n > max_points:
        raise DomainError(f"four_point_check limited to {max_points} points, got {n}")
    if n < 2:
        raise DomainError("need at least two points")
    dT = np.diff(T)
    if not np.allclose(dT, dT[0], rtol=1e-9, atol=0.0):
        raise DomainError("four_point_check requires a uniform grid")
    if valid is None:
        valid = np.isfinite(psi)
    else:
        valid = np.asarray(valid, dtype=bool) & np.isfinite(psi)
    lip = _lipschitz(psi, valid)
    idx = np.flatnonzero(valid)
    guard = 1e-12 * (1.0 + float(np.max(np.abs(psi[idx]))) if idx.size else 1.0)
    count = 0
    checked = 0
    max_excess = 0.0
    worst = None
    denom = 2.0 - lam
    for pos, i in enumerate(idx):
        j = idx[pos:]
        u12 = (i + (1.0 - lam) * j) / denom
        u21 = ((1.0 - lam) * i + j) / denom
        k12 = np.clip(np.floor(u12 + 0.5).astype(np.int64), 0, n - 1)
        k21 = np.clip(np.floor(u21 + 0.5).astype(np.int64), 0, n - 1)
        ok = valid[k12] & valid[k21]
        if not ok.any():
            continue
        j = j[ok]
        k12 = k12[ok]
        k21 = k21[ok]
        snap = np.abs(u12[ok] - k12) + np.abs(u21[ok] - k21)
        slack = lip * snap
        excess = psi[i] + psi[j] - psi[k12] - psi[k21] - sigma - slack
        checked += j.size
        bad = excess > guard
        nbad = int(bad.sum())
        if nbad:
            count += nbad
            w = int(np.argmax(excess[bad]))
            if excess[bad][w] > max_excess:
                max_excess = float(excess[bad][w])
                worst = (
                    float(T[i]),
                    float(T[j[bad][w]]),
                    float(T[k12[bad][w]]),
                    float(T[k21[bad][w]]),
                )
    return ViolationReport(count=count, checked=checked, max_excess=max_excess, worst=worst)
