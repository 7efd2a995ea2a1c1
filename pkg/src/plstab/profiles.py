"""Level-set profiles of grid functions and their regularization.

For a grid function f and a level t, the strict superlevel set
``{f > t}`` is an exact union of cells.  Its convex hull is an interval
``(left(t), right(t))`` and the *hull deficit* ``(right - left) - measure``
measures how far the superlevel set is from being an interval.

A :class:`LevelProfile` stores these quantities over a geometric grid of
levels.  The downstream reconstruction pipeline

1. marks *good* levels, where the measures of the three superlevel sets of
   a triple nearly satisfy the additive relation forced by near-equality,
2. *regularizes* the profile so the recorded intervals are nested
   (left boundary nondecreasing, right boundary nonincreasing in the
   level), and
3. rebuilds a *bubble*: the function whose superlevel set at each recorded
   level is exactly the recorded interval.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .gridfn import DomainError, GridFunction
from .plcore import PLTriple

__all__ = [
    "LevelProfile",
    "GoodLevelReport",
    "level_grid",
    "extract_profile",
    "good_levels",
    "regularize",
    "build_bubble",
    "write_profile_csv",
]


def level_grid(floor: float, top: float, count: int = 512) -> np.ndarray:
    """Geometric grid of ``count`` levels from ``floor`` to ``top`` inclusive."""
    if not (np.isfinite(floor) and floor > 0):
        raise DomainError(f"floor must be positive, got {floor}")
    if not (np.isfinite(top) and top > floor):
        raise DomainError(f"top must exceed floor, got {top} <= {floor}")
    if count < 2:
        raise DomainError("level count must be at least 2")
    return np.geomspace(floor, top, count)


@dataclass(frozen=True)
class LevelProfile:
    """Superlevel interval data of one function over a grid of levels.

    Attributes:
        levels: Increasing positive levels.
        left: Left hull endpoint per level (NaN when the set is empty).
        right: Right hull endpoint per level (NaN when empty).
        valid: Per-level usability mask.  Freshly extracted profiles mark
            exactly the nonempty levels; the pipeline intersects this with
            the good-level mask before regularizing.
        hull_deficit: Hull length minus superlevel measure (NaN when
            empty, 0 after regularization).
        regularized: True once the boundaries have been made monotone.
    """

    levels: np.ndarray
    left: np.ndarray
    right: np.ndarray
    valid: np.ndarray
    hull_deficit: np.ndarray
    regularized: bool = False

    def __post_init__(self) -> None:
        n = self.levels.size
        for name in ("left", "right", "valid", "hull_deficit"):
            if getattr(self, name).size != n:
                raise DomainError(f"profile field {name} has wrong length")
        if n >= 2 and not np.all(np.diff(self.levels) > 0):
            raise DomainError("levels must be strictly increasing")
        if np.any(self.levels <= 0):
            raise DomainError("levels must be positive")

    @property
    def nonempty(self) -> np.ndarray:
        """Mask of levels whose recorded interval exists."""
        return ~np.isnan(self.left)

    @property
    def log_levels(self) -> np.ndarray:
        return np.log(self.levels)

    def usable(self) -> np.ndarray:
        """Levels that are both valid and nonempty."""
        return self.valid & self.nonempty

    def with_valid(self, valid: np.ndarray) -> "LevelProfile":
        return replace(self, valid=np.asarray(valid, dtype=bool))


def extract_profile(f: GridFunction, levels: np.ndarray) -> LevelProfile:
    """Hull endpoints and hull deficits of ``{f > t}`` for each level.

    Levels at or above the sup norm produce empty sets (NaN endpoints,
    valid=False).  Measures are exact cell counts times the step.
    """
    levels = np.asarray(levels, dtype=float)
    n = levels.size
    left = np.full(n, np.nan)
    right = np.full(n, np.nan)
    deficit = np.full(n, np.nan)
    vals = f.values
    # Sorted copy gives the superlevel *measure* per level in one shot.
    sorted_vals = np.sort(vals)
    counts = vals.size - np.searchsorted(sorted_vals, levels, side="right")
    for k, t in enumerate(levels):
        if counts[k] == 0:
            continue
        idx = np.flatnonzero(vals > t)
        lo = f.origin + idx[0] * f.step
        hi = f.origin + (idx[-1] + 1) * f.step
        left[k] = lo
        right[k] = hi
        deficit[k] = (hi - lo) - counts[k] * f.step
    valid = ~np.isnan(left)
    return LevelProfile(levels, left, right, valid, deficit)


@dataclass(frozen=True)
class GoodLevelReport:
    """Levels where a triple's superlevel measures are additively consistent.

    A level t is *good* when

        | m_h(t) - (1-lam) * m_f(t) - lam * m_g(t) | <= threshold,

    with ``m`` the strict superlevel measure.  Near equality, bad levels
    carry little mass, so the reconstruction discards them.

    Attributes:
        mask: Per-level good flag.
        excess: Measured absolute mismatch per level.
        threshold: The threshold used.
        bad_level_measure: Total level-measure ``sum of dt`` over bad
            levels (trapezoidal cell widths on the level axis).
    """

    mask: np.ndarray
    excess: np.ndarray
    threshold: float
    bad_level_measure: float


def default_good_threshold(tau: float, epsilon: float, int_h: float) -> float:
    """Theory-guided default ``tau**(-3/2) * epsilon**(1/4)`` scaled by mass."""
    eps = max(float(epsilon), 0.0)
    return float(tau ** (-1.5) * eps**0.25 * int_h)


def good_levels(
    triple: PLTriple, levels: np.ndarray, threshold: float | None = None
) -> GoodLevelReport:
    """Mark levels where the three superlevel measures nearly add up.

    Args:
        triple: The candidate triple (h may be canonical or supplied).
        levels: Increasing positive levels.
        threshold: Absolute measure tolerance; when None, a default of
            ``tau**(-3/2) * epsilon**(1/4) * int_h`` is used with epsilon
            the measured deficit (clamped at 0).
    """
    from .plcore import deficit as _deficit

    levels = np.asarray(levels, dtype=float)
    if threshold is None:
        rep = _deficit(triple)
        threshold = default_good_threshold(triple.tau, rep.epsilon, rep.int_h)
    lam = triple.lam

    def measures(f: GridFunction) -> np.ndarray:
        sorted_vals = np.sort(f.values)
        counts = f.values.size - np.searchsorted(sorted_vals, levels, side="right")
        return counts * f.step

    mf = measures(triple.f)
    mg = measures(triple.g)
    mh = measures(triple.h)
    excess = np.abs(mh - (1.0 - lam) * mf - lam * mg)
    mask = excess <= threshold
    # Width of each level cell on the level axis (for the bad-mass figure).
    widths = np.empty(levels.size)
    if levels.size > 1:
        mids = 0.5 * (levels[1:] + levels[:-1])
        widths[0] = mids[0] - levels[0]
        widths[-1] = levels[-1] - mids[-1]
        if levels.size > 2:
            widths[1:-1] = np.diff(mids)
    else:
        widths[0] = 0.0
    bad_measure = float(widths[~mask].sum())
    return GoodLevelReport(
        mask=mask, excess=excess, threshold=float(threshold), bad_level_measure=bad_measure
    )


def regularize(profile: LevelProfile) -> LevelProfile:
    """Make the recorded intervals nested by combining valid levels above.

    For each level t the regularized interval is the hull of the recorded
    intervals over all *usable* (valid and nonempty) levels at or above t:

        left~(t)  = min { left(s)  : s >= t usable },
        right~(t) = max { right(s) : s >= t usable }.

    Levels with no usable level at or above them stay empty.  The output
    boundaries are monotone (left nondecreasing, right nonincreasing in
    the level), every assigned level is marked valid, hull deficits are 0
    by construction, and the operation is idempotent.

    Raises:
        DomainError: If no level is usable.
    """
    usable = profile.usable()
    if not usable.any():
        raise DomainError("regularize requires at least one valid nonempty level")
    n = profile.levels.size
    left = np.full(n, np.nan)
    right = np.full(n, np.nan)
    run_left = np.inf
    run_right = -np.inf
    assigned = np.zeros(n, dtype=bool)
    for k in range(n - 1, -1, -1):
        if usable[k]:
            run_left = min(run_left, profile.left[k])
            run_right = max(run_right, profile.right[k])
        if np.isfinite(run_left):
            left[k] = run_left
            right[k] = run_right
            assigned[k] = True
    deficit = np.where(assigned, 0.0, np.nan)
    return LevelProfile(
        levels=profile.levels,
        left=left,
        right=right,
        valid=assigned,
        hull_deficit=deficit,
        regularized=True,
    )


def build_bubble(
    profile: LevelProfile,
    floor_level: float,
    step: float | None = None,
    window: tuple[float, float] | None = None,
) -> GridFunction:
    """Rebuild the function whose superlevel sets are the recorded intervals.

    For a regularized profile with nested intervals ``(a_k, b_k)`` at
    levels ``t_k >= floor_level``, returns the grid function

        fbar(x) = max { t_k : a_k <= x < b_k },   0 below the floor,

    so that ``superlevel(fbar, t)`` reproduces ``(a(t), b(t))`` up to one
    cell at every recorded level at or above the floor.  Values are
    quantized to the level grid by construction.

    Args:
        profile: A regularized profile.
        floor_level: Levels below this are dropped.
        step: Output cell width; defaults to (widest interval)/2048.
        window: Output window; defaults to the widest recorded interval.

    A degenerate profile (no usable level at or above the floor) produces
    the zero function on the fallback window.

    Raises:
        DomainError: If the profile is not regularized.
    """
    if not profile.regularized:
        raise DomainError("build_bubble requires a regularized profile")
    keep = profile.usable() & (profile.levels >= floor_level)
    lv = profile.levels[keep]
    a = profile.left[keep]
    b = profile.right[keep]
    if keep.any():
        lo, hi = float(a.min()), float(b.max())
    else:
        # Degenerate profile (nothing recorded at or above the floor):
        # the rebuilt function is identically zero.
        usable = profile.usable()
        if usable.any():
            lo = float(profile.left[usable].min())
            hi = float(profile.right[usable].max())
        else:
            lo, hi = 0.0, 1.0
    if window is not None:
        lo, hi = float(window[0]), float(window[1])
    if step is None:
        step = (hi - lo) / 2048.0 if hi > lo else 1.0
    n = max(1, int(np.ceil((hi - lo) / step - 1e-9)))
    centers = lo + step * (np.arange(n) + 0.5)
    out = np.zeros(n)
    # Levels ascend, intervals are nested: later (higher) levels overwrite.
    for t, ak, bk in zip(lv, a, b):
        mask = (centers >= ak) & (centers < bk)
        out[mask] = t
    return GridFunction(lo, step, out)


def write_profile_csv(profile: LevelProfile, path: str | Path) -> None:
    """Write a profile as CSV with one row per level.

    Columns: level, log_level, left, right, hull_deficit, valid.
    Empty levels leave left/right/hull_deficit blank; valid is 0/1.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "log_level", "left", "right", "hull_deficit", "valid"])
        for k in range(profile.levels.size):
            lv = profile.levels[k]
            row = [repr(float(lv)), repr(float(np.log(lv)))]
            for arr in (profile.left, profile.right, profile.hull_deficit):
                v = arr[k]
                row.append("" if np.isnan(v) else repr(float(v)))
            row.append(str(int(profile.valid[k])))
            writer.writerow(row)
