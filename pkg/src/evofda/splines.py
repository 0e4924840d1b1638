"""Penalized cubic smoothing splines on a clamped B-spline basis.

A curve ``y`` sampled on a grid is represented as ``f(t) = sum_i c_i B_i(t)``
where the coefficients minimize

    sum_d (y_d - f(t_d))**2 + lam * integral f''(t)**2 dt

The minimizer solves ``(B'B + lam * Omega) c = B'y`` with ``B`` the basis
evaluated on the grid and ``Omega`` the Gram matrix of basis second
derivatives.
"""

from __future__ import annotations

import csv
import io
import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import brentq

from .preprocess import HORIZON_DAYS, N_DAYS, DailyCurve

__all__ = [
    "DEGREE",
    "SplineFitError",
    "KnotGrid",
    "SplineFit",
    "MeanBand",
    "SplineSmoother",
    "default_knot_count",
    "make_knot_grid",
    "basis_matrix",
    "penalty_matrix",
    "fit_smoothing_spline",
    "evaluate_spline",
    "mean_curve_with_ci",
    "smoother_for",
]

DEGREE = 3
_ORDER = DEGREE + 1

# 3-point Gauss-Legendre rule on [-1, 1]; exact for polynomials up to degree 5
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)


class SplineFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class KnotGrid:
    interior: tuple[float, ...]
    lower: float = 0.0
    upper: float = float(HORIZON_DAYS)

    def __post_init__(self):
        interior = tuple(float(k) for k in self.interior)
        object.__setattr__(self, "interior", interior)
        if not self.lower < self.upper:
            raise ValueError("knot interval must have lower < upper")
        if any(b <= a for a, b in zip(interior, interior[1:])):
            raise ValueError("interior knots must be strictly increasing")
        if interior and not (self.lower < interior[0] and interior[-1] < self.upper):
            raise ValueError("interior knots must lie strictly inside the interval")

    @property
    def count(self) -> int:
        return len(self.interior)

    @property
    def dimension(self) -> int:
        return self.count + _ORDER

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array((self.lower, *self.interior, self.upper))

    @property
    def full(self) -> np.ndarray:
        """Knot vector with the boundary knots repeated ``DEGREE + 1`` times."""
        return np.concatenate(
            [np.full(_ORDER, self.lower), self.interior, np.full(_ORDER, self.upper)]
        )

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "interior": list(self.interior)}


def default_knot_count(span_days: float, mean_release_gap_days: float) -> int:
    """Interior knot count: one per average release gap, at least 2.

    >>> default_knot_count(730, 56)
    13
    """
    if not mean_release_gap_days > 0:
        raise ValueError("mean release gap must be positive")
    return max(2, int(math.floor(span_days / mean_release_gap_days + 0.5)))


def make_knot_grid(count: int, lower: float = 0.0, upper: float = float(HORIZON_DAYS)) -> KnotGrid:
    """``count`` equally spaced interior knots strictly inside ``[lower, upper]``."""
    if count < 2:
        raise ValueError(f"need at least 2 interior knots, got {count}")
    j = np.arange(1, count + 1)
    return KnotGrid(tuple(lower + (upper - lower) * j / (count + 1)), lower, upper)


def _basis(x: np.ndarray, t: np.ndarray, k: int, deriv: int) -> np.ndarray:
    """All B-spline basis functions (or derivatives) of degree ``k`` at ``x``.

    Cox-de Boor recursion built up to degree ``k - deriv``, then the
    derivative recurrence for the remaining ``deriv`` levels. Intervals are
    half-open on the right except the last non-empty one, which is closed so
    that the right boundary evaluates like its left neighbourhood.
    """
    x = np.asarray(x, dtype=float)
    nonempty = np.nonzero(t[:-1] < t[1:])[0]
    span = np.searchsorted(t, x, side="right") - 1
    span = np.clip(span, nonempty[0], nonempty[-1])
    B = np.zeros((x.size, t.size - 1))
    B[np.arange(x.size), span] = 1.0

    def ratio(num, den):
        out = np.zeros_like(num)
        ok = den != 0
        out[..., ok] = num[..., ok] / den[ok]
        return out

    for p in range(1, k + 1):
        m = t.size - p - 1
        left_den = t[p:p + m] - t[:m]
        right_den = t[p + 1:p + 1 + m] - t[1:1 + m]
        if p <= k - deriv:
            left = ratio((x[:, None] - t[:m]) * B[:, :m], left_den)
            right = ratio((t[p + 1:p + 1 + m] - x[:, None]) * B[:, 1:m + 1], right_den)
        else:
            left = p * ratio(B[:, :m], left_den)
            right = -p * ratio(B[:, 1:m + 1], right_den)
        B = left + right
    return B


def basis_matrix(knots: KnotGrid, grid, deriv: int = 0) -> np.ndarray:
    """Cubic B-spline basis (or its ``deriv``-th derivative) on ``grid``.

    Returns an array of shape ``(len(grid), knots.dimension)``.
    """
    g = np.atleast_1d(np.asarray(grid, dtype=float))
    if g.size and (g.min() < knots.lower or g.max() > knots.upper):
        raise ValueError(f"grid points must lie in [{knots.lower}, {knots.upper}]")
    return _basis(g, knots.full, DEGREE, deriv)


def penalty_matrix(knots: KnotGrid) -> np.ndarray:
    """Roughness penalty ``Omega_ij = integral B_i'' B_j''`` over the interval.

    Products of second derivatives are quadratic between breakpoints, so a
    3-point Gauss rule per segment integrates them exactly.
    """
    bp = knots.breakpoints
    a, b = bp[:-1], bp[1:]
    half = (b - a) / 2
    nodes = (a + b)[:, None] / 2 + half[:, None] * _GL_NODES[None, :]
    weights = half[:, None] * _GL_WEIGHTS[None, :]
    D2 = basis_matrix(knots, nodes.ravel(), deriv=2)
    omega = D2.T @ (weights.ravel()[:, None] * D2)
    return (omega + omega.T) / 2


@dataclass(frozen=True, eq=False)
class SplineFit:
    knots: KnotGrid
    coefficients: np.ndarray
    lam: float
    fitted_values: np.ndarray
    rss: float
    edf: float
    grid: np.ndarray
    project_id: str | None = None
    ridge_added: bool = False

    @property
    def residual_ss(self) -> float:
        """Unpenalized residual sum of squares, recomputed from ``rss``."""
        return self.rss - self.lam * self.roughness

    @property
    def roughness(self) -> float:
        """``integral f''**2`` of the fitted spline."""
        om = smoother_for(self.knots, self.grid).penalty
        return max(0.0, float(self.coefficients @ om @ self.coefficients))

    def to_dict(self) -> dict:
        return {
            "project_id": self.project_id,
            "knots": self.knots.to_dict(),
            "lambda": self.lam,
            "coefficients": [float(c) for c in self.coefficients],
            "effective_df": self.edf,
            "ridge_added": self.ridge_added,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


class SplineSmoother:
    """Basis, penalty and factorizations shared by all fits on one knot grid.

    Arrays are computed once and marked read-only; instances can be shared
    between threads.
    """

    def __init__(self, knots: KnotGrid, grid=None):
        self.knots = knots
        g = np.arange(N_DAYS, dtype=float) if grid is None else np.asarray(grid, dtype=float)
        self.grid = g
        self.basis = basis_matrix(knots, g)
        self.penalty = penalty_matrix(knots)
        self.gram = self.basis.T @ self.basis
        for arr in (self.grid, self.basis, self.penalty, self.gram):
            arr.setflags(write=False)
        self._factors: dict[float, tuple] = {}
        self._lock = threading.Lock()

    def _factor(self, lam: float):
        with self._lock:
            hit = self._factors.get(lam)
        if hit is not None:
            return hit
        A = self.gram + lam * self.penalty
        ridge = False
        try:
            cf = linalg.cho_factor(A, lower=True)
        except linalg.LinAlgError:
            if lam != 0:
                raise SplineFitError(f"normal equations not positive definite at lambda={lam}")
            A = A + 1e-10 * np.trace(A) * np.eye(A.shape[0])
            ridge = True
            try:
                cf = linalg.cho_factor(A, lower=True)
            except linalg.LinAlgError:
                raise SplineFitError("singular normal equations at lambda=0") from None
        with self._lock:
            self._factors[lam] = (cf, ridge)
        return cf, ridge

    def edf(self, lam: float) -> float:
        """Effective degrees of freedom, the trace of the hat matrix."""
        cf, _ = self._factor(float(lam))
        return float(np.trace(linalg.cho_solve(cf, self.gram)))

    def lambda_for_edf(self, target: float) -> float:
        """Smoothing parameter whose fit has ``target`` effective degrees of freedom.

        ``target >= dimension`` gives 0. Targets at or below 2 are not
        attainable at finite lambda and raise.
        """
        dim = self.knots.dimension
        if target >= dim:
            return 0.0
        if target <= 2:
            raise ValueError("effective df must exceed 2 (the affine null space)")
        scale = np.trace(self.gram) / np.trace(self.penalty)

        def f(loglam):
            return self.edf(scale * 10.0**loglam) - target

        lo, hi = -12.0, 12.0
        while f(lo) < 0:
            lo -= 6
        while f(hi) > 0:
            hi += 6
            if hi > 60:
                raise ValueError(f"could not bracket lambda for edf {target}")
        loglam = brentq(f, lo, hi, xtol=1e-12, rtol=1e-12)
        return float(scale * 10.0**loglam)

    def fit(self, y, lam: float, project_id: str | None = None) -> SplineFit:
        lam = float(lam)
        if lam < 0 or not math.isfinite(lam):
            raise ValueError("lambda must be finite and >= 0")
        y = np.asarray(y, dtype=float)
        if y.shape != self.grid.shape:
            raise ValueError(f"expected {self.grid.size} values, got {y.shape}")
        cf, ridge = self._factor(lam)
        c = linalg.cho_solve(cf, self.basis.T @ y)
        fitted = self.basis @ c
        resid = y - fitted
        # c'Omega c is >= 0 in exact arithmetic; clip the rounding residue
        rough = max(0.0, float(c @ self.penalty @ c))
        prss = float(resid @ resid + lam * rough)
        edf = float(np.trace(linalg.cho_solve(cf, self.gram)))
        return SplineFit(
            knots=self.knots,
            coefficients=c,
            lam=lam,
            fitted_values=fitted,
            rss=prss,
            edf=edf,
            grid=self.grid,
            project_id=project_id,
            ridge_added=ridge,
        )

    def objective(self, y, c, lam: float) -> float:
        y = np.asarray(y, dtype=float)
        r = y - self.basis @ c
        return float(r @ r + lam * (c @ self.penalty @ c))


_SMOOTHERS: dict[tuple, SplineSmoother] = {}
_SMOOTHERS_LOCK = threading.Lock()


def smoother_for(knots: KnotGrid, grid=None) -> SplineSmoother:
    """Cached :class:`SplineSmoother` for a knot grid and evaluation grid."""
    g = np.arange(N_DAYS, dtype=float) if grid is None else np.asarray(grid, dtype=float)
    key = (knots, g.tobytes())
    with _SMOOTHERS_LOCK:
        sm = _SMOOTHERS.get(key)
        if sm is None:
            if len(_SMOOTHERS) > 64:
                _SMOOTHERS.clear()
            sm = _SMOOTHERS[key] = SplineSmoother(knots, g)
    return sm


def fit_smoothing_spline(curve, knots: KnotGrid, lam: float, grid=None) -> SplineFit:
    """Fit a penalized cubic smoothing spline.

    Parameters
    ----------
    curve : DailyCurve or array_like
        Values on ``grid``. A :class:`DailyCurve` is fitted on days 0..730.
    knots : KnotGrid
    lam : float
        Smoothing parameter, ``>= 0``.
    grid : array_like, optional
        Sample positions of ``curve``; defaults to ``0, 1, ..., len - 1``.
        For a daily curve a subset of days may be given, in which case the
        curve is sampled there.
    """
    pid = None
    if isinstance(curve, DailyCurve):
        pid = curve.project_id
        values = curve.values
        if grid is not None:
            g = np.asarray(grid, dtype=float)
            values = values[g.astype(int)]
            grid = g
    else:
        values = np.asarray(curve, dtype=float)
        if grid is None:
            grid = np.arange(values.size, dtype=float)
    return smoother_for(knots, grid).fit(values, lam, project_id=pid)


def evaluate_spline(fit: SplineFit, t, deriv: int = 0):
    """Evaluate a fitted spline (or a derivative) at ``t`` (scalar or array)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < fit.knots.lower) or np.any(arr > fit.knots.upper):
        raise ValueError(f"t outside [{fit.knots.lower}, {fit.knots.upper}]")
    vals = basis_matrix(fit.knots, arr.ravel(), deriv) @ fit.coefficients
    if arr.ndim == 0:
        return float(vals[0])
    return vals.reshape(arr.shape)


@dataclass(frozen=True, eq=False)
class MeanBand:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n: int = 0
    extra: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["day", "mean", "lower", "upper"])
        for row in zip(self.grid, self.mean, self.lower, self.upper):
            w.writerow([_fmt_day(row[0]), *(repr(float(v)) for v in row[1:])])
        return buf.getvalue()


def _fmt_day(d) -> str:
    d = float(d)
    return str(int(d)) if d.is_integer() else repr(d)


def mean_curve_with_ci(fits, z: float = 1.96) -> MeanBand:
    """Pointwise cross-project mean of fitted values with a normal 95% band.

    The half-width at each grid point is ``z * s / sqrt(n)`` with ``s`` the
    sample standard deviation across projects.
    """
    fits = list(fits)
    if len(fits) < 2:
        raise ValueError(f"need at least 2 fits for a confidence band, got {len(fits)}")
    ref = fits[0]
    for f in fits[1:]:
        if f.knots != ref.knots or not np.array_equal(f.grid, ref.grid):
            raise ValueError("fits use different knot or evaluation grids")
    Y = np.vstack([f.fitted_values for f in fits])
    n = Y.shape[0]
    mean = Y.mean(axis=0)
    half = z * Y.std(axis=0, ddof=1) / math.sqrt(n)
    return MeanBand(ref.grid.copy(), mean, mean - half, mean + half, n=n)
