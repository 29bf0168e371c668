"""Executable forms of the approximation inequalities and rate claims for K_n.

Each checker returns a :class:`BoundReport`. A check passes when
``lhs <= rhs + tol`` with ``tol = 1e-10 + slack``; the slack is the change of
every grid-estimated modulus on the right-hand side under one grid
refinement (257 -> 513 points), scaled by its coefficient.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.stats import linregress

from .corpus import CorpusFunction, product
from .moduli import DEFAULT_GRID, majorant_of_modulus, modulus, sup_norm_at, unit_grid
from .operator_core import (
    KantorovichOp,
    central_moment_closed,
    kantorovich_apply,
    kantorovich_derivative,
)

BASE_TOL = 1e-10
ZERO_FLOOR = 1e-13

RATE_N_MIN = 64
SLOPE_BAND = 0.15
R2_MIN = 0.98
LITTLE_O_RATIO = 0.1
BOUNDED_NOISE = 0.05


class TheoremId(str, Enum):
    PALTANEA = "PALTANEA"
    UNIFORM_T24 = "UNIFORM_T24"
    SIMULTANEOUS_T25 = "SIMULTANEOUS_T25"
    VORONOVSKAYA_T31 = "VORONOVSKAYA_T31"
    GRUSS_T42 = "GRUSS_T42"
    GV_RATE_T52 = "GV_RATE_T52"
    GV_RATE_T53 = "GV_RATE_T53"

    def __str__(self):
        return self.value


PAIR_THEOREMS = (TheoremId.GRUSS_T42, TheoremId.GV_RATE_T52, TheoremId.GV_RATE_T53)
RATE_THEOREMS = (TheoremId.GV_RATE_T52, TheoremId.GV_RATE_T53)


class HypothesisNotMet(ValueError):
    """The requested (theorem, function, n) cell lies outside the theorem's hypotheses."""


@dataclass
class BoundReport:
    theorem_id: str
    function_id: str
    g_function_id: Optional[str]
    n: int
    lhs: Optional[float]
    rhs: Optional[float]
    margin: Optional[float]
    passed: bool
    status: str
    x_worst: Optional[float]
    grid_points: int
    tol: float = BASE_TOL
    slack: float = 0.0
    r: Optional[int] = None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def make_report(theorem, f_id, g_id, n, lhs, rhs, x_worst, grid, slack=0.0, r=None, note=""
                ) -> BoundReport:
    tol = BASE_TOL + slack
    if rhs is None:
        margin, passed = None, bool(np.isfinite(lhs))
    else:
        margin = rhs - lhs
        passed = bool(lhs <= rhs + tol)
    return BoundReport(
        theorem_id=str(theorem), function_id=f_id, g_function_id=g_id, n=int(n),
        lhs=float(lhs), rhs=None if rhs is None else float(rhs),
        margin=None if margin is None else float(margin), passed=passed,
        status="PASSED" if passed else "FAILED",
        x_worst=None if x_worst is None else float(x_worst),
        grid_points=grid, tol=tol, slack=slack, r=r, note=note,
    )


def skipped_report(theorem, f_id, g_id, n, grid, reason: str) -> BoundReport:
    return BoundReport(str(theorem), f_id, g_id, int(n), None, None, None, True, "SKIPPED",
                       None, grid, note=reason)


# ---------------------------------------------------------------------------
# shared ingredients

def _modulus_term(f, k: int, t: float, grid: int) -> tuple[float, float]:
    """Modulus value and its observed refinement change (0 for closed forms)."""
    t = min(float(t), 1.0)
    est = modulus(f, k, t, grid)
    if est.source == "closed":
        return est.value, 0.0
    finer = modulus(f, k, t, 2 * grid - 1)
    return est.value, abs(finer.value - est.value)


def _derivative_sup(f: CorpusFunction, r: int, grid: int) -> float:
    fr = f.derivative(r)
    xs = np.concatenate([unit_grid(grid), np.asarray(f.breakpoints, float)])
    return float(np.max(np.abs(np.asarray(fr(xs), dtype=float) + 0 * xs)))


def _require_derivatives(f: CorpusFunction, r: int, what: str) -> None:
    if not f.has_derivative(r) or f.smoothness_order < r:
        raise HypothesisNotMet(f"{what} needs {f.id} in C^{r} with declared derivatives")


def _op(n: int, quadrature_order: int) -> KantorovichOp:
    return KantorovichOp(n, quadrature_order)


# ---------------------------------------------------------------------------
# pointwise estimate for positive linear operators

def paltanea_bound(Le0, M1, M2, f, x, h=None, reproduces_linear: bool = False,
                   grid: int = DEFAULT_GRID):
    """Pointwise bound on ``|L(f;x) - f(x)|`` from the operator's first moments at ``x``.

    ``Le0 = L(e_0;x)``, ``M1 = L(e_1 - x;x)``, ``M2 = L((e_1 - x)^2;x)``.
    ``h`` defaults to ``sqrt(M2)``; it must lie in (0, 1/2] unless the
    operator reproduces linear functions.
    """
    if h is None:
        h = math.sqrt(float(M2))
    h = float(h)
    if np.any(np.asarray(M2) < 0):
        raise ValueError("second moment must be non-negative")
    if h <= 0 or (h > 0.5 and not reproduces_linear):
        raise ValueError(f"step h={h} outside (0, 1/2]")
    w1 = modulus(f, 1, min(h, 1.0), grid).value
    w2 = modulus(f, 2, min(h, 1.0), grid).value
    fx = np.asarray(f(x), dtype=float) if isinstance(x, np.ndarray) else float(f(x))
    Le0 = np.asarray(Le0, dtype=float) if isinstance(Le0, np.ndarray) else float(Le0)
    M1 = np.asarray(M1, dtype=float) if isinstance(M1, np.ndarray) else float(M1)
    M2 = np.asarray(M2, dtype=float) if isinstance(M2, np.ndarray) else float(M2)
    return (np.abs(Le0 - 1) * np.abs(fx) + np.abs(M1) / h * w1
            + (Le0 + M2 / (2 * h * h)) * w2)


def paltanea_check(n: int, f: CorpusFunction, grid: int = DEFAULT_GRID,
                   quadrature_order: int = 8) -> BoundReport:
    """Pointwise estimate with the K_n moments and h = 1/sqrt(n), checked at every grid point.

    ``lhs``/``rhs`` are the error and the bound at the point of smallest margin.
    """
    if n < 4:
        raise HypothesisNotMet("h = 1/sqrt(n) <= 1/2 requires n >= 4")
    xs = unit_grid(grid)
    h = 1.0 / math.sqrt(n)
    err = np.abs(kantorovich_apply(_op(n, quadrature_order), f, xs) - f(xs))
    bound = paltanea_bound(1.0, central_moment_closed(n, 1, xs), central_moment_closed(n, 2, xs),
                           f, xs, h=h, grid=grid)
    _, s1 = _modulus_term(f, 1, h, grid)
    _, s2 = _modulus_term(f, 2, h, grid)
    M1 = np.abs(central_moment_closed(n, 1, xs))
    M2 = central_moment_closed(n, 2, xs)
    slack = float(np.max(M1 / h * s1 + (1 + M2 / (2 * h * h)) * s2))
    i = int(np.argmin(bound - err))
    return make_report(TheoremId.PALTANEA, f.id, None, n, err[i], bound[i], xs[i], grid, slack,
                       note=f"sup_error={err.max():.17g}; sup_bound={bound.max():.17g}")


# ---------------------------------------------------------------------------
# uniform and simultaneous approximation

def uniform_bound_t24(n: int, f: CorpusFunction, grid: int = DEFAULT_GRID,
                      quadrature_order: int = 8) -> BoundReport:
    if n < 4:
        raise HypothesisNotMet("the uniform estimate is stated for n >= 4")
    op = _op(n, quadrature_order)
    lhs, xw = sup_norm_at(lambda x: kantorovich_apply(op, f, x) - f(x), grid)
    t = 1.0 / math.sqrt(n)
    w1, s1 = _modulus_term(f, 1, t, grid)
    w2, s2 = _modulus_term(f, 2, t, grid)
    rhs = t / 2 * w1 + 9 / 8 * w2
    return make_report(TheoremId.UNIFORM_T24, f.id, None, n, lhs, rhs, xw, grid,
                       t / 2 * s1 + 9 / 8 * s2)


def simultaneous_bound_t25(n: int, r: int, f: CorpusFunction, grid: int = DEFAULT_GRID,
                           quadrature_order: int = 8) -> BoundReport:
    if n < 4:
        raise HypothesisNotMet("simultaneous approximation is stated for n >= 4")
    if r < 0:
        raise ValueError("derivative order must be non-negative")
    _require_derivatives(f, r, "simultaneous approximation of order r")
    op = _op(n, quadrature_order)
    fr = f.derivative_function(r)
    lhs, xw = sup_norm_at(lambda x: kantorovich_derivative(op, f, r, x) - fr(x), grid)
    t = 1.0 / math.sqrt(n)
    w1, s1 = _modulus_term(fr, 1, t, grid)
    w2, s2 = _modulus_term(fr, 2, t, grid)
    norm = _derivative_sup(f, r, grid)
    rhs = r * (r + 1) / (2 * n) * norm + (r + 1) * t / 2 * w1 + 9 / 8 * w2
    return make_report(TheoremId.SIMULTANEOUS_T25, f.id, None, n, lhs, rhs, xw, grid,
                       (r + 1) * t / 2 * s1 + 9 / 8 * s2, r=r)


# ---------------------------------------------------------------------------
# quantitative Voronovskaya estimate

def voronovskaya_residual(n: int, f: CorpusFunction, quadrature_order: int = 8):
    """``x -> n (K_n f - f)(x) - (1/2)(X f')'(x)`` with ``X = x(1 - x)``."""
    op = _op(n, quadrature_order)
    d1, d2 = f.derivative(1), f.derivative(2)

    def residual(x):
        limit = 0.5 * (1 - 2 * x) * d1(x) + 0.5 * x * (1 - x) * d2(x)
        return n * (kantorovich_apply(op, f, x) - f(x)) - limit

    return residual


def voronovskaya_bound_t31(n: int, f: CorpusFunction, grid: int = DEFAULT_GRID,
                           quadrature_order: int = 8) -> BoundReport:
    if n < 1:
        raise ValueError("n must be >= 1")
    _require_derivatives(f, 2, "the Voronovskaya estimate")
    lhs, xw = sup_norm_at(voronovskaya_residual(n, f, quadrature_order), grid)
    s = 1.0 / math.sqrt(n + 1)
    f2 = f.derivative_function(2)
    w1, s1 = _modulus_term(f2, 1, s, grid)
    w2, s2 = _modulus_term(f2, 2, s, grid)
    rhs = (2 / (3 * (n + 1)) * (0.75 * _derivative_sup(f, 1, grid) + _derivative_sup(f, 2, grid))
           + 9 / 32 * (2 * s * w1 + w2))
    return make_report(TheoremId.VORONOVSKAYA_T31, f.id, None, n, lhs, rhs, xw, grid,
                       9 / 32 * (2 * s * s1 + s2))


# ---------------------------------------------------------------------------
# Chebyshev-Gruss inequality and Gruss-Voronovskaya residuals

def gruss_difference(n: int, f: CorpusFunction, g: CorpusFunction, quadrature_order: int = 8):
    """``x -> K_n(fg; x) - K_n(f; x) K_n(g; x)``."""
    op = _op(n, quadrature_order)
    fg = product(f, g)

    def diff(x):
        return kantorovich_apply(op, fg, x) - kantorovich_apply(op, f, x) * kantorovich_apply(op, g, x)

    return diff


def gruss_bound_t42(n: int, f: CorpusFunction, g: CorpusFunction, grid: int = DEFAULT_GRID,
                    quadrature_order: int = 8) -> BoundReport:
    if n < 1:
        raise ValueError("n must be >= 1")
    lhs, xw = sup_norm_at(gruss_difference(n, f, g, quadrature_order), grid)
    t = 2.0 * math.sqrt(1.0 / (2 * (n + 1)))
    wf = majorant_of_modulus(f, t, grid)
    wg = majorant_of_modulus(g, t, grid)
    slack = 0.0
    if f.closed_modulus(1) is None or g.closed_modulus(1) is None:
        fine = 2 * grid - 1
        slack = abs(0.25 * majorant_of_modulus(f, t, fine) * majorant_of_modulus(g, t, fine)
                    - 0.25 * wf * wg)
    return make_report(TheoremId.GRUSS_T42, f.id, g.id, n, lhs, 0.25 * wf * wg, xw, grid, slack)


def gv_residual_function(n: int, f: CorpusFunction, g: CorpusFunction, quadrature_order: int = 8):
    """``x -> n [K_n(fg) - K_n f K_n g](x) - X f'(x) g'(x)``."""
    _require_derivatives(f, 1, "the Gruss-Voronovskaya residual")
    _require_derivatives(g, 1, "the Gruss-Voronovskaya residual")
    diff = gruss_difference(n, f, g, quadrature_order)
    d1f, d1g = f.derivative(1), g.derivative(1)

    def residual(x):
        return n * diff(x) - x * (1 - x) * d1f(x) * d1g(x)

    return residual


def gv_residual_at(n: int, f: CorpusFunction, g: CorpusFunction, grid: int = DEFAULT_GRID,
                   quadrature_order: int = 8) -> tuple[float, float]:
    return sup_norm_at(gv_residual_function(n, f, g, quadrature_order), grid)


def gv_residual(n: int, f: CorpusFunction, g: CorpusFunction, grid: int = DEFAULT_GRID,
                quadrature_order: int = 8) -> float:
    return gv_residual_at(n, f, g, grid, quadrature_order)[0]


# ---------------------------------------------------------------------------
# rates

@dataclass(frozen=True)
class RateFit:
    samples: tuple
    slope: float
    intercept: float
    r_squared: float
    dropped: tuple = ()

    def to_dict(self) -> dict:
        return {
            "samples": [[int(n), float(e)] for n, e in self.samples],
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "dropped": [[int(n), float(e)] for n, e in self.dropped],
        }


def rate_fit(samples: Sequence[tuple[int, float]], floor: float = ZERO_FLOOR) -> RateFit:
    """Least-squares line through ``(log n, log error)``.

    Samples with error below ``floor`` count as numerically zero and are
    dropped (and listed in ``dropped``).
    """
    kept = tuple((int(n), float(e)) for n, e in samples if e >= floor)
    dropped = tuple((int(n), float(e)) for n, e in samples if not e >= floor)
    if len(kept) < 3:
        raise ValueError(f"need at least 3 samples with error >= {floor}, got {len(kept)}")
    ns = np.log([n for n, _ in kept])
    es = np.log([e for _, e in kept])
    fit = linregress(ns, es)
    r2 = float(min(1.0, max(0.0, fit.rvalue ** 2)))
    return RateFit(kept, float(fit.slope), float(fit.intercept), r2, dropped)


@dataclass
class RateAssessment:
    theorem_id: str
    function_id: str
    g_function_id: str
    rate_class: str
    passed: bool
    samples: list
    fit: Optional[RateFit] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "function_id": self.function_id,
            "g_function_id": self.g_function_id,
            "rate_class": self.rate_class,
            "passed": self.passed,
            "samples": [[int(n), float(e)] for n, e in self.samples],
            "fit": None if self.fit is None else self.fit.to_dict(),
            "note": self.note,
        }


def rate_class_for(smoothness: int) -> str:
    if smoothness >= 4:
        return "O(1/n)"
    if smoothness == 3:
        return "O(1/sqrt(n))"
    if smoothness == 2:
        return "o(1)"
    raise HypothesisNotMet("the Gruss-Voronovskaya rate classes need f, g in C^2")


def _window(samples):
    return sorted((int(n), float(e)) for n, e in samples if n >= RATE_N_MIN)


def assess_gv_rate(samples: Sequence[tuple[int, float]], smoothness: int,
                   f_id: str = "", g_id: str = "") -> RateAssessment:
    """Classify Gruss-Voronovskaya residuals over n >= 64 against the pair's smoothness.

    C^4: slope -1 +- 0.15 with r^2 >= 0.98. C^3: slope <= -0.35.
    C^2: monotone decay to below 10% of the first residual.
    """
    cls = rate_class_for(smoothness)
    window = _window(samples)
    out = RateAssessment(str(TheoremId.GV_RATE_T52), f_id, g_id, cls, False, window)
    if len(window) < 3:
        out.note = f"need at least 3 samples with n >= {RATE_N_MIN}"
        return out
    if all(e < ZERO_FLOOR for _, e in window):
        out.passed, out.note = True, "residual numerically zero"
        return out
    if cls == "o(1)":
        errs = [e for _, e in window]
        monotone = all(b <= a for a, b in zip(errs, errs[1:]))
        ratio = errs[-1] / errs[0]
        out.passed = monotone and ratio < LITTLE_O_RATIO
        out.note = f"monotone={monotone}; last/first={ratio:.6g}"
        return out
    try:
        fit = rate_fit(window)
    except ValueError as exc:
        out.note = str(exc)
        return out
    out.fit = fit
    if cls == "O(1/n)":
        out.passed = abs(fit.slope + 1.0) <= SLOPE_BAND and fit.r_squared >= R2_MIN
    else:
        out.passed = fit.slope <= -0.5 + SLOPE_BAND
    out.note = f"slope={fit.slope:.6g}; r2={fit.r_squared:.6g}"
    return out


def assess_boundedness(samples: Sequence[tuple[int, float]], f_id: str = "", g_id: str = ""
                       ) -> RateAssessment:
    """``n * sup|K_n(fg) - K_nf K_ng - (X/n) f'g'|`` over n >= 64: non-increasing
    up to 5% noise step to step and never above 105% of the first value."""
    window = _window(samples)
    out = RateAssessment(str(TheoremId.GV_RATE_T53), f_id, g_id, "bounded", False, window)
    if len(window) < 2:
        out.note = f"need at least 2 samples with n >= {RATE_N_MIN}"
        return out
    errs = [e for _, e in window]
    steps = all(b <= (1 + BOUNDED_NOISE) * a + ZERO_FLOOR for a, b in zip(errs, errs[1:]))
    bounded = max(errs) <= (1 + BOUNDED_NOISE) * errs[0] + ZERO_FLOOR
    out.passed = steps and bounded
    out.note = f"non_increasing={steps}; bounded={bounded}; max={max(errs):.6g}"
    return out


def pair_smoothness(f: CorpusFunction, g: CorpusFunction) -> int:
    return min(f.smoothness_order, g.smoothness_order)
