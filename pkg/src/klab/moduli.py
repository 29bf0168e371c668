"""Moduli of smoothness, least concave majorants and grid sup-norms.

Grid estimates of a supremum are lower bounds; every estimate carries the
grid size it was computed on so callers can judge the one-sided error.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Sequence

import numpy as np

H_STEPS = 128
HULL_NODES = 129
DEFAULT_GRID = 257


@dataclass(frozen=True)
class ModulusEstimate:
    order: int
    t: float
    value: float
    grid_points: int
    source: str = "grid"      # "grid" or "closed"
    bias: str = "lower"


def _difference(f: Callable, x: np.ndarray, h: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros(np.broadcast(x, h).shape)
    for j in range(k + 1):
        out += (-1) ** (k - j) * comb(k, j) * np.asarray(f(x + j * h), dtype=float)
    return out


def _sample_points(h: np.ndarray, k: int, grid: int, breakpoints: Sequence[float]) -> np.ndarray:
    """Equispaced x over [0, 1 - k h] per row, plus the points putting a kink on a stencil node."""
    span = np.clip(1.0 - k * h, 0.0, None)
    x = span[:, None] * np.linspace(0.0, 1.0, grid)[None, :]
    extra = [np.clip(b - j * h, 0.0, span) for b in breakpoints for j in range(k + 1)]
    if extra:
        x = np.concatenate([x, np.stack(extra, axis=1)], axis=1)
    return x


@lru_cache(maxsize=65536)
def _grid_modulus(f, k: int, t: float, grid: int) -> float:
    # steps beyond 1/k admit no x; clip them to the largest admissible step
    h = np.unique(np.minimum(np.geomspace(t / 1000.0, t, H_STEPS + 1)[1:], 1.0 / k))
    x = _sample_points(h, k, grid, getattr(f, "breakpoints", ()))
    diffs = np.abs(_difference(f, x, h[:, None], k))
    return float(np.max(diffs))


def modulus(f, k: int, t: float, grid: int = DEFAULT_GRID, closed: bool = True) -> ModulusEstimate:
    """k-th order modulus of smoothness ``omega_k(f; t)`` for k in 1..3.

    Uses the function's declared closed form when there is one (and
    ``closed`` is true); otherwise the sup of ``|Delta_h^k f(x)|`` over 128
    geometric steps ``h`` in (t/1000, t] and an x-grid of ``grid`` points.
    """
    if k not in (1, 2, 3):
        raise ValueError(f"modulus order must be 1, 2 or 3, got {k}")
    t = float(t)
    if not 0.0 < t <= 1.0:
        raise ValueError(f"modulus argument must lie in (0, 1], got {t}")
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    form = f.closed_modulus(k) if closed and hasattr(f, "closed_modulus") else None
    if form is not None:
        return ModulusEstimate(k, t, float(form(t)), grid, source="closed")
    return ModulusEstimate(k, t, _grid_modulus(f, k, t, grid), grid)


def modulus_curve(f, k: int, ts: Sequence[float], grid: int = DEFAULT_GRID) -> np.ndarray:
    """Running maximum of modulus estimates over increasing ``ts``."""
    vals = np.array([modulus(f, k, t, grid).value if t > 0 else 0.0 for t in ts])
    return np.maximum.accumulate(vals)


def oscillation(f, grid: int = DEFAULT_GRID) -> float:
    """max f - min f over the grid and the declared breakpoints."""
    xs = np.concatenate([np.linspace(0.0, 1.0, grid), np.asarray(getattr(f, "breakpoints", ()), float)])
    v = np.asarray(f(xs), dtype=float)
    return float(v.max() - v.min())


# ---------------------------------------------------------------------------
# least concave majorant

def _upper_hull(t: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hull: list[int] = []
    for i in range(t.size):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (t[a] - t[o]) * (v[i] - v[o]) - (v[a] - v[o]) * (t[i] - t[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.array(hull)
    return t[idx], v[idx]


@dataclass(frozen=True)
class ConcaveMajorant:
    nodes_t: np.ndarray
    nodes_v: np.ndarray
    hull_t: np.ndarray
    hull_v: np.ndarray

    def __call__(self, t):
        # beyond the last node the majorant stays at its final value
        return np.interp(t, self.hull_t, self.hull_v)

    @property
    def t_max(self) -> float:
        return float(self.nodes_t[-1])


def concave_majorant(nodes: Sequence[tuple[float, float]]) -> ConcaveMajorant:
    """Upper concave hull of ``(t, value)`` nodes, the first being ``(0, 0)``."""
    if len(nodes) == 0:
        raise ValueError("need at least one node")
    arr = np.asarray(nodes, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("nodes must be (t, value) pairs")
    t, v = arr[:, 0], arr[:, 1]
    if t[0] != 0.0 or v[0] != 0.0:
        raise ValueError("first node must be (0, 0)")
    if np.any(np.diff(t) <= 0):
        raise ValueError("node abscissae must be strictly increasing")
    if np.any(v < 0):
        raise ValueError("node values must be non-negative")
    ht, hv = _upper_hull(t, v)
    for a in (t, v, ht, hv):
        a.setflags(write=False)
    return ConcaveMajorant(t, v, ht, hv)


def _omega1_nodes(f, t_max: float, grid: int, extra: float) -> tuple[np.ndarray, np.ndarray]:
    ts = np.linspace(0.0, t_max, HULL_NODES)
    ts = np.unique(np.append(ts, extra))
    osc = None
    vals = []
    for s in ts:
        if s == 0:
            vals.append(0.0)
        elif s <= 1.0:
            vals.append(modulus(f, 1, float(s), grid).value)
        else:
            if osc is None:
                form = f.closed_modulus(1) if hasattr(f, "closed_modulus") else None
                osc = float(form(1.0)) if form is not None else max(oscillation(f, grid), vals[-1])
            vals.append(osc)
    return ts, np.maximum.accumulate(np.array(vals))


def majorant_of_modulus(f, t: float, grid: int = DEFAULT_GRID) -> float:
    """Least concave majorant of ``omega_1(f; .)`` evaluated at ``t``.

    For ``t >= 1`` the modulus is the plateau ``max f - min f``.
    """
    t = float(t)
    if not t > 0:
        raise ValueError(f"majorant argument must be positive, got {t}")
    ts, vals = _omega1_nodes(f, max(t, 1.0), grid, t)
    hull = concave_majorant(list(zip(ts, vals)))
    return float(hull(t))


# ---------------------------------------------------------------------------
# sup norms

def unit_grid(grid: int = DEFAULT_GRID) -> np.ndarray:
    return np.linspace(0.0, 1.0, grid)


def sup_norm_at(g: Callable, grid: int = DEFAULT_GRID) -> tuple[float, float]:
    """``(max |g|, argmax)`` over an equispaced grid on [0, 1]."""
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    xs = unit_grid(grid)
    vals = np.abs(np.asarray(g(xs), dtype=float)) + 0 * xs
    i = int(np.argmax(vals))
    return float(vals[i]), float(xs[i])


def sup_norm(g: Callable, grid: int = DEFAULT_GRID) -> float:
    return sup_norm_at(g, grid)[0]
