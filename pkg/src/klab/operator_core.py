"""Kantorovich operators in Bernstein form, float and exact rational modes.

``K_n f`` is the degree-``n`` polynomial with Bernstein coefficients

    c_k = (n + 1) * integral of f over [k/(n+1), (k+1)/(n+1)],   k = 0..n.

Scalars of type :class:`fractions.Fraction` (or ``int``) select the exact
path wherever the inputs allow it; floats and numpy arrays select the float
path.
"""

from __future__ import annotations

import math
import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import factorial
from numbers import Rational as _RationalABC
from typing import Iterator, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

Rational = Fraction

Number = Union[int, float, Fraction]


def rational_str(q: Fraction | int) -> str:
    """Serialize a rational as ``"p/q"`` in lowest terms (``"3/1"`` for integers)."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


def _is_exact(x) -> bool:
    return isinstance(x, _RationalABC) and not isinstance(x, bool)


def _check_unit_interval(x) -> None:
    if isinstance(x, np.ndarray):
        if x.size and (np.nanmin(x) < 0 or np.nanmax(x) > 1 or np.isnan(x).any()):
            raise ValueError("evaluation points must lie in [0, 1]")
    elif not 0 <= x <= 1:
        raise ValueError(f"evaluation point {x} outside [0, 1]")


# ---------------------------------------------------------------------------
# Bernstein basis

def _basis_scalar(n: int, x) -> list:
    one_minus = 1 - x
    b = [x ** 0]
    for j in range(1, n + 1):
        nxt = [one_minus * b[0]]
        nxt.extend(one_minus * b[k] + x * b[k - 1] for k in range(1, j))
        nxt.append(x * b[j - 1])
        b = nxt
    return b


def _basis_rows(x: np.ndarray, start: np.ndarray, start_degree: int, n_max: int
                ) -> Iterator[tuple[int, np.ndarray]]:
    omx = 1.0 - x
    b = start
    for j in range(start_degree + 1, n_max + 1):
        nxt = np.empty((j + 1, x.size))
        nxt[:j] = b * omx
        nxt[j] = 0.0
        nxt[1:] += b * x
        b = nxt
        yield j, b


class _BasisCache:
    """Small LRU of basis matrices keyed by (degree, evaluation points)."""

    def __init__(self, maxsize: int = 48):
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.maxsize = maxsize

    @staticmethod
    def key(n: int, x: np.ndarray):
        return n, x.size, x.tobytes()

    def get(self, n, x):
        k = self.key(n, x)
        with self._lock:
            b = self._data.get(k)
            if b is not None:
                self._data.move_to_end(k)
            return b

    def put(self, n, x, b):
        b.setflags(write=False)
        k = self.key(n, x)
        with self._lock:
            self._data[k] = b
            self._data.move_to_end(k)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def nearest_below(self, n, x):
        """Highest cached degree <= n for the same points, to resume the recursion."""
        best = None
        with self._lock:
            for (deg, size, raw), b in self._data.items():
                if deg <= n and size == x.size and raw == x.tobytes():
                    if best is None or deg > best[0]:
                        best = (deg, b)
        return best

    def clear(self):
        with self._lock:
            self._data.clear()


_BASIS_CACHE = _BasisCache()


def basis_matrix(n: int, x: np.ndarray) -> np.ndarray:
    """Matrix ``B[k, i] = p_{n,k}(x_i)`` built by the degree recursion (cached, read-only)."""
    x = np.ascontiguousarray(x, dtype=float)
    cached = _BASIS_CACHE.get(n, x)
    if cached is not None:
        return cached
    start = _BASIS_CACHE.nearest_below(n, x)
    if start is None:
        start = (0, np.ones((1, x.size)))
    deg, b = start
    for deg, b in _basis_rows(x, b, deg, n):
        pass
    b = np.array(b, copy=True)
    _BASIS_CACHE.put(n, x, b)
    return b


def iter_basis_matrices(n_max: int, x: np.ndarray) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(n, basis_matrix(n, x))`` for n = 1..n_max in one recursion pass.

    Each matrix is also placed in the basis cache, so operator evaluations for
    that ``n`` issued inside the loop body reuse it.
    """
    x = np.ascontiguousarray(x, dtype=float)
    for n, b in _basis_rows(x, np.ones((1, x.size)), 0, n_max):
        _BASIS_CACHE.put(n, x, b)
        yield n, b


def bernstein_basis(n: int, x):
    """Return ``(p_{n,0}(x), ..., p_{n,n}(x))``.

    Exact rationals give a list of Fractions; a float gives a 1-d array; an
    array of points gives an ``(n + 1, len(x))`` matrix.
    """
    if n < 0:
        raise ValueError("degree must be non-negative")
    if isinstance(x, (list, tuple)):
        x = np.asarray(x, dtype=float)
    _check_unit_interval(x)
    if isinstance(x, np.ndarray):
        if x.ndim == 0:
            return basis_matrix(n, x.reshape(1))[:, 0].copy()
        return basis_matrix(n, x.ravel())
    if _is_exact(x):
        return _basis_scalar(n, Fraction(x))
    return np.array(_basis_scalar(n, float(x)))


# ---------------------------------------------------------------------------
# Bernstein polynomials

@dataclass(frozen=True)
class BernsteinPoly:
    """Polynomial ``sum_k c_k p_{n,k}(x)``; coefficients are Fractions or floats."""

    coefficients: tuple

    def __post_init__(self):
        if len(self.coefficients) == 0:
            raise ValueError("a Bernstein polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(self.coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def exact(self) -> bool:
        return all(_is_exact(c) for c in self.coefficients)

    @cached_property
    def float_coefficients(self) -> np.ndarray:
        c = np.array([float(v) for v in self.coefficients])
        c.setflags(write=False)
        return c

    @cached_property
    def _constant(self):
        first = self.coefficients[0]
        if all(c == first for c in self.coefficients):
            return first
        return None

    def __call__(self, x):
        if isinstance(x, (list, tuple)):
            x = np.asarray(x, dtype=float)
        _check_unit_interval(x)
        const = self._constant
        if isinstance(x, np.ndarray):
            if const is not None:
                # partition of unity: avoid rounding noise on constants
                return np.full(x.shape, float(const))
            b = basis_matrix(self.degree, np.ravel(x).astype(float))
            return (self.float_coefficients @ b).reshape(x.shape)
        if _is_exact(x) and self.exact:
            if const is not None:
                return Fraction(const)
            basis = _basis_scalar(self.degree, Fraction(x))
            return sum((c * p for c, p in zip(self.coefficients, basis)), Fraction(0))
        if const is not None:
            return float(const)
        basis = _basis_scalar(self.degree, float(x))
        return float(np.dot(self.float_coefficients, basis))

    def derivative(self, r: int = 1) -> "BernsteinPoly":
        """r-th derivative: r-fold forward differences scaled by n!/(n-r)!."""
        if r < 0:
            raise ValueError("derivative order must be non-negative")
        n = self.degree
        if r > n:
            zero = Fraction(0) if self.exact else 0.0
            return BernsteinPoly((zero,))
        if r == 0:
            return self
        scale = factorial(n) // factorial(n - r)
        c = list(self.coefficients)
        if self.exact:
            for _ in range(r):
                c = [c[k + 1] - c[k] for k in range(len(c) - 1)]
            return BernsteinPoly(tuple(scale * v for v in c))
        d = np.diff(np.array(c, dtype=float), n=r)
        return BernsteinPoly(tuple(float(scale) * d))


# ---------------------------------------------------------------------------
# Kantorovich operator

@dataclass(frozen=True)
class KantorovichOp:
    n: int
    quadrature_order: int = 8

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"operator index must be a positive integer, got {self.n}")
        if int(self.quadrature_order) != self.quadrature_order or self.quadrature_order < 1:
            raise ValueError("quadrature_order must be >= 1")

    def nodes(self) -> list[Fraction]:
        """Subinterval endpoints k/(n+1), k = 0..n+1."""
        return [Fraction(k, self.n + 1) for k in range(self.n + 2)]


@lru_cache(maxsize=None)
def _gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    return nodes, weights


def _exact_coefficients(n: int, poly: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Exact interval averages of a polynomial over the cells [k/N, (k+1)/N], N = n + 1.

    With the antiderivative scaled to integer coefficients B_i, the value at
    k/N is S(k) / (N^D L) where S(k) = sum_i B_i k^i N^(D-i) is an integer,
    so each coefficient costs one Fraction reduction.
    """
    N = n + 1
    anti = [Fraction(a) / (j + 1) for j, a in enumerate(poly)]     # coefficient of t^(j+1)
    L = math.lcm(*(b.denominator for b in anti))
    B = [0] + [int(b * L) for b in anti]
    D = len(B) - 1
    npow = [N ** (D - i) for i in range(D + 1)]
    scaled = [B[i] * npow[i] for i in range(D + 1)]
    S = []
    for k in range(N + 1):
        acc = 0
        for c in reversed(scaled):
            acc = acc * k + c
        S.append(acc)
    den = N ** (D - 1) * L
    return tuple(Fraction(S[k + 1] - S[k], den) for k in range(N))


def _quadrature_coefficients(n: int, order: int, f, breakpoints: Sequence[float]) -> np.ndarray:
    edges = np.arange(n + 2) / (n + 1)
    a, b, who = edges[:-1].copy(), edges[1:].copy(), np.arange(n + 1)
    for bp in sorted(set(float(p) for p in breakpoints)):
        inside = np.nonzero((a < bp) & (bp < b))[0]
        if inside.size:
            a = np.concatenate([a, np.full(inside.size, bp)])
            tail = b[inside]
            b[inside] = bp
            b = np.concatenate([b, tail])
            who = np.concatenate([who, who[inside]])
    nodes, weights = _gauss_rule(order)
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b)[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray(f(pts), dtype=float).reshape(pts.shape)
    out = np.zeros(n + 1)
    np.add.at(out, who, half * (vals @ weights))
    return (n + 1) * out


@lru_cache(maxsize=2048)
def _coefficients_cached(op: KantorovichOp, f) -> BernsteinPoly:
    poly = getattr(f, "poly", None)
    if poly is not None:
        return BernsteinPoly(_exact_coefficients(op.n, poly))
    c = _quadrature_coefficients(op.n, op.quadrature_order, f, getattr(f, "breakpoints", ()))
    return BernsteinPoly(tuple(c))


def kantorovich_coefficients(op: KantorovichOp, f) -> BernsteinPoly:
    """Bernstein representation of ``K_n f``.

    Polynomials (objects carrying ``poly``, ascending monomial coefficients)
    are integrated exactly in rationals; anything else goes through composite
    Gauss-Legendre quadrature, split at ``f.breakpoints``.
    """
    return _coefficients_cached(op, f)


def kantorovich_apply(op: KantorovichOp, f, x):
    return kantorovich_coefficients(op, f)(x)


def kantorovich_derivative(op: KantorovichOp, f, r: int, x):
    """``(K_n f)^{(r)}(x)``; for ``r > n`` warns and returns 0."""
    if r < 0:
        raise ValueError("derivative order must be non-negative")
    if r > op.n:
        warnings.warn(f"derivative order {r} exceeds degree {op.n}; K_n f^({r}) is identically 0",
                      stacklevel=2)
        _check_unit_interval(np.asarray(x, dtype=float) if not _is_exact(x) else x)
        if isinstance(x, np.ndarray):
            return np.zeros(x.shape)
        return Fraction(0) if _is_exact(x) else 0.0
    return kantorovich_coefficients(op, f).derivative(r)(x)


# ---------------------------------------------------------------------------
# Central moments M_m(x) = K_n((t - x)^m; x)

def _constants_for(x):
    if _is_exact(x):
        return Fraction(x), Fraction
    return np.asarray(x, dtype=float) if isinstance(x, np.ndarray) else float(x), float


def central_moment_closed(n: int, m: int, x):
    """Closed forms of ``K_n((t - x)^m; x)`` for m = 0..4."""
    if m not in (0, 1, 2, 3, 4):
        raise ValueError(f"closed form only known for orders 0..4, got {m}")
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_unit_interval(x)
    x, num = _constants_for(x)
    N = n + 1
    X = x * (1 - x)
    if m == 0:
        return x * 0 + 1
    if m == 1:
        return (1 - 2 * x) / (2 * N)
    if m == 2:
        return (X * (n - 1) + num(1) / 3) / N ** 2
    if m == 3:
        return (1 - 2 * x) / (4 * N ** 3) * (10 * X * n + 2 * x ** 2 - 2 * x + 1)
    return (3 * X ** 2 * n ** 2 + 5 * X * (1 - 2 * x) ** 2 * n
            + x ** 4 - 2 * x ** 3 + 2 * x ** 2 - x + num(1) / 5) / N ** 4


@lru_cache(maxsize=4096)
def _basis_exact_cached(n: int, x: Fraction) -> tuple:
    return tuple(_basis_scalar(n, x))


def central_moment_exact(n: int, m: int, x) -> Fraction:
    """Direct rational evaluation of the defining sum applied to ``(t - x)^m``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 0:
        raise ValueError("moment order must be non-negative")
    x = Fraction(x)
    _check_unit_interval(x)
    basis = _basis_exact_cached(n, x)
    total = Fraction(0)
    prev = (0 - x) ** (m + 1)
    for k in range(n + 1):
        cur = (Fraction(k + 1, n + 1) - x) ** (m + 1)
        total += basis[k] * (cur - prev)
        prev = cur
    return (n + 1) * total / (m + 1)


def variance_e1(n: int, x):
    """``K_n(e_1^2; x) - K_n(e_1; x)^2 = x(1-x) n/(n+1)^2 + 1/(12 (n+1)^2)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_unit_interval(x)
    x, num = _constants_for(x)
    N2 = (n + 1) ** 2
    return x * (1 - x) * n / N2 + num(1) / (12 * N2)
