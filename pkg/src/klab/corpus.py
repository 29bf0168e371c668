"""Built-in test functions on [0, 1] and their declared analytic data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

SMOOTHNESS_CLASSES = ("C0", "C1", "C2", "C3", "C4", "POLY")
POLY_ORDER = 10 ** 6


class CorpusSelfCheckError(RuntimeError):
    pass


def _horner(coeffs, x):
    acc = coeffs[-1]
    for a in reversed(coeffs[:-1]):
        acc = acc * x + a
    return acc


def _poly_derivative(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    if len(coeffs) <= 1:
        return (Fraction(0),)
    return tuple(j * coeffs[j] for j in range(1, len(coeffs)))


def _poly_trim(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


def _poly_mul(p: Sequence[Fraction], q: Sequence[Fraction]) -> tuple[Fraction, ...]:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _poly_trim(out)


def _quadratic_abs_sup(a: float, b: float, t: float) -> float:
    """max of |a h + b h^2| over h in [0, t]."""
    cands = [t]
    if b != 0:
        v = -a / (2 * b)
        if 0 < v < t:
            cands.append(v)
    return max(abs(a * h + b * h * h) for h in cands)


def _poly_modulus(coeffs: Sequence[Fraction], k: int) -> Optional[Callable[[float], float]]:
    deg = len(coeffs) - 1
    if deg < k or all(c == 0 for c in coeffs[1:]):
        return lambda t: 0.0
    if deg == k:
        # k-th difference of a degree-k polynomial is k! a_k h^k; needs k h <= 1
        lead = math.factorial(k) * abs(float(coeffs[k]))
        return lambda t: lead * min(t, 1.0 / k) ** k
    if k == 1 and deg == 2:
        # the first difference is linear in x, so extremes sit at x = 0 or x = 1 - h
        b, c = float(coeffs[1]), float(coeffs[2])

        def omega(t: float) -> float:
            t = min(t, 1.0)
            return max(_quadratic_abs_sup(b, c, t), _quadratic_abs_sup(b + 2 * c, -c, t))

        return omega
    return None


@dataclass(frozen=True, eq=False)
class CorpusFunction:
    """A named function on [0, 1] with optional analytic side information.

    ``evaluator`` must accept numpy arrays. ``derivatives[j]`` is the
    ``(j+1)``-th derivative. ``poly`` (ascending monomial coefficients as
    Fractions) marks an exact polynomial and routes integration through
    rationals.
    """

    id: str
    evaluator: Callable
    derivatives: tuple = ()
    known_moduli: Mapping[int, Callable[[float], float]] = field(default_factory=dict)
    breakpoints: tuple = ()
    smoothness: str = "C0"
    poly: Optional[tuple] = None
    _derived: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        base = self.smoothness.split("(")[0]
        if base not in SMOOTHNESS_CLASSES:
            raise ValueError(f"unknown smoothness class {self.smoothness!r}")
        if self.poly is None and len(self.derivatives) > 4:
            raise ValueError("at most four derivatives may be declared")

    def __call__(self, x):
        if self.poly is not None and not isinstance(x, np.ndarray):
            return _horner(self.poly, x)
        return self.evaluator(x)

    def __repr__(self):
        return f"CorpusFunction({self.id!r}, {self.smoothness})"

    @property
    def smoothness_order(self) -> int:
        if self.smoothness.startswith("POLY"):
            return POLY_ORDER
        return int(self.smoothness[1:])

    @property
    def max_derivative(self) -> int:
        return POLY_ORDER if self.poly is not None else len(self.derivatives)

    def has_derivative(self, r: int) -> bool:
        return r <= self.max_derivative

    def derivative(self, r: int) -> Callable:
        if r == 0:
            return self.evaluator
        return self.derivative_function(r).evaluator

    def derivative_function(self, r: int) -> "CorpusFunction":
        """The declared ``r``-th derivative as a corpus function of its own."""
        if r == 0:
            return self
        if not self.has_derivative(r):
            raise ValueError(f"{self.id} declares no derivative of order {r}")
        cached = self._derived.get(r)
        if cached is not None:
            return cached
        name = f"{self.id}^({r})"
        if self.poly is not None:
            coeffs = self.poly
            for _ in range(r):
                coeffs = _poly_derivative(coeffs)
            out = polynomial(name, coeffs)
        else:
            rest = self.derivatives[r:]
            out = CorpusFunction(
                id=name,
                evaluator=self.derivatives[r - 1],
                derivatives=tuple(rest),
                breakpoints=self.breakpoints,
                smoothness=f"C{self.smoothness_order - r}",
            )
        self._derived[r] = out
        return out

    def closed_modulus(self, k: int) -> Optional[Callable[[float], float]]:
        if k in self.known_moduli:
            return self.known_moduli[k]
        if self.poly is not None:
            return _poly_modulus(self.poly, k)
        return None


def polynomial(fid: str, coeffs: Sequence) -> CorpusFunction:
    coeffs = _poly_trim(tuple(Fraction(c) for c in coeffs))
    as_float = np.array([float(c) for c in coeffs])

    def evaluator(x):
        x = np.asarray(x, dtype=float)
        return _horner(as_float, x) + 0 * x

    return CorpusFunction(
        id=fid,
        evaluator=evaluator,
        smoothness=f"POLY({len(coeffs) - 1})",
        poly=coeffs,
    )


def monomial(j: int) -> CorpusFunction:
    return polynomial(f"e{j}", [0] * j + [1])


@lru_cache(maxsize=None)
def product(f: CorpusFunction, g: CorpusFunction) -> CorpusFunction:
    """Pointwise product with Leibniz-rule derivatives up to the common order (memoized)."""
    name = f"{f.id}*{g.id}"
    if f.poly is not None and g.poly is not None:
        return polynomial(name, _poly_mul(f.poly, g.poly))
    order = min(f.max_derivative, g.max_derivative, 4)
    fd = [f.evaluator] + [f.derivative(j) for j in range(1, order + 1)]
    gd = [g.evaluator] + [g.derivative(j) for j in range(1, order + 1)]

    def leibniz(r):
        def d(x):
            return sum(math.comb(r, j) * fd[j](x) * gd[r - j](x) for j in range(r + 1))
        return d

    smooth = min(f.smoothness_order, g.smoothness_order, 4)
    return CorpusFunction(
        id=name,
        evaluator=leibniz(0),
        derivatives=tuple(leibniz(r) for r in range(1, order + 1)),
        breakpoints=tuple(sorted(set(f.breakpoints) | set(g.breakpoints))),
        smoothness=f"C{smooth}",
    )


# ---------------------------------------------------------------------------
# built-in members

def _u(x):
    return np.asarray(x, dtype=float) - 0.5


def _abs_half() -> CorpusFunction:
    return CorpusFunction(
        id="abs_half",
        evaluator=lambda x: np.abs(_u(x)),
        known_moduli={1: lambda t: min(t, 0.5), 2: lambda t: 2.0 * min(t, 0.5)},
        breakpoints=(0.5,),
        smoothness="C0",
    )


def _signed_square() -> CorpusFunction:
    return CorpusFunction(
        id="signed_sq",
        evaluator=lambda x: _u(x) * np.abs(_u(x)),
        derivatives=(lambda x: 2.0 * np.abs(_u(x)),),
        breakpoints=(0.5,),
        smoothness="C1",
    )


def _abs_cubed() -> CorpusFunction:
    return CorpusFunction(
        id="abs_cubed",
        evaluator=lambda x: np.abs(_u(x)) ** 3,
        derivatives=(
            lambda x: 3.0 * _u(x) * np.abs(_u(x)),
            lambda x: 6.0 * np.abs(_u(x)),
        ),
        breakpoints=(0.5,),
        smoothness="C2",
    )


def _signed_quartic() -> CorpusFunction:
    return CorpusFunction(
        id="signed_quartic",
        evaluator=lambda x: _u(x) ** 3 * np.abs(_u(x)),
        derivatives=(
            lambda x: 4.0 * np.abs(_u(x)) ** 3,
            lambda x: 12.0 * _u(x) * np.abs(_u(x)),
            lambda x: 24.0 * np.abs(_u(x)),
        ),
        breakpoints=(0.5,),
        smoothness="C3",
    )


def _exp() -> CorpusFunction:
    def e(x):
        return np.exp(np.asarray(x, dtype=float))
    return CorpusFunction(id="exp", evaluator=e, derivatives=(e, e, e, e), smoothness="C4")


def _sine(freq: float = math.pi) -> CorpusFunction:
    w = freq

    def d(r):
        def f(x):
            return w ** r * np.sin(w * np.asarray(x, dtype=float) + r * math.pi / 2)
        return f

    return CorpusFunction(
        id="sin",
        evaluator=d(0),
        derivatives=tuple(d(r) for r in range(1, 5)),
        smoothness="C4",
    )


@lru_cache(maxsize=1)
def _corpus() -> tuple[CorpusFunction, ...]:
    return (
        monomial(0), monomial(1), monomial(2), monomial(3), monomial(4),
        _abs_half(), _signed_square(), _abs_cubed(), _signed_quartic(),
        _exp(), _sine(),
    )


def builtin_corpus() -> list[CorpusFunction]:
    return list(_corpus())


def corpus_ids() -> list[str]:
    return [f.id for f in _corpus()]


def get_function(fid: str) -> CorpusFunction:
    for f in _corpus():
        if f.id == fid:
            return f
    raise KeyError(f"unknown corpus function {fid!r}; known: {', '.join(corpus_ids())}")


def self_check(f: CorpusFunction, points: int = 33, step: float = 1e-5, tol: float = 1e-6
               ) -> list[str]:
    """Compare declared derivatives with central differences of the next-lower order.

    Points whose difference stencil straddles a declared breakpoint are
    skipped: the derivative there is a one-sided notion.
    """
    xs = np.linspace(0.0, 1.0, points + 2)[1:-1]
    for b in f.breakpoints:
        xs = xs[np.abs(xs - b) > 2 * step]
    problems = []
    upto = min(f.max_derivative, 4)
    for r in range(1, upto + 1):
        lower = f.derivative(r - 1)
        fd = (np.asarray(lower(xs + step)) - np.asarray(lower(xs - step))) / (2 * step)
        declared = np.asarray(f.derivative(r)(xs), dtype=float)
        err = float(np.max(np.abs(fd - declared)))
        if not err <= tol:
            problems.append(f"{f.id}: derivative {r} disagrees with finite differences by {err:.3e}")
    for k, omega in f.known_moduli.items():
        if omega(0.0) != 0:
            problems.append(f"{f.id}: declared modulus of order {k} is nonzero at t=0")
    return problems


def verify_corpus(functions: Sequence[CorpusFunction]) -> None:
    problems = [p for f in functions for p in self_check(f)]
    if problems:
        raise CorpusSelfCheckError("; ".join(problems))
