"""Suite configuration and orchestration."""

from __future__ import annotations

import datetime as _dt
import itertools
import json
import logging
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .bounds import (
    PAIR_THEOREMS,
    RATE_THEOREMS,
    BoundReport,
    HypothesisNotMet,
    RateAssessment,
    TheoremId,
    assess_boundedness,
    assess_gv_rate,
    gruss_bound_t42,
    gv_residual_at,
    make_report,
    pair_smoothness,
    paltanea_check,
    simultaneous_bound_t25,
    skipped_report,
    uniform_bound_t24,
    voronovskaya_bound_t31,
)
from .corpus import CorpusFunction, corpus_ids, get_function, verify_corpus
from .operator_core import (
    central_moment_closed,
    central_moment_exact,
    rational_str,
    variance_e1,
)

log = logging.getLogger(__name__)

RATIONAL_N_MAX = 64
IDENTITY_POINTS = tuple(Fraction(p) for p in ("0", "1/8", "1/4", "1/3", "1/2", "2/3", "3/4", "7/8", "1"))


def _default_n_values() -> list[int]:
    return [2 ** j for j in range(11)]


def _all_theorems() -> list[str]:
    return [t.value for t in TheoremId]


@dataclass
class SuiteConfig:
    n_values: list = field(default_factory=_default_n_values)
    grid_points: int = 257
    quadrature_order: int = 8
    theorems: list = field(default_factory=_all_theorems)
    functions: list = field(default_factory=corpus_ids)
    output_path: str = "klab_report.json"
    mode: str = "float"
    identity_n_max: int = 50
    simultaneous_order: int = 2

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(sorted(unknown))}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str) -> "SuiteConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        self.n_values = [int(n) for n in self.n_values]
        if not self.n_values or min(self.n_values) < 1:
            raise ValueError("n_values must be a non-empty list of positive integers")
        if len(set(self.n_values)) != len(self.n_values):
            raise ValueError("n_values contains duplicates")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.quadrature_order < 1:
            raise ValueError("quadrature_order must be >= 1")
        if self.mode not in ("float", "rational"):
            raise ValueError(f"mode must be 'float' or 'rational', got {self.mode!r}")
        self.theorems = [TheoremId(t).value for t in self.theorems]
        for fid in self.functions:
            get_function(fid)
        if self.identity_n_max < 1:
            raise ValueError("identity_n_max must be >= 1")
        if self.mode == "rational" and max(self.n_values) > RATIONAL_N_MAX:
            raise ValueError(f"rational mode is limited to n <= {RATIONAL_N_MAX}")


@dataclass
class IdentityCheck:
    kind: str
    n: int
    order: Optional[int]
    points: int
    passed: bool
    failures: list = field(default_factory=list)
    worst_point: Optional[str] = None
    worst_value: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SuiteReport:
    metadata: dict
    records: list
    rate_fits: list
    identity_checks: list

    @property
    def failed_records(self) -> list[BoundReport]:
        return [r for r in self.records if r.status == "FAILED"]

    @property
    def exit_code(self) -> int:
        return 0 if not self.failed_records else 1

    def summary(self) -> dict:
        counts = {"PASSED": 0, "FAILED": 0, "SKIPPED": 0}
        for r in self.records:
            counts[r.status] += 1
        return {
            "records": len(self.records),
            "passed": counts["PASSED"],
            "failed": counts["FAILED"],
            "skipped": counts["SKIPPED"],
            "rate_checks": len(self.rate_fits),
            "rate_checks_failed": sum(1 for a in self.rate_fits if not a.passed),
            "identity_checks": len(self.identity_checks),
            "identity_checks_failed": sum(1 for c in self.identity_checks if not c.passed),
        }


# ---------------------------------------------------------------------------
# exact identities

def _identity(kind, n, order, check: Callable[[Fraction], tuple[bool, Fraction]]) -> IdentityCheck:
    failures = []
    worst_x, worst_v = None, None
    for x in IDENTITY_POINTS:
        ok, value = check(x)
        if worst_v is None or value > worst_v:
            worst_x, worst_v = x, value
        if not ok:
            failures.append({"x": rational_str(x), "value": rational_str(value)})
    return IdentityCheck(kind, n, order, len(IDENTITY_POINTS), not failures, failures,
                         rational_str(worst_x), rational_str(worst_v))


def identity_checks(n_values: Sequence[int]) -> list[IdentityCheck]:
    """Exact rational identities and inequalities for the low central moments.

    For the ratio checks the reported worst point is the maximizing x among
    the sampled points (value = ratio / bound); tightness is not asserted.
    """
    out = []
    for n in n_values:
        for m in (1, 2, 3, 4):
            def closed_vs_exact(x, m=m):
                diff = central_moment_closed(n, m, x) - central_moment_exact(n, m, x)
                return diff == 0, abs(diff)
            out.append(_identity("moment_closed_form", n, m, closed_vs_exact))

        def ratio3(x):
            m2 = central_moment_exact(n, 2, x)
            ratio = abs(central_moment_exact(n, 3, x)) / m2 / Fraction(5, 2 * (n + 1))
            return ratio <= 1, ratio

        def ratio4(x):
            m2 = central_moment_exact(n, 2, x)
            ratio = central_moment_exact(n, 4, x) / m2 / Fraction(3 * (n + 2), (n + 1) ** 2)
            return ratio <= 1, ratio

        def second(x):
            ratio = central_moment_exact(n, 2, x) / Fraction(1, 2 * (n + 1))
            return ratio <= 1, ratio

        def variance(x):
            m1 = central_moment_exact(n, 1, x)
            assembled = central_moment_exact(n, 2, x) - m1 * m1
            diff = variance_e1(n, x) - assembled
            return diff == 0, abs(diff)

        out.append(_identity("moment_ratio_third", n, 3, ratio3))
        out.append(_identity("moment_ratio_fourth", n, 4, ratio4))
        out.append(_identity("second_moment_estimate", n, 2, second))
        out.append(_identity("variance_e1", n, None, variance))
    return out


# ---------------------------------------------------------------------------
# bound cells

def _theorem_order(theorems: Sequence[str]) -> list[TheoremId]:
    wanted = {TheoremId(t) for t in theorems}
    return [t for t in TheoremId if t in wanted]


def function_cells(theorem: TheoremId, functions: Sequence[CorpusFunction]):
    if theorem in PAIR_THEOREMS:
        return list(itertools.combinations_with_replacement(functions, 2))
    return [(f, None) for f in functions]


def evaluate_cell(theorem: TheoremId, f: CorpusFunction, g: Optional[CorpusFunction], n: int,
                  config: SuiteConfig) -> BoundReport:
    grid, q = config.grid_points, config.quadrature_order
    g_id = g.id if g is not None else None
    try:
        if theorem is TheoremId.PALTANEA:
            return paltanea_check(n, f, grid, q)
        if theorem is TheoremId.UNIFORM_T24:
            return uniform_bound_t24(n, f, grid, q)
        if theorem is TheoremId.SIMULTANEOUS_T25:
            r = min(config.simultaneous_order, f.max_derivative, f.smoothness_order)
            return simultaneous_bound_t25(n, r, f, grid, q)
        if theorem is TheoremId.VORONOVSKAYA_T31:
            return voronovskaya_bound_t31(n, f, grid, q)
        if theorem is TheoremId.GRUSS_T42:
            return gruss_bound_t42(n, f, g, grid, q)
        if theorem is TheoremId.GV_RATE_T52:
            if pair_smoothness(f, g) < 2:
                raise HypothesisNotMet("the rate classes need f, g in C^2")
            value, xw = gv_residual_at(n, f, g, grid, q)
            return make_report(theorem, f.id, g_id, n, value, None, xw, grid)
        if theorem is TheoremId.GV_RATE_T53:
            if pair_smoothness(f, g) < 1:
                raise HypothesisNotMet("the C^1 estimate needs f, g in C^1")
            value, xw = gv_residual_at(n, f, g, grid, q)
            return make_report(theorem, f.id, g_id, n, value, None, xw, grid,
                               note="n * sup|K_n(fg) - K_nf K_ng - (X/n) f'g'|")
    except HypothesisNotMet as exc:
        return skipped_report(theorem, f.id, g_id, n, grid, str(exc))
    raise ValueError(f"unknown theorem {theorem}")


def _worker_count() -> int:
    env = os.environ.get("KLAB_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            log.warning("ignoring non-integer KLAB_THREADS=%r", env)
    return cpus


def assess_rates(theorem: TheoremId, records: Sequence[BoundReport],
                 lookup: Callable[[str], CorpusFunction]) -> list[RateAssessment]:
    """Group rate records by pair, classify, and stamp the verdict onto each record."""
    groups: dict = {}
    for rec in records:
        if rec.theorem_id == theorem.value and rec.status != "SKIPPED":
            groups.setdefault((rec.function_id, rec.g_function_id), []).append(rec)
    out = []
    for (fid, gid), recs in groups.items():
        samples = [(r.n, r.lhs) for r in recs]
        if theorem is TheoremId.GV_RATE_T52:
            a = assess_gv_rate(samples, pair_smoothness(lookup(fid), lookup(gid)), fid, gid)
        else:
            a = assess_boundedness(samples, fid, gid)
        inconclusive = a.note.startswith("need at least")
        for r in recs:
            if inconclusive:
                r.note = (r.note + "; " if r.note else "") + "rate inconclusive: " + a.note
            elif not a.passed:
                r.passed, r.status = False, "FAILED"
                r.note = (r.note + "; " if r.note else "") + f"rate {a.rate_class} failed: {a.note}"
        out.append(a)
    return out


def run_cells(theorems: Sequence[TheoremId], functions: Sequence[CorpusFunction],
              config: SuiteConfig, threads: Optional[int] = None
              ) -> tuple[list[BoundReport], list[RateAssessment]]:
    cells = [(t, f, g, n)
             for t in theorems
             for f, g in function_cells(t, functions)
             for n in sorted(config.n_values)]
    workers = threads or _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda c: evaluate_cell(*c, config), cells))
    else:
        records = [evaluate_cell(*c, config) for c in cells]
    by_id = {f.id: f for f in functions}
    rates = []
    for t in theorems:
        if t in RATE_THEOREMS:
            rates.extend(assess_rates(t, records, by_id.__getitem__))
    return records, rates


def run_suite(config: SuiteConfig, threads: Optional[int] = None) -> SuiteReport:
    config.validate()
    functions = [get_function(fid) for fid in config.functions]
    verify_corpus(functions)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    if config.mode == "rational":
        identity_ns = sorted(config.n_values)
    else:
        identity_ns = list(range(1, config.identity_n_max + 1))
    log.info("exact identity checks for n in %d values", len(identity_ns))
    identities = identity_checks(identity_ns)

    records, rates = [], []
    if config.mode == "float":
        records, rates = run_cells(_theorem_order(config.theorems), functions, config, threads)

    metadata = {
        "config": config.to_dict(),
        "timestamp": started,
        "versions": {
            "klab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    return SuiteReport(metadata, records, rates, identities)
