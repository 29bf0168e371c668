from fractions import Fraction as F

import numpy as np
import pytest

from klab.corpus import (
    CorpusFunction,
    CorpusSelfCheckError,
    builtin_corpus,
    corpus_ids,
    get_function,
    product,
    self_check,
    verify_corpus,
)
from klab.moduli import modulus


def test_required_members():
    ids = corpus_ids()
    for fid in ("e0", "e1", "e2", "e3", "e4", "abs_half", "signed_sq", "exp", "sin"):
        assert fid in ids
    assert get_function("e0").smoothness == "POLY(0)"
    assert get_function("abs_half").breakpoints == (0.5,)
    classes = {f.smoothness for f in builtin_corpus()}
    assert {"C0", "C1", "C2", "C3", "C4"} <= classes


def test_unknown_id():
    with pytest.raises(KeyError):
        get_function("nope")


@pytest.mark.parametrize("f", builtin_corpus(), ids=lambda f: f.id)
def test_self_check_passes(f):
    assert self_check(f) == []


def test_c4_members_declare_four_derivatives():
    for f in builtin_corpus():
        if f.smoothness == "C4":
            assert f.max_derivative == 4


def test_abs_half_closed_modulus_matches_grid():
    f = get_function("abs_half")
    grid = modulus(f, 1, 0.25, closed=False).value
    assert grid == pytest.approx(f.closed_modulus(1)(0.25), rel=0.01)


def test_polynomials_evaluate_exactly():
    assert get_function("e3")(F(1, 3)) == F(1, 27)


def test_derivative_function_of_polynomial():
    d = get_function("e4").derivative_function(2)
    assert d.poly == (0, 0, 12)


def test_product_of_polynomials_is_exact():
    p = product(get_function("e1"), get_function("e2"))
    assert p.poly == (0, 0, 0, 1)


def test_product_derivatives_follow_leibniz():
    p = product(get_function("exp"), get_function("sin"))
    xs = np.linspace(0.1, 0.9, 5)
    ref = np.exp(xs) * (np.sin(np.pi * xs) + np.pi * np.cos(np.pi * xs))
    np.testing.assert_allclose(p.derivative(1)(xs), ref, rtol=1e-13)
    assert self_check(p) == []


def test_broken_declaration_is_caught():
    bad = CorpusFunction(id="bad", evaluator=np.sin, derivatives=(np.sin,), smoothness="C1")
    with pytest.raises(CorpusSelfCheckError, match="bad"):
        verify_corpus([bad])


def test_unknown_smoothness_rejected():
    with pytest.raises(ValueError):
        CorpusFunction(id="x", evaluator=np.sin, smoothness="C9x")
