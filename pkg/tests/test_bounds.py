import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpball.bounds import (
    CENTERED_EXPONENTIAL,
    CENTERED_GAUSSIAN,
    CENTERED_UNIFORM,
    K_BE,
    K_BE_BERRY,
    BoundConstants,
    MomentTriple,
    SmallDimensionWarning,
    berry_esseen_bound,
    gaussish_check,
    gaussish_tail_bound,
    separating_check,
    thm_a_bound_shape,
    thm_b_bound_shape,
    thm_c_bound_shape,
)
from lpball.errors import DomainError, HypothesisError
from lpball.models import WSpec
from lpball.rng import RngStream

SEED = 777


def test_berry_esseen_iid_form():
    t = MomentTriple(1.0, 2.0)
    assert berry_esseen_bound([t] * 100) == pytest.approx(K_BE * 2.0 / 10.0)
    assert berry_esseen_bound([t] * 100, kbe=K_BE_BERRY) == pytest.approx(1.88 * 0.2)


def test_berry_esseen_mixed_summands():
    triples = [MomentTriple(1.0, 1.0), MomentTriple(4.0, 10.0)]
    assert berry_esseen_bound(triples) == pytest.approx(K_BE * 2.5 / math.sqrt(5.0))


def test_moment_triple_enforces_lyapunov():
    with pytest.raises(DomainError):
        MomentTriple(1.0, 0.5)
    with pytest.raises(ValueError):
        berry_esseen_bound([])


def test_summand_moments_by_simulation():
    gen = np.random.default_rng(SEED)
    for s in (CENTERED_EXPONENTIAL, CENTERED_GAUSSIAN, CENTERED_UNIFORM):
        x = s.draw(gen, (1_000_000,))
        assert x.var() == pytest.approx(s.sigma2, rel=0.01)
        assert np.mean(np.abs(x) ** 3) == pytest.approx(s.rho, rel=0.02)


def test_gaussish_constant():
    assert gaussish_tail_bound() == pytest.approx(3.1166)


def test_gaussish_check_passes_and_validates():
    r = gaussish_check(CENTERED_UNIFORM, 200, 20_000, RngStream(SEED, 1))
    assert r.passes
    with pytest.raises(HypothesisError):
        gaussish_check(CENTERED_GAUSSIAN, 100, 100, RngStream(SEED), beta=1e6)
    with pytest.raises(HypothesisError):
        gaussish_check(CENTERED_GAUSSIAN, 100, 100, RngStream(SEED), alpha=0.1)
    with pytest.raises(HypothesisError):
        gaussish_check(CENTERED_GAUSSIAN, 100, 100, RngStream(SEED), sigma_max=0.5)


def test_theorem_a_shape_terms():
    cone = WSpec.cone()
    assert thm_a_bound_shape(100, 25, 0.25, cone) == pytest.approx(math.log(25) / 5)
    assert thm_a_bound_shape(100, 25, 0.9, cone) == pytest.approx(0.65)
    heavy = WSpec.point_mass(1e9)
    assert thm_a_bound_shape(100, 25, 0.25, heavy) == 1.0
    assert thm_a_bound_shape(100, 25, 0.25, cone, BoundConstants(C=3.0)) == pytest.approx(3 * math.log(25) / 5)


def test_theorem_a_warns_for_tiny_k():
    with pytest.warns(SmallDimensionWarning):
        assert thm_a_bound_shape(100, 1, 0.0, WSpec.cone()) == pytest.approx(0.01)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        thm_a_bound_shape(100, 3, 0.0, WSpec.cone())


def test_theorem_b_and_c_shapes():
    w = WSpec.uniform(1.0)
    expected_b = max(math.log(1024) / math.sqrt(512), w.tail(math.log(1024) / 0.5))
    assert thm_b_bound_shape(1024, 0.5, 0.5, w) == pytest.approx(expected_b)
    assert thm_c_bound_shape(1024, WSpec.cone()) == pytest.approx(math.log(1024) / 32)
    assert thm_c_bound_shape(1024, w) == pytest.approx(math.log(1024) / 32 + math.exp(-math.sqrt(1024 * math.log(1024))))


@given(st.integers(min_value=10, max_value=10**6))
def test_theorem_c_shape_decreases_eventually(n):
    assert thm_c_bound_shape(2 * n, WSpec.cone()) < thm_c_bound_shape(n, WSpec.cone())


def test_shape_domains():
    with pytest.raises(DomainError):
        thm_a_bound_shape(10, 11, 0.5, WSpec.cone())
    with pytest.raises(DomainError):
        thm_b_bound_shape(10, 0.0, 0.5, WSpec.cone())
    with pytest.raises(DomainError):
        thm_c_bound_shape(1, WSpec.cone())
    with pytest.raises(DomainError):
        BoundConstants(C=0.0)
    assert "user-supplied, default 1" in BoundConstants().describe()


def test_separating_inequality_on_small_perturbations():
    gen = np.random.default_rng(SEED)
    m = 50_000
    x1 = gen.standard_normal(m)
    x2 = 0.01 * gen.standard_normal(m)
    x3 = 0.02 * gen.standard_exponential(m)
    res = separating_check(x1, x2, x3, 1.0, 0.1)
    assert res.holds and bool(res)
    assert res.lhs <= res.rhs + res.allowance


def test_separating_inequality_rejects_mismatched_batches():
    with pytest.raises(ValueError):
        separating_check(np.zeros(3), np.zeros(4), np.zeros(3), 1.0, 0.1)
    with pytest.raises(DomainError):
        separating_check(np.zeros(3), np.zeros(3), np.zeros(3), 1.0, 0.0)


def test_theorem_a_exponential_tail_term():
    # rate 1/p with p = 2: P[W > n log(k) / k] = exp(-n log(k) / (k p))
    w = WSpec.uniform(2.0)
    tail = math.exp(-1024 * math.log(64) / 128)
    assert w.tail(1024 * math.log(64) / 64) == pytest.approx(tail, rel=1e-14)
    consts = BoundConstants(c=1e-3)
    small_c_tail = math.exp(-1e-3 * 1024 * math.log(64) / 128)
    assert thm_a_bound_shape(1024, 64, 1 / 16, w, consts) == pytest.approx(max(math.log(64) / 8, small_c_tail))
