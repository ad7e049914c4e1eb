import math

import numpy as np
import pytest

from core.errors import DimensionMismatch, EmptySampleSet, IndexOutOfRange, InvalidParameter
from core.quasi_space import (
    NormKind,
    QuasiNormSpec,
    aoki_rolewicz_constant,
    aoki_rolewicz_exponent,
    check_homogeneity,
    check_p_norm,
    check_quasi_triangle,
    check_quasimetric,
    check_series_bound,
    eval_quasi_norm,
    induced_distance,
    quasi_triangle_constant,
)
from utils.sampling import axis_pairs, cancelling_pairs, sample_pairs, sample_triples, sample_vectors

CATALOG_SPECS = [
    QuasiNormSpec.standard_p(2),
    QuasiNormSpec.maligranda_ap(2, 1),
    QuasiNormSpec.tychonoff_half(),
    QuasiNormSpec.p_quasi(0.5),
]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------
def test_maligranda_uses_p_norm_off_the_axis():
    assert eval_quasi_norm(QuasiNormSpec.maligranda_ap(2, 2), [3, 4]) == pytest.approx(5.0)


def test_maligranda_scales_first_coordinate_on_the_axis():
    assert eval_quasi_norm(QuasiNormSpec.maligranda_ap(2, 2), [3, 0]) == pytest.approx(6.0)


def test_tychonoff_half_of_two_unit_coordinates():
    assert eval_quasi_norm(QuasiNormSpec.tychonoff_half(), [1, 1, 0, 0]) == pytest.approx(4.0)


@pytest.mark.parametrize("spec", CATALOG_SPECS, ids=lambda s: s.name)
def test_zero_vector_has_zero_norm(spec):
    assert eval_quasi_norm(spec, [0.0, 0.0]) == 0.0


def test_max_norm_and_p_equals_inf_agree():
    x = [1.5, -7.0, 3.0]
    assert eval_quasi_norm(QuasiNormSpec.max_norm(), x) == 7.0
    assert eval_quasi_norm(QuasiNormSpec.standard_p("inf"), x) == 7.0


def test_maligranda_rejects_other_dimensions():
    with pytest.raises(DimensionMismatch):
        eval_quasi_norm(QuasiNormSpec.maligranda_ap(2, 1), [1, 2, 3])


def test_non_finite_coordinates_are_rejected():
    with pytest.raises(InvalidParameter):
        eval_quasi_norm(QuasiNormSpec.standard_p(1), [1.0, math.nan])


@pytest.mark.parametrize("a", [0.0, -1.0, 1.0])
def test_maligranda_parameter_a_is_validated(a):
    with pytest.raises(InvalidParameter):
        QuasiNormSpec.maligranda_ap(a, 1)


def test_p_quasi_needs_p_below_one():
    with pytest.raises(InvalidParameter):
        QuasiNormSpec.p_quasi(1.0)
    with pytest.raises(InvalidParameter):
        QuasiNormSpec.standard_p(0.5)


def test_spec_json_form_uses_inf_sentinel():
    spec = QuasiNormSpec.from_dict({"kind": "standard_p", "p": "inf", "dim": 3})
    assert spec.kind == NormKind.STANDARD_P
    assert math.isinf(spec.p)
    assert spec.to_dict() == {"kind": "standard_p", "p": "inf", "dim": 3}


def test_unknown_kind_is_rejected():
    with pytest.raises(InvalidParameter):
        QuasiNormSpec.from_dict({"kind": "sobolev"})


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("spec,expected", [
    (QuasiNormSpec.maligranda_ap(2, 1), 2.0),
    (QuasiNormSpec.maligranda_ap(1 / 3, 1), 3.0),
    (QuasiNormSpec.tychonoff_half(), 2.0),
    (QuasiNormSpec.standard_p(2), 1.0),
    (QuasiNormSpec.p_quasi(1 / 3), 4.0),
])
def test_quasi_triangle_constant(spec, expected):
    assert quasi_triangle_constant(spec) == pytest.approx(expected, rel=1e-12)
    assert spec.C >= 1.0


def test_only_standard_p_has_constant_one():
    for spec in CATALOG_SPECS:
        assert (spec.C == 1.0) == (spec.kind == NormKind.STANDARD_P)


@pytest.mark.parametrize("C,p", [(1.0, 1.0), (2.0, 0.5), (4.0, 1 / 3)])
def test_aoki_rolewicz_exponent(C, p):
    assert aoki_rolewicz_exponent(C) == pytest.approx(p, abs=1e-12)


def test_aoki_rolewicz_round_trip():
    rng = np.random.default_rng(7)
    for C in rng.uniform(1.0, 16.0, size=100):
        assert aoki_rolewicz_constant(aoki_rolewicz_exponent(C)) == pytest.approx(C, abs=1e-12)


def test_aoki_rolewicz_rejects_constants_below_one():
    with pytest.raises(InvalidParameter):
        aoki_rolewicz_exponent(0.5)


# ---------------------------------------------------------------------------
# Induced distance
# ---------------------------------------------------------------------------
def test_induced_distance_examples():
    l1 = QuasiNormSpec.standard_p(1)
    assert induced_distance(l1, [1, 2], [1, 2]) == 0.0
    assert induced_distance(l1, [1, 0], [0, 1]) == pytest.approx(2.0)
    assert induced_distance(QuasiNormSpec.maligranda_ap(2, 1), [1, 1], [0, 1]) == pytest.approx(2.0)


def test_induced_distance_rejects_mismatched_vectors():
    with pytest.raises(DimensionMismatch):
        induced_distance(QuasiNormSpec.standard_p(1), [1, 2], [1, 2, 3])


@pytest.mark.parametrize("spec", CATALOG_SPECS, ids=lambda s: s.name)
def test_induced_distance_is_a_quasimetric(spec):
    report = check_quasimetric(spec, sample_triples(2, count=10_000, seed=3))
    assert report.holds
    assert report.max_asymmetry == 0.0
    assert report.empirical_K <= spec.C * (1 + 1e-9)


# ---------------------------------------------------------------------------
# Axiom checks
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("spec", CATALOG_SPECS, ids=lambda s: s.name)
def test_homogeneity_holds_on_samples(spec):
    X = sample_vectors(2, 10_000, seed=1)
    t = sample_vectors(1, 10_000, seed=2)[:, 0]
    report = check_homogeneity(spec, X, t)
    assert report.holds
    assert report.max_relative_error <= 1e-12


@pytest.mark.parametrize("spec", CATALOG_SPECS, ids=lambda s: s.name)
def test_quasi_triangle_holds_on_samples(spec):
    report = check_quasi_triangle(spec, sample_pairs(2, 10_000, seed=0))
    assert report.holds
    assert report.violation_of_claimed_C is None
    assert report.empirical_C <= spec.C * (1 + 1e-9)


def test_point_separation():
    for spec in CATALOG_SPECS:
        assert eval_quasi_norm(spec, [1e-150, 0.0]) > 0


def test_l1_is_a_one_norm():
    report = check_p_norm(QuasiNormSpec.standard_p(1), 1.0, sample_pairs(3, 1000, seed=5))
    assert report.holds
    assert report.witness is None


def test_tychonoff_half_is_a_half_norm():
    report = check_p_norm(QuasiNormSpec.tychonoff_half(), 0.5, sample_pairs(4, 10_000, seed=5))
    assert report.holds


def test_maligranda_violates_subadditivity():
    spec = QuasiNormSpec.maligranda_ap(2, 1)
    report = check_p_norm(spec, 1.0, [((1.0, 0.1), (0.0, -0.1))])
    assert not report.holds
    assert report.worst_ratio == pytest.approx(2 / 1.2)
    x, y = report.witness
    assert x.tolist() == [1.0, 0.1]
    assert y.tolist() == [0.0, -0.1]


def test_maligranda_witness_stays_within_claimed_constant():
    report = check_quasi_triangle(QuasiNormSpec.maligranda_ap(2, 1), [((1.0, 0.1), (0.0, -0.1))])
    assert report.empirical_C == pytest.approx(5 / 3)
    assert report.holds


def test_maligranda_constant_approached_along_cancelling_pairs():
    spec = QuasiNormSpec.maligranda_ap(2, 1)
    report = check_quasi_triangle(spec, cancelling_pairs(2, count=10_000, seed=0))
    assert 1.99 <= report.empirical_C <= 2.0


def test_maligranda_constant_for_small_a_approached_along_axis_pairs():
    spec = QuasiNormSpec.maligranda_ap(1 / 3, 1)
    assert spec.C == pytest.approx(3.0)
    report = check_quasi_triangle(spec, axis_pairs(2, count=10_000, seed=0))
    assert 2.99 <= report.empirical_C <= spec.C
    assert report.holds

    # the cancelling family stays far from 1/a when a < 1
    assert check_quasi_triangle(spec, cancelling_pairs(2, count=10_000, seed=0)).empirical_C < 2.0


def test_tychonoff_constant_attained_at_basis_pair():
    spec = QuasiNormSpec.tychonoff_half()
    report = check_quasi_triangle(spec, [((1.0, 0.0), (0.0, 1.0))])
    assert report.empirical_C == 2.0
    assert report.holds


def test_empty_samples_are_rejected():
    with pytest.raises(EmptySampleSet):
        check_quasi_triangle(QuasiNormSpec.standard_p(2), [])


def test_mixed_dimension_samples_are_rejected():
    with pytest.raises(DimensionMismatch):
        check_p_norm(QuasiNormSpec.standard_p(1), 1.0, [((1, 2), (3, 4)), ((1, 2, 3), (4, 5, 6))])


# ---------------------------------------------------------------------------
# Series bound
# ---------------------------------------------------------------------------
def test_series_bound_tychonoff_basis():
    report = check_series_bound(QuasiNormSpec.tychonoff_half(), np.eye(3), 3)
    assert report.lhs == pytest.approx(9.0)
    assert report.rhs == pytest.approx(28.0)
    assert report.holds
    assert report.finite_sums_hold


def test_series_bound_l1_equality():
    report = check_series_bound(QuasiNormSpec.standard_p(1), np.eye(2), 2)
    assert report.lhs == pytest.approx(2.0)
    assert report.rhs == pytest.approx(2.0)
    assert report.holds


def test_series_bound_single_term():
    spec = QuasiNormSpec.p_quasi(0.5)
    x = [[3.0, -4.0]]
    report = check_series_bound(spec, x, 1)
    assert report.rhs == pytest.approx(spec.C ** 2 * report.lhs)
    assert report.holds


@pytest.mark.parametrize("spec", CATALOG_SPECS, ids=lambda s: s.name)
def test_series_bound_on_random_term_lists(spec):
    rng = np.random.default_rng(11)
    for _ in range(1000):
        m = int(rng.integers(1, 11))
        terms = rng.uniform(-10, 10, size=(m, 2))
        report = check_series_bound(spec, terms, m)
        assert report.holds
        assert report.finite_sums_hold


def test_series_bound_index_out_of_range():
    with pytest.raises(IndexOutOfRange):
        check_series_bound(QuasiNormSpec.standard_p(1), np.eye(3), 4)
    with pytest.raises(IndexOutOfRange):
        check_series_bound(QuasiNormSpec.standard_p(1), np.eye(3), 0)
