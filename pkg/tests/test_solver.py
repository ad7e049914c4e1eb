import numpy as np
import pytest

from core.errors import (
    DivergenceDetected,
    DominationViolated,
    EmptySampleSet,
    FixedPointNotSharedByU,
    InsufficientTrace,
    InvalidParameter,
    MaxIterationsExceeded,
    NumericalOverflow,
)
from core.maps import EnrichedParams, MapSpec
from core.quasi_space import QuasiNormSpec, induced_distance
from core.solver import (
    IterationTrace,
    SolveMode,
    SolverConfig,
    asymptotic_solve,
    cauchy_ratio_check,
    check_domination,
    error_bound,
    error_bounds,
    iterations_needed,
    krasnoselskij_solve,
    maia_solve,
    uniqueness_probe,
)
from utils.sampling import sample_vectors

MALIGRANDA = QuasiNormSpec.maligranda_ap(2, 1)
REFLECTION_PARAMS = EnrichedParams.from_b_theta(0.5, 0.5)
CENTRE = np.array([0.5, 0.5])


def _solve_reflection(x0=(2.0, 2.0), **cfg):
    return krasnoselskij_solve(MapSpec.reflection(2), REFLECTION_PARAMS, MALIGRANDA, x0,
                               SolverConfig(**cfg))


# ---------------------------------------------------------------------------
# Krasnoselskij iteration
# ---------------------------------------------------------------------------
def test_reflection_converges_to_centre():
    result = _solve_reflection()
    assert result.point.tolist() == pytest.approx([0.5, 0.5], abs=1e-9)
    assert result.certified_residual <= 1e-9
    assert result.lambda_used == pytest.approx(2 / 3)
    assert result.params.c == pytest.approx(1 / 3)
    assert result.mode == SolveMode.SOLVE
    assert result.trace.residuals[-1] <= 1e-10
    assert result.iterations == len(result.trace.residuals)


def test_reflection_first_residual_and_step_count():
    result = _solve_reflection()
    assert result.trace.residuals[0] == pytest.approx(4.0)
    # r_n = 4 * 3^-n drops below 1e-10 at n = 23
    assert 22 <= result.iterations <= 26


def test_residual_ratios_respect_contraction_coefficient():
    result = _solve_reflection()
    c = result.params.c
    r = result.trace.residuals
    for prev, cur in zip(r, r[1:]):
        assert cur <= (c + 1e-9) * prev + 1e-14


def test_error_bounds_hold_along_the_trace():
    result = _solve_reflection()
    trace = result.trace
    for row in error_bounds(trace, result.params.c, i_max=3):
        if row["target"] >= len(trace.points):
            continue
        actual = induced_distance(MALIGRANDA, trace.points[row["target"]], CENTRE)
        assert actual <= row["bound"] + 1e-9


def test_error_bounds_hold_for_half_scaling():
    params = EnrichedParams.from_b_theta(0.0, 0.5)
    spec = QuasiNormSpec.standard_p(2)
    result = krasnoselskij_solve(MapSpec.scalar(0.5, 2), params, spec, [8.0, -4.0])
    trace = result.trace
    for row in error_bounds(trace, params.c, i_max=3):
        if row["target"] >= len(trace.points):
            continue
        actual = induced_distance(spec, trace.points[row["target"]], [0.0, 0.0])
        assert actual <= row["bound"] + 1e-9


def test_error_estimate_uses_last_residual():
    result = _solve_reflection()
    assert result.error_estimate == pytest.approx(
        error_bound(result.params.c, 1, result.trace.residuals[-1]))


def test_start_at_the_fixed_point_stops_at_once():
    result = _solve_reflection(x0=(0.5, 0.5))
    assert result.iterations == 1
    assert result.point.tolist() == pytest.approx([0.5, 0.5])


def test_callback_sees_every_iteration():
    seen = []
    krasnoselskij_solve(MapSpec.reflection(2), REFLECTION_PARAMS, MALIGRANDA, [2, 2],
                        on_iteration=lambda k, x, r: seen.append((k, r)))
    assert [k for k, _ in seen] == list(range(1, len(seen) + 1))
    assert seen[0][1] == pytest.approx(4.0)


def test_plain_picard_on_reflection_oscillates():
    with pytest.raises(DivergenceDetected) as info:
        _solve_reflection(lambda_override=1.0)
    exc = info.value
    assert exc.trace.residuals == [6.0] * 21
    assert exc.iterations == 21
    assert exc.gamma_hat == 1.0
    assert [p.tolist() for p in exc.trace.points[:3]] == [[2.0, 2.0], [-1.0, -1.0], [2.0, 2.0]]


def test_expansive_map_is_caught_by_divergence_window():
    params = EnrichedParams.from_b_theta(0.0, 0.5)
    with pytest.raises(DivergenceDetected) as info:
        krasnoselskij_solve(MapSpec.scalar(2.0, 2), params, QuasiNormSpec.standard_p(2), [1, 1])
    assert info.value.gamma_hat == pytest.approx(2.0)


def test_overflow_is_reported_before_inf():
    params = EnrichedParams.from_b_theta(0.0, 0.5)
    cfg = SolverConfig(divergence_window=1000, max_iter=5000)
    with pytest.raises(NumericalOverflow) as info:
        krasnoselskij_solve(MapSpec.scalar(2.0, 1), params, QuasiNormSpec.standard_p(1), [1.0], cfg)
    trace = info.value.trace
    assert info.value.iterations == 498
    assert np.all(np.isfinite(trace.points[-1]))


def test_max_iterations():
    params = EnrichedParams.from_b_theta(0.0, 0.5)
    with pytest.raises(MaxIterationsExceeded) as info:
        krasnoselskij_solve(MapSpec.scalar(0.5, 2), params, QuasiNormSpec.standard_p(2), [8, 8],
                            SolverConfig(max_iter=5))
    assert info.value.iterations == 5
    assert info.value.trace.points[-1].tolist() == [0.25, 0.25]


@pytest.mark.parametrize("kwargs", [
    {"tol": 0.0},
    {"max_iter": 0},
    {"lambda_override": 1.5},
    {"lambda_override": 0.0},
    {"divergence_window": 0},
    {"divergence_margin": 1.0},
])
def test_solver_config_validation(kwargs):
    with pytest.raises(InvalidParameter):
        SolverConfig(**kwargs)


# ---------------------------------------------------------------------------
# Error estimates
# ---------------------------------------------------------------------------
def test_error_bound_values():
    assert error_bound(0.5, 2, 1.0) == pytest.approx(0.5)
    assert error_bound(1 / 3, 2, 1.0) == pytest.approx(1 / 6)
    assert error_bound(0.0, 1, 5.0) == 0.0


@pytest.mark.parametrize("c,i,r", [(1.0, 1, 1.0), (-0.1, 1, 1.0), (0.5, 0, 1.0), (0.5, 1, -1.0)])
def test_error_bound_rejects_bad_arguments(c, i, r):
    with pytest.raises(InvalidParameter):
        error_bound(c, i, r)


def test_error_bound_rows_index_targets():
    trace = IterationTrace.from_residuals([1.0, 0.5])
    rows = error_bounds(trace, 0.5, i_max=2)
    assert [(row["n"], row["i"], row["target"]) for row in rows] == [
        (1, 1, 1), (1, 2, 2), (2, 1, 2), (2, 2, 3)]
    assert rows[0]["bound"] == pytest.approx(1.0)


def test_iterations_needed():
    assert iterations_needed(0.5, 1.0, 0.01) == 8
    assert iterations_needed(0.0, 1.0, 1e-3) == 1
    assert iterations_needed(0.5, 0.0, 1e-3) == 0


def test_iterations_needed_is_the_smallest_sufficient_count():
    rng = np.random.default_rng(2)
    for _ in range(200):
        c = float(rng.uniform(0.01, 0.99))
        r = float(rng.uniform(0.1, 100))
        eps = float(10 ** rng.uniform(-10, -1))
        n = iterations_needed(c, r, eps)
        assert error_bound(c, n, r) <= eps
        if n > 1:
            assert error_bound(c, n - 1, r) > eps


# ---------------------------------------------------------------------------
# Cauchy ratio criterion
# ---------------------------------------------------------------------------
def test_geometric_residuals():
    trace = IterationTrace.from_residuals([2.0 ** -n for n in range(30)])
    report = cauchy_ratio_check(trace, window=10)
    assert report.gamma_hat == 0.5
    assert report.is_contractive_tail


def test_settled_residuals_give_zero_ratio():
    trace = IterationTrace.from_residuals([1.0, 0.0, 0.0, 0.0, 0.0])
    report = cauchy_ratio_check(trace, window=3)
    assert report.gamma_hat == 0.0
    assert report.is_contractive_tail


def test_constant_residuals_are_not_contractive():
    report = cauchy_ratio_check(IterationTrace.from_residuals([1.0] * 10), window=5)
    assert report.gamma_hat == 1.0
    assert not report.is_contractive_tail


def test_short_trace():
    with pytest.raises(InsufficientTrace):
        cauchy_ratio_check(IterationTrace.from_residuals([1.0, 0.5, 0.25]), window=5)


# ---------------------------------------------------------------------------
# Asymptotic solve
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("x0", [-10.0, 0.0, 5.0, 100.0])
def test_step_map_squared(x0):
    params = EnrichedParams.from_b_theta(0.0, 0.0)
    result = asymptotic_solve(MapSpec.step(), 2, params, QuasiNormSpec.standard_p(1), [x0])
    assert result.point.tolist() == [0.0]
    assert result.iterations <= 2
    assert result.unit_residual == 0.0
    assert result.mode == SolveMode.ASYMPTOTIC
    assert result.n_iterate == 2


def test_first_power_matches_plain_solve():
    U = MapSpec.scalar(0.5, 2)
    params = EnrichedParams.from_b_theta(0.0, 0.5)
    spec = QuasiNormSpec.standard_p(2)
    plain = krasnoselskij_solve(U, params, spec, [3.0, -7.0])
    asym = asymptotic_solve(U, 1, params, spec, [3.0, -7.0])
    assert asym.trace.residuals == plain.trace.residuals
    assert np.array_equal(asym.point, plain.point)


def test_third_power_of_half_scaling():
    params = EnrichedParams.from_b_theta(0.0, 0.125)
    result = asymptotic_solve(MapSpec.scalar(0.5, 3), 3, params, QuasiNormSpec.standard_p(2),
                              [8.0, 8.0, 8.0])
    assert np.max(np.abs(result.point)) <= 1e-9
    assert result.unit_residual <= 1e-9


def test_limit_not_fixed_by_unit_map():
    # U swaps and rescales the coordinates; U^2 = 0.1 I, but U magnifies the
    # first coordinate of the limit.
    U = MapSpec.affine([[0.0, 1e6], [1e-7, 0.0]])
    params = EnrichedParams.from_b_theta(0.0, 0.1)
    with pytest.raises(FixedPointNotSharedByU) as info:
        asymptotic_solve(U, 2, params, QuasiNormSpec.max_norm(), [1.0, 1.0])
    exc = info.value
    assert exc.unit_residual > 1e-9
    assert exc.result.n_iterate == 2
    assert exc.iterations == exc.result.iterations


# ---------------------------------------------------------------------------
# Two-norm solve
# ---------------------------------------------------------------------------
def test_maia_solve_converges():
    d, rho = QuasiNormSpec.max_norm(2), QuasiNormSpec.standard_p(1, 2)
    result = maia_solve(MapSpec.reflection(2), d, rho, REFLECTION_PARAMS, [2.0, 2.0],
                        domination_samples=sample_vectors(2, 10_000, seed=0))
    assert result.mode == SolveMode.MAIA
    assert result.point.tolist() == pytest.approx([0.5, 0.5], abs=1e-9)
    assert result.certified_residual_rho <= 1e-9
    assert len(result.trace.diagnostic_residuals) == result.iterations
    diag = result.trace.diagnostic_residuals
    for prev, cur in zip(diag, diag[1:]):
        assert cur <= (1 / 3 + 1e-9) * prev + 1e-14


def test_maia_solve_rejects_non_dominating_norms():
    d, rho = QuasiNormSpec.standard_p(1, 2), QuasiNormSpec.max_norm(2)
    with pytest.raises(DominationViolated) as info:
        maia_solve(MapSpec.reflection(2), d, rho, REFLECTION_PARAMS, [2.0, 2.0],
                   domination_samples=[[1.0, 0.0], [1.0, 1.0]])
    exc = info.value
    assert exc.witness.tolist() == [1.0, 1.0]
    assert exc.norm_d == 2.0
    assert exc.norm_rho == 1.0
    assert exc.trace is None


def test_maia_solve_needs_samples():
    d, rho = QuasiNormSpec.max_norm(2), QuasiNormSpec.standard_p(1, 2)
    with pytest.raises(EmptySampleSet):
        maia_solve(MapSpec.reflection(2), d, rho, REFLECTION_PARAMS, [2.0, 2.0])


def test_domination_ratio():
    Z = sample_vectors(2, 500, seed=3)
    worst = check_domination(QuasiNormSpec.max_norm(2), QuasiNormSpec.standard_p(1, 2), Z)
    assert 0.5 <= worst <= 1.0


# ---------------------------------------------------------------------------
# Uniqueness probe
# ---------------------------------------------------------------------------
def test_uniqueness_probe_agrees_across_worker_counts():
    serial = uniqueness_probe(MapSpec.reflection(2), REFLECTION_PARAMS, MALIGRANDA, starts=20)
    threaded = uniqueness_probe(MapSpec.reflection(2), REFLECTION_PARAMS, MALIGRANDA,
                                starts=20, jobs=4)
    assert serial.converged
    assert serial.max_spread <= 1e-6
    assert np.array_equal(serial.points, threaded.points)
    assert serial.to_dict()["mean_point"] == pytest.approx([0.5, 0.5], abs=1e-9)
