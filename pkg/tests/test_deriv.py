"""Quotient-ladder derivatives: verdicts, exact cases, the decomposition."""

import numpy as np
import pytest

from pathcalc import (
    CONVERGED,
    ConfigError,
    DomainError,
    INCONCLUSIVE,
    IllConditionedError,
    NonDifferentiableError,
    OSCILLATING,
    QuotientLadder,
    brownian_path,
    builtin,
    constant_direction,
    d_gamma,
    d_horizontal,
    d_space,
    eval_direction,
    horizontal_from_gamma,
    judge,
    numerical_derivatives,
    ramp_path,
    recover_gradient,
    relation_residual,
    require_converged,
    running_avg_direction,
    zero_direction,
)
from pathcalc.deriv import ladder_flow_grid
from pathcalc.pathology import counterexample_functional


def _steps(ladder=None):
    return (ladder or QuotientLadder()).steps()


# ---------------------------------------------------------------------------
# the verdict machinery


def test_judge_converged_with_exact_richardson():
    lad = QuotientLadder()
    etas = lad.steps()
    rep = judge(etas, 2.0 + etas, lad.ratio)
    assert rep.verdict == CONVERGED
    # quotients 2 + eta: first-order Richardson recovers the limit exactly
    assert rep.estimate == 2.0
    assert rep.converged


def test_judge_oscillating_on_sin_log():
    lad = QuotientLadder()
    etas = lad.steps()
    rep = judge(etas, np.sin(np.log(etas)), lad.ratio)
    assert rep.verdict == OSCILLATING
    assert rep.alternations >= 3
    assert np.isnan(rep.estimate)


def test_judge_inconclusive_on_monotone_drift():
    lad = QuotientLadder()
    etas = lad.steps()
    rep = judge(etas, np.log(etas), lad.ratio)
    assert rep.verdict == INCONCLUSIVE
    assert rep.alternations == 0


def test_judge_inconclusive_on_nonfinite():
    lad = QuotientLadder()
    etas = lad.steps()
    q = 1.0 / etas
    q[-1] = np.inf
    rep = judge(etas, q, lad.ratio)
    assert rep.verdict == INCONCLUSIVE


def test_judge_scale_aware_tolerance():
    # spread of 5e-3 around a level of 1000 is converged, around 0 it is not
    lad = QuotientLadder()
    etas = lad.steps()
    wobble = 5e-3 * np.cos(np.arange(lad.count))
    assert judge(etas, 1000.0 + wobble, lad.ratio).verdict == CONVERGED
    assert judge(etas, wobble, lad.ratio).verdict != CONVERGED


def test_ladder_validation():
    with pytest.raises(ConfigError):
        QuotientLadder(eta0=0.0)
    with pytest.raises(ConfigError):
        QuotientLadder(ratio=1.0)
    with pytest.raises(ConfigError):
        QuotientLadder(count=3)


def test_require_converged_raises_with_name():
    lad = QuotientLadder()
    etas = lad.steps()
    rep = judge(etas, np.sin(np.log(etas)), lad.ratio)
    with pytest.raises(NonDifferentiableError) as exc:
        require_converged(rep, "d_gamma")
    assert exc.value.which == "d_gamma"
    assert exc.value.report is rep


def test_ladder_flow_grid_pins_ladder_points():
    etas = QuotientLadder().steps()
    grid = ladder_flow_grid(0.5, etas)
    assert grid[0] == 0.5
    assert np.all(np.diff(grid) > 0)
    for e in etas:
        assert 0.5 + e in grid


# ---------------------------------------------------------------------------
# the three derivative studies


def test_space_central_exact_on_square():
    # dyadic data: ((x+h)^2 - (x-h)^2) / 2h is exactly 2x for every rung
    rep = d_space(builtin("square"), 0, 0.5, ramp_path(1.0, 1.0, n=1025))
    assert np.all(rep.quotients == 1.0)
    assert rep.estimate == 1.0
    assert rep.spread_tail == 0.0


def test_space_forward_square_richardson_exact():
    rep = d_space(builtin("square"), 0, 0.5, ramp_path(1.0, 1.0, n=1025),
                  scheme="forward")
    # forward quotients are 2x + h; the ladder is dyadic so Richardson
    # cancels the h term without rounding
    assert np.array_equal(rep.quotients, 1.0 + rep.etas)
    assert rep.estimate == 1.0


def test_space_of_integral_is_zero():
    rep = d_space(builtin("integral"), 0, 0.5, ramp_path(1.0, 1.0, n=129))
    assert np.all(rep.quotients == 0.0)
    assert rep.estimate == 0.0


def test_space_argument_checks():
    r = ramp_path(1.0, 1.0, n=65)
    with pytest.raises(DomainError):
        d_space(builtin("eval"), 2, 0.5, r)
    with pytest.raises(ConfigError):
        d_space(builtin("eval"), 0, 0.5, r, scheme="sideways")


def test_zero_direction_study_equals_horizontal_bitwise():
    x = brownian_path(11, 0, n_exp=10)
    F = builtin("exp_eval")
    rg = d_gamma(F, zero_direction(1), 0.5, x)
    rh = d_horizontal(F, 0.5, x)
    assert np.array_equal(rg.quotients, rh.quotients)
    assert rg.verdict == rh.verdict
    assert rg.estimate == rh.estimate


def test_horizontal_of_integral_is_current_value():
    r = ramp_path(1.0, 1.0, n=1025)
    rep = d_horizontal(builtin("integral"), 0.5, r)
    # frozen extension adds exactly x(t) * eta to the integral
    assert np.all(rep.quotients == 0.5)
    assert rep.estimate == 0.5


def test_gamma_of_integral_estimates_current_value():
    x = brownian_path(3, 1, n_exp=10)
    want = x.eval(0.5)[0]
    for gamma in (eval_direction(1), running_avg_direction(1)):
        rep = d_gamma(builtin("integral"), gamma, 0.5, x)
        assert rep.converged
        assert abs(rep.estimate - want) <= 1e-6


def test_gamma_ladder_needs_room():
    r = ramp_path(1.0, 1.0, n=65)
    with pytest.raises(DomainError):
        d_gamma(builtin("eval"), eval_direction(1), 0.995, r)


# ---------------------------------------------------------------------------
# the derivative relation and gradient recovery


def test_relation_eval_constant_direction_is_tight():
    x = brownian_path(1, 4, n_exp=10)
    rel = relation_residual(builtin("eval"), constant_direction([0.7]),
                            0.5, x)
    assert abs(rel.residual) <= 1e-8
    assert abs(rel.gradient[0] - 1.0) <= 1e-12


def test_relation_square_flow_direction():
    x = brownian_path(2, 5, n_exp=10)
    rel = relation_residual(builtin("square"), eval_direction(1), 0.5, x)
    assert abs(rel.residual) <= 1e-4


def test_relation_names_failing_derivative():
    r = ramp_path(1.0, 1.0, n=1025)
    with pytest.raises(NonDifferentiableError) as exc:
        relation_residual(counterexample_functional(),
                          constant_direction([2.0]), 0.5, r)
    assert exc.value.which == "d_gamma"


def test_recover_gradient_scalar_canonical():
    x = brownian_path(4, 2, n_exp=10)
    rec = recover_gradient(builtin("eval"), [constant_direction([1.0])],
                           0.5, x)
    assert abs(rec.gradient[0] - 1.0) <= 1e-6
    assert rec.cond == 1.0


def test_recover_gradient_product_two_dim():
    x = brownian_path(8, 0, n_exp=10, dim=2)
    want = x.eval(0.5)[::-1]
    canonical = [constant_direction([1.0, 0.0]),
                 constant_direction([0.0, 1.0])]
    rec = recover_gradient(builtin("product"), canonical, 0.5, x)
    assert np.abs(rec.gradient - want).max() <= 1e-6
    mixed = [constant_direction([1.0, 0.5]), constant_direction([-0.25, 1.0])]
    rec2 = recover_gradient(builtin("product"), mixed, 0.5, x)
    assert np.abs(rec2.gradient - want).max() <= 1e-6


def test_recover_gradient_rejects_singular_system():
    x = brownian_path(4, 2, n_exp=10, dim=2)
    nearly = [constant_direction([1.0, 1.0]),
              constant_direction([1.0, 1.0 + 1e-12])]
    with pytest.raises(IllConditionedError) as exc:
        recover_gradient(builtin("product"), nearly, 0.5, x)
    assert exc.value.cond > 1e8
    with pytest.raises(DomainError):
        recover_gradient(builtin("product"), nearly[:1], 0.5, x)


def test_horizontal_average_reconstructs_time_derivative():
    r = ramp_path(1.0, 1.0, n=1025)
    gamma = constant_direction([1.0])
    # integral functional: DF = x(t), the gamma part of the integrand is 0
    avg = horizontal_from_gamma(builtin("integral"), gamma, 0.4, r, 0.2)
    ref = d_horizontal(builtin("integral"), 0.4, r).estimate
    assert abs(avg.value - 0.4) <= 1e-6
    assert abs(avg.value - ref) <= 1e-6
    # square functional: DF = 0 and the two integrand parts cancel
    avg2 = horizontal_from_gamma(builtin("square"), gamma, 0.4, r, 0.2)
    assert abs(avg2.value) <= 1e-6
    with pytest.raises(DomainError):
        horizontal_from_gamma(builtin("square"), gamma, 0.4, r, -0.1)


# ---------------------------------------------------------------------------
# ladder-backed derivative bundles


def test_numerical_derivatives_of_square():
    F = numerical_derivatives(builtin("square"), dim=1)
    r = ramp_path(1.0, 1.0, n=1025)
    assert abs(F.partial_t.eval(0.5, r)) <= 1e-8
    assert F.grad_vector(0.5, r)[0] == 1.0
    assert abs(F.hess_matrix(0.5, r)[0, 0] - 2.0) <= 1e-9


def test_numerical_derivatives_cross_term():
    F = numerical_derivatives(builtin("product"), dim=2)
    x = ramp_path([1.0, 2.0], 1.0, n=129)
    h = F.hess_matrix(0.5, x)
    assert abs(h[0, 1] - 1.0) <= 1e-9
    assert abs(h[1, 0] - 1.0) <= 1e-9
    assert abs(h[0, 0]) <= 1e-9


def test_numerical_derivatives_refuses_running_max():
    with pytest.raises(DomainError):
        numerical_derivatives(builtin("running_max"))
