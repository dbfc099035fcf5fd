import math

import numpy as np
import pytest

from crossed_products.coefficients.block_algebra import AlgebraSpec, point_evaluation
from crossed_products.convolution.twisted_convolution import CcElement, delta, random_cc, unit
from crossed_products.decay.commutative_inequality import (
    commutative_inequality_check,
    commutative_inequality_sweep,
    fixed_point_defect,
    random_fixed_element,
    twisted_inequality_experiment,
)
from crossed_products.decay.content import content_probe, nested_content_probes, tail_profile
from crossed_products.decay.decay_probes import commutative_decay_chain, decay_constant_probe
from crossed_products.decay.weights import inverse_l2_norm, l1_route_bound, make_weight
from crossed_products.groups.discrete_groups import make_group, make_length
from crossed_products.systems.twisted_system import (
    ConditionViolation,
    make_system,
    permutation_action,
    theta_system,
    trivial_system,
)


@pytest.fixture
def z_length(z_group):
    return make_length(z_group)


# -- weights -------------------------------------------------------------------


def test_power_weight_value(z_length):
    kappa = make_weight("power", {"s": 3}, z_length)
    assert kappa((2,)) == pytest.approx(27.0)
    assert kappa((0,)) == pytest.approx(1.0)


def test_exponential_weight_value():
    group = make_group("Z^d", d=2)
    kappa = make_weight("exponential", {"r": 0.5}, make_length(group))
    assert kappa((1, 2)) == pytest.approx(8.0)


@pytest.mark.parametrize(
    "tag, params, expected",
    [
        ("power", {"s": 1}, True),
        ("power", {"s": 0.4}, False),
        ("constant", {}, False),
        ("exponential", {"r": 0.5}, True),
    ],
)
def test_inverse_square_summability_on_integers(z_length, tag, params, expected):
    assert make_weight(tag, params, z_length).inverse_square_summable is expected


def test_summability_on_free_group():
    L = make_length(make_group("free-F2"))
    assert make_weight("power", {"s": 5}, L).inverse_square_summable is False
    assert make_weight("exponential", {"r": 0.5}, L).inverse_square_summable is True
    assert make_weight("exponential", {"r": 0.6}, L).inverse_square_summable is False
    assert make_weight("exp", {"t": 1.0}, L).inverse_square_summable is True


def test_weight_parameters_are_validated(z_length):
    with pytest.raises(ValueError):
        make_weight("power", {"s": 0}, z_length)
    with pytest.raises(ValueError):
        make_weight("exponential", {"r": 1.5}, z_length)
    with pytest.raises(ValueError):
        make_weight("power", {"s": 1})
    with pytest.raises(ValueError):
        make_weight("gaussian", {}, z_length)


def test_inverse_l2_norm_and_l1_route(scalar_z, z_length, rng):
    kappa = make_weight("power", {"s": 1}, z_length)
    expected = math.sqrt(1 + 2 * (1 / 4 + 1 / 9))
    assert inverse_l2_norm(kappa, 2) == pytest.approx(expected)
    f = random_cc(scalar_z, scalar_z.group.ball(3), rng)
    l1, bound = l1_route_bound(f, kappa)
    assert l1 <= bound + 1e-12


# -- decay probes ----------------------------------------------------------------


def test_decay_probe_on_finite_group(twisted_z12, rng):
    kappa = make_weight("constant", {}, twisted_z12.length)
    probe = decay_constant_probe(twisted_z12, kappa, 2, 6, rng=rng, n_jobs=1)
    assert probe.ratios[0] == pytest.approx(1.0)
    assert probe.c_lower >= 1.0 - 1e-12
    assert probe.l1_route_holds
    assert probe.compression_radius == twisted_z12.group.full_radius


def test_decay_probe_on_integers(scalar_z, z_length, rng):
    kappa = make_weight("power", {"s": 1}, z_length)
    probe = decay_constant_probe(scalar_z, kappa, 3, 5, rng=rng, n_jobs=1)
    assert probe.compression_radius == 6
    assert probe.l1_route_holds
    assert probe.c_lower <= inverse_l2_norm(kappa, 3) + 1e-9
    assert probe.to_dict()["n_samples"] == 6


def test_commutative_decay_chain(rng):
    group = make_group("Z^d", d=1)
    system = trivial_system(group, AlgebraSpec((1, 1)))
    kappa = make_weight("power", {"s": 1}, make_length(group))
    chain = commutative_decay_chain(system, kappa, 2, 4, rng=rng)
    assert chain.holds
    assert chain.c_group > 0


def test_decay_chain_needs_commutative_trivial_systems(nc_torus, c2_trivial):
    algebra = AlgebraSpec((1, 1))
    group = c2_trivial.group
    moving = make_system(algebra, group, action=permutation_action(group, algebra, {"x": (1, 0)}))
    kappa = make_weight("constant", {}, moving.length)
    with pytest.raises(ValueError):
        commutative_decay_chain(moving, kappa, 1, 2)
    with pytest.raises(ValueError):
        commutative_decay_chain(trivial_system(group, AlgebraSpec((2,))), kappa, 1, 2)


# -- content -------------------------------------------------------------------


def test_content_of_a_singleton_is_one(rng):
    system = trivial_system(make_group("free-F2"))
    estimate = content_probe(system, [system.group.normal_form("a")], 2, rng=rng, n_jobs=1)
    assert estimate.lower == pytest.approx(1.0)
    assert estimate.upper == pytest.approx(1.0)


def test_content_respects_universal_and_scalar_bounds(rng):
    system = trivial_system(make_group("free-F2"))
    E = list(system.length.ball(1))
    estimate = content_probe(system, E, 2, rng=rng, n_jobs=1)
    assert estimate.upper_scalar == pytest.approx(math.sqrt(len(E)))
    assert estimate.upper_universal == len(E)
    assert 1.0 - 1e-9 <= estimate.lower <= estimate.upper_scalar + 1e-9
    assert estimate.within_bounds


def test_content_on_matrix_coefficients_has_only_the_universal_bound(rng):
    group = make_group("finite-cyclic", n=3)
    system = trivial_system(group, AlgebraSpec((2,)))
    estimate = content_probe(system, list(group.elements()), 1, rng=rng, n_jobs=1)
    assert estimate.upper_scalar is None
    assert estimate.lower <= 3 + 1e-9


def test_nested_probes_are_monotone(rng):
    system = trivial_system(make_group("free-F2"))
    L = system.length
    chain = [L.ball(0), L.ball(1)]
    estimates = nested_content_probes(system, chain, 1, rng=rng, n_jobs=1)
    assert estimates[0].radius == estimates[1].radius
    assert estimates[1].lower >= estimates[0].lower - 1e-12
    with pytest.raises(ValueError):
        nested_content_probes(system, [L.ball(1), L.ball(0)], 1)


def test_content_needs_a_subset(scalar_z):
    with pytest.raises(ValueError):
        content_probe(scalar_z, [], 1)


def test_tail_profile_of_geometric_field(z_length):
    xi = {(n,): 0.5 ** abs(n) for n in range(-6, 7)}
    frame = tail_profile(xi, z_length, norm="linf")
    assert list(frame.columns) == ["shell", "norm", "count"]
    np.testing.assert_allclose(frame["norm"].to_numpy(), [0.5**k for k in range(7)])
    assert frame["count"].tolist() == [1] + [2] * 6
    l1 = tail_profile(xi, z_length, norm="l1", max_shell=8)
    assert len(l1) == 9
    assert l1["norm"].iloc[-1] == 0.0


def test_tail_profile_of_element(scalar_z, z_length):
    f = delta(scalar_z, (3,)) * 2.0 + unit(scalar_z)
    frame = tail_profile(f, z_length, weight=make_weight("power", {"s": 1}, z_length))
    assert frame["norm"].tolist() == pytest.approx([1.0, 0.0, 0.0, 8.0])
    with pytest.raises(ValueError):
        tail_profile(f, z_length, norm="l3")


# -- commutative inequality ------------------------------------------------------


@pytest.fixture
def moving_c3():
    group = make_group("Z^d", d=1)
    algebra = AlgebraSpec((1, 1, 1))
    action = permutation_action(group, algebra, {"x": (1, 2, 0)})
    return make_system(algebra, group, action=action, cocycle=None)


def test_inequality_for_fixed_coefficients(moving_c3, rng):
    f = CcElement(moving_c3, {g: random_fixed_element(moving_c3, rng) for g in moving_c3.length.ball(2)})
    xi = random_cc(moving_c3, moving_c3.length.ball(1), rng)
    for j in range(3):
        result = commutative_inequality_check(f, xi, point_evaluation(moving_c3.algebra, j))
        assert result.passed
        assert result.residual >= -1e-12


def test_pointwise_inequality_for_point_supported_xi(moving_c3, rng):
    f = CcElement(moving_c3, {g: random_fixed_element(moving_c3, rng) for g in moving_c3.length.ball(2)})
    xi = CcElement(moving_c3, {(1,): moving_c3.algebra.random(rng)})
    result = commutative_inequality_check(f, xi, point_evaluation(moving_c3.algebra, 0), pointwise=True)
    assert result.pointwise_residual >= -1e-12


def test_inequality_rejects_unfixed_coefficients(moving_c3):
    a = moving_c3.algebra.from_diagonal([1.0, 0.0, 0.0])
    assert fixed_point_defect(moving_c3, a) == pytest.approx(1.0)
    f = CcElement(moving_c3, {(0,): a})
    with pytest.raises(ConditionViolation):
        commutative_inequality_check(f, unit(moving_c3), point_evaluation(moving_c3.algebra, 0))


def test_inequality_needs_commutative_coefficients(rng):
    system = trivial_system(make_group("finite-cyclic", n=2), AlgebraSpec((2,)))
    f = unit(system)
    omega = point_evaluation(AlgebraSpec((1,)), 0)
    with pytest.raises(ValueError):
        commutative_inequality_check(f, f, omega)


def test_inequality_sweep_on_twisted_system(rng):
    system = theta_system(make_group("Z^d", d=1), "1/7", AlgebraSpec((1, 1, 1)))
    sweep = commutative_inequality_sweep(system, 6, radius=2, rng=rng, n_jobs=1)
    assert sweep.passed
    assert sweep.min_residual >= -1e-12


def test_twisted_inequality_experiment_reports_without_raising(moving_c3, rng):
    sweep = twisted_inequality_experiment(moving_c3, 4, radius=1, rng=rng, n_jobs=1)
    assert sweep.trials == 4
    assert isinstance(sweep.counterexamples, list)


# -- threaded probes ---------------------------------------------------------------


def test_threaded_content_probe_matches_serial_on_free_group():
    estimates = []
    for n_jobs in (1, 2):
        system = trivial_system(make_group("free-F2"))
        E = list(system.length.ball(1))
        estimate = content_probe(system, E, 3, rng=np.random.default_rng(7), n_jobs=n_jobs)
        estimates.append(estimate)
    serial, threaded = estimates
    assert threaded.lower == pytest.approx(serial.lower, rel=1e-9)
    assert threaded.evaluations == serial.evaluations
    assert threaded.within_bounds


def test_threaded_decay_probe_matches_serial_on_free_group():
    probes = []
    for n_jobs in (1, 2):
        group = make_group("free-F2")
        system = trivial_system(group)
        kappa = make_weight("power", {"s": 2}, make_length(group))
        probes.append(decay_constant_probe(system, kappa, 1, 4, rng=np.random.default_rng(7), n_jobs=n_jobs))
    serial, threaded = probes
    np.testing.assert_allclose(threaded.ratios, serial.ratios, rtol=1e-9)
    assert threaded.l1_route_holds and serial.l1_route_holds
