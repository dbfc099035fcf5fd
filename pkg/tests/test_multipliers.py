import numpy as np
import pytest

from crossed_products.coefficients.block_algebra import AlgebraSpec, PointMapEndomorphism, block_permutation
from crossed_products.convolution.twisted_convolution import CcElement, delta, expectation, random_cc
from crossed_products.decay.weights import make_weight
from crossed_products.groups.discrete_groups import make_group, make_length
from crossed_products.ideals.invariant_ideals import InvariantIdeal
from crossed_products.modules.equivariant import trivial_rep, unitary_rep_from_generators
from crossed_products.modules.hilbert_module import ModuleVector
from crossed_products.multipliers.multipliers import (
    delta_kernel,
    fejer_kernel,
    geometric_kernel,
    identity_multiplier,
    make_decay_multiplier,
    make_endo_multiplier,
    make_gilbert_multiplier,
    make_left_multiplier,
    make_matrix_coeff_multiplier,
    make_right_multiplier,
    make_scalar_multiplier,
    multiplier_norm_probe,
    preserves_ideal,
    scalar_gilbert_data,
    table_kernel,
    tensor_coefficient_multiplier,
)
from crossed_products.multipliers.positive_definite import pd_check
from crossed_products.systems.twisted_system import ConditionViolation, make_system, permutation_action, trivial_system


def test_fejer_and_geometric_kernels_are_positive_definite(z_group):
    S = z_group.ball(5)
    assert pd_check(fejer_kernel(z_group, 4), S, z_group).is_pd
    assert pd_check(geometric_kernel(0.7, make_length(z_group)), S, z_group).is_pd


def test_indefinite_kernel_detected(z_group):
    phi = table_kernel(z_group, {"1": 1.0, "-1": 1.0})
    check = pd_check(phi, z_group.ball(2), z_group)
    assert not check.is_pd
    assert check.min_eigenvalue < -0.5
    assert check.size == 5


def test_pd_check_input_errors(z_group):
    with pytest.raises(ValueError):
        pd_check(table_kernel(z_group, {"1": 1j, "-1": 1j}), z_group.ball(1), z_group)
    with pytest.raises(ValueError):
        pd_check(fejer_kernel(z_group, 2), [], z_group)


def test_fejer_kernel_values_and_support(z_group):
    kernel = fejer_kernel(z_group, 4)
    assert kernel((0,)) == pytest.approx(1.0)
    assert kernel((3,)) == pytest.approx(0.25)
    assert len(kernel.support) == 7


def test_scalar_multiplier_bound_defaults_to_value_at_identity(nc_torus):
    T = make_scalar_multiplier(nc_torus, geometric_kernel(0.5, nc_torus.length))
    assert T.bound == pytest.approx(1.0)
    f = delta(nc_torus, (1, 1))
    assert T.apply(f).coefficient((1, 1)).is_close(nc_torus.algebra.scalar(0.25))


def test_matrix_coefficient_at_identity_is_inner_product(nc_torus, rng):
    rep = trivial_rep(nc_torus)
    x, y = ModuleVector.random(nc_torus.algebra, 1, rng), ModuleVector.random(nc_torus.algebra, 1, rng)
    T = make_matrix_coeff_multiplier(rep, x, y)
    assert T(nc_torus.identity, nc_torus.algebra.unit()).is_close(x.inner(y))
    assert T.bound == pytest.approx(x.norm() * y.norm())


def test_tensor_coefficient_multiplier(twisted_z12, rng):
    rep = trivial_rep(twisted_z12)
    x = ModuleVector.random(twisted_z12.algebra, 1, rng)
    y = ModuleVector.random(twisted_z12.algebra, 1, rng)
    xi, eta = np.array([1.0, 1j]), np.array([0.5, 2.0])
    omega = np.exp(2j * np.pi / 12)
    w = unitary_rep_from_generators(twisted_z12.group, {"x": np.diag([1.0, omega])})
    T = tensor_coefficient_multiplier(rep, x, y, w, xi, eta)
    one = twisted_z12.algebra.unit()
    assert T(twisted_z12.identity, one).is_close(x.inner(y) * complex(np.vdot(xi, eta)))


def test_gilbert_pair_from_characters(scalar_z):
    theta = 0.3
    pi, eta1, eta2 = scalar_gilbert_data(
        scalar_z, lambda g: np.array([np.exp(1j * theta * g[0])]), lambda g: np.array([np.exp(1j * theta * g[0])]), 1
    )
    T = make_gilbert_multiplier(scalar_z, pi, eta1, eta2, "left", scalar_z.group.ball(2), rank=1)
    assert T.bound == pytest.approx(1.0)
    value = T((2,), scalar_z.algebra.unit())
    assert value.is_close(scalar_z.algebra.scalar(np.exp(-2j * theta)))


def test_gilbert_factorization_failure_has_witness(scalar_z):
    pi, eta1, eta2 = scalar_gilbert_data(
        scalar_z, lambda g: np.ones(1), lambda g: np.array([1.0 + g[0] ** 2]), 1
    )
    with pytest.raises(ConditionViolation) as info:
        make_gilbert_multiplier(scalar_z, pi, eta1, eta2, "left", scalar_z.group.ball(1), rank=1)
    assert info.value.witness is not None
    assert info.value.residual > 1e-10


def test_gilbert_side_is_checked(scalar_z):
    pi, eta1, eta2 = scalar_gilbert_data(scalar_z, lambda g: np.ones(1), lambda g: np.ones(1), 1)
    with pytest.raises(ValueError):
        make_gilbert_multiplier(scalar_z, pi, eta1, eta2, "middle", scalar_z.group.ball(1), rank=1)


def test_endomorphism_multiplier(c2_trivial, rng):
    swap = block_permutation(c2_trivial.algebra, (1, 0))
    T = make_endo_multiplier(c2_trivial, swap)
    a = c2_trivial.algebra.from_diagonal([1.0, 3.0])
    np.testing.assert_allclose(T((1,), a).coordinates(), [3.0, 1.0])
    assert not preserves_ideal(T, InvariantIdeal(c2_trivial.algebra, (0,)), [c2_trivial.identity], rng=rng)


def test_endomorphism_must_commute_with_the_action():
    group = make_group("finite-cyclic", n=3)
    algebra = AlgebraSpec((1, 1, 1))
    system = make_system(algebra, group, action=permutation_action(group, algebra, {"x": (1, 2, 0)}))
    with pytest.raises(ConditionViolation):
        make_endo_multiplier(system, PointMapEndomorphism(algebra, (0, 0, 0)))


def test_scalar_multipliers_preserve_ideals(c2_trivial, rng):
    T = make_scalar_multiplier(c2_trivial, fejer_kernel(c2_trivial.group, 1))
    ideal = InvariantIdeal(c2_trivial.algebra, (1,))
    assert preserves_ideal(T, ideal, c2_trivial.group.elements(), rng=rng)


def test_norm_probe_on_finite_group_is_exact(twisted_z12, rng):
    probe = multiplier_norm_probe(identity_multiplier(twisted_z12), 4, rng=rng, n_jobs=1)
    assert probe.exact_denominator
    np.testing.assert_allclose(probe.ratios, 1.0, rtol=1e-9)
    fejer = make_scalar_multiplier(twisted_z12, fejer_kernel(twisted_z12.group, 1), bound=1.0)
    assert multiplier_norm_probe(fejer, 4, rng=rng, n_jobs=1).ratio_max <= 1.0 + 1e-9


def test_norm_probe_on_infinite_group_stays_below_bound(nc_torus, rng):
    T = make_scalar_multiplier(nc_torus, geometric_kernel(0.6, nc_torus.length))
    probe = multiplier_norm_probe(T, 3, rng=rng, support_radius=1, n_jobs=1)
    assert not probe.exact_denominator
    assert probe.ratio_max <= T.bound + 1e-9
    assert len(probe.ratios) == 4


def test_multiplier_application_checks_the_system(nc_torus, scalar_z, rng):
    f = random_cc(scalar_z, scalar_z.group.ball(1), rng)
    with pytest.raises(ValueError):
        identity_multiplier(nc_torus).apply(f)


def test_delta_kernel_gives_the_expectation(nc_torus, rng):
    T = make_scalar_multiplier(nc_torus, delta_kernel(nc_torus.group))
    f = random_cc(nc_torus, nc_torus.length.ball(1), rng)
    assert T.apply(f).distance(CcElement(nc_torus, {nc_torus.identity: expectation(f)})) <= 1e-12


def test_left_and_right_multipliers(rng):
    system = trivial_system(make_group("finite-cyclic", n=3), AlgebraSpec((2,)))
    b = system.algebra.random(rng)
    a = system.algebra.random(rng)
    left = make_left_multiplier(system, lambda g: b, bound=b.norm())
    right = make_right_multiplier(system, lambda g: b, bound=b.norm())
    assert left((1,), a).is_close(b * a)
    assert right((1,), a).is_close(a * b)


def test_decay_multiplier_bound(scalar_z):
    kappa = make_weight("power", {"s": 1}, make_length(scalar_z.group))

    def psi(g):
        return scalar_z.algebra.scalar(0.5 ** abs(g[0]))

    T = make_decay_multiplier(scalar_z, psi, kappa, 2.0, scalar_z.group.ball(3))
    assert T.bound == pytest.approx(2.0)
    assert T((2,), scalar_z.algebra.unit()).is_close(scalar_z.algebra.scalar(0.25))
    with pytest.raises(ValueError):
        make_decay_multiplier(scalar_z, psi, kappa, 0.0, scalar_z.group.ball(3))
