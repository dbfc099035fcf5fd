import numpy as np
import pytest

from crossed_products.coefficients.block_algebra import AlgebraSpec
from crossed_products.convolution.regular_representation import (
    apply_regular,
    compression_matrix,
    full_regular_matrix,
    opnorm_bounds,
    opnorm_lower,
)
from crossed_products.convolution.twisted_convolution import (
    CcElement,
    alpha_norm,
    alpha_square,
    coefficients_vanish,
    delta,
    expectation,
    fourier_coefficient,
    l1_norm,
    linf_norm,
    norms,
    random_cc,
    unit,
)
from crossed_products.groups.discrete_groups import make_group
from crossed_products.systems.twisted_system import make_system, permutation_action, trivial_system


@pytest.fixture
def swap_z4():
    group = make_group("finite-cyclic", n=4)
    algebra = AlgebraSpec((1, 1, 2))
    return make_system(algebra, group, action=permutation_action(group, algebra, {"x": (1, 0, 2)}))


@pytest.fixture(params=["nc_torus", "twisted_z12", "swap_z4", "sl2z"])
def system(request):
    if request.param == "sl2z":
        return request.getfixturevalue("sl2z_model").system
    return request.getfixturevalue(request.param)


def _random(system, rng, radius=1):
    return random_cc(system, system.length.ball(radius), rng)


def test_small_coefficients_are_dropped(scalar_z):
    f = CcElement(scalar_z, {(0,): scalar_z.algebra.scalar(1e-16), (1,): scalar_z.algebra.scalar(2.0)})
    assert f.support == ((1,),)
    assert expectation(f).norm() == 0.0


def test_product_is_associative(system, rng):
    f1, f2, f3 = (_random(system, rng) for _ in range(3))
    assert ((f1 * f2) * f3).distance(f1 * (f2 * f3)) <= 1e-10


def test_unit_is_neutral(system, rng):
    f = _random(system, rng)
    assert (unit(system) * f).distance(f) <= 1e-12
    assert (f * unit(system)).distance(f) <= 1e-12


def test_involution_is_antimultiplicative(system, rng):
    f1, f2 = _random(system, rng), _random(system, rng)
    assert f1.star().star().distance(f1) <= 1e-12
    assert (f1 * f2).star().distance(f2.star() * f1.star()) <= 1e-10


def test_expectation_of_square_is_alpha_square(system, rng):
    f = _random(system, rng)
    assert expectation(f.star() * f).is_close(alpha_square(f))


def test_fourier_coefficients_read_values(nc_torus, rng):
    f = _random(nc_torus, rng)
    for g, a in f.items():
        assert fourier_coefficient(f, g).is_close(a)
    assert fourier_coefficient(f, (5, 5)).norm() == 0.0


def test_noncommutative_torus_commutation(nc_torus):
    u = delta(nc_torus, (1, 0))
    v = delta(nc_torus, (0, 1))
    phase = np.exp(2j * np.pi / 5)
    assert (v * u).distance(u * v * phase) <= 1e-12 or (u * v).distance(v * u * phase) <= 1e-12


def test_norm_ordering(system, rng):
    f = _random(system, rng)
    assert linf_norm(f) <= alpha_norm(f) + 1e-12
    assert alpha_norm(f) <= l1_norm(f) + 1e-12
    assert norms(f, "l1") == l1_norm(f)
    with pytest.raises(ValueError):
        norms(f, "2kappa")
    with pytest.raises(ValueError):
        norms(f, "l7")


def test_mixing_systems_is_rejected(scalar_z, nc_torus):
    with pytest.raises(ValueError):
        unit(scalar_z) + CcElement(trivial_system(scalar_z.group), {})
    with pytest.raises(TypeError):
        unit(nc_torus) + 1


@pytest.mark.parametrize("R", [1, 4, 16, 64])
def test_path_graph_compressions(scalar_z, R):
    f = delta(scalar_z, (1,)) + delta(scalar_z, (-1,))
    assert compression_matrix(f, R).dimension == 2 * R + 1
    np.testing.assert_allclose(opnorm_lower(f, R), 2 * np.cos(np.pi / (2 * R + 2)), rtol=1e-9)


def test_opnorm_bounds_bracket(scalar_z):
    f = delta(scalar_z, (1,)) + delta(scalar_z, (-1,))
    bounds = opnorm_bounds(f, [1, 4, 16], n_jobs=1)
    assert bounds.upper == pytest.approx(2.0)
    assert bounds.lower <= bounds.upper
    running = [value for _, value in bounds.trace]
    assert running == sorted(running)
    assert bounds.exact is None
    assert list(bounds.to_frame().columns) == ["radius", "largest_singular_value"]


def test_regular_representation_is_multiplicative(twisted_z12, rng):
    f1 = random_cc(twisted_z12, twisted_z12.group.elements()[:5], rng)
    f2 = random_cc(twisted_z12, twisted_z12.group.elements()[3:9], rng)
    lam1, lam2 = full_regular_matrix(f1), full_regular_matrix(f2)
    np.testing.assert_allclose(full_regular_matrix(f1 * f2), lam1 @ lam2, atol=1e-10)
    np.testing.assert_allclose(full_regular_matrix(f1.star()), lam1.conj().T, atol=1e-10)


def test_exact_norm_on_finite_groups(twisted_z12, rng):
    f = random_cc(twisted_z12, twisted_z12.group.elements(), rng)
    bounds = opnorm_bounds(f, n_jobs=1)
    assert bounds.exact == pytest.approx(np.linalg.norm(full_regular_matrix(f), 2))
    assert bounds.exact <= l1_norm(f) + 1e-9


def test_full_regular_matrix_needs_finite_group(scalar_z):
    with pytest.raises(ValueError):
        full_regular_matrix(unit(scalar_z))


def test_apply_regular_matches_compression(nc_torus, rng):
    f = _random(nc_torus, rng)
    xi = _random(nc_torus, rng)
    rep = compression_matrix(f, 2)
    vector = np.array([complex(xi.coefficient(g).blocks[0][0, 0]) for g in rep.index])
    image = apply_regular(f, xi)
    expected = np.array([complex(image.coefficient(g).blocks[0][0, 0]) for g in rep.index])
    np.testing.assert_allclose(rep.matrix @ vector, expected, atol=1e-12)
    assert apply_regular(f, unit(nc_torus)).distance(f) <= 1e-12


def test_fourier_uniqueness(nc_torus, rng):
    f = _random(nc_torus, rng)
    assert not coefficients_vanish(f)
    assert coefficients_vanish(f - f)
    assert coefficients_vanish(CcElement(nc_torus, {}))
