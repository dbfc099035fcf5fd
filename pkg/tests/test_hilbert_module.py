import numpy as np
import pytest

from crossed_products.coefficients.block_algebra import AlgebraSpec, block_permutation
from crossed_products.groups.discrete_groups import make_group
from crossed_products.modules.equivariant import (
    central_part,
    endomorphism_rep,
    scaled_at,
    tensor_rep,
    tensor_unitary_rep,
    trivial_rep,
    unitary_rep_from_generators,
    validate_equivariant,
)
from crossed_products.modules.hilbert_module import ModuleField, ModuleMap, ModuleOperator, ModuleVector
from crossed_products.systems.twisted_system import trivial_system


@pytest.fixture
def spec():
    return AlgebraSpec((1, 2))


def test_inner_product_is_right_linear_and_hermitian(spec, rng):
    x, y = ModuleVector.random(spec, 3, rng), ModuleVector.random(spec, 3, rng)
    a = spec.random(rng)
    assert x.inner(y.right_mul(a)).is_close(x.inner(y) * a)
    assert x.inner(y).star().is_close(y.inner(x))
    assert x.inner(x).classify().positive


def test_operator_adjoint(spec, rng):
    T = ModuleOperator(tuple(tuple(spec.random(rng) for _ in range(2)) for _ in range(2)))
    x, y = ModuleVector.random(spec, 2, rng), ModuleVector.random(spec, 2, rng)
    assert T.apply(x).inner(y).is_close(x.inner(T.adjoint().apply(y)))


def test_operator_inverse(spec, rng):
    T = ModuleOperator(tuple(tuple(spec.random(rng) for _ in range(2)) for _ in range(2)))
    x = ModuleVector.random(spec, 2, rng)
    assert (T.inverse().apply(T.apply(x)) - x).norm() <= 1e-9
    singular = ModuleOperator.diagonal([spec.zero(), spec.unit()])
    with pytest.raises(ValueError):
        singular.inverse()


def test_twisted_module_maps_compose_and_invert(rng):
    spec = AlgebraSpec((2, 2))
    swap = block_permutation(spec, (1, 0))
    T = ModuleMap(ModuleOperator(tuple(tuple(spec.random(rng) for _ in range(2)) for _ in range(2))), swap)
    x = ModuleVector.random(spec, 2, rng)
    assert (T.inverse().apply(T.apply(x)) - x).norm() <= 1e-9
    assert (T.compose(T).apply(x) - T.apply(T.apply(x))).norm() <= 1e-9


def test_rank_mismatch(spec, rng):
    with pytest.raises(ValueError):
        ModuleVector.random(spec, 2, rng).inner(ModuleVector.random(spec, 3, rng))
    with pytest.raises(ValueError):
        ModuleOperator.identity(spec, 2).apply(ModuleVector.random(spec, 3, rng))


def test_module_field_inner_product(spec):
    group = make_group("Z^d", d=1)
    e0 = ModuleVector.basis(spec, 2, 0)
    field = ModuleField(group, 2, {(0,): e0, (1,): e0 * 2.0})
    other = ModuleField(group, 2, {(1,): e0})
    assert field.norm() == pytest.approx(np.sqrt(5.0))
    assert field.inner(other).is_close(spec.scalar(2.0))
    with pytest.raises(ValueError):
        ModuleField(group, 3, {(0,): e0})


@pytest.mark.parametrize("fixture", ["nc_torus", "twisted_z12", "c2_trivial"])
def test_trivial_representation_is_equivariant(request, fixture):
    system = request.getfixturevalue(fixture)
    report = validate_equivariant(trivial_rep(system))
    assert report.passed, report.to_dict(system.group)


def test_tensor_with_unitary_representation(twisted_z12):
    omega = np.exp(2j * np.pi / 12)
    w = unitary_rep_from_generators(twisted_z12.group, {"x": np.diag([1.0, omega])})
    rep = tensor_unitary_rep(twisted_z12, w, 2)
    assert rep.rank == 2
    assert validate_equivariant(rep).passed


def test_non_unitary_generator_image_rejected(twisted_z12):
    with pytest.raises(ValueError):
        unitary_rep_from_generators(twisted_z12.group, {"x": np.diag([2.0, 1.0])})


def test_scaled_map_breaks_the_axioms(c2_trivial):
    g = c2_trivial.group.normal_form("x")
    report = validate_equivariant(scaled_at(trivial_rep(c2_trivial), g, 2.0))
    assert not report.passed
    assert report.inner_product > 1e-6
    assert report.projectivity > 1e-6


@pytest.mark.parametrize("dims, expected", [((1, 1), 2), ((2,), 1), ((1, 3), 2)])
def test_central_part_is_the_center(dims, expected):
    system = trivial_system(make_group("finite-cyclic", n=2), AlgebraSpec(dims))
    assert len(central_part(trivial_rep(system))) == expected


def test_endomorphism_representation(c2_trivial):
    rep = endomorphism_rep(c2_trivial, block_permutation(c2_trivial.algebra, (1, 0)))
    assert validate_equivariant(rep).passed
    a = c2_trivial.algebra.from_diagonal([1.0, 0.0])
    x = ModuleVector.basis(c2_trivial.algebra, 1, 0)
    assert rep.rho(a).apply(x).inner(x).is_close(c2_trivial.algebra.from_diagonal([0.0, 1.0]))


def test_tensor_representation_rank(twisted_z12):
    w = unitary_rep_from_generators(twisted_z12.group, {"x": np.diag([1.0, -1.0])})
    rep = tensor_rep(trivial_rep(twisted_z12), w, 2)
    assert rep.rank == 2
    assert validate_equivariant(rep).passed
