from fractions import Fraction

import numpy as np
import pytest

from crossed_products.coefficients.block_algebra import AlgebraSpec, block_permutation
from crossed_products.groups.discrete_groups import make_group
from crossed_products.systems.section_cocycle import direct_product_extension, section_system, sl2z_extension
from crossed_products.systems.twisted_system import (
    exterior_equivalent,
    inner_action,
    inverse_pair_violation,
    make_system,
    parse_angle,
    permutation_action,
    table_action,
    table_cocycle,
    theta_cocycle,
    theta_system,
    unit_phase,
    validate_system,
    with_perturbed_cocycle,
)


def test_unit_phase_is_exact_at_quarter_turns():
    assert unit_phase(Fraction(1, 4)) == 1j
    assert unit_phase(Fraction(5, 2)) == -1
    assert unit_phase(0.0) == 1
    assert unit_phase(Fraction(1, 3)) == pytest.approx(np.exp(2j * np.pi / 3))


def test_parse_angle():
    assert parse_angle("1/5") == Fraction(1, 5)
    assert parse_angle(2) == Fraction(2)
    assert parse_angle(0.25) == 0.25
    with pytest.raises(ValueError):
        parse_angle("one fifth")


def test_theta_systems_validate(nc_torus):
    report = validate_system(nc_torus)
    assert report.passed
    assert report.max_violation <= 1e-10


def test_theta_must_be_well_defined_on_residues():
    with pytest.raises(ValueError):
        theta_cocycle(make_group("finite-cyclic", n=5), AlgebraSpec((1,)), "1/3")


def test_bicharacters_need_an_abelian_group():
    with pytest.raises(ValueError):
        theta_system(make_group("free-F2"), "1/2")


def test_perturbed_cocycle_fails_with_witness():
    group = make_group("Z^d", d=1)
    system = with_perturbed_cocycle(theta_system(group, "1/3"), (1,), (1,), 0.5)
    report = validate_system(system)
    assert not report.passed
    assert report.cocycle_violation > 1e-3
    assert report.normalization_violation <= 1e-10
    assert "cocycle_violation" in report.to_dict(group)["witnesses"]


def test_block_permutation_action_validates():
    group = make_group("finite-cyclic", n=2)
    algebra = AlgebraSpec((1, 1))
    system = make_system(algebra, group, action=permutation_action(group, algebra, {"x": (1, 0)}))
    assert not system.trivial_action
    assert validate_system(system).passed
    a = algebra.from_diagonal([1, 2])
    np.testing.assert_allclose(system.alpha((1,))(a).coordinates(), [2, 1])



def test_inner_action_validates():
    group = make_group("finite-cyclic", n=2)
    algebra = AlgebraSpec((2,))
    u = algebra.from_blocks([np.diag([1.0, -1.0])])
    system = make_system(algebra, group, action=inner_action(group, algebra, {"x": u}))
    assert validate_system(system).passed
    a = algebra.from_blocks([[[0.0, 1.0], [0.0, 0.0]]])
    assert system.alpha((1,))(a).is_close(a * -1.0)


def test_table_action_and_cocycle():
    group = make_group("finite-cyclic", n=2)
    algebra = AlgebraSpec((1, 1))
    action = table_action(group, algebra, {(1,): block_permutation(algebra, (1, 0))})
    cocycle = table_cocycle(group, algebra, {((1,), (1,)): algebra.scalar(-1.0)})
    system = make_system(algebra, group, action=action, cocycle=cocycle)
    assert validate_system(system).passed
    assert system.sigma((1,), (1,)).is_close(algebra.scalar(-1.0))
    with pytest.raises(ValueError):
        table_action(make_group("finite-cyclic", n=3), algebra, {(1,): block_permutation(algebra, (1, 0))})
    with pytest.raises(ValueError):
        table_cocycle(make_group("Z^d", d=1), algebra, {})


def test_exterior_equivalent_system_validates():
    group = make_group("finite-cyclic", n=3)
    algebra = AlgebraSpec((1, 1))
    base = theta_system(group, "1/3", algebra)

    def u(g):
        return algebra.from_diagonal([unit_phase(Fraction(g[0], 7)), unit_phase(Fraction(2 * g[0], 5))])

    assert validate_system(exterior_equivalent(base, u)).passed


def test_exterior_unitary_must_be_one_at_identity():
    group = make_group("finite-cyclic", n=3)
    base = theta_system(group, "1/3")
    with pytest.raises(ValueError):
        exterior_equivalent(base, lambda g: base.algebra.scalar(-1))


def test_section_cocycle_of_sl2z_is_a_cocycle():
    system = section_system(sl2z_extension())
    report = validate_system(system)
    assert report.passed
    assert report.exhaustive
    # s lifts to S with S² = -I, so σ(s, s) is the nontrivial central character
    s = system.group.normal_form("s")
    np.testing.assert_allclose(system.sigma(s, s).coordinates(), [1, -1])


def test_direct_product_extension_gives_trivial_cocycle():
    group = make_group("finite-cyclic", n=4)
    system = section_system(direct_product_extension(group, 3))
    unit = system.algebra.unit()
    assert all(system.sigma(g, h).is_close(unit) for g in group.elements() for h in group.elements())


def test_inverse_pairs_agree_for_bicharacters(nc_torus):
    assert inverse_pair_violation(nc_torus, nc_torus.group.ball(2)) <= 1e-12


def test_empty_triple_sample_is_rejected(nc_torus):
    with pytest.raises(ValueError):
        validate_system(nc_torus, triples=[])
