import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from crossed_products.groups.discrete_groups import (
    ball,
    folner,
    length,
    make_group,
    make_length,
    normal_form,
    parse_word,
    word_homomorphism,
)


def test_parse_word_handles_exponents_and_uppercase_inverses():
    assert parse_word("a b^-1") == [("a", 1), ("b", -1)]
    assert parse_word("A") == [("a", -1)]
    assert parse_word("s t^2") == [("s", 1), ("t", 2)]


def test_parse_word_rejects_unknown_symbols():
    with pytest.raises(ValueError):
        parse_word("a#b")


@pytest.mark.parametrize(
    "family, params, radius, tag, expected",
    [
        ("free-F2", {}, 2, None, 17),
        ("free-product-Z2-Z3", {}, 3, None, 14),
        ("Z^d", {"d": 2}, 1, "l1", 5),
        ("Z^d", {"d": 1}, 3, None, 7),
        ("finite-cyclic", {"n": 5}, 10, None, 5),
    ],
)
def test_ball_sizes(family, params, radius, tag, expected):
    group = make_group(family, **params)
    assert len(ball(radius, make_length(group, tag))) == expected


def test_free_group_normal_form_reduces():
    group = make_group("free-F2")
    assert normal_form(group, "a b B A") == group.identity
    g = normal_form(group, "a b")
    assert group.multiply(g, group.inverse(g)) == group.identity
    assert length(g, make_length(group)) == 2


def test_modular_group_relations():
    group = make_group("free-product-Z2-Z3")
    assert normal_form(group, "s s") == group.identity
    assert normal_form(group, "t t t") == group.identity
    assert group.length(normal_form(group, "s t^2 s"), "block") == 3


def test_lattice_vector_words():
    group = make_group("Z^d", d=2)
    assert normal_form(group, "(1,0)") == (1, 0)
    assert normal_form(group, "(1,2) - (0,1)") == (1, 1)
    assert normal_form(group, "x y") == (1, 1)
    with pytest.raises(ValueError):
        normal_form(group, "(1,2,3)")


def test_unknown_generator_for_group():
    with pytest.raises(ValueError):
        normal_form(make_group("free-F2"), "c")


def test_ball_order_is_length_lexicographic():
    group = make_group("Z^d", d=1)
    members = ball(2, make_length(group))
    lengths = [group.length(g) for g in members]
    assert lengths == sorted(lengths)
    assert members[0] == group.identity


def test_shell_counts():
    np.testing.assert_array_equal(make_group("free-F2").shell_counts(3), [1, 4, 12, 36])
    np.testing.assert_array_equal(make_group("free-product-Z2-Z3").shell_counts(3), [1, 3, 4, 6])
    np.testing.assert_array_equal(make_group("Z^d", d=2).shell_counts(2, "l1"), [1, 4, 8])


@pytest.mark.parametrize(
    "family, params, tag, expected",
    [
        ("Z^d", {"d": 3}, "l1", ("polynomial", 3)),
        ("Z^d", {"d": 2}, "l2sq", ("polynomial", 1)),
        ("free-F2", {}, None, ("exponential", 3.0)),
    ],
)
def test_sphere_growth(family, params, tag, expected):
    kind, rate = make_group(family, **params).sphere_growth(tag)
    assert kind == expected[0]
    assert rate == pytest.approx(expected[1])


def test_lattice_folner_sets_and_ratio():
    group = make_group("Z^d", d=2)
    assert len(folner(group, 3)) == 9
    assert group.folner_ratio((1, 0), 4) == pytest.approx(0.75)
    assert group.folner_ratio((1, 2), 4) == pytest.approx(0.75 * 0.5)
    assert group.folner_ratio((5, 0), 4) == 0.0


def test_finite_folner_is_whole_group():
    group = make_group("finite-dihedral", n=4)
    assert len(folner(group, 1)) == group.order == 8
    assert group.folner_ratio(group.elements()[3], 1) == pytest.approx(1.0)


def test_length_tags_are_checked():
    with pytest.raises(ValueError):
        make_length(make_group("free-F2"), "l2")
    assert make_length(make_group("Z^d", d=1)).tag == "l1"
    assert make_length(make_group("free-product-Z2-Z3")).tag == "block"


def test_unknown_family():
    with pytest.raises(ValueError):
        make_group("heisenberg")


def test_generator_words_collect_syllables():
    group = make_group("free-F2")
    assert group.generator_word(normal_form(group, "a a B")) == [("a", 2), ("b", -1)]
    assert make_group("Z^d", d=2).generator_word((1, -2)) == [("x", 1), ("y", -2)]


def test_word_homomorphism_along_normal_forms():
    group = make_group("Z^d", d=2)
    phi = word_homomorphism(group, {"x": 2, "y": 3}, multiply=lambda a, b: a + b, identity=0, inverse=lambda a: -a)
    assert phi((1, -2)) == -4
    assert phi(group.identity) == 0
    with pytest.raises(ValueError):
        word_homomorphism(group, {"x": 2}, multiply=lambda a, b: a + b, identity=0, inverse=lambda a: -a)


@pytest.mark.parametrize("family", ["free-F2", "free-product-Z2-Z3"])
def test_concurrent_balls_grow_layers_once(family):
    group = make_group(family)
    radii = [4, 5] * 4
    barrier = threading.Barrier(len(radii))

    def grow(radius):
        barrier.wait()
        return radius, group.ball(radius)

    with ThreadPoolExecutor(max_workers=len(radii)) as pool:
        results = list(pool.map(grow, radii))
    for radius, members in results:
        assert len(members) == int(group.shell_counts(radius).sum())
        assert len(set(members)) == len(members)
        assert members is group.ball(radius)


@pytest.mark.parametrize(
    "family, params, ships",
    [
        ("finite-cyclic", {"n": 4}, True),
        ("finite-dihedral", {"n": 3}, True),
        ("Z^d", {"d": 2}, True),
        ("free-F2", {}, False),
        ("free-product-Z2-Z3", {}, False),
    ],
)
def test_folner_data_flag(family, params, ships):
    group = make_group(family, **params)
    assert group.ships_folner is ships
    if not ships:
        with pytest.raises(ValueError):
            folner(group, 1)
