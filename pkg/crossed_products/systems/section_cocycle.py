import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from crossed_products.coefficients.block_algebra import AlgElement, AlgebraSpec
from crossed_products.groups.discrete_groups import DiscreteGroup, GroupElement, ModularGroup
from crossed_products.systems.twisted_system import TwistedSystem, make_system, unit_phase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CentralExtension:
    """
    1 → Z → K → G → 1 with Z cyclic of order `center_order`, generated by z₀.

    `lift` is the section s: G → K; `center_index` returns j with z = z₀^j and raises
    ValueError for elements outside Z.
    """

    group: DiscreteGroup
    center_order: int
    lift: Callable[[GroupElement], Any]
    multiply: Callable[[Any, Any], Any]
    inverse: Callable[[Any], Any]
    center_index: Callable[[Any], int]
    name: str = "extension"


def center_character_vector(j: int, m: int, algebra: AlgebraSpec) -> AlgElement:
    """Image of z₀^j in C*(Z) ≅ ℂ^m under the character basis χ_i(z₀^j) = exp(2πi·ij/m)."""
    return algebra.from_diagonal([unit_phase(Fraction(i * j, m)) for i in range(m)])


def section_cocycle(extension: CentralExtension) -> Callable[[GroupElement, GroupElement], AlgElement]:
    """σ(g,h) = canonical unitary of z = s(g)s(h)s(gh)⁻¹ in C*(Z)."""
    group = extension.group
    if extension.center_index(extension.lift(group.identity)) != 0:
        raise ValueError(f"Section of {extension.name} does not map e to the identity")
    algebra = AlgebraSpec((1,) * extension.center_order)

    def sigma(g, h):
        s_g, s_h = extension.lift(g), extension.lift(h)
        s_gh = extension.lift(group.multiply(g, h))
        z = extension.multiply(extension.multiply(s_g, s_h), extension.inverse(s_gh))
        return center_character_vector(extension.center_index(z), extension.center_order, algebra)

    return sigma


def section_system(extension: CentralExtension) -> TwistedSystem:
    algebra = AlgebraSpec((1,) * extension.center_order)
    return make_system(
        algebra,
        extension.group,
        cocycle=section_cocycle(extension),
        provenance="central-extension-section",
        name=f"C*({extension.name}) as twisted {extension.group.name}",
    )


_S = np.array([[0, -1], [1, 0]], dtype=np.int64)
_U = np.array([[0, -1], [1, 1]], dtype=np.int64)
_SYLLABLE_LIFTS = {("s", 1): _S, ("t", 1): _U, ("t", 2): _U @ _U}
_I2 = np.eye(2, dtype=np.int64)


def _sl2_inverse(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=np.int64)


def _sl2_center_index(m: np.ndarray) -> int:
    if np.array_equal(m, _I2):
        return 0
    if np.array_equal(m, -_I2):
        return 1
    raise ValueError(f"{m.tolist()} is not central in SL(2,Z)")


def sl2z_extension(group: ModularGroup = None) -> CentralExtension:
    """SL(2,ℤ) → PSL(2,ℤ) ≅ ℤ₂∗ℤ₃ with the syllable lift s ↦ S, t ↦ U, t² ↦ U²."""
    group = group or ModularGroup()

    def lift(g):
        m = _I2
        for syllable in g:
            m = m @ _SYLLABLE_LIFTS[syllable]
        return m

    return CentralExtension(
        group=group,
        center_order=2,
        lift=lift,
        multiply=lambda x, y: x @ y,
        inverse=_sl2_inverse,
        center_index=_sl2_center_index,
        name="SL(2,Z)",
    )


def direct_product_extension(group: DiscreteGroup, center_order: int) -> CentralExtension:
    """K = G × ℤ_m with the homomorphic section g ↦ (g, 0); its cocycle is trivial."""

    def center_index(k):
        g, j = k
        if g != group.identity:
            raise ValueError(f"{k} is not central-trivial in {group.name} x Z_{center_order}")
        return j % center_order

    return CentralExtension(
        group=group,
        center_order=center_order,
        lift=lambda g: (g, 0),
        multiply=lambda x, y: (group.multiply(x[0], y[0]), (x[1] + y[1]) % center_order),
        inverse=lambda x: (group.inverse(x[0]), (-x[1]) % center_order),
        center_index=center_index,
        name=f"{group.name} x Z_{center_order}",
    )
