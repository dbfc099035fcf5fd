import logging
from numbers import Number
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from config import SUPPORT_TOL
from crossed_products.coefficients.block_algebra import AlgElement
from crossed_products.groups.discrete_groups import GroupElement
from crossed_products.systems.twisted_system import TwistedSystem

logger = logging.getLogger(__name__)

Weight = Callable[[GroupElement], float]


class CcElement:
    """
    A finitely supported function G → A, i.e. an element of C_c(Σ).

    Values with norm below 1e-14 are dropped, so the stored support is canonical.
    """

    __slots__ = ("system", "_coefficients")

    def __init__(self, system: TwistedSystem, coefficients: Optional[Mapping[GroupElement, AlgElement]] = None):
        self.system = system
        kept = {}
        for g, a in (coefficients or {}).items():
            if a.spec != system.algebra:
                raise ValueError(f"Coefficient at {g} lives in {a.spec.dims}, expected {system.algebra.dims}")
            if a.norm() >= SUPPORT_TOL:
                kept[g] = a
        order = system.group.order_key
        self._coefficients: Dict[GroupElement, AlgElement] = dict(sorted(kept.items(), key=lambda kv: order(kv[0])))

    @property
    def support(self) -> Tuple[GroupElement, ...]:
        return tuple(self._coefficients)

    def items(self):
        return self._coefficients.items()

    def coefficient(self, g: GroupElement) -> AlgElement:
        value = self._coefficients.get(g)
        return value if value is not None else self.system.algebra.zero()

    def __len__(self):
        return len(self._coefficients)

    def _check(self, other: "CcElement"):
        if not isinstance(other, CcElement):
            raise TypeError(f"Expected a CcElement, got {type(other).__name__}")
        if other.system is not self.system:
            raise ValueError(f"System mismatch: {self.system.name} vs {other.system.name}")

    def __add__(self, other):
        self._check(other)
        out = dict(self._coefficients)
        for g, a in other.items():
            out[g] = out[g] + a if g in out else a
        return CcElement(self.system, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return CcElement(self.system, {g: -a for g, a in self.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return CcElement(self.system, {g: a * other for g, a in self.items()})
        return twisted_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def star(self) -> "CcElement":
        return star(self)

    def is_zero(self) -> bool:
        return not self._coefficients

    def distance(self, other: "CcElement") -> float:
        """max_g ‖f₁(g) − f₂(g)‖."""
        self._check(other)
        return linf_norm(self - other)

    def describe(self):
        group = self.system.group
        return [{"element": group.format_element(g), "value": a.to_interleaved()} for g, a in self.items()]

    def __repr__(self):
        return f"CcElement(support={len(self)}, system={self.system.name!r})"


def delta(system: TwistedSystem, g: GroupElement, a: Optional[AlgElement] = None) -> CcElement:
    """a⊙δ_g (a defaults to the unit)."""
    return CcElement(system, {g: a if a is not None else system.algebra.unit()})


def unit(system: TwistedSystem) -> CcElement:
    return delta(system, system.identity)


def zero(system: TwistedSystem) -> CcElement:
    return CcElement(system, {})


def random_cc(system: TwistedSystem, support: Iterable[GroupElement], rng: np.random.Generator, scale: float = 1.0) -> CcElement:
    return CcElement(system, {g: system.algebra.random(rng, scale) for g in support})


def twisted_mul(f1: CcElement, f2: CcElement) -> CcElement:
    """(f₁⋆f₂)(gh) = Σ f₁(g)·α_g(f₂(h))·σ(g,h)."""
    f1._check(f2)
    system = f1.system
    group = system.group
    out: Dict[GroupElement, AlgElement] = {}
    for g, a in f1.items():
        alpha_g = system.alpha(g)
        for h, b in f2.items():
            k = group.multiply(g, h)
            term = a * alpha_g(b) * system.sigma(g, h)
            out[k] = out[k] + term if k in out else term
    return CcElement(system, out)


def star(f: CcElement) -> CcElement:
    """f*(h) = α_h(σ(h⁻¹,h)*·f(h⁻¹)*)."""
    system = f.system
    group = system.group
    out = {}
    for g, a in f.items():
        h = group.inverse(g)
        out[h] = system.alpha(h)(system.sigma(g, h).star() * a.star())
    return CcElement(system, out)


def left_mul(a: AlgElement, f: CcElement) -> CcElement:
    """(a⊙δ_e)⋆f."""
    return CcElement(f.system, {g: a * b for g, b in f.items()})


def right_mul(f: CcElement, a: AlgElement) -> CcElement:
    """f⋆(a⊙δ_e), i.e. g ↦ f(g)α_g(a)."""
    system = f.system
    return CcElement(system, {g: b * system.alpha(g)(a) for g, b in f.items()})


def expectation(f: CcElement) -> AlgElement:
    return f.coefficient(f.system.identity)


def fourier_coefficient(f: CcElement, g: GroupElement) -> AlgElement:
    return f.coefficient(g)


def expectation_and_fourier(f: CcElement, g: GroupElement) -> AlgElement:
    """E(f·λ(g)*) = f(g); E is the case g = e."""
    return f.coefficient(g)


def coefficients_vanish(f: CcElement, tol: float = SUPPORT_TOL) -> bool:
    return all(a.norm() < tol for _, a in f.items())


# -- norms ---------------------------------------------------------------------

def l1_norm(f: CcElement) -> float:
    return float(sum(a.norm() for _, a in f.items()))


def linf_norm(f: CcElement) -> float:
    return max((a.norm() for _, a in f.items()), default=0.0)


def _check_weight(f: CcElement, kappa: Weight) -> Dict[GroupElement, float]:
    values = {}
    for g in f.support:
        k = float(kappa(g))
        if k < 1.0 - 1e-12:
            raise ValueError(f"Weight below 1 at {f.system.group.format_element(g)}: {k}")
        values[g] = k
    return values


def alpha_square(f: CcElement, kappa: Optional[Weight] = None) -> AlgElement:
    """Σ_g κ(g)²·α_g⁻¹(f(g)*f(g))."""
    system = f.system
    weights = _check_weight(f, kappa) if kappa is not None else {}
    total = system.algebra.zero()
    for g, a in f.items():
        total = total + system.alpha_inv(g)(a.star() * a) * (weights.get(g, 1.0) ** 2)
    return total


def alpha_norm(f: CcElement) -> float:
    return float(np.sqrt(alpha_square(f).norm()))


def weighted_l2_norm(f: CcElement, kappa: Weight) -> float:
    """‖f‖_{2,κ} = (Σ_g ‖f(g)‖² κ(g)²)^{1/2}."""
    weights = _check_weight(f, kappa)
    return float(np.sqrt(sum((a.norm() * weights[g]) ** 2 for g, a in f.items())))


def weighted_alpha_norm(f: CcElement, kappa: Weight) -> float:
    return float(np.sqrt(alpha_square(f, kappa).norm()))


def norms(f: CcElement, which: str, kappa: Optional[Weight] = None) -> float:
    """
    Args:
        which: l1 | linf | alpha | 2kappa | alphakappa
        kappa: weight G → [1, ∞) for the weighted norms
    """
    if which == "l1":
        return l1_norm(f)
    if which == "linf":
        return linf_norm(f)
    if which == "alpha":
        return alpha_norm(f)
    if which in ("2kappa", "alphakappa"):
        if kappa is None:
            raise ValueError(f"Norm {which} needs a weight")
        return weighted_l2_norm(f, kappa) if which == "2kappa" else weighted_alpha_norm(f, kappa)
    raise ValueError(f"Unknown norm: {which}")
