import itertools
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import ALGEBRA_TOL, DEFAULT_SEED, EXHAUSTIVE_GROUP_LIMIT, EXHAUSTIVE_TRIPLE_LIMIT, SAMPLED_TRIPLES
from crossed_products.coefficients.block_algebra import (
    AlgAutomorphism,
    AlgElement,
    AlgebraSpec,
    block_permutation,
    inner_automorphism,
)
from crossed_products.groups.discrete_groups import (
    DiscreteGroup,
    FiniteAbelianGroup,
    GroupElement,
    IntegerLattice,
    LengthFunction,
    make_length,
    word_homomorphism,
)

logger = logging.getLogger(__name__)

Angle = Union[Fraction, float]


class ConditionViolation(ValueError):
    """A mathematical precondition failed above tolerance; carries the residual and a witness."""

    def __init__(self, message: str, residual: float, witness=None):
        super().__init__(f"{message} (residual {residual:.3e}, witness {witness})")
        self.residual = residual
        self.witness = witness


def unit_phase(turns: Angle) -> complex:
    """exp(2πi·turns), exact at quarter turns."""
    if isinstance(turns, Fraction):
        turns = turns - (turns.numerator // turns.denominator)
        exact = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
        if turns in exact:
            return exact[turns]
        return complex(np.exp(2j * np.pi * float(turns)))
    turns = float(turns) % 1.0
    if turns == 0.0:
        return 1 + 0j
    return complex(np.exp(2j * np.pi * turns))


def parse_angle(value) -> Angle:
    """θ given as "p/q", an int, or a float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise ValueError(f"Cannot parse angle {value!r}; use p/q or a decimal")
    return float(value)


@dataclass(frozen=True, eq=False)
class TwistedSystem:
    """
    Σ = (A, G, α, σ).

    The action and cocycle are evaluation rules; values are memoised per element.
    """

    algebra: AlgebraSpec
    group: DiscreteGroup
    action_rule: Callable[[GroupElement], AlgAutomorphism]
    cocycle_rule: Callable[[GroupElement, GroupElement], AlgElement]
    provenance: str = "trivial"
    name: str = ""
    trivial_action: bool = False
    witness_pairs: Tuple[Tuple[GroupElement, GroupElement], ...] = ()
    _alpha: Dict = field(default_factory=dict, repr=False)
    _alpha_inv: Dict = field(default_factory=dict, repr=False)
    _sigma: Dict = field(default_factory=dict, repr=False)

    @property
    def identity(self) -> GroupElement:
        return self.group.identity

    @property
    def length(self) -> LengthFunction:
        return make_length(self.group)

    def alpha(self, g: GroupElement) -> AlgAutomorphism:
        if g not in self._alpha:
            self._alpha[g] = self.action_rule(g)
        return self._alpha[g]

    def alpha_inv(self, g: GroupElement) -> AlgAutomorphism:
        """The inverse automorphism α_g⁻¹ (not α_{g⁻¹})."""
        if g not in self._alpha_inv:
            self._alpha_inv[g] = self.alpha(g).inverse()
        return self._alpha_inv[g]

    def sigma(self, g: GroupElement, h: GroupElement) -> AlgElement:
        key = (g, h)
        if key not in self._sigma:
            self._sigma[key] = self.cocycle_rule(g, h)
        return self._sigma[key]

    def fresh(self, **changes) -> "TwistedSystem":
        """Copy with replaced fields and empty caches."""
        changes.setdefault("_alpha", {})
        changes.setdefault("_alpha_inv", {})
        changes.setdefault("_sigma", {})
        return replace(self, **changes)

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "algebra": self.algebra.describe(),
            "group": self.group.describe(),
            "provenance": self.provenance,
            "trivial_action": self.trivial_action,
        }


# -- actions -------------------------------------------------------------------

def trivial_action(algebra: AlgebraSpec) -> Callable[[GroupElement], AlgAutomorphism]:
    identity = AlgAutomorphism.identity(algebra)
    return lambda g: identity


def action_from_generators(
    group: DiscreteGroup, algebra: AlgebraSpec, images: Dict[str, AlgAutomorphism]
) -> Callable[[GroupElement], AlgAutomorphism]:
    """α on normal forms from generator images; a homomorphism only if the images respect the relations."""
    return word_homomorphism(
        group,
        images,
        multiply=lambda x, y: x.compose(y),
        identity=AlgAutomorphism.identity(algebra),
        inverse=lambda x: x.inverse(),
        power=lambda x, n: x.power(n),
    )


def permutation_action(group: DiscreteGroup, algebra: AlgebraSpec, permutations: Dict[str, Sequence[int]]):
    """Action on C(X) (or on equal blocks) permuting blocks along each generator."""
    images = {letter: block_permutation(algebra, perm) for letter, perm in permutations.items()}
    return action_from_generators(group, algebra, images)


def inner_action(group: DiscreteGroup, algebra: AlgebraSpec, unitaries: Dict[str, AlgElement]):
    images = {letter: inner_automorphism(u) for letter, u in unitaries.items()}
    return action_from_generators(group, algebra, images)


def table_action(group: DiscreteGroup, algebra: AlgebraSpec, table: Dict[GroupElement, AlgAutomorphism]):
    if not group.is_finite:
        raise ValueError("Table actions are only available on finite groups")
    identity = AlgAutomorphism.identity(algebra)
    missing = [g for g in group.elements() if g not in table and g != group.identity]
    if missing:
        raise ValueError(f"Action table is missing {len(missing)} elements, e.g. {group.format_element(missing[0])}")
    return lambda g: table.get(g, identity)


# -- cocycles ------------------------------------------------------------------

def trivial_cocycle(algebra: AlgebraSpec) -> Callable[[GroupElement, GroupElement], AlgElement]:
    unit = algebra.unit()
    return lambda g, h: unit


def theta_cocycle(group: DiscreteGroup, algebra: AlgebraSpec, theta) -> Callable:
    """
    Scalar bicharacter cocycle.

    ℤ^d with d ≥ 2: σ(m, n) = exp(2πiθ m₂n₁); ℤ and ℤ_n: σ(m, n) = exp(2πiθ mn).
    On finite abelian groups the phase must be well defined on residues.
    """
    theta = parse_angle(theta)
    if isinstance(group, FiniteAbelianGroup):
        pairs = [(0, 0)] if group.rank == 1 else [(1, 0)]
        for i, j in pairs:
            for n in (group.orders[i], group.orders[j]):
                if abs(float(theta * n) - round(float(theta * n))) > ALGEBRA_TOL:
                    raise ValueError(f"θ = {theta} is not well defined on {group.name}: need θ·{n} ∈ ℤ")
    elif not isinstance(group, IntegerLattice):
        raise ValueError(f"Bicharacter cocycles are shipped for ℤ^d and finite abelian groups, not {group.name}")
    rank = group.rank

    def sigma(g, h):
        product = g[0] * h[0] if rank == 1 else g[1] * h[0]
        return algebra.scalar(unit_phase(theta * product))

    return sigma


def table_cocycle(group: DiscreteGroup, algebra: AlgebraSpec, table: Dict[Tuple[GroupElement, GroupElement], AlgElement]):
    if not group.is_finite:
        raise ValueError("Cocycle tables cannot be total on infinite groups")
    unit = algebra.unit()
    return lambda g, h: table.get((g, h), unit)


# -- systems -------------------------------------------------------------------

def make_system(
    algebra: AlgebraSpec,
    group: DiscreteGroup,
    action=None,
    cocycle=None,
    provenance: str = "trivial",
    name: str = "",
) -> TwistedSystem:
    return TwistedSystem(
        algebra=algebra,
        group=group,
        action_rule=action or trivial_action(algebra),
        cocycle_rule=cocycle or trivial_cocycle(algebra),
        provenance=provenance,
        name=name or f"{group.name} on {algebra.dims}",
        trivial_action=action is None,
    )


def trivial_system(group: DiscreteGroup, algebra: Optional[AlgebraSpec] = None) -> TwistedSystem:
    return make_system(algebra or AlgebraSpec((1,)), group, name=f"C*_r({group.name})")


def theta_system(group: DiscreteGroup, theta, algebra: Optional[AlgebraSpec] = None, action=None) -> TwistedSystem:
    algebra = algebra or AlgebraSpec((1,))
    system = make_system(
        algebra,
        group,
        action=action,
        cocycle=theta_cocycle(group, algebra, theta),
        provenance=f"theta-bicharacter({theta})",
        name=f"{group.name} twisted by θ={theta}",
    )
    return system


def exterior_equivalent(system: TwistedSystem, unitary_rule: Callable[[GroupElement], AlgElement]) -> TwistedSystem:
    """
    Perturb Σ by a unitary function u with u(e) = 1:
    α'_g = Ad(u_g)α_g and σ'(g,h) = u_g α_g(u_h) σ(g,h) u_gh*.
    """
    unit = system.algebra.unit()
    if not unitary_rule(system.identity).is_close(unit):
        raise ValueError("The perturbing unitary must equal 1 at the identity")

    def action(g):
        return inner_automorphism(unitary_rule(g)).compose(system.alpha(g))

    def cocycle(g, h):
        u_g, u_h = unitary_rule(g), unitary_rule(h)
        u_gh = unitary_rule(system.group.multiply(g, h))
        return u_g * system.alpha(g)(u_h) * system.sigma(g, h) * u_gh.star()

    return system.fresh(
        action_rule=action,
        cocycle_rule=cocycle,
        provenance=f"exterior({system.provenance})",
        name=f"{system.name} (exterior perturbation)",
        trivial_action=False,
    )


def with_perturbed_cocycle(system: TwistedSystem, g: GroupElement, h: GroupElement, phase: float) -> TwistedSystem:
    """Multiply the single value σ(g,h) by exp(i·phase) and store (g,h) as a witness pair."""
    base = system.cocycle_rule
    factor = complex(np.exp(1j * phase))

    def cocycle(x, y):
        value = base(x, y)
        return value * factor if (x, y) == (g, h) else value

    return system.fresh(
        cocycle_rule=cocycle,
        provenance=f"{system.provenance}+perturbed",
        name=f"{system.name} (perturbed)",
        witness_pairs=system.witness_pairs + ((g, h),),
    )


# -- validation ----------------------------------------------------------------

@dataclass
class SystemValidationReport:
    action_violation: float = 0.0
    cocycle_violation: float = 0.0
    normalization_violation: float = 0.0
    unitarity_violation: float = 0.0
    witnesses: Dict[str, Tuple] = field(default_factory=dict)
    n_triples: int = 0
    exhaustive: bool = False
    tolerance: float = ALGEBRA_TOL

    @property
    def max_violation(self) -> float:
        return max(self.action_violation, self.cocycle_violation, self.normalization_violation, self.unitarity_violation)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_dict(self, group: Optional[DiscreteGroup] = None) -> Dict:
        def fmt(items):
            if group is None:
                return [str(x) for x in items]
            return [group.format_element(x) for x in items]

        return {
            "passed": self.passed,
            "action_violation": self.action_violation,
            "cocycle_violation": self.cocycle_violation,
            "normalization_violation": self.normalization_violation,
            "unitarity_violation": self.unitarity_violation,
            "witnesses": {k: fmt(v) for k, v in self.witnesses.items()},
            "n_triples": self.n_triples,
            "exhaustive": self.exhaustive,
        }


def default_triples(system: TwistedSystem, rng: Optional[np.random.Generator] = None) -> Tuple[List[Tuple], bool]:
    """
    Exhaustive triples for finite groups up to 64 elements and for small ball(3) cubes;
    otherwise a seeded sample of ball(3)³ plus triples through every stored witness pair.
    """
    group = system.group
    if group.is_finite and group.order <= EXHAUSTIVE_GROUP_LIMIT:
        return list(itertools.product(group.elements(), repeat=3)), True
    members = group.elements() if group.is_finite else group.ball(3)
    extra = []
    for g, h in system.witness_pairs:
        for k in members[: min(len(members), 8)]:
            extra.extend([(g, h, k), (k, g, h)])
    if len(members) ** 3 <= EXHAUSTIVE_TRIPLE_LIMIT:
        return list(itertools.product(members, repeat=3)) + extra, True
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    picks = rng.integers(len(members), size=(SAMPLED_TRIPLES, 3))
    return [tuple(members[i] for i in row) for row in picks] + extra, False


def validate_system(
    system: TwistedSystem,
    triples: Optional[Sequence[Tuple]] = None,
    probes: Optional[Sequence[AlgElement]] = None,
    rng: Optional[np.random.Generator] = None,
) -> SystemValidationReport:
    """
    Check the twisted-action identities on samples. Violations are reported, never raised.

    Parameters:
    - triples: (g, h, k) samples; defaults to default_triples.
    - probes: algebra elements for the action identity; defaults to three seeded random elements.
    """
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    exhaustive = False
    if triples is None:
        triples, exhaustive = default_triples(system, rng)
    if not triples:
        raise ValueError("validate_system needs a nonempty triple sample")
    if probes is None:
        probes = [system.algebra.random(rng) for _ in range(3)]
    group = system.group
    e = group.identity
    unit = system.algebra.unit()
    report = SystemValidationReport(n_triples=len(triples), exhaustive=exhaustive)

    def record(attribute, value, witness):
        if value > getattr(report, attribute):
            setattr(report, attribute, value)
            report.witnesses[attribute] = witness

    pairs = dict.fromkeys((g, h) for g, h, _ in triples)
    singles = dict.fromkeys(x for triple in triples for x in triple)

    for g in singles:
        record("normalization_violation", system.sigma(g, e).distance(unit), (g, e))
        record("normalization_violation", system.sigma(e, g).distance(unit), (e, g))
    for a in probes:
        record("normalization_violation", system.alpha(e)(a).distance(a), (e,))

    for g, h in pairs:
        s = system.sigma(g, h)
        record("unitarity_violation", max((s.star() * s).distance(unit), (s * s.star()).distance(unit)), (g, h))
        gh = group.multiply(g, h)
        for a in probes:
            lhs = system.alpha(g)(system.alpha(h)(a))
            rhs = s * system.alpha(gh)(a) * s.star()
            record("action_violation", lhs.distance(rhs), (g, h))

    for g, h, k in triples:
        gh, hk = group.multiply(g, h), group.multiply(h, k)
        lhs = system.sigma(g, h) * system.sigma(gh, k)
        rhs = system.alpha(g)(system.sigma(h, k)) * system.sigma(g, hk)
        record("cocycle_violation", lhs.distance(rhs), (g, h, k))

    if report.passed:
        logger.info(f"System {system.name} passed validation on {len(triples)} triples")
    else:
        logger.error(
            f"System {system.name} failed validation: max violation {report.max_violation:.3e}, "
            f"witnesses {report.to_dict(group)['witnesses']}"
        )
    return report


def inverse_pair_violation(system: TwistedSystem, elements: Sequence[GroupElement]) -> float:
    """max ‖σ(g,g⁻¹) − α_g(σ(g⁻¹,g))‖ over the given elements."""
    worst = 0.0
    for g in elements:
        g_inv = system.group.inverse(g)
        worst = max(worst, system.sigma(g, g_inv).distance(system.alpha(g)(system.sigma(g_inv, g))))
    return worst
