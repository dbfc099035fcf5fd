import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import ALGEBRA_TOL, DEFAULT_SEED, MEMBERSHIP_TOL
from crossed_products.coefficients.block_algebra import AlgAutomorphism, AlgElement, AlgebraSpec
from crossed_products.convolution.twisted_convolution import CcElement, expectation, linf_norm, random_cc, unit
from crossed_products.groups.discrete_groups import GroupElement
from crossed_products.systems.section_cocycle import CentralExtension, center_character_vector, section_system, sl2z_extension
from crossed_products.systems.twisted_system import ConditionViolation, TwistedSystem, make_system

logger = logging.getLogger(__name__)

MAX_ORBITS = 16


@dataclass(frozen=True)
class InvariantIdeal:
    """The ideal ⊕_{j ∈ blocks} M_{d_j}(ℂ) of a block algebra."""

    spec: AlgebraSpec
    blocks: Tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(sorted(set(int(j) for j in self.blocks)))
        if any(not 0 <= j < self.spec.n_blocks for j in blocks):
            raise ValueError(f"Ideal blocks {blocks} out of range for {self.spec.n_blocks} blocks")
        object.__setattr__(self, "blocks", blocks)

    @property
    def complement(self) -> Tuple[int, ...]:
        return tuple(j for j in range(self.spec.n_blocks) if j not in self.blocks)

    @property
    def is_zero(self) -> bool:
        return not self.blocks

    @property
    def is_whole(self) -> bool:
        return len(self.blocks) == self.spec.n_blocks

    def contains(self, a: AlgElement, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.residual(a) <= tol

    def residual(self, a: AlgElement) -> float:
        """Largest norm of a block of a outside J."""
        return max((float(np.linalg.norm(a.blocks[j], 2)) for j in self.complement), default=0.0)

    def project(self, a: AlgElement) -> AlgElement:
        keep = set(self.blocks)
        return AlgElement(self.spec, tuple(b if j in keep else np.zeros_like(b) for j, b in enumerate(a.blocks)))

    def unit(self) -> AlgElement:
        return self.project(self.spec.unit())

    def random_element(self, rng: np.random.Generator) -> AlgElement:
        return self.project(self.spec.random(rng))

    def describe(self) -> Dict:
        return {"blocks": list(self.blocks)}


def _generator_automorphisms(system: TwistedSystem) -> List[AlgAutomorphism]:
    group = system.group
    if group.is_finite:
        return [system.alpha(g) for g in group.elements()]
    return [system.alpha(g) for g in group.alphabet.values()]


def orbit_structure(system: TwistedSystem) -> List[Tuple[int, ...]]:
    """α-orbits of the blocks of A, each sorted, ordered by smallest block."""
    n = system.algebra.n_blocks
    parent = list(range(n))

    def find(j):
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        return j

    for automorphism in _generator_automorphisms(system):
        for j, p in enumerate(automorphism.perm):
            root_j, root_p = find(j), find(p)
            if root_j != root_p:
                parent[max(root_j, root_p)] = min(root_j, root_p)
    orbits: Dict[int, List[int]] = {}
    for j in range(n):
        orbits.setdefault(find(j), []).append(j)
    return sorted((tuple(sorted(o)) for o in orbits.values()), key=lambda o: o[0])


def enumerate_invariant_ideals(system: TwistedSystem) -> List[InvariantIdeal]:
    """All unions of α-orbits of blocks, from {0} to A."""
    orbits = orbit_structure(system)
    if len(orbits) > MAX_ORBITS:
        raise ValueError(f"{len(orbits)} orbits give too many ideals to enumerate (limit {MAX_ORBITS})")
    ideals = []
    for size in range(len(orbits) + 1):
        for chosen in itertools.combinations(orbits, size):
            ideals.append(InvariantIdeal(system.algebra, tuple(j for orbit in chosen for j in orbit)))
    logger.info(f"{system.name}: {len(orbits)} orbits, {len(ideals)} invariant ideals")
    return ideals


def ideal_membership(f: CcElement, ideal: InvariantIdeal, mode: str = "induced-alg") -> bool:
    """
    At the C_c level both ⟨J⟩_alg membership and the Ĵ test mean: every coefficient lies in J.

    Args:
        mode: induced-alg | check-J
    """
    if mode not in ("induced-alg", "check-J"):
        raise ValueError(f"Unknown membership mode: {mode}")
    if ideal.spec != f.system.algebra:
        raise ValueError("Ideal and element live over different algebras")
    return all(ideal.contains(a) for _, a in f.items())


def random_in_ideal(
    system: TwistedSystem, ideal: InvariantIdeal, support: Sequence[GroupElement], rng: np.random.Generator
) -> CcElement:
    return CcElement(system, {g: ideal.random_element(rng) for g in support})


# -- quotients -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuotientSystem:
    """Σ̃ on the blocks outside J together with the quotient map q: A → Ã."""

    system: TwistedSystem
    parent: TwistedSystem
    ideal: InvariantIdeal

    @property
    def kept_blocks(self) -> Tuple[int, ...]:
        return self.ideal.complement

    def q(self, a: AlgElement) -> AlgElement:
        return AlgElement(self.system.algebra, tuple(a.blocks[j] for j in self.kept_blocks))

    def lift(self, f: CcElement) -> CcElement:
        """q̃ on C_c: q̃(f)(g) = q(f(g))."""
        if f.system is not self.parent:
            raise ValueError(f"Element of {f.system.name} is not over {self.parent.name}")
        return CcElement(self.system, {g: self.q(a) for g, a in f.items()})

    def in_kernel(self, f: CcElement) -> bool:
        return self.lift(f).is_zero()


def quotient_system(system: TwistedSystem, ideal: InvariantIdeal) -> QuotientSystem:
    if ideal.is_whole:
        raise ValueError("The quotient by J = A is the zero algebra")
    for orbit in orbit_structure(system):
        if 0 < len(set(orbit) & set(ideal.blocks)) < len(orbit):
            raise ConditionViolation("Ideal is not invariant under the action", 1.0, list(orbit))
    kept = ideal.complement
    position = {j: i for i, j in enumerate(kept)}
    spec = AlgebraSpec(tuple(system.algebra.dims[j] for j in kept))

    def q(a):
        return AlgElement(spec, tuple(a.blocks[j] for j in kept))

    def action(g):
        alpha_g = system.alpha(g)
        perm, unitaries = [], []
        for j in kept:
            target = alpha_g.perm[j]
            if target not in position:
                raise ConditionViolation("Ideal is not invariant under the action", 1.0, system.group.format_element(g))
            perm.append(position[target])
            unitaries.append(alpha_g.unitaries[j])
        return AlgAutomorphism(spec, tuple(perm), tuple(unitaries))

    def cocycle(g, h):
        return q(system.sigma(g, h))

    quotient = make_system(
        spec,
        system.group,
        action=None if system.trivial_action else action,
        cocycle=cocycle,
        provenance=f"quotient({system.provenance})",
        name=f"{system.name} / J{list(ideal.blocks)}",
    )
    return QuotientSystem(system=quotient, parent=system, ideal=ideal)


# -- E-invariance --------------------------------------------------------------

@dataclass
class EInvarianceReport:
    passed: bool
    reference: InvariantIdeal
    n_samples: int
    violations: int = 0
    max_residual: float = 0.0
    witness: Optional[Dict] = None

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "reference_blocks": list(self.reference.blocks),
            "n_samples": self.n_samples,
            "violations": self.violations,
            "max_residual": self.max_residual,
            "witness": self.witness,
        }


def expectation_reference(generators: Sequence[CcElement]) -> InvariantIdeal:
    """Smallest invariant block ideal containing the e-coefficients of the generators."""
    system = generators[0].system
    blocks = set()
    for gen in generators:
        a = expectation(gen)
        blocks.update(j for j, b in enumerate(a.blocks) if np.linalg.norm(b, 2) > MEMBERSHIP_TOL)
    for orbit in orbit_structure(system):
        if blocks.intersection(orbit):
            blocks.update(orbit)
    return InvariantIdeal(system.algebra, tuple(blocks))


def e_invariance_probe(
    generators: Sequence[CcElement],
    sample_budget: int,
    rng: Optional[np.random.Generator] = None,
    reference: Optional[InvariantIdeal] = None,
    radius: float = 1,
) -> EInvarianceReport:
    """
    Test E(h₁⋆gen⋆h₂) ∈ 𝒥 ∩ A on sampled products; violations are reported, not raised.

    𝒥 ∩ A defaults to expectation_reference(generators).
    """
    if not generators:
        raise ValueError("e_invariance_probe needs at least one generator")
    system = generators[0].system
    group = system.group
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    reference = reference or expectation_reference(generators)
    support = group.elements() if group.is_finite else group.ball(radius)
    report = EInvarianceReport(passed=True, reference=reference, n_samples=sample_budget)
    for k in range(sample_budget):
        gen = generators[k % len(generators)]
        h1 = random_cc(system, support, rng)
        h2 = random_cc(system, support, rng) if k % 2 else unit(system)
        value = expectation(h1 * gen * h2)
        residual = reference.residual(value)
        if residual > MEMBERSHIP_TOL:
            report.violations += 1
            if residual > report.max_residual:
                report.max_residual = residual
                report.witness = {"generator": k % len(generators), "sample": k, "expectation": value.to_interleaved()}
    report.passed = report.violations == 0
    if not report.passed:
        logger.warning(f"E-invariance fails on {report.violations}/{sample_budget} samples (max residual {report.max_residual:.3e})")
    return report


# -- central projections ---------------------------------------------------------

@dataclass
class SplitReport:
    selfadjoint_residual: float
    unitary_residual: float
    commutation_residuals: List[float]
    p_idempotent: float
    p_selfadjoint: float
    q_idempotent: float
    orthogonality: float
    partition_of_unity: float

    @property
    def max_residual(self) -> float:
        return max(self.p_idempotent, self.p_selfadjoint, self.q_idempotent, self.orthogonality, self.partition_of_unity)

    def to_dict(self) -> Dict:
        return {
            "selfadjoint_residual": self.selfadjoint_residual,
            "unitary_residual": self.unitary_residual,
            "commutation_residuals": self.commutation_residuals,
            "p_idempotent": self.p_idempotent,
            "p_selfadjoint": self.p_selfadjoint,
            "q_idempotent": self.q_idempotent,
            "orthogonality": self.orthogonality,
            "partition_of_unity": self.partition_of_unity,
        }


def central_projection_split(s: CcElement, generators: Sequence[CcElement]) -> Tuple[CcElement, CcElement, SplitReport]:
    """p = (1+s)/2 and q = (1−s)/2 for a self-adjoint unitary s commuting with the generators."""
    system = s.system
    one = unit(system)
    selfadjoint = s.distance(s.star())
    unitary = (s * s).distance(one)
    if selfadjoint > ALGEBRA_TOL:
        raise ConditionViolation("s is not self-adjoint", selfadjoint)
    if unitary > ALGEBRA_TOL:
        raise ConditionViolation("s is not unitary", unitary)
    commutation = []
    for k, x in enumerate(generators):
        residual = linf_norm(s * x - x * s)
        commutation.append(residual)
        if residual > ALGEBRA_TOL:
            raise ConditionViolation("s does not commute with a generator", residual, k)
    p = (one + s) * 0.5
    q = (one - s) * 0.5
    report = SplitReport(
        selfadjoint_residual=selfadjoint,
        unitary_residual=unitary,
        commutation_residuals=commutation,
        p_idempotent=(p * p).distance(p),
        p_selfadjoint=p.distance(p.star()),
        q_idempotent=(q * q).distance(q),
        orthogonality=linf_norm(p * q),
        partition_of_unity=(p + q).distance(one),
    )
    logger.info(f"Central projection split on {system.name}: max residual {report.max_residual:.3e}")
    return p, q, report


@dataclass
class PslPreset:
    extension: CentralExtension
    system: TwistedSystem
    s: CcElement
    generators: List[CcElement] = field(default_factory=list)


def psl_preset() -> PslPreset:
    """
    C*(SL(2,ℤ)) as a twisted system over PSL(2,ℤ) ≅ ℤ₂∗ℤ₃ on ℂ², with s the image of −I₂
    and the generators {matrix units ⊙ δ_e, 1 ⊙ δ_s, 1 ⊙ δ_t}.
    """
    extension = sl2z_extension()
    system = section_system(extension)
    group = system.group
    s = CcElement(system, {group.identity: center_character_vector(1, extension.center_order, system.algebra)})
    generators = [CcElement(system, {group.identity: u}) for u in system.algebra.matrix_units()]
    generators += [CcElement(system, {g: system.algebra.unit()}) for g in group.alphabet.values()]
    return PslPreset(extension=extension, system=system, s=s, generators=generators)
