import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from config import ALGEBRA_TOL, DEFAULT_SEED, EXHAUSTIVE_GROUP_LIMIT, MAX_MODULE_RANK
from crossed_products.coefficients.block_algebra import AlgElement
from crossed_products.groups.discrete_groups import DiscreteGroup, GroupElement, word_homomorphism
from crossed_products.modules.hilbert_module import ModuleMap, ModuleOperator, ModuleVector, left_multiplication
from crossed_products.systems.twisted_system import TwistedSystem

logger = logging.getLogger(__name__)

UnitaryRule = Callable[[GroupElement], np.ndarray]


class EquivariantRep:
    """
    An equivariant representation (ρ, v) of Σ on the free module Aⁿ.

    ρ maps a ∈ A to a module operator; v maps g ∈ G to an invertible twisted module map.
    Both rules are memoised; nothing is validated until validate_equivariant is called.
    """

    def __init__(
        self,
        system: TwistedSystem,
        rank: int,
        rho: Callable[[AlgElement], ModuleOperator],
        v: Callable[[GroupElement], ModuleMap],
        name: str = "",
    ):
        if rank < 1:
            raise ValueError(f"Module rank must be >= 1, got {rank}")
        self.system = system
        self.rank = rank
        self.rho = rho
        self._v_rule = v
        self._v: Dict[GroupElement, ModuleMap] = {}
        self._v_inv: Dict[GroupElement, ModuleMap] = {}
        self.name = name or f"rep of rank {rank}"

    @property
    def algebra(self):
        return self.system.algebra

    def v(self, g: GroupElement) -> ModuleMap:
        if g not in self._v:
            self._v[g] = self._v_rule(g)
        return self._v[g]

    def v_inv(self, g: GroupElement) -> ModuleMap:
        if g not in self._v_inv:
            self._v_inv[g] = self.v(g).inverse()
        return self._v_inv[g]

    def ad_rho(self, u: AlgElement, x: ModuleVector) -> ModuleVector:
        """ad_ρ(u)x = (ρ(u)x)·u*."""
        return self.rho(u).apply(x).right_mul(u.star())

    def coefficient(self, x: ModuleVector, y: ModuleVector, g: GroupElement, a: AlgElement) -> AlgElement:
        """⟨x, ρ(a)v(g)y⟩."""
        return x.inner(self.rho(a).apply(self.v(g).apply(y)))

    def __repr__(self):
        return f"EquivariantRep({self.name!r}, rank={self.rank})"


def _alpha_map(system: TwistedSystem, rank: int) -> Callable[[GroupElement], ModuleMap]:
    identity = ModuleOperator.identity(system.algebra, rank)
    return lambda g: ModuleMap(identity, system.alpha(g))


def trivial_rep(system: TwistedSystem) -> EquivariantRep:
    """The pair (ℓ, α) on X = A."""
    return EquivariantRep(system, 1, lambda a: left_multiplication(a, 1), _alpha_map(system, 1), name="trivial (l, alpha)")


def endomorphism_rep(system: TwistedSystem, beta) -> EquivariantRep:
    """(ρ_β, α) on X = A with ρ_β(a)x = β(a)x."""
    return EquivariantRep(
        system, 1, lambda a: left_multiplication(beta(a), 1), _alpha_map(system, 1), name="endomorphism (rho_beta, alpha)"
    )


def tensor_rep(rep: EquivariantRep, w: UnitaryRule, d: int) -> EquivariantRep:
    """
    (ρ⊗ι, v⊗w) on Aⁿ ⊗ ℂ^d, coordinates ordered with the ℂ^d index outermost.

    w must be a genuine unitary representation of G on ℂ^d.
    """
    n = rep.rank
    spec = rep.algebra

    def rho(a):
        inner = rep.rho(a)
        zero = spec.zero()
        rows = []
        for p in range(d):
            for i in range(n):
                rows.append(tuple(inner.entries[i][j] if p == q else zero for q in range(d) for j in range(n)))
        return ModuleOperator(tuple(rows))

    def v(g):
        base = rep.v(g)
        w_g = np.asarray(w(g), dtype=complex)
        if w_g.shape != (d, d):
            raise ValueError(f"Unitary representation value at {g} has shape {w_g.shape}, expected {(d, d)}")
        rows = []
        for p in range(d):
            for i in range(n):
                rows.append(tuple(base.operator.entries[i][j] * w_g[p, q] for q in range(d) for j in range(n)))
        return ModuleMap(ModuleOperator(tuple(rows)), base.twist)

    return EquivariantRep(rep.system, n * d, rho, v, name=f"{rep.name} x unitary({d})")


def tensor_unitary_rep(system: TwistedSystem, w: UnitaryRule, d: int) -> EquivariantRep:
    """(ℓ⊗ι, α⊗w) on A ⊗ ℂ^d."""
    return tensor_rep(trivial_rep(system), w, d)


def unitary_rep_from_generators(group: DiscreteGroup, images: Dict[str, np.ndarray]) -> UnitaryRule:
    """Evaluate a unitary representation of G from generator images along normal forms."""
    images = {k: np.asarray(u, dtype=complex) for k, u in images.items()}
    d = next(iter(images.values())).shape[0]
    for letter, u in images.items():
        if u.shape != (d, d) or not np.allclose(u.conj().T @ u, np.eye(d), atol=ALGEBRA_TOL):
            raise ValueError(f"Image of generator {letter!r} is not a {d}x{d} unitary")
    evaluate = word_homomorphism(
        group,
        images,
        multiply=lambda x, y: x @ y,
        identity=np.eye(d, dtype=complex),
        inverse=lambda x: x.conj().T,
        power=np.linalg.matrix_power,
    )
    cache: Dict[GroupElement, np.ndarray] = {}

    def w(g):
        if g not in cache:
            cache[g] = evaluate(g)
        return cache[g]

    return w


def scaled_at(rep: EquivariantRep, g: GroupElement, factor: complex) -> EquivariantRep:
    """Copy of rep with v(g) multiplied by a scalar; used to exhibit failing axioms."""
    base = rep._v_rule

    def v(h):
        value = base(h)
        return value.scaled(factor) if h == g else value

    return EquivariantRep(rep.system, rep.rank, rep.rho, v, name=f"{rep.name} (scaled at {g})")


# -- validation ----------------------------------------------------------------

@dataclass
class EquivariantReport:
    covariance: float = 0.0
    projectivity: float = 0.0
    inner_product: float = 0.0
    twisted_linearity: float = 0.0
    identity_defect: float = 0.0
    witnesses: Dict[str, tuple] = field(default_factory=dict)
    tolerance: float = ALGEBRA_TOL

    @property
    def max_violation(self) -> float:
        return max(self.covariance, self.projectivity, self.inner_product, self.twisted_linearity, self.identity_defect)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_dict(self, group: Optional[DiscreteGroup] = None) -> Dict:
        fmt = (lambda g: group.format_element(g)) if group is not None else str
        return {
            "passed": self.passed,
            "axiom_i_covariance": self.covariance,
            "axiom_ii_projectivity": self.projectivity,
            "axiom_iii_inner_product": self.inner_product,
            "axiom_iv_twisted_linearity": self.twisted_linearity,
            "identity_defect": self.identity_defect,
            "witnesses": {k: [fmt(g) for g in v] for k, v in self.witnesses.items()},
        }


def default_group_samples(group: DiscreteGroup, radius: float = 2) -> Sequence[GroupElement]:
    if group.is_finite and group.order <= EXHAUSTIVE_GROUP_LIMIT:
        return group.elements()
    return group.ball(radius)


def validate_equivariant(
    rep: EquivariantRep,
    elements: Optional[Sequence[GroupElement]] = None,
    probes: Optional[Sequence[AlgElement]] = None,
    vectors: Optional[Sequence[ModuleVector]] = None,
    rng: Optional[np.random.Generator] = None,
) -> EquivariantReport:
    """
    Maximum violations of the four equivariance axioms on samples; never raises on failure.

    Args:
        elements: group samples; pairs are all ordered pairs of them.
        probes: algebra samples a.
        vectors: module samples x.
    """
    system = rep.system
    group = system.group
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    elements = list(elements) if elements is not None else list(default_group_samples(group))
    if probes is None:
        probes = [system.algebra.random(rng) for _ in range(2)]
    if vectors is None:
        vectors = [ModuleVector.random(system.algebra, rep.rank, rng) for _ in range(2)]
    report = EquivariantReport()

    def record(attribute, value, witness):
        if value > getattr(report, attribute):
            setattr(report, attribute, value)
            report.witnesses[attribute] = witness

    e = group.identity
    for x in vectors:
        record("identity_defect", (rep.v(e).apply(x) - x).norm(), (e,))

    for g in elements:
        v_g, v_g_inv = rep.v(g), rep.v_inv(g)
        alpha_g = system.alpha(g)
        for x in vectors:
            record("identity_defect", (v_g_inv.apply(v_g.apply(x)) - x).norm(), (g,))
            for a in probes:
                lhs = rep.rho(alpha_g(a)).apply(x)
                rhs = v_g.apply(rep.rho(a).apply(v_g_inv.apply(x)))
                record("covariance", (lhs - rhs).norm(), (g,))
                lhs = v_g.apply(x.right_mul(a))
                rhs = v_g.apply(x).right_mul(alpha_g(a))
                record("twisted_linearity", (lhs - rhs).norm(), (g,))
            for y in vectors:
                lhs = alpha_g(x.inner(y))
                rhs = v_g.apply(x).inner(v_g.apply(y))
                record("inner_product", lhs.distance(rhs), (g,))

    for g in elements:
        for h in elements:
            gh = group.multiply(g, h)
            s = system.sigma(g, h)
            for x in vectors:
                lhs = rep.v(g).apply(rep.v(h).apply(x))
                rhs = rep.ad_rho(s, rep.v(gh).apply(x))
                record("projectivity", (lhs - rhs).norm(), (g, h))

    if report.passed:
        logger.info(f"{rep.name} satisfies the equivariance axioms on {len(elements)} group samples")
    else:
        logger.error(f"{rep.name} violates the equivariance axioms: {report.to_dict(group)}")
    return report


def central_part(rep: EquivariantRep) -> List[ModuleVector]:
    """
    Orthonormal basis (after flattening) of Z_X = {z : ρ(a)z = z·a for all a},
    solved against the matrix units of A.
    """
    if rep.rank > MAX_MODULE_RANK:
        raise ValueError(f"Central parts are solved for rank <= {MAX_MODULE_RANK}, got {rep.rank}")
    spec = rep.algebra
    n = rep.rank
    size = n * spec.dimension
    units = spec.matrix_units()
    columns = []
    for k in range(size):
        z = ModuleVector.from_flat(spec, n, np.eye(size, dtype=complex)[k])
        residual = [(rep.rho(u).apply(z) - z.right_mul(u)).flatten() for u in units]
        columns.append(np.concatenate(residual))
    system_matrix = np.column_stack(columns)
    basis = null_space(system_matrix, rcond=ALGEBRA_TOL)
    logger.info(f"Central part of {rep.name} has dimension {basis.shape[1]}")
    return [ModuleVector.from_flat(spec, n, basis[:, k]) for k in range(basis.shape[1])]
