import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from config import ALGEBRA_TOL, DEFAULT_SEED, JOBLIB_N_JOBS, MEMBERSHIP_TOL
from crossed_products.coefficients.block_algebra import AlgElement
from crossed_products.convolution.regular_representation import full_regular_matrix, largest_singular_value, opnorm_lower
from crossed_products.convolution.twisted_convolution import CcElement, l1_norm, random_cc, unit
from crossed_products.groups.discrete_groups import DiscreteGroup, GroupElement, LengthFunction, make_length
from crossed_products.ideals.invariant_ideals import InvariantIdeal
from crossed_products.modules.equivariant import EquivariantRep, UnitaryRule, tensor_rep
from crossed_products.modules.hilbert_module import ModuleOperator, ModuleVector, left_multiplication
from crossed_products.systems.twisted_system import ConditionViolation, TwistedSystem

logger = logging.getLogger(__name__)

Evaluation = Callable[[GroupElement, AlgElement], AlgElement]


# -- scalar kernels --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalarKernel:
    """φ: G → ℂ with an optional finite support (None means no finite support is known)."""

    name: str
    rule: Callable[[GroupElement], complex]
    support: Optional[Tuple[GroupElement, ...]] = None

    def __call__(self, g: GroupElement) -> complex:
        return self.rule(g)


def delta_kernel(group: DiscreteGroup) -> ScalarKernel:
    e = group.identity
    return ScalarKernel("delta", lambda g: 1.0 if g == e else 0.0, (e,))


def geometric_kernel(r: float, L: LengthFunction) -> ScalarKernel:
    """φ_r(g) = r^{L(g)}."""
    if not 0 < r < 1:
        raise ValueError(f"Geometric kernels need 0 < r < 1, got {r}")
    return ScalarKernel(f"geometric(r={r}, L={L.tag})", lambda g: float(r ** L(g)))


def fejer_kernel(group: DiscreteGroup, i: int) -> ScalarKernel:
    """φ_i(g) = |gF_i ∩ F_i| / |F_i|, supported in F_i F_i⁻¹."""
    box = group.folner(i)
    support = {group.multiply(a, group.inverse(b)) for a in box for b in box}
    return ScalarKernel(
        f"fejer(i={i})",
        lambda g: group.folner_ratio(g, i),
        tuple(sorted(support, key=group.order_key)),
    )


def table_kernel(group: DiscreteGroup, table: Mapping[GroupElement, complex]) -> ScalarKernel:
    values = {group.normal_form(g): complex(v) for g, v in table.items()}
    return ScalarKernel("table", lambda g: values.get(g, 0.0), tuple(sorted(values, key=group.order_key)))


# -- multipliers ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Multiplier:
    """
    A family T = {T_g : A → A} of Σ given by a recipe.

    `support` is the finite G-support when known; T_g is treated as zero outside it.
    `bound` is the advertised norm bound of the recipe, never a computed norm.
    """

    system: TwistedSystem
    recipe: str
    evaluate: Evaluation
    bound: Optional[float] = None
    support: Optional[Tuple[GroupElement, ...]] = None
    kernel: Optional[ScalarKernel] = None
    function: Optional[Callable[[GroupElement], AlgElement]] = None
    payload: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.support is not None:
            object.__setattr__(self, "_support_set", frozenset(self.support))

    def in_support(self, g: GroupElement) -> bool:
        return self.support is None or g in self._support_set

    def __call__(self, g: GroupElement, a: AlgElement) -> AlgElement:
        if not self.in_support(g):
            return self.system.algebra.zero()
        return self.evaluate(g, a)

    def apply(self, f: CcElement) -> CcElement:
        return apply_multiplier(self, f)

    def describe(self) -> Dict:
        return {"recipe": self.recipe, "bound": self.bound, "support_size": None if self.support is None else len(self.support)}


def apply_multiplier(T: Multiplier, f: CcElement) -> CcElement:
    """(T·f)(g) = T_g(f(g)) over the support of f."""
    if f.system is not T.system:
        raise ValueError(f"Multiplier for {T.system.name} applied to an element of {f.system.name}")
    return CcElement(f.system, {g: T(g, a) for g, a in f.items() if T.in_support(g)})


def identity_multiplier(system: TwistedSystem) -> Multiplier:
    """I_Σ(g, a) = a."""
    return Multiplier(system, "identity", lambda g, a: a, bound=1.0, kernel=ScalarKernel("one", lambda g: 1.0))


def make_scalar_multiplier(system: TwistedSystem, kernel: ScalarKernel, bound: Optional[float] = None) -> Multiplier:
    """T^φ(g, a) = φ(g)a; the bound defaults to |φ(e)|, which is exact for positive definite φ."""
    if bound is None:
        bound = abs(complex(kernel(system.identity)))
    return Multiplier(
        system,
        f"scalar:{kernel.name}",
        lambda g, a: a * complex(kernel(g)),
        bound=bound,
        support=kernel.support,
        kernel=kernel,
    )


def make_left_multiplier(
    system: TwistedSystem,
    psi: Callable[[GroupElement], AlgElement],
    support: Optional[Sequence[GroupElement]] = None,
    bound: Optional[float] = None,
    name: str = "left",
) -> Multiplier:
    """L^ψ(g, a) = ψ(g)a."""
    return Multiplier(system, name, lambda g, a: psi(g) * a, bound=bound, support=_tuple(support), function=psi)


def make_right_multiplier(
    system: TwistedSystem,
    psi: Callable[[GroupElement], AlgElement],
    support: Optional[Sequence[GroupElement]] = None,
    bound: Optional[float] = None,
    name: str = "right",
) -> Multiplier:
    """R^ψ(g, a) = aψ(g)."""
    return Multiplier(system, name, lambda g, a: a * psi(g), bound=bound, support=_tuple(support), function=psi)


def _tuple(support):
    return None if support is None else tuple(support)


def make_matrix_coeff_multiplier(rep: EquivariantRep, x: ModuleVector, y: ModuleVector) -> Multiplier:
    """T(g, a) = ⟨x, ρ(a)v(g)y⟩ with bound ‖x‖‖y‖."""
    if x.rank != rep.rank or y.rank != rep.rank:
        raise ValueError(f"Vectors of rank {x.rank}, {y.rank} do not fit a module of rank {rep.rank}")
    if x.spec != rep.algebra or y.spec != rep.algebra:
        raise ValueError("Module vectors live over a different algebra")
    return Multiplier(
        rep.system,
        "matrix-coeff",
        lambda g, a: rep.coefficient(x, y, g, a),
        bound=x.norm() * y.norm(),
        payload={"rep": rep.name, "x_norm": x.norm(), "y_norm": y.norm()},
    )


def tensor_coefficient_multiplier(
    rep: EquivariantRep,
    x: ModuleVector,
    y: ModuleVector,
    w: UnitaryRule,
    xi: np.ndarray,
    eta: np.ndarray,
) -> Multiplier:
    """
    T(g, a) = ⟨x, ρ(a)v(g)y⟩·⟨ξ, w(g)η⟩, realised as a matrix coefficient of (ρ⊗ι, v⊗w)
    at x⊗ξ and y⊗η.
    """
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    if xi.shape != eta.shape or xi.ndim != 1:
        raise ValueError(f"ξ and η must be vectors of equal length, got {xi.shape} and {eta.shape}")
    d = xi.size
    big = tensor_rep(rep, w, d)
    x_big = ModuleVector(tuple(x_i * complex(xi[p]) for p in range(d) for x_i in x.entries))
    y_big = ModuleVector(tuple(y_i * complex(eta[p]) for p in range(d) for y_i in y.entries))
    T = make_matrix_coeff_multiplier(big, x_big, y_big)
    return Multiplier(
        T.system,
        "tensor-coeff",
        T.evaluate,
        bound=x.norm() * y.norm() * float(np.linalg.norm(xi) * np.linalg.norm(eta)),
        payload={"rep": big.name, "d": d},
    )


# -- Gilbert pairs -------------------------------------------------------------

EtaData = Union[Callable[[GroupElement], ModuleVector], Mapping[GroupElement, ModuleVector]]


def _as_rule(eta: EtaData, zero: ModuleVector) -> Callable[[GroupElement], ModuleVector]:
    if callable(eta):
        return eta
    values = dict(eta)
    return lambda g: values.get(g, zero)


def make_gilbert_multiplier(
    system: TwistedSystem,
    pi: Callable[[AlgElement], ModuleOperator],
    eta1: EtaData,
    eta2: EtaData,
    side: str,
    domain: Sequence[GroupElement],
    rank: int,
    eta_bound: Optional[float] = None,
) -> Multiplier:
    """
    L^φ (side="left") or R^φ (side="right") from a pair η₁, η₂: G → Aⁿ.

    φ is read off the factorization at s = e: φ(g) = ⟨η₁(e), η₂(g⁻¹)⟩. The centrality and
    factorization conditions are checked for all s, t in `domain` and every matrix unit a.

    Parameters:
    - pi: representation of A on Aⁿ
    - eta1, eta2: callables or finitely supported mappings (zero off the mapping)
    - eta_bound: ‖η₁‖∞‖η₂‖∞ when known in closed form; otherwise measured on `domain`

    Raises:
    - ConditionViolation with the witness (s, t) or (t,) when a condition fails above 1e-10
    """
    if side not in ("left", "right"):
        raise ValueError(f"Gilbert side must be 'left' or 'right', got {side!r}")
    domain = list(domain)
    if not domain:
        raise ValueError("make_gilbert_multiplier needs a nonempty domain")
    group = system.group
    spec = system.algebra
    zero = ModuleVector.zero(spec, rank)
    eta1_rule, eta2_rule = _as_rule(eta1, zero), _as_rule(eta2, zero)
    central = eta2_rule if side == "left" else eta1_rule
    e = group.identity
    anchor = eta1_rule(e)

    def phi(g):
        return anchor.inner(eta2_rule(group.inverse(g)))

    units = spec.matrix_units()
    for t in domain:
        eta_t = central(t)
        for a in units:
            residual = (pi(a).apply(eta_t) - eta_t.right_mul(a)).norm()
            if residual > ALGEBRA_TOL:
                raise ConditionViolation(f"Gilbert {side} centrality fails", residual, group.format_element(t))

    for s in domain:
        alpha_s = system.alpha(s)
        eta_s = eta1_rule(s)
        for t in domain:
            st_inv = group.multiply(s, group.inverse(t))
            value = alpha_s(eta_s.inner(eta2_rule(t)))
            if side == "right":
                u = system.sigma(s, st_inv)
                value = u * value * u.star()
            residual = phi(st_inv).distance(value)
            if residual > ALGEBRA_TOL:
                raise ConditionViolation(
                    f"Gilbert {side} factorization fails",
                    residual,
                    (group.format_element(s), group.format_element(t)),
                )

    if eta_bound is None:
        eta_bound = max(eta1_rule(g).norm() for g in domain) * max(eta2_rule(g).norm() for g in domain)
        logger.info(f"Gilbert bound measured on {len(domain)} domain elements: {eta_bound:.6g}")
    if side == "left":
        T = make_left_multiplier(system, phi, bound=eta_bound, name="gilbert-left")
    else:
        T = make_right_multiplier(system, phi, bound=eta_bound, name="gilbert-right")
    return T


def scalar_gilbert_data(
    system: TwistedSystem,
    xi1: Callable[[GroupElement], np.ndarray],
    xi2: Callable[[GroupElement], np.ndarray],
    d: int,
):
    """
    η_j(s) = 1 ⊗ ξ_j(s) on X = A ⊗ ℂ^d with the canonical representation a ↦ a ⊗ 1.

    Returns (pi, eta1, eta2) ready for make_gilbert_multiplier(..., rank=d).
    """
    spec = system.algebra

    def lift(xi):
        def eta(g):
            values = np.asarray(xi(g), dtype=complex)
            if values.shape != (d,):
                raise ValueError(f"ξ({g}) has shape {values.shape}, expected {(d,)}")
            return ModuleVector(tuple(spec.scalar(c) for c in values))

        return eta

    return (lambda a: left_multiplication(a, d)), lift(xi1), lift(xi2)


# -- endomorphisms and decay -----------------------------------------------------

def make_endo_multiplier(
    system: TwistedSystem,
    beta,
    elements: Optional[Sequence[GroupElement]] = None,
    probes: Optional[Sequence[AlgElement]] = None,
    rng: Optional[np.random.Generator] = None,
) -> Multiplier:
    """
    T_g = β for every g, after checking βα_g = α_gβ on probes and β(σ(g,h)) = σ(g,h).

    Raises ConditionViolation with the first witness above 1e-10.
    """
    group = system.group
    if elements is None:
        elements = group.elements() if group.is_finite else group.ball(2)
    if probes is None:
        probes = system.algebra.matrix_units()
    for g in elements:
        alpha_g = system.alpha(g)
        for a in probes:
            residual = beta(alpha_g(a)).distance(alpha_g(beta(a)))
            if residual > ALGEBRA_TOL:
                raise ConditionViolation("Endomorphism does not commute with the action", residual, group.format_element(g))
    for g in elements:
        for h in elements:
            s = system.sigma(g, h)
            residual = beta(s).distance(s)
            if residual > ALGEBRA_TOL:
                raise ConditionViolation(
                    "Endomorphism does not fix the cocycle", residual, (group.format_element(g), group.format_element(h))
                )
    return Multiplier(system, "endomorphism", lambda g, a: beta(a), bound=1.0, payload={"checked_elements": len(elements)})


def make_decay_multiplier(
    system: TwistedSystem,
    psi: Callable[[GroupElement], AlgElement],
    kappa: Callable[[GroupElement], float],
    decay_constant: float,
    support: Sequence[GroupElement],
) -> Multiplier:
    """
    L^ψ for ψ ∈ ℓ^∞_κ(G, A) under the weighted decay property with constant C.

    Advertised bound C·‖ψκ‖∞, with the sup taken over the finite support of ψ.
    """
    support = tuple(support)
    if decay_constant <= 0:
        raise ValueError(f"Decay constant must be positive, got {decay_constant}")
    weighted_sup = max((psi(g).norm() * float(kappa(g)) for g in support), default=0.0)
    return make_left_multiplier(system, psi, support=support, bound=decay_constant * weighted_sup, name="decay-left")


# -- ideal preservation and norm probes --------------------------------------------

def preserves_ideal(
    T: Multiplier,
    ideal: InvariantIdeal,
    elements: Sequence[GroupElement],
    samples: int = 4,
    rng: Optional[np.random.Generator] = None,
) -> bool:
    """True when T_g maps sampled elements of J back into J for every listed g."""
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    for g in elements:
        for _ in range(samples):
            a = ideal.random_element(rng)
            if not ideal.contains(T(g, a), MEMBERSHIP_TOL):
                logger.warning(f"{T.recipe} leaves {ideal.describe()} at {T.system.group.format_element(g)}")
                return False
    return True


@dataclass
class NormProbe:
    ratio_max: float
    witness: Optional[CcElement]
    ratios: List[float]
    exact_denominator: bool
    bound: Optional[float]

    def to_dict(self) -> Dict:
        return {
            "ratio_max": self.ratio_max,
            "ratios": self.ratios,
            "exact_denominator": self.exact_denominator,
            "advertised_bound": self.bound,
            "witness": self.witness.describe() if self.witness is not None else None,
        }


def _probe_ratio(T: Multiplier, f: CcElement, radius: float, L: LengthFunction, exact: bool, seed: int) -> float:
    if exact:
        denominator = largest_singular_value(full_regular_matrix(f), seed)
        numerator = largest_singular_value(full_regular_matrix(T.apply(f)), seed)
    else:
        denominator = l1_norm(f)
        numerator = opnorm_lower(T.apply(f), radius, L, seed)
    return numerator / denominator if denominator > 0 else 0.0


def multiplier_norm_probe(
    T: Multiplier,
    sample_budget: int,
    radius: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
    support_radius: float = 2,
    n_jobs: Optional[int] = None,
) -> NormProbe:
    """
    Lower bound for ‖M_T‖ as the largest ‖Λ(T·f)‖ / ‖Λ(f)‖ over the unit and sampled f.

    On finite groups both norms come from the full regular representation; otherwise the
    numerator is a compression lower bound and the denominator is the ℓ¹ upper bound.
    """
    system = T.system
    group = system.group
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    exact = group.is_finite and (radius is None or radius >= group.full_radius)
    radius = radius if radius is not None else (group.full_radius if group.is_finite else support_radius)
    L = make_length(group)
    support = group.elements() if group.is_finite else group.ball(support_radius)
    seeds = np.random.SeedSequence(int(rng.integers(2**32))).spawn(sample_budget)
    samples = [unit(system)]
    for child in seeds:
        child_rng = np.random.default_rng(child)
        size = int(child_rng.integers(1, len(support) + 1))
        picks = child_rng.choice(len(support), size=size, replace=False)
        samples.append(random_cc(system, [support[i] for i in sorted(picks)], child_rng))
    ratios = Parallel(n_jobs=n_jobs or JOBLIB_N_JOBS, prefer="threads")(
        delayed(_probe_ratio)(T, f, radius, L, exact, DEFAULT_SEED) for f in samples
    )
    best = int(np.argmax(ratios))
    if T.bound is not None and ratios[best] > T.bound * (1 + 1e-9) + 1e-9:
        logger.error(f"{T.recipe} probe ratio {ratios[best]:.6g} exceeds its advertised bound {T.bound:.6g}")
    return NormProbe(
        ratio_max=float(ratios[best]),
        witness=samples[best],
        ratios=[float(r) for r in ratios],
        exact_denominator=exact,
        bound=T.bound,
    )
