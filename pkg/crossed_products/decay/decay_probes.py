import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed

from config import DEFAULT_SEED, JOBLIB_N_JOBS, SPECTRAL_RTOL
from crossed_products.convolution.regular_representation import opnorm_lower
from crossed_products.convolution.twisted_convolution import (
    CcElement,
    random_cc,
    unit,
    weighted_alpha_norm,
    weighted_l2_norm,
)
from crossed_products.decay.weights import Weight, inverse_l2_norm
from crossed_products.systems.twisted_system import TwistedSystem, trivial_system

logger = logging.getLogger(__name__)


@dataclass
class DecayProbe:
    c_lower: float
    witness: Optional[CcElement]
    ratios: List[float]
    radius: float
    compression_radius: float
    l1_route_holds: bool
    weight: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "weight": self.weight,
            "lower": self.c_lower,
            "radius": self.radius,
            "compression_radius": self.compression_radius,
            "l1_route_holds": self.l1_route_holds,
            "n_samples": len(self.ratios),
            "witness": self.witness.describe() if self.witness is not None else None,
        }


def _support(system: TwistedSystem, weight: Weight, radius: float):
    group = system.group
    if group.is_finite:
        return group.elements()
    return weight.length.ball(radius)


def sample_supported(system: TwistedSystem, support, sample_budget: int, rng: np.random.Generator) -> List[CcElement]:
    """The unit followed by `sample_budget` random elements on random subsets of `support`."""
    samples = [unit(system)]
    for child in np.random.SeedSequence(int(rng.integers(2**32))).spawn(sample_budget):
        child_rng = np.random.default_rng(child)
        size = int(child_rng.integers(1, len(support) + 1))
        picks = sorted(child_rng.choice(len(support), size=size, replace=False))
        samples.append(random_cc(system, [support[i] for i in picks], child_rng))
    return samples


def _compression_radius(system: TwistedSystem, radius: float) -> float:
    group = system.group
    return group.full_radius if group.is_finite else 2 * radius


def decay_constant_probe(
    system: TwistedSystem,
    weight: Weight,
    radius: float,
    sample_budget: int,
    rng: Optional[np.random.Generator] = None,
    n_jobs: Optional[int] = None,
) -> DecayProbe:
    """
    max over sampled f supported in ball(R) of lower(f, 2R) / ‖f‖_{α,κ}, a lower bound for every
    valid decay constant. Also checks ‖Λ(f)‖ ≤ ‖κ⁻¹ 1_ball(R)‖₂ ‖f‖_{2,κ} on each sample.
    """
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    support = _support(system, weight, radius)
    samples = sample_supported(system, support, sample_budget, rng)
    compression = _compression_radius(system, radius)
    L = weight.length if weight.length.group is system.group else system.length
    lowers = Parallel(n_jobs=n_jobs or JOBLIB_N_JOBS, prefer="threads")(
        delayed(opnorm_lower)(f, compression, L, DEFAULT_SEED) for f in samples
    )
    inverse = inverse_l2_norm(weight, radius) if not system.group.is_finite else float(
        np.sqrt(sum(weight(g) ** -2.0 for g in support))
    )
    ratios, route = [], True
    for f, lower in zip(samples, lowers):
        ratios.append(lower / weighted_alpha_norm(f, weight))
        if lower > inverse * weighted_l2_norm(f, weight) * (1 + SPECTRAL_RTOL) + SPECTRAL_RTOL:
            route = False
    best = int(np.argmax(ratios))
    if not route:
        logger.error(f"l1-route bound violated on {system.name}; compression norms are inconsistent")
    return DecayProbe(
        c_lower=float(ratios[best]),
        witness=samples[best],
        ratios=[float(r) for r in ratios],
        radius=float(radius),
        compression_radius=float(compression),
        l1_route_holds=route,
        weight=weight.describe(),
    )


# -- commutative chain -------------------------------------------------------------

@dataclass
class DecayChain:
    c_group: float
    twisted_lowers: List[float]
    weighted_norms: List[float]
    max_violation: float
    compression_radius: float

    @property
    def holds(self) -> bool:
        return self.max_violation <= 1e-9

    def to_dict(self) -> Dict:
        return {
            "c_group": self.c_group,
            "holds": self.holds,
            "max_violation": self.max_violation,
            "compression_radius": self.compression_radius,
            "n_samples": len(self.twisted_lowers),
        }


def collapse(f: CcElement, scalar_system: TwistedSystem, point: int) -> CcElement:
    """|f|_ω for the point evaluation ω at `point`, as an element of the scalar group algebra."""
    spec = scalar_system.algebra
    return CcElement(scalar_system, {g: spec.scalar(abs(a.blocks[point][0, 0])) for g, a in f.items()})


def commutative_decay_chain(
    system: TwistedSystem,
    weight: Weight,
    radius: float,
    sample_budget: int,
    rng: Optional[np.random.Generator] = None,
) -> DecayChain:
    """
    lower_Σ(f) ≤ C_grp·‖f‖_{α,κ} where C_grp is the largest lower(|f|_ω)/‖|f|_ω‖_{2,κ} over the
    same samples and all point evaluations, measured at the same compression radius in the
    untwisted scalar group algebra.
    """
    if not system.algebra.is_commutative:
        raise ValueError("The commutative decay chain needs a commutative coefficient algebra")
    if not system.trivial_action:
        raise ValueError("The commutative decay chain needs a trivial action")
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    support = _support(system, weight, radius)
    samples = sample_supported(system, support, sample_budget, rng)
    compression = _compression_radius(system, radius)
    L = system.length
    scalar = trivial_system(system.group)
    c_group = 0.0
    lowers, norms = [], []
    for f in samples:
        lowers.append(opnorm_lower(f, compression, L))
        norms.append(weighted_alpha_norm(f, weight))
        for point in range(system.algebra.n_blocks):
            collapsed = collapse(f, scalar, point)
            if collapsed.is_zero():
                continue
            ratio = opnorm_lower(collapsed, compression, scalar.length) / weighted_l2_norm(collapsed, weight)
            c_group = max(c_group, ratio)
    violation = max(lower - c_group * norm for lower, norm in zip(lowers, norms))
    chain = DecayChain(
        c_group=c_group,
        twisted_lowers=lowers,
        weighted_norms=norms,
        max_violation=max(0.0, float(violation)),
        compression_radius=float(compression),
    )
    if not chain.holds:
        logger.error(f"Commutative decay chain fails on {system.name}: excess {chain.max_violation:.3e}")
    return chain
