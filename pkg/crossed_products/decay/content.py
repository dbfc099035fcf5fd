import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config import DEFAULT_SEED, JOBLIB_N_JOBS
from crossed_products.coefficients.block_algebra import AlgElement
from crossed_products.convolution.regular_representation import full_regular_matrix, largest_singular_value, opnorm_lower
from crossed_products.convolution.twisted_convolution import CcElement, alpha_norm
from crossed_products.decay.weights import Weight
from crossed_products.groups.discrete_groups import GroupElement, LengthFunction
from crossed_products.systems.twisted_system import TwistedSystem

logger = logging.getLogger(__name__)

ASCENT_ROUNDS = 4
ASCENT_TRIALS = 2


@dataclass
class ContentEstimate:
    subset: List[GroupElement]
    lower: float
    upper_universal: float
    upper_scalar: Optional[float]
    witness: Optional[CcElement]
    radius: float
    evaluations: int = 0

    @property
    def upper(self) -> float:
        return self.upper_scalar if self.upper_scalar is not None else self.upper_universal

    @property
    def within_bounds(self) -> bool:
        return self.lower <= self.upper + 1e-9

    def to_dict(self, group=None) -> Dict:
        fmt = group.format_element if group is not None else str
        return {
            "subset": [fmt(g) for g in self.subset],
            "lower": self.lower,
            "upper_universal": self.upper_universal,
            "upper_scalar": self.upper_scalar,
            "radius": self.radius,
            "evaluations": self.evaluations,
            "witness": self.witness.describe() if self.witness is not None else None,
        }


def _content_radius(system: TwistedSystem, subset: Sequence[GroupElement]) -> float:
    group = system.group
    if group.is_finite:
        return group.full_radius
    L = system.length
    return max(L(g) for g in subset) + 2


def _ratio(f: CcElement, radius: float) -> float:
    """‖Λ(f)‖-lower / ‖f‖_α, exact on finite groups."""
    denominator = alpha_norm(f)
    if denominator == 0:
        return 0.0
    if f.system.group.is_finite:
        return largest_singular_value(full_regular_matrix(f)) / denominator
    return opnorm_lower(f, radius) / denominator


def _normalized(f: CcElement) -> CcElement:
    return f * (1.0 / alpha_norm(f))


def _ascend(start: CcElement, subset: Sequence[GroupElement], radius: float, seed) -> tuple:
    """Coordinate ascent: perturb one coefficient at a time with shrinking steps."""
    rng = np.random.default_rng(seed)
    algebra = start.system.algebra
    best, best_value, evaluations = start, _ratio(start, radius), 1
    step = 0.5
    for _ in range(ASCENT_ROUNDS):
        for g in subset:
            for _ in range(ASCENT_TRIALS):
                coefficients = dict(best.items())
                coefficients[g] = best.coefficient(g) + algebra.random(rng, scale=step)
                candidate = CcElement(best.system, coefficients)
                if candidate.is_zero():
                    continue
                value = _ratio(candidate, radius)
                evaluations += 1
                if value > best_value:
                    best, best_value = _normalized(candidate), value
        step /= 2
    return best, best_value, evaluations


def content_probe(
    system: TwistedSystem,
    subset: Sequence[GroupElement],
    sample_budget: int,
    rng: Optional[np.random.Generator] = None,
    seed_witnesses: Sequence[CcElement] = (),
    radius: Optional[float] = None,
    n_jobs: Optional[int] = None,
) -> ContentEstimate:
    """
    Lower-bound search for C_Σ(E) = sup{‖Λ(f)‖ : supp f ⊆ E, ‖f‖_α = 1}.

    Starts are the unit-coefficient deltas on E, any seed witnesses, and `sample_budget`
    random elements; each start is refined by coordinate ascent under its own seed.
    """
    subset = list(dict.fromkeys(subset))
    if not subset:
        raise ValueError("Content probes need a nonempty subset")
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    algebra = system.algebra
    radius = radius if radius is not None else _content_radius(system, subset)
    starts = [CcElement(system, {g: algebra.unit()}) for g in subset]
    starts += [w for w in seed_witnesses if not w.is_zero()]
    for _ in range(sample_budget):
        f = CcElement(system, {g: algebra.random(rng) for g in subset})
        if not f.is_zero():
            starts.append(f)
    starts = [_normalized(f) for f in starts]
    seeds = np.random.SeedSequence(int(rng.integers(2**32))).spawn(len(starts))
    results = Parallel(n_jobs=n_jobs or JOBLIB_N_JOBS, prefer="threads")(
        delayed(_ascend)(f, subset, radius, seed) for f, seed in zip(starts, seeds)
    )
    values = [value for _, value, _ in results]
    best = int(np.argmax(values))
    scalar = algebra.dims == (1,)
    estimate = ContentEstimate(
        subset=subset,
        lower=float(values[best]),
        upper_universal=float(len(subset)),
        upper_scalar=math.sqrt(len(subset)) if scalar else None,
        witness=results[best][0],
        radius=float(radius),
        evaluations=sum(n for _, _, n in results),
    )
    if not estimate.within_bounds:
        logger.error(f"Content estimate {estimate.lower:.6f} exceeds the upper bound {estimate.upper:.6f}")
    return estimate


def nested_content_probes(
    system: TwistedSystem,
    chain: Sequence[Sequence[GroupElement]],
    sample_budget: int,
    rng: Optional[np.random.Generator] = None,
    n_jobs: Optional[int] = None,
) -> List[ContentEstimate]:
    """Probes along an increasing chain at one common radius; each probe is seeded with all earlier witnesses."""
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    chain = [list(E) for E in chain]
    for smaller, larger in zip(chain, chain[1:]):
        if not set(smaller) <= set(larger):
            raise ValueError("Nested content probes need an increasing chain of subsets")
    radius = _content_radius(system, chain[-1])
    estimates, witnesses = [], []
    for E in chain:
        estimate = content_probe(system, E, sample_budget, rng, seed_witnesses=witnesses, radius=radius, n_jobs=n_jobs)
        estimates.append(estimate)
        witnesses.append(estimate.witness)
    return estimates


# -- tails ---------------------------------------------------------------------------

Coefficients = Union[CcElement, Mapping[GroupElement, Union[AlgElement, float, complex]]]


def _magnitude(value) -> float:
    return value.norm() if isinstance(value, AlgElement) else abs(value)


def tail_profile(
    xi: Coefficients,
    L: LengthFunction,
    norm: str = "l2",
    weight: Optional[Weight] = None,
    max_shell: Optional[int] = None,
) -> pd.DataFrame:
    """
    Per-shell norms of ξ for shells {k ≤ L(g) < k+1}.

    Parameters:
    xi: an element of C_c(Σ) or a mapping from group elements to coefficients
    norm (str): l2 | l1 | linf over the shell
    weight (Weight): optional κ multiplying each coefficient norm
    max_shell (int): last shell reported (default: the outermost occupied shell)
    """
    if norm not in ("l2", "l1", "linf"):
        raise ValueError(f"Unknown shell norm {norm!r}")
    items = xi.items()
    shells: Dict[int, List[float]] = {}
    for g, value in items:
        size = _magnitude(value) * (weight(g) if weight is not None else 1.0)
        shells.setdefault(int(math.floor(L(g) + 1e-9)), []).append(size)
    last = max_shell if max_shell is not None else max(shells, default=0)
    rows = []
    for k in range(last + 1):
        sizes = np.array(shells.get(k, []), dtype=float)
        if not sizes.size:
            value = 0.0
        elif norm == "l2":
            value = float(np.sqrt(np.sum(sizes**2)))
        elif norm == "l1":
            value = float(np.sum(sizes))
        else:
            value = float(np.max(sizes))
        rows.append({"shell": k, "norm": value, "count": int(sizes.size)})
    return pd.DataFrame(rows, columns=["shell", "norm", "count"])
