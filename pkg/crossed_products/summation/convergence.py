import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config import DEFAULT_SEED, JOBLIB_N_JOBS
from crossed_products.coefficients.block_algebra import AlgElement
from crossed_products.convolution.regular_representation import opnorm_lower
from crossed_products.convolution.twisted_convolution import CcElement, alpha_norm, l1_norm
from crossed_products.groups.discrete_groups import GroupElement, make_length
from crossed_products.summation.summing_nets import SummingNet

logger = logging.getLogger(__name__)

POINTWISE_TARGET = 1e-6


@dataclass
class ConvergenceReport:
    net: str
    indices: List
    radius_schedule: List[float]
    l1_errors: List[float] = field(default_factory=list)
    alpha_errors: List[float] = field(default_factory=list)
    opnorm_errors: List[List[float]] = field(default_factory=list)
    pointwise_errors: List[float] = field(default_factory=list)
    truncation_tails: List[float] = field(default_factory=list)
    target_error: Optional[float] = None

    @property
    def converged(self) -> bool:
        """Last ℓ¹ error meets the target (or, without a target, is below the pointwise target)."""
        if not self.l1_errors:
            return False
        target = self.target_error if self.target_error is not None else POINTWISE_TARGET
        return self.l1_errors[-1] <= target

    @property
    def pointwise_converged(self) -> bool:
        """Pointwise errors never increase and end below 1e-6."""
        errors = self.pointwise_errors
        if not errors:
            return False
        monotone = all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
        return monotone and errors[-1] < POINTWISE_TARGET

    @property
    def dominated(self) -> bool:
        """Compressed operator-norm errors never exceed the ℓ¹ error."""
        return all(e <= l1 + 1e-9 for l1, row in zip(self.l1_errors, self.opnorm_errors) for e in row)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"index": self.indices, "l1_error": self.l1_errors, "alpha_error": self.alpha_errors})
        for k, R in enumerate(self.radius_schedule):
            frame[f"opnorm_error@{R:g}"] = [row[k] for row in self.opnorm_errors]
        frame["pointwise_error"] = self.pointwise_errors
        frame["truncation_tail"] = self.truncation_tails
        return frame

    def to_dict(self) -> Dict:
        return {
            "net": self.net,
            "converged": self.converged,
            "pointwise_converged": self.pointwise_converged,
            "dominated": self.dominated,
            "target_error": self.target_error,
            "final_l1_error": self.l1_errors[-1] if self.l1_errors else None,
        }


def _index_errors(T, f: CcElement, radius_schedule, L, samples, seed) -> Tuple[float, float, List[float], float]:
    h = T.apply(f) - f
    opnorm = [opnorm_lower(h, R, L, seed) if not h.is_zero() else 0.0 for R in radius_schedule]
    pointwise = max(((T(g, a) - a).norm() for g, a in samples), default=0.0)
    return l1_norm(h), alpha_norm(h), opnorm, pointwise


def default_pointwise_samples(f: CcElement, rng: np.random.Generator) -> List[Tuple[GroupElement, AlgElement]]:
    algebra = f.system.algebra
    samples = [(g, algebra.unit()) for g in f.support]
    samples += [(g, algebra.random(rng)) for g in f.support]
    return samples


def run_convergence(
    net: SummingNet,
    f: CcElement,
    radius_schedule: Sequence[float] = (),
    target_error: Optional[float] = None,
    samples: Optional[Sequence[Tuple[GroupElement, AlgElement]]] = None,
    rng: Optional[np.random.Generator] = None,
    n_jobs: Optional[int] = None,
) -> ConvergenceReport:
    """
    Per-index errors of T^i·f against f: ℓ¹, α-norm, compressed operator norm at each radius,
    and the pointwise criterion max ‖T^i_g(a) − a‖ over (g, a) samples.
    """
    if f.system is not net.system:
        raise ValueError(f"Net over {net.system.name} run on an element of {f.system.name}")
    if not len(net):
        raise ValueError(f"Net {net.name} has no members")
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    samples = list(samples) if samples is not None else default_pointwise_samples(f, rng)
    L = make_length(f.system.group)
    results = Parallel(n_jobs=n_jobs or JOBLIB_N_JOBS, prefer="threads")(
        delayed(_index_errors)(T, f, radius_schedule, L, samples, DEFAULT_SEED) for T in net.multipliers
    )
    report = ConvergenceReport(
        net=net.name,
        indices=list(net.indices),
        radius_schedule=[float(R) for R in radius_schedule],
        truncation_tails=list(net.truncation_tails),
        target_error=target_error,
    )
    for l1, alpha, opnorm, pointwise in results:
        report.l1_errors.append(l1)
        report.alpha_errors.append(alpha)
        report.opnorm_errors.append(opnorm)
        report.pointwise_errors.append(pointwise)
    if not report.dominated:
        logger.error(f"{net.name}: a compressed operator-norm error exceeds its l1 error")
    if not report.converged:
        logger.warning(f"{net.name} did not reach the target error: final l1 error {report.l1_errors[-1]:.3e}")
    else:
        logger.info(f"{net.name} converged: final l1 error {report.l1_errors[-1]:.3e}")
    return report
