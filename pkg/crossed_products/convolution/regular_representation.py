import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import sparse
from scipy.linalg import svdvals
from scipy.sparse.linalg import svds

from config import DEFAULT_RADIUS_SCHEDULE, DEFAULT_SEED, DENSE_SVD_LIMIT, JOBLIB_N_JOBS, SPECTRAL_RTOL
from crossed_products.convolution.twisted_convolution import CcElement, l1_norm
from crossed_products.groups.discrete_groups import GroupElement, LengthFunction, make_length

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CompressedRep:
    """P_R Λ(f) P_R in the A^G picture, indexed by ball(R) in length-lexicographic order."""

    radius: float
    length: LengthFunction
    index: Tuple[GroupElement, ...]
    matrix: sparse.csr_matrix
    block_size: int

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def largest_singular_value(self, seed: int = DEFAULT_SEED) -> float:
        return largest_singular_value(self.matrix, seed)


def largest_singular_value(matrix, seed: int = DEFAULT_SEED) -> float:
    """Dense SVD up to DENSE_SVD_LIMIT, seeded ARPACK beyond."""
    n = matrix.shape[0]
    if n == 0:
        return 0.0
    if n <= DENSE_SVD_LIMIT:
        dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
        return float(svdvals(dense)[0])
    rng = np.random.default_rng(seed)
    v0 = (rng.standard_normal(n) + 0j).astype(complex)
    value = svds(sparse.csr_matrix(matrix, dtype=complex), k=1, v0=v0, tol=SPECTRAL_RTOL * 1e-3, return_singular_vectors=False)
    return float(np.max(value))


def compression_matrix(f: CcElement, radius: float, L: Optional[LengthFunction] = None) -> CompressedRep:
    """
    Entry (h′, h) is α_{h′}⁻¹(f(h′h⁻¹)·σ(h′h⁻¹, h)), realised as the block-diagonal matrix
    of that element of A.
    """
    system = f.system
    group = system.group
    L = L or make_length(group)
    index = L.ball(radius)
    if not index:
        raise ValueError(f"ball({radius}) is empty")
    position = {g: i for i, g in enumerate(index)}
    n = system.algebra.total_dim
    rows, cols, values = [], [], []
    block_rows, block_cols = np.indices((n, n))
    for j, h in enumerate(index):
        for g, a in f.items():
            target = group.multiply(g, h)
            i = position.get(target)
            if i is None:
                continue
            block = system.alpha_inv(target)(a * system.sigma(g, h)).to_matrix()
            rows.append((i * n + block_rows).ravel())
            cols.append((j * n + block_cols).ravel())
            values.append(block.ravel())
    size = len(index) * n
    if values:
        matrix = sparse.coo_matrix(
            (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size), dtype=complex
        ).tocsr()
    else:
        matrix = sparse.csr_matrix((size, size), dtype=complex)
    return CompressedRep(radius=radius, length=L, index=index, matrix=matrix, block_size=n)


def full_regular_matrix(f: CcElement) -> np.ndarray:
    """The full regular representation of f on a finite group."""
    group = f.system.group
    if not group.is_finite:
        raise ValueError(f"{group.name} is infinite; only compressions are available")
    return compression_matrix(f, group.full_radius).dense()


def opnorm_lower(f: CcElement, radius: float, L: Optional[LengthFunction] = None, seed: int = DEFAULT_SEED) -> float:
    return compression_matrix(f, radius, L).largest_singular_value(seed)


@dataclass
class OpnormBounds:
    lower: float
    upper: float
    trace: List[Tuple[float, float]] = field(default_factory=list)
    exact: Optional[float] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace, columns=["radius", "largest_singular_value"])

    def to_dict(self) -> Dict:
        return {"lower": self.lower, "upper": self.upper, "exact": self.exact, "trace": [list(t) for t in self.trace]}


def default_schedule(f: CcElement) -> Tuple[float, ...]:
    group = f.system.group
    if group.is_finite:
        return (group.full_radius,)
    return DEFAULT_RADIUS_SCHEDULE


def opnorm_bounds(
    f: CcElement,
    radius_schedule: Optional[Sequence[float]] = None,
    L: Optional[LengthFunction] = None,
    seed: int = DEFAULT_SEED,
    n_jobs: Optional[int] = None,
) -> OpnormBounds:
    """
    lower = running max of compressed largest singular values; upper = ‖f‖₁.
    On a finite group whose schedule reaches the full radius, `exact` is ‖Λ(f)‖.
    """
    schedule = list(radius_schedule) if radius_schedule is not None else list(default_schedule(f))
    if not schedule:
        raise ValueError("opnorm_bounds needs a nonempty radius schedule")
    L = L or make_length(f.system.group)
    values = Parallel(n_jobs=n_jobs or JOBLIB_N_JOBS, prefer="threads")(
        delayed(opnorm_lower)(f, R, L, seed) for R in schedule
    )
    trace, running = [], 0.0
    for R, value in zip(schedule, values):
        running = max(running, value)
        trace.append((float(R), running))
    upper = l1_norm(f)
    exact = None
    group = f.system.group
    if group.is_finite and L.tag == group.default_length:
        full = [v for R, v in zip(schedule, values) if R >= group.full_radius]
        if full:
            exact = full[0]
    if running > upper * (1 + SPECTRAL_RTOL) + SPECTRAL_RTOL:
        logger.error(f"Compression norm {running} exceeds the l1 bound {upper}")
    return OpnormBounds(lower=running, upper=upper, trace=trace, exact=exact)


def apply_regular(f: CcElement, xi: CcElement) -> CcElement:
    """(Λ(f)ξ)(h′) = Σ α_{h′}⁻¹(f(g)σ(g,h))·ξ(h) over gh = h′, exactly over finite supports."""
    f._check(xi)
    system = f.system
    group = system.group
    out = {}
    for g, a in f.items():
        for h, b in xi.items():
            target = group.multiply(g, h)
            term = system.alpha_inv(target)(a * system.sigma(g, h)) * b
            out[target] = out[target] + term if target in out else term
    return CcElement(system, out)
