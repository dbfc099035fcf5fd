import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import pandas as pd
from scipy.linalg import eigvalsh

from config import ALGEBRA_TOL
from crossed_products.groups.discrete_groups import DiscreteGroup, GroupElement

logger = logging.getLogger(__name__)


@dataclass
class PdCheck:
    is_pd: bool
    min_eigenvalue: float
    size: int
    spectrum: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"eigenvalue": self.spectrum})

    def to_dict(self):
        return {"is_pd": self.is_pd, "min_eigenvalue": self.min_eigenvalue, "size": self.size}


def gram_matrix(phi: Callable[[GroupElement], complex], S: Sequence[GroupElement], group: DiscreteGroup) -> np.ndarray:
    """[φ(g_i⁻¹ g_j)] over the listed elements."""
    inverses = [group.inverse(g) for g in S]
    return np.array([[complex(phi(group.multiply(gi_inv, gj))) for gj in S] for gi_inv in inverses])


def pd_check(phi: Callable[[GroupElement], complex], S: Sequence[GroupElement], group: DiscreteGroup) -> PdCheck:
    """
    Positive definiteness of φ on S through the smallest Gram eigenvalue.

    Raises ValueError when the Gram matrix is not Hermitian, i.e. φ(g⁻¹) ≠ conj φ(g) somewhere on S⁻¹S.
    """
    S = list(S)
    if not S:
        raise ValueError("pd_check needs a nonempty subset")
    gram = gram_matrix(phi, S, group)
    asymmetry = float(np.max(np.abs(gram - gram.conj().T)))
    if asymmetry > ALGEBRA_TOL:
        raise ValueError(f"Gram matrix is not Hermitian (defect {asymmetry:.3e}); φ(g⁻¹) must equal conj φ(g)")
    spectrum = eigvalsh((gram + gram.conj().T) / 2)
    min_eigenvalue = float(spectrum[0])
    return PdCheck(is_pd=min_eigenvalue >= -ALGEBRA_TOL, min_eigenvalue=min_eigenvalue, size=len(S), spectrum=spectrum)
