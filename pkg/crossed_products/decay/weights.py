import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from crossed_products.convolution.twisted_convolution import CcElement, l1_norm, weighted_l2_norm
from crossed_products.groups.discrete_groups import GroupElement, LengthFunction

logger = logging.getLogger(__name__)

WEIGHT_TAGS = ("constant", "power", "exponential", "exp")


@dataclass(frozen=True, eq=False)
class Weight:
    """κ: G → [1, ∞) built from a length function."""

    tag: str
    params: Dict
    length: LengthFunction
    rule: Callable[[float], float]
    inverse_square_summable: Optional[bool] = None
    _cache: Dict = field(default_factory=dict, repr=False)

    def __call__(self, g: GroupElement) -> float:
        if g not in self._cache:
            self._cache[g] = float(self.rule(self.length(g)))
        return self._cache[g]

    def describe(self) -> Dict:
        return {
            "tag": self.tag,
            "params": dict(self.params),
            "length": self.length.tag,
            "inverse_in_l2": self.inverse_square_summable,
        }


def _summability(length: LengthFunction, tag: str, params: Dict) -> Optional[bool]:
    """Whether κ⁻¹ ∈ ℓ²(G), decided from the sphere growth of (G, L)."""
    group = length.group
    if group.is_finite:
        return True
    kind, rate = group.sphere_growth(length.tag)
    if tag == "constant":
        return False
    if kind == "polynomial":
        if tag == "power":
            # Σ k^{D-1} (1+k)^{-2s} < ∞ iff 2s > D
            return 2 * params["s"] > rate
        return True
    if tag == "power":
        return False
    if tag == "exponential":
        return rate * params["r"] ** 2 < 1
    return rate * math.exp(-2 * params["t"]) < 1


def make_weight(tag: str, params: Optional[Dict] = None, L: Optional[LengthFunction] = None) -> Weight:
    """
    Parameters:
    tag (str): constant | power ((1+L)^s) | exponential (r^{-L}) | exp (e^{tL})
    params (dict): s > 0 | 0 < r < 1 | t > 0
    L (LengthFunction): the length the weight is built from
    """
    params = dict(params or {})
    if L is None:
        raise ValueError("make_weight needs a length function")
    if tag == "constant":
        rule = lambda x: 1.0
    elif tag == "power":
        s = float(params.get("s", 0))
        if s <= 0:
            raise ValueError(f"Power weights need s > 0, got {s}")
        params["s"] = s
        rule = lambda x: (1.0 + x) ** s
    elif tag == "exponential":
        r = float(params.get("r", 0))
        if not 0 < r < 1:
            raise ValueError(f"Exponential weights need 0 < r < 1, got {r}")
        params["r"] = r
        rule = lambda x: r ** (-x)
    elif tag == "exp":
        t = float(params.get("t", 0))
        if t <= 0:
            raise ValueError(f"exp weights need t > 0, got {t}")
        params["t"] = t
        rule = lambda x: math.exp(t * x)
    else:
        raise ValueError(f"Unknown weight tag {tag!r}; use one of {WEIGHT_TAGS}")
    return Weight(tag=tag, params=params, length=L, rule=rule, inverse_square_summable=_summability(L, tag, params))


def inverse_l2_norm(weight: Weight, radius: float) -> float:
    """‖κ⁻¹ 1_{ball(R)}‖₂."""
    values = np.array([weight(g) for g in weight.length.ball(radius)])
    return float(np.sqrt(np.sum(values ** -2.0)))


def l1_route_bound(f: CcElement, weight: Weight) -> Tuple[float, float]:
    """(‖f‖₁, ‖κ⁻¹ 1_supp(f)‖₂·‖f‖_{2,κ}); the first never exceeds the second."""
    inverse = math.sqrt(sum(weight(g) ** -2.0 for g in f.support))
    return l1_norm(f), inverse * weighted_l2_norm(f, weight)
