import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config import ABEL_POISSON_EPS
from crossed_products.groups.discrete_groups import GroupElement, IntegerLattice, LengthFunction, make_length
from crossed_products.modules.equivariant import EquivariantRep, UnitaryRule, tensor_unitary_rep, trivial_rep
from crossed_products.modules.hilbert_module import ModuleField, ModuleVector
from crossed_products.multipliers.multipliers import (
    Multiplier,
    ScalarKernel,
    fejer_kernel,
    identity_multiplier,
    make_scalar_multiplier,
)
from crossed_products.systems.twisted_system import TwistedSystem

logger = logging.getLogger(__name__)


@dataclass
class SummingNet:
    """A finite schedule of multipliers standing in for a Fourier summing net."""

    name: str
    system: TwistedSystem
    indices: List = field(default_factory=list)
    multipliers: List[Multiplier] = field(default_factory=list)
    truncation_radii: List[Optional[float]] = field(default_factory=list)
    truncation_tails: List[float] = field(default_factory=list)

    def add(self, index, multiplier: Multiplier, radius: Optional[float] = None, tail: float = 0.0):
        if multiplier.bound is None or not math.isfinite(multiplier.bound):
            raise ValueError(f"Net member {index} of {self.name} has no finite declared bound")
        self.indices.append(index)
        self.multipliers.append(multiplier)
        self.truncation_radii.append(radius)
        self.truncation_tails.append(tail)

    @property
    def bounds(self) -> List[float]:
        return [T.bound for T in self.multipliers]

    def __len__(self):
        return len(self.multipliers)

    def __iter__(self) -> Iterator[Tuple[object, Multiplier]]:
        return iter(zip(self.indices, self.multipliers))

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "indices": [float(i) if isinstance(i, float) else i for i in self.indices],
            "bounds": self.bounds,
            "truncation_radii": self.truncation_radii,
            "truncation_tails": self.truncation_tails,
        }


def fejer_net(system: TwistedSystem, schedule: Sequence[int]) -> SummingNet:
    """Scalar Følner kernels |gF_i ∩ F_i|/|F_i| with declared bound 1."""
    net = SummingNet("fejer", system)
    for i in schedule:
        net.add(i, make_scalar_multiplier(system, fejer_kernel(system.group, int(i)), bound=1.0))
    return net


# -- Abel–Poisson --------------------------------------------------------------

def _shell_majorant(d: int, r: float, tag: str) -> np.ndarray:
    """
    Upper bounds for Σ r^L over the elements in shell k (L in [k, k+1) for the 2-norm,
    L = k otherwise), for k = 0..K with the remaining tail below 1e-30.
    """
    offset = 3 if tag == "l2" else 1
    K = 256
    while d * math.log(2 * K + offset) + K * math.log(r) + math.log(K) > math.log(1e-30):
        K *= 2
    k = np.arange(K + 1, dtype=float)
    return (2 * k + offset) ** d * r ** k


def abel_poisson_radius(group: IntegerLattice, tag: str, r: float, eps: float = ABEL_POISSON_EPS) -> Tuple[int, float]:
    """
    Smallest integer R with Σ_{L(g) > R} r^{L(g)} < eps, and the certified tail bound.

    Exact shell counts are used for the 1-norm and the squared 2-norm; the 2-norm uses the
    box majorant (2k+3)^d on [k, k+1) shells.
    """
    if not 0 < r < 1:
        raise ValueError(f"Abel–Poisson parameter must satisfy 0 < r < 1, got {r}")
    d = group.rank
    majorant = _shell_majorant(d, r, tag)
    if tag == "l2":
        # tail[k] bounds the elements with L >= k
        tail = np.cumsum(majorant[::-1])[::-1]
        return _first_below(tail, eps, group, r)
    K = len(majorant) - 1
    counts = group.shell_counts(K, tag)
    terms = counts * r ** np.arange(K + 1, dtype=float)
    ratio = ((2 * K + 3) / (2 * K + 1)) ** d * r
    beyond = float(majorant[-1] * ratio / (1 - ratio)) if ratio < 1 else float(majorant[-1])
    # tail[k] = sum over shells strictly beyond k
    tail = np.concatenate([np.cumsum(terms[::-1])[::-1][1:], [0.0]]) + beyond
    return _first_below(tail, eps, group, r)


def _first_below(tail: np.ndarray, eps: float, group: IntegerLattice, r: float) -> Tuple[int, float]:
    hits = np.nonzero(tail < eps)[0]
    if not hits.size:
        raise ValueError(f"Could not certify an Abel–Poisson truncation for r={r}, eps={eps} on {group.name}")
    R = int(hits[0])
    return R, float(tail[R])


def truncated_geometric_kernel(r: float, L: LengthFunction, radius: float) -> ScalarKernel:
    """r^{L(g)} for L(g) <= radius, zero beyond; evaluated pointwise."""
    if not 0 < r < 1:
        raise ValueError(f"Geometric kernels need 0 < r < 1, got {r}")

    def rule(g):
        value = L(g)
        return float(r ** value) if value <= radius + 1e-9 else 0.0

    return ScalarKernel(f"geometric(r={r}, L={L.tag}, R={radius})", rule)


def abel_poisson_net(
    system: TwistedSystem,
    tag: str,
    r_schedule: Sequence[float],
    eps: float = ABEL_POISSON_EPS,
) -> SummingNet:
    """r^L kernels on ℤ^d for L = 1-norm, 2-norm or squared 2-norm, truncated at R(ε, r)."""
    group = system.group
    if not isinstance(group, IntegerLattice):
        raise ValueError(f"Abel–Poisson nets are shipped for Z^d, not {group.name}")
    if tag == "word":
        tag = "l1"
    if tag not in ("l1", "l2", "l2sq"):
        raise ValueError(f"Abel–Poisson length must be l1, l2 or l2sq, got {tag!r}")
    L = make_length(group, tag)
    net = SummingNet(f"abel-poisson({tag})", system)
    for r in r_schedule:
        R, tail = abel_poisson_radius(group, tag, float(r), eps)
        logger.info(f"Abel–Poisson r={r} on {group.name} ({tag}): truncation radius {R}, tail {tail:.3e}")
        net.add(float(r), make_scalar_multiplier(system, truncated_geometric_kernel(float(r), L, R), bound=1.0), R, tail)
    return net


def length_kernel_net(system: TwistedSystem, L: LengthFunction, r_schedule: Sequence[float], radius: float) -> SummingNet:
    """r^L kernels truncated at a fixed radius, for lengths without closed-form shell tails."""
    net = SummingNet(f"length-kernel({L.tag})", system)
    for r in r_schedule:
        kernel = truncated_geometric_kernel(float(r), L, radius)
        net.add(float(r), make_scalar_multiplier(system, kernel, bound=1.0), radius)
    return net


def identity_net(system: TwistedSystem, n: int = 1) -> SummingNet:
    net = SummingNet("identity", system)
    for i in range(n):
        net.add(i, identity_multiplier(system))
    return net


# -- approximation data ----------------------------------------------------------

def approximation_multiplier(rep: EquivariantRep, xi: ModuleField, eta: ModuleField) -> Multiplier:
    """T(g, a) = Σ_h ⟨ξ(h), ρ(a)v(g)η(g⁻¹h)⟩ with bound ‖ξ‖‖η‖."""
    system = rep.system
    group = system.group
    if xi.rank != rep.rank or eta.rank != rep.rank:
        raise ValueError(f"Approximation data of rank {xi.rank}/{eta.rank} does not fit a module of rank {rep.rank}")
    support = {group.multiply(h, group.inverse(k)) for h in xi.support for k in eta.support}

    def evaluate(g, a):
        g_inv = group.inverse(g)
        rho_a, v_g = rep.rho(a), rep.v(g)
        total = system.algebra.zero()
        for h, x in xi.values.items():
            y = eta.value(group.multiply(g_inv, h))
            if y is not None:
                total = total + x.inner(rho_a.apply(v_g.apply(y)))
        return total

    return Multiplier(
        system,
        "approx-data",
        evaluate,
        bound=xi.norm() * eta.norm(),
        support=tuple(sorted(support, key=group.order_key)),
    )


def approx_data_net(rep: EquivariantRep, data: Sequence[Tuple[ModuleField, ModuleField]], indices: Optional[Sequence] = None) -> SummingNet:
    indices = list(indices) if indices is not None else list(range(len(data)))
    if len(indices) != len(data):
        raise ValueError(f"{len(indices)} indices for {len(data)} approximation pairs")
    net = SummingNet("approx-data", rep.system)
    for i, (xi, eta) in zip(indices, data):
        net.add(i, approximation_multiplier(rep, xi, eta))
    return net


def box_approximation_data(system: TwistedSystem, sizes: Sequence[int]) -> Tuple[EquivariantRep, List[Tuple[ModuleField, ModuleField]]]:
    """
    ξ_N = η_N = |F_N|^{-1/2} 1_{F_N} ⊗ 1 on X = A with (ℓ, α); the resulting multipliers are
    the Fejér kernels of the Følner sets F_N.
    """
    rep = trivial_rep(system)
    group = system.group
    data = []
    for n in sizes:
        box = group.folner(int(n))
        value = ModuleVector((system.algebra.scalar(1.0 / math.sqrt(len(box))),))
        field_ = ModuleField(group, 1, {g: value for g in box})
        data.append((field_, field_))
    return rep, data


def kernel_values(net: SummingNet, elements: Sequence[GroupElement]) -> np.ndarray:
    """Scalar kernel values per index (rows) and element (columns)."""
    rows = []
    for T in net.multipliers:
        if T.kernel is None:
            raise ValueError(f"{T.recipe} is not a scalar-kernel multiplier")
        rows.append([complex(T.kernel(g)) if T.in_support(g) else 0.0 for g in elements])
    return np.array(rows)


def unitary_box_approximation_data(
    system: TwistedSystem,
    sizes: Sequence[int],
    w: UnitaryRule,
    d: int,
) -> Tuple[EquivariantRep, List[Tuple[ModuleField, ModuleField]]]:
    """
    Data on X = A ⊗ ℂ^d with (ℓ⊗ι, α⊗w): ξ_N(h) = η_N(h) = |F_N|^{-1/2} 1_{F_N}(h) ⊗ w(h)e for
    the unit vector e = d^{-1/2}(1, ..., 1).

    v(g)η_N(g⁻¹h) = |F_N|^{-1/2} 1_{gF_N}(h) ⊗ w(h)e, so these data also give the Fejér kernels.
    """
    rep = tensor_unitary_rep(system, w, d)
    group = system.group
    spec = system.algebra
    e = np.full(d, 1.0 / math.sqrt(d), dtype=complex)
    data = []
    for n in sizes:
        box = group.folner(int(n))
        c = 1.0 / math.sqrt(len(box))
        values = {}
        for h in box:
            column = np.asarray(w(h), dtype=complex) @ e
            values[h] = ModuleVector(tuple(spec.scalar(c * z) for z in column))
        field_ = ModuleField(group, d, values)
        data.append((field_, field_))
    return rep, data
