import logging
from dataclasses import dataclass
from numbers import Number
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import block_diag, eigvalsh

from config import ALGEBRA_TOL

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlgebraSpec:
    """A = M_{d1}(ℂ) ⊕ ... ⊕ M_{dk}(ℂ); all-1 blocks give C(X) with |X| = k."""

    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"Block dimensions must be >= 1, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_blocks(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        """Size of the faithful block-diagonal representation."""
        return sum(self.dims)

    @property
    def dimension(self) -> int:
        return sum(d * d for d in self.dims)

    @property
    def is_commutative(self) -> bool:
        return all(d == 1 for d in self.dims)

    def unit(self) -> "AlgElement":
        return AlgElement(self, tuple(np.eye(d, dtype=complex) for d in self.dims))

    def zero(self) -> "AlgElement":
        return AlgElement(self, tuple(np.zeros((d, d), dtype=complex) for d in self.dims))

    def scalar(self, c: complex) -> "AlgElement":
        return AlgElement(self, tuple(complex(c) * np.eye(d, dtype=complex) for d in self.dims))

    def from_blocks(self, blocks: Sequence) -> "AlgElement":
        return AlgElement(self, tuple(np.array(b, dtype=complex).reshape(d, d) for b, d in zip(blocks, self.dims)))

    def from_diagonal(self, values: Sequence[complex]) -> "AlgElement":
        """Element of a commutative algebra from its coordinates."""
        if not self.is_commutative:
            raise ValueError("from_diagonal requires a commutative algebra")
        if len(values) != self.n_blocks:
            raise ValueError(f"Expected {self.n_blocks} coordinates, got {len(values)}")
        return AlgElement(self, tuple(np.array([[complex(v)]]) for v in values))

    def random(self, rng: np.random.Generator, scale: float = 1.0) -> "AlgElement":
        blocks = tuple(
            scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
            for d in self.dims
        )
        return AlgElement(self, blocks)

    def random_unitary(self, rng: np.random.Generator) -> "AlgElement":
        blocks = []
        for d in self.dims:
            q, r = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
            phases = np.diag(r) / np.abs(np.diag(r))
            blocks.append(q * phases)
        return AlgElement(self, tuple(blocks))

    def matrix_units(self) -> List["AlgElement"]:
        """The units e_{ij} of every block; a linear basis of A."""
        units = []
        for j, d in enumerate(self.dims):
            for r in range(d):
                for c in range(d):
                    blocks = [np.zeros((e, e), dtype=complex) for e in self.dims]
                    blocks[j][r, c] = 1.0
                    units.append(AlgElement(self, tuple(blocks)))
        return units

    def center_basis(self) -> List["AlgElement"]:
        """Block units, spanning the center of A."""
        basis = []
        for j, d in enumerate(self.dims):
            blocks = [np.zeros((e, e), dtype=complex) for e in self.dims]
            blocks[j] = np.eye(d, dtype=complex)
            basis.append(AlgElement(self, tuple(blocks)))
        return basis

    def from_interleaved(self, values: Sequence[float]) -> "AlgElement":
        values = np.asarray(values, dtype=float)
        if values.size != 2 * self.dimension:
            raise ValueError(f"Expected {2 * self.dimension} interleaved values, got {values.size}")
        flat = values[0::2] + 1j * values[1::2]
        blocks, offset = [], 0
        for d in self.dims:
            blocks.append(flat[offset: offset + d * d].reshape(d, d))
            offset += d * d
        return AlgElement(self, tuple(blocks))

    def describe(self):
        return {"blocks": list(self.dims)}


@dataclass(frozen=True, eq=False)
class AlgFlags:
    selfadjoint: bool
    unitary: bool
    positive: bool
    projection: bool
    central: bool


@dataclass(frozen=True, eq=False)
class AlgElement:
    spec: AlgebraSpec
    blocks: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != self.spec.n_blocks:
            raise ValueError(f"Expected {self.spec.n_blocks} blocks, got {len(self.blocks)}")
        for b, d in zip(self.blocks, self.spec.dims):
            if np.shape(b) != (d, d):
                raise ValueError(f"Block shape {np.shape(b)} does not match dimension {d}")

    def _check(self, other: "AlgElement"):
        if not isinstance(other, AlgElement):
            raise TypeError(f"Expected an AlgElement, got {type(other).__name__}")
        if other.spec != self.spec:
            raise ValueError(f"Algebra mismatch: {self.spec.dims} vs {other.spec.dims}")

    def __add__(self, other):
        self._check(other)
        return AlgElement(self.spec, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        self._check(other)
        return AlgElement(self.spec, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return AlgElement(self.spec, tuple(-a for a in self.blocks))

    def __mul__(self, other):
        if isinstance(other, Number):
            return AlgElement(self.spec, tuple(complex(other) * a for a in self.blocks))
        self._check(other)
        return AlgElement(self.spec, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def star(self) -> "AlgElement":
        return AlgElement(self.spec, tuple(a.conj().T for a in self.blocks))

    def norm(self) -> float:
        """C*-norm: the largest block singular value."""
        best = 0.0
        for a in self.blocks:
            value = abs(a[0, 0]) if a.shape == (1, 1) else np.linalg.norm(a, 2)
            best = max(best, float(value))
        return best

    def distance(self, other: "AlgElement") -> float:
        return (self - other).norm()

    def is_close(self, other: "AlgElement", tol: float = ALGEBRA_TOL) -> bool:
        return self.distance(other) <= tol

    def trace(self) -> complex:
        return complex(sum(np.trace(a) for a in self.blocks))

    def coordinates(self) -> np.ndarray:
        """Coordinates of an element of a commutative algebra."""
        if not self.spec.is_commutative:
            raise ValueError("coordinates() requires a commutative algebra")
        return np.array([a[0, 0] for a in self.blocks])

    def block_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(a, 2) for a in self.blocks])

    def to_matrix(self) -> np.ndarray:
        return block_diag(*self.blocks)

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.blocks])

    def to_interleaved(self) -> List[float]:
        flat = self.flatten()
        out = np.empty(2 * flat.size)
        out[0::2] = flat.real
        out[1::2] = flat.imag
        return out.tolist()

    def classify(self, tol: float = ALGEBRA_TOL) -> AlgFlags:
        unit = self.spec.unit()
        selfadjoint = self.distance(self.star()) <= tol
        unitary = (self.star() * self).distance(unit) <= tol and (self * self.star()).distance(unit) <= tol
        positive = selfadjoint and all(
            eigvalsh((a + a.conj().T) / 2)[0] >= -tol for a in self.blocks
        )
        projection = selfadjoint and (self * self).distance(self) <= tol
        central = all(
            np.linalg.norm(a - np.trace(a) / a.shape[0] * np.eye(a.shape[0]), 2) <= tol for a in self.blocks
        )
        return AlgFlags(selfadjoint, unitary, positive, projection, central)

    def __repr__(self):
        return f"AlgElement(dims={self.spec.dims}, norm={self.norm():.6g})"


def alg_arith(a: AlgElement, b: Optional[AlgElement], op: str, scale: complex = 1.0) -> AlgElement:
    """Blockwise arithmetic: op is add | mul | star | scale."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "star":
        return a.star()
    if op == "scale":
        return a * complex(scale)
    raise ValueError(f"Unknown algebra operation: {op}")


def alg_norm(a: AlgElement) -> float:
    return a.norm()


def classify(a: AlgElement) -> AlgFlags:
    return a.classify()


def _check_unitary(u: np.ndarray, tol: float = ALGEBRA_TOL) -> bool:
    return np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2) <= tol


@dataclass(frozen=True, eq=False)
class AlgAutomorphism:
    """
    α(a)_{perm[j]} = u_j a_j u_j*.

    Blocks may only be permuted among blocks of identical dimension.
    """

    spec: AlgebraSpec
    perm: Tuple[int, ...]
    unitaries: Tuple[np.ndarray, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(self.spec.n_blocks)):
            raise ValueError(f"Block map {perm} is not a permutation of {self.spec.n_blocks} blocks")
        for j, p in enumerate(perm):
            if self.spec.dims[j] != self.spec.dims[p]:
                raise ValueError(f"Block {j} (dim {self.spec.dims[j]}) cannot map to block {p} (dim {self.spec.dims[p]})")
        unitaries = tuple(np.asarray(u, dtype=complex) for u in self.unitaries)
        for u, d in zip(unitaries, self.spec.dims):
            if u.shape != (d, d) or not _check_unitary(u):
                raise ValueError("Automorphism conjugators must be unitary to tolerance 1e-10")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "unitaries", unitaries)

    @classmethod
    def identity(cls, spec: AlgebraSpec) -> "AlgAutomorphism":
        return cls(spec, tuple(range(spec.n_blocks)), tuple(np.eye(d, dtype=complex) for d in spec.dims))

    @property
    def is_identity(self) -> bool:
        return self.perm == tuple(range(self.spec.n_blocks)) and all(
            np.allclose(u, u[0, 0] * np.eye(u.shape[0]), atol=ALGEBRA_TOL) for u in self.unitaries
        )

    def apply(self, a: AlgElement) -> AlgElement:
        if a.spec != self.spec:
            raise ValueError(f"Algebra mismatch: {a.spec.dims} vs {self.spec.dims}")
        out = [None] * self.spec.n_blocks
        for j, (block, u) in enumerate(zip(a.blocks, self.unitaries)):
            out[self.perm[j]] = block if block.shape == (1, 1) else u @ block @ u.conj().T
        return AlgElement(self.spec, tuple(out))

    def __call__(self, a: AlgElement) -> AlgElement:
        return self.apply(a)

    def compose(self, other: "AlgAutomorphism") -> "AlgAutomorphism":
        """self ∘ other."""
        perm = tuple(self.perm[other.perm[j]] for j in range(self.spec.n_blocks))
        unitaries = tuple(self.unitaries[other.perm[j]] @ other.unitaries[j] for j in range(self.spec.n_blocks))
        return AlgAutomorphism(self.spec, perm, unitaries)

    def inverse(self) -> "AlgAutomorphism":
        perm = [0] * self.spec.n_blocks
        unitaries = [None] * self.spec.n_blocks
        for j, p in enumerate(self.perm):
            perm[p] = j
            unitaries[p] = self.unitaries[j].conj().T
        return AlgAutomorphism(self.spec, tuple(perm), tuple(unitaries))

    def power(self, n: int) -> "AlgAutomorphism":
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        result = AlgAutomorphism.identity(self.spec)
        while n:
            if n & 1:
                result = result.compose(base)
            base = base.compose(base)
            n >>= 1
        return result


class PointMapEndomorphism:
    """Pullback a ↦ a∘m on a commutative algebra C(X) along a point map m: X → X."""

    def __init__(self, spec: AlgebraSpec, point_map: Sequence[int]):
        if not spec.is_commutative:
            raise ValueError("Point-map endomorphisms need a commutative algebra")
        point_map = tuple(int(p) for p in point_map)
        if len(point_map) != spec.n_blocks or any(not 0 <= p < spec.n_blocks for p in point_map):
            raise ValueError(f"Point map {point_map} is not a map of {spec.n_blocks} points")
        self.spec = spec
        self.point_map = point_map

    def apply(self, a: AlgElement) -> AlgElement:
        return AlgElement(self.spec, tuple(a.blocks[p].copy() for p in self.point_map))

    def __call__(self, a: AlgElement) -> AlgElement:
        return self.apply(a)


def inner_automorphism(u: AlgElement) -> AlgAutomorphism:
    """Ad(u) for a unitary u ∈ A."""
    return AlgAutomorphism(u.spec, tuple(range(u.spec.n_blocks)), u.blocks)


def block_permutation(spec: AlgebraSpec, perm: Sequence[int]) -> AlgAutomorphism:
    return AlgAutomorphism(spec, tuple(perm), tuple(np.eye(d, dtype=complex) for d in spec.dims))


@dataclass(frozen=True, eq=False)
class AlgState:
    """Vector state a ↦ <v, a_block v>; point evaluation when the block is 1-dimensional."""

    spec: AlgebraSpec
    block: int
    vector: np.ndarray

    def __call__(self, a: AlgElement) -> complex:
        v = self.vector
        return complex(np.vdot(v, a.blocks[self.block] @ v))

    def seminorm(self, a: AlgElement) -> float:
        """‖a‖_ω = ω(a*a)^{1/2}."""
        return float(np.sqrt(max(0.0, self((a.star() * a)).real)))

    def describe(self):
        return {"block": self.block, "vector": [[float(z.real), float(z.imag)] for z in self.vector]}


def point_evaluation(spec: AlgebraSpec, index: int) -> AlgState:
    if spec.dims[index] != 1:
        raise ValueError(f"Block {index} is not one-dimensional")
    return AlgState(spec, index, np.ones(1, dtype=complex))


def pure_states(spec: AlgebraSpec, sample_budget: int, rng: Optional[np.random.Generator] = None) -> List[AlgState]:
    """
    Point evaluations on 1-dimensional blocks, plus `sample_budget` random unit-vector
    states on each larger block.
    """
    states = []
    for j, d in enumerate(spec.dims):
        if d == 1:
            states.append(point_evaluation(spec, j))
            continue
        if rng is None:
            raise ValueError("A random generator is required to sample states on matrix blocks")
        for _ in range(sample_budget):
            v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            states.append(AlgState(spec, j, v / np.linalg.norm(v)))
    return states
