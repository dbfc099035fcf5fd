import logging
from dataclasses import dataclass
from numbers import Number
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, inv

from crossed_products.coefficients.block_algebra import AlgAutomorphism, AlgElement, AlgebraSpec
from crossed_products.groups.discrete_groups import DiscreteGroup, GroupElement

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ModuleVector:
    """A column (x_1, ..., x_n) in the free Hilbert A-module Aⁿ."""

    entries: Tuple[AlgElement, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("Module vectors need at least one entry")
        spec = self.entries[0].spec
        if any(x.spec != spec for x in self.entries):
            raise ValueError("All module entries must share one algebra")

    @classmethod
    def zero(cls, spec: AlgebraSpec, n: int) -> "ModuleVector":
        return cls(tuple(spec.zero() for _ in range(n)))

    @classmethod
    def basis(cls, spec: AlgebraSpec, n: int, i: int) -> "ModuleVector":
        return cls(tuple(spec.unit() if j == i else spec.zero() for j in range(n)))

    @classmethod
    def random(cls, spec: AlgebraSpec, n: int, rng: np.random.Generator) -> "ModuleVector":
        return cls(tuple(spec.random(rng) for _ in range(n)))

    @property
    def spec(self) -> AlgebraSpec:
        return self.entries[0].spec

    @property
    def rank(self) -> int:
        return len(self.entries)

    def _check(self, other: "ModuleVector"):
        if other.rank != self.rank or other.spec != self.spec:
            raise ValueError(f"Module shape mismatch: rank {self.rank} vs {other.rank}")

    def inner(self, other: "ModuleVector") -> AlgElement:
        """⟨x, y⟩ = Σ x_i* y_i, linear in the second variable."""
        self._check(other)
        total = self.spec.zero()
        for x, y in zip(self.entries, other.entries):
            total = total + x.star() * y
        return total

    def right_mul(self, a: AlgElement) -> "ModuleVector":
        return ModuleVector(tuple(x * a for x in self.entries))

    def twist(self, automorphism) -> "ModuleVector":
        return ModuleVector(tuple(automorphism(x) for x in self.entries))

    def __add__(self, other):
        self._check(other)
        return ModuleVector(tuple(x + y for x, y in zip(self.entries, other.entries)))

    def __sub__(self, other):
        self._check(other)
        return ModuleVector(tuple(x - y for x, y in zip(self.entries, other.entries)))

    def __mul__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        return ModuleVector(tuple(x * c for x in self.entries))

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self).norm()))

    def flatten(self) -> np.ndarray:
        return np.concatenate([x.flatten() for x in self.entries])

    @classmethod
    def from_flat(cls, spec: AlgebraSpec, n: int, values: np.ndarray) -> "ModuleVector":
        entries, offset = [], 0
        for _ in range(n):
            blocks = []
            for d in spec.dims:
                blocks.append(np.asarray(values[offset: offset + d * d], dtype=complex).reshape(d, d))
                offset += d * d
            entries.append(AlgElement(spec, tuple(blocks)))
        return cls(tuple(entries))


def module_inner(x: ModuleVector, y: ModuleVector) -> AlgElement:
    return x.inner(y)


@dataclass(frozen=True, eq=False)
class ModuleOperator:
    """An n×n matrix over A acting on columns of Aⁿ."""

    entries: Tuple[Tuple[AlgElement, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.entries)

    @property
    def spec(self) -> AlgebraSpec:
        return self.entries[0][0].spec

    @classmethod
    def identity(cls, spec: AlgebraSpec, n: int) -> "ModuleOperator":
        return cls(tuple(tuple(spec.unit() if i == j else spec.zero() for j in range(n)) for i in range(n)))

    @classmethod
    def diagonal(cls, values: Sequence[AlgElement]) -> "ModuleOperator":
        spec = values[0].spec
        n = len(values)
        return cls(tuple(tuple(values[i] if i == j else spec.zero() for j in range(n)) for i in range(n)))

    @classmethod
    def from_scalars(cls, spec: AlgebraSpec, matrix: np.ndarray) -> "ModuleOperator":
        """Scalar matrix w ⊗ 1."""
        matrix = np.asarray(matrix, dtype=complex)
        return cls(tuple(tuple(spec.scalar(matrix[i, j]) for j in range(matrix.shape[1])) for i in range(matrix.shape[0])))

    def apply(self, x: ModuleVector) -> ModuleVector:
        if x.rank != self.rank:
            raise ValueError(f"Operator of rank {self.rank} applied to a vector of rank {x.rank}")
        out = []
        for row in self.entries:
            total = x.spec.zero()
            for m, xj in zip(row, x.entries):
                total = total + m * xj
            out.append(total)
        return ModuleVector(tuple(out))

    def adjoint(self) -> "ModuleOperator":
        n = self.rank
        return ModuleOperator(tuple(tuple(self.entries[j][i].star() for j in range(n)) for i in range(n)))

    def compose(self, other: "ModuleOperator") -> "ModuleOperator":
        n = self.rank
        spec = self.spec
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                total = spec.zero()
                for k in range(n):
                    total = total + self.entries[i][k] * other.entries[k][j]
                row.append(total)
            rows.append(tuple(row))
        return ModuleOperator(tuple(rows))

    def twist(self, automorphism) -> "ModuleOperator":
        return ModuleOperator(tuple(tuple(automorphism(m) for m in row) for row in self.entries))

    def inverse(self) -> "ModuleOperator":
        """Invert blockwise: M_n(A) ≅ ⊕_j M_{n·d_j}(ℂ)."""
        n, spec = self.rank, self.spec
        inverses = []
        for b, d in enumerate(spec.dims):
            big = np.block([[self.entries[i][j].blocks[b] for j in range(n)] for i in range(n)])
            try:
                inverses.append(inv(big))
            except LinAlgError:
                raise ValueError(f"Module operator is not invertible (block {b})")
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                blocks = tuple(inverses[b][i * d:(i + 1) * d, j * d:(j + 1) * d] for b, d in enumerate(spec.dims))
                row.append(AlgElement(spec, blocks))
            rows.append(tuple(row))
        return ModuleOperator(tuple(rows))

    def scaled(self, c: complex) -> "ModuleOperator":
        return ModuleOperator(tuple(tuple(m * c for m in row) for row in self.entries))


def left_multiplication(a: AlgElement, n: int = 1) -> ModuleOperator:
    """ℓ(a) ⊗ 1 on Aⁿ."""
    return ModuleOperator.diagonal([a] * n)


@dataclass(frozen=True, eq=False)
class ModuleMap:
    """x ↦ M·α(x): an invertible ℂ-linear map of Aⁿ twisted by an automorphism of A."""

    operator: ModuleOperator
    twist: Optional[AlgAutomorphism] = None

    def apply(self, x: ModuleVector) -> ModuleVector:
        if self.twist is not None:
            x = x.twist(self.twist)
        return self.operator.apply(x)

    def __call__(self, x: ModuleVector) -> ModuleVector:
        return self.apply(x)

    def compose(self, other: "ModuleMap") -> "ModuleMap":
        """(M, α)∘(M′, α′) = (M·α(M′), α∘α′)."""
        inner_op = other.operator.twist(self.twist) if self.twist is not None else other.operator
        if self.twist is None:
            twist = other.twist
        elif other.twist is None:
            twist = self.twist
        else:
            twist = self.twist.compose(other.twist)
        return ModuleMap(self.operator.compose(inner_op), twist)

    def inverse(self) -> "ModuleMap":
        """(M, α)⁻¹ = (α⁻¹(M⁻¹), α⁻¹)."""
        m_inv = self.operator.inverse()
        if self.twist is None:
            return ModuleMap(m_inv, None)
        twist_inv = self.twist.inverse()
        return ModuleMap(m_inv.twist(twist_inv), twist_inv)

    def scaled(self, c: complex) -> "ModuleMap":
        return ModuleMap(self.operator.scaled(c), self.twist)


class ModuleField:
    """A finitely supported ξ: G → X = Aⁿ, i.e. an element of C_c(G, X) ⊂ X^G."""

    def __init__(self, group: DiscreteGroup, rank: int, values: Mapping[GroupElement, ModuleVector]):
        for g, x in values.items():
            if x.rank != rank:
                raise ValueError(f"Value at {g} has rank {x.rank}, expected {rank}")
        self.group = group
        self.rank = rank
        self.values: Dict[GroupElement, ModuleVector] = dict(sorted(values.items(), key=lambda kv: group.order_key(kv[0])))

    @property
    def support(self) -> Tuple[GroupElement, ...]:
        return tuple(self.values)

    def value(self, g: GroupElement) -> Optional[ModuleVector]:
        return self.values.get(g)

    def inner(self, other: "ModuleField") -> AlgElement:
        """⟨ξ, η⟩ = Σ_h ⟨ξ(h), η(h)⟩."""
        total = None
        for h, x in self.values.items():
            y = other.values.get(h)
            if y is None:
                continue
            term = x.inner(y)
            total = term if total is None else total + term
        if total is None:
            spec = next(iter(self.values.values())).spec
            return spec.zero()
        return total

    def norm(self) -> float:
        if not self.values:
            return 0.0
        return float(np.sqrt(self.inner(self).norm()))
