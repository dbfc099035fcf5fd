import itertools
import logging
import math
import re
import threading
from collections import deque
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

# Configure logging
logger = logging.getLogger(__name__)

# Elements are hashable tuples in normal form; equality of tuples is equality in the group.
GroupElement = tuple

_SUPERSCRIPTS = str.maketrans("⁰¹²³⁴⁵⁶⁷⁸⁹⁻", "0123456789-")
_LETTER_TOKEN = re.compile(r"([A-Za-z])(\^\(?[+-]?\d+\)?|[⁻⁰¹²³⁴⁵⁶⁷⁸⁹]+)?")
_VECTOR_WORD = re.compile(r"^[\s\d(),+\-]+$")
_VECTOR_TERM = re.compile(r"\s*([+-]?)\s*(\([^()]*\)|\d+)\s*")
_LATTICE_LETTERS = "xyzwuv"
_LENGTH_SLACK = 1e-9


def parse_word(word: str) -> List[Tuple[str, int]]:
    """
    Split a generator word into (letter, exponent) tokens.

    Accepted exponents are ``^n``, ``^(-n)`` and superscripts such as ``⁻¹`` or ``²``.
    An uppercase letter denotes the inverse of the lowercase generator.

    Raises:
        ValueError: when a symbol is not a letter token.
    """
    text = re.sub(r"[\s*·.]+", "", word)
    tokens = []
    pos = 0
    while pos < len(text):
        match = _LETTER_TOKEN.match(text, pos)
        if not match:
            raise ValueError(f"Unknown generator symbol {text[pos]!r} in word {word!r}")
        letter, exponent = match.group(1), match.group(2)
        power = 1
        if exponent:
            power = int(exponent.translate(_SUPERSCRIPTS).lstrip("^").strip("()"))
        if letter.isupper():
            letter, power = letter.lower(), -power
        tokens.append((letter, power))
        pos = match.end()
    return tokens


def _parse_vector_word(word: str, rank: int) -> List[Tuple[int, ...]]:
    terms = []
    pos = 0
    while pos < len(word):
        match = _VECTOR_TERM.match(word, pos)
        if not match or match.end() == pos:
            raise ValueError(f"Unknown generator symbol {word[pos]!r} in word {word!r}")
        sign = -1 if match.group(1) == "-" else 1
        body = match.group(2).strip("()")
        try:
            vector = tuple(sign * int(part) for part in body.split(","))
        except ValueError:
            raise ValueError(f"Malformed vector {match.group(2)!r} in word {word!r}")
        if len(vector) != rank:
            raise ValueError(f"Vector {match.group(2)!r} has {len(vector)} components, expected {rank}")
        terms.append(vector)
        pos = match.end()
    return terms


class DiscreteGroup:
    """Base class for the shipped discrete groups; subclasses fix the normal form."""

    family = ""
    accepts_vectors = False
    ships_folner = False
    length_tags: Tuple[str, ...] = ("word",)
    default_length = "word"

    def __init__(self, name: str):
        self.name = name
        self.alphabet: Dict[str, GroupElement] = {}
        self._ball_cache: Dict[Tuple[float, str], Tuple[GroupElement, ...]] = {}
        self._lock = threading.RLock()

    # -- group law ---------------------------------------------------------
    @property
    def identity(self) -> GroupElement:
        raise NotImplementedError

    def multiply(self, g: GroupElement, h: GroupElement) -> GroupElement:
        raise NotImplementedError

    def inverse(self, g: GroupElement) -> GroupElement:
        raise NotImplementedError

    def power(self, g: GroupElement, n: int) -> GroupElement:
        if n < 0:
            g, n = self.inverse(g), -n
        result, base = self.identity, g
        while n:
            if n & 1:
                result = self.multiply(result, base)
            base = self.multiply(base, base)
            n >>= 1
        return result

    def product(self, elements: Sequence[GroupElement]) -> GroupElement:
        result = self.identity
        for g in elements:
            result = self.multiply(result, g)
        return result

    # -- words ---------------------------------------------------------------
    def normal_form(self, word) -> GroupElement:
        if isinstance(word, tuple):
            return self._check_element(word)
        text = str(word).replace("−", "-").strip()
        if text in ("", "e"):
            return self.identity
        if self.accepts_vectors and _VECTOR_WORD.match(text):
            return self._from_vectors(_parse_vector_word(text, self.rank))
        result = self.identity
        for letter, exponent in parse_word(text):
            if letter == "e":
                continue
            if letter not in self.alphabet:
                raise ValueError(f"Unknown generator symbol {letter!r} for group {self.name}")
            result = self.multiply(result, self.power(self.alphabet[letter], exponent))
        return result

    def _check_element(self, g: GroupElement) -> GroupElement:
        return g

    def _from_vectors(self, vectors):
        raise ValueError(f"Group {self.name} does not accept vector words")

    def generator_word(self, g: GroupElement) -> List[Tuple[str, int]]:
        raise NotImplementedError

    def format_element(self, g: GroupElement) -> str:
        raise NotImplementedError

    def sort_key(self, g: GroupElement):
        return g

    def order_key(self, g: GroupElement):
        return (self.length(g, self.default_length), self.sort_key(g))

    # -- size --------------------------------------------------------------
    @property
    def is_finite(self) -> bool:
        return False

    @property
    def order(self) -> Optional[int]:
        return None

    def elements(self) -> Tuple[GroupElement, ...]:
        raise ValueError(f"Group {self.name} is infinite; use ball enumeration")

    @property
    def full_radius(self) -> float:
        """Largest default length over a finite group (the radius of the full regular picture)."""
        if not self.is_finite:
            raise ValueError(f"Group {self.name} is infinite")
        return max(self.length(g, self.default_length) for g in self.elements())

    # -- lengths and balls ---------------------------------------------------
    def _check_tag(self, tag: Optional[str]) -> str:
        tag = tag or self.default_length
        if tag not in self.length_tags:
            raise ValueError(f"Length {tag!r} is not available on {self.name}; use one of {self.length_tags}")
        return tag

    def length(self, g: GroupElement, tag: Optional[str] = None) -> float:
        raise NotImplementedError

    def ball(self, radius: float, tag: Optional[str] = None) -> Tuple[GroupElement, ...]:
        if radius < 0:
            raise ValueError(f"Ball radius must be nonnegative, got {radius}")
        tag = self._check_tag(tag)
        key = (float(radius), tag)
        cached = self._ball_cache.get(key)
        if cached is None:
            with self._lock:
                cached = self._ball_cache.get(key)
                if cached is None:
                    members = self._enumerate_ball(float(radius), tag)
                    members = sorted(set(members), key=lambda g: (self.length(g, tag), self.sort_key(g)))
                    cached = self._ball_cache[key] = tuple(members)
        return cached

    def _enumerate_ball(self, radius: float, tag: str) -> List[GroupElement]:
        return [g for g in self.elements() if self.length(g, tag) <= radius + _LENGTH_SLACK]

    def shell_counts(self, max_shell: int, tag: Optional[str] = None) -> np.ndarray:
        """Number of elements with length exactly k, for k = 0..max_shell (integer lengths only)."""
        tag = self._check_tag(tag)
        counts = np.zeros(max_shell + 1)
        for g in self.elements():
            k = self.length(g, tag)
            if k <= max_shell:
                counts[int(round(k))] += 1
        return counts

    def sphere_growth(self, tag: Optional[str] = None) -> Tuple[str, float]:
        raise NotImplementedError

    def random_element(self, rng: np.random.Generator, radius: float = 2, tag: Optional[str] = None) -> GroupElement:
        members = self.elements() if self.is_finite else self.ball(radius, tag)
        return members[int(rng.integers(len(members)))]

    # -- Følner data -----------------------------------------------------------
    def folner(self, i: int) -> Tuple[GroupElement, ...]:
        raise ValueError(f"No Følner sequence is shipped for {self.name}")

    def folner_ratio(self, g: GroupElement, i: int) -> float:
        """|g F_i ∩ F_i| / |F_i| by enumeration."""
        box = self.folner(i)
        members = set(box)
        shifted = sum(1 for h in box if self.multiply(g, h) in members)
        return shifted / len(box)

    def describe(self) -> Dict:
        return {"family": self.family, "name": self.name}

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class FiniteAbelianGroup(DiscreteGroup):
    """ℤ_{n1} × ... × ℤ_{nk}; a single factor is the cyclic family."""

    accepts_vectors = True
    ships_folner = True

    def __init__(self, orders: Sequence[int]):
        orders = tuple(int(n) for n in orders)
        if not orders or any(n < 1 for n in orders):
            raise ValueError(f"Cyclic orders must be positive, got {orders}")
        if len(orders) > len(_LATTICE_LETTERS):
            raise ValueError(f"At most {len(_LATTICE_LETTERS)} cyclic factors are supported")
        name = "Z_" + "xZ_".join(str(n) for n in orders)
        super().__init__(name)
        self.orders = orders
        self.family = "finite-cyclic" if len(orders) == 1 else "product-of-finite"
        self.rank = len(orders)
        for j, letter in enumerate(_LATTICE_LETTERS[: self.rank]):
            self.alphabet[letter] = tuple(1 % n if i == j else 0 for i, n in enumerate(orders))
        self._elements = tuple(sorted(itertools.product(*[range(n) for n in orders]), key=self.order_key))

    @property
    def identity(self):
        return (0,) * self.rank

    def multiply(self, g, h):
        return tuple((a + b) % n for a, b, n in zip(g, h, self.orders))

    def inverse(self, g):
        return tuple((-a) % n for a, n in zip(g, self.orders))

    def power(self, g, n):
        return tuple((a * n) % m for a, m in zip(g, self.orders))

    def _check_element(self, g):
        if len(g) != self.rank:
            raise ValueError(f"Element {g} does not belong to {self.name}")
        return tuple(int(a) % n for a, n in zip(g, self.orders))

    def _from_vectors(self, vectors):
        return self._check_element(tuple(sum(v[j] for v in vectors) for j in range(self.rank)))

    @property
    def is_finite(self):
        return True

    @property
    def order(self):
        return math.prod(self.orders)

    def elements(self):
        return self._elements

    def length(self, g, tag=None):
        self._check_tag(tag)
        return float(sum(min(a, n - a) for a, n in zip(g, self.orders)))

    def generator_word(self, g):
        return [(letter, a) for letter, a in zip(_LATTICE_LETTERS, g) if a]

    def format_element(self, g):
        if self.rank == 1:
            return str(g[0])
        return "(" + ",".join(str(a) for a in g) + ")"

    def sphere_growth(self, tag=None):
        return ("finite", float(self.order))

    def folner(self, i):
        if i < 1:
            raise ValueError(f"Følner index must be >= 1, got {i}")
        return self._elements

    def folner_ratio(self, g, i):
        return 1.0

    def describe(self):
        return {"family": self.family, "orders": list(self.orders)}


class DihedralGroup(DiscreteGroup):
    """D_n with rotation r and flip f; (k1,e1)(k2,e2) = (k1 + (-1)^e1 k2, e1 xor e2)."""

    family = "finite-dihedral"
    ships_folner = True

    def __init__(self, n: int):
        if n < 2:
            raise ValueError(f"Dihedral order parameter must be >= 2, got {n}")
        super().__init__(f"D_{n}")
        self.n = int(n)
        self.alphabet = {"r": (1, 0), "f": (0, 1)}
        self._word_length = self._breadth_first_lengths()
        self._elements = tuple(sorted(self._word_length, key=self.order_key))

    def _breadth_first_lengths(self):
        generators = [(1, 0), (self.n - 1, 0), (0, 1)]
        lengths = {self.identity: 0}
        queue = deque([self.identity])
        while queue:
            g = queue.popleft()
            for s in generators:
                h = self.multiply(g, s)
                if h not in lengths:
                    lengths[h] = lengths[g] + 1
                    queue.append(h)
        return lengths

    @property
    def identity(self):
        return (0, 0)

    def multiply(self, g, h):
        k1, e1 = g
        k2, e2 = h
        return ((k1 + (-k2 if e1 else k2)) % self.n, e1 ^ e2)

    def inverse(self, g):
        k, e = g
        return g if e else ((-k) % self.n, 0)

    def _check_element(self, g):
        if len(g) != 2 or g[1] not in (0, 1):
            raise ValueError(f"Element {g} does not belong to {self.name}")
        return (int(g[0]) % self.n, int(g[1]))

    @property
    def is_finite(self):
        return True

    @property
    def order(self):
        return 2 * self.n

    def elements(self):
        return self._elements

    def length(self, g, tag=None):
        self._check_tag(tag)
        return float(self._word_length[g])

    def generator_word(self, g):
        word = [("r", g[0])] if g[0] else []
        if g[1]:
            word.append(("f", 1))
        return word

    def format_element(self, g):
        if g == self.identity:
            return "e"
        parts = [f"r^{g[0]}"] if g[0] else []
        if g[1]:
            parts.append("f")
        return " ".join(parts)

    def sphere_growth(self, tag=None):
        return ("finite", float(self.order))

    def folner(self, i):
        if i < 1:
            raise ValueError(f"Følner index must be >= 1, got {i}")
        return self._elements

    def folner_ratio(self, g, i):
        return 1.0

    def describe(self):
        return {"family": self.family, "n": self.n}


class IntegerLattice(DiscreteGroup):
    """ℤ^d with word (= 1-norm), 2-norm and squared 2-norm lengths."""

    family = "Z^d"
    accepts_vectors = True
    ships_folner = True
    length_tags = ("word", "l1", "l2", "l2sq")
    default_length = "l1"

    def __init__(self, d: int):
        if not 1 <= d <= len(_LATTICE_LETTERS):
            raise ValueError(f"Lattice rank must be in 1..{len(_LATTICE_LETTERS)}, got {d}")
        super().__init__(f"Z^{d}")
        self.rank = int(d)
        for j, letter in enumerate(_LATTICE_LETTERS[:d]):
            self.alphabet[letter] = tuple(1 if i == j else 0 for i in range(d))

    @property
    def identity(self):
        return (0,) * self.rank

    def multiply(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inverse(self, g):
        return tuple(-a for a in g)

    def power(self, g, n):
        return tuple(a * n for a in g)

    def _check_element(self, g):
        if len(g) != self.rank:
            raise ValueError(f"Element {g} does not belong to {self.name}")
        return tuple(int(a) for a in g)

    def _from_vectors(self, vectors):
        return tuple(sum(v[j] for v in vectors) for j in range(self.rank))

    def length(self, g, tag=None):
        tag = self._check_tag(tag)
        if tag in ("word", "l1"):
            return float(sum(abs(a) for a in g))
        squared = sum(a * a for a in g)
        return float(squared) if tag == "l2sq" else math.sqrt(squared)

    def _enumerate_ball(self, radius, tag):
        if tag == "l2sq":
            bound = math.isqrt(int(math.floor(radius + _LENGTH_SLACK)))
        else:
            bound = int(math.floor(radius + _LENGTH_SLACK))
        window = range(-bound, bound + 1)
        return [g for g in itertools.product(window, repeat=self.rank) if self.length(g, tag) <= radius + _LENGTH_SLACK]

    def shell_counts(self, max_shell, tag=None):
        tag = self._check_tag(tag)
        k = np.arange(max_shell + 1)
        if tag in ("word", "l1"):
            counts = np.zeros(max_shell + 1)
            counts[0] = 1.0
            for j in range(1, self.rank + 1):
                counts[1:] += 2.0 ** j * comb(self.rank, j) * comb(k[1:] - 1, j - 1)
            return counts
        if tag == "l2sq":
            line = np.zeros(max_shell + 1)
            line[0] = 1.0
            for q in range(1, math.isqrt(max_shell) + 1):
                line[q * q] = 2.0
            counts = line.copy()
            for _ in range(self.rank - 1):
                shifted = np.zeros(max_shell + 1)
                for q in range(math.isqrt(max_shell) + 1):
                    shifted[q * q:] += line[q * q] * counts[: max_shell + 1 - q * q]
                counts = shifted
            return counts
        raise ValueError("The 2-norm is not integer valued; shell counts are unavailable")

    def generator_word(self, g):
        return [(letter, a) for letter, a in zip(_LATTICE_LETTERS, g) if a]

    def format_element(self, g):
        if self.rank == 1:
            return str(g[0])
        return "(" + ",".join(str(a) for a in g) + ")"

    def sphere_growth(self, tag=None):
        tag = self._check_tag(tag)
        degree = self.rank / 2 if tag == "l2sq" else self.rank
        return ("polynomial", float(degree))

    def folner(self, i):
        if i < 1:
            raise ValueError(f"Følner index must be >= 1, got {i}")
        return tuple(itertools.product(range(i), repeat=self.rank))

    def folner_ratio(self, g, i):
        if i < 1:
            raise ValueError(f"Følner index must be >= 1, got {i}")
        return float(np.prod([max(0.0, 1.0 - abs(a) / i) for a in g]))

    def describe(self):
        return {"family": self.family, "d": self.rank}


class FreeGroup(DiscreteGroup):
    """Free group on a, b (letters stored as ±1, ±2) with free reduction."""

    family = "free-F2"

    def __init__(self, rank: int = 2):
        if rank != 2:
            raise ValueError("Only the free group of rank 2 is shipped")
        super().__init__("F_2")
        self.rank = rank
        self.alphabet = {"a": (1,), "b": (2,)}
        self._letters = {1: "a", 2: "b"}
        self._layers: List[List[GroupElement]] = [[()]]

    @property
    def identity(self):
        return ()

    def multiply(self, g, h):
        out = list(g)
        for x in h:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def inverse(self, g):
        return tuple(-x for x in reversed(g))

    def _check_element(self, g):
        return self.multiply((), tuple(int(x) for x in g))

    def length(self, g, tag=None):
        self._check_tag(tag)
        return float(len(g))

    def _enumerate_ball(self, radius, tag):
        depth = int(math.floor(radius + _LENGTH_SLACK))
        steps = [1, -1, 2, -2]
        with self._lock:
            while len(self._layers) <= depth:
                layer = len(self._layers)
                grown = {self.multiply(g, (s,)) for g in self._layers[-1] for s in steps}
                self._layers.append(sorted(g for g in grown if len(g) == layer))
        return [g for layer in self._layers[: depth + 1] for g in layer]

    def shell_counts(self, max_shell, tag=None):
        self._check_tag(tag)
        counts = np.ones(max_shell + 1)
        k = np.arange(1, max_shell + 1)
        counts[1:] = 2 * self.rank * (2.0 * self.rank - 1) ** (k - 1)
        return counts

    def generator_word(self, g):
        word = []
        for x in g:
            letter = self._letters[abs(x)]
            step = 1 if x > 0 else -1
            if word and word[-1][0] == letter:
                word[-1] = (letter, word[-1][1] + step)
            else:
                word.append((letter, step))
        return word

    def format_element(self, g):
        if not g:
            return "e"
        return " ".join(letter if n == 1 else f"{letter}^{n}" for letter, n in self.generator_word(g))

    def sphere_growth(self, tag=None):
        self._check_tag(tag)
        return ("exponential", float(2 * self.rank - 1))

    def describe(self):
        return {"family": self.family}


class ModularGroup(DiscreteGroup):
    """ℤ₂ ∗ ℤ₃ = <s, t | s², t³> in alternating syllable normal form."""

    family = "free-product-Z2-Z3"
    length_tags = ("word", "block")
    default_length = "block"

    def __init__(self):
        super().__init__("Z_2*Z_3")
        self.factor_orders = {"s": 2, "t": 3}
        self.alphabet = {"s": (("s", 1),), "t": (("t", 1),)}
        self._syllables = [(("s", 1),), (("t", 1),), (("t", 2),)]
        self._layers: List[List[GroupElement]] = [[()]]

    @property
    def identity(self):
        return ()

    def multiply(self, g, h):
        out = list(g)
        for letter, exponent in h:
            if out and out[-1][0] == letter:
                combined = (out.pop()[1] + exponent) % self.factor_orders[letter]
                if combined:
                    out.append((letter, combined))
            else:
                out.append((letter, exponent % self.factor_orders[letter]))
        return tuple(out)

    def inverse(self, g):
        return tuple((letter, (-e) % self.factor_orders[letter]) for letter, e in reversed(g))

    def _check_element(self, g):
        return self.multiply((), tuple((str(letter), int(e)) for letter, e in g))

    def length(self, g, tag=None):
        self._check_tag(tag)
        return float(len(g))

    def _enumerate_ball(self, radius, tag):
        depth = int(math.floor(radius + _LENGTH_SLACK))
        with self._lock:
            while len(self._layers) <= depth:
                layer = len(self._layers)
                grown = {self.multiply(g, s) for g in self._layers[-1] for s in self._syllables}
                self._layers.append(sorted(g for g in grown if len(g) == layer))
        return [g for layer in self._layers[: depth + 1] for g in layer]

    def shell_counts(self, max_shell, tag=None):
        self._check_tag(tag)
        counts = np.ones(max_shell + 1)
        for k in range(1, max_shell + 1):
            counts[k] = 3 * 2.0 ** ((k - 1) // 2) if k % 2 else 2 * 2.0 ** (k // 2)
        return counts

    def generator_word(self, g):
        return list(g)

    def format_element(self, g):
        if not g:
            return "e"
        return " ".join(letter if e == 1 else f"{letter}^{e}" for letter, e in g)

    def sphere_growth(self, tag=None):
        self._check_tag(tag)
        return ("exponential", math.sqrt(2.0))

    def describe(self):
        return {"family": self.family}


@dataclass(frozen=True)
class LengthFunction:
    group: DiscreteGroup
    tag: str

    def __post_init__(self):
        self.group._check_tag(self.tag)

    def __call__(self, g: GroupElement) -> float:
        return self.group.length(g, self.tag)

    def ball(self, radius: float) -> Tuple[GroupElement, ...]:
        return self.group.ball(radius, self.tag)

    def describe(self) -> Dict:
        return {"group": self.group.name, "length": self.tag}


def make_group(family: str, **params) -> DiscreteGroup:
    """
    Build a shipped group from its family tag.

    Parameters:
    family (str): finite-cyclic | finite-dihedral | product-of-finite | Z^d | free-F2 | free-product-Z2-Z3
    params: n (cyclic, dihedral), orders (product), d (lattice)
    """
    if family == "finite-cyclic":
        return FiniteAbelianGroup([params["n"]])
    if family == "product-of-finite":
        return FiniteAbelianGroup(params["orders"])
    if family == "finite-dihedral":
        return DihedralGroup(params["n"])
    if family in ("Z^d", "Zd"):
        return IntegerLattice(params.get("d", 1))
    if family == "free-F2":
        return FreeGroup()
    if family == "free-product-Z2-Z3":
        return ModularGroup()
    raise ValueError(f"Unknown group family: {family}")


def make_length(group: DiscreteGroup, tag: Optional[str] = None) -> LengthFunction:
    return LengthFunction(group, tag or group.default_length)


def normal_form(group: DiscreteGroup, word) -> GroupElement:
    return group.normal_form(word)


def length(g: GroupElement, L: LengthFunction) -> float:
    return L(g)


def ball(radius: float, L: LengthFunction) -> Tuple[GroupElement, ...]:
    return L.ball(radius)


def folner(group: DiscreteGroup, i: int) -> Tuple[GroupElement, ...]:
    return group.folner(i)


def word_homomorphism(
    group: DiscreteGroup,
    images: Dict[str, object],
    multiply: Callable,
    identity,
    inverse: Callable,
    power: Optional[Callable] = None,
) -> Callable[[GroupElement], object]:
    """
    Evaluate a map given on generators along normal forms.

    The result is a homomorphism only when the images satisfy the group relations;
    callers validate that separately.
    """
    missing = set(group.alphabet) - set(images)
    if missing:
        raise ValueError(f"Missing generator images for {sorted(missing)} on {group.name}")

    def evaluate(g: GroupElement):
        result = identity
        for letter, exponent in group.generator_word(g):
            base = images[letter] if exponent > 0 else inverse(images[letter])
            if power is not None:
                result = multiply(result, power(base, abs(exponent)))
            else:
                for _ in range(abs(exponent)):
                    result = multiply(result, base)
        return result

    return evaluate
