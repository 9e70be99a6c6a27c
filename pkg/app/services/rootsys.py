"""Root systems, Weyl groups and central characters."""

import logging
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import factorial
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from app.core.config import settings
from app.core.exceptions import (
    GroupTooLargeError,
    MalformedInputError,
    UnsupportedTypeError,
)
from app.services.exactfield import FieldMatrix, solve

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]

_FACTOR = re.compile(r"^([A-Z])(\d+)$")

# Listed last to first: the root order sorts simple roots by coefficient vector,
# which reverses the listing.
F4_SIMPLE_ROOTS = (
    (1, -1, -1, -1),
    (0, 0, 0, 2),
    (0, 0, 1, -1),
    (0, 1, -1, 0),
)
G2_SIMPLE_ROOTS = ((-2, 1, 1), (1, -1, 0))


def vector(values: Iterable) -> Vector:
    return tuple(Fraction(x) for x in values)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def add(a: Vector, b: Vector) -> Vector:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Vector, b: Vector) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def scale(k: Fraction, a: Vector) -> Vector:
    return tuple(k * x for x in a)


def format_vector(v: Sequence[Fraction]) -> str:
    """Render a rational vector as ``3,1,1,1`` or ``5/2,3/2,1/2,1/2``."""
    return ",".join(str(Fraction(x)) for x in v)


def parse_vector(text: str, dim: Optional[int] = None) -> Vector:
    """Parse comma-separated rationals; parentheses are optional."""
    body = text.strip().strip("()[]")
    if not body:
        raise MalformedInputError("empty character")
    try:
        values = vector(token.strip() for token in body.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedInputError(f"cannot parse character {text!r}") from exc
    if dim is not None and len(values) != dim:
        raise MalformedInputError(
            f"character {text!r} has {len(values)} coordinates, expected {dim}"
        )
    return values


def parse_cartan(label: str) -> Tuple[Tuple[str, int], ...]:
    """Split a label such as ``F4`` or ``A1xA1`` into (letter, rank) factors."""
    if not label or not label.strip():
        raise MalformedInputError("empty Cartan label")
    factors = []
    for part in label.strip().split("x"):
        match = _FACTOR.match(part.strip())
        if not match:
            raise MalformedInputError(f"cannot parse Cartan factor {part!r}")
        letter, n = match.group(1), int(match.group(2))
        if letter not in "ABCDGF" or n < 1:
            raise UnsupportedTypeError(f"unsupported Cartan type {part}")
        if (letter == "G" and n != 2) or (letter == "F" and n != 4):
            raise UnsupportedTypeError(f"unsupported Cartan type {part}")
        if letter == "D" and n < 2:
            raise UnsupportedTypeError(f"unsupported Cartan type {part}")
        factors.append((letter, n))
    return tuple(factors)


def _factor_simple_roots(letter: str, n: int) -> Tuple[int, List[List[int]]]:
    if letter == "G":
        return 3, [list(r) for r in G2_SIMPLE_ROOTS]
    if letter == "F":
        return 4, [list(r) for r in F4_SIMPLE_ROOTS]
    dim = n + 1 if letter == "A" else n
    roots = []
    for i in range(n - 1):
        r = [0] * dim
        r[i], r[i + 1] = 1, -1
        roots.append(r)
    last = [0] * dim
    if letter == "A":
        last[n - 1], last[n] = 1, -1
    elif letter == "B":
        last[n - 1] = 1
    elif letter == "C":
        last[n - 1] = 2
    else:
        last[n - 2], last[n - 1] = 1, 1
    roots.append(last)
    return dim, roots


def weyl_order(factors: Sequence[Tuple[str, int]]) -> int:
    """Order of the Weyl group from the classification."""
    order = 1
    for letter, n in factors:
        if letter == "A":
            order *= factorial(n + 1)
        elif letter in "BC":
            order *= 2**n * factorial(n)
        elif letter == "D":
            order *= 2 ** (n - 1) * factorial(n)
        elif letter == "G":
            order *= 12
        else:
            order *= 1152
    return order


class RootSystem:
    """Roots, coroots and simple system of a product of simple types.

    Roots are indexed: positive roots first, ordered by (height, simple
    coefficients), then their negatives in the same order, so that the
    negative of root ``i`` is ``neg(i)``.
    """

    def __init__(self, label: str):
        self.factors = parse_cartan(label)
        self.label = "x".join(f"{letter}{n}" for letter, n in self.factors)
        blocks = [_factor_simple_roots(letter, n) for letter, n in self.factors]
        self.ambient_dim = sum(dim for dim, _ in blocks)
        simple: List[Vector] = []
        offset = 0
        for dim, roots in blocks:
            for r in roots:
                padded = [0] * self.ambient_dim
                padded[offset : offset + dim] = r
                simple.append(vector(padded))
            offset += dim
        self.simple_roots: Tuple[Vector, ...] = tuple(simple)
        self.rank = len(simple)
        self._reflections: Dict[int, Tuple[int, ...]] = {}
        self._build_roots()
        logger.debug(f"Built root system {self.label} with {len(self.roots)} roots")

    def _build_roots(self) -> None:
        found: Dict[Vector, Tuple[int, ...]] = {}
        queue = deque()
        for i, a in enumerate(self.simple_roots):
            found[a] = tuple(int(i == j) for j in range(self.rank))
            queue.append(a)
        norms = [dot(a, a) for a in self.simple_roots]
        while queue:
            x = queue.popleft()
            cx = found[x]
            for j, a in enumerate(self.simple_roots):
                k = 2 * dot(x, a) / norms[j]
                if not k:
                    continue
                y = sub(x, scale(k, a))
                if y not in found:
                    coeffs = list(cx)
                    coeffs[j] -= int(k)
                    found[y] = tuple(coeffs)
                    queue.append(y)
        positive = sorted(
            ((c, r) for r, c in found.items() if all(x >= 0 for x in c)),
            key=lambda item: (sum(item[0]), item[0]),
        )
        self.n_positive = len(positive)
        self.roots: Tuple[Vector, ...] = tuple(r for _, r in positive) + tuple(
            scale(Fraction(-1), r) for _, r in positive
        )
        self.coefficients: Tuple[Tuple[int, ...], ...] = tuple(
            c for c, _ in positive
        ) + tuple(tuple(-x for x in c) for c, _ in positive)
        self.index: Dict[Vector, int] = {r: i for i, r in enumerate(self.roots)}
        self.norms: Tuple[Fraction, ...] = tuple(dot(r, r) for r in self.roots)
        self.coroots: Tuple[Vector, ...] = tuple(
            scale(2 / n, r) for r, n in zip(self.roots, self.norms)
        )
        self.simple_indices: Tuple[int, ...] = tuple(
            self.index[a] for a in self.simple_roots
        )

    def neg(self, i: int) -> int:
        return i + self.n_positive if i < self.n_positive else i - self.n_positive

    def is_positive(self, i: int) -> bool:
        return i < self.n_positive

    def height(self, i: int) -> int:
        return sum(self.coefficients[i])

    def pairing(self, i: int, x: Sequence[Fraction]) -> Fraction:
        """The value of root ``i`` on the Cartan element ``x``."""
        return dot(self.roots[i], x)

    def root_sum(self, i: int, j: int) -> Optional[int]:
        """Index of ``root_i + root_j`` when it is a root."""
        return self.index.get(add(self.roots[i], self.roots[j]))

    def reflect(self, i: int, x: Vector) -> Vector:
        """Apply the reflection in root ``i`` to ``x``."""
        k = dot(self.roots[i], x)
        if not k:
            return x
        return sub(x, scale(k, self.coroots[i]))

    def reflection_perm(self, i: int) -> Tuple[int, ...]:
        """The reflection in root ``i`` as a permutation of root indices."""
        perm = self._reflections.get(i)
        if perm is None:
            perm = tuple(self.index[self.reflect(i, r)] for r in self.roots)
            self._reflections[i] = perm
        return perm

    @cached_property
    def two_rho_check(self) -> Vector:
        """Sum of the positive coroots."""
        total = tuple(Fraction(0) for _ in range(self.ambient_dim))
        for i in range(self.n_positive):
            total = add(total, self.coroots[i])
        return total

    @cached_property
    def order(self) -> int:
        return weyl_order(self.factors)

    @cached_property
    def full(self) -> "RootSubsystem":
        """The whole system as a subsystem of itself."""
        return RootSubsystem(self, range(len(self.roots)))

    def subsystem(self, indices: Iterable[int]) -> "RootSubsystem":
        return RootSubsystem(self, indices)

    def __repr__(self) -> str:
        return f"RootSystem('{self.label}')"


@lru_cache(maxsize=None)
def build(label: str) -> RootSystem:
    """Build (and cache) the root system for a Cartan label."""
    return RootSystem(label)


def compose(a: Sequence[int], b: Sequence[int]) -> Tuple[int, ...]:
    """Permutation of ``a`` after ``b``."""
    return tuple(a[k] for k in b)


@dataclass(frozen=True)
class WeylElement:
    """A Weyl group element as a permutation of the roots.

    ``word`` lists the root indices of a reduced expression, leftmost first;
    ``length`` is taken in the Coxeter system the element was built in.
    """

    perm: Tuple[int, ...]
    word: Tuple[int, ...] = field(default=(), compare=False)
    length: int = field(default=0, compare=False)

    def act(self, rs: RootSystem, x: Vector) -> Vector:
        for i in reversed(self.word):
            x = rs.reflect(i, x)
        return x

    def matrix(self, rs: RootSystem) -> List[List[Fraction]]:
        """Matrix of the action on the ambient space."""
        columns = []
        for j in range(rs.ambient_dim):
            unit = tuple(Fraction(int(i == j)) for i in range(rs.ambient_dim))
            columns.append(self.act(rs, unit))
        return [[columns[j][i] for j in range(rs.ambient_dim)] for i in range(rs.ambient_dim)]


@dataclass(frozen=True)
class Coset:
    """A coset of W/W(chi), labeled by its orbit point w*chi."""

    label: Vector
    representative: WeylElement


class RootSubsystem:
    """A closed root subsystem with positivity inherited from the ambient system."""

    def __init__(self, rs: RootSystem, indices: Iterable[int]):
        self.rs = rs
        self.roots: Tuple[int, ...] = tuple(sorted(set(indices)))
        members = set(self.roots)
        if any(rs.neg(i) not in members for i in self.roots):
            raise MalformedInputError("root subsystem is not closed under negation")
        self.positive: Tuple[int, ...] = tuple(i for i in self.roots if rs.is_positive(i))
        decomposable = set()
        for a in self.positive:
            for b in self.positive:
                c = rs.root_sum(a, b)
                if c is not None and c in members:
                    decomposable.add(c)
        self.simple: Tuple[int, ...] = tuple(
            i for i in self.positive if i not in decomposable
        )
        self.rank = len(self.simple)
        self.key: FrozenSet[int] = frozenset(self.roots)
        self._coordinate_cache: Dict[int, List[Fraction]] = {}

    @cached_property
    def identity(self) -> WeylElement:
        return WeylElement(tuple(range(len(self.rs.roots))), (), 0)

    @cached_property
    def cartan_matrix(self) -> List[List[int]]:
        """Entries <alpha_i, coroot_j> over the simple roots."""
        rs = self.rs
        return [
            [int(dot(rs.roots[i], rs.coroots[j])) for j in self.simple]
            for i in self.simple
        ]

    def components(self) -> List[List[int]]:
        """Simple roots grouped into connected components of the Dynkin diagram."""
        cartan = self.cartan_matrix
        seen, comps = set(), []
        for start in range(self.rank):
            if start in seen:
                continue
            comp, stack = [], [start]
            seen.add(start)
            while stack:
                a = stack.pop()
                comp.append(a)
                for b in range(self.rank):
                    if b not in seen and cartan[a][b]:
                        seen.add(b)
                        stack.append(b)
            comps.append(sorted(self.simple[a] for a in comp))
        return comps

    @cached_property
    def cartan_type(self) -> str:
        """Cartan label of the subsystem, e.g. ``A1xB2``; ``T`` for a torus."""
        labels = []
        rs = self.rs
        for comp in self.components():
            n = len(comp)
            norms = sorted({rs.norms[i] for i in comp})
            if len(norms) == 1:
                comp_set = set(comp)
                span = sum(
                    1
                    for i in self.positive
                    if all(
                        c == 0
                        for k, c in zip(self.simple, self.coordinates(i))
                        if k not in comp_set
                    )
                )
                letter = "A" if span == n * (n + 1) // 2 else "D" if span == n * (n - 1) else "E"
            elif norms[1] / norms[0] == 3:
                letter = "G"
            elif n == 2:
                letter = "B"
            elif n == 4 and sum(1 for i in comp if rs.norms[i] == norms[0]) == 2:
                letter = "F"
            elif sum(1 for i in comp if rs.norms[i] == norms[0]) == 1:
                letter = "B"
            else:
                letter = "C"
            labels.append(f"{letter}{n}")
        return "x".join(sorted(labels)) or "T"

    def coordinates(self, i: int) -> List[Fraction]:
        """Coefficients of root ``i`` in the simple roots of this subsystem."""
        if i in self._coordinate_cache:
            return self._coordinate_cache[i]
        rs = self.rs
        matrix = FieldMatrix(
            [[rs.roots[s][k] for s in self.simple] for k in range(rs.ambient_dim)],
            self.rank,
        )
        solution = solve(matrix, list(rs.roots[i]))
        if solution is None:
            raise MalformedInputError("root outside the span of the subsystem")
        self._coordinate_cache[i] = solution
        return solution

    def r_n(self, chi: Vector, n: int) -> FrozenSet[int]:
        """Roots of the subsystem taking the value ``n`` on ``chi``."""
        return frozenset(i for i in self.roots if self.rs.pairing(i, chi) == n)

    @cached_property
    def _group(self) -> Tuple[List[WeylElement], List[int], List[int]]:
        rs = self.rs
        generators = [rs.reflection_perm(i) for i in self.simple]
        elements = [self.identity]
        parents, gens = [-1], [-1]
        seen = {self.identity.perm: 0}
        frontier = [0]
        limit = settings.MAX_WEYL_ORDER
        while frontier:
            nxt = []
            for idx in frontier:
                w = elements[idx]
                for g, gperm in enumerate(generators):
                    perm = compose(gperm, w.perm)
                    if perm in seen:
                        continue
                    seen[perm] = len(elements)
                    elements.append(
                        WeylElement(perm, (self.simple[g],) + w.word, w.length + 1)
                    )
                    parents.append(idx)
                    gens.append(self.simple[g])
                    nxt.append(len(elements) - 1)
                    if len(elements) > limit:
                        raise GroupTooLargeError(
                            f"Weyl group of {self.cartan_type} exceeds {limit} elements"
                        )
            frontier = nxt
        logger.debug(f"Enumerated {len(elements)} Weyl group elements of {self.cartan_type}")
        return elements, parents, gens

    @property
    def elements(self) -> List[WeylElement]:
        """All elements, in order of increasing length."""
        return self._group[0]

    @cached_property
    def _by_perm(self) -> Dict[Tuple[int, ...], WeylElement]:
        return {w.perm: w for w in self.elements}

    def element(self, perm: Sequence[int]) -> WeylElement:
        return self._by_perm[tuple(perm)]

    def multiply(self, a: WeylElement, b: WeylElement) -> WeylElement:
        return self.element(compose(a.perm, b.perm))

    def inverse(self, w: WeylElement) -> WeylElement:
        inv = [0] * len(w.perm)
        for i, j in enumerate(w.perm):
            inv[j] = i
        return self.element(inv)

    def images(self, x: Vector) -> List[Vector]:
        """``w * x`` for every element, aligned with :attr:`elements`."""
        _, parents, gens = self._group
        out: List[Vector] = [x]
        for idx in range(1, len(parents)):
            out.append(self.rs.reflect(gens[idx], out[parents[idx]]))
        return out

    def is_dominant(self, x: Vector) -> bool:
        return all(self.rs.pairing(i, x) >= 0 for i in self.simple)

    def to_dominant(self, x: Vector) -> Tuple[Vector, WeylElement]:
        """Move ``x`` into the dominant chamber, lowest simple index first.

        Returns the dominant point and the minimal-length element reaching it.
        """
        rs = self.rs
        perm = self.identity.perm
        word: Tuple[int, ...] = ()
        while True:
            for i in self.simple:
                if rs.pairing(i, x) < 0:
                    x = rs.reflect(i, x)
                    perm = compose(rs.reflection_perm(i), perm)
                    word = (i,) + word
                    break
            else:
                return x, WeylElement(perm, word, len(word))

    @cached_property
    def two_rho_check(self) -> Vector:
        total = tuple(Fraction(0) for _ in range(self.rs.ambient_dim))
        for i in self.positive:
            total = add(total, self.rs.coroots[i])
        return total

    @cached_property
    def w0(self) -> WeylElement:
        """The longest element."""
        neg = scale(Fraction(-1), self.two_rho_check)
        return self.to_dominant(neg)[1]

    def stabilizer(self, chi: Vector) -> List[WeylElement]:
        return [w for w, y in zip(self.elements, self.images(chi)) if y == chi]

    def orbit(self, x: Vector) -> Dict[Vector, WeylElement]:
        """Orbit points of ``x`` with a minimal-length element reaching each."""
        out: Dict[Vector, WeylElement] = {}
        for w, y in zip(self.elements, self.images(x)):
            if y not in out:
                out[y] = w
        return out

    def cosets(self, chi: Vector) -> List[Coset]:
        """Cosets of W/W(chi), ordered by representative length then label."""
        orbit = self.orbit(chi)
        return sorted(
            (Coset(label, w) for label, w in orbit.items()),
            key=lambda c: (c.representative.length, c.label),
        )

    def coset_members(self, chi: Vector) -> Dict[Vector, List[WeylElement]]:
        members: Dict[Vector, List[WeylElement]] = {}
        for w, y in zip(self.elements, self.images(chi)):
            members.setdefault(y, []).append(w)
        return members

    def r_n_w(self, w: WeylElement, chi: Vector, n: int) -> FrozenSet[int]:
        """Roots in r_n(chi) that ``w`` sends to positive roots."""
        return frozenset(i for i in self.r_n(chi, n) if self.rs.is_positive(w.perm[i]))

    def __repr__(self) -> str:
        return f"RootSubsystem({self.rs.label}: {self.cartan_type})"


def resolve_character(rs: RootSystem, text: str) -> Vector:
    """Parse a character; ``2rho`` stands for the sum of positive coroots."""
    if text.strip().lower() == "2rho":
        return rs.two_rho_check
    return parse_vector(text, rs.ambient_dim)
