"""Chevalley basis arithmetic, graded pieces and weighted Dynkin diagrams.

Structure constants follow the extraspecial-pair construction: for every
positive non-simple root the smallest positive ``alpha`` with ``xi - alpha``
a root gets ``N(alpha, beta) = p + 1`` and all other constants follow from
the standard relations. Everything is exact over ``Fraction``.
"""

import logging
import random
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from sympy import prime

from app.core.config import settings
from app.core.exceptions import (
    InvariantViolation,
    MalformedInputError,
    NotMiddleElementError,
)
from app.services.exactfield import FieldMatrix, kernel, solve
from app.services.rootsys import (
    RootSubsystem,
    RootSystem,
    Vector,
    add,
    format_vector,
    scale,
    vector,
)

logger = logging.getLogger(__name__)

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


class LieElement:
    """A sparse element: root-vector coefficients plus a Cartan part."""

    __slots__ = ("parts", "cartan")

    def __init__(self, parts: Optional[Dict[int, Fraction]] = None, cartan=None):
        self.parts: Dict[int, Fraction] = {
            i: Fraction(c) for i, c in (parts or {}).items() if c
        }
        self.cartan: Optional[Vector] = (
            tuple(Fraction(x) for x in cartan)
            if cartan is not None and any(cartan)
            else None
        )

    def is_zero(self) -> bool:
        return not self.parts and self.cartan is None

    def support(self) -> Tuple[int, ...]:
        return tuple(sorted(self.parts))

    def __add__(self, other: "LieElement") -> "LieElement":
        parts = dict(self.parts)
        for i, c in other.parts.items():
            parts[i] = parts.get(i, 0) + c
        if self.cartan is None:
            cartan = other.cartan
        elif other.cartan is None:
            cartan = self.cartan
        else:
            cartan = add(self.cartan, other.cartan)
        return LieElement(parts, cartan)

    def __rmul__(self, k) -> "LieElement":
        k = Fraction(k)
        return LieElement(
            {i: k * c for i, c in self.parts.items()},
            scale(k, self.cartan) if self.cartan is not None else None,
        )

    def __neg__(self) -> "LieElement":
        return -1 * self

    def __sub__(self, other: "LieElement") -> "LieElement":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LieElement):
            return NotImplemented
        return self.parts == other.parts and self.cartan == other.cartan

    def __repr__(self) -> str:
        terms = [f"{c}*X{i}" for i, c in sorted(self.parts.items())]
        if self.cartan is not None:
            terms.append(f"H({','.join(str(x) for x in self.cartan)})")
        return " + ".join(terms) or "0"


@dataclass
class LieTriple:
    """An sl2-triple [h,e]=2e, [h,f]=-2f, [e,f]=h."""

    e: LieElement
    h: Vector
    f: LieElement

    @property
    def support(self) -> Tuple[int, ...]:
        """Roots carrying a nonzero coefficient of ``e``."""
        return self.e.support()


@dataclass(frozen=True)
class GradedPiece:
    """Roots of a graded piece; degree zero also carries the Cartan."""

    degree: int
    roots: Tuple[int, ...]
    cartan_rank: int = 0

    @property
    def dimension(self) -> int:
        return len(self.roots) + self.cartan_rank


@dataclass
class WeightedDiagram:
    """A weighted Dynkin diagram together with its middle element and triple."""

    values: Tuple[int, ...]
    h: Vector
    triple: LieTriple = field(repr=False)


class ChevalleyBasis:
    """Structure constants and brackets of the split Lie algebra of a root system."""

    def __init__(self, rs: RootSystem):
        self.rs = rs
        self._constants: Dict[Tuple[int, int], int] = {}
        self._extraspecial: Dict[int, Tuple[int, int]] = {}
        self._diagrams: Dict[frozenset, List[WeightedDiagram]] = {}
        for xi in range(rs.n_positive):
            if rs.height(xi) == 1:
                continue
            for alpha in range(rs.n_positive):
                beta = rs.index.get(tuple(x - y for x, y in zip(rs.roots[xi], rs.roots[alpha])))
                if beta is not None and rs.is_positive(beta):
                    self._extraspecial[xi] = (alpha, beta)
                    break

    def _string_length(self, alpha: int, beta: int) -> int:
        """Largest p with beta - p*alpha a root."""
        rs = self.rs
        p = 0
        current = rs.roots[beta]
        while True:
            current = tuple(x - y for x, y in zip(current, rs.roots[alpha]))
            if current not in rs.index:
                return p
            p += 1

    def constant(self, r: int, s: int) -> int:
        """N(r, s) with [X_r, X_s] = N(r, s) X_{r+s}; zero when r+s is not a root."""
        key = (r, s)
        cached = self._constants.get(key)
        if cached is not None:
            return cached
        rs = self.rs
        t = rs.root_sum(r, s)
        if t is None:
            value = Fraction(0)
        elif rs.is_positive(r) and rs.is_positive(s):
            value = self._positive_constant(r, s, t)
        elif not rs.is_positive(r) and not rs.is_positive(s):
            value = -Fraction(self.constant(rs.neg(r), rs.neg(s)))
        elif rs.is_positive(r):
            if rs.is_positive(t):
                value = -rs.norms[t] / rs.norms[r] * self.constant(rs.neg(s), t)
            else:
                value = rs.norms[t] / rs.norms[s] * self.constant(rs.neg(t), r)
        else:
            value = -Fraction(self.constant(s, r))
        if value.denominator != 1:
            raise InvariantViolation(
                f"non-integral structure constant N({r},{s}) = {value}"
            )
        self._constants[key] = int(value)
        return int(value)

    def _positive_constant(self, r: int, s: int, xi: int) -> Fraction:
        rs = self.rs
        alpha, beta = self._extraspecial[xi]
        base = self._string_length(alpha, beta) + 1
        if (r, s) == (alpha, beta):
            return Fraction(base)
        if (s, r) == (alpha, beta):
            return Fraction(-base)
        neg_alpha, neg_beta = rs.neg(alpha), rs.neg(beta)
        total = Fraction(0)
        s_minus_alpha = rs.root_sum(s, neg_alpha)
        if s_minus_alpha is not None:
            total += Fraction(
                self.constant(s, neg_alpha) * self.constant(r, neg_beta)
            ) / rs.norms[s_minus_alpha]
        r_minus_alpha = rs.root_sum(r, neg_alpha)
        if r_minus_alpha is not None:
            total += Fraction(
                self.constant(neg_alpha, r) * self.constant(s, neg_beta)
            ) / rs.norms[r_minus_alpha]
        return rs.norms[xi] / base * total

    def root_vector(self, i: int, coeff=1) -> LieElement:
        return LieElement({i: coeff})

    def cartan_element(self, h: Sequence) -> LieElement:
        return LieElement(cartan=h)

    def bracket(self, x: LieElement, y: LieElement) -> LieElement:
        """Lie bracket of two sparse elements."""
        rs = self.rs
        parts: Dict[int, Fraction] = {}
        cartan = tuple(Fraction(0) for _ in range(rs.ambient_dim))
        for a, ca in x.parts.items():
            for b, cb in y.parts.items():
                if b == rs.neg(a):
                    cartan = add(cartan, scale(ca * cb, rs.coroots[a]))
                    continue
                n = self.constant(a, b)
                if n:
                    c = rs.root_sum(a, b)
                    parts[c] = parts.get(c, 0) + ca * cb * n
        if x.cartan is not None:
            for b, cb in y.parts.items():
                parts[b] = parts.get(b, 0) + cb * rs.pairing(b, x.cartan)
        if y.cartan is not None:
            for a, ca in x.parts.items():
                parts[a] = parts.get(a, 0) - ca * rs.pairing(a, y.cartan)
        return LieElement(parts, cartan)

    def graded_piece(self, sub: RootSubsystem, chi: Vector, n: int) -> GradedPiece:
        """Roots of ``sub`` on which ``chi`` takes the value ``n``."""
        roots = tuple(sorted(sub.r_n(chi, n)))
        return GradedPiece(n, roots, self.rs.rank if n == 0 else 0)

    def middle_element_test(
        self,
        sub: RootSubsystem,
        h: Vector,
        retries: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> Optional[LieTriple]:
        """Return an sl2-triple with middle element ``h`` inside ``sub``, or None.

        ``h`` must be dominant for ``sub`` with simple-root values in {0, 1, 2}.
        The generic element of the 2-eigenspace is probed first with all
        coefficients equal to one, then with seeded random primes, and finally
        with pairwise distinct primes before ``h`` is rejected.
        """
        rs = self.rs
        values = [rs.pairing(i, h) for i in sub.simple]
        if any(x not in (0, 1, 2) for x in values):
            raise MalformedInputError(
                f"{tuple(str(x) for x in values)} is not a dominant 0/1/2 labelling"
            )
        plus = sorted(sub.r_n(h, 2))
        if not plus:
            if any(h):
                return None
            return LieTriple(LieElement(), h, LieElement())
        zero_roots = sorted(sub.r_n(h, 0))
        for coeffs in self._coefficient_samples(len(plus), retries, seed):
            triple = self._solve_for_f(h, plus, zero_roots, coeffs)
            if triple is not None:
                return triple
        triple = self.confirm(sub, h)
        if triple is not None:
            logger.warning(
                f"Distinct-prime confirmation accepted h=({format_vector(h)}) "
                f"after every sampled coefficient set failed"
            )
        return triple

    def confirm(self, sub: RootSubsystem, h: Vector) -> Optional[LieTriple]:
        """Solve once more with pairwise distinct primes as the coefficients of e.

        Used as the final check before ``h`` is rejected.
        """
        plus = sorted(sub.r_n(h, 2))
        if not plus:
            return None if any(h) else LieTriple(LieElement(), h, LieElement())
        zero_roots = sorted(sub.r_n(h, 0))
        offset = len(_PRIMES) + 1
        coeffs = [Fraction(int(prime(offset + k))) for k in range(len(plus))]
        return self._solve_for_f(h, plus, zero_roots, coeffs)

    def _coefficient_samples(
        self, size: int, retries: Optional[int], seed: Optional[int]
    ) -> Iterator[List[Fraction]]:
        yield [Fraction(1)] * size
        retries = settings.GENERICITY_RETRIES if retries is None else retries
        rng = random.Random(settings.SEED if seed is None else seed)
        for attempt in range(retries):
            logger.debug(f"Genericity retry {attempt + 1} of {retries}")
            yield [Fraction(rng.choice(_PRIMES)) for _ in range(size)]

    def _solve_for_f(
        self,
        h: Vector,
        plus: List[int],
        zero_roots: List[int],
        coeffs: List[Fraction],
    ) -> Optional[LieTriple]:
        rs = self.rs
        column = {beta: k for k, beta in enumerate(plus)}
        zero_row = {gamma: rs.ambient_dim + k for k, gamma in enumerate(zero_roots)}
        rows = [[Fraction(0)] * len(plus) for _ in range(rs.ambient_dim + len(zero_roots))]
        # [e, f] = sum c_a d_b [X_a, X_-b]
        for a, ca in zip(plus, coeffs):
            for b in plus:
                k = column[b]
                if a == b:
                    for coord, x in enumerate(rs.coroots[a]):
                        rows[coord][k] += ca * x
                    continue
                neg_b = rs.neg(b)
                gamma = rs.root_sum(a, neg_b)
                if gamma is None:
                    continue
                rows[zero_row[gamma]][k] += ca * self.constant(a, neg_b)
        rhs = list(h) + [Fraction(0)] * len(zero_roots)
        solution = solve(FieldMatrix(rows, len(plus)), rhs)
        if solution is None:
            return None
        e = LieElement(dict(zip(plus, coeffs)))
        f = LieElement({rs.neg(b): d for b, d in zip(plus, solution)})
        triple = LieTriple(e, h, f)
        if not self.is_triple(triple):
            return None
        return triple

    def is_triple(self, triple: LieTriple) -> bool:
        """Check the three sl2 relations exactly."""
        h = self.cartan_element(triple.h)
        return (
            self.bracket(h, triple.e) == 2 * triple.e
            and self.bracket(h, triple.f) == -2 * triple.f
            and self.bracket(triple.e, triple.f) == h
        )

    def from_values(
        self,
        sub: RootSubsystem,
        values: Sequence,
        cartan: Optional[FieldMatrix] = None,
    ) -> Vector:
        """The coroot combination h of ``sub`` with the given simple-root values."""
        rs = self.rs
        h = vector([0] * rs.ambient_dim)
        if not sub.rank:
            return h
        if cartan is None:
            cartan = FieldMatrix(
                [[Fraction(x) for x in row] for row in sub.cartan_matrix], sub.rank
            )
        x = solve(cartan, [Fraction(v) for v in values])
        if x is None:
            raise InvariantViolation("singular Cartan matrix")
        for xj, j in zip(x, sub.simple):
            h = add(h, scale(xj, rs.coroots[j]))
        return h

    def wdd_enumerate(self, sub: RootSubsystem) -> List[WeightedDiagram]:
        """All weighted Dynkin diagrams of ``sub``, memoized by its root set."""
        cached = self._diagrams.get(sub.key)
        if cached is not None:
            return cached
        cartan = FieldMatrix(
            [[Fraction(x) for x in row] for row in sub.cartan_matrix], sub.rank
        )
        found: List[WeightedDiagram] = []
        for values in product((0, 1, 2), repeat=sub.rank):
            h = self.from_values(sub, values, cartan)
            triple = self.middle_element_test(sub, h)
            if triple is not None:
                found.append(WeightedDiagram(tuple(values), h, triple))
        logger.info(
            f"Found {len(found)} weighted Dynkin diagrams for {sub.cartan_type}"
        )
        self._diagrams[sub.key] = found
        return found

    def central_directions(self, triple: LieTriple) -> List[Vector]:
        """Basis of the Cartan directions annihilated by every root in supp(e).

        A point lies in ``h`` plus their span exactly when every root of supp(e)
        takes the value 2 on it, which is the form :func:`parameter_set` checks.
        """
        rs = self.rs
        support = triple.support
        if not support:
            return [
                vector(int(i == j) for j in range(rs.ambient_dim))
                for i in range(rs.ambient_dim)
            ]
        matrix = FieldMatrix([list(rs.roots[i]) for i in support], rs.ambient_dim)
        return [tuple(v) for v in kernel(matrix)]


@lru_cache(maxsize=None)
def chevalley(rs: RootSystem) -> ChevalleyBasis:
    """Shared Chevalley basis of a root system."""
    return ChevalleyBasis(rs)


def check_middle_element(sub: RootSubsystem, chi: Vector) -> LieTriple:
    """Verify that ``chi`` is, up to the center, a dominant middle element of ``sub``.

    Raises NotMiddleElementError carrying the simple-root pairings as witness.
    """
    lie = chevalley(sub.rs)
    values = tuple(sub.rs.pairing(i, chi) for i in sub.simple)
    witness = {"pairings": [str(x) for x in values]}
    if any(x not in (0, 1, 2) for x in values):
        raise NotMiddleElementError(
            "character is not dominant with simple values in {0,1,2}", witness
        )
    triple = lie.middle_element_test(sub, lie.from_values(sub, values))
    if triple is None:
        raise NotMiddleElementError(
            "character is not the middle element of a Lie triple", witness
        )
    return triple
