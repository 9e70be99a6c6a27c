"""Exact arithmetic over Q(v) and dense linear algebra over exact fields.

Polynomials are kept in sympy's dense univariate representation over ``ZZ``
(coefficient lists, highest degree first). A :class:`RationalFunction` is a
pair of such lists in normal form: coprime in Z[v], denominator with positive
leading coefficient, zero stored as 0/1. The linear algebra routines work on
any exact field whose elements support ``+ - * /`` and truth testing, so the
same elimination serves Q(v) and Q (``fractions.Fraction``).
"""

import logging
import re
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from sympy.polys.densearith import (
    dup_add,
    dup_exquo_ground,
    dup_lshift,
    dup_mul,
    dup_neg,
    dup_sub,
)
from sympy.polys.densebasic import dup_strip
from sympy.polys.densetools import dup_content
from sympy.polys.domains import ZZ
from sympy.polys.euclidtools import dup_inner_gcd

from app.core.exceptions import MalformedInputError, SingularMatrixError

logger = logging.getLogger(__name__)

Dup = Tuple[int, ...]

_ONE: Dup = (ZZ.one,)


def _is_monomial(f: Sequence[int]) -> bool:
    return all(not c for c in f[1:])


def _reduce(num: List[int], den: List[int]) -> Tuple[Dup, Dup]:
    """Bring num/den to normal form."""
    num = dup_strip(list(num))
    den = dup_strip(list(den))
    if not den:
        raise MalformedInputError("zero denominator")
    if not num:
        return (), _ONE
    if len(den) == 1 and den[0] == 1:
        return tuple(num), _ONE
    if _is_monomial(den):
        # c*v^k: cancel powers of v, then the integer content
        shift = 0
        while shift < len(den) - 1 and not num[len(num) - 1 - shift]:
            shift += 1
        if shift:
            num = num[: len(num) - shift]
            den = den[: len(den) - shift]
        g = ZZ.gcd(dup_content(num, ZZ), den[0])
        if g != 1:
            num = dup_exquo_ground(num, g, ZZ)
            den = dup_exquo_ground(den, g, ZZ)
    else:
        _, num, den = dup_inner_gcd(num, den, ZZ)
    if den[0] < 0:
        num = dup_neg(num, ZZ)
        den = dup_neg(den, ZZ)
    return tuple(num), tuple(den)


def _term(coeff: int, exp: int, var: str) -> str:
    coeff = int(coeff)
    if exp == 0:
        return str(coeff)
    power = var if exp == 1 else f"{var}^{exp}"
    if coeff == 1:
        return power
    if coeff == -1:
        return f"-{power}"
    return f"{coeff}{power}"


def format_terms(terms: Dict[int, int], var: str = "v") -> str:
    """Render a finitely supported exponent -> coefficient map, increasing degree."""
    parts = [_term(terms[e], e, var) for e in sorted(terms) if terms[e]]
    if not parts:
        return "0"
    text = parts[0]
    for part in parts[1:]:
        text += part if part.startswith("-") else f"+{part}"
    return text


def _dup_terms(f: Dup, shift: int = 0) -> Dict[int, int]:
    degree = len(f) - 1
    return {degree - i + shift: int(c) for i, c in enumerate(f) if c}


class RationalFunction:
    """An element of Q(v) in normal form. Instances are immutable."""

    __slots__ = ("_num", "_den")

    def __init__(self, value=0):
        if isinstance(value, RationalFunction):
            self._num, self._den = value._num, value._den
        elif isinstance(value, int):
            self._num = (ZZ(value),) if value else ()
            self._den = _ONE
        elif isinstance(value, Fraction):
            self._num, self._den = _reduce(
                [ZZ(value.numerator)], [ZZ(value.denominator)]
            )
        else:
            raise MalformedInputError(f"cannot build a rational function from {value!r}")

    @classmethod
    def _make(cls, num: Dup, den: Dup) -> "RationalFunction":
        obj = object.__new__(cls)
        obj._num = num
        obj._den = den
        return obj

    @classmethod
    def from_dup(cls, num: Sequence[int], den: Sequence[int] = (1,)):
        """Build from dense coefficient lists, highest degree first."""
        return cls._make(*_reduce([ZZ(c) for c in num], [ZZ(c) for c in den]))

    @classmethod
    def from_coeffs(cls, numerator: Sequence[int], denominator: Sequence[int] = (1,)):
        """Build from coefficient lists in increasing degree."""
        return cls.from_dup(list(reversed(numerator)), list(reversed(denominator)))

    @classmethod
    def from_laurent(cls, terms: Dict[int, int]) -> "RationalFunction":
        """Build from an exponent -> integer coefficient map (exponents may be negative)."""
        terms = {e: c for e, c in terms.items() if c}
        if not terms:
            return cls(0)
        low, high = min(terms), max(terms)
        coeffs = [ZZ(terms.get(e, 0)) for e in range(high, low - 1, -1)]
        if low >= 0:
            return cls._make(tuple(dup_lshift(coeffs, low, ZZ)), _ONE)
        den = [ZZ.one] + [ZZ.zero] * (-low)
        return cls._make(*_reduce(coeffs, den))

    @classmethod
    def monomial(cls, exp: int, coeff: int = 1) -> "RationalFunction":
        """Return ``coeff * v**exp``."""
        return cls.from_laurent({exp: coeff})

    @classmethod
    def parse(cls, text: str) -> "RationalFunction":
        """Parse the canonical grammar (``q`` stands for ``v^-2``)."""
        return _Parser(text).parse()

    @property
    def numerator(self) -> List[int]:
        """Numerator coefficients in increasing degree."""
        return [int(c) for c in reversed(self._num)]

    @property
    def denominator(self) -> List[int]:
        """Denominator coefficients in increasing degree."""
        return [int(c) for c in reversed(self._den)]

    def is_zero(self) -> bool:
        return not self._num

    def is_polynomial(self) -> bool:
        return self._den == _ONE

    def is_laurent(self) -> bool:
        """True when the denominator is a bare power of v."""
        return self._den[0] == 1 and _is_monomial(self._den)

    def laurent_terms(self) -> Dict[int, int]:
        """Exponent -> coefficient map; raises ValueError if not a Laurent polynomial."""
        if not self.is_laurent():
            raise ValueError(f"{self} is not a Laurent polynomial")
        return _dup_terms(self._num, -(len(self._den) - 1))

    def has_constant_term(self) -> bool:
        return bool(self.laurent_terms().get(0, 0))

    def bar(self) -> "RationalFunction":
        """Substitute v -> 1/v."""
        if not self._num:
            return self
        a, b = len(self._num) - 1, len(self._den) - 1
        num = list(reversed(self._num))
        den = list(reversed(self._den))
        if b >= a:
            num = dup_lshift(num, b - a, ZZ)
        else:
            den = dup_lshift(den, a - b, ZZ)
        return RationalFunction._make(*_reduce(num, den))

    def to_qpoly(self) -> Dict[int, int]:
        """Rewrite as a polynomial in q = v^-2; raises ValueError otherwise."""
        terms = self.laurent_terms()
        out = {}
        for exp, coeff in terms.items():
            if exp > 0 or exp % 2:
                raise ValueError(f"{self} is not a polynomial in q")
            out[-exp // 2] = coeff
        return out

    def _coerce(self, other) -> Optional["RationalFunction"]:
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, (int, Fraction)):
            return RationalFunction(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not other._num:
            return self
        if not self._num:
            return other
        if self._den == other._den:
            if self._den == _ONE:
                return RationalFunction._make(
                    tuple(dup_add(list(self._num), list(other._num), ZZ)), _ONE
                )
            return RationalFunction._make(
                *_reduce(dup_add(list(self._num), list(other._num), ZZ), list(self._den))
            )
        num = dup_add(
            dup_mul(list(self._num), list(other._den), ZZ),
            dup_mul(list(other._num), list(self._den), ZZ),
            ZZ,
        )
        den = dup_mul(list(self._den), list(other._den), ZZ)
        return RationalFunction._make(*_reduce(num, den))

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction._make(tuple(dup_neg(list(self._num), ZZ)), self._den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not self._num or not other._num:
            return RationalFunction._make((), _ONE)
        num = dup_mul(list(self._num), list(other._num), ZZ)
        den = dup_mul(list(self._den), list(other._den), ZZ)
        if den == [1]:
            return RationalFunction._make(tuple(num), _ONE)
        return RationalFunction._make(*_reduce(num, den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not other._num:
            raise ZeroDivisionError("division by the zero rational function")
        num = dup_mul(list(self._num), list(other._den), ZZ)
        den = dup_mul(list(self._den), list(other._num), ZZ)
        return RationalFunction._make(*_reduce(num, den))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, exponent: int):
        if exponent < 0:
            return RationalFunction(1) / (self ** (-exponent))
        result = RationalFunction(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __bool__(self) -> bool:
        return bool(self._num)

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._num == other._num and self._den == other._den

    def __hash__(self) -> int:
        return hash((self._num, self._den))

    def __str__(self) -> str:
        if not self._num:
            return "0"
        if self.is_laurent():
            return format_terms(self.laurent_terms())
        num_terms = _dup_terms(self._num)
        den_terms = _dup_terms(self._den)
        num = format_terms(num_terms)
        den = format_terms(den_terms)
        if len(num_terms) > 1:
            num = f"({num})"
        if len(den_terms) > 1 or (den_terms.get(0) is None and len(self._den) > 1):
            den = f"({den})"
        return f"{num}/{den}"

    def __repr__(self) -> str:
        return f"RationalFunction('{self}')"


V = RationalFunction.monomial(1)


def format_qpoly(terms: Dict[int, int]) -> str:
    """Render a polynomial in q, e.g. ``1+2q+q^2``."""
    return format_terms(terms, "q")


def parse_qpoly(text: str) -> Dict[int, int]:
    """Parse a polynomial in q into an exponent -> coefficient map."""
    return RationalFunction.parse(text).to_qpoly()


_TOKEN = re.compile(r"\s*(?:(\d+)|([vq])|(.))")


class _Parser:
    """Recursive-descent parser for expressions in v and q."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _tokenize(self, text: str) -> List[str]:
        tokens = []
        for number, var, other in _TOKEN.findall(text.replace("{", "(").replace("}", ")")):
            tok = number or var or other
            if tok.strip():
                tokens.append(tok)
        return tokens

    def _peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> str:
        tok = self._peek()
        if tok is None:
            raise MalformedInputError(f"unexpected end of expression in {self.text!r}")
        self.pos += 1
        return tok

    def parse(self) -> RationalFunction:
        if not self.tokens:
            raise MalformedInputError("empty expression")
        value = self._expr()
        if self._peek() is not None:
            raise MalformedInputError(
                f"unexpected {self._peek()!r} in {self.text!r}"
            )
        return value

    def _expr(self) -> RationalFunction:
        value = self._term()
        while self._peek() in ("+", "-"):
            op = self._next()
            rhs = self._term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def _term(self) -> RationalFunction:
        value = self._unary()
        while True:
            tok = self._peek()
            if tok in ("*", "/"):
                self._next()
                rhs = self._unary()
                if tok == "/":
                    try:
                        value = value / rhs
                    except ZeroDivisionError as exc:
                        raise MalformedInputError(f"zero denominator in {self.text!r}") from exc
                else:
                    value = value * rhs
            elif tok is not None and (tok.isdigit() or tok in ("v", "q", "(")):
                value = value * self._power()
            else:
                return value

    def _unary(self) -> RationalFunction:
        tok = self._peek()
        if tok == "-":
            self._next()
            return -self._unary()
        if tok == "+":
            self._next()
            return self._unary()
        return self._power()

    def _power(self) -> RationalFunction:
        base = self._atom()
        if self._peek() == "^":
            self._next()
            exponent = self._exponent()
            try:
                return base**exponent
            except ZeroDivisionError as exc:
                raise MalformedInputError(f"zero to a negative power in {self.text!r}") from exc
        return base

    def _exponent(self) -> int:
        tok = self._next()
        if tok == "(":
            value = self._exponent()
            if self._next() != ")":
                raise MalformedInputError(f"unbalanced exponent in {self.text!r}")
            return value
        sign = 1
        while tok in ("-", "+"):
            sign = -sign if tok == "-" else sign
            tok = self._next()
        if not tok.isdigit():
            raise MalformedInputError(f"bad exponent {tok!r} in {self.text!r}")
        return sign * int(tok)

    def _atom(self) -> RationalFunction:
        tok = self._next()
        if tok.isdigit():
            return RationalFunction(int(tok))
        if tok == "v":
            return V
        if tok == "q":
            return RationalFunction.monomial(-2)
        if tok == "(":
            value = self._expr()
            if self._next() != ")":
                raise MalformedInputError(f"unbalanced parentheses in {self.text!r}")
            return value
        raise MalformedInputError(f"unexpected {tok!r} in {self.text!r}")


class FieldMatrix:
    """Rectangular matrix over an exact field. Instances are immutable."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries: Sequence[Sequence], cols: Optional[int] = None):
        rows = tuple(tuple(row) for row in entries)
        width = len(rows[0]) if rows else (cols or 0)
        if cols is not None and rows and width != cols:
            raise MalformedInputError(f"expected {cols} columns, got {width}")
        if any(len(row) != width for row in rows):
            raise MalformedInputError("ragged matrix rows")
        self.entries = rows
        self.rows = len(rows)
        self.cols = width

    @classmethod
    def identity(cls, n: int, one=None) -> "FieldMatrix":
        one = RationalFunction(1) if one is None else one
        zero = one - one
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)], n)

    @classmethod
    def build(cls, rows: int, cols: int, entry: Callable[[int, int], object]):
        return cls([[entry(i, j) for j in range(cols)] for i in range(rows)], cols)

    def __getitem__(self, index: Tuple[int, int]):
        i, j = index
        return self.entries[i][j]

    def row(self, i: int) -> Tuple:
        return self.entries[i]

    def column(self, j: int) -> Tuple:
        return tuple(row[j] for row in self.entries)

    def __iter__(self) -> Iterator[Tuple]:
        return iter(self.entries)

    def transpose(self) -> "FieldMatrix":
        return FieldMatrix([self.column(j) for j in range(self.cols)], self.rows)

    def map(self, func: Callable) -> "FieldMatrix":
        return FieldMatrix([[func(x) for x in row] for row in self.entries], self.cols)

    def apply(self, vector: Sequence) -> List:
        """Matrix times column vector."""
        if len(vector) != self.cols:
            raise MalformedInputError("dimension mismatch in matrix-vector product")
        out = []
        for row in self.entries:
            acc = None
            for a, x in zip(row, vector):
                if a and x:
                    acc = a * x if acc is None else acc + a * x
            out.append(acc if acc is not None else _zero_like(self, vector))
        return out

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        if self.cols != other.rows:
            raise MalformedInputError("dimension mismatch in matrix product")
        columns = [other.column(j) for j in range(other.cols)]
        return FieldMatrix(
            [self.apply(col) for col in columns], self.rows
        ).transpose() if other.cols else FieldMatrix([[] for _ in range(self.rows)], 0)

    def is_identity(self) -> bool:
        return self.rows == self.cols and all(
            (x == 1) if i == j else not x
            for i, row in enumerate(self.entries)
            for j, x in enumerate(row)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        body = "; ".join(", ".join(str(x) for x in row) for row in self.entries)
        return f"FieldMatrix([{body}])"


def _zero_like(matrix: FieldMatrix, vector: Sequence = ()):
    for row in matrix.entries:
        for x in row:
            return x - x
    for x in vector:
        return x - x
    return RationalFunction(0)


def rref(matrix: FieldMatrix) -> Tuple[List[List], List[int]]:
    """Reduced row echelon form with the first-nonzero pivot rule.

    Returns the reduced rows and the pivot columns.
    """
    rows = [list(row) for row in matrix.entries]
    pivots: List[int] = []
    piv_r = 0
    for piv_c in range(matrix.cols):
        for i_row in range(piv_r, matrix.rows):
            if rows[i_row][piv_c]:
                break
        else:
            continue
        if i_row != piv_r:
            rows[piv_r], rows[i_row] = rows[i_row], rows[piv_r]
        fp = rows[piv_r][piv_c]
        if fp != 1:
            rows[piv_r] = [x / fp if x else x for x in rows[piv_r]]
        pivot_row = rows[piv_r]
        for r in range(matrix.rows):
            if r == piv_r:
                continue
            fr = rows[r][piv_c]
            if not fr:
                continue
            rows[r] = [
                x - fr * p if p else x for x, p in zip(rows[r], pivot_row)
            ]
        pivots.append(piv_c)
        piv_r += 1
        if piv_r == matrix.rows:
            break
    return rows, pivots


def rank(matrix: FieldMatrix) -> int:
    return len(rref(matrix)[1])


def kernel(matrix: FieldMatrix) -> List[List]:
    """Basis of the right kernel, one vector per free column, in echelon form."""
    reduced, pivots = rref(matrix)
    zero = _zero_like(matrix)
    one = zero + 1
    free = [c for c in range(matrix.cols) if c not in set(pivots)]
    basis = []
    for f in free:
        vec = [zero] * matrix.cols
        vec[f] = one
        for i, p in enumerate(pivots):
            vec[p] = -reduced[i][f]
        basis.append(vec)
    return basis


def solve(matrix: FieldMatrix, rhs: Sequence) -> Optional[List]:
    """One exact solution of ``matrix * x = rhs``, or None when inconsistent."""
    if len(rhs) != matrix.rows:
        raise MalformedInputError("right-hand side has the wrong length")
    augmented = FieldMatrix(
        [list(row) + [b] for row, b in zip(matrix.entries, rhs)], matrix.cols + 1
    )
    reduced, pivots = rref(augmented)
    if pivots and pivots[-1] == matrix.cols:
        return None
    zero = _zero_like(augmented)
    solution = [zero] * matrix.cols
    for i, p in enumerate(pivots):
        solution[p] = reduced[i][matrix.cols]
    return solution


def invert(matrix: FieldMatrix) -> FieldMatrix:
    """Exact inverse; raises SingularMatrixError when none exists."""
    n = matrix.rows
    if matrix.cols != n:
        raise MalformedInputError("only square matrices can be inverted")
    if n == 0:
        return matrix
    zero = _zero_like(matrix)
    one = zero + 1
    augmented = FieldMatrix(
        [
            list(row) + [one if i == j else zero for j in range(n)]
            for i, row in enumerate(matrix.entries)
        ],
        2 * n,
    )
    reduced, pivots = rref(augmented)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise SingularMatrixError(f"singular {n}x{n} matrix")
    return FieldMatrix([row[n:] for row in reduced[:n]], n)
