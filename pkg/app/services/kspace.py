"""The graded space K(chi): cosets, the tau function and the bilinear form."""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from app.core.config import settings
from app.core.exceptions import InvariantViolation, MalformedInputError
from app.services.exactfield import (
    V,
    FieldMatrix,
    RationalFunction,
    kernel,
    rank,
)
from app.services.rootsys import (
    RootSubsystem,
    Vector,
    WeylElement,
    format_vector,
)

logger = logging.getLogger(__name__)

_ZERO = RationalFunction(0)


class KVector:
    """A finitely supported map from coset labels to Q(v)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Optional[Dict[Vector, RationalFunction]] = None):
        self.coeffs: Dict[Vector, RationalFunction] = {
            label: RationalFunction(c) for label, c in (coeffs or {}).items() if c
        }

    @classmethod
    def basis(cls, label: Vector, coeff=1) -> "KVector":
        return cls({label: RationalFunction(coeff)})

    def is_zero(self) -> bool:
        return not self.coeffs

    def support(self) -> FrozenSet[Vector]:
        return frozenset(self.coeffs)

    def items(self) -> Iterator[Tuple[Vector, RationalFunction]]:
        return iter(self.coeffs.items())

    def get(self, label: Vector) -> RationalFunction:
        return self.coeffs.get(label, _ZERO)

    def __add__(self, other: "KVector") -> "KVector":
        out = dict(self.coeffs)
        for label, c in other.coeffs.items():
            out[label] = out.get(label, _ZERO) + c
        return KVector(out)

    def __neg__(self) -> "KVector":
        return KVector({label: -c for label, c in self.coeffs.items()})

    def __sub__(self, other: "KVector") -> "KVector":
        return self + (-other)

    def __rmul__(self, k) -> "KVector":
        k = RationalFunction(k)
        if not k:
            return KVector()
        return KVector({label: k * c for label, c in self.coeffs.items()})

    def map_labels(self, func) -> "KVector":
        out: Dict[Vector, RationalFunction] = {}
        for label, c in self.coeffs.items():
            target = func(label)
            out[target] = out.get(target, _ZERO) + c
        return KVector(out)

    def bar(self) -> "KVector":
        return KVector({label: c.bar() for label, c in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, KVector):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(frozenset(self.coeffs.items()))

    def __repr__(self) -> str:
        return f"KVector({format_kvector(self)})"


def format_label(label: Vector) -> str:
    return f"[{format_vector(label)}]"


def format_kvector(x: KVector, order: Optional[Iterable[Vector]] = None) -> str:
    """Render ``c1[label1] + c2[label2]``, following ``order`` when given."""
    if x.is_zero():
        return "0"
    labels = list(order) if order is not None else sorted(x.coeffs)
    seen = set(labels)
    labels += sorted(label for label in x.coeffs if label not in seen)
    parts = []
    for label in labels:
        c = x.coeffs.get(label)
        if c is None:
            continue
        text = str(c)
        if text == "1":
            parts.append(format_label(label))
        elif text == "-1":
            parts.append(f"-{format_label(label)}")
        elif "+" in text[1:] or "-" in text[1:] or "/" in text:
            parts.append(f"({text}){format_label(label)}")
        else:
            parts.append(f"{text}{format_label(label)}")
    out = parts[0]
    for part in parts[1:]:
        out += f" - {part[1:]}" if part.startswith("-") else f" + {part}"
    return out


@dataclass(frozen=True)
class _Masks:
    two: int
    zero: int


def _popcount(x: int) -> int:
    return bin(x).count("1")


class GradedContext:
    """K(chi) for a root subsystem and a character.

    Cosets of W/W(chi) are labeled by their orbit points ``w*chi`` and kept in
    canonical order (representative length, then label).
    """

    def __init__(self, sub: RootSubsystem, chi: Vector, e_mode: Optional[str] = None):
        self.sub = sub
        self.rs = sub.rs
        self.chi = chi
        self.e_mode = e_mode or settings.E_MODE
        if self.e_mode not in ("lusztig", "one"):
            raise MalformedInputError(f"unknown e-mode {self.e_mode!r}")
        self.r2: Tuple[int, ...] = tuple(sorted(sub.r_n(chi, 2)))
        self.r0: Tuple[int, ...] = tuple(sorted(sub.r_n(chi, 0)))
        self.c = len(self.r2) - len(self.r0)
        cosets = sub.cosets(chi)
        self.labels: List[Vector] = [c.label for c in cosets]
        self.representatives: List[WeylElement] = [c.representative for c in cosets]
        self.position: Dict[Vector, int] = {
            label: k for k, label in enumerate(self.labels)
        }
        members = sub.coset_members(chi)
        self._member_masks: List[List[_Masks]] = [
            [self._masks(w) for w in members[label]] for label in self.labels
        ]
        self._rep_masks = [self._masks(w) for w in self.representatives]
        self._entries: Dict[Tuple[int, int], RationalFunction] = {}
        self.e = (
            RationalFunction(1)
            if self.e_mode == "one"
            else (1 - V**2) ** (-sub.rank)
        )
        logger.debug(
            f"Context {sub.cartan_type} chi=({format_vector(chi)}): "
            f"{len(self.labels)} cosets, c={self.c}"
        )

    def __len__(self) -> int:
        return len(self.labels)

    def _masks(self, w: WeylElement) -> _Masks:
        positive = self.rs.is_positive
        two = 0
        for bit, i in enumerate(self.r2):
            if positive(w.perm[i]):
                two |= 1 << bit
        zero = 0
        for bit, i in enumerate(self.r0):
            if positive(w.perm[i]):
                zero |= 1 << bit
        return _Masks(two, zero)

    def tau(self, w1: WeylElement, w2: WeylElement) -> int:
        """|r2(w1) xor r2(w2)| - |r0(w1) xor r0(w2)|."""
        a, b = self._masks(w1), self._masks(w2)
        return _popcount(a.two ^ b.two) - _popcount(a.zero ^ b.zero)

    def entry(self, i: int, j: int) -> RationalFunction:
        """Form value on the basis cosets at positions ``i`` and ``j``."""
        key = (i, j)
        value = self._entries.get(key)
        if value is not None:
            return value
        rep = self._rep_masks[j]
        terms: Dict[int, int] = {}
        for m in self._member_masks[i]:
            t = _popcount(m.two ^ rep.two) - _popcount(m.zero ^ rep.zero)
            terms[t] = terms.get(t, 0) + (-1 if t % 2 else 1)
        value = RationalFunction.from_laurent(terms) * self.e
        self._entries[key] = value
        return value

    def basis_vector(self, label: Vector, coeff=1) -> KVector:
        if label not in self.position:
            raise MalformedInputError(f"{format_label(label)} is not a coset of this context")
        return KVector.basis(label, coeff)

    def pair(self, x: KVector, y: KVector) -> RationalFunction:
        """The bilinear form (x : y)."""
        total = _ZERO
        position = self.position
        for a, ca in x.items():
            i = position[a]
            for b, cb in y.items():
                g = self.entry(i, position[b])
                if g:
                    total = total + ca * cb * g
        return total

    def pair_with_basis(self, x: KVector, j: int) -> RationalFunction:
        total = _ZERO
        for a, ca in x.items():
            g = self.entry(self.position[a], j)
            if g:
                total = total + ca * g
        return total

    def in_radical(self, x: KVector) -> bool:
        """True when x pairs to zero with every coset."""
        return all(not self.pair_with_basis(x, j) for j in range(len(self.labels)))

    def beta_vec(self, x: KVector) -> KVector:
        return x.bar()

    def sigma_vec(self, x: KVector) -> KVector:
        """Relabel through the longest element: w*chi -> w0*w*chi."""
        w0 = self.sub.w0
        return x.map_labels(lambda label: w0.act(self.rs, label))

    def from_dense(self, values: Iterable[RationalFunction]) -> KVector:
        return KVector(dict(zip(self.labels, values)))


def tau(ctx: GradedContext, w1: WeylElement, w2: WeylElement) -> int:
    return ctx.tau(w1, w2)


def gram(ctx: GradedContext) -> FieldMatrix:
    """The full Gram matrix in canonical coset order."""
    n = len(ctx)
    return FieldMatrix.build(n, n, ctx.entry)


def radical(ctx: GradedContext) -> List[KVector]:
    """Kernel basis of the Gram matrix."""
    basis = [ctx.from_dense(v) for v in kernel(gram(ctx))]
    logger.info(f"Radical of dimension {len(basis)} over {len(ctx)} cosets")
    return basis


def irr_count(ctx: GradedContext) -> int:
    """dim K(chi) - dim Rad."""
    return rank(gram(ctx))


def beta_vec(ctx: GradedContext, x: KVector) -> KVector:
    return ctx.beta_vec(x)


def sigma_vec(ctx: GradedContext, x: KVector) -> KVector:
    return ctx.sigma_vec(x)


def _check_nilradical(ctx: GradedContext, sub_ctx: GradedContext, p_roots: FrozenSet[int]):
    rs = ctx.rs
    ambient = set(ctx.sub.roots)
    levi = set(sub_ctx.sub.roots)
    if not p_roots <= ambient or p_roots & levi:
        raise MalformedInputError("nilradical roots must lie outside the Levi")
    opposite = {rs.neg(i) for i in p_roots}
    if levi | set(p_roots) | opposite != ambient or opposite & set(p_roots):
        raise MalformedInputError("Levi and nilradical do not split the root system")
    for a in p_roots:
        for b in set(p_roots) | levi:
            c = rs.root_sum(a, b)
            if c is not None and c in ambient and c not in p_roots:
                raise MalformedInputError("nilradical roots are not closed")


def parabolic_element(
    ctx: GradedContext,
    p_roots: FrozenSet[int],
    functional: Optional[Vector] = None,
) -> WeylElement:
    """Minimal-length w with w(p_roots) positive.

    When the defining functional of the parabolic is known the element is the
    one moving it to the dominant chamber.
    """
    perm_positive = ctx.rs.is_positive
    if functional is not None:
        w = ctx.sub.to_dominant(functional)[1]
        if all(perm_positive(w.perm[i]) for i in p_roots):
            return w
        raise InvariantViolation("functional does not define the given parabolic")
    for w in ctx.sub.elements:
        if all(perm_positive(w.perm[i]) for i in p_roots):
            return w
    raise InvariantViolation("no Weyl element makes the nilradical positive")


def induce(
    ctx: GradedContext,
    sub_ctx: GradedContext,
    p_roots: Iterable[int],
    x: KVector,
    functional: Optional[Vector] = None,
) -> KVector:
    """Parabolic induction from the K-space of a Levi: label -> w_p * label."""
    p_roots = frozenset(p_roots)
    _check_nilradical(ctx, sub_ctx, p_roots)
    w_p = parabolic_element(ctx, p_roots, functional)

    def target(label: Vector) -> Vector:
        image = w_p.act(ctx.rs, label)
        if image not in ctx.position:
            raise InvariantViolation(f"induced label {format_label(image)} is not a coset")
        return image

    return x.map_labels(target)
