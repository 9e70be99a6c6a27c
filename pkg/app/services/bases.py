"""Standard and canonical bases of K(chi)/Rad and the data derived from them.

For each sign the non-open orbits contribute induced elements ``Z'``; the
bar-invariant combinations ``mu`` of those elements give ``U'``; the open
orbit is filled by projecting the other sign's ``mu`` onto ``span(Z')``.
The coefficient tables give the multiplicity matrix, its Kazhdan-Lusztig
normalization and the IM involution on parameters.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Tuple

from app.core.budget import TimeBudget, get_budget
from app.core.config import settings
from app.core.exceptions import InvariantViolation
from app.core.metrics import timed_stage
from app.services.exactfield import (
    V,
    FieldMatrix,
    RationalFunction,
    invert,
    solve,
)
from app.services.kspace import GradedContext, KVector, induce, irr_count
from app.services.liealg import ChevalleyBasis, chevalley
from app.services.orbits import (
    OrbitParam,
    decorate,
    parameter_set,
    standard_levi,
)
from app.services.rootsys import RootSubsystem, Vector, format_vector, sub

logger = logging.getLogger(__name__)

_ZERO = RationalFunction(0)
_ONE = RationalFunction(1)


@dataclass
class BasisElement:
    """One element of a Z or U family, attached to an orbit and a local system."""

    orbit: OrbitParam
    local_index: int
    vec: KVector
    label: str = ""
    source: Optional[int] = None


@dataclass
class MuBasis:
    """Bar-invariant combinations of the induced elements of one sign.

    ``c[i][j]`` is the coefficient of ``zprime[j]`` in ``mu[i]``; ``a`` is the
    matrix of the bar involution on span(Z') modulo its orthogonal.
    """

    mu: List[KVector]
    c: List[List[RationalFunction]]
    a: FieldMatrix
    gram: FieldMatrix
    gram_inverse: FieldMatrix


@dataclass
class OpenCandidate:
    source: int
    perp: KVector
    mu: KVector
    coeffs: List[RationalFunction]


@dataclass
class BasisFamily:
    """The two pairs of bases (Z+, U+) and (Z-, U-) of one context."""

    ctx: GradedContext
    orbits: List[OrbitParam]
    zminus: List[BasisElement]
    uminus: List[BasisElement]
    zplus: List[BasisElement]
    uplus: List[BasisElement]
    n_primed: int
    mu_minus: Optional[MuBasis] = None
    mu_plus: Optional[MuBasis] = None
    open_minus: List[OpenCandidate] = field(default_factory=list)
    open_plus: List[OpenCandidate] = field(default_factory=list)

    @property
    def labels(self) -> List[str]:
        return [el.label for el in self.zminus]

    @property
    def dims(self) -> List[int]:
        return [el.orbit.dim for el in self.zminus]

    def open_block(self, sign: str) -> List[BasisElement]:
        family = self.zplus if sign == "+" else self.zminus
        return family[self.n_primed :]

    def block_sizes(self) -> Dict[str, int]:
        sizes: Dict[str, int] = {}
        for el in self.zminus:
            sizes[el.orbit.label] = sizes.get(el.orbit.label, 0) + 1
        return sizes

    def __len__(self) -> int:
        return len(self.zminus)


@dataclass
class MultiplicityMatrix:
    """N over Z[v] (coefficient of Z-_i in U-_j) and its KL normalization."""

    labels: List[str]
    dims: List[int]
    n_matrix: FieldMatrix
    n_plus: FieldMatrix
    p_matrix: Optional[List[List[Dict[int, int]]]] = None
    signs: Optional[List[int]] = None


def local_suffix(k: int, m: int) -> str:
    """Suffix of the k-th local system on an orbit carrying m of them."""
    if m == 1:
        return ""
    if k == 0:
        return "t"
    if k == 1:
        return "s"
    return f"_{k + 1}"


def base_normalization(sub_system: RootSubsystem) -> RationalFunction:
    """v^N / sum over W of v^(2 l(w)), N the number of positive roots."""
    poincare: Dict[int, int] = {}
    for w in sub_system.elements:
        poincare[2 * w.length] = poincare.get(2 * w.length, 0) + 1
    return RationalFunction.monomial(len(sub_system.positive)) / (
        RationalFunction.from_laurent(poincare)
    )


def mu_basis(ctx: GradedContext, zprime: List[BasisElement]) -> MuBasis:
    """Bar-invariant basis of span(Z') modulo its orthogonal, unitriangular in Z'."""
    n = len(zprime)
    vecs = [el.vec for el in zprime]
    dims = [el.orbit.dim for el in zprime]
    rows = [[_ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            value = ctx.pair(vecs[i], vecs[j])
            if value and zprime[i].orbit is not zprime[j].orbit:
                raise InvariantViolation(
                    f"induced elements {zprime[i].label} and {zprime[j].label} "
                    "of distinct orbits are not orthogonal"
                )
            rows[i][j] = rows[j][i] = value
    gram_matrix = FieldMatrix(rows, n)
    gram_inverse = invert(gram_matrix)
    bars = [x.bar() for x in vecs]
    bar_pairs = FieldMatrix.build(n, n, lambda i, j: ctx.pair(bars[i], vecs[j]))
    a = bar_pairs @ gram_inverse
    for i in range(n):
        for j in range(n):
            entry = a[i, j]
            if i == j:
                if entry != 1:
                    raise InvariantViolation(f"diagonal bar coefficient {entry} at {i}")
            elif entry and not dims[j] < dims[i]:
                raise InvariantViolation(f"bar matrix is not triangular at ({i},{j})")
    if not (a.map(lambda x: x.bar()) @ a).is_identity():
        raise InvariantViolation("bar matrix is not an involution")

    c = [[_ONE if i == j else _ZERO for j in range(n)] for i in range(n)]
    for i in range(n):
        lower = sorted((j for j in range(n) if dims[j] < dims[i]), key=lambda j: -dims[j])
        for j in lower:
            r = _ZERO
            for k in range(n):
                if k == j or not dims[j] < dims[k] <= dims[i]:
                    continue
                if c[i][k] and a[k, j]:
                    r = r + c[i][k].bar() * a[k, j]
            c[i][j] = _positive_part(r, zprime[i].label, zprime[j].label)
    mu = []
    for i in range(n):
        total = KVector()
        for j in range(n):
            if c[i][j]:
                total = total + c[i][j] * vecs[j]
        mu.append(total)
    return MuBasis(mu, c, a, gram_matrix, gram_inverse)


def _positive_part(r: RationalFunction, row: str, col: str) -> RationalFunction:
    """The unique p in vZ[v] with p - bar(p) = r."""
    if not r:
        return _ZERO
    if not r.is_laurent() or r.bar() != -r:
        raise InvariantViolation(
            f"bar equation at ({row},{col}) has no solution in vZ[v]: {r}"
        )
    return RationalFunction.from_laurent(
        {e: x for e, x in r.laurent_terms().items() if e > 0}
    )


def open_orbit(
    ctx: GradedContext,
    sources: MuBasis,
    targets: List[BasisElement],
    target_mu: MuBasis,
) -> List[OpenCandidate]:
    """Project the other sign's mu onto span(Z') and keep those leaving the radical."""
    found = []
    for index, mu in enumerate(sources.mu):
        pairs = [ctx.pair(mu, t.vec) for t in targets]
        coeffs = target_mu.gram_inverse.apply(pairs) if targets else []
        projection = KVector()
        for a, t in zip(coeffs, targets):
            if a:
                projection = projection + a * t.vec
        perp = mu - projection
        if not ctx.in_radical(perp):
            found.append(OpenCandidate(index, perp, mu, coeffs))
    return found


def match_open_blocks(
    open_plus: List[OpenCandidate], open_minus: List[OpenCandidate]
) -> List[Tuple[OpenCandidate, OpenCandidate]]:
    """Pair the open candidates of the two signs; both must come from the same sources."""
    plus_sources = [c.source for c in open_plus]
    minus_sources = [c.source for c in open_minus]
    if plus_sources != minus_sources:
        raise InvariantViolation(
            "open-orbit sources differ between signs",
            {"plus": plus_sources, "minus": minus_sources},
        )
    return list(zip(open_plus, open_minus))


def open_orbit_param(orbits: List[OrbitParam]) -> OrbitParam:
    found = [o for o in orbits if o.is_open]
    if len(found) != 1:
        raise InvariantViolation(
            f"expected one open orbit, found {len(found)}",
            {"orbits": [o.label for o in orbits]},
        )
    return found[0]


class FamilyBuilder:
    """Recursive construction of the bases, memoized per Levi root set."""

    def __init__(
        self,
        chi: Vector,
        e_mode: Optional[str] = None,
        lie: Optional[ChevalleyBasis] = None,
        budget: Optional[TimeBudget] = None,
    ):
        self.chi = chi
        self.e_mode = e_mode
        self.lie = lie
        self.budget = budget or get_budget()
        self._memo: Dict[FrozenSet[int], BasisFamily] = {}

    def family(self, sub_system: RootSubsystem) -> BasisFamily:
        cached = self._memo.get(sub_system.key)
        if cached is not None:
            return cached
        self.budget.check(f"family {sub_system.cartan_type}")
        ctx = GradedContext(sub_system, self.chi, self.e_mode)
        lie = self.lie or chevalley(ctx.rs)
        orbits = parameter_set(ctx, lie)
        if not ctx.r2:
            result = self._base_case(ctx, orbits)
        else:
            result = self._recursive(ctx, orbits)
        self._memo[sub_system.key] = result
        return result

    def _base_case(self, ctx: GradedContext, orbits: List[OrbitParam]) -> BasisFamily:
        if len(orbits) != 1 or len(ctx) != 1:
            raise InvariantViolation("character is not central in the base case")
        o = orbits[0]
        vec = base_normalization(ctx.sub) * ctx.basis_vector(ctx.chi)
        el = BasisElement(o, 0, vec, o.label)
        return BasisFamily(ctx, orbits, [el], [el], [el], [el], n_primed=0)

    def _induced(self, ctx: GradedContext, orbits: List[OrbitParam]):
        plus: List[BasisElement] = []
        minus: List[BasisElement] = []
        for o in orbits:
            if o.is_open:
                continue
            levi = self.family(ctx.rs.subsystem(o.levi_roots))
            block_plus = levi.open_block("+")
            block_minus = levi.open_block("-")
            if len(block_plus) != len(block_minus):
                raise InvariantViolation(f"open blocks of the Levi of {o.label} differ")
            m = len(block_plus)
            for k, (ep, em) in enumerate(zip(block_plus, block_minus)):
                label = f"{o.label}{local_suffix(k, m)}"
                zp = induce(ctx, levi.ctx, o.u_plus_roots, ep.vec, sub(o.s, ctx.chi))
                zm = induce(ctx, levi.ctx, o.u_minus_roots, em.vec, sub(ctx.chi, o.s))
                plus.append(BasisElement(o, k, zp, label))
                minus.append(BasisElement(o, k, zm, label))
        return plus, minus

    def _recursive(self, ctx: GradedContext, orbits: List[OrbitParam]) -> BasisFamily:
        with timed_stage("induction", orbits=len(orbits)):
            zplus, zminus = self._induced(ctx, orbits)
        self.budget.check("bar-invariant bases")
        with timed_stage("mu_basis"):
            mu_plus = mu_basis(ctx, zplus)
            mu_minus = mu_basis(ctx, zminus)
        self.budget.check("open orbit")
        with timed_stage("open_orbit"):
            open_plus = open_orbit(ctx, mu_minus, zplus, mu_plus)
            open_minus = open_orbit(ctx, mu_plus, zminus, mu_minus)
        pairs = match_open_blocks(open_plus, open_minus)
        if zminus and (not open_plus or open_plus[0].source != 0):
            raise InvariantViolation("zero orbit element missing from the open block")
        opened = open_orbit_param(orbits)
        m = len(open_plus)
        uplus = [
            BasisElement(el.orbit, el.local_index, mu, el.label)
            for el, mu in zip(zplus, mu_plus.mu)
        ]
        uminus = [
            BasisElement(el.orbit, el.local_index, mu, el.label)
            for el, mu in zip(zminus, mu_minus.mu)
        ]
        for k, (cp, cm) in enumerate(pairs):
            label = f"{opened.label}{local_suffix(k, m)}"
            zplus.append(BasisElement(opened, k, cp.perp, label, cp.source))
            uplus.append(BasisElement(opened, k, cp.mu, label, cp.source))
            zminus.append(BasisElement(opened, k, cm.perp, label, cm.source))
            uminus.append(BasisElement(opened, k, cm.mu, label, cm.source))
        n_primed = len(mu_plus.mu)
        family = BasisFamily(
            ctx,
            orbits,
            zminus,
            uminus,
            zplus,
            uplus,
            n_primed,
            mu_minus,
            mu_plus,
            open_minus,
            open_plus,
        )
        if len(ctx) <= settings.DENSE_RADICAL_LIMIT and irr_count(ctx) != len(family):
            raise InvariantViolation(
                f"{len(family)} basis elements but {irr_count(ctx)} simple modules"
            )
        logger.info(
            f"Bases for {ctx.sub.cartan_type} chi=({format_vector(ctx.chi)}): "
            f"{len(family)} elements, open block of {m}"
        )
        return family


def compute_bases(
    ctx: GradedContext,
    lie: Optional[ChevalleyBasis] = None,
    budget: Optional[TimeBudget] = None,
) -> BasisFamily:
    """Bases of K(chi)/Rad for a context, with decorated orbit metadata."""
    builder = FamilyBuilder(ctx.chi, ctx.e_mode, lie, budget)
    family = builder.family(ctx.sub)
    sizes = family.block_sizes()
    for o in family.orbits:
        decorate(family.ctx, o, sizes.get(o.label, 0))
    return family


def _assemble(
    n: int,
    primed: MuBasis,
    opened: List[OpenCandidate],
) -> FieldMatrix:
    n_primed = len(primed.mu)
    rows = [[_ZERO] * n for _ in range(n)]
    for j in range(n_primed):
        for k in range(n_primed):
            rows[k][j] = primed.c[j][k]
    for q, cand in enumerate(opened):
        j = n_primed + q
        for k, a in enumerate(cand.coeffs):
            rows[k][j] = a
        rows[j][j] = _ONE
    for k in range(n):
        for j in range(n):
            if not rows[k][j].is_polynomial():
                raise InvariantViolation(
                    f"multiplicity entry ({k},{j}) is not a polynomial: {rows[k][j]}"
                )
    return FieldMatrix(rows, n)


def multiplicity_matrix(family: BasisFamily) -> MultiplicityMatrix:
    """N[k][j] = coefficient of Z-_k in U-_j, and the same for the + sign."""
    n = len(family)
    if family.mu_minus is None:
        identity = FieldMatrix.identity(n)
        return MultiplicityMatrix(family.labels, family.dims, identity, identity)
    n_minus = _assemble(n, family.mu_minus, family.open_minus)
    n_plus = _assemble(n, family.mu_plus, family.open_plus)
    return MultiplicityMatrix(family.labels, family.dims, n_minus, n_plus)


def kl_matrix(mult: MultiplicityMatrix) -> MultiplicityMatrix:
    """Strip the dimension shift, substitute q = v^-2 and solve the signs."""
    n = len(mult.labels)
    dims = mult.dims
    shifted: Dict[Tuple[int, int], RationalFunction] = {}
    parity: Dict[int, List[Tuple[int, int]]] = {i: [] for i in range(n)}
    with timed_stage("kl", parameters=n):
        for k in range(n):
            for j in range(n):
                entry = mult.n_matrix[k, j]
                if not entry:
                    continue
                value = entry * RationalFunction.monomial(dims[k] - dims[j])
                try:
                    qpoly = value.to_qpoly()
                except ValueError as exc:
                    raise InvariantViolation(
                        f"entry ({mult.labels[k]},{mult.labels[j]}) = {entry} "
                        "does not normalize to a polynomial in q"
                    ) from exc
                signs = {1 if c > 0 else -1 for c in qpoly.values()}
                if len(signs) != 1:
                    raise InvariantViolation(
                        f"entry ({mult.labels[k]},{mult.labels[j]}) has mixed signs"
                    )
                sign = signs.pop()
                shifted[(k, j)] = value
                parity[k].append((j, sign))
                parity[j].append((k, sign))
        epsilon: List[Optional[int]] = [None] * n
        for start in range(n):
            if epsilon[start] is not None:
                continue
            epsilon[start] = 1
            stack = [start]
            while stack:
                k = stack.pop()
                for j, sign in parity[k]:
                    expected = epsilon[k] * sign
                    if epsilon[j] is None:
                        epsilon[j] = expected
                        stack.append(j)
                    elif epsilon[j] != expected:
                        raise InvariantViolation(
                            f"no consistent sign for {mult.labels[j]}"
                        )
        p = [[{} for _ in range(n)] for _ in range(n)]
        for (k, j), value in shifted.items():
            p[k][j] = (epsilon[k] * epsilon[j] * value).to_qpoly()
    mult.p_matrix = p
    mult.signs = [int(e) for e in epsilon]
    return mult


def im_involution(family: BasisFamily) -> Dict[str, str]:
    """The IM involution on parameter labels."""
    ctx = family.ctx
    if family.mu_minus is None:
        label = family.zminus[0].label
        return {label: label}
    mu_plus = family.mu_plus
    n_primed = family.n_primed
    zprime_plus = family.zplus[:n_primed]
    from_source = {
        cand.source: family.zplus[n_primed + k].label
        for k, cand in enumerate(family.open_plus)
    }
    c_transpose = FieldMatrix(
        [[mu_plus.c[j][k] for j in range(n_primed)] for k in range(n_primed)],
        n_primed,
    )
    mapping: Dict[str, str] = {}
    with timed_stage("im"):
        for i, (z, u) in enumerate(zip(family.zminus, family.uminus)):
            if i < n_primed and i in from_source:
                mapping[z.label] = from_source[i]
                continue
            pairs = [ctx.pair(u.vec, t.vec) for t in zprime_plus]
            coeffs = mu_plus.gram_inverse.apply(pairs)
            in_u = solve(c_transpose, coeffs)
            nonzero = [j for j, b in enumerate(in_u or []) if b]
            if len(nonzero) != 1:
                raise InvariantViolation(
                    f"IM image of {z.label} is not unique ({len(nonzero)} candidates)"
                )
            mapping[z.label] = zprime_plus[nonzero[0]].label
    for x, y in mapping.items():
        if mapping.get(y) != x:
            raise InvariantViolation(f"IM is not an involution at {x} -> {y}")
    logger.info(f"IM involution on {len(mapping)} parameters")
    return mapping


@dataclass
class RegularExpectation:
    """Closed-form bases and KL matrix for a regular character."""

    subsets: List[Tuple[int, ...]]
    z: List[KVector]
    u: List[KVector]
    p: List[List[int]]


def regular_case_expectation(ctx: GradedContext) -> RegularExpectation:
    """Subsets M of the simple roots index the orbits; Z_M' sums over M inside M'."""
    rs = ctx.rs
    simple = ctx.sub.simple
    subsets: List[Tuple[int, ...]] = []
    for size in range(len(simple) + 1):
        subsets.extend(combinations(simple, size))
    points = {
        m: standard_levi(ctx.sub, m).w0.act(rs, ctx.chi) for m in subsets
    }
    z, u = [], []
    for big in subsets:
        total = KVector()
        for small in subsets:
            if set(small) <= set(big):
                total = total + KVector.basis(
                    points[small], V ** (len(big) - len(small))
                )
        z.append(total)
        u.append(KVector.basis(points[big]))
    p = [[int(set(m1) <= set(m2)) for m2 in subsets] for m1 in subsets]
    return RegularExpectation(subsets, z, u, p)


def mirror_family(ctx: GradedContext, family: BasisFamily) -> List[KVector]:
    """Relabel Z- by w*chi -> w*w0*chi."""
    rs = ctx.rs
    flipped = ctx.sub.w0.act(rs, ctx.chi)

    def mirror(label: Vector) -> Vector:
        w = ctx.representatives[ctx.position[label]]
        return w.act(rs, flipped)

    return [el.vec.map_labels(mirror) for el in family.zminus]
