"""Orbit parameters of the graded piece g_2(chi).

Each orbit is recorded by a semisimple element ``s`` whose bigrading with
``chi`` gives the Levi ``l_s`` and the two parabolics ``p_{s,+}`` and
``p_{s,-}``. Parameters are found by matching weighted Dynkin diagrams of
standard Levis against the W-orbit of ``chi``.
"""

import logging
import string
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from app.core.metrics import timed_stage
from app.services.kspace import GradedContext
from app.services.liealg import ChevalleyBasis, chevalley
from app.services.rootsys import RootSubsystem, Vector, format_vector, sub

logger = logging.getLogger(__name__)


@dataclass
class OrbitParam:
    """One orbit of G(chi) on g_2(chi)."""

    s: Vector
    levi_roots: FrozenSet[int]
    u_plus_roots: FrozenSet[int]
    u_minus_roots: FrozenSet[int]
    dim: int
    is_open: bool = False
    label: str = ""
    levi_type: str = ""
    diagram: Tuple[int, ...] = ()
    meta: Dict[str, Optional[str]] = field(default_factory=dict)

    def __repr__(self) -> str:
        return f"OrbitParam({self.label or self.dim}: s=({format_vector(self.s)}))"


def standard_levi(base: RootSubsystem, simple: Sequence[int]) -> RootSubsystem:
    """Roots of ``base`` spanned by the given simple roots of ``base``."""
    chosen = set(simple)
    outside = [k for k, i in enumerate(base.simple) if i not in chosen]
    roots = [
        i for i in base.roots if all(not base.coordinates(i)[k] for k in outside)
    ]
    return base.rs.subsystem(roots)


def orbit_dim(ctx: GradedContext, o: OrbitParam) -> int:
    """dim p_2 - dim p_0 + dim g_0 for the parabolic p_{s,+}; Cartan terms cancel."""
    rs = ctx.rs
    parabolic = o.levi_roots | o.u_plus_roots
    p2 = sum(1 for i in parabolic if rs.pairing(i, ctx.chi) == 2)
    p0 = sum(1 for i in parabolic if rs.pairing(i, ctx.chi) == 0)
    return p2 - p0 + len(ctx.r0)


def build_param(ctx: GradedContext, s: Vector) -> OrbitParam:
    """Bigrade the roots of the context by (chi, s)."""
    rs = ctx.rs
    d = sub(s, ctx.chi)
    levi, u_plus, u_minus = set(), set(), set()
    for i in ctx.sub.roots:
        value = rs.pairing(i, d)
        if value > 0:
            u_plus.add(i)
        elif value < 0:
            u_minus.add(i)
        else:
            levi.add(i)
    levi_sub = rs.subsystem(levi)
    o = OrbitParam(
        s=s,
        levi_roots=frozenset(levi),
        u_plus_roots=frozenset(u_plus),
        u_minus_roots=frozenset(u_minus),
        dim=0,
        is_open=len(levi) == len(ctx.sub.roots),
        levi_type=levi_sub.cartan_type,
        diagram=tuple(int(rs.pairing(i, s)) for i in levi_sub.simple),
    )
    o.dim = orbit_dim(ctx, o)
    return o


def canonical_s(ctx: GradedContext, s: Vector) -> Vector:
    """Representative of s up to W(chi): its dominant point for the chi-stabilizer."""
    return ctx.rs.subsystem(ctx.r0).to_dominant(s)[0]


def parameter_set(
    ctx: GradedContext, lie: Optional[ChevalleyBasis] = None
) -> List[OrbitParam]:
    """All orbit parameters of the context, sorted by (dim, s) and labeled."""
    lie = lie or chevalley(ctx.rs)
    rs, base = ctx.rs, ctx.sub
    with timed_stage("orbit_search", cosets=len(ctx)):
        points = base.orbit(ctx.chi)
        inverses = {point: base.inverse(u) for point, u in points.items()}
        found: Dict[Vector, OrbitParam] = {}
        for mask in range(1 << base.rank):
            simple = [i for k, i in enumerate(base.simple) if mask >> k & 1]
            levi = standard_levi(base, simple)
            for diagram in lie.wdd_enumerate(levi):
                support = diagram.triple.support
                for point, u_inv in inverses.items():
                    # point in h + central_directions(triple)
                    if any(rs.pairing(a, point) != 2 for a in support):
                        continue
                    s = canonical_s(ctx, u_inv.act(rs, diagram.h))
                    if s not in found:
                        found[s] = build_param(ctx, s)
        params = sorted(found.values(), key=lambda o: (o.dim, o.s))
    assign_labels(params)
    opened = [o for o in params if o.is_open]
    logger.info(
        f"Found {len(params)} orbits for {base.cartan_type} "
        f"chi=({format_vector(ctx.chi)}), {len(opened)} open"
    )
    return params


def assign_labels(params: List[OrbitParam]) -> None:
    """Dimension, plus a letter when several orbits share it."""
    by_dim: Dict[int, List[OrbitParam]] = {}
    for o in params:
        by_dim.setdefault(o.dim, []).append(o)
    for dim, group in by_dim.items():
        if len(group) == 1:
            group[0].label = str(dim)
            continue
        for letter, o in zip(string.ascii_lowercase, group):
            o.label = f"{dim}{letter}"


def _is_g2_subregular(levi: RootSubsystem, o: OrbitParam) -> bool:
    rs = levi.rs
    values = dict(zip(levi.simple, o.diagram))
    long_norm = max(rs.norms[i] for i in levi.simple)
    return all(
        values[i] == (2 if rs.norms[i] == long_norm else 0) for i in levi.simple
    )


def _is_f4_a3(levi: RootSubsystem, o: OrbitParam) -> bool:
    rs = levi.rs
    values = dict(zip(levi.simple, o.diagram))
    marked = [i for i in levi.simple if values[i]]
    if len(marked) != 1 or values[marked[0]] != 2:
        return False
    i = marked[0]
    long_norm = max(rs.norms[k] for k in levi.simple)
    if rs.norms[i] != long_norm:
        return False
    row = levi.cartan_matrix[levi.simple.index(i)]
    return any(
        row[k] and rs.norms[j] != long_norm for k, j in enumerate(levi.simple)
    )


def component_label(levi: RootSubsystem, o: OrbitParam, block_size: int) -> Optional[str]:
    """Component group of the orbit; None when it cannot be named."""
    if levi.cartan_type == "G2" and _is_g2_subregular(levi, o):
        return "S3"
    if levi.cartan_type == "F4" and _is_f4_a3(levi, o):
        return "S4"
    if block_size == 1:
        return "1"
    if block_size == 2:
        return "Z/2Z"
    if block_size > 2 and block_size & (block_size - 1) == 0:
        return f"(Z/2Z)^{block_size.bit_length() - 1}"
    return None


def decorate(
    ctx: GradedContext,
    o: OrbitParam,
    block_size: int = 1,
    saturation: Optional[str] = None,
) -> OrbitParam:
    """Attach display metadata: component group and saturation label."""
    levi = ctx.rs.subsystem(o.levi_roots)
    o.meta["component_group"] = component_label(levi, o, block_size)
    o.meta["saturation"] = saturation
    if o.meta["component_group"] is None:
        logger.warning(f"No component group known for orbit {o.label}")
    return o
