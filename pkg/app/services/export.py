"""Renderers for computed artifacts: text tables, JSON documents, CSV and DOT."""

import csv
import io
import logging
from typing import Dict, List, Optional, Sequence

import networkx as nx

from app.core.exceptions import InvariantViolation
from app.schemas.hecke import (
    BasesDocument,
    DiagramDoc,
    FormDocument,
    KLDocument,
    OrbitDoc,
    OrbitsDocument,
    ParameterDoc,
    WddDocument,
)
from app.services.bases import BasisElement, BasisFamily, MultiplicityMatrix
from app.services.exactfield import format_qpoly
from app.services.kspace import GradedContext, KVector, format_kvector
from app.services.liealg import WeightedDiagram
from app.services.orbits import OrbitParam
from app.services.rootsys import RootSystem, format_vector

logger = logging.getLogger(__name__)


def render_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Left-aligned plain text table with a rule under the header."""
    widths = [len(h) for h in headers]
    for row in rows:
        for k, cell in enumerate(row):
            widths[k] = max(widths[k], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _kvector_doc(ctx: GradedContext, x: KVector) -> Dict[str, str]:
    return {
        format_vector(label): str(x.get(label))
        for label in ctx.labels
        if x.get(label)
    }


def _parameters(family: BasisFamily) -> List[ParameterDoc]:
    return [
        ParameterDoc(label=el.label, orbit=el.orbit.label, dim=el.orbit.dim)
        for el in family.zminus
    ]


def wdd_document(rs: RootSystem, diagrams: Sequence[WeightedDiagram]) -> WddDocument:
    return WddDocument(
        cartan=rs.label,
        diagrams=[
            DiagramDoc(
                values=list(d.values),
                h=format_vector(d.h),
                support=len(d.triple.support),
            )
            for d in diagrams
        ],
    )


def orbits_document(ctx: GradedContext, orbits: Sequence[OrbitParam]) -> OrbitsDocument:
    return OrbitsDocument(
        cartan=ctx.rs.label,
        chi=format_vector(ctx.chi),
        orbits=[
            OrbitDoc(
                label=o.label,
                dim=o.dim,
                s=format_vector(o.s),
                levi_type=o.levi_type,
                diagram=list(o.diagram),
                is_open=o.is_open,
                component_group=o.meta.get("component_group"),
                saturation=o.meta.get("saturation"),
            )
            for o in orbits
        ],
    )


def form_document(ctx: GradedContext, radical_dim: int) -> FormDocument:
    n = len(ctx)
    return FormDocument(
        cartan=ctx.rs.label,
        chi=format_vector(ctx.chi),
        e_mode=ctx.e_mode,
        labels=[format_vector(label) for label in ctx.labels],
        gram=[[str(ctx.entry(i, j)) for j in range(n)] for i in range(n)],
        radical_dim=radical_dim,
    )


def bases_document(family: BasisFamily) -> BasesDocument:
    ctx = family.ctx

    def dump(elements: Sequence[BasisElement]) -> List[Dict[str, str]]:
        return [_kvector_doc(ctx, el.vec) for el in elements]

    return BasesDocument(
        cartan=ctx.rs.label,
        chi=format_vector(ctx.chi),
        parameters=_parameters(family),
        z_minus=dump(family.zminus),
        u_minus=dump(family.uminus),
        z_plus=dump(family.zplus),
        u_plus=dump(family.uplus),
    )


def kl_document(
    family: BasisFamily, mult: MultiplicityMatrix, im: Optional[Dict[str, str]] = None
) -> KLDocument:
    n = len(family)
    ctx = family.ctx
    return KLDocument(
        cartan=ctx.rs.label,
        chi=format_vector(ctx.chi),
        e_mode=ctx.e_mode,
        parameters=_parameters(family),
        N=[[str(mult.n_matrix[k, j]) for j in range(n)] for k in range(n)],
        P=[[format_qpoly(cell) for cell in row] for row in mult.p_matrix or []],
        epsilon=list(mult.signs or []),
        IM={label: im[label] for label in family.labels if label in im} if im else {},
    )


def wdd_text(doc: WddDocument) -> str:
    rows = [[",".join(map(str, d.values)), d.h, str(d.support)] for d in doc.diagrams]
    return render_table(["diagram", "h", "support"], rows)


def orbits_text(doc: OrbitsDocument) -> str:
    rows = [
        [
            o.label,
            str(o.dim),
            o.s,
            o.levi_type,
            o.saturation or "",
            o.component_group or "?",
        ]
        for o in doc.orbits
    ]
    return render_table(
        ["orbit", "dim", "s", "levi", "saturation", "components"], rows
    )


def form_text(doc: FormDocument) -> str:
    rows = [[label] + row for label, row in zip(doc.labels, doc.gram)]
    table = render_table([""] + doc.labels, rows)
    return table + f"radical dimension: {doc.radical_dim}\n"


def form_csv(doc: FormDocument) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([""] + doc.labels)
    for label, row in zip(doc.labels, doc.gram):
        writer.writerow([label] + row)
    return buffer.getvalue()


def bases_text(family: BasisFamily) -> str:
    ctx = family.ctx
    order = ctx.labels
    blocks = []
    for title, elements in (
        ("Z-", family.zminus),
        ("U-", family.uminus),
        ("Z+", family.zplus),
        ("U+", family.uplus),
    ):
        rows = [[el.label, format_kvector(el.vec, order)] for el in elements]
        blocks.append(f"{title}\n" + render_table(["parameter", "element"], rows))
    return "\n".join(blocks)


def kl_text(doc: KLDocument) -> str:
    labels = [p.label for p in doc.parameters]
    parts = [
        "N\n" + render_table([""] + labels, [[a] + r for a, r in zip(labels, doc.N)]),
        "P\n" + render_table([""] + labels, [[a] + r for a, r in zip(labels, doc.P)]),
        "epsilon\n"
        + render_table(labels, [[("+" if e > 0 else "-") for e in doc.epsilon]]),
    ]
    if doc.IM:
        parts.append(im_text(doc.IM))
    return "\n".join(parts)


def im_text(im: Dict[str, str]) -> str:
    rows = [[x, y] for x, y in im.items()]
    return "IM\n" + render_table(["parameter", "image"], rows)


def closure_graph(family: BasisFamily, mult: MultiplicityMatrix) -> nx.DiGraph:
    """Heuristic closure order on orbits, transitively reduced.

    An edge O -> O' is drawn when some local system on O occurs in a standard
    module attached to O' (a nonzero off-diagonal P entry).
    """
    graph = nx.DiGraph()
    orbits = [el.orbit for el in family.zminus]
    for o in orbits:
        graph.add_node(o.label, dim=o.dim)
    p = mult.p_matrix or []
    for k, row in enumerate(p):
        for j, cell in enumerate(row):
            a, b = orbits[k].label, orbits[j].label
            if cell and a != b:
                graph.add_edge(a, b)
    if not nx.is_directed_acyclic_graph(graph):
        raise InvariantViolation("closure heuristic produced a cycle")
    reduced = nx.transitive_reduction(nx.transitive_closure_dag(graph))
    reduced.add_nodes_from(graph.nodes(data=True))
    logger.info(
        f"Closure heuristic: {graph.number_of_edges()} edges, "
        f"{reduced.number_of_edges()} after reduction"
    )
    return reduced


def render_dot(graph: nx.DiGraph, name: str) -> str:
    """DOT text with nodes ranked by dimension, in a fixed order."""
    lines = [f'digraph "{name}" {{', "\trankdir=BT;"]
    by_dim: Dict[int, List[str]] = {}
    for node, data in sorted(graph.nodes(data=True), key=lambda x: (x[1]["dim"], x[0])):
        by_dim.setdefault(data["dim"], []).append(node)
        lines.append(f'\t"{node}" [label="{node}"];')
    for _, nodes in sorted(by_dim.items()):
        members = " ".join(f'"{n}";' for n in nodes)
        lines.append(f"\t{{ rank=same; {members} }}")
    for a, b in sorted(graph.edges()):
        lines.append(f'\t"{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
