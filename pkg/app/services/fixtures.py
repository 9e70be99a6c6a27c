"""Fixture corpus loader and regression runner.

A fixture is a JSON transcription of one table set. The runner recomputes
the tables, aligns the transcribed parameters with the computed ones and
reports every cell that differs.
"""

import json
import logging
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.core.audit import audit_logger
from app.core.budget import get_budget
from app.core.config import settings
from app.core.exceptions import FixtureError, HeckeError, MalformedInputError
from app.core.metrics import fixture_mismatches_total
from app.schemas.hecke import (
    CellMismatchDoc,
    Fixture,
    FixtureReportDoc,
    FixtureResultDoc,
)
from app.services.bases import (
    BasisFamily,
    compute_bases,
    im_involution,
    kl_matrix,
    mirror_family,
    multiplicity_matrix,
    regular_case_expectation,
)
from app.services.exactfield import (
    RationalFunction,
    format_qpoly,
    parse_qpoly,
    rank,
)
from app.services.kspace import GradedContext, KVector, format_kvector, gram
from app.services.liealg import chevalley
from app.services.orbits import OrbitParam, canonical_s
from app.services.rootsys import (
    RootSystem,
    Vector,
    build,
    format_vector,
    parse_vector,
    resolve_character,
)

logger = logging.getLogger(__name__)


def corpus_path(path: Optional[str] = None) -> Path:
    """Directory of the fixture corpus; HECKE_FIXTURES unless given."""
    return Path(path or settings.HECKE_FIXTURES)


def load_fixture(path: Path) -> Fixture:
    """
    Load and validate one fixture file.

    Args:
        path: JSON file of the corpus

    Returns:
        The validated fixture

    Raises:
        FixtureError: If the file cannot be read or does not validate
    """
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FixtureError(f"cannot read fixture {path.name}: {exc}") from exc
    try:
        return Fixture.model_validate(raw)
    except ValidationError as exc:
        raise FixtureError(
            f"fixture {path.name} is invalid",
            {"errors": [e["msg"] for e in exc.errors()]},
        ) from exc


def load_corpus(path: Optional[str] = None, include_slow: bool = True) -> List[Fixture]:
    """
    Load every fixture of the corpus, sorted by id.

    Args:
        path: Corpus directory (defaults to the configured one)
        include_slow: Whether to keep fixtures marked slow

    Returns:
        Validated fixtures

    Raises:
        FixtureError: If the corpus is missing, empty or corrupt
    """
    root = corpus_path(path)
    if not root.is_dir():
        raise FixtureError(f"fixture corpus {root} does not exist")
    fixtures = [load_fixture(p) for p in sorted(root.glob("*.json"))]
    if not fixtures:
        raise FixtureError(f"fixture corpus {root} is empty")
    seen = Counter(f.id for f in fixtures)
    repeated = [name for name, count in seen.items() if count > 1]
    if repeated:
        raise FixtureError(f"fixture ids are repeated: {', '.join(sorted(repeated))}")
    if not include_slow:
        fixtures = [f for f in fixtures if not f.slow]
    logger.info(f"Loaded {len(fixtures)} fixtures from {root}")
    return sorted(fixtures, key=lambda f: f.id)


def fixture_character(fixture: Fixture, rs: Optional[RootSystem] = None) -> Vector:
    """The character of a fixture, from its vector or its weighted diagram."""
    rs = rs or build(fixture.cartan)
    if fixture.chi is not None:
        return resolve_character(rs, fixture.chi)
    values = fixture.diagram or []
    if len(values) != rs.full.rank:
        raise FixtureError(f"fixture {fixture.id}: diagram has the wrong length")
    return chevalley(rs).from_values(rs.full, values)


def find_by_orbit_name(
    cartan: str, name: str, path: Optional[str] = None
) -> Optional[Fixture]:
    """The fixture whose character is the middle element of the named orbit."""
    for fixture in load_corpus(path):
        if fixture.cartan == cartan and fixture.orbit_name == name:
            return fixture
    return None


def resolve_orbit_name(rs: RootSystem, name: str, path: Optional[str] = None) -> Vector:
    """
    Resolve an orbit name such as ``F4(a3)`` to its middle element.

    The transcribed diagram or character is checked against the weighted
    Dynkin diagrams of the full system.

    Raises:
        MalformedInputError: If no fixture names the orbit
    """
    fixture = find_by_orbit_name(rs.label, name, path)
    if fixture is None:
        raise MalformedInputError(f"unknown orbit name {name!r} for {rs.label}")
    chi = fixture_character(fixture, rs)
    full = rs.full
    dominant = full.to_dominant(chi)[0]
    known = {d.h for d in chevalley(rs).wdd_enumerate(full)}
    if dominant not in known:
        raise MalformedInputError(
            f"orbit {name!r} does not match a weighted Dynkin diagram of {rs.label}"
        )
    logger.info(f"Orbit {name} of {rs.label} resolved to ({format_vector(chi)})")
    return chi


def find_by_character(
    rs: RootSystem, chi: Vector, path: Optional[str] = None
) -> Optional[Fixture]:
    """The bases fixture of a root system at a given character, if transcribed."""
    try:
        corpus = load_corpus(path)
    except FixtureError:
        return None
    for fixture in corpus:
        if fixture.cartan != rs.label or fixture.kind != "bases":
            continue
        if fixture_character(fixture, rs) == chi:
            return fixture
    return None


def saturation_labels(ctx: GradedContext, orbits: Sequence[OrbitParam]) -> Dict[str, str]:
    """Saturation names of computed orbits, taken from a matching fixture."""
    fixture = find_by_character(ctx.rs, ctx.chi)
    if fixture is None:
        return {}
    by_s = {o.s: o.label for o in orbits}
    by_dim: Dict[int, List[str]] = {}
    for o in orbits:
        by_dim.setdefault(o.dim, []).append(o.label)
    labels: Dict[str, str] = {}
    for row in fixture.orbits:
        if not row.saturation:
            continue
        if row.s is not None:
            s = canonical_s(ctx, parse_vector(row.s, ctx.rs.ambient_dim))
            label = by_s.get(s)
        elif len(by_dim.get(row.dim, [])) == 1:
            label = by_dim[row.dim][0]
        else:
            label = None
        if label is not None:
            labels[label] = row.saturation
    return labels


@dataclass
class UnaryCheck:
    """A per-parameter value; ``None`` marks an untranscribed entry."""

    table: str
    expected: List[Any]
    actual: List[Any]
    render: Callable[[Any], str] = str

    def cost(self, p: int, i: int) -> int:
        value = self.expected[p]
        return int(value is not None and value != self.actual[i])


@dataclass
class PairCheck:
    """A square table indexed by parameters."""

    table: str
    expected: List[List[Any]]
    actual: List[List[Any]]
    render: Callable[[Any], str] = str

    def cost(self, p: int, i: int, q: int, j: int) -> int:
        return int(self.expected[p][q] != self.actual[i][j])


class ParameterAlignment:
    """Dimension-preserving bijection, transcribed parameter -> computed index.

    Chosen by branch and bound to minimize the number of differing cells; an
    exact match ends the search early.
    """

    def __init__(
        self,
        expected_dims: Sequence[int],
        actual_dims: Sequence[int],
        expected_groups: Sequence[str],
        actual_groups: Sequence[str],
        unary: Sequence[UnaryCheck] = (),
        pairwise: Sequence[PairCheck] = (),
    ):
        self.expected_dims = list(expected_dims)
        self.actual_dims = list(actual_dims)
        self.expected_groups = list(expected_groups)
        self.actual_groups = list(actual_groups)
        self.unary = list(unary)
        self.pairwise = list(pairwise)
        self.best: Optional[List[int]] = None
        self.best_cost = 0
        self.nodes = 0

    def _step_cost(self, assigned: List[int], p: int, i: int) -> int:
        cost = sum(check.cost(p, i) for check in self.unary)
        for check in self.pairwise:
            cost += check.cost(p, i, p, i)
            for q, j in enumerate(assigned):
                cost += check.cost(p, i, q, j) + check.cost(q, j, p, i)
        for q, j in enumerate(assigned):
            same_expected = self.expected_groups[p] == self.expected_groups[q]
            same_actual = self.actual_groups[i] == self.actual_groups[j]
            cost += int(same_expected != same_actual)
        return cost

    def _search(self, assigned: List[int], used: set, cost: int) -> None:
        self.nodes += 1
        if self.nodes % 4096 == 0:
            get_budget().check("fixture alignment")
        if self.best is not None and cost >= self.best_cost:
            return
        p = len(assigned)
        if p == len(self.expected_dims):
            self.best, self.best_cost = list(assigned), cost
            return
        options = []
        for i, dim in enumerate(self.actual_dims):
            if i in used or dim != self.expected_dims[p]:
                continue
            options.append((self._step_cost(assigned, p, i), i))
        for step, i in sorted(options):
            assigned.append(i)
            used.add(i)
            self._search(assigned, used, cost + step)
            used.discard(i)
            assigned.pop()
            if self.best is not None and self.best_cost == 0:
                return

    def solve(self) -> List[int]:
        """
        Run the search.

        Raises:
            FixtureError: If the dimension columns admit no bijection
        """
        if sorted(self.expected_dims) != sorted(self.actual_dims):
            raise FixtureError(
                "dimension columns differ",
                {
                    "expected": sorted(self.expected_dims),
                    "actual": sorted(self.actual_dims),
                },
            )
        self._search([], set(), 0)
        logger.debug(
            f"Alignment of {len(self.expected_dims)} parameters: "
            f"cost {self.best_cost} after {self.nodes} nodes"
        )
        return self.best or []


class FixtureComparison:
    """Collects compared cells and mismatches for one fixture."""

    def __init__(self, fixture: Fixture):
        self.fixture = fixture
        self.checked = 0
        self.mismatches: List[CellMismatchDoc] = []

    def compare(
        self, table: str, row: str, column: str, expected: Any, actual: Any, render=str
    ) -> None:
        self.checked += 1
        if expected != actual:
            self.mismatches.append(
                CellMismatchDoc(
                    table=table,
                    row=row,
                    column=column,
                    expected=render(expected),
                    actual=render(actual),
                )
            )

    def report_alignment(
        self,
        names: Sequence[str],
        alignment: Sequence[int],
        unary: Sequence[UnaryCheck],
        pairwise: Sequence[PairCheck],
    ) -> None:
        """Report every cell under the chosen alignment."""
        for check in unary:
            for p, i in enumerate(alignment):
                if check.expected[p] is None:
                    continue
                self.compare(
                    check.table, names[p], "", check.expected[p], check.actual[i],
                    check.render,
                )
        for check in pairwise:
            for p, i in enumerate(alignment):
                for q, j in enumerate(alignment):
                    self.compare(
                        check.table, names[p], names[q],
                        check.expected[p][q], check.actual[i][j], check.render,
                    )

    def result(self, duration: float, error: Optional[str] = None) -> FixtureResultDoc:
        return FixtureResultDoc(
            id=self.fixture.id,
            checked=self.checked,
            mismatches=self.mismatches,
            duration_ms=round(duration * 1000, 2),
            error=error,
        )


def _parse_kvector(table: Dict[str, str], dim: int) -> KVector:
    return KVector(
        {
            parse_vector(label, dim): RationalFunction.parse(coeff)
            for label, coeff in table.items()
        }
    )


def _render_kvector(x: Any) -> str:
    return format_kvector(x) if isinstance(x, KVector) else str(x)


def _render_vector(x: Any) -> str:
    return format_vector(x) if x is not None else "-"


def _check_form(fixture: Fixture, ctx: GradedContext, out: FixtureComparison) -> None:
    table = fixture.form
    dim = ctx.rs.ambient_dim
    labels = [parse_vector(text, dim) for text in table.labels]
    unknown = [text for text, label in zip(table.labels, labels) if label not in ctx.position]
    if unknown or len(labels) != len(ctx):
        out.compare("labels", "cosets", "", sorted(table.labels), sorted(
            format_vector(label) for label in ctx.labels
        ))
        return
    for a, row in enumerate(table.rows):
        i = ctx.position[labels[a]]
        for b, text in enumerate(row):
            j = ctx.position[labels[b]]
            out.compare(
                "form", table.labels[a], table.labels[b],
                RationalFunction.parse(text), ctx.entry(i, j),
            )
    if fixture.radical_dim is not None:
        matrix = gram(ctx)
        out.compare("radical_dim", "", "", fixture.radical_dim, len(ctx) - rank(matrix))


def _check_mirror(ctx: GradedContext, family: BasisFamily, out: FixtureComparison) -> None:
    out.compare(
        "Z+", "mirror", "",
        sorted(format_kvector(x) for x in mirror_family(ctx, family)),
        sorted(format_kvector(el.vec) for el in family.zplus),
        render="; ".join,
    )


def _check_regular(fixture: Fixture, ctx: GradedContext, out: FixtureComparison) -> None:
    family = compute_bases(ctx)
    mult = kl_matrix(multiplicity_matrix(family))
    expect = regular_case_expectation(ctx)
    names = ["{" + ",".join(str(ctx.sub.simple.index(i) + 1) for i in m) + "}"
             for m in expect.subsets]
    unary = [
        UnaryCheck("Z-", list(expect.z), [el.vec for el in family.zminus], _render_kvector),
        UnaryCheck("U-", list(expect.u), [el.vec for el in family.uminus], _render_kvector),
    ]
    pairwise = [
        PairCheck(
            "P",
            [[{0: 1} if cell else {} for cell in row] for row in expect.p],
            mult.p_matrix,
            format_qpoly,
        )
    ]
    aligner = ParameterAlignment(
        [len(m) for m in expect.subsets],
        family.dims,
        names,
        [el.orbit.label for el in family.zminus],
        unary,
        pairwise,
    )
    alignment = aligner.solve()
    out.report_alignment(names, alignment, unary, pairwise)
    if fixture.mirror:
        _check_mirror(ctx, family, out)


def _check_bases(fixture: Fixture, ctx: GradedContext, out: FixtureComparison) -> None:
    family = compute_bases(ctx)
    mult = kl_matrix(multiplicity_matrix(family))
    im = im_involution(family)
    dim = ctx.rs.ambient_dim
    names = fixture.parameters
    n = len(names)
    row_of = {p: o for o in fixture.orbits for p in o.parameters}
    computed_orbits = [el.orbit for el in family.zminus]
    if len(family) != n:
        out.compare("parameters", "count", "", n, len(family))
        return

    s_expected = [
        canonical_s(ctx, parse_vector(row_of[p].s, dim)) if row_of[p].s else None
        for p in names
    ]
    unary = [
        UnaryCheck("s", s_expected, [o.s for o in computed_orbits], _render_vector),
        UnaryCheck(
            "components",
            [row_of[p].components for p in names],
            [o.meta.get("component_group") for o in computed_orbits],
        ),
    ]
    if fixture.zminus:
        unary.append(UnaryCheck(
            "Z-",
            [_parse_kvector(fixture.zminus[p], dim) if p in fixture.zminus else None
             for p in names],
            [el.vec for el in family.zminus],
            _render_kvector,
        ))
    if fixture.uminus:
        unary.append(UnaryCheck(
            "U-",
            [_parse_kvector(fixture.uminus[p], dim) if p in fixture.uminus else None
             for p in names],
            [el.vec for el in family.uminus],
            _render_kvector,
        ))
    pairwise = []
    if fixture.kl is not None:
        pairwise.append(PairCheck(
            "P",
            [[parse_qpoly(cell) for cell in row] for row in fixture.kl],
            mult.p_matrix,
            format_qpoly,
        ))
    if fixture.n is not None:
        pairwise.append(PairCheck(
            "N",
            [[RationalFunction.parse(cell) for cell in row] for row in fixture.n],
            [[mult.n_matrix[k, j] for j in range(n)] for k in range(n)],
        ))

    aligner = ParameterAlignment(
        fixture.dims,
        family.dims,
        [row_of[p].label for p in names],
        [o.label for o in computed_orbits],
        unary,
        pairwise,
    )
    alignment = aligner.solve()
    out.report_alignment(names, alignment, unary, pairwise)

    for p, q in enumerate(alignment):
        for r, j in enumerate(alignment):
            if r <= p:
                continue
            same_expected = row_of[names[p]].label == row_of[names[r]].label
            same_actual = computed_orbits[q].label == computed_orbits[j].label
            if same_expected != same_actual:
                out.compare("orbits", names[p], names[r], same_expected, same_actual)

    back = {family.labels[i]: names[p] for p, i in enumerate(alignment)}
    for x, y in sorted(fixture.im.items()):
        image = im.get(family.labels[alignment[names.index(x)]])
        out.compare("IM", x, "", y, back.get(image, str(image)))
    if fixture.mirror:
        _check_mirror(ctx, family, out)


def run_fixture(fixture: Fixture) -> FixtureResultDoc:
    """
    Recompute one fixture and compare every transcribed cell.

    Pipeline errors are recorded on the result rather than raised, so one
    failing fixture does not stop a corpus run.
    """
    started = time.perf_counter()
    out = FixtureComparison(fixture)
    error = None
    try:
        rs = build(fixture.cartan)
        ctx = GradedContext(rs.full, fixture_character(fixture, rs), fixture.e_mode)
        if fixture.kind == "form":
            _check_form(fixture, ctx, out)
        elif fixture.kind == "regular":
            _check_regular(fixture, ctx, out)
        else:
            _check_bases(fixture, ctx, out)
    except HeckeError as exc:
        logger.error(f"Fixture {fixture.id} failed: {exc.message}")
        error = f"{type(exc).__name__}: {exc.message}"
    duration = time.perf_counter() - started
    result = out.result(duration, error)
    mismatches = len(result.mismatches) + int(error is not None)
    if mismatches:
        fixture_mismatches_total.labels(fixture=fixture.id).inc(mismatches)
    audit_logger.log_fixture(fixture.id, result.checked, mismatches)
    logger.info(
        f"Fixture {fixture.id}: {result.checked} cells, "
        f"{len(result.mismatches)} mismatches in {duration:.2f}s"
    )
    return result


def run_corpus(
    path: Optional[str] = None,
    include_slow: bool = True,
    only: Optional[Sequence[str]] = None,
) -> FixtureReportDoc:
    """
    Run every fixture of the corpus.

    Args:
        path: Corpus directory (defaults to the configured one)
        include_slow: Whether to run fixtures marked slow
        only: Restrict the run to these fixture ids

    Returns:
        Report sorted by fixture id

    Raises:
        FixtureError: If the corpus is missing, empty or corrupt, or ``only``
            names unknown fixtures
    """
    fixtures = load_corpus(path, include_slow)
    if only:
        wanted = set(only)
        missing = wanted - {f.id for f in fixtures}
        if missing:
            raise FixtureError(f"unknown fixtures: {', '.join(sorted(missing))}")
        fixtures = [f for f in fixtures if f.id in wanted]
    results = sorted((run_fixture(f) for f in fixtures), key=lambda r: r.id)
    return FixtureReportDoc(
        fixtures=results,
        checked=sum(r.checked for r in results),
        mismatches=sum(len(r.mismatches) + int(r.error is not None) for r in results),
    )


def report_failed(report: FixtureReportDoc) -> List[Tuple[str, CellMismatchDoc]]:
    """Flatten the mismatching cells of a report."""
    return [(r.id, m) for r in report.fixtures for m in r.mismatches]
