"""Command-line entry point.

Commands run the pipeline up to the requested stage and print the artifact
on stdout; logs, errors and the run ledger go elsewhere.
"""

import argparse
import logging
import re
import sys
import time
from typing import List, Optional

from pydantic import ValidationError

from app.core.audit import audit_logger, setup_audit_logging
from app.core.budget import start_budget
from app.core.config import settings
from app.core.exceptions import HeckeError, MalformedInputError
from app.core.logging import log_error, log_job_status, setup_logging
from app.core.metrics import jobs_total, timed_stage, write_metrics
from app.schemas.hecke import AllDocument, FixtureReportDoc, IMDocument, JobSpec
from app.services import export
from app.services.bases import (
    compute_bases,
    im_involution,
    kl_matrix,
    multiplicity_matrix,
)
from app.services.exactfield import rank
from app.services.fixtures import resolve_orbit_name, run_corpus, saturation_labels
from app.services.kspace import GradedContext, gram
from app.services.liealg import check_middle_element, chevalley
from app.services.rootsys import (
    RootSystem,
    Vector,
    build,
    format_vector,
    resolve_character,
)

logger = logging.getLogger(__name__)

COMMANDS = ("wdd", "orbits", "form", "bases", "kl", "im", "all")
FORMATS = {
    "wdd": ("text", "json"),
    "orbits": ("text", "json"),
    "form": ("text", "json", "csv"),
    "bases": ("text", "json"),
    "kl": ("text", "json", "dot"),
    "im": ("text", "json"),
    "all": ("text", "json", "dot"),
}

_NUMERIC = re.compile(r"^[\s()\[\]0-9/,+-]+$")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every command."""
    parser = argparse.ArgumentParser(
        prog="hecke",
        description=(
            "Exact multiplicity matrices, KL-type polynomials and the IM "
            "involution for graded affine Hecke algebras."
        ),
    )
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    parser.add_argument("--metrics", default=None, help="Write prometheus metrics here")
    sub = parser.add_subparsers(dest="command", required=True)

    for command in COMMANDS:
        p = sub.add_parser(command, help=f"run the pipeline up to {command}")
        p.add_argument("cartan", help="Cartan label such as A3, C3, G2 or F4")
        p.add_argument(
            "--chi",
            default=None,
            help="Rational vector, 2rho, or an orbit name such as F4(a3)",
        )
        p.add_argument("--e", dest="e_mode", choices=("lusztig", "one"), default=None)
        p.add_argument("--format", dest="output_format", default="text")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--time-budget", type=float, default=None)

    p = sub.add_parser("fixtures", help="run the fixture regression corpus")
    p.add_argument("--path", default=None, help="Corpus directory (HECKE_FIXTURES)")
    p.add_argument("--fast", action="store_true", help="Skip fixtures marked slow")
    p.add_argument("--only", action="append", default=None, help="Fixture id")
    p.add_argument("--format", dest="output_format", choices=("text", "json"),
                   default="text")
    p.add_argument("--time-budget", type=float, default=None)
    return parser


def resolve_chi(rs: RootSystem, text: str) -> Vector:
    """Character from a vector, ``2rho`` or an orbit name.

    Partition names such as ``(22)`` look numeric; without a comma they are
    vectors only in ambient dimension one.
    """
    numeric = _NUMERIC.match(text) and ("," in text or rs.ambient_dim == 1)
    if text.strip().lower() == "2rho" or numeric:
        return resolve_character(rs, text)
    return resolve_orbit_name(rs, text.strip())


def run(spec: JobSpec) -> str:
    """
    Execute one job.

    Args:
        spec: Validated job description

    Returns:
        The artifact to print

    Raises:
        HeckeError: On any input error or failed invariant
    """
    if spec.output_format not in FORMATS[spec.command]:
        raise MalformedInputError(
            f"format {spec.output_format} is not available for {spec.command}"
        )
    rs = build(spec.cartan)
    fmt = spec.output_format

    if spec.command == "wdd":
        with timed_stage("wdd"):
            doc = export.wdd_document(rs, chevalley(rs).wdd_enumerate(rs.full))
        return doc.model_dump_json(indent=2) + "\n" if fmt == "json" else export.wdd_text(doc)

    chi = resolve_chi(rs, spec.chi or "")
    check_middle_element(rs.full, chi)
    ctx = GradedContext(rs.full, chi, spec.e_mode)

    if spec.command == "form":
        with timed_stage("form"):
            doc = export.form_document(ctx, len(ctx) - rank(gram(ctx)))
        if fmt == "json":
            return doc.model_dump_json(indent=2) + "\n"
        return export.form_csv(doc) if fmt == "csv" else export.form_text(doc)

    family = compute_bases(ctx)
    saturations = saturation_labels(ctx, family.orbits)
    for o in family.orbits:
        o.meta["saturation"] = saturations.get(o.label)

    if spec.command == "orbits":
        doc = export.orbits_document(ctx, family.orbits)
        return doc.model_dump_json(indent=2) + "\n" if fmt == "json" else export.orbits_text(doc)
    if spec.command == "bases":
        if fmt == "json":
            return export.bases_document(family).model_dump_json(indent=2) + "\n"
        return export.bases_text(family)

    im = im_involution(family)
    if spec.command == "im":
        if fmt == "json":
            im_doc = IMDocument(cartan=rs.label, chi=format_vector(chi), IM=im)
            return im_doc.model_dump_json(indent=2) + "\n"
        return export.im_text(im)

    mult = kl_matrix(multiplicity_matrix(family))
    if fmt == "dot":
        graph = export.closure_graph(family, mult)
        return export.render_dot(graph, f"{rs.label} closure heuristic")
    doc = export.kl_document(family, mult, im)
    if spec.command == "kl":
        return doc.model_dump_json(indent=2) + "\n" if fmt == "json" else export.kl_text(doc)

    orbits_doc = export.orbits_document(ctx, family.orbits)
    if fmt == "json":
        all_doc = AllDocument(
            orbits=orbits_doc, bases=export.bases_document(family), kl=doc
        )
        return all_doc.model_dump_json(indent=2) + "\n"
    return "\n".join(
        [export.orbits_text(orbits_doc), export.bases_text(family), export.kl_text(doc)]
    )


def fixtures_text(report: FixtureReportDoc) -> str:
    rows = [
        [r.id, str(r.checked), str(len(r.mismatches)), r.error or ""]
        for r in report.fixtures
    ]
    text = export.render_table(["fixture", "cells", "mismatches", "error"], rows)
    for r in report.fixtures:
        for m in r.mismatches:
            where = f"{m.row},{m.column}" if m.column else m.row
            text += f"{r.id}: {m.table}[{where}] expected {m.expected}, got {m.actual}\n"
    return text + f"total: {report.checked} cells, {report.mismatches} mismatches\n"


def _fail(error: HeckeError, command: str) -> int:
    log_error(error, {"command": command, **error.context})
    message = f"error: {error.message}"
    if error.context:
        details = ", ".join(f"{k}={v}" for k, v in error.context.items())
        message += f" ({details})"
    print(message, file=sys.stderr)
    return error.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit status."""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level.upper() if args.log_level else settings.LOG_LEVEL,
                  settings.LOG_FILE)
    setup_audit_logging(settings.AUDIT_LOG_FILE)
    start_budget(args.time_budget if args.time_budget is not None else settings.TIME_BUDGET)
    metrics_file = args.metrics or settings.METRICS_FILE
    started = time.perf_counter()

    try:
        if args.command == "fixtures":
            return _run_fixtures(args)

        try:
            spec = JobSpec(
                command=args.command,
                cartan=args.cartan,
                chi=args.chi,
                e_mode=args.e_mode or settings.E_MODE,
                output_format=args.output_format,
                seed=settings.SEED if args.seed is None else args.seed,
                time_budget=args.time_budget or 0.0,
            )
        except ValidationError as exc:
            error = MalformedInputError(
                "invalid job", {"errors": [e["msg"] for e in exc.errors()]}
            )
            jobs_total.labels(command=args.command, status="failed").inc()
            return _fail(error, args.command)

        settings.SEED = spec.seed
        log_job_status(spec.command, "started", spec.model_dump())
        status, details, code = "ok", {}, 0
        try:
            artifact = run(spec)
        except HeckeError as error:
            status, details = "failed", {"error": error.message, **error.context}
            code = _fail(error, spec.command)
        else:
            sys.stdout.write(artifact)
        duration = time.perf_counter() - started
        jobs_total.labels(command=spec.command, status=status).inc()
        audit_logger.log_job(
            spec.command,
            spec.cartan,
            spec.chi or "",
            spec.e_mode,
            spec.seed,
            status,
            duration,
            details,
        )
        log_job_status(spec.command, status, {"duration_s": round(duration, 3)})
        return code
    finally:
        if metrics_file:
            write_metrics(metrics_file)


def _run_fixtures(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        report = run_corpus(args.path, include_slow=not args.fast, only=args.only)
    except HeckeError as error:
        jobs_total.labels(command="fixtures", status="failed").inc()
        return _fail(error, "fixtures")
    status = "ok" if report.mismatches == 0 else "mismatch"
    jobs_total.labels(command="fixtures", status=status).inc()
    audit_logger.log_job(
        "fixtures", "*", "*", settings.E_MODE, settings.SEED, status,
        time.perf_counter() - started,
        {"checked": report.checked, "mismatches": report.mismatches},
    )
    if args.output_format == "json":
        sys.stdout.write(report.model_dump_json(indent=2) + "\n")
    else:
        sys.stdout.write(fixtures_text(report))
    return 0 if report.mismatches == 0 else 1


def cli() -> None:
    """Console script entry point."""
    raise SystemExit(main())


if __name__ == "__main__":
    cli()
