"""
Subcomandos ``classify`` e ``contacts``.
"""

from __future__ import annotations

import argparse
import logging

from app.commands import (
    add_mc_options,
    add_output_options,
    add_symbol_options,
    add_tolerance_options,
    diagnostic,
    effective_settings,
    emit_json,
    load_run_symbol,
    mc_config,
    summary,
)
from app.core.exceptions import SelfMapScreenError
from app.schemas.report_schema import ClassificationOutput, ContactsReport
from app.services.classify import SCREEN_CAVEAT, compactness_from_run, run_boundedness
from app.services.contact import contact_model, find_contacts
from app.services.polysym import self_map_report

logger = logging.getLogger("polydisc.commands.classify")

EXIT_INVALID = 2


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------
def _classify(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    s = load_run_symbol(args)
    run = run_boundedness(s, settings, assume_self_map=args.assume_self_map)
    report = run.report

    if args.compactness:
        creport = compactness_from_run(run, args.oracle, settings, mc_config(args, settings))
        emit_json(ClassificationOutput(boundedness=report, compactness=creport), args.out)
        summary(f"limitação: {report.verdict} | compacidade: {creport.verdict}")
    else:
        emit_json(report, args.out)
        summary(f"limitação: {report.verdict}")

    if report.verdict == "Invalid":
        extra = {k: v for k, v in report.diagnostics.items() if k != "reason"}
        diagnostic("invalid-input", report.diagnostics.get("reason", ""), **extra)
        return EXIT_INVALID
    return 0


# ---------------------------------------------------------------------------
# contacts
# ---------------------------------------------------------------------------
def _contacts(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    s = load_run_symbol(args)
    screen = self_map_report(
        s,
        settings.SCREEN_GRID_N,
        settings.SELF_MAP_MARGIN,
        assume_self_map=args.assume_self_map,
    )
    if not screen.passed and not args.assume_self_map:
        raise SelfMapScreenError(screen)
    records = find_contacts(
        s,
        settings.GRID_N,
        settings.TOL_CONTACT,
        samples_per_component=settings.SAMPLES_PER_COMPONENT,
        refine_tol=settings.REFINE_TOL,
        max_iter=settings.REFINE_MAX_ITER,
        polish_dps=settings.POLISH_DPS,
    )
    report = ContactsReport(
        dimension=s.dimension,
        grid_n=settings.GRID_N,
        tol_contact=settings.TOL_CONTACT,
        self_map=screen,
        contacts=[contact_model(r) for r in records],
        caveats=[SCREEN_CAVEAT],
    )
    emit_json(report, args.out)
    summary(f"contatos: {len(records)}")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("classify", help="Veredito de limitação (e compacidade).")
    add_symbol_options(p)
    add_tolerance_options(p)
    add_mc_options(p)
    add_output_options(p)
    p.add_argument("--compactness", action="store_true", help="Inclui o veredito de compacidade.")
    p.add_argument(
        "--oracle",
        choices=("off", "advisory"),
        default="off",
        help="Anexa a tendência do oráculo a vereditos Undetermined.",
    )
    p.set_defaults(handler=_classify)

    c = subparsers.add_parser("contacts", help="Lista os pontos de contato refinados.")
    add_symbol_options(c)
    add_tolerance_options(c)
    add_output_options(c)
    c.set_defaults(handler=_contacts)
