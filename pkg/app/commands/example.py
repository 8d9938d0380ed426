"""
Subcomando ``example``: emite o JSON de um símbolo da biblioteca.
"""

from __future__ import annotations

import argparse

from app.commands import add_output_options, emit_json, summary
from app.schemas.symbol_schema import ExampleSpec
from app.services.example_library import EXAMPLE_NAMES, build_example, parse_params
from app.services.polysym import symbol_to_file_model


def _example(args: argparse.Namespace) -> int:
    spec = ExampleSpec(name=args.example, params=parse_params(args.params))
    s = build_example(spec)
    emit_json(symbol_to_file_model(s, as_terms=args.terms), args.out)
    summary(f"exemplo {spec.name}: d={s.dimension}")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("example", help="JSON de um símbolo da biblioteca.")
    p.add_argument("--example", choices=EXAMPLE_NAMES, required=True)
    p.add_argument("--params", default=None, help="'eps' ou 'a,b,c'.")
    p.add_argument("--terms", action="store_true", help="Forma explícita por termos.")
    add_output_options(p)
    p.set_defaults(handler=_example)
