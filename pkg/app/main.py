"""
Ponto de entrada da CLI – classificador de operadores de composição no polidisco.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from app.commands import diagnostic, register_all
from app.core.config import configure_logging, logger
from app.core.exceptions import SelfMapScreenError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SELF_MAP = 3
EXIT_NUMERICAL = 4


# ---------------------------------------------------------------------------
# Parser factory
# ---------------------------------------------------------------------------
def create_parser() -> argparse.ArgumentParser:
    """Cria o parser com todos os subcomandos."""

    parser = argparse.ArgumentParser(
        prog="polydisc",
        description=(
            "Decide limitação e compacidade de operadores de composição com símbolo "
            "polinomial no bidisco e no tridisco, e verifica os vereditos com um "
            "oráculo de Monte-Carlo."
        ),
    )
    parser.add_argument(
        "--verbose", "-v", action="store_true", help="Log em nível INFO (stderr)."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_all(subparsers)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Executa a CLI e devolve o código de saída."""

    parser = create_parser()
    args = parser.parse_args(argv)
    configure_logging(logging.INFO if args.verbose else None)

    try:
        return args.handler(args)
    except SelfMapScreenError as exc:
        diagnostic("self-map-screen", str(exc), report=exc.report.model_dump(mode="json"))
        return EXIT_SELF_MAP
    except (ValueError, OSError) as exc:
        logger.warning("Entrada inválida: %s", exc)
        diagnostic("invalid-input", str(exc), type=type(exc).__name__)
        return EXIT_INVALID
    except (RuntimeError, ArithmeticError) as exc:
        logger.error("Falha numérica interna: %s", exc)
        diagnostic(
            "numerical-failure",
            str(exc),
            type=type(exc).__name__,
            trajectory=getattr(exc, "trajectory", None),
        )
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())
