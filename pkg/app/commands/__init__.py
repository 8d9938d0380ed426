"""
Subcomandos da CLI e utilitários compartilhados (leitura do símbolo,
sobreposição de configurações e emissão de JSON).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from app.core.config import Settings, get_settings
from app.schemas.symbol_schema import ExampleSpec
from app.services.carleson import MonteCarloConfig
from app.services.example_library import EXAMPLE_NAMES, build_example, parse_params
from app.services.polysym import Symbol, load_symbol

logger = logging.getLogger("polydisc.commands")


# ---------------------------------------------------------------------------
# Opções compartilhadas
# ---------------------------------------------------------------------------
def add_symbol_options(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", type=Path, help="Arquivo JSON do símbolo.")
    source.add_argument("--example", choices=EXAMPLE_NAMES, help="Exemplo da biblioteca.")
    parser.add_argument(
        "--params", default=None, help="Parâmetros do exemplo: 'eps' ou 'a,b,c'."
    )
    parser.add_argument(
        "--assume-self-map",
        action="store_true",
        help="Declara phi auto-mapa e ignora falha da triagem (vira ressalva).",
    )


def add_tolerance_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol-contact", type=float, dest="tol_contact", default=None)
    parser.add_argument("--tol-sig", type=float, dest="tol_sig", default=None)
    parser.add_argument("--tol-dep", type=float, dest="tol_dep", default=None)
    parser.add_argument("--tol-jac", type=float, dest="tol_jac", default=None)
    parser.add_argument("--grid", type=int, default=None, help="Pontos por ângulo na varredura.")


def add_mc_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", type=int, default=None, help="Amostras por delta.")
    parser.add_argument("--seed", type=int, default=None, help="Semente única de toda a aleatoriedade.")
    parser.add_argument(
        "--no-importance",
        action="store_true",
        dest="no_importance",
        help="Usa apenas o amostrador simples no toro.",
    )


def add_output_options(parser: argparse.ArgumentParser, *, csv: bool = False) -> None:
    parser.add_argument("--out", type=Path, default=None, help="Arquivo JSON (padrão: stdout).")
    if csv:
        parser.add_argument("--csv", type=Path, default=None, help="Arquivo CSV.")


# ---------------------------------------------------------------------------
# Resolução dos argumentos
# ---------------------------------------------------------------------------
_SETTING_FLAGS = {
    "tol_contact": "TOL_CONTACT",
    "tol_sig": "TOL_SIG",
    "tol_dep": "TOL_DEP",
    "tol_jac": "TOL_JAC",
    "grid": "GRID_N",
    "samples": "MC_SAMPLES",
    "seed": "MC_SEED",
}


def effective_settings(args: argparse.Namespace) -> Settings:
    """Configurações do ambiente sobrepostas pelas flags presentes."""
    base = get_settings()
    updates = {
        field: getattr(args, flag)
        for flag, field in _SETTING_FLAGS.items()
        if getattr(args, flag, None) is not None
    }
    if not updates:
        return base
    return Settings.model_validate({**base.model_dump(), **updates})


def mc_config(args: argparse.Namespace, settings: Settings) -> MonteCarloConfig:
    return MonteCarloConfig.from_settings(
        settings, importance=not getattr(args, "no_importance", False)
    )


def load_run_symbol(args: argparse.Namespace) -> Symbol:
    if args.input is not None:
        logger.info("Lendo símbolo de %s", args.input)
        return load_symbol(args.input)
    spec = ExampleSpec(name=args.example, params=parse_params(args.params))
    return build_example(spec)


def parse_index_list(text: str | None) -> list[int] | None:
    """'1,2' -> [1, 2] (índices de componente, base 1)."""
    if text is None:
        return None
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValueError(f"lista de índices inválida: {text!r}") from exc
    if not values:
        raise ValueError("lista de índices vazia")
    return values


# ---------------------------------------------------------------------------
# Saída
# ---------------------------------------------------------------------------
def emit_json(model: BaseModel, out: Path | None) -> None:
    """JSON determinístico para stdout ou ``out``."""
    text = model.model_dump_json(indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out.write_text(text, encoding="utf-8")
    logger.info("Relatório gravado em %s", out)


def summary(message: str) -> None:
    """Resumo legível: sempre em stderr."""
    sys.stderr.write(message.rstrip("\n") + "\n")


def diagnostic(kind: str, detail: str, **extra: Any) -> None:
    """Diagnóstico estruturado de uma linha em stderr."""
    payload = {"error": kind, "detail": detail, **extra}
    sys.stderr.write(json.dumps(payload, ensure_ascii=False, default=str) + "\n")


def register_all(subparsers: argparse._SubParsersAction) -> None:
    from app.commands import classify, example, verify

    classify.register(subparsers)
    verify.register(subparsers)
    example.register(subparsers)
