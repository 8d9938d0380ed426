"""
Subcomandos ``verify`` (ajuste de escala do oráculo) e ``calibrate``.
"""

from __future__ import annotations

import argparse
import csv
import logging

from app.commands import (
    add_mc_options,
    add_output_options,
    add_symbol_options,
    add_tolerance_options,
    effective_settings,
    emit_json,
    load_run_symbol,
    mc_config,
    parse_index_list,
    summary,
)
from app.core.exceptions import NumericalError
from app.schemas.report_schema import CalibrationReport
from app.services.carleson import (
    calibrate_set,
    designate_witness,
    geometric_deltas,
    scaling_fit,
    scaling_report,
    write_scaling_csv,
)
from app.services.classify import run_boundedness

logger = logging.getLogger("polydisc.commands.verify")

DEFAULT_DELTAS = "1e-4:1e-2:9"
CALIBRATION_DELTAS = (1e-2, 1e-3)
CALIBRATION_COLUMNS = (
    "set_id",
    "params",
    "delta",
    "mean",
    "stderr",
    "samples",
    "reference",
    "within_4_stderr",
    "bound_satisfied",
)


def parse_deltas(text: str) -> list[float]:
    """'start:end:count' -> grade geométrica."""
    try:
        start, end, count = text.split(":")
        return [float(d) for d in geometric_deltas(float(start), float(end), int(count))]
    except ValueError as exc:
        raise ValueError(f"grade de deltas inválida (use start:end:count): {text!r}") from exc


def parse_set_params(text: str | None) -> dict[str, float]:
    """'a=1,b=2' -> {'a': 1.0, 'b': 2.0}."""
    if not text:
        return {}
    params: dict[str, float] = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"parâmetro de calibração inválido: {item!r}")
        params[key.strip()] = float(value)
    return params


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------
def _verify(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    cfg = mc_config(args, settings)
    s = load_run_symbol(args)
    deltas = parse_deltas(args.deltas)

    run = run_boundedness(s, settings, assume_self_map=args.assume_self_map)
    witness = designate_witness(run.report)
    if witness is None:
        raise ValueError("nenhum ponto de contato: não há caixa de Carleson a verificar")
    anchor, constrained = witness
    explicit = parse_index_list(args.constrained)
    if explicit is not None:
        constrained = explicit
    logger.info("Testemunha | anchor=%s | C=%s", anchor, constrained)

    fit = scaling_fit(s, anchor, constrained, deltas, cfg, check_coverage=True)
    if fit.slope is None and all(e.hits == 0 for e in fit.estimates):
        raise NumericalError("nenhum acerto em nenhum delta: região de amostragem vazia")

    emit_json(scaling_report(fit, s), args.out)
    if args.csv is not None:
        with args.csv.open("w", encoding="utf-8", newline="") as handle:
            write_scaling_csv(fit, handle)
    slope = "n/a" if fit.slope is None else f"{fit.slope:.3f} ± {fit.slope_stderr:.3f}"
    summary(
        f"inclinação: {slope} | orçamento: {fit.budget} | dica: {fit.verdict_hint}"
        f" | limitação: {run.report.verdict}"
    )
    return 0


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------
def _calibrate(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    cfg = mc_config(args, settings)
    params = parse_set_params(args.set_params)
    deltas = [float(d) for d in args.delta] if args.delta else list(CALIBRATION_DELTAS)
    entries = [
        calibrate_set(set_id, params, delta, cfg)
        for set_id in (args.sets or ("L33", "L34", "L35"))
        for delta in deltas
    ]
    report = CalibrationReport(seed=cfg.seed, samples=cfg.samples, entries=entries)
    emit_json(report, args.out)
    if args.csv is not None:
        with args.csv.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CALIBRATION_COLUMNS)
            for e in entries:
                writer.writerow(
                    [
                        e.set_id,
                        ";".join(f"{k}={v!r}" for k, v in sorted(e.params.items())),
                        repr(e.delta),
                        repr(e.mean),
                        repr(e.stderr),
                        e.samples,
                        repr(e.reference),
                        e.within_4_stderr,
                        e.bound_satisfied,
                    ]
                )
    passed = sum(e.within_4_stderr for e in entries)
    summary(f"calibração: {passed}/{len(entries)} dentro de 4 erros padrão")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    v = subparsers.add_parser("verify", help="Ajuste log-log das medidas de pré-imagem.")
    add_symbol_options(v)
    add_tolerance_options(v)
    add_mc_options(v)
    add_output_options(v, csv=True)
    v.add_argument(
        "--deltas",
        default=DEFAULT_DELTAS,
        help=f"Grade geométrica start:end:count (padrão: {DEFAULT_DELTAS}).",
    )
    v.add_argument(
        "--constrained",
        default=None,
        help="Componentes restritas, base 1 (padrão: a da primeira violação).",
    )
    v.set_defaults(handler=_verify)

    c = subparsers.add_parser("calibrate", help="Calibra o Monte-Carlo em conjuntos planos.")
    add_mc_options(c)
    add_output_options(c, csv=True)
    c.add_argument(
        "--set",
        dest="sets",
        action="append",
        choices=("L33", "L34", "L35"),
        help="Conjunto de calibração (repetível; padrão: todos).",
    )
    c.add_argument("--set-params", dest="set_params", default=None, help="Ex.: 'a=1,b=2'.")
    c.add_argument("--delta", action="append", type=float, help="Delta (repetível).")
    c.set_defaults(handler=_calibrate)
