"""Command-line front end: python -m app.cli <command> ...

Exit codes: 0 success, 1 data or computation error, 2 usage or configuration error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

ROOT = Path(__file__).resolve().parents[1]  # Project root
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))  # Ensure local modules are importable when run as a script

import numpy as np
from pydantic import ValidationError

from app.report import build_report, build_verify_report, dumps, human_summary
from schemas.errors import ConfigError, ObsCausalError
from schemas.evidence import ConcordanceInput, ConcordanceKind
from schemas.results import ResampleConfig
from schemas.settings import Settings, load_settings
from schemas.state import CausalityState
from schemas.tables import AssociationKind, Counts2x2, MarginalSummary, StratifiedTable, Stratum
from stages.graph import run_analysis
from tools.ingest import load_counts, load_microdata_spec, load_stratified
from tools.verification import run_suite

logger = logging.getLogger("app.cli")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_VERIFY = 3


class UsageError(Exception):
    pass


# ----------------------------
# Argument parsing helpers
# ----------------------------
def parse_fraction(text: str) -> float:
    # "0.67" or "67%"
    raw = text.strip()
    try:
        value = float(raw[:-1]) / 100.0 if raw.endswith("%") else float(raw)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None
    return value


def parse_table(text: str) -> Counts2x2:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise UsageError(f"--table needs four counts x01,x11,x00,x10, got {text!r}")
    try:
        cells = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"counts must be integers, got {text!r}") from None
    if min(cells) < 0:
        raise UsageError(f"counts must be nonnegative, got {text!r}")
    return Counts2x2.of(cells)


def parse_measure(text: str) -> Tuple[AssociationKind, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise UsageError(f"--measure needs KIND=VALUE (kind one of phi, rd, rr, or), got {text!r}")
    try:
        kind = AssociationKind(name.strip().lower())
    except ValueError:
        raise UsageError(f"unknown measure {name!r}; use phi, rd, rr or or") from None
    return kind, parse_fraction(value)


def parse_stratum(text: str) -> Stratum:
    label, sep, cells = text.rpartition(":")
    if not sep or not label:
        raise UsageError(f"--stratum needs LABEL:x01,x11,x00,x10, got {text!r}")
    return Stratum(label=label, counts=parse_table(cells))


def parse_merge(items: Sequence[str]) -> Dict[str, str]:
    mapping: Dict[str, str] = {}
    for item in items:
        src, sep, dst = item.partition("=")
        if not sep or not src or not dst:
            raise UsageError(f"--merge needs SRC=DST, got {item!r}")
        mapping[src] = dst
    return mapping


def draw_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


# ----------------------------
# Input assembly
# ----------------------------
def _table_inputs(args: argparse.Namespace, inputs: Dict[str, Any], allow_summary: bool = True) -> Dict[str, Any]:
    """Exactly one of --table, --csv/--spec, --pe/--pd/--measure; returns state fields."""
    given = [
        args.table is not None,
        args.csv is not None,
        allow_summary and any(v is not None for v in (args.pe, args.pd, args.measure)),
    ]
    if sum(given) != 1:
        wanted = "--table, --csv with --spec, or --pe/--pd/--measure" if allow_summary else "--table or --csv with --spec"
        raise UsageError(f"give exactly one of {wanted}")

    if args.table is not None:
        counts = parse_table(args.table)
        inputs["table"] = list(counts.cells())
        return {"counts": counts}
    if args.csv is not None:
        if args.spec is None:
            raise UsageError("--csv needs --spec")
        tab = load_counts(args.csv, load_microdata_spec(args.spec))
        inputs["csv"] = {"path": args.csv, "spec": args.spec, "rows": tab.rows, "excluded": tab.excluded}
        inputs["table"] = list(tab.counts.cells())
        return {"counts": tab.counts}
    if None in (args.pe, args.pd, args.measure):
        raise UsageError("--pe, --pd and --measure go together")
    kind, value = parse_measure(args.measure)
    summary = MarginalSummary(p_e=parse_fraction(args.pe), p_d=parse_fraction(args.pd), kind=kind, value=value)
    inputs["summary"] = {"p_e": summary.p_e, "p_d": summary.p_d, "kind": kind.value, "value": value}
    return {"summary": summary}


def _evidence(
    probandwise: Optional[str],
    pairwise: Optional[str],
    prevalence: Optional[str],
    flag: str,
) -> Optional[ConcordanceInput]:
    if probandwise is not None and pairwise is not None:
        raise UsageError(f"give --bc-{flag} or --pc-{flag}, not both")
    if probandwise is None and pairwise is None:
        if prevalence is not None:
            raise UsageError(f"--prev-{flag} needs a concordance")
        return None
    kind = ConcordanceKind.PROBANDWISE if probandwise is not None else ConcordanceKind.PAIRWISE
    return ConcordanceInput(
        value=parse_fraction(probandwise if probandwise is not None else pairwise),
        kind=kind,
        prevalence=parse_fraction(prevalence) if prevalence is not None else None,
    )


def _evidence_inputs(args: argparse.Namespace, inputs: Dict[str, Any], required: bool) -> Dict[str, Any]:
    exposure = _evidence(args.bc_e, args.pc_e, args.prev_e, "e")
    outcome = _evidence(args.bc_d, args.pc_d, args.prev_d, "d")
    if required and (exposure is None or outcome is None):
        raise UsageError("test needs a concordance for both traits (--bc-e/--pc-e and --bc-d/--pc-d)")
    if exposure is None or outcome is None:
        if exposure is not None or outcome is not None:
            logger.warning("concordance given for one trait only; the verdict will be Indeterminate")
    for name, ev in (("exposure", exposure), ("outcome", outcome)):
        if ev is not None:
            inputs[f"{name}_concordance"] = {"kind": ev.kind.value, "value": ev.value, "prevalence": ev.prevalence}
    return {"exposure": exposure, "outcome": outcome}


def _strata_inputs(args: argparse.Namespace, inputs: Dict[str, Any]) -> StratifiedTable:
    merge = parse_merge(args.merge or [])
    if bool(args.stratum) == (args.csv is not None):
        raise UsageError("give either --stratum (repeatable) or --csv with --spec")
    if args.csv is not None:
        if args.spec is None:
            raise UsageError("--csv needs --spec")
        tab = load_stratified(args.csv, load_microdata_spec(args.spec), merge=merge)
        inputs["csv"] = {"path": args.csv, "spec": args.spec, "rows": tab.rows, "excluded": tab.excluded}
        table = tab.table
    else:
        strata = [parse_stratum(s) for s in args.stratum]
        labels = [s.label for s in strata]
        if len(set(labels)) != len(labels):
            raise UsageError(f"duplicate stratum labels in {labels}")
        table = StratifiedTable(strata=strata)
        if merge:
            table = table.merged(merge)
    if merge:
        inputs["merge"] = merge
    inputs["strata"] = {s.label: list(s.counts.cells()) for s in table.strata}
    return table


# ----------------------------
# Commands
# ----------------------------
def _run(command: str, fields: Dict[str, Any], inputs: Dict[str, Any], settings: Settings) -> int:
    state = CausalityState(command=command, prevalence_tolerance=settings.prevalence_tolerance, **fields)
    result = run_analysis(state)
    sys.stdout.write(dumps(build_report(result, inputs)))
    sys.stderr.write(human_summary(result))
    return EXIT_OK


def cmd_threshold(args: argparse.Namespace, settings: Settings) -> int:
    inputs: Dict[str, Any] = {}
    fields = _table_inputs(args, inputs)
    if args.haldane:
        if "counts" not in fields:
            raise UsageError("--haldane applies to count tables only")
        fields["haldane"] = True
        inputs["haldane"] = True
    return _run("threshold", fields, inputs, settings)


def cmd_test(args: argparse.Namespace, settings: Settings) -> int:
    inputs: Dict[str, Any] = {}
    fields = _table_inputs(args, inputs)
    fields.update(_evidence_inputs(args, inputs, required=True))
    return _run("test", fields, inputs, settings)


def _resample_config(args: argparse.Namespace, settings: Settings, inputs: Dict[str, Any]) -> ResampleConfig:
    seed = args.seed
    if seed is None:
        seed = draw_seed()
        logger.warning("no --seed given; drew %d from entropy (run is not reportable)", seed)
        inputs["seed_drawn"] = True
    try:
        cfg = ResampleConfig(
            alpha=args.alpha if args.alpha is not None else settings.alpha,
            num_samples=args.samples if args.samples is not None else settings.samples,
            seed=seed,
            workers=args.workers if args.workers is not None else settings.workers,
        )
    except ValidationError as exc:
        fields = ", ".join(str(err["loc"][0]) for err in exc.errors() if err["loc"])
        raise UsageError(f"invalid resampling options: {fields or exc}") from exc
    inputs["seed"] = cfg.seed
    return cfg


def cmd_fpc(args: argparse.Namespace, settings: Settings) -> int:
    inputs: Dict[str, Any] = {}
    fields = _table_inputs(args, inputs, allow_summary=False)
    fields["resample"] = _resample_config(args, settings, inputs)
    fields.update(_evidence_inputs(args, inputs, required=False))
    return _run("fpc", fields, inputs, settings)


def cmd_adjust(args: argparse.Namespace, settings: Settings) -> int:
    inputs: Dict[str, Any] = {}
    fields: Dict[str, Any] = {"stratified": _strata_inputs(args, inputs)}
    fields["tau_tol"] = args.tol if args.tol is not None else settings.tau_tol
    inputs["tau_tol"] = fields["tau_tol"]
    fields.update(_evidence_inputs(args, inputs, required=False))
    return _run("adjust", fields, inputs, settings)


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    seed = args.seed
    if seed is None:
        seed = draw_seed()
        logger.warning("no --seed given; drew %d from entropy", seed)
    suite = run_suite(seed=seed, intensity=args.intensity, inject_fault=args.inject_fault)
    sys.stdout.write(dumps(build_verify_report(suite)))
    passed = sum(c.ok for c in suite.checks)
    sys.stderr.write(f"verify ({args.intensity}, seed {seed}): {passed}/{len(suite.checks)} checks passed\n")
    for c in suite.checks:
        if not c.ok:
            sys.stderr.write(f"  FAIL {c.name}: {c.failures}/{c.cases} cases; first: {c.first_failure}\n")
    return EXIT_OK if suite.passed else EXIT_VERIFY


def cmd_ingest_check(args: argparse.Namespace, settings: Settings) -> int:
    spec = load_microdata_spec(args.spec)
    report: Dict[str, Any] = {"schema": "obscausal.ingest/1", "csv": args.csv, "spec": args.spec}
    tab = load_counts(args.csv, spec)
    report.update({"rows": tab.rows, "excluded": tab.excluded, "table": list(tab.counts.cells())})
    if spec.covariate_columns:
        strat = load_stratified(args.csv, spec, merge=parse_merge(args.merge or []))
        report["strata"] = {s.label: list(s.counts.cells()) for s in strat.table.strata}
        report["weights"] = dict(zip(strat.table.labels, strat.table.weights))
    sys.stdout.write(dumps(report))
    sys.stderr.write(f"{tab.rows} rows, {tab.excluded} excluded, table {tab.counts.cells()}\n")
    return EXIT_OK


# ----------------------------
# Parser
# ----------------------------
def _add_table_args(p: argparse.ArgumentParser, summary: bool = True) -> None:
    p.add_argument("--table", help="counts x01,x11,x00,x10 (first digit exposure, second outcome)")
    p.add_argument("--csv", help="microdata CSV file")
    p.add_argument("--spec", help="column-spec file for --csv")
    if summary:
        p.add_argument("--pe", help="exposure prevalence P(e=1)")
        p.add_argument("--pd", help="outcome prevalence P(d=1)")
        p.add_argument("--measure", help="association measure KIND=VALUE, e.g. rr=5.8")
    else:
        p.set_defaults(pe=None, pd=None, measure=None)


def _add_evidence_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bc-e", help="probandwise twin concordance of the exposure (0.67 or 67%%)")
    p.add_argument("--bc-d", help="probandwise twin concordance of the outcome")
    p.add_argument("--pc-e", help="pairwise twin concordance of the exposure")
    p.add_argument("--pc-d", help="pairwise twin concordance of the outcome")
    p.add_argument("--prev-e", help="override the exposure prevalence taken from the table")
    p.add_argument("--prev-d", help="override the outcome prevalence taken from the table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obscausal", description="Observational causality testing")
    parser.add_argument("--log-level", help="override OBSCAUSAL_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="threshold of sufficient randomness T")
    _add_table_args(p)
    p.add_argument("--haldane", action="store_true", help="add 0.5 to every cell first")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("test", help="compare the randomness lower bound with T")
    _add_table_args(p)
    _add_evidence_args(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("fpc", help="finite-population threshold T_n by resampling")
    _add_table_args(p, summary=False)
    _add_evidence_args(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_fpc)

    p = sub.add_parser("adjust", help="covariate-adjusted threshold T_c")
    p.add_argument("--stratum", action="append", help="LABEL:x01,x11,x00,x10 (repeatable)")
    p.add_argument("--csv", help="microdata CSV file with covariate columns")
    p.add_argument("--spec", help="column-spec file for --csv")
    p.add_argument("--merge", action="append", help="pool stratum SRC into DST (repeatable)")
    p.add_argument("--tol", type=float, help="solver tolerance on tau")
    _add_evidence_args(p)
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("verify", help="run the property and oracle suite")
    p.add_argument("--seed", type=int)
    p.add_argument("--intensity", choices=["quick", "full"], default="full")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ingest-check", help="tabulate a microdata file without analysis")
    p.add_argument("--csv", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--merge", action="append")
    p.set_defaults(func=cmd_ingest_check)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings()
        level = (args.log_level or settings.log_level).upper()
        if not isinstance(logging.getLevelName(level), int):
            raise UsageError(f"unknown log level {level!r}")
        logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        logging.getLogger().setLevel(level)
        return args.func(args, settings)
    except (UsageError, ConfigError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (ObsCausalError, ValidationError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
