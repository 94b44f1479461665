"""Command-line interface.

Exit codes: 0 success, 2 data/input error, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import aggregation, compas
from .accuracy import accuracy_report
from .core import (
    AggregationSpec,
    FairAggError,
    GroupPartition,
    MeasureVector,
    OutcomeSpace,
    PredictionRecord,
    PredictionStream,
    UTILITY_KINDS,
    UtilitySpec,
    uniform_input_distribution,
)
from .datasets import find_compas_csv
from .estimation import ESTIMATORS, get_estimator, uniquify_ids
from .fairness import FairnessMeasureSpec, fairness_report
from .scoring import ScoringRule

EXIT_OK = 0
EXIT_DATA = 2
EXIT_USAGE = 64

ACCURACY_IDS = ("brier", "log", "spherical")
WEIGHT_SUM_TOL = 1e-6

log = logging.getLogger("fairagg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- data loading


def _is_compas_csv(path: Path) -> bool:
    with path.open(newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    return "decile_score" in header


def _filter_spec(args) -> compas.FilterSpec:
    if getattr(args, "propublica_filter", False):
        return compas.FilterSpec.propublica()
    names = getattr(args, "filter", None) or []
    return compas.FilterSpec(**{n: True for n in names})


def load_generic_csv(path: Path, labels: Optional[Sequence[str]] = None) -> PredictionStream:
    """Stream CSV with columns input_id, ground_truth and optional sampled_output, raw_score, group."""
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"input_id", "ground_truth"} <= set(reader.fieldnames):
            raise compas.SchemaError(f"{path} needs input_id and ground_truth columns")
        rows = list(reader)
    if not rows:
        raise compas.SchemaError(f"{path} has no data rows")

    def opt(row, key):
        value = (row.get(key) or "").strip()
        return value or None

    if labels is None:
        seen = {r["ground_truth"].strip() for r in rows} | {v for r in rows if (v := opt(r, "sampled_output"))}
        labels = sorted(seen)
        if len(labels) == 1:
            raise compas.SchemaError("only one outcome label observed; pass --labels")
    records = []
    for r in rows:
        raw = opt(r, "raw_score")
        records.append(
            PredictionRecord(
                input_id=r["input_id"].strip(),
                ground_truth=r["ground_truth"].strip(),
                sampled_output=opt(r, "sampled_output"),
                raw_score=float(raw) if raw is not None else None,
                group=opt(r, "group"),
            )
        )
    return PredictionStream(OutcomeSpace(tuple(labels)), tuple(records))


def _load_stream(args, need_groups: bool = False):
    """Return (stream, partition-or-None, default estimator name)."""
    if not args.data:
        raise UsageError("--data is required")
    path = Path(args.data)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    if path.suffix == ".json":
        stream = PredictionStream.from_json(json.loads(path.read_text(encoding="utf-8")))
        return stream, None, "mle"
    if _is_compas_csv(path):
        data = compas.load_compas_csv(
            path,
            _filter_spec(args),
            group_col=getattr(args, "group_col", None) or "race",
            group_a=getattr(args, "group_a", None) or "African-American",
            group_b=getattr(args, "group_b", None),
            skip_bad_rows=args.skip_bad_rows,
        )
        return data.stream, data.partition, "compas-decile"
    labels = args.labels.split(",") if getattr(args, "labels", None) else None
    return load_generic_csv(path, labels), None, "mle"


def _partition_for(stream: PredictionStream, args) -> GroupPartition:
    if args.partition:
        return GroupPartition.from_json(json.loads(Path(args.partition).read_text(encoding="utf-8")))
    if not args.group_a:
        raise UsageError("--group-a (or --partition) is required for this data")
    if args.positive_label is None:
        raise UsageError("--positive-label is required for this data")
    if args.group_b:
        groups = (args.group_a, args.group_b)
        group_of = {r.input_id: r.group for r in stream.records}
    else:
        rest = f"not {args.group_a}"
        groups = (args.group_a, rest)
        group_of = {r.input_id: args.group_a if r.group == args.group_a else rest for r in stream.records}
    return GroupPartition(group_of, groups, args.positive_label)


# ---------------------------------------------------------------- aggregation inputs


def _parse_measures(args) -> MeasureVector:
    if args.measures:
        pairs = []
        for item in args.measures.split(","):
            name, sep, value = item.partition("=")
            if not sep:
                raise UsageError(f"--measures entries look like name=value, got {item!r}")
            try:
                pairs.append((name.strip(), float(value)))
            except ValueError:
                raise UsageError(f"measure value {value!r} is not a number") from None
        acc = [p for p in pairs if p[0] in ACCURACY_IDS]
        fair = [p for p in pairs if p[0] not in ACCURACY_IDS]
        return MeasureVector(tuple(acc + fair), len(acc), len(fair))
    if args.data:
        report = compas.audit_file(
            args.data,
            compas.AuditConfig(resolution=3, utility_configs={}),
            _filter_spec(args),
            args.skip_bad_rows,
        )
        return report.measure_vector()
    raise UsageError("give --measures name=value,... or --data")


def _parse_utilities(spec: str, ids: Sequence[str]) -> dict:
    if "=" not in spec:
        if spec not in UTILITY_KINDS or spec == "piecewise":
            raise UsageError(f"unknown utility {spec!r}")
        return {m: UtilitySpec(spec) for m in ids}
    out = {m: UtilitySpec("reciprocal-abs") for m in ids}
    for item in spec.split(","):
        name, _, kind = item.partition("=")
        if name not in out:
            raise UsageError(f"utility given for unknown measure {name!r}")
        if kind not in UTILITY_KINDS or kind == "piecewise":
            raise UsageError(f"unknown utility {kind!r}")
        out[name] = UtilitySpec(kind)
    return out


def _parse_weights(text: str, ids: Sequence[str]) -> dict:
    items = text.split(",")
    try:
        if all("=" in i for i in items):
            weights = {k.strip(): float(v) for k, _, v in (i.partition("=") for i in items)}
        else:
            if len(items) != len(ids):
                raise UsageError(f"{len(items)} weights given for {len(ids)} measures ({', '.join(ids)})")
            weights = dict(zip(ids, (float(i) for i in items)))
    except ValueError:
        raise UsageError(f"could not parse weights {text!r}") from None
    if set(weights) != set(ids):
        raise UsageError(f"weights must cover exactly {', '.join(ids)}")
    total = math.fsum(weights.values())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise UsageError(f"weights sum to {total!r}; they must sum to 1 within {WEIGHT_SUM_TOL}")
    if total != 1.0:
        log.warning("weights sum to %r; renormalizing", total)
        weights = {k: w / total for k, w in weights.items()}
    return weights


# ---------------------------------------------------------------- commands


def _emit(args, payload: dict, csv_text: Optional[str] = None) -> None:
    if args.format == "csv":
        if csv_text is None:
            buf = io.StringIO()
            flat = {k: v for k, v in payload.items() if not isinstance(v, (dict, list))}
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(flat.keys())
            w.writerow(flat.values())
            csv_text = buf.getvalue()
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def cmd_score(args) -> int:
    stream, _, default_est = _load_stream(args)
    estimator = get_estimator(args.estimator or default_est)
    stream = uniquify_ids(stream) if estimator is ESTIMATORS["compas-decile"] else stream
    model = estimator(stream)
    report = accuracy_report(ScoringRule.parse(args.rule), model, stream.ground_truth(), uniform_input_distribution(stream))
    _emit(args, report)
    return EXIT_OK


def cmd_fairness(args) -> int:
    stream, partition, default_est = _load_stream(args)
    estimator = get_estimator(args.estimator or default_est)
    if partition is None or args.partition:
        partition = _partition_for(stream, args)
    model = estimator(stream)
    spec = FairnessMeasureSpec(args.measure, partition)
    report = fairness_report(spec, model, stream.ground_truth(), uniform_input_distribution(stream))
    _emit(args, report)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    v = _parse_measures(args)
    ids = v.measure_ids
    weights = _parse_weights(args.weights, ids)
    utilities = _parse_utilities(args.utility, ids)
    spec = AggregationSpec(weights, utilities, alpha=args.alpha)
    aggregation.validate_utilities(utilities, v)
    value = aggregation.overall(spec, v)
    payload = {
        "overall": value,
        "alpha": spec.alpha,
        "measures": v.as_dict(),
        "weights": {m: spec.weights[m] for m in ids},
        "utilities": {m: utilities[m].kind for m in ids},
        "utility_values": {m: aggregation.utility_eval(utilities[m], v[m]) for m in ids},
    }
    _emit(args, payload)
    return EXIT_OK


def cmd_sweep(args) -> int:
    v = _parse_measures(args)
    utilities = _parse_utilities(args.utility, v.measure_ids)
    result = aggregation.simplex_sweep(v, utilities, args.resolution, alpha=args.alpha)
    summary = result.summary()
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(result.to_csv(), encoding="utf-8")
        summary["csv"] = "sweep.csv"
        if args.svg:
            (out / "sweep.svg").write_text(aggregation.ternary_svg(result), encoding="utf-8")
            summary["svg"] = "sweep.svg"
        (out / "sweep.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    _emit(args, summary, csv_text=result.to_csv() if args.format == "csv" else None)
    return EXIT_OK


def cmd_audit_compas(args) -> int:
    data = args.data or find_compas_csv()
    if data is None:
        raise UsageError("--data is required (or set COMPAS_CSV / place the file under data/)")
    config = compas.AuditConfig(
        resolution=args.resolution,
        out_dir=Path(args.out_dir) if args.out_dir else None,
        svg=args.svg,
    )
    report = compas.audit_file(data, config, _filter_spec(args), args.skip_bad_rows)
    if args.format == "csv":
        _emit(args, {k: v for k, v in report.to_json().items() if not isinstance(v, dict)})
    else:
        sys.stdout.write(report.dumps())
    return EXIT_OK


def load_schema(command: str) -> dict:
    """The checked-in JSON schema for a command's JSON output."""
    name = "audit" if command == "audit-compas" else command
    return json.loads(resources.files("fairagg").joinpath("schemas", f"{name}.json").read_text(encoding="utf-8"))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--data", help="input stream: ProPublica CSV, generic stream CSV, or stream JSON")
    common.add_argument("--out-dir", help="directory for written artifacts")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--skip-bad-rows", action="store_true", help="drop unparseable rows instead of failing")
    common.add_argument("--propublica-filter", action="store_true", help="apply every ProPublica row filter")
    common.add_argument("--filter", action="append", choices=sorted(compas.FILTER_RULES), help="apply one filter rule")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="fairagg", description="Aggregate accuracy and fairness measures of prediction algorithms.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", parents=[common], help="estimated accuracy under one scoring rule")
    p.add_argument("--rule", required=True, choices=[r.value for r in ScoringRule])
    p.add_argument("--estimator", choices=sorted(ESTIMATORS))
    p.add_argument("--labels", help="comma-separated outcome labels for generic CSVs")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fairness", parents=[common], help="a group fairness measure")
    p.add_argument("--measure", choices=("eqopp",), default="eqopp")
    p.add_argument("--estimator", choices=sorted(ESTIMATORS))
    p.add_argument("--group-col", default=None)
    p.add_argument("--group-a")
    p.add_argument("--group-b")
    p.add_argument("--positive-label")
    p.add_argument("--partition", help="GroupPartition JSON file")
    p.add_argument("--labels", help="comma-separated outcome labels for generic CSVs")
    p.set_defaults(func=cmd_fairness)

    for name, func, hlp in (
        ("aggregate", cmd_aggregate, "Overall value for one weight vector"),
        ("sweep", cmd_sweep, "Overall value over the weight simplex"),
    ):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--measures", help="name=value,... (default: computed from --data)")
        p.add_argument("--utility", default="reciprocal-abs", help="one kind for all, or measure=kind,...")
        p.add_argument("--alpha", type=float, default=0.0)
        if name == "aggregate":
            p.add_argument("--weights", required=True, help="comma-separated, in measure order, or name=w,...")
        else:
            p.add_argument("--resolution", type=int, default=100)
            p.add_argument("--svg", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("audit-compas", parents=[common], help="full COMPAS audit")
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_audit_compas)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fairagg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FairAggError, OSError, ValueError, KeyError) as exc:
        print(f"fairagg: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
