"""End-to-end COMPAS audit on the ProPublica Broward County two-year file."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Union

from . import aggregation
from .accuracy import estimated_accuracy
from .core import (
    DomainError,
    FairAggError,
    GroupPartition,
    InputDistribution,
    MeasureVector,
    PredictionRecord,
    PredictionStream,
    UtilitySpec,
    uniform_input_distribution,
)
from .estimation import COMPAS_SPACE, NO_RECID, RECID, compas_decile_estimator, uniquify_ids
from .fairness import eq_opp, group_fnr
from .scoring import ScoringRule

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("decile_score", "race", "two_year_recid")
BLACK, NON_BLACK = "Black", "non-Black"
MEASURES = ("brier", "log", "eqopp")


class SchemaError(DomainError):
    """The input file is empty or lacks required columns."""


class RowErrors(DomainError):
    def __init__(self, errors: list):
        self.errors = errors
        first = "; ".join(f"line {n}: {msg}" for n, msg in errors[:3])
        super().__init__(f"{len(errors)} unparseable row(s) ({first})")


class StageError(FairAggError):
    """An audit stage failed; ``stage`` names it and ``__cause__`` holds the original."""

    def __init__(self, stage: str, exc: Exception):
        self.stage = stage
        super().__init__(f"audit stage '{stage}' failed: {exc}")


def _days_within_30(row: Mapping) -> bool:
    raw = (row.get("days_b_screening_arrest") or "").strip()
    if not raw:
        return False
    return -30 <= float(raw) <= 30


# each rule returns True to keep the row; order matters for the removal counts
FILTER_RULES: dict[str, tuple[str, Callable[[Mapping], bool]]] = {
    "screening_window": ("days_b_screening_arrest", _days_within_30),
    "recid_flag": ("is_recid", lambda r: (r.get("is_recid") or "").strip() != "-1"),
    "ordinary_traffic": ("c_charge_degree", lambda r: (r.get("c_charge_degree") or "").strip() != "O"),
    "score_text": ("score_text", lambda r: (r.get("score_text") or "").strip() not in ("", "N/A")),
}


@dataclass(frozen=True)
class FilterSpec:
    """Row exclusions from ProPublica's two-year analysis, each opt-in.

    All rules are off by default: the unfiltered file reproduces the reference
    audit values, while the full ProPublica filter does not.
    """

    screening_window: bool = False
    recid_flag: bool = False
    ordinary_traffic: bool = False
    score_text: bool = False

    @classmethod
    def propublica(cls) -> "FilterSpec":
        return cls(True, True, True, True)

    def enabled(self) -> list:
        return [name for name in FILTER_RULES if getattr(self, name)]


@dataclass(frozen=True)
class CompasRow:
    row_id: str
    decile_score: int
    race: str
    two_year_recid: int


@dataclass(frozen=True)
class CompasData:
    stream: PredictionStream
    partition: GroupPartition
    rows_read: int
    filter_counts: Mapping
    bad_rows: tuple = ()

    def provenance(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "removed_by_filter": dict(self.filter_counts),
            "removed_bad_rows": len(self.bad_rows),
            "n_records": len(self.stream),
        }


def _parse_int(raw: Optional[str], name: str, lo: int, hi: int) -> int:
    text = (raw or "").strip()
    try:
        value = int(text)
    except ValueError:
        raise ValueError(f"{name} {text!r} is not an integer") from None
    if not lo <= value <= hi:
        raise ValueError(f"{name} {value} is outside [{lo}, {hi}]")
    return value


def parse_row(row: Mapping, line: int, group_col: str = "race") -> CompasRow:
    row_id = (row.get("id") or "").strip() or str(line)
    decile = _parse_int(row.get("decile_score"), "decile_score", 0, 10)
    recid = _parse_int(row.get("two_year_recid"), "two_year_recid", 0, 1)
    race = (row.get(group_col) or "").strip()
    if not race:
        raise ValueError(f"{group_col} is empty")
    return CompasRow(row_id, decile, race, recid)


def load_compas_csv(
    path: Union[str, os.PathLike],
    filter_spec: Optional[FilterSpec] = None,
    *,
    group_col: str = "race",
    group_a: str = "African-American",
    group_b: Optional[str] = None,
    skip_bad_rows: bool = False,
) -> CompasData:
    """Read a ProPublica-schema CSV into a prediction stream and group partition.

    Outcomes are ``recid`` / ``no_recid`` from ``two_year_recid`` and the decile
    is kept as the raw score. With ``group_b`` unset the partition is
    ``group_a`` against everyone else (Black / non-Black for the defaults);
    with ``group_b`` set, every row is tagged with its raw ``group_col`` value
    and the two named values are the distinguished groups.
    """
    filter_spec = filter_spec or FilterSpec()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise SchemaError(f"{path} is empty or has no header row")
        required = [c if c != "race" else group_col for c in REQUIRED_COLUMNS]
        required += [FILTER_RULES[name][0] for name in filter_spec.enabled()]
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path} lacks required column(s): {', '.join(missing)}")

        counts = {name: 0 for name in filter_spec.enabled()}
        rows: list = []
        errors: list = []
        rows_read = 0
        for line, raw in enumerate(reader, start=2):
            rows_read += 1
            try:
                dropped = next((name for name in counts if not FILTER_RULES[name][1](raw)), None)
            except ValueError as exc:
                errors.append((line, f"filter column unparseable: {exc}"))
                continue
            if dropped is not None:
                counts[dropped] += 1
                continue
            try:
                rows.append(parse_row(raw, line, group_col))
            except ValueError as exc:
                errors.append((line, str(exc)))

    if errors and not skip_bad_rows:
        raise RowErrors(errors)
    for line, msg in errors:
        log.warning("skipping line %d: %s", line, msg)
    if not rows:
        raise SchemaError(f"{path} has no usable data rows")

    if group_b is None:
        if group_col == "race" and group_a == "African-American":
            tag_a, tag_rest = BLACK, NON_BLACK
        else:
            tag_a, tag_rest = group_a, f"not {group_a}"
        tag = lambda race: tag_a if race == group_a else tag_rest  # noqa: E731
        groups = (tag_a, tag_rest)
    else:
        tag = lambda race: race  # noqa: E731
        groups = (group_a, group_b)

    records = tuple(
        PredictionRecord(
            input_id=r.row_id,
            ground_truth=RECID if r.two_year_recid else NO_RECID,
            raw_score=r.decile_score,
            group=tag(r.race),
        )
        for r in rows
    )
    stream = uniquify_ids(PredictionStream(COMPAS_SPACE, records))
    partition = GroupPartition.from_stream(stream, groups, positive_label=NO_RECID)
    return CompasData(stream, partition, rows_read, counts, tuple(errors))


UTILITY_CONFIGS: dict[str, dict[str, UtilitySpec]] = {
    "reciprocal": {m: UtilitySpec("reciprocal-abs") for m in MEASURES},
    "log-eqopp": {
        "brier": UtilitySpec("reciprocal-abs"),
        "log": UtilitySpec("reciprocal-abs"),
        "eqopp": UtilitySpec("log-reciprocal-abs"),
    },
}


@dataclass(frozen=True)
class AuditConfig:
    resolution: int = 100
    out_dir: Optional[Path] = None
    svg: bool = False
    utility_configs: Mapping = field(default_factory=lambda: UTILITY_CONFIGS)


@dataclass(frozen=True)
class AuditReport:
    n_records: int
    brier: float
    log: float
    eqopp: float
    fnr_black: float
    fnr_nonblack: float
    group_sizes: Mapping
    utilities: Mapping
    sweeps: Mapping
    provenance: Mapping = field(default_factory=dict)

    def measure_vector(self) -> MeasureVector:
        return MeasureVector((("brier", self.brier), ("log", self.log), ("eqopp", self.eqopp)), 2, 1)

    def to_json(self) -> dict:
        return {
            "n_records": self.n_records,
            "provenance": dict(self.provenance),
            "group_sizes": dict(self.group_sizes),
            "brier": self.brier,
            "log": self.log,
            "eqopp": self.eqopp,
            "fnr_black": self.fnr_black,
            "fnr_nonblack": self.fnr_nonblack,
            "utilities": {k: dict(v) for k, v in self.utilities.items()},
            "sweeps": {k: dict(v) for k, v in self.sweeps.items()},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


class _stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (FairAggError, ValueError, ArithmeticError)) and not isinstance(
            exc, StageError
        ):
            raise StageError(self.name, exc) from exc
        return False


def run_audit(
    stream: PredictionStream,
    partition: GroupPartition,
    config: Optional[AuditConfig] = None,
    provenance: Optional[Mapping] = None,
) -> AuditReport:
    """Compute accuracy, fairness, utilities and weight sweeps for a COMPAS stream.

    Artifacts (sweep CSVs, summaries, optional SVGs, report.json) are written
    to ``config.out_dir`` when it is set; paths in the report are relative to it.
    """
    config = config or AuditConfig()
    with _stage("estimate"):
        stream = uniquify_ids(stream)
        model = compas_decile_estimator(stream)
        truth = stream.ground_truth()
        p: InputDistribution = uniform_input_distribution(stream)
        partition.check_stream(stream)
    with _stage("accuracy"):
        brier = estimated_accuracy(ScoringRule.BRIER, model, truth, p)
        log_acc = estimated_accuracy(ScoringRule.LOG, model, truth, p)
    with _stage("fairness"):
        g1, g2 = partition.groups[:2]
        fnr1 = group_fnr(model, truth, p, partition, g1)
        fnr2 = group_fnr(model, truth, p, partition, g2)
        eqopp = eq_opp(model, truth, p, partition)
    group_sizes = {g: 0 for g in partition.groups}
    for k in stream.input_ids():
        g = partition.group_of[k]
        group_sizes[g] = group_sizes.get(g, 0) + 1

    v = MeasureVector((("brier", brier), ("log", log_acc), ("eqopp", eqopp)), 2, 1)
    utilities: dict = {}
    sweeps: dict = {}
    out_dir = Path(config.out_dir) if config.out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for name, utils in config.utility_configs.items():
        with _stage(f"utilities:{name}"):
            utilities[name] = {m: aggregation.utility_eval(utils[m], v[m]) for m in v.measure_ids}
        with _stage(f"sweep:{name}"):
            result = aggregation.simplex_sweep(v, utils, config.resolution)
        summary = result.summary()
        if out_dir is not None:
            csv_name = f"sweep_{name}.csv"
            (out_dir / csv_name).write_text(result.to_csv(), encoding="utf-8")
            summary["csv"] = csv_name
            if config.svg:
                svg_name = f"sweep_{name}.svg"
                (out_dir / svg_name).write_text(
                    aggregation.ternary_svg(result, title=f"Overall value, utilities: {name}"), encoding="utf-8"
                )
                summary["svg"] = svg_name
        sweeps[name] = summary

    report = AuditReport(
        n_records=len(stream),
        brier=brier,
        log=log_acc,
        eqopp=eqopp,
        fnr_black=fnr1,
        fnr_nonblack=fnr2,
        group_sizes=group_sizes,
        utilities=utilities,
        sweeps=sweeps,
        provenance=dict(provenance or {"n_records": len(stream)}),
    )
    if out_dir is not None:
        (out_dir / "report.json").write_text(report.dumps(), encoding="utf-8")
    return report


def audit_file(
    path: Union[str, os.PathLike],
    config: Optional[AuditConfig] = None,
    filter_spec: Optional[FilterSpec] = None,
    skip_bad_rows: bool = False,
) -> AuditReport:
    with _stage("load"):
        data = load_compas_csv(path, filter_spec, skip_bad_rows=skip_bad_rows)
    return run_audit(data.stream, data.partition, config, provenance=data.provenance())
