import csv
import math
from fractions import Fraction

import mpmath
import pytest

import oracles
from conftest import DATA
from fairagg.compas import (
    AuditConfig,
    FilterSpec,
    RowErrors,
    SchemaError,
    StageError,
    audit_file,
    load_compas_csv,
    run_audit,
)
from fairagg.core import GroupPartition, UtilitySpec, PredictionRecord, PredictionStream
from fairagg.estimation import COMPAS_SPACE, NO_RECID, RECID

FIXTURE_CONFIG = dict(resolution=10)


def _rows():
    with (DATA / "compas_fixture.csv").open(newline="") as fh:
        return list(csv.DictReader(fh))


def _write(tmp_path, header, rows, name="in.csv"):
    path = tmp_path / name
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


class TestLoad:
    def test_fixture(self, fixture_csv):
        data = load_compas_csv(fixture_csv)
        assert len(data.stream) == 52
        assert data.stream.space == COMPAS_SPACE
        assert data.partition.groups == ("Black", "non-Black")
        assert data.partition.positive_label == NO_RECID
        first = data.stream.records[0]
        assert (first.input_id, first.raw_score, first.ground_truth, first.group) == ("1000", 3, RECID, "Black")

    def test_decile_out_of_range(self, tmp_path):
        path = _write(tmp_path, ["id", "race", "decile_score", "two_year_recid"],
                      [[1, "Caucasian", 11, 0], [2, "African-American", 4, 1], [3, "Hispanic", 2, 0]])
        with pytest.raises(RowErrors) as exc:
            load_compas_csv(path)
        assert len(exc.value.errors) == 1
        assert exc.value.errors[0][0] == 2
        data = load_compas_csv(path, skip_bad_rows=True)
        assert len(data.stream) == 2
        assert data.provenance()["removed_bad_rows"] == 1

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError):
            load_compas_csv(path)

    def test_missing_columns(self, tmp_path):
        path = _write(tmp_path, ["id", "race", "decile_score"], [[1, "Other", 3]])
        with pytest.raises(SchemaError, match="two_year_recid"):
            load_compas_csv(path)

    def test_missing_filter_column(self, tmp_path):
        path = _write(tmp_path, ["race", "decile_score", "two_year_recid"], [["Other", 3, 0]])
        with pytest.raises(SchemaError, match="days_b_screening_arrest"):
            load_compas_csv(path, FilterSpec(screening_window=True))

    def test_row_ids_default_to_line_numbers(self, tmp_path):
        path = _write(tmp_path, ["race", "decile_score", "two_year_recid"],
                      [["Other", 3, 0], ["African-American", 5, 1]])
        data = load_compas_csv(path)
        assert [r.input_id for r in data.stream.records] == ["2", "3"]

    def test_duplicate_ids_are_separate_units(self, tmp_path):
        path = _write(tmp_path, ["id", "race", "decile_score", "two_year_recid"],
                      [[7, "Other", 3, 0], [7, "African-American", 5, 1], [8, "Other", 1, 0]])
        data = load_compas_csv(path)
        assert sorted(data.stream.input_ids()) == ["7#0", "7#1", "8"]

    def test_filter_audit_trail(self, fixture_csv):
        data = load_compas_csv(fixture_csv, FilterSpec.propublica())
        prov = data.provenance()
        removed = sum(prov["removed_by_filter"].values()) + prov["removed_bad_rows"]
        assert prov["rows_read"] == 52
        assert prov["rows_read"] - removed == prov["n_records"] == len(data.stream)
        # brute-force recount of the same rules, applied in order
        kept = 0
        expected = dict.fromkeys(["screening_window", "recid_flag", "ordinary_traffic", "score_text"], 0)
        for r in _rows():
            d = r["days_b_screening_arrest"]
            if not d or not -30 <= float(d) <= 30:
                expected["screening_window"] += 1
            elif r["is_recid"] == "-1":
                expected["recid_flag"] += 1
            elif r["c_charge_degree"] == "O":
                expected["ordinary_traffic"] += 1
            elif r["score_text"] == "N/A":
                expected["score_text"] += 1
            else:
                kept += 1
        assert prov["removed_by_filter"] == expected
        assert kept == len(data.stream)

    def test_custom_groups(self, fixture_csv):
        data = load_compas_csv(fixture_csv, group_a="African-American", group_b="Caucasian")
        assert data.partition.groups == ("African-American", "Caucasian")
        assert "Hispanic" in set(data.partition.group_of.values())

    def test_partition_totals(self, fixture_csv):
        data = load_compas_csv(fixture_csv)
        sizes = [len(data.partition.members(g)) for g in data.partition.groups]
        assert sum(sizes) == len(data.stream)


class TestAudit:
    def test_fixture_matches_oracle(self, fixture_csv):
        report = audit_file(fixture_csv, AuditConfig(**FIXTURE_CONFIG))
        rows = _rows()
        n = len(rows)
        probs = [oracles.decile_prob(int(r["decile_score"])) for r in rows]
        ys = [int(r["two_year_recid"]) for r in rows]
        brier = sum(-2 * (p - y) ** 2 for p, y in zip(probs, ys)) / n
        log = sum(mpmath.log(oracles._mp(p if y else 1 - p)) for p, y in zip(probs, ys)) / n

        def fnr(black):
            sel = [p for p, y, r in zip(probs, ys, rows) if y == 0 and (r["race"] == "African-American") == black]
            return sum(sel, Fraction(0)) / len(sel)

        assert report.brier == pytest.approx(float(brier), abs=1e-12)
        assert report.log == pytest.approx(float(log), abs=1e-12)
        assert report.fnr_black == pytest.approx(float(fnr(True)), abs=1e-12)
        assert report.fnr_nonblack == pytest.approx(float(fnr(False)), abs=1e-12)
        assert report.eqopp == pytest.approx(-abs(float(fnr(True) - fnr(False))), abs=1e-12)
        assert report.utilities["reciprocal"]["eqopp"] == pytest.approx(1 / abs(report.eqopp))
        assert report.utilities["log-eqopp"]["eqopp"] == pytest.approx(math.log(1 / abs(report.eqopp)))

    def test_fixture_report_byte_exact(self, fixture_csv, tmp_path):
        audit_file(fixture_csv, AuditConfig(out_dir=tmp_path, **FIXTURE_CONFIG))
        assert (tmp_path / "report.json").read_bytes() == (DATA / "compas_fixture_expected.json").read_bytes()
        assert (tmp_path / "sweep_reciprocal.csv").read_bytes() == (
            DATA / "compas_fixture_sweep_reciprocal.csv"
        ).read_bytes()

    def test_deterministic(self, fixture_csv, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        audit_file(fixture_csv, AuditConfig(out_dir=a, svg=True, **FIXTURE_CONFIG))
        audit_file(fixture_csv, AuditConfig(out_dir=b, svg=True, **FIXTURE_CONFIG))
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        assert "sweep_log-eqopp.svg" in names
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_degenerate_stream(self):
        records = tuple(
            PredictionRecord(f"r{i}", NO_RECID, raw_score=0, group="Black" if i % 2 else "non-Black")
            for i in range(10)
        )
        stream = PredictionStream(COMPAS_SPACE, records)
        part = GroupPartition.from_stream(stream, ("Black", "non-Black"), NO_RECID)
        with pytest.raises(StageError) as exc:
            run_audit(stream, part, AuditConfig(resolution=5))
        # eqopp is exactly 0, where reciprocal utilities are undefined
        assert exc.value.stage == "utilities:reciprocal"

        linear = {"lin": {m: UtilitySpec("linear") for m in ("brier", "log", "eqopp")}}
        report = run_audit(stream, part, AuditConfig(resolution=5, utility_configs=linear))
        assert report.brier == pytest.approx(-2e-8, rel=1e-9)  # -((0.9999 - 1)^2 + 0.0001^2)
        assert report.eqopp == 0.0
        assert report.n_records == 10
        assert report.group_sizes == {"Black": 5, "non-Black": 5}

    def test_stage_labels(self):
        records = (PredictionRecord("a", RECID, raw_score=3, group="Black"),
                   PredictionRecord("b", NO_RECID, raw_score=3, group="non-Black"))
        stream = PredictionStream(COMPAS_SPACE, records)
        part = GroupPartition.from_stream(stream, ("Black", "non-Black"), NO_RECID)
        with pytest.raises(StageError) as exc:
            run_audit(stream, part)
        assert exc.value.stage == "fairness"
