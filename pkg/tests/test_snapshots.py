import math

import pytest

from e2credit.errors import InputFormatError
from e2credit.snapshots import (
    SNAPSHOT_COLUMNS,
    compute_spread_row,
    build_records,
    read_snapshots,
    write_snapshot_csv,
    write_spread_csv,
)
from e2credit.structural import ModelParams

PARAMS = ModelParams()


def base_row(**overrides):
    row = {
        "firm_id": "ACME",
        "date": "2016-02-05",
        "stock_price": 10.0,
        "market_cap": 500.0,
        "fx_rate": 1.0,
        "is_banking": False,
        "long_term_debt": 1000.0,
        "short_term_debt": 0.0,
        "other_lt_liabilities": 0.0,
        "other_st_liabilities": 0.0,
        "lease_obligations": 0.0,
        "minority_interest": 100.0,
        "preferred_equity": 0.0,
        "hist_vol_30": 0.3,
        "hist_vol_60": 0.3,
        "hist_vol_120": 0.3,
        "sp_rating": "BBB",
        "moody_rating": "Baa2",
        "sector": "industrial",
        "country": "US",
        "ig_cdx_bps": 70.0,
        "cds_5y_bps": 90.0,
    }
    row.update(overrides)
    return row


def write_rows(path, rows):
    write_snapshot_csv(rows, path)
    return path


class TestReadSnapshots:
    def test_round_trip(self, tmp_path):
        path = write_rows(tmp_path / "snap.csv", [base_row()])
        snaps = read_snapshots(path)
        assert len(snaps) == 1
        assert snaps[0].firm_id == "ACME"
        assert snaps[0].get("stock_price") == 10.0
        assert snaps[0].get("impl_vol_3m") is None
        assert snaps[0].get("is_banking") is False

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        cols = [c for c in SNAPSHOT_COLUMNS if c != "ig_cdx_bps"]
        path.write_text(",".join(cols) + "\n", encoding="utf-8")
        with pytest.raises(InputFormatError, match="ig_cdx_bps"):
            read_snapshots(path)

    def test_bad_number_reports_line(self, tmp_path):
        path = write_rows(
            tmp_path / "bad.csv", [base_row(), base_row(firm_id="B", stock_price="oops")]
        )
        with pytest.raises(InputFormatError, match=r"bad.csv:3.*stock_price"):
            read_snapshots(path)

    def test_bad_date(self, tmp_path):
        path = write_rows(tmp_path / "bad.csv", [base_row(date="05/02/2016")])
        with pytest.raises(InputFormatError, match="ISO date"):
            read_snapshots(path)

    def test_duplicate_key(self, tmp_path):
        path = write_rows(tmp_path / "dup.csv", [base_row(), base_row()])
        with pytest.raises(InputFormatError, match="duplicate"):
            read_snapshots(path)

    def test_extra_columns_ignored(self, tmp_path):
        # An augmented spreads.csv can be fed back in: unknown columns pass.
        path = write_rows(tmp_path / "base.csv", [base_row()])
        lines = path.read_text(encoding="utf-8").splitlines()
        extra = tmp_path / "extra.csv"
        extra.write_text(
            lines[0] + ",custom\n" + lines[1] + ",hello\n", encoding="utf-8"
        )
        snaps = read_snapshots(extra)
        assert snaps[0].firm_id == "ACME"
        assert snaps[0].get("stock_price") == 10.0


class TestComputeSpreadRow:
    def test_composed_example(self, tmp_path):
        # Debt-per-share example feeds the spread: D = (1000-100)/50 = 18.
        path = write_rows(tmp_path / "snap.csv", [base_row()])
        snap = read_snapshots(path)[0]
        spread = compute_spread_row(snap, PARAMS)
        assert spread.ok
        assert spread.debt_per_share == 18.0
        assert spread.selected_vol == 0.3
        mad = 0.5 * 18 / (10 + 0.5 * 18)
        expected = 0.7 * (4.0 / 9.0) * mad * 0.09 * 1e4
        assert spread.e2c_bps == pytest.approx(expected, rel=1e-12)
        assert spread.creditgrades_bps > 0.0

    def test_zero_debt_zero_spread(self, tmp_path):
        row = base_row(long_term_debt=0.0, minority_interest=0.0)
        snap = read_snapshots(write_rows(tmp_path / "s.csv", [row]))[0]
        spread = compute_spread_row(snap, PARAMS)
        assert spread.ok
        assert spread.debt_per_share == 0.0
        assert spread.e2c_bps == 0.0
        assert spread.creditgrades_bps == 0.0

    def test_missing_field_reason(self, tmp_path):
        row = base_row(stock_price=None)
        snap = read_snapshots(write_rows(tmp_path / "s.csv", [row]))[0]
        spread = compute_spread_row(snap, PARAMS)
        assert not spread.ok
        assert "stock_price" in spread.reason

    def test_no_vol_quotes_reason(self, tmp_path):
        row = base_row(hist_vol_30=None, hist_vol_60=None, hist_vol_120=None)
        snap = read_snapshots(write_rows(tmp_path / "s.csv", [row]))[0]
        spread = compute_spread_row(snap, PARAMS)
        assert spread.reason == "no volatility quotes"

    def test_banking_needs_only_ltd(self, tmp_path):
        row = base_row(
            is_banking=True,
            short_term_debt=None,
            other_lt_liabilities=None,
            other_st_liabilities=None,
            lease_obligations=None,
        )
        snap = read_snapshots(write_rows(tmp_path / "s.csv", [row]))[0]
        assert compute_spread_row(snap, PARAMS).ok


class TestBuildRecords:
    def test_records_carry_spreads_and_fields(self, tmp_path):
        rows = [base_row(), base_row(firm_id="B", stock_price=None)]
        snaps = read_snapshots(write_rows(tmp_path / "s.csv", rows))
        records, spreads = build_records(snaps, PARAMS)
        assert len(records) == 2
        assert records[0].e2c_bps is not None
        assert records[0].is_complete()
        assert records[1].e2c_bps is None
        assert not records[1].is_complete()
        assert spreads[("B", "2016-02-05")].reason != ""

    def test_spread_csv_written(self, tmp_path):
        rows = [base_row(), base_row(firm_id="B", stock_price=None)]
        snaps = read_snapshots(write_rows(tmp_path / "s.csv", rows))
        _, spreads = build_records(snaps, PARAMS)
        out = tmp_path / "aug.csv"
        write_spread_csv(snaps, spreads, out)
        lines = out.read_text(encoding="utf-8").splitlines()
        header = lines[0].split(",")
        assert header[-5:] == [
            "e2c_bps", "creditgrades_bps", "debt_per_share", "selected_vol", "reason",
        ]
        good = dict(zip(header, lines[1].split(",")))
        assert float(good["e2c_bps"]) > 0
        assert good["reason"] == ""
        bad = dict(zip(header, lines[2].split(",")))
        assert bad["e2c_bps"] == ""
        assert "stock_price" in bad["reason"]
