import pytest

from mmattack.errors import ConfigError
from mmattack.metrics import (ABSENT, AttackSummary, TargetRow, build_report,
                              compute_aqn, compute_asr, read_rows_csv,
                              render_value, rows_from_trace_dicts, summarize,
                              write_dat, write_rows_csv, write_summary_csv,
                              write_sweep_csv)


def _row(attack, tid, success, qs, qa, seed=0, it=1, ms=0.0):
    return TargetRow(attack, tid, seed, success, qs, qa, it, ms)


def test_aqn_means_successes_only():
    assert compute_aqn([10, 20, 30], [True, False, True]) == 20.0


def test_aqn_absent_without_successes():
    assert compute_aqn([10, 20], [False, False]) is None
    assert render_value(None) == ABSENT == "-"


def test_aqn_length_mismatch():
    with pytest.raises(ConfigError):
        compute_aqn([1, 2], [True])


def test_asr():
    assert compute_asr([True, False, False, True]) == 0.5
    assert compute_asr([False]) == 0.0
    with pytest.raises(ConfigError):
        compute_asr([])


def test_render_value_round_trip_floats():
    assert render_value(0.1 + 0.2) == repr(0.30000000000000004)
    assert float(render_value(1.0 / 3.0)) == 1.0 / 3.0
    assert render_value(True) == "1" and render_value(False) == "0"
    assert render_value(7) == "7"


def test_summarize_orders_and_accounts():
    rows = [
        _row("mimic", 0, True, 11, 1),
        _row("nes", 0, True, 1, 500),
        _row("mimic", 1, False, 11, 40),
        _row("mimic", 2, True, 11, 3),
    ]
    s = summarize(rows)
    assert [x.attack for x in s] == ["mimic", "nes"]
    mimic = s[0]
    assert mimic.n_targets == 3 and mimic.n_success == 2
    assert mimic.asr == pytest.approx(2 / 3)
    assert mimic.aqn_total == pytest.approx((12 + 14) / 2)
    assert mimic.aqn_attack_only == pytest.approx(2.0)


def test_summary_absent_aqn():
    s = summarize([_row("zoo", 0, False, 1, 999)])
    assert s[0].aqn_total is None and s[0].asr == 0.0


def test_rows_csv_round_trip(tmp_path):
    rows = [
        _row("mimic", 0, True, 11, 1, ms=12.5),
        _row("square", 3, False, 1, 5000, seed=9, it=4999),
    ]
    p = tmp_path / "rows.csv"
    write_rows_csv(rows, p)
    back = read_rows_csv(p)
    assert [r.to_dict() for r in back] == [r.to_dict() for r in rows]
    assert back[0].queries_total == 12


def test_summary_csv_renders_dash(tmp_path):
    p = tmp_path / "summary.csv"
    write_summary_csv([AttackSummary("zoo", 2, 0, 0.0, None, None)], p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "attack,n_targets,n_success,asr,aqn_total,aqn_attack_only"
    assert lines[1] == "zoo,2,0,0.0,-,-"


def test_sweep_csv_and_dat(tmp_path):
    rows = [
        {"iteration": 1, "qn1": 10, "qn2": 5.0, "generated": 10, "asr": 0.5, "aqn": 12.0},
        {"iteration": 2, "qn1": 20, "qn2": 1.0, "generated": 10, "asr": 0.0, "aqn": None},
    ]
    csv_p = tmp_path / "sweep.csv"
    write_sweep_csv(rows, csv_p)
    lines = csv_p.read_text().strip().splitlines()
    assert lines[0] == "iteration,qn1,qn2,generated,asr,aqn"
    assert lines[2].endswith(",-")

    dat_p = tmp_path / "sweep.dat"
    write_dat(rows, ("iteration", "qn1", "aqn"), dat_p)
    dlines = dat_p.read_text().splitlines()
    assert dlines[0] == "# iteration qn1 aqn"
    assert dlines[1] == "1 10 12.0"
    assert dlines[2] == "2 20 -"


def test_report_consistency():
    rows = [_row("mimic", i, i % 2 == 0, 11, i + 1) for i in range(4)]
    report = build_report(rows, {"note": "x"})
    d = report.to_dict()
    assert len(d["rows"]) == 4
    assert d["metadata"] == {"note": "x"}
    assert d["summaries"][0]["n_success"] == 2


def test_rows_from_trace_dicts():
    rows = [_row("mimic", 0, True, 11, 1)]
    entries = [{"row": rows[0].to_dict(), "trace": {"anything": 1}}]
    rebuilt = rows_from_trace_dicts(entries)
    assert rebuilt[0].to_dict() == rows[0].to_dict()
