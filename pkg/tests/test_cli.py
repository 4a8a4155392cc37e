"""Exit codes and printed output of the command-line tool."""

import csv

import pytest

from geowsn.cli import main
from geowsn.feasibility import AVERAGING_NOTE, CONVEXITY_CAVEAT

WRITE_HEX = "04 41 03000000 01000000 AA"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_decode_write_action(capsys):
    code, out, err = run_cli(capsys, "proto-decode", "--hex", WRITE_HEX)
    assert code == 0
    assert out.splitlines() == [
        "WriteFileData file=0x41 offset=3 len=1 payload=AA"
    ]
    assert err == ""


def test_decode_read_action(capsys):
    code, out, _ = run_cli(capsys, "proto-decode", "--hex",
                           "0141000000000C000000")
    assert code == 0
    assert out.splitlines() == ["ReadFileData file=0x41 offset=0 len=12"]


def test_decode_multi_action_listing(capsys):
    code, out, _ = run_cli(
        capsys, "proto-decode", "--hex",
        "04410300000001000000AA" + "0141000000000C000000")
    assert code == 0
    assert out.splitlines() == [
        "WriteFileData file=0x41 offset=3 len=1 payload=AA",
        "ReadFileData file=0x41 offset=0 len=12",
    ]


def test_decode_truncated_input_fails_with_offset(capsys):
    code, out, err = run_cli(capsys, "proto-decode", "--hex", "044103")
    assert code == 2
    assert out == ""
    assert "error:" in err


def test_decode_rejects_bad_hex(capsys):
    code, _, err = run_cli(capsys, "proto-decode", "--hex", "zz")
    assert code == 2
    assert "hex" in err


def test_encode_matches_decode(capsys):
    code, out, _ = run_cli(capsys, "proto-encode",
                           "write:0x41:3:AA", "read:0x41:0:12")
    assert code == 0
    wire = out.strip()
    assert wire == "04410300000001000000AA" + "0141000000000C000000".upper()
    code, out, _ = run_cli(capsys, "proto-decode", "--hex", wire)
    assert code == 0
    assert len(out.splitlines()) == 2


def test_encode_status_spec(capsys):
    code, out, _ = run_cli(capsys, "proto-encode", "status:0:0x41:3:1")
    assert code == 0
    assert out.strip() == "7F41030000000100000000"


def test_encode_rejects_bad_spec(capsys):
    code, _, err = run_cli(capsys, "proto-encode", "poke:0x41:3")
    assert code == 2
    assert "poke" in err


def test_encode_describes_grammar(capsys):
    code, out, _ = run_cli(capsys, "proto-encode", "--describe")
    assert code == 0
    assert "read:FILE:OFFSET:LENGTH" in out


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["proto-decode", "--hexx", "00"])
    assert info.value.code == 2


def test_no_subcommand_exits_2():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


@pytest.fixture
def trace_file(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text(
        "timestamp_unix,transect,t_soil_c,t_air_c\n"
        "0,E,29.0,0.0\n"
        "600,E,29.0,0.0\n"
    )
    return path


def test_feas_analyze_prints_notes_and_writes_report(capsys, tmp_path,
                                                     trace_file):
    out_csv = tmp_path / "report.csv"
    code, out, _ = run_cli(capsys, "feas-analyze", "--trace",
                           str(trace_file), "--out", str(out_csv))
    assert code == 0
    assert AVERAGING_NOTE in out
    assert CONVEXITY_CAVEAT in out
    assert "transect E" in out
    assert "24.27" in out
    text = out_csv.read_text()
    assert AVERAGING_NOTE in text
    assert "yearly,E," in text


def test_feas_analyze_missing_trace_fails(capsys, tmp_path):
    code, _, err = run_cli(capsys, "feas-analyze", "--trace",
                           str(tmp_path / "absent.csv"),
                           "--out", str(tmp_path / "r.csv"))
    assert code == 2
    assert "not found" in err


def test_feas_analyze_bad_trace_names_line(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp_unix,transect,t_soil_c,t_air_c\n0,E,29.0\n")
    code, _, err = run_cli(capsys, "feas-analyze", "--trace", str(bad),
                           "--out", str(tmp_path / "r.csv"))
    assert code == 2
    assert "line 2" in err


def test_feas_analyze_verdict_flag(capsys, tmp_path, trace_file):
    code, out, _ = run_cli(capsys, "feas-analyze", "--trace",
                           str(trace_file), "--out",
                           str(tmp_path / "r.csv"),
                           "--node-power-mw", "1.0")
    assert code == 0
    assert "transect E: harvest feasible" in out


def test_feas_calibrate_prints_resistance(capsys):
    code, out, _ = run_cli(capsys, "feas-calibrate", "--mean-dt-c", "29.0",
                           "--mean-power-mw", "24.27")
    assert code == 0
    assert "calibrated r_elec_ohm: 3.69" in out
    assert "convexity" in out


def test_feas_calibrate_rejects_zero_gradient(capsys):
    code, _, err = run_cli(capsys, "feas-calibrate", "--mean-dt-c", "0",
                           "--mean-power-mw", "1.0")
    assert code == 2
    assert "gradient" in err


def test_sim_run_writes_outputs(capsys, tmp_path):
    scenario = tmp_path / "tiny.json"
    scenario.write_text("""
    {
      "seed": 9,
      "duration_s": 120,
      "listen_interval_s": 1.0,
      "sites": [{
        "site_id": "north",
        "link": {"loss_probability": 0.0, "latency_ms": 20,
                 "max_payload": 256},
        "nodes": [{
          "uid": 1, "transect": "E", "sensor_type": 1,
          "sampling_rate_s": 30,
          "trace": {"kind": "constant", "value": 4.0}
        }]
      }]
    }
    """)
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(capsys, "sim-run", "--scenario", str(scenario),
                           "--out", str(out_dir))
    assert code == 0
    assert "log hash:" in out
    assert "projected battery lifetime" in out
    runlog = (out_dir / "runlog.txt").read_text()
    assert "# summary" in runlog
    with open(out_dir / "readings.csv", newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0][0] == "timestamp"
    assert len(rows) > 1


def test_sim_run_seed_override_changes_hash(capsys, tmp_path):
    def run_with_seed(seed, sub):
        out_dir = tmp_path / sub
        code, out, _ = run_cli(capsys, "sim-run", "--scenario",
                               str(scenario), "--seed", str(seed),
                               "--out", str(out_dir))
        assert code == 0
        for line in out.splitlines():
            if line.startswith("log hash:"):
                return line
        raise AssertionError("no hash line")

    scenario = tmp_path / "tiny.json"
    scenario.write_text("""
    {
      "seed": 9,
      "duration_s": 300,
      "listen_interval_s": 1.0,
      "sites": [{
        "site_id": "north",
        "link": {"loss_probability": 0.5, "latency_ms": 20,
                 "max_payload": 256},
        "nodes": [{
          "uid": 1, "transect": "E", "sensor_type": 1,
          "sampling_rate_s": 10,
          "trace": {"kind": "constant", "value": 4.0}
        }]
      }]
    }
    """)
    assert run_with_seed(1, "a") != run_with_seed(2, "b")
    assert run_with_seed(1, "c") == run_with_seed(1, "a2")


def test_sim_run_rejects_bad_scenario(capsys, tmp_path):
    scenario = tmp_path / "broken.json"
    scenario.write_text('{"seed": 1}')
    code, _, err = run_cli(capsys, "sim-run", "--scenario", str(scenario),
                           "--out", str(tmp_path / "out"))
    assert code == 2
    assert "error:" in err
