import csv
import io
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistlab.cli import main, run
from twistlab.config import ConfigError, parse_config, read_config_file
from twistlab.echo import optimal_twisting
from twistlab.table import Column, ResultTable, render


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_echo_sweep_flags():
    spec = parse_config("echo-sweep", {"n": "1000", "q_min": "0.1", "q_max": "1600", "points": "200"})
    assert spec.params["n"] == 1000
    assert spec.params["points"] == 200 and spec.params["scale"] == "log"
    assert spec.params["q_max"] == 1600.0


def test_defaults_documented():
    spec = parse_config("cavity-gain")
    assert spec.params["r"] == 0.5
    assert spec.params["n_min"] == 100000
    ryd = parse_config("rydberg-design")
    assert ryd.params["epsilon"] == 0.1
    assert (ryd.params["c_tilde_lo"], ryd.params["c_tilde_hi"]) == (1e10, 1e11)
    assert parse_config("echo-sweep").params["n"] == 1000


@pytest.mark.parametrize(
    "command, values, key",
    [
        ("echo-sweep", {"n": "0"}, "n"),
        ("echo-sweep", {"nn": "3"}, "nn"),
        ("echo-sweep", {"points": "0"}, "points"),
        ("echo-sweep", {"q_min": "abc"}, "q_min"),
        ("echo-sweep", {"q_min": "nan"}, "q_min"),
        ("echo-sweep", {"scale": "cubic"}, "scale"),
        ("echo-sweep", {"n": "2.5"}, "n"),
        ("cavity-gain", {"eta_points": "0"}, "eta_points"),
        ("cavity-gain", {"eta_min": "-1"}, "eta_min"),
        ("cavity-gain", {"r": "2"}, "r"),
        ("noise-sweep", {"dn_min": "5", "dn_max": "1"}, "dn_min"),
        ("wigner", {"stage": "final"}, "stage"),
        ("wigner", {"n_theta": "1"}, "n_theta"),
        ("echo-sweep", {"format": "xml"}, "format"),
        ("echo-sweep", {"threads": "0"}, "threads"),
    ],
)
def test_config_errors_name_the_key(command, values, key):
    with pytest.raises(ConfigError) as info:
        parse_config(command, values)
    assert info.value.key == key
    assert key in str(info.value)


def test_flags_override_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 500\npoints=10\n")
    spec = parse_config("echo-sweep", {"n": "300"}, read_config_file(cfg))
    assert spec.params["n"] == 300
    assert spec.params["points"] == 10


def test_two_dimensional_grid_config(tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(
        json.dumps(
            {
                "n_min": 100,
                "n_max": 1000000,
                "n_points": 5,
                "n_scale": "log",
                "eta_min": 0.01,
                "eta_max": 100,
                "eta_points": 5,
                "eta_scale": "log",
                "d_free": True,
            }
        )
    )
    spec = parse_config("cavity-gain", {}, read_config_file(cfg))
    n_grid, eta_grid = spec.grid("n"), spec.grid("eta")
    assert n_grid.values()[[0, -1]].tolist() == pytest.approx([100, 1e6])
    assert eta_grid.values()[[0, -1]].tolist() == pytest.approx([0.01, 100])
    # round trip through the metadata echo
    again = parse_config("cavity-gain", {k: v for k, v in spec.resolved().items() if k != "command"})
    assert again.params == spec.params
    table = run(spec, threads=2)
    assert len(table.rows) == 25
    assert table.column("N")[:5] == [100] * 5


def test_config_file_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"n": 10, "ponts": 3}')
    with pytest.raises(ConfigError, match="ponts"):
        parse_config("echo-sweep", {}, read_config_file(cfg))


def test_config_file_malformed(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"n": 10,')
    with pytest.raises(ConfigError):
        read_config_file(cfg)
    txt = tmp_path / "bad.cfg"
    txt.write_text("just words\n")
    with pytest.raises(ConfigError):
        read_config_file(txt)


def test_csv_format_details():
    table = ResultTable(
        [Column("x", "rad"), Column("label", "-"), Column("ok", "bool")],
        [[0.1, 'a,"b"', True], [float("nan"), None, False]],
        {"inputs": {"n": 3}},
    )
    text = render(table, "csv")
    assert "\r" not in text
    lines = body(text)
    assert lines[0] == "x [rad],label [-],ok [bool]"
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert rows == [["0.1", 'a,"b"', "true"], ["", "", "false"]]


def test_json_format_column_major_with_nulls():
    table = ResultTable([Column("x"), Column("y", "dB")], [[1.5, None], [2.5, float("inf")]], {"k": 1})
    doc = json.loads(render(table, "json"))
    assert doc["data"] == {"x": [1.5, 2.5], "y": [None, None]}
    assert doc["columns"][1] == {"name": "y", "unit": "dB"}
    assert doc["metadata"]["k"] == 1
    assert "version" in doc["metadata"]


def test_empty_table_is_header_only():
    text = render(ResultTable([Column("Q"), Column("gain_db", "dB")]), "csv")
    assert body(text) == ["Q [1],gain_db [dB]"]


def test_rows_must_be_rectangular():
    with pytest.raises(ValueError):
        ResultTable([Column("a")], [[1, 2]])


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
@settings(max_examples=50, deadline=None)
def test_float_round_trip(values):
    table = ResultTable([Column("v")], [[v] for v in values])
    parsed = [float(x) for x in body(render(table, "csv"))[1:]]
    assert parsed == values
    assert json.loads(render(table, "json"))["data"]["v"] == values


def test_echo_sweep_peak_near_qopt(capsys):
    n = 1000
    q_opt = optimal_twisting(n)[0]
    code, out, _ = run_cli(capsys, "echo-sweep", "--n", "1000", "--q-min", "20", "--q-max", "50", "--points", "200", "--no-timestamp")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO("\n".join(body(out)))))
    best = max((r for r in rows if r["gain_db [dB]"]), key=lambda r: float(r["gain_db [dB]"]))
    assert abs(float(best["Q [1]"]) / q_opt - 1) < 0.01


def test_no_timestamp_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path, threads in ((a, "1"), (b, "3")):
        assert main(["baselines", "--n", "60", "--points", "15", "--no-timestamp", "--threads", threads, "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"timestamp" not in a.read_bytes()


def test_timestamp_line_present(tmp_path):
    path = tmp_path / "t.json"
    assert main(["cavity-map", "--format", "json", "-o", str(path)]) == 0
    doc = json.loads(path.read_text())
    assert "timestamp" in doc["metadata"]
    assert doc["metadata"]["inputs"]["p"] == 1e4


def test_metadata_embeds_resolved_inputs(capsys):
    code, out, _ = run_cli(capsys, "rydberg-design", "--n-points", "4", "--no-timestamp")
    assert code == 0
    meta = [line for line in out.splitlines() if line.startswith("# inputs:")][0]
    inputs = json.loads(meta.split(":", 1)[1])
    assert inputs["epsilon"] == 0.1 and inputs["n_points"] == 4 and inputs["c_tilde_hi"] == 1e11


@pytest.mark.parametrize(
    "argv, code",
    [
        (["echo-sweep", "--n", "0"], 2),
        (["echo-sweep", "--points", "0"], 2),
        (["echo-sweep", "--q-min", "x"], 2),
        (["echo-sweep", "--n", "1", "--points", "3"], 3),
        (["wigner", "--n", "1"], 3),
        (["wigner", "-o", "/nonexistent-dir/w.csv"], 4),
    ],
)
def test_exit_codes(capsys, argv, code):
    got, _, err = run_cli(capsys, *argv)
    assert got == code
    assert err


def test_unknown_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as info:
        main(["echo-sweep", "--nn", "3"])
    assert info.value.code == 2


def test_threads_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("TWISTLAB_THREADS", "zero")
    code, _, err = run_cli(capsys, "cavity-map")
    assert code == 2 and "TWISTLAB_THREADS" in err
    monkeypatch.setenv("TWISTLAB_THREADS", "2")
    assert run_cli(capsys, "cavity-map")[0] == 0


def test_oracle_check_passes(capsys):
    code, out, err = run_cli(capsys, "oracle-check", "--n", "4", "--no-timestamp")
    assert code == 0
    assert "PASS" in err
    assert all(line.endswith("true") for line in body(out)[1:])


def test_wigner_export(tmp_path):
    path = tmp_path / "w.json"
    assert main(["wigner", "--n", "30", "--n-theta", "31", "--n-phi", "60", "--format", "json", "-o", str(path)]) == 0
    doc = json.loads(path.read_text())
    assert len(doc["data"]["W"]) == 31 * 60
    assert doc["metadata"]["W_min"] < 0
    assert doc["metadata"]["Q_resolved"] == pytest.approx(optimal_twisting(30)[0])


def test_noise_sweep_columns(capsys):
    code, out, _ = run_cli(capsys, "noise-sweep", "--n", "100", "--points", "3", "--dn-max", "10", "--no-timestamp")
    assert code == 0
    header = body(out)[0]
    assert header == "delta_n [atoms],r_det [1],echo_db [dB],squeezing_db [dB],ghz_db [dB]"
    rows = list(csv.reader(io.StringIO("\n".join(body(out)[1:]))))
    assert len(rows) == 3
    assert float(rows[0][2]) > float(rows[-1][2])
    assert math.isfinite(float(rows[0][4]))
