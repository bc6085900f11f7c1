import csv
import io
import json
import math
import subprocess
import sys

import pytest

from cvdiscord.cli import (
    EXIT_OK,
    EXIT_UNCONVERGED,
    EXIT_USAGE,
    UsageError,
    main,
    merge_config,
    parse_grid,
    parse_values,
    read_config_file,
)
from cvdiscord.discord import discord_dp_closed


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    return json.loads(lines[0][2:]), list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_parse_grid_and_values():
    assert list(parse_grid("0:1:3")) == [0.0, 0.5, 1.0]
    assert parse_values("0.2") == [0.2]
    assert parse_values("1,2, 3") == [1.0, 2.0, 3.0]
    assert parse_values("0:2:3") == [0.0, 1.0, 2.0]
    for bad in ("0:1", "a:b:c", "0:1:0"):
        with pytest.raises(UsageError):
            parse_grid(bad)
    for bad in ("x", "nan", ""):
        with pytest.raises(UsageError):
            parse_values(bad)


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nkind = pac\neta=0.5\nn0 = 4\nallow-unconverged = yes\n")
    file_cfg = read_config_file(str(cfg))
    assert file_cfg["allow_unconverged"] is True
    merged = merge_config(file_cfg, {"eta": "0.9", "alpha0": "1"})
    assert merged["kind"] == "pac"
    assert merged["eta"] == "0.9"
    # a flag amplitude displaces the file's n0
    assert merged["alpha0"] == "1" and merged["n0"] is None
    with pytest.raises(UsageError):
        merge_config({}, {"alpha0": "1", "n0": "1"})


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    with pytest.raises(UsageError):
        read_config_file(str(bad))
    bad.write_text("just words\n")
    with pytest.raises(UsageError):
        read_config_file(str(bad))
    with pytest.raises(UsageError):
        read_config_file(str(tmp_path / "missing.cfg"))


def test_show_config(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("eta = 0.3\nsigma = 0.1\n")
    code, out, _ = run(capsys, "discord-sweep", "--config", str(cfg), "--sigma", "0.2", "--show-config")
    assert code == EXIT_OK
    shown = json.loads(out)
    assert (shown["eta"], shown["sigma"], shown["command"]) == ("0.3", "0.2", "discord-sweep")


def test_discord_sweep_csv(capsys):
    code, out, _ = run(capsys, "discord-sweep", "--kind", "dpc", "--alpha0", "1", "--grid", "0.2:0.8:4", "--jobs", "1")
    assert code == EXIT_OK
    meta, recs = rows(out)
    assert meta["command"] == "discord-sweep" and "jobs" not in meta
    assert len(recs) == 4
    for r in recs:
        assert float(r["discord_bits"]) == pytest.approx(discord_dp_closed(float(r["eta"])), abs=1e-6)
        assert r["converged"] == "true"


def test_output_identical_across_jobs(capsys):
    args = ["discord-sweep", "--kind", "pac", "--n0", "0,1,4", "--eta", "0.7", "--sigma", "0.2", "--over", "n0"]
    outs = [run(capsys, *args, "--grid", "0:4:3", "--jobs", j)[1] for j in ("1", "3")]
    assert outs[0] == outs[1]


def test_json_output_and_file(capsys, tmp_path):
    dest = tmp_path / "out.json"
    code, out, _ = run(capsys, "qd-vs-variance", "--grid", "0:1:3", "--format", "json", "--out", str(dest), "--jobs", "1")
    assert code == EXIT_OK and out == ""
    doc = json.loads(dest.read_text())
    assert doc["config"]["command"] == "qd-vs-variance"
    limits = [r["limit"] for r in doc["records"]]
    assert limits == ["eta->0", "", "eta->1"]
    assert doc["records"][1]["variance"] == pytest.approx(0.75)


def test_jqp_normalization_check(capsys):
    code, out, _ = run(capsys, "jqp", "--kind", "pac", "--alpha0", "1", "--grid=-8:9:81")
    assert code == EXIT_OK
    _, recs = rows(out)
    assert len(recs) == 81 * 81
    code, _, err = run(capsys, "jqp", "--kind", "pac", "--alpha0", "1", "--grid=-2:2:3")
    assert code == EXIT_UNCONVERGED and "probability" in err


def test_mid_map(capsys):
    code, out, _ = run(capsys, "mid-map", "--kind", "dpc", "--alpha0", "0", "--grid", f"0:{math.pi / 2}:2", "--jobs", "1")
    assert code == EXIT_OK
    _, recs = rows(out)
    # numbers are written with 12 significant digits
    vals = {(round(float(r["lambda_a"]), 6), round(float(r["lambda_b"]), 6)): float(r["mid_bits"]) for r in recs}
    assert len(vals) == 4
    assert vals[(0.0, 0.0)] == pytest.approx(1.48007, abs=1e-4)
    assert vals[(0.0, round(math.pi / 2, 6))] == pytest.approx(1.92277, abs=1e-4)


@pytest.mark.parametrize(
    "argv",
    [
        ["discord-sweep", "--eta", "2"],
        ["discord-sweep", "--alpha0", "-1"],
        ["discord-sweep", "--sigma", "-0.1"],
        ["discord-sweep", "--grid", "1:2"],
        ["discord-sweep", "--jobs", "0"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE and "error" in err


def test_argparse_rejects_both_amplitudes(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["discord-sweep", "--alpha0", "1", "--n0", "1"])
    assert exc.value.code == EXIT_USAGE


def test_unconverged_phase_noise_exit_code(capsys):
    # Gauss-Hermite cannot resolve noise this wide; the CLI must say so, not guess
    code, _, err = run(capsys, "discord-sweep", "--alpha0", "2", "--sigma", "8", "--eta", "1", "--jobs", "1", "--grid", "1:1:1")
    assert code == EXIT_UNCONVERGED and "numerical failure" in err


def test_selftest_subprocess():
    proc = subprocess.run([sys.executable, "-m", "cvdiscord", "selftest"], capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert "false" not in proc.stdout.split("\n", 1)[1]


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out
