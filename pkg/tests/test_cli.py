import json
import subprocess
import sys

import pytest

from htapsim.cli import main
from htapsim.harness import CSV_FIELDS
from htapsim.vaultsim import SimConfig

FAST = ["--txn-queries", "20", "--anl-queries", "1", "--rows", "500"]


def test_run_to_stdout(capsys):
    assert main(FAST) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == ",".join(CSV_FIELDS) and out[1].startswith("polynesia,hybrid,optimized,7,")


def test_out_appends(tmp_path):
    p = tmp_path / "r.csv"
    assert main(FAST + ["--out", str(p)]) == 0
    assert main(FAST + ["--system", "si-mvcc", "--out", str(p)]) == 0
    lines = p.read_text().splitlines()
    assert len(lines) == 3 and lines[2].startswith("si-mvcc,")


def test_byte_identical_rerun(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(FAST + ["--system", "mi-sw", "--out", str(a)])
    main(FAST + ["--system", "mi-sw", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_dump_config(capsys):
    assert main(["--dump-config", "--vaults", "8"]) == 0
    assert SimConfig.parse(capsys.readouterr().out) == SimConfig(n_vaults=8)


def test_config_file_and_preset(capsys, tmp_path):
    p = tmp_path / "c.conf"
    p.write_text("host_latency=7.0\n")
    main(["--dump-config", "--config", str(p)])
    assert "host_latency=7.0" in capsys.readouterr().out
    main(["--dump-config", "--config", "vault8gbps"])
    assert "per_vault_bw=8.0" in capsys.readouterr().out


@pytest.mark.parametrize("argv,code", [
    (["--system", "bogus"], "UsageError"),
    (["--update-ratio", "3"], "InvalidSpec"),
    (["--vaults", "10"], "ConfigError"),
    (["--config", "/nonexistent.conf"], "ConfigError"),
    (["--ideal", "bogus"], "InvalidSpec"),
    (["--out", "/nonexistent/dir/x.csv"] + FAST, "IoFailure"),
])
def test_errors_are_json(capsys, argv, code):
    assert main(argv) != 0
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == code and err["message"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "htapsim", "--dump-config"], capture_output=True, text=True)
    assert r.returncode == 0 and "n_vaults=16" in r.stdout
    r = subprocess.run([sys.executable, "-m", "htapsim", "--group-size", "0"], capture_output=True, text=True)
    assert r.returncode != 0 and json.loads(r.stderr)["error"] == "ConfigError"
