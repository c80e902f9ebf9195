import json
import subprocess
import sys

import numpy as np
import pytest

from mtnls import checks
from mtnls.checks import CheckResult
from mtnls.cli import main
from mtnls.config import parse_config
from mtnls.exceptions import ConfigurationError, UsageError
from mtnls.io import dumps, read_modes_csv, read_ndjson, read_snapshot, write_modes_csv, write_snapshot
from mtnls.spectral import make_basis, random_field

SIM = """
[basis]
K = 4
[dynamics]
h = 1e-3
T = 0.02
stride = 5
"""

FD = """
[basis]
K = 2
[noise]
a0 = 0.1
[dynamics]
h = 2.5e-4
T = 0.01
stride = 10
[experiment]
n_traj = 8
sigma_scale = 0.1
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- io -----------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["torus-fourier", "dirichlet-sine"])
def test_snapshot_roundtrip(tmp_path, kind, rng):
    b = make_basis(kind, 5, 3)
    u = random_field(b, rng)
    write_snapshot(tmp_path / "s.bin", u)
    back = read_snapshot(tmp_path / "s.bin")
    assert back.basis.descriptor() == b.descriptor()
    assert np.array_equal(back.coeffs, u.coeffs)
    assert np.array_equal(read_snapshot(tmp_path / "s.bin", b).coeffs, u.coeffs)


def test_snapshot_rejects_mismatch_and_corruption(tmp_path, rng):
    b = make_basis("torus-fourier", 3)
    p = tmp_path / "s.bin"
    write_snapshot(p, random_field(b, rng))
    with pytest.raises(UsageError):
        read_snapshot(p, make_basis("torus-fourier", 4))
    data = p.read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"XXXXXX" + data[6:])
    with pytest.raises(UsageError):
        read_snapshot(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(data[:-8])
    with pytest.raises(UsageError):
        read_snapshot(tmp_path / "short.bin")
    with pytest.raises(UsageError):
        write_snapshot(p, random_field(b, rng, batch=(2,)))


def test_modes_csv_roundtrip(tmp_path, rng):
    b = make_basis("dirichlet-sine", 4)
    u = random_field(b, rng)
    write_modes_csv(tmp_path / "m.csv", u)
    assert np.array_equal(read_modes_csv(tmp_path / "m.csv", b).coeffs, u.coeffs)


def test_dumps_is_canonical():
    assert dumps({"b": np.float64(1.5), "a": np.arange(2)}) == '{"a":[0,1],"b":1.5}'
    assert json.loads(dumps({"x": float("nan")}))["x"] == "nan"


# -- config -------------------------------------------------------------------


def test_config_requires_fields():
    with pytest.raises(ConfigurationError, match="basis.K"):
        parse_config("[dynamics]\nh = 1e-3\nT = 1\n", "simulate")
    with pytest.raises(ConfigurationError, match="dynamics.T"):
        parse_config("[basis]\nK = 2\n[dynamics]\nh = 1e-3\n", "simulate")


@pytest.mark.parametrize(
    "text,field",
    [
        ("[basis]\nK = 2\nfoo = 1\n", "basis.foo"),
        ("[bogus]\n", "bogus"),
        ("[basis]\nK = two\n", "basis.K"),
        ("[params]\ngamma = 1.5\n", "gamma"),
        ("[basis]\nq = 1\n", "basis.q"),
        ("[experiment]\nlambdas = 0.5 1.2\n", "lambdas"),
        ("[noise]\noverrides = 1;2\n", "overrides"),
    ],
)
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigurationError, match=field):
        parse_config(text, "check")


def test_config_stationary_defaults_and_warning():
    cfg = parse_config("[basis]\nK = 2\n[dynamics]\nh = 2.5e-4\nT = 0.5\n[params]\ngamma = 3.5\n", "stationary")
    assert cfg.noise["a0"] == 0.1
    assert cfg.experiment["burn_in"] == 0.2
    assert cfg.extras["warnings"]
    assert parse_config(SIM, "simulate").digest() == parse_config(SIM, "simulate").digest()
    assert parse_config(SIM, "simulate", seed=3).digest() != parse_config(SIM, "simulate").digest()


# -- cli ----------------------------------------------------------------------


def test_simulate_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", write(tmp_path, SIM), "--out", str(out)]) == 0
    recs = read_ndjson(out / "observables.ndjson")
    assert len(recs) == 5 and set(recs[0]) == {"t", "M", "E", "H1"}
    man = json.loads((out / "manifest.json").read_text())
    assert man["scheme"] == "strang-split" and man["basis"]["K"] == 4
    assert man["digests"]["observables.ndjson"]
    assert read_snapshot(out / "snapshots" / "final.bin").basis.cutoff == 4


def test_reruns_are_byte_identical(tmp_path):
    cfg = write(tmp_path, FD)
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}"
        assert main(["fdsim", cfg, "--out", str(out), "--seed", "5", "--workers", "2"]) == 0
        outs.append((out / "observables.ndjson").read_bytes())
    assert outs[0] == outs[1]
    out = tmp_path / "o3"
    main(["fdsim", cfg, "--out", str(out), "--seed", "6", "--workers", "2"])
    assert (out / "observables.ndjson").read_bytes() != outs[0]


def test_missing_field_exits_2(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["simulate", write(tmp_path, "[basis]\nK = 4\n"), "--out", str(out)])
    assert code == 2
    err = json.loads((out / "error.json").read_text())
    assert "dynamics.h" in err["message"]
    assert main(["fdsim", "--out", str(out)]) == 2
    assert main(["fdsim", str(tmp_path / "nope.ini"), "--out", str(out)]) == 2


def test_overflow_exits_3(tmp_path):
    text = SIM + "[experiment]\ndatum = constant\namplitude = 40\n"
    out = tmp_path / "o"
    assert main(["simulate", write(tmp_path, text), "--out", str(out)]) == 3
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "AmplitudeOverflowError" and "time" in err


def test_ensemble_failure_exits_3_with_seeds(tmp_path):
    snap = tmp_path / "big.bin"
    from mtnls.spectral import SpectralField

    write_snapshot(snap, SpectralField.single_mode(make_basis("torus-fourier", 2), (0, 0), 100.0))
    text = FD + f"sampler = snapshot\nsnapshot = {snap}\n"
    out = tmp_path / "o"
    assert main(["fdsim", write(tmp_path, text), "--out", str(out)]) == 3
    assert json.loads((out / "error.json").read_text())["failed_seeds"] == list(range(8))


def test_check_command(tmp_path, monkeypatch):
    assert main(["check", "--out", str(tmp_path / "ok")]) == 0
    assert len(read_ndjson(tmp_path / "ok" / "reports" / "checks.ndjson")) == len(checks.CHECKS)
    monkeypatch.setattr(checks, "run_checks", lambda: [CheckResult("broken", False, 1.0, 0.0)])
    assert main(["check", "--out", str(tmp_path / "bad")]) == 4


def test_stationary_scales_manifest(tmp_path):
    text = """
[basis]
K = 2
[dynamics]
h = 1e-3
T = 0.1
[experiment]
n_traj = 40
burn_in = 0.05
scales = 1 2
drift = ou
"""
    out = tmp_path / "o"
    assert main(["stationary", write(tmp_path, text), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["result"]["A0_ratio_to_unit"] == [1.0, 4.0]
    assert man["result"]["A0_exact"] == [True, True]
    assert len(read_ndjson(out / "reports" / "stationary.ndjson")) == 2
    assert (out / "reports" / "summary.txt").read_text().startswith("   scale")


def test_yudovich_outputs(tmp_path):
    text = SIM.replace("T = 0.02", "T = 0.05") + "[experiment]\neps_list = 1e-2 1e-3\nlambdas = 0.9 0.99\n"
    out = tmp_path / "o"
    assert main(["yudovich", write(tmp_path, text), "--out", str(out)]) == 0
    rep = out / "reports"
    csvs = sorted(p.name for p in rep.glob("yudovich_eps_*.csv"))
    assert csvs == ["yudovich_eps_1.000e-02.csv", "yudovich_eps_1.000e-03.csv"]
    assert len(read_ndjson(rep / "yudovich.ndjson")) == 2
    assert json.loads((rep / "lemma_check.json").read_text())["holds"] is True
    assert (rep / "lemma_table.txt").exists()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mtnls.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "simulate" in r.stdout
