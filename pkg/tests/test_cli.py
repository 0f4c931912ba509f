import csv
import io
import json
from pathlib import Path

import pytest

from finslerjet import cli, config
from finslerjet.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(args, capsys):
    code = cli.main(args)
    return code, capsys.readouterr().out


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_sphere_config(capsys):
    code, out = run(["curvature", "--config", str(CONFIGS / "sphere_chart.toml")], capsys)
    assert code == 0
    assert "# config_sha256: " in out and "# seed: 7" in out
    data = rows(out)
    assert len(data) == 9 * 2 * 3
    assert all(abs(float(r["K_pipeline"]) - 1.0) < 1e-6 for r in data)
    assert all(r["K_closed_form"] == "" and r["status"] == "ok" for r in data)


def test_numata_config(capsys):
    code, out = run(["curvature", "--config", str(CONFIGS / "numata2.toml")], capsys)
    assert code == 0
    data = rows(out)
    first = [r for r in data if r["x1"] == "0" and r["x2"] == "0" and r["y1"] == "1"]
    assert first and all(abs(float(r["K_pipeline"]) - 0.1875) < 1e-6 for r in first)
    assert all(abs(float(r["K_closed_form"]) - 0.1875) < 1e-6 for r in first)
    assert all(float(r["abs_diff"]) < 1e-6 for r in data)


def test_schwarz_config(capsys):
    code, out = run(["schwarz", "--config", str(CONFIGS / "schwarz1d.toml")], capsys)
    assert code == 0
    data = rows(out)
    mid = next(r for r in data if r["x"] == "0")
    assert float(mid["K"]) == pytest.approx(2 / 27, abs=1e-12)
    assert float(mid["S"]) == pytest.approx(-1 / 3, abs=1e-12)


def test_schwarz_identity_and_arctan(tmp_path, capsys):
    code, out = run(["schwarz", "--config", write(tmp_path, '[schwarz]\nphi = "x"\nx = [0.0, 0.5, 2.0]\n')], capsys)
    assert code == 0
    assert all(float(r["S"]) == 0 and float(r["K"]) == 0 for r in rows(out))
    cfg = "[schwarz]\nconstant_K = {K = 1.0, a = 1.0, b = 0.0, c = 0.0, d = 1.0}\ngrid = {min = -3.0, max = 3.0, count = 13}\n"
    code, out = run(["schwarz", "--config", write(tmp_path, cfg)], capsys)
    assert code == 0
    assert all(float(r["deviation"]) < 1e-7 for r in rows(out))


def test_schwarz_critical_point_in_row(tmp_path, capsys):
    code, out = run(["schwarz", "--config", write(tmp_path, '[schwarz]\nphi = "x^3"\nx = [0.0, 1.0]\n')], capsys)
    data = rows(out)
    assert data[0]["status"] == "E_CRITICAL_POINT" and data[1]["status"] == "ok"


def test_euclidean_grid(tmp_path, capsys):
    cfg = """
[metric]
family = "riemannian"
dim = 2
a = [["1", "0"], ["0", "1"]]
[sample.grid]
min = [-1.0, -1.0]
max = [1.0, 1.0]
count = [2, 3]
"""
    code, out = run(["curvature", "--config", write(tmp_path, cfg)], capsys)
    data = rows(out)
    assert code == 0 and len(data) == 6 * 4
    assert all(float(r["K_pipeline"]) == 0.0 for r in data)


def test_numata1d_route_note(tmp_path, capsys):
    cfg = '[metric]\nfamily = "numata1d"\nf = "0.5*sin(x)"\n[sample]\nx = [0.0]\ny = [1.0, -1.0]\n'
    code, out = run(["curvature", "--config", write(tmp_path, cfg)], capsys)
    assert "flag pipeline is bypassed" in out
    data = rows(out)
    assert float(data[0]["K_pipeline"]) == pytest.approx(2 / 27)
    assert data[1]["status"] == "E_CONE"


def test_domain_error_recorded_in_row(tmp_path, capsys):
    cfg = '[metric]\nfamily = "numata"\ndim = 2\nf = "0.9*x1^2"\n[sample]\nx = [[0.0, 0.0], [1.0, 0.0]]\ny = [[1.0, 0.0]]\n'
    code, out = run(["curvature", "--config", write(tmp_path, cfg), "--format", "json"], capsys)
    doc = json.loads(out)
    statuses = [r["status"] for r in doc["rows"]]
    assert "E_OUTSIDE_DOMAIN" in statuses and "ok" in statuses
    assert doc["header"]["seed"] == 0


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_reports_are_byte_identical(tmp_path, fmt):
    cfg = str(CONFIGS / "numata2.toml")
    outs = []
    for k, jobs in enumerate(["1", "3"]):
        out = tmp_path / f"r{k}.{fmt}"
        assert cli.main(["sweep", "--config", cfg, "--format", fmt, "--out", str(out), "--jobs", jobs]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    a = tmp_path / "a"
    b = tmp_path / "b"
    cli.main(["curvature", "--config", cfg, "--format", fmt, "--out", str(a), "--seed", "5"])
    cli.main(["curvature", "--config", cfg, "--format", fmt, "--out", str(b), "--seed", "5"])
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_flags(tmp_path):
    cfg = str(CONFIGS / "sphere_chart.toml")
    cli.main(["curvature", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "1"])
    cli.main(["curvature", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a").read_text() != (tmp_path / "b").read_text()


def test_sweep_flags_spread(capsys):
    code, out = run(["sweep", "--config", str(CONFIGS / "numata2.toml")], capsys)
    assert code == 0
    assert all(float(r["spread"]) < 1e-6 for r in rows(out))


def test_tolerance_failure_sets_exit_code(tmp_path, capsys):
    cfg = str(CONFIGS / "sphere_chart.toml")
    # a random Riemannian-like metric is not of scalar curvature, so sweep must flag it
    bad = '[metric]\nfamily = "riemannian"\ndim = 3\na = [["1 + 0.3*x2^2", "0", "0"], ["0", "1 + 0.2*x3^2", "0.1*x1"], ["0", "0.1*x1", "exp(0.3*x1)"]]\n[sample]\nx = [[0.2, 0.3, -0.1]]\ny = [[1.0, 0.5, 0.2]]\n'
    code, out = run(["sweep", "--config", write(tmp_path, bad), "--samples", "16"], capsys)
    assert code == 1 and rows(out)[0]["status"] == "fail"
    code, _ = run(["curvature", "--config", cfg, "--samples", "1"], capsys)
    assert code == 0


@pytest.mark.parametrize(
    "text, fragment",
    [
        ('[metric]\nfamily = "numata"\ndim = 2\nf = "x1"\nbogus = 1\n', "metric.bogus"),
        ('[metrics]\nfamily = "numata"\n', "metrics"),
        ('[metric]\nfamily = "numata"\ndim = 2\nf = "x3"\n', "metric.f"),
        ('[metric]\nfamily = "riemannian"\ndim = 2\na = [["1"]]\n', "metric.a"),
        ('[metric]\nfamily = "numata"\ndim = 2\nf = "x1"\n[sample]\nx = [[0.0]]\n', "sample.x[0]"),
        ('[options]\ntol = -1.0\n', "options.tol"),
        ('[options]\nsamples = 0\n', "options.samples"),
        ('[schwarz]\nphi = "x"\n', "schwarz"),
        ('[schwarz]\nphi = "x"\nx = [0.0]\n[schwarz.grid]\nmin = 0.0\nmax = 1.0\ncount = 2\nstep = 3\n', "schwarz.grid.step"),
        ("[metric\n", "line 1"),
    ],
)
def test_config_errors(tmp_path, text, fragment):
    with pytest.raises(ConfigError) as info:
        config.load(write(tmp_path, text))
    assert fragment in str(info.value)


def test_config_error_exit_code(tmp_path, capsys):
    code = cli.main(["curvature", "--config", write(tmp_path, "[metric]\nfamily = 'nope'\n")])
    assert code == 2
    assert "E_CONFIG" in capsys.readouterr().err
    assert cli.main(["curvature"]) == 2


def test_verify_small_run_and_bad_randers(tmp_path, capsys):
    code, out = run(["verify", "--samples", "3", "--seed", "2"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert [g["name"] for g in doc["groups"]][:3] == ["jets_vs_fd", "homogeneity", "chern_axioms"]
    cfg = write(tmp_path, '[metric]\nfamily = "randers"\ndim = 2\nb = ["1.1", "0"]\n')
    code, out = run(["verify", "--samples", "2", "--config", cfg], capsys)
    doc = json.loads(out)
    assert code == 1 and not doc["passed"]
    cm = doc["groups"][-1]
    assert cm["name"] == "config_metric" and any("E_OUTSIDE_DOMAIN" in f for f in cm["failures"])


def test_verify_csv(capsys):
    code, out = run(["verify", "--samples", "2", "--format", "csv"], capsys)
    assert code == 0
    data = rows(out)
    assert {r["group"] for r in data} >= {"chern_axioms", "schwarzian"}
    assert all(r["status"] == "ok" for r in data)


def test_error_codes_are_distinct():
    from finslerjet import errors
    from finslerjet.finsler_core import SpecError

    classes = [c for c in vars(errors).values() if isinstance(c, type) and issubclass(c, errors.FinslerError)]
    codes = [c.code for c in classes + [SpecError]]
    assert len(codes) == len(set(codes))
