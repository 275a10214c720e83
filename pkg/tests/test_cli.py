"""Command-line workflows: ingestion, archives, refusals, determinism."""

import json

import numpy as np
import pytest

from ctdw import cli, dwcore


@pytest.fixture()
def hospital_csv(tmp_path):
    rng = np.random.default_rng(np.random.Philox(key=3))
    rows = ["los,procedure,admission,sex"]
    cells = [
        (p, a, s)
        for p in ("PTCA", "CABG")
        for a in ("elective", "urgent")
        for s in ("female", "male")
    ]
    for i in range(240):
        p, a, s = cells[i % 8]
        m = 1 + np.exp(0.8 + 1.3 * (p == "CABG") + 0.8 * (a == "urgent") - 0.1 * (s == "male"))
        y = int(dwcore.ctdw_sample(m, 0.3, 3.0, 0.45, 1, None, rng))
        rows.append(f"{y},{p},{a},{s}")
    path = tmp_path / "los.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


def run_fit(path, out, seed=5, family="ctdw", extra=()):
    return cli.main(
        [
            "fit",
            "--input", str(path),
            "--family", family,
            "--c", "1",
            "--out", str(out),
            "--chains", "2",
            "--adapt", "200",
            "--burnin", "200",
            "--iters", "800",
            "--thin", "1",
            "--seed", str(seed),
            *extra,
        ]
    )


FIT_FILES = ("draws.csv", "fit.json", "summary.csv", "psrf.csv")
DIAG_FILES = ("diagnostics.csv", "diagnostics.json", "qq.svg", "influence.svg")


class TestFit:
    def test_writes_all_artifacts(self, hospital_csv, tmp_path):
        out = tmp_path / "fit"
        rc = run_fit(hospital_csv, out)
        assert rc in (0, 3)
        for name in FIT_FILES:
            assert (out / name).exists()
        meta = json.loads((out / "fit.json").read_text())
        assert meta["data"]["n"] == 240
        assert meta["family"] == "ctdw"
        assert len(meta["chain_seeds"]) == 2
        assert meta["run_config"]["prior"]["delta_max"] == 0.5

    def test_empty_input_no_partial_outputs(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("los,procedure,admission,sex\n")
        out = tmp_path / "fit"
        rc = cli.main(
            ["fit", "--input", str(path), "--family", "tdw", "--out", str(out)]
        )
        assert rc == 1
        assert not out.exists()

    def test_bad_level_reports_row_and_column(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("los,procedure,admission,sex\n4,stent,elective,female\n")
        rc = cli.main(["fit", "--input", str(path), "--family", "tdw", "--out", str(tmp_path / "x")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "row 0" in err and "procedure" in err

    def test_delta_max_flag_plumbed(self, hospital_csv, tmp_path):
        out = tmp_path / "fit_u1"
        rc = run_fit(hospital_csv, out, extra=("--delta-max", "1.0"))
        assert rc in (0, 3)
        meta = json.loads((out / "fit.json").read_text())
        assert meta["run_config"]["prior"]["delta_max"] == 1.0
        summary = (out / "summary.csv").read_text()
        delta_row = [ln for ln in summary.splitlines() if ln.startswith("delta,")][0]
        assert 0.0 < float(delta_row.split(",")[1]) < 1.0

    def test_generic_mode(self, tmp_path):
        rng = np.random.default_rng(np.random.Philox(key=9))
        x = rng.standard_normal(120)
        y = dwcore.tdw_sample(1 + np.exp(1.0 + 0.3 * x), 0.7, 1, 120, rng)
        lines = ["y,x"] + [f"{int(yy)},{float(xx)!r}" for yy, xx in zip(y, x)]
        path = tmp_path / "gen.csv"
        path.write_text("\n".join(lines) + "\n")
        out = tmp_path / "fit"
        rc = cli.main(
            [
                "fit", "--input", str(path), "--family", "tdw", "--generic",
                "--out", str(out), "--chains", "2", "--adapt", "200",
                "--burnin", "200", "--iters", "800", "--thin", "1",
            ]
        )
        assert rc in (0, 3)
        names = [ln.split(",")[0] for ln in (out / "summary.csv").read_text().splitlines()[1:]]
        assert names == ["intercept", "x", "alpha"]


class TestDeterminism:
    def test_fit_byte_identical(self, hospital_csv, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        rc1 = run_fit(hospital_csv, out1, seed=11)
        rc2 = run_fit(hospital_csv, out2, seed=11)
        assert rc1 == rc2
        for name in FIT_FILES:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_diagnose_byte_identical(self, hospital_csv, tmp_path):
        fit = tmp_path / "fit"
        run_fit(hospital_csv, fit, seed=11)
        outs = []
        for sub in ("d1", "d2"):
            out = tmp_path / sub
            rc = cli.main(
                [
                    "diagnose", "--input", str(hospital_csv), "--draws", str(fit),
                    "--out", str(out), "--n-sims", "150", "--seed", "4", "--c", "1",
                ]
            )
            assert rc == 0
            outs.append(out)
        for name in DIAG_FILES:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name

    def test_dist_deterministic(self, capsys):
        args = ["dist", "--family", "tdw", "--m-star", "3", "--alpha", "0.5", "--c", "1",
                "quantile", "0.99"]
        assert cli.main(args) == 0
        first = capsys.readouterr().out
        assert cli.main(args) == 0
        assert capsys.readouterr().out == first
        assert json.loads(first)["value"] == 7


class TestDiagnoseRefusals:
    def test_data_mismatch_refused(self, hospital_csv, tmp_path, capsys):
        fit = tmp_path / "fit"
        run_fit(hospital_csv, fit)
        other = tmp_path / "other.csv"
        other.write_text(
            hospital_csv.read_text() + "9,CABG,urgent,male\n"
        )
        rc = cli.main(
            ["diagnose", "--input", str(other), "--draws", str(fit),
             "--out", str(tmp_path / "d"), "--c", "1"]
        )
        assert rc == 1
        assert "different data" in capsys.readouterr().err

    def test_corrupted_draws_refused(self, hospital_csv, tmp_path, capsys):
        fit = tmp_path / "fit"
        run_fit(hospital_csv, fit)
        blob = bytearray((fit / "draws.csv").read_bytes())
        blob[64] = (blob[64] + 3) % 256
        (fit / "draws.csv").write_bytes(bytes(blob))
        rc = cli.main(
            ["loo", "--input", str(hospital_csv), "--draws", str(fit),
             "--out", str(tmp_path / "d"), "--c", "1"]
        )
        assert rc == 1
        assert "checksum" in capsys.readouterr().err

    def test_loo_outputs(self, hospital_csv, tmp_path):
        fit = tmp_path / "fit"
        run_fit(hospital_csv, fit)
        out = tmp_path / "loo"
        rc = cli.main(
            ["loo", "--input", str(hospital_csv), "--draws", str(fit),
             "--out", str(out), "--c", "1"]
        )
        assert rc == 0
        payload = json.loads((out / "loo.json").read_text())
        assert payload["looic"] == pytest.approx(-2.0 * payload["elpd_loo"])
        assert len((out / "loo.csv").read_text().splitlines()) == 241


class TestSimulate:
    def grid(self, tmp_path):
        cfg = {
            "seed": 33,
            "families": ["tdw"],
            "mcmc": {"chains": 2, "adapt": 150, "burnin": 150, "iterations": 600, "thin": 1},
            "scenarios": [
                {"name": "a", "c": 1, "eta": 2.0, "delta": 0.1, "n": 50, "replicates": 2}
            ],
        }
        path = tmp_path / "grid.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_identity_hook(self, tmp_path, capsys):
        out = tmp_path / "sim"
        rc = cli.main(
            ["simulate", "--config", str(self.grid(tmp_path)), "--out", str(out),
             "--replicates", "1", "--test-hook", "identity"]
        )
        assert rc == 0
        body = (out / "results.csv").read_text()
        for line in body.splitlines()[1:]:
            cells = line.split(",")
            assert float(cells[4]) == 0.0  # bias
            assert float(cells[6]) == 1.0  # coverage

    def test_rerun_after_interrupt_identical(self, tmp_path):
        out1 = tmp_path / "s1"
        rc = cli.main(["simulate", "--config", str(self.grid(tmp_path)), "--out", str(out1)])
        assert rc == 0
        reference = (out1 / "results.csv").read_bytes()

        out2 = tmp_path / "s2"
        cli.main(["simulate", "--config", str(self.grid(tmp_path)), "--out", str(out2)])
        manifest = json.loads((out2 / "manifest.json").read_text())
        manifest["records"]["a"].pop("1")
        (out2 / "manifest.json").write_text(json.dumps(manifest))
        (out2 / "results.csv").unlink()
        rc = cli.main(["simulate", "--config", str(self.grid(tmp_path)), "--out", str(out2)])
        assert rc == 0
        assert (out2 / "results.csv").read_bytes() == reference

    def test_corrupt_manifest_errors(self, tmp_path, capsys):
        out = tmp_path / "sim"
        cli.main(["simulate", "--config", str(self.grid(tmp_path)), "--out", str(out),
                  "--test-hook", "identity"])
        (out / "manifest.json").write_text("{oops")
        rc = cli.main(["simulate", "--config", str(self.grid(tmp_path)), "--out", str(out),
                       "--test-hook", "identity"])
        assert rc == 1
        assert "restart" in capsys.readouterr().err


class TestDist:
    def test_pmf_value(self, capsys):
        rc = cli.main(["dist", "--family", "tdw", "--m-star", "2", "--alpha", "1.0",
                       "--c", "1", "pmf", "1"])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(0.5)

    def test_tnb_mean(self, capsys):
        rc = cli.main(["dist", "--family", "tnb", "--mu", "2", "--alpha", "1.5",
                       "--c", "1", "mean"])
        assert rc == 0
        expected = 2.0 / (1.0 - (1.5 / 3.5) ** 1.5)
        assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(expected)

    def test_ctdw_quantile_median(self, capsys):
        rc = cli.main(["dist", "--family", "ctdw", "--m-star", "6.7", "--alpha", "0.6",
                       "--eta", "4", "--delta", "0.3", "--c", "1", "quantile", "0.5"])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["value"] == 6

    def test_invalid_params_exit_one(self, capsys):
        rc = cli.main(["dist", "--family", "tdw", "--m-star", "0.5", "--alpha", "1.0",
                       "--c", "1", "pmf", "1"])
        assert rc == 1
        assert "m_star" in capsys.readouterr().err
