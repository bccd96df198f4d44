"""End-to-end command-line behavior, including exit codes."""

import json
import os

import pytest

from pcstream.cli import main
from pcstream.metrics import read_csv
from pcstream.scenario import load_store_catalog


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def store_dir(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("store"))
    rc = run_cli("encode", "--synthetic", "sphere_shell:3000", "--depth", "6",
                 "--frames", "8", "--gof", "2", "--out", out)
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory, store_dir):
    doc = {
        "protocol": "inds",
        "dataset": {"store": store_dir},
        "topology": "linear_debug",
        "n_consumers": 2,
        "bandwidth_mbps": 20,
        "loss_pct": 0.5,
        "seed": 3,
    }
    path = tmp_path_factory.mktemp("scen") / "s.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestEncode:
    def test_store_layout(self, store_dir):
        catalog = load_store_catalog(store_dir)
        assert sorted(catalog.gofs) == [1, 2, 3, 4]
        for gof in catalog.gofs:
            gof_dir = os.path.join(store_dir, f"GoF_{gof:04d}")
            files = sorted(os.listdir(gof_dir))
            assert files == ["30.bin", "TopLayer.bin", "enhanced30-50.bin",
                             "enhanced50-75.bin", "enhanced75-100.bin"]

    def test_manifest_matches_files(self, store_dir):
        catalog = load_store_catalog(store_dir)
        for gof, sizes in catalog.gofs.items():
            gof_dir = os.path.join(store_dir, f"GoF_{gof:04d}")
            top = os.path.getsize(os.path.join(gof_dir, "TopLayer.bin"))
            assert top == sizes.top
            for label, n in sizes.segments.items():
                assert os.path.getsize(
                    os.path.join(gof_dir, f"{label}.bin")) == n

    def test_requires_exactly_one_source(self, tmp_path):
        assert run_cli("encode", "--out", str(tmp_path / "s")) == 2
        assert run_cli("encode", "--synthetic", "sphere_shell:100",
                       "--ply", "frames/", "--out", str(tmp_path / "s")) == 2

    def test_bad_synthetic_spec(self, tmp_path):
        assert run_cli("encode", "--synthetic", "sphere_shell",
                       "--out", str(tmp_path / "s")) == 2

    def test_bad_ratios(self, tmp_path):
        assert run_cli("encode", "--synthetic", "sphere_shell:100",
                       "--ratios", "0.9,0.5,0.75,1.0",
                       "--out", str(tmp_path / "s")) == 2

    def test_missing_ply_dir(self, tmp_path):
        assert run_cli("encode", "--ply", str(tmp_path / "none"),
                       "--out", str(tmp_path / "s")) == 2


class TestRun:
    def test_writes_metrics(self, tmp_path, scenario_file):
        out = str(tmp_path / "m.csv")
        assert run_cli("run", "--scenario", scenario_file, "--out", out) == 0
        _, rows = read_csv(out)
        assert len(rows) == 1
        assert rows[0]["scenario_id"] == "inds_20mbps_0.5pct_seed3"
        assert rows[0]["status"] == "ok"

    def test_rerun_identical(self, tmp_path, scenario_file):
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        run_cli("run", "--scenario", scenario_file, "--out", p1)
        run_cli("run", "--scenario", scenario_file, "--out", p2)
        with open(p1, "rb") as f1, open(p2, "rb") as f2:
            assert f1.read() == f2.read()

    def test_seed_override(self, tmp_path, scenario_file):
        out = str(tmp_path / "m.csv")
        run_cli("run", "--scenario", scenario_file, "--out", out,
                "--seed", "9")
        _, rows = read_csv(out)
        assert rows[0]["seed"] == "9"
        assert rows[0]["scenario_id"].endswith("seed9")

    def test_trace_flag(self, tmp_path, scenario_file):
        out, trace = str(tmp_path / "m.csv"), str(tmp_path / "t.csv")
        assert run_cli("run", "--scenario", scenario_file, "--out", out,
                       "--trace", trace) == 0
        _, rows = read_csv(trace)
        assert rows

    def test_missing_scenario_exit_2(self, capsys):
        assert run_cli("run", "--scenario", "absent.json") == 2
        assert "scenario" in capsys.readouterr().err

    def test_unknown_key_named(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "protocol": "inds", "dataset": {"synthetic": {}}, "loss_pc": 1}))
        assert run_cli("run", "--scenario", str(path)) == 2
        assert "loss_pc" in capsys.readouterr().err


@pytest.fixture(scope="module")
def sweep_csv(tmp_path_factory, scenario_file):
    out = str(tmp_path_factory.mktemp("sweep") / "sw.csv")
    rc = run_cli("sweep", "--scenario", scenario_file, "--out", out,
                 "--protocols", "inds,dash_pc", "--bandwidths", "20",
                 "--losses", "0.0,0.5", "--seeds", "1,2",
                 "--jobs", "1", "--quiet")
    assert rc == 0
    return out


class TestSweepCommand:
    def test_grid_rows(self, sweep_csv):
        _, rows = read_csv(sweep_csv)
        assert len(rows) == 2 * 1 * 2 * 2
        assert all(r["status"] == "ok" for r in rows)

    def test_bad_protocol_exit_2(self, capsys):
        assert run_cli("sweep", "--protocols", "warp", "--quiet") == 2
        assert "protocols" in capsys.readouterr().err

    def test_bad_losses_exit_2(self):
        assert run_cli("sweep", "--losses", "a,b", "--quiet") == 2

    def test_report_from_sweep(self, tmp_path, sweep_csv):
        out_dir = str(tmp_path / "rep")
        assert run_cli("report", "--raw", sweep_csv,
                       "--out-dir", out_dir) == 0
        _, agg = read_csv(os.path.join(out_dir, "aggregate.csv"))
        assert len(agg) == 4  # 2 protocols x 1 bandwidth x 2 loss points
        assert all(r["n_runs"] == "2" for r in agg)
        for name in ("cache_hit.png", "delay.png", "throughput.png"):
            path = os.path.join(out_dir, name)
            assert os.path.getsize(path) > 1000


class TestReportErrors:
    def test_missing_schema_exit_2(self, tmp_path):
        raw = tmp_path / "raw.csv"
        raw.write_text("a,b\n1,2\n")
        assert run_cli("report", "--raw", str(raw)) == 2

    def test_wrong_version_exit_2(self, tmp_path, capsys):
        raw = tmp_path / "raw.csv"
        raw.write_text("# schema=pcstream.metrics.v999\nscenario_id\nx\n")
        assert run_cli("report", "--raw", str(raw)) == 2
        assert "pcstream.metrics.v1" in capsys.readouterr().err

    def test_empty_rows_exit_2(self, tmp_path):
        raw = tmp_path / "raw.csv"
        raw.write_text("# schema=pcstream.metrics.v1\nscenario_id\n")
        assert run_cli("report", "--raw", str(raw)) == 2


class TestPsnrCommand:
    def test_table_and_csv(self, tmp_path, capsys):
        out = str(tmp_path / "q.csv")
        rc = run_cli("psnr", "--synthetic", "sphere_shell:5000", "--depth",
                     "6", "--clouds", "2", "--seed", "7", "--out", out)
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "/30" in stdout and "/100" in stdout
        _, rows = read_csv(out)
        assert len(rows) == 2 * 4
        for cloud in ("0", "1"):
            vals = [float(r["psnr_db"]) for r in rows if r["cloud"] == cloud]
            assert vals == sorted(vals)
            assert vals[0] < vals[1] < vals[2]  # strict below the exact rung

    def test_bad_spec_exit_2(self):
        assert run_cli("psnr", "--synthetic", "blob") == 2
