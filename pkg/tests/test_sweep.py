"""Grid expansion and batch execution."""

import pytest

from pcstream.scenario import ScenarioConfig, SyntheticSpec
from pcstream.sweep import (
    DEFAULT_BANDWIDTHS,
    DEFAULT_LOSSES,
    DEFAULT_SEEDS,
    SweepGrid,
    _store_for,
    default_base,
    grid_configs,
    run_one,
    run_sweep,
)

TINY = SyntheticSpec(n_points=2000, depth=6, n_frames=4, gof_size=2, seed=5)


def tiny_base(**kw):
    args = dict(protocol="inds", synthetic=TINY, n_consumers=2,
                bandwidth_mbps=20.0)
    args.update(kw)
    return ScenarioConfig(**args)


def tiny_grid():
    return SweepGrid(protocols=("inds", "dash_pc"), bandwidths_mbps=(20.0,),
                     loss_pcts=(0.0, 0.5), seeds=(1, 2))


class TestGrid:
    def test_default_dimensions(self):
        assert len(DEFAULT_LOSSES) == 11
        assert DEFAULT_LOSSES[0] == 0.0 and DEFAULT_LOSSES[-1] == 1.0
        assert DEFAULT_BANDWIDTHS == (10.0, 50.0, 80.0)
        assert len(DEFAULT_SEEDS) == 5
        assert SweepGrid().size() == 3 * 3 * 11 * 5 == 495

    def test_expansion_order(self):
        configs = grid_configs(tiny_grid(), tiny_base())
        assert len(configs) == 8
        # slowest axis is protocol, fastest is seed
        assert [c.protocol for c in configs[:4]] == ["inds"] * 4
        assert [c.seed for c in configs[:4]] == [1, 2, 1, 2]
        assert [c.loss_pct for c in configs[:4]] == [0.0, 0.0, 0.5, 0.5]
        assert configs[4].protocol == "dash_pc"

    def test_base_fields_carried(self):
        base = tiny_base(n_consumers=3, safety=0.7)
        cfg = grid_configs(tiny_grid(), base)[0]
        assert cfg.n_consumers == 3
        assert cfg.safety == 0.7

    def test_explicit_id_cleared_per_point(self):
        base = tiny_base(scenario_id="base_run")
        configs = grid_configs(tiny_grid(), base)
        ids = {c.resolved_id() for c in configs}
        assert len(ids) == len(configs)  # every grid point distinct


class TestStoreCache:
    def test_same_spec_shares_store(self):
        a = _store_for(tiny_base(seed=1))
        b = _store_for(tiny_base(seed=2))
        assert a is b


class TestRunOne:
    def test_ok_row(self):
        row = run_one(tiny_base(seed=1))
        assert row["status"] == "ok"
        assert row["scenario_id"] == "inds_20mbps_0pct_seed1"

    def test_failure_becomes_status_row(self):
        cfg = ScenarioConfig(protocol="inds", dataset_store="/nonexistent",
                             seed=1)
        row = run_one(cfg)
        assert row["status"] == "error:ScenarioError"
        assert row["cache_hit_rate"] == ""


class TestRunSweep:
    def test_rows_in_grid_order(self):
        configs = grid_configs(tiny_grid(), tiny_base())
        calls = []
        rows = run_sweep(configs, jobs=1,
                         progress=lambda d, t, r: calls.append((d, t)))
        assert [r["scenario_id"] for r in rows] == [
            c.resolved_id() for c in configs]
        assert calls == [(i + 1, 8) for i in range(8)]

    def test_pool_matches_sequential(self):
        configs = grid_configs(tiny_grid(), tiny_base())
        seq = run_sweep(configs, jobs=1)
        par = run_sweep(configs, jobs=2)
        assert par == seq

    @pytest.mark.parametrize("jobs", [0, -3])
    def test_jobs_floor(self, jobs):
        rows = run_sweep([tiny_base(seed=1)], jobs=jobs)
        assert rows[0]["status"] == "ok"

    def test_default_base_uses_sweep_dataset(self):
        base = default_base()
        assert base.synthetic.n_points == 20000
        assert base.synthetic.depth == 7
        assert base.synthetic.n_frames // base.synthetic.gof_size == 10
        assert base.n_consumers == 10
