import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml
from numpy.testing import assert_array_equal

from regimedep import cli
from regimedep.config import ConfigError, PipelineConfig, config_from_dict, dump_config, load_config
from regimedep.dependence import sample_kendall_tau
from regimedep.ingest import load_announcements, load_price_table, quarterly_counts
from regimedep.pipeline import STAGES, PipelineError, block_splits, derive_seed, run_pipeline
from regimedep.report import REPORT_FILES, ReportError, emit_plot_data, emit_report
from regimedep.synthetic import ASSETS, SyntheticConfig, generate


# ---------------------------------------------------------------- config
def test_default_config_valid():
    cfg = PipelineConfig().validate()
    assert cfg.modes == ("parametric", "semiparametric")
    assert cfg.primary_mode == "parametric"


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"marginals": {"bogus": 1}},
    {"seed": None},
    {"output": ""},
    {"mode": "bayesian"},
    {"data": {"prices": "p.csv"}},
    {"marginals": {"p_grid": []}},
    {"marginals": {"families": ["laplace"]}},
    {"copulas": {"families": ["gaussian"]}},
    {"copulas": {"families": ["gaussian", "joe"]}},
    {"bootstrap": {"replicates": 10}},
    {"bootstrap": {"scheme": "stationary"}},
    {"independence": {"permutations": 50}},
    {"changepoint": {"window": 1}},
    {"marginals": "flat"},
])
def test_config_rejects(raw):
    with pytest.raises(ConfigError):
        config_from_dict(raw)


def test_load_config_resolves_relative_paths(tmp_path):
    (tmp_path / "cfg.yaml").write_text(yaml.safe_dump({"seed": 3, "data": {"prices": "p.csv",
                                                                           "announcements": "a.csv"}}))
    cfg = load_config(tmp_path / "cfg.yaml")
    assert cfg.seed == 3
    assert Path(cfg.data.prices) == (tmp_path / "p.csv").resolve()
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_dump_roundtrip_and_digest():
    cfg = config_from_dict({"seed": 9, "copulas": {"families": ["gaussian", "frank"]}})
    again = config_from_dict(yaml.safe_load(dump_config(cfg)))
    assert again == cfg
    other = config_from_dict({"seed": 9, "output": "elsewhere", "copulas": {"families": ["gaussian", "frank"]}})
    assert other.digest() == cfg.digest()
    assert config_from_dict({"seed": 10}).digest() != config_from_dict({"seed": 9}).digest()


# ---------------------------------------------------------------- helpers
def test_derive_seed():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(1, 2, k) for k in range(100)} | {derive_seed(2, 2, 0)}
    assert len(seeds) == 101


def test_block_splits_partition():
    splits = block_splits(4)
    assert len(splits) == 7  # 2^(d-1) - 1
    for a, b in splits:
        assert sorted(a + b) == [0, 1, 2, 3] and len(a) >= len(b)
    assert len({frozenset([a, b]) for a, b in splits}) == 7
    assert len(block_splits(2)) == 1


# ---------------------------------------------------------------- synthetic
def test_synthetic_deterministic_and_shaped():
    cfg = SyntheticConfig(start="2004-01-01", end="2005-12-31", change_date="2005-01-01")
    a, b = generate(3, cfg), generate(3, cfg)
    pd.testing.assert_frame_equal(a.prices, b.prices)
    pd.testing.assert_frame_equal(a.announcements, b.announcements)
    assert list(a.prices.columns) == ["date", *ASSETS]
    assert (a.prices[list(ASSETS)].to_numpy() > 0).all()
    assert not generate(4, cfg).prices.equals(a.prices)
    assert a.change_date == np.datetime64("2005-01-01")


def test_synthetic_announcement_rates(synthetic_files):
    counts = dict(quarterly_counts(load_announcements(synthetic_files[1])))
    before = [v for k, v in counts.items() if k < "2006Q1"]
    after = [v for k, v in counts.items() if k >= "2006Q1"]
    assert 4 < np.mean(before) < 6 and 0.5 < np.mean(after) < 1.5


def test_synthetic_files_load(synthetic_files):
    series = load_price_table(synthetic_files[0])
    assert [s.asset_id for s in series] == list(ASSETS)


# ---------------------------------------------------------------- pipeline
@pytest.fixture(scope="module")
def full_run(tmp_path_factory, small_files):
    prices, ann = small_files
    out = tmp_path_factory.mktemp("full")
    cfg = config_from_dict({
        "seed": 5, "output": str(out / "report"),
        "data": {"prices": str(prices), "announcements": str(ann)},
        "marginals": {"p_grid": [1], "q_grid": [1], "families": ["student_t"], "restarts": 0},
        "copulas": {"families": ["gaussian", "clayton", "frank"]},
        "functionals": {"nodes": 64},
        "independence": {"permutations": 99},
        "plots": {"n_sim": 3000},
    })
    rep = run_pipeline(cfg)
    files = emit_report(rep, cfg.output)
    plots = emit_plot_data(rep, out / "plot_data")
    return rep, files, plots, out


def test_pipeline_runs_all_stages(full_run):
    rep = full_run[0]
    assert rep.stages_run == list(STAGES)
    assert rep.skipped == {}
    assert rep.changepoint.change_date == np.datetime64("2006-01-01")
    for key in ("version", "seed", "config_hash", "mode", "change_date", "data"):
        assert key in rep.provenance


def test_period_partition(full_run):
    rep = full_run[0]
    p1, p2 = rep.periods["p1"], rep.periods["p2"]
    change = rep.split.change_date
    assert p1.T + p2.T == rep.panel.T
    assert (p1.dates < change).all() and (p2.dates >= change).all()
    assert_array_equal(np.concatenate([p1.returns, p2.returns]), rep.panel.returns)
    for period, panel in rep.periods.items():
        for mode in ("parametric", "semiparametric"):
            assert rep.copulas[(period, mode)].pseudo.T == panel.T


def test_functionals_table(full_run):
    f = full_run[0].functionals
    assert len(f) == 12 and set(f["period"]) == {"p1", "p2"}
    assert (f["tau_se"] > 0).all() and (f["n_boot_failed"] == 0).all()
    assert f[["rho_s", "tau", "lambda_l", "lambda_u"]].notna().all().all()


def test_report_file_set(full_run):
    rep, files, _, out = full_run
    top = {p.name for p in (out / "report").iterdir() if p.is_file()}
    assert top == set(REPORT_FILES)
    for name in REPORT_FILES:
        if name.endswith(".csv"):
            assert not pd.read_csv(out / "report" / name).empty
    assert {p.name for p in (out / "report" / "diagnostics").iterdir()} == {f"diagnostics_{a}.csv" for a in ASSETS}
    text = (out / "report" / "report.txt").read_text()
    assert "config_hash" in text and "skipped" not in text


def test_plot_data(full_run):
    rep, _, plots, out = full_run
    scatter = [p for p in plots if p.name.startswith("scatter_")]
    assert len(scatter) == 12
    assert {p.name for p in plots} - {p.name for p in scatter} == {"acf.csv", "qq.csv", "hill.csv"}
    f = rep.functionals.set_index(["pair", "period"])
    for p in scatter:
        _, period, pair = p.stem.split("_")
        frame = pd.read_csv(p)
        sim = frame[frame["tag"] == "sim"].iloc[:, 1:].to_numpy()
        assert (frame["tag"] == "obs").sum() == rep.periods[period].T and len(sim) == 3000
        assert abs(sample_kendall_tau(sim[:, 0], sim[:, 1]) - f.loc[(pair, period), "tau"]) < 0.05
    again = emit_plot_data(rep, out / "plot_again")
    for a, b in zip(plots, again):
        assert a.read_bytes() == b.read_bytes()


def test_override_skips_detection(small_config_dict, tmp_path):
    raw = dict(small_config_dict, output=str(tmp_path / "o"), changepoint={"override": "2006-07-03"})
    rep = run_pipeline(config_from_dict(raw), until="changepoint")
    assert rep.changepoint is None and "override" in rep.skipped["changepoint"]
    assert rep.split.change_date == np.datetime64("2006-07-03")
    assert rep.periods["p2"].dates[0] >= np.datetime64("2006-07-03")
    files = {p.name for p in emit_report(rep, tmp_path / "o")}
    assert "changepoint.csv" not in files and "descriptives.csv" in files
    text = (tmp_path / "o" / "report.txt").read_text()
    assert "skipped changepoint.csv: override 2006-07-03 supplied" in text
    assert "skipped marginal_bic.csv: not run" in text


def test_semiparametric_mode_skips_marginals(small_config_dict, tmp_path):
    raw = dict(small_config_dict, output=str(tmp_path), mode="semiparametric",
               changepoint={"override": "2006-01-01"})
    rep = run_pipeline(config_from_dict(raw), until="copulas")
    assert rep.marginals == {} and "marginals" in rep.skipped
    assert set(rep.copulas) == {("p1", "semiparametric"), ("p2", "semiparametric")}


def test_stage_failure_flushes_partial(small_config_dict, tmp_path):
    raw = dict(small_config_dict, output=str(tmp_path), changepoint={"override": "1999-01-01"})
    with pytest.raises(PipelineError) as info:
        run_pipeline(config_from_dict(raw))
    assert info.value.stage == "changepoint"
    assert info.value.report.stages_run == ["ingest", "diagnostics"]
    assert (tmp_path / "descriptives.csv").exists()
    assert not (tmp_path / "functionals.csv").exists()
    text = (tmp_path / "report.txt").read_text()
    assert "failed: IngestError" in text and "failed_stage: changepoint" in text
    assert "skipped functionals.csv: not run (changepoint failed)" in text


def test_unknown_stage(small_config_dict):
    with pytest.raises(ValueError):
        run_pipeline(config_from_dict(small_config_dict), until="plots")


# ---------------------------------------------------------------- report io
def test_reemission_is_atomic(full_run, tmp_path, monkeypatch):
    rep = full_run[0]
    emit_report(rep, tmp_path)
    before = {p.name: p.read_bytes() for p in tmp_path.iterdir() if p.is_file()}
    emit_report(rep, tmp_path)
    after = {p.name: p.read_bytes() for p in tmp_path.iterdir() if p.is_file()}
    assert before == after  # no temporaries left behind

    def broken(src, dst):
        raise OSError("disk full")
    monkeypatch.setattr(os, "replace", broken)
    with pytest.raises(OSError):
        emit_report(rep, tmp_path)
    assert {p.name: p.read_bytes() for p in tmp_path.iterdir() if p.is_file()} == before


def test_unwritable_output(full_run, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportError):
        emit_report(full_run[0], blocker / "sub")


def test_stale_csv_removed(full_run, small_config_dict, tmp_path):
    emit_report(full_run[0], tmp_path)
    raw = dict(small_config_dict, changepoint={"override": "2006-01-01"})
    rep = run_pipeline(config_from_dict(raw), until="changepoint")
    emit_report(rep, tmp_path)
    assert not (tmp_path / "changepoint.csv").exists()
    assert not (tmp_path / "functionals.csv").exists()


# ---------------------------------------------------------------- cli
def _write_cfg(path, raw):
    path.write_text(yaml.safe_dump(raw))
    return path


def test_cli_simulate(tmp_path, capsys):
    assert cli.main(["simulate", "--seed", "7", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "prices.csv").exists() and (tmp_path / "announcements.csv").exists()
    assert "wrote" in capsys.readouterr().out


def test_cli_stage_command(small_config_dict, tmp_path):
    cfg = _write_cfg(tmp_path / "c.yaml", small_config_dict)
    out = tmp_path / "out"
    assert cli.main(["changepoint", "--config", str(cfg), "--out", str(out), "--seed", "1"]) == 0
    assert {"descriptives.csv", "changepoint.csv", "report.txt"} <= {p.name for p in out.iterdir()}
    assert "seed: 1" in (out / "report.txt").read_text()


def test_cli_flags_override_config(small_config_dict, tmp_path):
    cfg = _write_cfg(tmp_path / "c.yaml", small_config_dict)
    args = cli.build_parser().parse_args(["all", "--config", str(cfg), "--seed", "4", "--out", "x",
                                          "--period-split", "2006-03-01", "--mode", "semiparametric"])
    resolved = cli.resolve_config(args)
    assert (resolved.seed, resolved.output, resolved.changepoint.override, resolved.mode) == \
        (4, "x", "2006-03-01", "semiparametric")


def test_cli_config_error_exit_2(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.yaml", {"mode": "nope"})
    assert cli.main(["ingest", "--config", str(cfg)]) == 2
    assert cli.main(["ingest", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_stage_failure_exit_1(small_config_dict, tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.yaml", small_config_dict)
    code = cli.main(["changepoint", "--config", str(cfg), "--out", str(tmp_path / "o"),
                     "--period-split", "2020-01-01"])
    assert code == 1
    assert "stage 'changepoint' failed" in capsys.readouterr().err
