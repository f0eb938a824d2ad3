"""End-to-end analysis: ingest, diagnostics, changepoint, marginals, copulas,
dependence functionals with bootstrap SEs, and independence tests."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .bootstrap import bootstrap_se
from .config import PipelineConfig
from .copulas import TwoStepResult, fit_copula, select_copula
from .dependence import FUNCTIONALS, distance_covariance_test, functional_set
from .diagnostics import arch_lm_test, descriptive_stats, hill_estimator, ljung_box_grid
from .ingest import (align_and_log_returns, detect_changepoint, load_announcements, load_price_table,
                     make_split, quarterly_counts, split_panel)
from .marginals import ecdf_pseudo_obs, pit_pseudo_obs, select_garch

log = logging.getLogger(__name__)

STAGES = ("ingest", "diagnostics", "changepoint", "marginals", "copulas", "functionals", "independence")
PERIODS = ("p1", "p2")
BOOT_MC_N = 20_000  # Monte Carlo draws for skew-t tau inside bootstrap replicates

# stage keys for derived seeds
_KEY = {name: i + 1 for i, name in enumerate(STAGES)}


class PipelineError(RuntimeError):
    """Stage failure; ``report`` holds the outputs completed before it."""

    def __init__(self, stage: str, cause: BaseException, report=None):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self.report = report


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for a (stage, item, ...) key under the master seed."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


@dataclass
class AnalysisReport:
    config: PipelineConfig
    provenance: dict
    stages_run: list[str] = field(default_factory=list)
    skipped: dict[str, str] = field(default_factory=dict)  # table name -> reason
    panel: object = None
    announcements: object = None
    descriptives: pd.DataFrame | None = None
    diagnostics: pd.DataFrame | None = None
    hill: pd.DataFrame | None = None
    changepoint: object = None
    split: object = None
    periods: dict = field(default_factory=dict)  # "p1"/"p2" -> ReturnPanel
    marginals: dict = field(default_factory=dict)  # period -> list[GarchSelection]
    copulas: dict = field(default_factory=dict)  # (period, mode) -> TwoStepResult
    functionals: pd.DataFrame | None = None
    bootstrap_replicates: dict = field(default_factory=dict)  # (period, pair) -> array
    independence: pd.DataFrame | None = None

    @property
    def primary_mode(self) -> str:
        return self.config.primary_mode

    def pair_label(self, i: int, j: int) -> str:
        ids = self.panel.asset_ids
        return f"{ids[i]}-{ids[j]}"

    def mode_agreement(self, period: str) -> pd.DataFrame:
        """Selected pairwise family per pseudo-observation mode."""
        rows = []
        res = {m: self.copulas.get((period, m)) for m in ("parametric", "semiparametric")}
        if any(r is None for r in res.values()):
            return pd.DataFrame(columns=["pair", "parametric", "semiparametric", "agree"])
        for (i, j) in res["parametric"].pairs:
            a = res["parametric"].pairs[(i, j)].best.family
            b = res["semiparametric"].pairs[(i, j)].best.family
            rows.append({"pair": self.pair_label(i, j), "parametric": a, "semiparametric": b, "agree": a == b})
        return pd.DataFrame(rows)


# ------------------------------------------------------------------ stages
def _stage_ingest(rep: AnalysisReport) -> None:
    cfg = rep.config
    if cfg.data.prices is None:
        from .synthetic import generate

        data_dir = Path(cfg.output) / "data"
        prices_path, ann_path = generate(cfg.data.synthetic_seed).write(data_dir)
        layout = "wide"
        rep.provenance["data"] = f"synthetic(seed={cfg.data.synthetic_seed})"
    else:
        prices_path, ann_path = Path(cfg.data.prices), Path(cfg.data.announcements)
        layout = cfg.data.layout
        rep.provenance["data"] = f"{prices_path.name}, {ann_path.name}"
    panel = align_and_log_returns(load_price_table(prices_path, layout))
    panel.check_variance()
    rep.panel = panel
    rep.announcements = load_announcements(ann_path)


def _describe(panel, label: str) -> list[dict]:
    rows = []
    for j, asset in enumerate(panel.asset_ids):
        s = descriptive_stats(panel.returns[:, j])
        rows.append({"period": label, "asset": asset, "n": panel.T, "mean": s.mean, "sd": s.sd,
                     "max": s.max, "min": s.min, "skewness": s.skewness, "kurtosis": s.kurtosis})
    return rows


def _stage_diagnostics(rep: AnalysisReport) -> None:
    cfg = rep.config.diagnostics
    panel = rep.panel
    rep.descriptives = pd.DataFrame(_describe(panel, "full"))
    rows, hill_rows = [], []
    lags = sorted(set(int(m) for m in cfg.lags if 1 <= m < panel.T / 2))
    for j, asset in enumerate(panel.asset_ids):
        y = panel.returns[:, j]
        for series, x in (("returns", y), ("squared", y * y)):
            for r in ljung_box_grid(x, lags):
                rows.append({"asset": asset, "series": series, "test": r.test_name, "lag": r.lag_or_df,
                             "statistic": r.statistic, "p_value": r.p_value})
        for m in lags:
            r = arch_lm_test(y, m)
            rows.append({"asset": asset, "series": "returns", "test": r.test_name, "lag": m,
                         "statistic": r.statistic, "p_value": r.p_value})
        ks = np.arange(cfg.hill_k_min, min(cfg.hill_k_max, panel.T - 1) + 1, rep.config.plots.hill_k_step)
        if ks.size:
            alpha = hill_estimator(np.abs(y), ks)
            hill_rows += [{"asset": asset, "k": int(k), "alpha": float(a)} for k, a in zip(ks, alpha)]
    rep.diagnostics = pd.DataFrame(rows)
    rep.hill = pd.DataFrame(hill_rows)


def _stage_changepoint(rep: AnalysisReport) -> None:
    cfg = rep.config.changepoint
    if cfg.override is not None:
        change = np.datetime64(cfg.override, "D")
        rep.skipped["changepoint"] = f"override {change} supplied; detection skipped"
        rep.provenance["change_date"] = f"{change} (override)"
    else:
        cp = detect_changepoint(quarterly_counts(rep.announcements), cfg.window, cfg.alpha)
        rep.changepoint = cp
        if not cp.found:
            raise ValueError("no significant changepoint; supply changepoint.override")
        change = cp.change_date
        rep.provenance["change_date"] = f"{change} (detected)"
    rep.split = make_split(rep.panel, change)
    p1, p2 = split_panel(rep.panel, rep.split)
    rep.periods = {"p1": p1, "p2": p2}
    extra = _describe(p1, "p1") + _describe(p2, "p2")
    base = rep.descriptives if rep.descriptives is not None else pd.DataFrame()
    rep.descriptives = pd.concat([base, pd.DataFrame(extra)], ignore_index=True)


def _stage_marginals(rep: AnalysisReport) -> None:
    cfg = rep.config
    if "parametric" not in cfg.modes:
        rep.skipped["marginals"] = "semiparametric mode only; no marginal models fitted"
        return
    m = cfg.marginals
    for k, period in enumerate(PERIODS):
        panel = rep.periods[period]
        rep.marginals[period] = [
            select_garch(panel.returns[:, j], m.p_grid, m.q_grid, m.families, restarts=m.restarts, init=m.init,
                         seed=derive_seed(cfg.seed, _KEY["marginals"], k, j))
            for j in range(panel.d)
        ]


def _stage_copulas(rep: AnalysisReport) -> None:
    fams = rep.config.copulas.families
    for period in PERIODS:
        panel = rep.periods[period]
        for mode in rep.config.modes:
            if mode == "parametric":
                pseudo = pit_pseudo_obs(panel, [s.best for s in rep.marginals[period]])
                marg = rep.marginals[period]
            else:
                pseudo = ecdf_pseudo_obs(panel)
                marg = None
            joint = select_copula(pseudo, fams)
            pairs = {(i, j): select_copula(pseudo.pair(i, j), fams)
                     for i, j in combinations(range(pseudo.d), 2)}
            rep.copulas[(period, mode)] = TwoStepResult(mode, pseudo, marg, joint, pairs)


def _stage_functionals(rep: AnalysisReport) -> None:
    cfg = rep.config
    mode = cfg.primary_mode
    rows = []
    for k, period in enumerate(PERIODS):
        res = rep.copulas[(period, mode)]
        for n_pair, ((i, j), sel) in enumerate(sorted(res.pairs.items())):
            fit = sel.best
            label = rep.pair_label(i, j)
            seed = derive_seed(cfg.seed, _KEY["functionals"], k, n_pair)
            full = functional_set(fit, seed=seed, n_nodes=cfg.functionals.nodes, mc_n=cfg.functionals.mc_tau_n)

            def statistic(sample, fit=fit, seed=seed):
                refit = fit_copula(fit.family, sample, start=fit.params, std_errors=False)
                fs = functional_set(refit, seed=seed, n_nodes=cfg.functionals.nodes, mc_n=BOOT_MC_N,
                                    extras=False)
                return [fs.as_dict()[name] for name in FUNCTIONALS]

            boot = bootstrap_se(statistic, res.pseudo.pair(i, j), cfg.bootstrap.plan(seed))
            rep.bootstrap_replicates[(period, label)] = boot.replicates
            row = {"pair": label, "period": period, "mode": mode, "family": fit.family}
            for q, name in enumerate(FUNCTIONALS):
                row[name] = getattr(full, name)
                row[f"{name}_se"] = float(boot.se[q])
            row["s_rho"] = full.s_rho
            row["s_rho_se"] = row["h2_se"]
            # numerical tail limit next to the closed form (skew-t has only the former)
            num = (full.lambda_l, full.lambda_u) if fit.family == "skew_t" else full.extra.get("lambda_numeric")
            row["lambda_l_numeric"], row["lambda_u_numeric"] = num if num is not None else (np.nan, np.nan)
            for name in FUNCTIONALS:
                row[f"{name}_method"] = full.methods[name]
            row["tau_mc_se"] = full.extra.get("tau_se", 0.0)
            row["n_boot_ok"] = boot.n_ok
            row["n_boot_failed"] = boot.n_failed
            rows.append(row)
    rep.functionals = pd.DataFrame(rows)


def block_splits(d: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Every split of ``d`` assets into two nonempty blocks, each listed once."""
    out = []
    idx = tuple(range(d))
    for size in range(1, d // 2 + 1):
        for left in combinations(idx, size):
            right = tuple(i for i in idx if i not in left)
            if size == d - size and left > right:
                continue
            out.append((right, left) if len(right) > len(left) else (left, right))
    return out


def _stage_independence(rep: AnalysisReport) -> None:
    cfg = rep.config
    pseudo = ecdf_pseudo_obs(rep.panel).values
    ids = rep.panel.asset_ids
    rows = []
    for n_split, (a, b) in enumerate(block_splits(rep.panel.d)):
        res = distance_covariance_test(pseudo[:, a], pseudo[:, b], cfg.independence.permutations,
                                       seed=derive_seed(cfg.seed, _KEY["independence"], n_split))
        rows.append({"block_x": "+".join(ids[i] for i in a), "block_y": "+".join(ids[i] for i in b),
                     "n": pseudo.shape[0], "dcov2": res.dcov2, "v2": res.v2, "dcor": res.dcor,
                     "p_value": res.p_value, "permutations": res.n_permutations})
    rep.independence = pd.DataFrame(rows)


_RUNNERS = {
    "ingest": _stage_ingest,
    "diagnostics": _stage_diagnostics,
    "changepoint": _stage_changepoint,
    "marginals": _stage_marginals,
    "copulas": _stage_copulas,
    "functionals": _stage_functionals,
    "independence": _stage_independence,
}


def run_pipeline(config: PipelineConfig, until: str = "independence", *, flush_on_error: bool = True) -> AnalysisReport:
    """Run stages in order through ``until``.

    A failing stage raises :class:`PipelineError` naming the stage; with
    ``flush_on_error`` the completed outputs are written to the output
    directory first.
    """
    config.validate()
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}; expected one of {STAGES}")
    prov = {"version": __version__, "seed": config.seed, "config_hash": config.digest(),
            "mode": config.mode}
    rep = AnalysisReport(config, prov)
    last = STAGES.index(until)
    for stage in STAGES[: last + 1]:
        log.info("stage %s", stage)
        try:
            _RUNNERS[stage](rep)
        except Exception as exc:
            err = PipelineError(stage, exc, rep)
            if flush_on_error:
                from .report import emit_report

                rep.skipped[stage] = f"failed: {type(exc).__name__}: {exc}"
                rep.provenance["failed_stage"] = stage
                for later in STAGES[STAGES.index(stage) + 1:]:
                    rep.skipped.setdefault(later, f"not run ({stage} failed)")
                try:
                    emit_report(rep, config.output)
                except Exception:  # the original failure is what matters
                    log.exception("could not flush partial outputs")
            raise err from exc
        rep.stages_run.append(stage)
    for stage in STAGES[last + 1:]:
        rep.skipped.setdefault(stage, f"not run (pipeline stopped after {until})")
    return rep
