"""Report and plot-data emission.

Every CSV is written to a temporary file and renamed into place.  Floats use a
fixed ``%.10g`` format and no timestamps are written, so identical runs give
byte-identical files.
"""

from __future__ import annotations

import io
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from .copulas import sample_copula
from .dependence import FUNCTIONALS
from .diagnostics import acf, qq_points

FLOAT_FORMAT = "%.10g"
DIAGNOSTICS_DIR = "diagnostics"
BOOTSTRAP_DIR = "bootstrap"
REPORT_FILES = ("descriptives.csv", "changepoint.csv", "marginal_bic.csv", "marginal_params.csv",
                "copula_bic_p1.csv", "copula_bic_p2.csv", "copula_params.csv", "functionals.csv",
                "independence.csv", "report.txt")
# file -> stage that produces it
_FILE_STAGE = {
    "descriptives.csv": "diagnostics",
    "changepoint.csv": "changepoint",
    "marginal_bic.csv": "marginals",
    "marginal_params.csv": "marginals",
    "copula_bic_p1.csv": "copulas",
    "copula_bic_p2.csv": "copulas",
    "copula_params.csv": "copulas",
    "functionals.csv": "functionals",
    "independence.csv": "independence",
}


class ReportError(OSError):
    pass


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(frame: pd.DataFrame) -> str:
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue()


def _write_csv(path: Path, frame: pd.DataFrame) -> None:
    _atomic_write(path, _csv(frame))


# ------------------------------------------------------------------ tables
def changepoint_table(rep) -> pd.DataFrame | None:
    cp = rep.changepoint
    if cp is None:
        return None
    t = cp.table.copy()
    t["boundary_date"] = pd.to_datetime(t["boundary_date"]).dt.strftime("%Y-%m-%d")
    t["selected"] = t["boundary"] == cp.boundary_index if cp.found else False
    return t


def marginal_tables(rep) -> tuple[pd.DataFrame, pd.DataFrame] | None:
    if not rep.marginals:
        return None
    bic, params = [], []
    for period, sels in rep.marginals.items():
        for asset, sel in zip(rep.panel.asset_ids, sels):
            t = sel.table.copy()
            t.insert(0, "asset", asset)
            t.insert(0, "period", period)
            bic.append(t)
            best = sel.best
            se = best.std_errors or {}
            for name, value in best.params.as_dict().items():
                params.append({"period": period, "asset": asset, "spec": best.spec.label(), "param": name,
                               "estimate": value, "se": se.get(name, np.nan), "loglik": best.loglik,
                               "bic": best.bic, "nu_at_bound": best.nu_at_bound})
    return pd.concat(bic, ignore_index=True), pd.DataFrame(params)


def _scopes(rep, res):
    yield "joint", res.joint
    for (i, j), sel in sorted(res.pairs.items()):
        yield rep.pair_label(i, j), sel


def copula_bic_table(rep, period: str) -> pd.DataFrame | None:
    frames = []
    for mode in rep.config.modes:
        res = rep.copulas.get((period, mode))
        if res is None:
            continue
        for scope, sel in _scopes(rep, res):
            t = sel.table.copy()
            t.insert(0, "scope", scope)
            t.insert(0, "mode", mode)
            frames.append(t)
    return pd.concat(frames, ignore_index=True) if frames else None


def copula_params_table(rep) -> pd.DataFrame | None:
    rows = []
    for (period, mode), res in sorted(rep.copulas.items()):
        for scope, sel in _scopes(rep, res):
            fit = sel.best
            se = fit.std_errors or {}
            for name, value in fit.params.named_values().items():
                rows.append({"period": period, "mode": mode, "scope": scope, "family": fit.family,
                             "param": name, "estimate": value, "se": se.get(name, np.nan),
                             "loglik": fit.loglik, "bic": fit.bic, "at_boundary": fit.at_boundary})
    return pd.DataFrame(rows) if rows else None


def report_tables(rep) -> dict[str, pd.DataFrame | None]:
    marg = marginal_tables(rep)
    return {
        "descriptives.csv": rep.descriptives,
        "changepoint.csv": changepoint_table(rep),
        "marginal_bic.csv": marg[0] if marg else None,
        "marginal_params.csv": marg[1] if marg else None,
        "copula_bic_p1.csv": copula_bic_table(rep, "p1"),
        "copula_bic_p2.csv": copula_bic_table(rep, "p2"),
        "copula_params.csv": copula_params_table(rep),
        "functionals.csv": rep.functionals,
        "independence.csv": rep.independence,
    }


# ------------------------------------------------------------------ text report
def _fmt(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False, float_format=lambda v: f"{v:.6g}")


def _skip_reason(rep, name: str) -> str:
    stage = _FILE_STAGE[name]
    if name == "changepoint.csv" and "changepoint" in rep.skipped:
        return rep.skipped["changepoint"]
    return rep.skipped.get(stage, "no data")


def render_text(rep, tables) -> str:
    out = ["REGIME DEPENDENCE ANALYSIS", "", "[provenance]"]
    out += [f"{k}: {v}" for k, v in sorted(rep.provenance.items())]
    out += ["", "[stages]", "run: " + ", ".join(rep.stages_run)]
    for name in _FILE_STAGE:
        if tables.get(name) is None:
            out.append(f"skipped {name}: {_skip_reason(rep, name)}")
    if rep.split is not None:
        p1, p2 = rep.periods["p1"], rep.periods["p2"]
        out += ["", "[periods]", f"change date: {np.datetime64(rep.split.change_date, 'D')}",
                f"p1: {np.datetime64(p1.dates[0], 'D')} to {np.datetime64(p1.dates[-1], 'D')} (T={p1.T})",
                f"p2: {np.datetime64(p2.dates[0], 'D')} to {np.datetime64(p2.dates[-1], 'D')} (T={p2.T})"]
    if rep.descriptives is not None:
        out += ["", "[descriptives] kurtosis is raw, not excess", _fmt(rep.descriptives)]
    if rep.diagnostics is not None and not rep.diagnostics.empty:
        out += ["", "[diagnostics]", _fmt(rep.diagnostics)]
    if tables.get("changepoint.csv") is not None:
        out += ["", "[changepoint]", _fmt(tables["changepoint.csv"])]
    if rep.marginals:
        out += ["", "[selected marginal models]"]
        for period, sels in rep.marginals.items():
            for asset, sel in zip(rep.panel.asset_ids, sels):
                b = sel.best
                vals = ", ".join(f"{k}={v:.6g}" for k, v in b.params.as_dict().items())
                out.append(f"{period} {asset}: {b.spec.label()} bic={b.bic:.6g} {vals}")
    if rep.copulas:
        out += ["", "[selected copulas]"]
        for (period, mode), res in sorted(rep.copulas.items()):
            for scope, sel in _scopes(rep, res):
                out.append(f"{period} {mode} {scope}: {sel.best.params!r} bic={sel.best.bic:.6g}")
        for period in ("p1", "p2"):
            agree = rep.mode_agreement(period)
            if not agree.empty:
                out += [f"mode agreement {period}: {int(agree['agree'].sum())}/{len(agree)}", _fmt(agree)]
    if rep.functionals is not None:
        f = rep.functionals.set_index(["pair", "period"])
        out += ["", f"[functionals] mode={rep.primary_mode}",
                f[["family", *FUNCTIONALS]].to_string(float_format=lambda v: f"{v:.4f}"),
                "bootstrap standard errors",
                f[[f"{n}_se" for n in FUNCTIONALS]].to_string(float_format=lambda v: f"{v:.4f}")]
    if rep.independence is not None:
        out += ["", "[independence] distance covariance permutation tests", _fmt(rep.independence)]
    return "\n".join(out) + "\n"


def emit_report(rep, directory) -> list[Path]:
    """Write the per-table CSVs and ``report.txt``; tables without data are omitted."""
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create output directory {d}: {exc}") from exc
    if not os.access(d, os.W_OK):
        raise ReportError(f"output directory {d} is not writable")
    tables = report_tables(rep)
    written = []
    for name, frame in tables.items():
        path = d / name
        if frame is None:
            if path.exists():
                path.unlink()  # stale file from an earlier run
            continue
        _write_csv(path, frame)
        written.append(path)
    _atomic_write(d / "report.txt", render_text(rep, tables))
    written.append(d / "report.txt")
    written += emit_diagnostics(rep, d / DIAGNOSTICS_DIR)
    if rep.config.bootstrap.dump_replicates:
        written += emit_bootstrap_replicates(rep, d / BOOTSTRAP_DIR)
    return written


def emit_diagnostics(rep, directory) -> list[Path]:
    """One CSV per asset: test, series, lag, statistic, p-value."""
    if rep.diagnostics is None or rep.diagnostics.empty:
        return []
    d = Path(directory)
    out = []
    for asset, frame in rep.diagnostics.groupby("asset", sort=False):
        path = d / f"diagnostics_{asset}.csv"
        _write_csv(path, frame.drop(columns="asset"))
        out.append(path)
    return out


def emit_bootstrap_replicates(rep, directory) -> list[Path]:
    """Replicate functional values per pair and period (failed replicates as empty cells)."""
    d = Path(directory)
    out = []
    for (period, pair), reps in sorted(rep.bootstrap_replicates.items()):
        frame = pd.DataFrame(reps, columns=list(FUNCTIONALS))
        frame.insert(0, "replicate", np.arange(len(frame)))
        path = d / f"bootstrap_{period}_{pair}.csv"
        _write_csv(path, frame)
        out.append(path)
    return out


# ------------------------------------------------------------------ plot data
def emit_plot_data(rep, directory) -> list[Path]:
    """Observed-vs-simulated pseudo-observations per pair and period (primary
    mode), plus ACF, Hill-vs-k and normal-QQ tables."""
    from .pipeline import derive_seed

    if not rep.copulas:
        raise ReportError("plot data needs fitted pairwise copulas")
    d = Path(directory)
    written = []
    mode = rep.primary_mode
    for k, period in enumerate(("p1", "p2")):
        res = rep.copulas[(period, mode)]
        for n_pair, ((i, j), sel) in enumerate(sorted(res.pairs.items())):
            obs = res.pseudo.values[:, [i, j]]
            n_sim = rep.config.plots.n_sim or obs.shape[0]
            rng = np.random.default_rng(derive_seed(rep.config.seed, 100, k, n_pair))
            sim = sample_copula(sel.best.params, n_sim, rng)
            ids = rep.panel.asset_ids
            frame = pd.DataFrame({
                "tag": ["obs"] * obs.shape[0] + ["sim"] * n_sim,
                f"u_{ids[i]}": np.concatenate([obs[:, 0], sim[:, 0]]),
                f"u_{ids[j]}": np.concatenate([obs[:, 1], sim[:, 1]]),
            })
            path = d / f"scatter_{period}_{ids[i]}-{ids[j]}.csv"
            _write_csv(path, frame)
            written.append(path)

    panel = rep.panel
    max_lag = min(rep.config.diagnostics.acf_max_lag, (panel.T - 1) // 2)
    acf_rows, qq_rows = [], []
    for j, asset in enumerate(panel.asset_ids):
        y = panel.returns[:, j]
        for series, x in (("returns", y), ("squared", y * y)):
            vals = acf(x, max_lag)
            acf_rows.append(pd.DataFrame({"asset": asset, "series": series, "lag": np.arange(1, max_lag + 1),
                                          "acf": vals}))
        theo, samp = qq_points(y, scaled=False)
        qq_rows.append(pd.DataFrame({"asset": asset, "normal_quantile": theo, "sample_quantile": samp}))
    for name, frame in (("acf.csv", pd.concat(acf_rows, ignore_index=True)),
                        ("qq.csv", pd.concat(qq_rows, ignore_index=True))):
        _write_csv(d / name, frame)
        written.append(d / name)
    if rep.hill is not None and not rep.hill.empty:
        _write_csv(d / "hill.csv", rep.hill)
        written.append(d / "hill.csv")
    return written

