"""Pipeline stages working on files in an output directory.

Each stage reads the artifacts of the stages before it, writes its own and
leaves a stamp recording the hashes of what it read and wrote.  A stage
refuses to run when an upstream stamp is missing or when the files it
vouches for have changed since.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from . import chpca, customer, export, hilbert, hodge, ingest, significance, synth
from .config import RunConfig

log = logging.getLogger(__name__)

STAMP_DIR = ".stamps"
PANEL = "panel"


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


# ---------------------------------------------------------------------------
# stamps
# ---------------------------------------------------------------------------

def _stamp_path(out: Path, stage: str) -> Path:
    return out / STAMP_DIR / f"{stage}.json"


def _hashes(out: Path, names) -> dict[str, str]:
    return {n: export.sha256(out / n) for n in sorted(names)}


def _write_stamp(out: Path, stage: str, inputs, outputs, notes=()):
    path = _stamp_path(out, stage)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {"stage": stage, "inputs": _hashes(out, inputs),
              "outputs": _hashes(out, outputs), "notes": list(notes)}
    path.write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")


def _read_stamp(out: Path, stage: str) -> dict:
    path = _stamp_path(out, stage)
    if not path.exists():
        raise StageError(stage, f"missing upstream artifacts in {out}; run the "
                         f"'{stage}' stage first")
    return json.loads(path.read_text())


def require(out: Path, stage: str) -> dict:
    """Check that ``stage`` ran and its inputs and outputs are unchanged."""
    stamp = _read_stamp(out, stage)
    for kind in ("inputs", "outputs"):
        for name, digest in stamp[kind].items():
            f = out / name
            if not f.exists():
                raise StageError(stage, f"missing artifact {f}; rerun the "
                                 f"'{stage}' stage")
            if export.sha256(f) != digest:
                raise StageError(stage, f"stale artifact {f}; rerun the "
                                 f"'{stage}' stage")
    return stamp


def _panel_stage(out: Path) -> str:
    for stage in ("ingest", "synth"):
        if _stamp_path(out, stage).exists():
            return stage
    raise StageError("ingest", f"no panel in {out}; run the 'ingest' or "
                     "'synth' stage first")


def _names(paths) -> list[str]:
    return [Path(p).name for p in paths]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _summary(raw: ingest.PanelSeries) -> pd.DataFrame:
    return pd.DataFrame({
        "index": np.arange(raw.N),
        "product": [l[0] for l in raw.labels],
        "variable": [l[1] for l in raw.labels],
        "entry_days": raw.entry_days if raw.entry_days is not None
        else (raw.values != 0).sum(axis=1),
        "mean": raw.values.mean(axis=1),
        "sd": raw.values.std(axis=1),
    })


def _load_panel(out: Path) -> ingest.PanelSeries:
    require(out, _panel_stage(out))
    return export.read_panel(out / PANEL)


def _complex_panel(out: Path) -> hilbert.ComplexPanel:
    return hilbert.complexify(_load_panel(out))


def _gauged_system(panel: hilbert.ComplexPanel) -> chpca.EigenSystem:
    sys = chpca.eigendecompose(chpca.correlation(panel), panel)
    q = [i for i, l in enumerate(panel.labels) if l[1] == "Q"]
    p = [i for i, l in enumerate(panel.labels) if l[1] == "P"]
    if q:
        sys = chpca.fix_gauge(sys, q, p)
    return sys


def _load_system(out: Path, labels) -> chpca.EigenSystem:
    lam = export.read_table(out / "eigenvalues.csv")["lambda"].to_numpy()
    vec = export.read_complex_matrix(out / "eigenvectors")
    p = tuple(i for i, l in enumerate(labels) if l[1] == "P")
    return chpca.EigenSystem(lam, vec, np.zeros((lam.size, 0), complex), p)


def _significant_modes(out: Path) -> list[int]:
    rrs = export.read_table(out / "rrs_report.csv")
    return [int(r) - 1 for r, s in zip(rrs["rank"], rrs["significant"]) if s]


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def stage_synth(cfg: RunConfig) -> list[Path]:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    spec = synth.chain_spec(cfg.synth_products, cfg.synth_lead_days, cfg.synth_noise,
                            cfg.seed, cfg.synth_days)
    res = synth.generate(spec)
    panel = ingest.standardize(res.panel)
    paths = list(export.write_panel(panel, out / PANEL))
    paths.append(export.write_table(_summary(res.panel), out / "panel_summary.csv"))
    paths.append(export.write_table(res.truth, out / "truth.csv"))
    if cfg.synth_customers > 0:
        events, profiles = synth.generate_customers(panel, cfg.synth_customers, cfg.seed)
        paths.append(export.write_table(events, out / "customers.csv"))
        paths.append(export.write_table(profiles, out / "profiles.csv"))
    _stamp_path(out, "ingest").unlink(missing_ok=True)
    _write_stamp(out, "synth", [], _names(paths))
    return paths


def stage_ingest(cfg: RunConfig) -> list[Path]:
    if not cfg.input:
        raise StageError("ingest", "no --input event file given")
    src = Path(cfg.input)
    if not src.exists():
        raise StageError("ingest", f"input file not found: {src}")
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    window = cfg.window()
    raw = ingest.load_events(src, window=window, delimiter=cfg.delimiter)
    if window is None:
        if not len(raw):
            raise StageError("ingest", "no data in input")
        window = (raw.frame["date"].min().date(), raw.frame["date"].max().date())
    grid = ingest.aggregate(raw, window)
    kept = ingest.filter_sparse(grid, min_days=cfg.min_days)
    panel = ingest.standardize(kept)
    paths = list(export.write_panel(panel, out / PANEL))
    paths.append(export.write_table(_summary(kept), out / "panel_summary.csv"))
    notes = [f"dropped {raw.dropped_count} rows outside window",
             f"{kept.N} of {grid.N} series kept at min_days={cfg.min_days}"]
    _stamp_path(out, "synth").unlink(missing_ok=True)
    _write_stamp(out, "ingest", [], _names(paths), notes)
    return paths


def stage_chpca(cfg: RunConfig) -> list[Path]:
    out = cfg.out
    panel_stage = _panel_stage(out)
    real = _load_panel(out)
    panel = hilbert.complexify(real)
    C = chpca.correlation(panel)
    sys = _gauged_system(panel)
    pca = chpca.pca_eigenvalues(real)
    table = pd.DataFrame({
        "rank": np.arange(1, sys.N + 1),
        "lambda": sys.eigenvalues,
        "cumulative": chpca.cumulative_eigenvalues(sys),
        "pca_lambda": pca,
        "pca_cumulative": np.cumsum(pca),
    })
    paths = [export.write_table(table, out / "eigenvalues.csv")]
    paths += export.write_complex_matrix(C.matrix, out / "correlation")
    paths += export.write_complex_matrix(sys.eigenvectors, out / "eigenvectors")
    inputs = _names(export.panel_paths(out / PANEL))
    _write_stamp(out, "chpca", inputs, _names(paths), [f"panel from {panel_stage}"])
    return paths


def stage_rrs(cfg: RunConfig) -> list[Path]:
    out = cfg.out
    require(out, "chpca")
    panel = _complex_panel(out)
    res = significance.rrs_test(panel, cfg.n_sims, cfg.seed, cfg.rule,
                                threads=cfg.n_threads, keep_samples=False)
    paths = [export.write_table(res.table(), out / "rrs_report.csv")]
    modes = [i for i in range(res.significant.size) if res.significant[i]]
    if modes:
        bands = significance.component_bands(panel, modes, cfg.n_trials, cfg.seed + 1,
                                             threads=cfg.n_threads)
        band_table = bands.table()
    else:
        band_table = pd.DataFrame(columns=["mode", "threshold_2sigma", "mean", "sd",
                                           "n_used", "n_discarded", "n_trials"])
    paths.append(export.write_table(band_table, out / "component_bands.csv"))
    notes = []
    if cfg.n_sims < significance.DEFAULT_N_SIMS:
        notes.append(f"reduced simulation count: n_sims={cfg.n_sims} "
                     f"(default {significance.DEFAULT_N_SIMS})")
    inputs = _names(export.panel_paths(out / PANEL)) + ["eigenvalues.csv"]
    _write_stamp(out, "rrs", inputs, _names(paths), notes)
    return paths


def stage_hodge(cfg: RunConfig) -> list[Path]:
    out = cfg.out
    require(out, "chpca")
    real = _load_panel(out)
    C = export.read_complex_matrix(out / "correlation")
    rho, theta = hodge.polar(C)
    if cfg.rho_star is not None:
        rho_star, source = cfg.rho_star, "override"
    else:
        rho_star = hodge.select_threshold(rho, theta, cfg.allowed_isolates)
        source = "selected"
    net = hodge.build_network(rho, theta, rho_star, real.labels)
    result = hodge.hodge_decompose(net)
    edges = pd.DataFrame(net.edges, columns=["tail", "head", "rho", "theta"])
    summary = pd.DataFrame([{
        "rho_star": rho_star, "rho_star_source": source,
        "allowed_isolates": cfg.allowed_isolates, "nodes": int(net.active.sum()),
        "edges": len(net.edges),
    }])
    paths = [
        export.write_table(summary, out / "network_summary.csv"),
        export.write_table(edges, out / "edges.csv"),
        export.write_table(hodge.potential_report(net, result, cfg.days_scale),
                           out / "potentials.csv"),
        export.write_graphml(net, result, out / "network.graphml"),
        export.write_dot(net, result, out / "network.dot"),
    ]
    inputs = ["correlation.real.csv", "correlation.imag.csv"]
    _write_stamp(out, "hodge", inputs, _names(paths), [f"rho_star={rho_star!r} ({source})"])
    return paths


def _customer_sources(cfg: RunConfig, out: Path):
    events = cfg.customers or cfg.input
    profiles = cfg.profiles
    if events is None and (out / "customers.csv").exists():
        events = out / "customers.csv"
    if profiles is None and (out / "profiles.csv").exists():
        profiles = out / "profiles.csv"
    return events, profiles


def stage_project(cfg: RunConfig) -> list[Path]:
    out = cfg.out
    require(out, "chpca")
    require(out, "rrs")
    real = _load_panel(out)
    events, profiles = _customer_sources(cfg, out)
    if events is None:
        raise StageError("project", "no customer event file (--customers or --input)")
    if not Path(events).exists():
        raise StageError("project", f"customer event file not found: {events}")
    modes = _significant_modes(out)
    if not modes:
        raise StageError("project", "no significant eigenmode to project on")
    sys = _load_system(out, real.labels)
    window = (real.days[0], real.days[-1])
    raw = ingest.load_events(events, window=window, delimiter=cfg.delimiter)
    cp = customer.customer_panel(raw, real.labels, window)
    space = customer.project(customer.customer_complexify(cp), sys, modes)
    paths = [export.write_table(space.table(), out / "customer_coordinates.csv")]
    if profiles is not None:
        table = customer.ProfileTable.from_csv(profiles)
        table.validate()
        products = [p for p in dict.fromkeys(l[0] for l in real.labels)
                    if f"quantity_{p}" in table.data.columns]
        results = []
        for m in modes:
            results.append(customer.regress(space, table, customer.total_quantity_spec(),
                                            m, name=f"X{m + 1}.1"))
            if products:
                results.append(customer.regress(space, table, customer.per_product_spec(products),
                                                m, name=f"X{m + 1}.2"))
        paths.append(export.write_table(customer.regression_table(results),
                                        out / "regression_report.csv"))
    _write_stamp(out, "project", ["eigenvectors.real.csv", "eigenvectors.imag.csv",
                                  "rrs_report.csv"], _names(paths))
    return paths


def stage_report(cfg: RunConfig) -> list[Path]:
    out = cfg.out
    require(out, "chpca")
    require(out, "rrs")
    real = _load_panel(out)
    sys = _load_system(out, real.labels)
    bands = export.read_table(out / "component_bands.csv")
    for old in out.glob("eigenmode_*.csv"):
        old.unlink()
    paths = []
    for m in _significant_modes(out):
        report = chpca.eigenmode_report(sys, real.labels, m)
        row = bands[bands["mode"] == m + 1]
        if len(row):
            report["above_band"] = (report["Abs"] > float(row["threshold_2sigma"].iloc[0])).astype(int)
        paths.append(export.write_table(report, out / f"eigenmode_{m + 1}.csv"))
    paths.append(write_manifest(cfg))
    return paths


# ---------------------------------------------------------------------------
# manifest and full run
# ---------------------------------------------------------------------------

MANIFEST_PARAMS = ("window_start", "window_end", "min_days", "n_sims", "n_trials",
                   "rule", "rho_star", "days_scale", "allowed_isolates", "seed",
                   "synth", "synth_products", "synth_days", "synth_noise",
                   "synth_lead_days", "synth_customers")


def write_manifest(cfg: RunConfig) -> Path:
    """``manifest.json``: every artifact with its SHA-256, the run parameters
    and the stage notes.  Paths and thread count are left out so that the
    manifest depends only on the inputs' content and the seed."""
    out = cfg.out
    artifacts, notes, stages = {}, [], []
    for stamp_file in sorted((out / STAMP_DIR).glob("*.json")):
        stamp = json.loads(stamp_file.read_text())
        stages.append(stamp["stage"])
        artifacts.update(stamp["outputs"])
        notes += [f"{stamp['stage']}: {n}" for n in stamp["notes"]]
    for f in sorted(out.glob("eigenmode_*.csv")):
        artifacts[f.name] = export.sha256(f)
    params = {k: getattr(cfg, k) for k in MANIFEST_PARAMS}
    hodge_summary = out / "network_summary.csv"
    if hodge_summary.exists():
        params["rho_star_used"] = float(export.read_table(hodge_summary)["rho_star"].iloc[0])
    manifest = {
        "artifacts": [{"name": k, "sha256": artifacts[k]} for k in sorted(artifacts)],
        "parameters": params,
        "stages": sorted(stages),
        "notes": sorted(notes),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


STAGES = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "chpca": stage_chpca,
    "rrs": stage_rrs,
    "hodge": stage_hodge,
    "project": stage_project,
    "report": stage_report,
}


def run_pipeline(cfg: RunConfig) -> list[Path]:
    """Every stage in order; the customer stage only when customer data exist."""
    paths = []
    first = "synth" if cfg.synth else "ingest"
    for stage in (first, "chpca", "rrs", "hodge"):
        paths += STAGES[stage](cfg)
    events, _ = _customer_sources(cfg, cfg.out)
    if events is not None and _significant_modes(cfg.out):
        paths += stage_project(cfg)
    paths += stage_report(cfg)
    return paths
