"""File formats: panels, complex matrices, tables and network exports.

Every float is written with 17 significant digits so that files round-trip
exactly.
"""
from __future__ import annotations

import hashlib
import math
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd

from .hodge import HodgeResult, SyncNetwork
from .ingest import PanelSeries

FLOAT_FORMAT = "%.17g"


def write_table(df: pd.DataFrame, path, sep: str = ",") -> Path:
    path = Path(path)
    df.to_csv(path, index=False, sep=sep, float_format=FLOAT_FORMAT,
              lineterminator="\n")
    return path


def read_table(path, sep: str = ",") -> pd.DataFrame:
    return pd.read_csv(path, sep=sep, keep_default_na=False, na_values=["nan", "NaN", ""],
                       float_precision="round_trip")


def write_matrix(a: np.ndarray, path) -> Path:
    """Dense real matrix, one row per line, no header."""
    path = Path(path)
    np.savetxt(path, np.atleast_2d(a), delimiter=",", fmt=FLOAT_FORMAT)
    return path


def read_matrix(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))


def write_complex_matrix(a: np.ndarray, stem) -> tuple[Path, Path]:
    """Write ``<stem>.real.csv`` and ``<stem>.imag.csv``."""
    stem = Path(stem)
    return (write_matrix(np.real(a), stem.with_name(stem.name + ".real.csv")),
            write_matrix(np.imag(a), stem.with_name(stem.name + ".imag.csv")))


def read_complex_matrix(stem) -> np.ndarray:
    stem = Path(stem)
    return (read_matrix(stem.with_name(stem.name + ".real.csv"))
            + 1j * read_matrix(stem.with_name(stem.name + ".imag.csv")))


def panel_paths(stem) -> tuple[Path, Path]:
    stem = Path(stem)
    return (stem.with_name(stem.name + ".labels.csv"),
            stem.with_name(stem.name + ".values.csv"))


def write_panel(panel: PanelSeries, stem) -> tuple[Path, Path]:
    """Persist a panel as a labels file and a matrix file.

    ``<stem>.labels.csv`` has columns ``index,product,variable,entry_days``;
    its row order defines the series index used everywhere downstream.
    ``<stem>.values.csv`` has a header ``index,<ISO day>,...`` and one row per
    series.
    """
    lab_path, val_path = panel_paths(stem)
    entry = (panel.entry_days if panel.entry_days is not None
             else (panel.values != 0).sum(axis=1))
    labels = pd.DataFrame({
        "index": np.arange(panel.N),
        "product": [l[0] for l in panel.labels],
        "variable": [l[1] for l in panel.labels],
        "entry_days": np.asarray(entry, dtype=int),
    })
    write_table(labels, lab_path)
    values = pd.DataFrame(panel.values, columns=[str(d) for d in panel.days])
    values.insert(0, "index", np.arange(panel.N))
    write_table(values, val_path)
    return lab_path, val_path


def read_panel(stem) -> PanelSeries:
    lab_path, val_path = panel_paths(stem)
    labels = pd.read_csv(lab_path, dtype={"product": str, "variable": str},
                         keep_default_na=False)
    values = pd.read_csv(val_path, float_precision="round_trip")
    if list(values["index"]) != list(labels["index"]):
        raise ValueError(f"{val_path}: row order does not match {lab_path}")
    days = np.array(values.columns[1:], dtype="datetime64[D]")
    return PanelSeries(list(zip(labels["product"], labels["variable"])),
                       values.iloc[:, 1:].to_numpy(float), days,
                       labels["entry_days"].to_numpy(int))


def to_networkx(net: SyncNetwork, hodge: HodgeResult | None = None) -> nx.DiGraph:
    g = nx.DiGraph()
    for i, (product, variable) in enumerate(net.labels):
        pot = float("nan") if hodge is None else float(hodge.potentials[i])
        g.add_node(str(i), product=str(product), variable=str(variable),
                   potential=pot)
    for a, b, rho, theta in net.edges:
        g.add_edge(str(a), str(b), rho=rho, theta=theta, flow=rho)
    return g


def write_graphml(net: SyncNetwork, hodge: HodgeResult | None, path) -> Path:
    path = Path(path)
    nx.write_graphml(to_networkx(net, hodge), path)
    return path


def _dot_num(x: float) -> str:
    return "nan" if math.isnan(x) else FLOAT_FORMAT % x


def _dot_str(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_dot(net: SyncNetwork, hodge: HodgeResult | None, path) -> Path:
    path = Path(path)
    lines = ["digraph sync {"]
    for i, (product, variable) in enumerate(net.labels):
        pot = float("nan") if hodge is None else float(hodge.potentials[i])
        lines.append(
            f"  {i} [label={_dot_str(f'{product} {variable}')}, "
            f"product={_dot_str(product)}, variable={_dot_str(variable)}, "
            f"potential={_dot_str(_dot_num(pot))}];")
    for a, b, rho, theta in net.edges:
        lines.append(f"  {a} -> {b} [rho={_dot_str(_dot_num(rho))}, "
                     f"theta={_dot_str(_dot_num(theta))}, "
                     f"flow={_dot_str(_dot_num(rho))}];")
    lines.append("}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
