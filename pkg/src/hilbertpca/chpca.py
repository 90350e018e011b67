"""Complex correlation matrix, its eigenmodes and mode signals."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import pandas as pd

from .hilbert import ComplexPanel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComplexCorrelation:
    matrix: np.ndarray

    @property
    def N(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Eigenmodes of a complex correlation matrix.

    ``eigenvectors[:, n]`` is mode ``n`` (0-based, eigenvalues descending) and
    ``mode_signals[n]`` its signal, so that ``z = eigenvectors @ mode_signals``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mode_signals: np.ndarray
    price_indices: tuple[int, ...] = ()

    @property
    def N(self) -> int:
        return self.eigenvalues.size


def _values(panel) -> np.ndarray:
    if isinstance(panel, ComplexPanel):
        return panel.values
    z = np.asarray(panel)
    if z.ndim != 2:
        raise ValueError("expected an N x T array of rows of equal length")
    return z


def correlation(panel: ComplexPanel | np.ndarray) -> ComplexCorrelation:
    """``C[a, b] = (1/T) sum_t z_a(t) conj(z_b(t))``, Hermitian by construction."""
    z = _values(panel)
    T = z.shape[1]
    c = z @ z.conj().T / T
    c = 0.5 * (c + c.conj().T)
    return ComplexCorrelation(c)


def eigendecompose(C: ComplexCorrelation | np.ndarray, panel=None) -> EigenSystem:
    """Hermitian eigendecomposition sorted by descending eigenvalue.

    Mode signals are ``s_n(t) = sum_a conj(e_n[a]) z_a(t)``; they are empty
    (shape ``(N, 0)``) when no panel is given.
    """
    c = C.matrix if isinstance(C, ComplexCorrelation) else np.asarray(C)
    try:
        w, v = np.linalg.eigh(c)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigen-solver failure: {exc}") from exc
    order = np.argsort(w)[::-1]
    w = np.maximum(w[order], 0.0)
    v = v[:, order]
    if panel is None:
        s = np.zeros((w.size, 0), dtype=complex)
    else:
        s = v.conj().T @ _values(panel)
    return EigenSystem(w, v, s)


def cumulative_eigenvalues(sys: EigenSystem | np.ndarray) -> np.ndarray:
    lam = sys.eigenvalues if isinstance(sys, EigenSystem) else np.asarray(sys)
    return np.cumsum(lam)


def pca_eigenvalues(x) -> np.ndarray:
    """Eigenvalues (descending) of the ordinary correlation matrix of real rows."""
    x = np.asarray(getattr(x, "values", x), dtype=float)
    x = x - x.mean(axis=1, keepdims=True)
    x = x / np.sqrt((x ** 2).mean(axis=1, keepdims=True))
    c = x @ x.T / x.shape[1]
    return np.maximum(np.linalg.eigvalsh(c)[::-1], 0.0)


def fix_gauge(sys: EigenSystem, quantity_indices: Sequence[int],
              price_indices: Sequence[int] = (), modes=None) -> EigenSystem:
    """Rotate each eigenvector so its quantity components have mean phase 0.

    The mean phase is the argument of the plain sum of the quantity
    components, i.e. of their unit phasors weighted by magnitude.  Mode
    signals are counter-rotated so the expansion of the panel is unchanged.
    ``price_indices`` are only remembered for reporting, where price phases
    are shown shifted by pi.
    """
    q = list(quantity_indices)
    if not q:
        raise ValueError("quantity_indices must not be empty")
    v = sys.eigenvectors.copy()
    s = sys.mode_signals.copy()
    modes = range(sys.N) if modes is None else modes
    for n in modes:
        total = v[q, n].sum()
        if abs(total) < 1e-12:
            warnings.warn(f"mode {n}: quantity components vanish, gauge left "
                          "unchanged", RuntimeWarning, stacklevel=2)
            continue
        u = np.exp(-1j * np.angle(total))
        v[:, n] *= u
        if s.size:
            s[n] *= np.conj(u)
    return replace(sys, eigenvectors=v, mode_signals=s,
                   price_indices=tuple(int(i) for i in price_indices))


def component_phases(sys: EigenSystem, mode: int, flip_price: bool = True) -> np.ndarray:
    """Display phases in [0, 2pi) of one mode, price components shifted by pi."""
    e = sys.eigenvectors[:, mode].copy()
    if flip_price and sys.price_indices:
        e[list(sys.price_indices)] *= -1.0
    return np.mod(np.angle(e), 2 * np.pi)


def eigenmode_report(sys: EigenSystem, labels, mode: int, threshold=None,
                     flip_price: bool = True) -> pd.DataFrame:
    """Brand / Variable / Phase / Abs table of one mode, grouped by brand.

    With ``threshold`` only components whose magnitude exceeds it are kept.
    Within each brand rows are ordered by phase.
    """
    phase = component_phases(sys, mode, flip_price)
    mag = np.abs(sys.eigenvectors[:, mode])
    df = pd.DataFrame({
        "Brand": [l[0] for l in labels],
        "Variable": [l[1] for l in labels],
        "Phase": phase,
        "Abs": mag,
    })
    if threshold is not None:
        df = df[df["Abs"] > threshold]
    return df.sort_values(["Brand", "Phase"], kind="stable").reset_index(drop=True)
