"""Hilbert complexification with the clockwise convention.

A real series ``x`` is mapped to ``z = x - i H[x]`` where ``H`` is the
discrete Hilbert transform with ``H[cos] = sin``.  Each tone therefore turns
clockwise on the complex plane: ``cos(wt) -> exp(-iwt)`` and
``sin(wt) -> i exp(-iwt)``.  This is the complex conjugate of the usual
analytic signal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import PanelSeries

CONVENTION = "cos->exp(-iwt)"


def _spectral_mask(T: int) -> np.ndarray:
    h = np.zeros(T)
    h[0] = 1.0
    if T % 2 == 0:
        h[T // 2] = 1.0
        h[T // 2 + 1:] = 2.0
    else:
        h[(T + 1) // 2:] = 2.0
    return h


def clockwise_analytic(x, axis: int = -1) -> np.ndarray:
    """Complexify along ``axis`` without any normalisation.

    DC and (for even length) Nyquist bins are kept as they are, negative
    frequency bins are doubled and positive ones zeroed, so the real part of
    the output equals ``x``.
    """
    x = np.asarray(x, dtype=float)
    T = x.shape[axis]
    shape = [1] * x.ndim
    shape[axis] = T
    spec = np.fft.fft(x, axis=axis)
    return np.fft.ifft(spec * _spectral_mask(T).reshape(shape), axis=axis)


def standardize_complex(z, allow_zero: bool = False) -> np.ndarray:
    """Subtract the complex mean of each row and scale to mean |z|^2 = 1.

    With ``allow_zero`` rows that are identically zero are returned as zeros;
    otherwise, and for any other row of zero spread, a ``ValueError`` is
    raised listing the offending row indices.
    """
    z = np.asarray(z, dtype=complex)
    centred = z - z.mean(axis=-1, keepdims=True)
    sigma = np.sqrt((np.abs(centred) ** 2).mean(axis=-1, keepdims=True))
    zero_rows = ~np.any(z != 0, axis=-1, keepdims=True)
    scale = np.abs(z).max(axis=-1, keepdims=True)
    flat = sigma <= 1e-12 * np.maximum(scale, 1.0)
    bad = flat & ~(zero_rows & allow_zero)
    if np.any(bad):
        where = [tuple(int(i) for i in ix) for ix in np.argwhere(bad[..., 0])]
        raise ValueError(f"rows with zero spread cannot be standardized: {where}")
    out = np.where(flat, 0.0, centred / np.where(flat, 1.0, sigma))
    return out


@dataclass(frozen=True)
class ComplexPanel:
    """Complexified counterpart of a standardized :class:`PanelSeries`.

    ``values`` is the standardized complex panel used downstream, ``raw`` the
    complexified series before the complex re-standardization, and ``source``
    the real rows it was built from (needed by the rotation null model).
    """

    labels: list[tuple[str, str]]
    values: np.ndarray
    raw: np.ndarray
    source: np.ndarray
    days: np.ndarray | None = None
    convention: str = CONVENTION

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]


def complexify_rows(x) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(raw, standardized)`` complex versions of the rows of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] < 4:
        raise ValueError("complexification needs at least 4 time points")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in input series")
    raw = clockwise_analytic(x, axis=-1)
    return raw, standardize_complex(raw)


def complexify(panel: PanelSeries | np.ndarray, labels=None) -> ComplexPanel:
    """Complexify each row of a standardized panel and re-standardize it."""
    if isinstance(panel, PanelSeries):
        x, labels, days = panel.values, panel.labels, panel.days
    else:
        x = np.atleast_2d(np.asarray(panel, dtype=float))
        days = None
        if labels is None:
            labels = [(str(i), "") for i in range(x.shape[0])]
    raw, z = complexify_rows(x)
    return ComplexPanel(list(labels), z, raw, x.copy(), days)
