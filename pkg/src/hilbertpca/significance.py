"""Significance of eigenmodes.

Eigenvalues are tested with the rotational random simulation: every real
series is cyclically shifted by an independent random offset, which keeps
its autocorrelation but destroys the cross-correlations, and the spectrum is
recomputed.  Eigenvector components are tested by appending a pure-noise
series to the panel and recording the size of its component in each mode.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .chpca import correlation, eigendecompose
from .hilbert import ComplexPanel, complexify_rows, standardize_complex, clockwise_analytic

log = logging.getLogger(__name__)

DEFAULT_N_SIMS = 10_000
DEFAULT_N_TRIALS = 100
QUANTILES = (0.023, 0.5, 0.977)


def rotate_rows(x: np.ndarray, offsets) -> np.ndarray:
    """Cyclically shift row ``i`` of ``x`` forward by ``offsets[i]``."""
    x = np.asarray(x)
    T = x.shape[1]
    idx = (np.arange(T)[None, :] - np.asarray(offsets)[:, None]) % T
    return np.take_along_axis(x, idx, axis=1)


def rotated_spectrum(source: np.ndarray, offsets) -> np.ndarray:
    """Descending eigenvalues of the panel after rotating its real rows."""
    _, z = complexify_rows(rotate_rows(source, offsets))
    c = z @ z.conj().T / z.shape[1]
    return np.linalg.eigvalsh(0.5 * (c + c.conj().T))[::-1]


def _run_parallel(fn, n_items: int, threads: int) -> list:
    threads = max(1, int(threads or 1))
    if threads == 1 or n_items < 2:
        return [fn(i) for i in range(n_items)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_items)))


@dataclass
class RrsResult:
    """Outcome of the rotational random simulation, one entry per rank."""

    eigenvalues: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    quantiles: np.ndarray
    significant: np.ndarray
    n_sims: int
    seed: int
    rule: str = "sigma"
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def z_scores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.eigenvalues - self.mean) / self.sd

    @property
    def n_significant(self) -> int:
        return int(self.significant.sum())

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({
            "rank": np.arange(1, self.eigenvalues.size + 1),
            "lambda": self.eigenvalues,
            "mean": self.mean,
            "sd": self.sd,
            "z": self.z_scores,
            "significant": self.significant.astype(int),
            "n_sims": self.n_sims,
        })


def significance_flags(eigenvalues, samples, rule: str = "sigma") -> np.ndarray:
    """Significant ranks, contiguous from the top.

    ``rule="sigma"`` flags ``lambda > mean + 2 sd``; ``rule="quantile"`` flags
    ``lambda`` above the 97.7th percentile of the simulated values.  Ranks
    after the first failure are never flagged.
    """
    eigenvalues = np.asarray(eigenvalues)
    if rule == "sigma":
        raw = eigenvalues > samples.mean(axis=0) + 2 * samples.std(axis=0, ddof=1)
    elif rule == "quantile":
        raw = eigenvalues > np.quantile(samples, 0.977, axis=0)
    else:
        raise ValueError(f"unknown significance rule {rule!r}")
    return np.logical_and.accumulate(raw)


def rrs_test(panel: ComplexPanel, n_sims: int = DEFAULT_N_SIMS, seed: int = 0,
             rule: str = "sigma", threads: int = 1,
             keep_samples: bool = True) -> RrsResult:
    """Rotational random simulation for the spectrum of ``panel``.

    Each simulation draws one uniform offset in ``[0, T)`` per series from
    its own child of ``SeedSequence(seed)``, so results do not depend on
    ``threads``.
    """
    if n_sims < 100:
        raise ValueError("n_sims must be >= 100")
    source = panel.source
    N, T = source.shape
    if T < 4:
        raise ValueError("series too short for rotation")
    actual = eigendecompose(correlation(panel)).eigenvalues
    children = np.random.SeedSequence(seed).spawn(n_sims)

    def one(i):
        offsets = np.random.default_rng(children[i]).integers(0, T, size=N)
        return rotated_spectrum(source, offsets)

    samples = np.array(_run_parallel(one, n_sims, threads))
    return RrsResult(
        eigenvalues=actual,
        mean=samples.mean(axis=0),
        sd=samples.std(axis=0, ddof=1),
        quantiles=np.quantile(samples, QUANTILES, axis=0),
        significant=significance_flags(actual, samples, rule),
        n_sims=n_sims,
        seed=seed,
        rule=rule,
        samples=samples if keep_samples else None,
    )


@dataclass
class ComponentBand:
    """Noise level of eigenvector components, per tracked mode."""

    modes: tuple[int, ...]
    thresholds: dict[int, float]
    magnitudes: dict[int, np.ndarray]
    discarded: dict[int, int]
    n_trials: int
    seed: int

    def threshold(self, mode: int) -> float:
        return self.thresholds[mode]

    def table(self) -> pd.DataFrame:
        rows = []
        for n in self.modes:
            m = self.magnitudes[n]
            rows.append({"mode": n + 1, "threshold_2sigma": self.thresholds[n],
                         "mean": m.mean(), "sd": m.std(ddof=1),
                         "n_used": m.size, "n_discarded": self.discarded[n],
                         "n_trials": self.n_trials})
        return pd.DataFrame(rows)


def component_bands(panel: ComplexPanel, modes: Sequence[int],
                    n_trials: int = DEFAULT_N_TRIALS, seed: int = 0,
                    threads: int = 1, min_overlap: float = 0.5) -> ComponentBand:
    """Distribution of the component a pure-noise series gets in each mode.

    In every trial one standard Gaussian series is complexified, appended to
    the panel and the decomposition recomputed.  Modes of the enlarged panel
    are matched to the original ones by the largest overlap on the original
    coordinates; a trial whose best overlap is below ``min_overlap`` is
    discarded for that mode.  The band is ``mean + 2 sd`` of the recorded
    magnitudes.
    """
    if n_trials < 30:
        raise ValueError("n_trials must be >= 30")
    modes = tuple(int(m) for m in modes)
    base = eigendecompose(correlation(panel))
    N, T = panel.values.shape
    if any(m < 0 or m >= N for m in modes):
        raise IndexError(f"mode index out of range for N={N}: {modes}")
    children = np.random.SeedSequence(seed).spawn(n_trials)

    def one(i):
        rng = np.random.default_rng(children[i])
        g = rng.standard_normal(T)
        g = (g - g.mean()) / g.std()
        z_new = standardize_complex(clockwise_analytic(g)[None, :])
        z = np.vstack([panel.values, z_new])
        sys = eigendecompose(correlation(z))
        overlap = np.abs(base.eigenvectors[:, modes].conj().T
                         @ sys.eigenvectors[:N, :])
        best = overlap.argmax(axis=1)
        out = []
        for k in range(len(modes)):
            if overlap[k, best[k]] < min_overlap:
                out.append(np.nan)
            else:
                out.append(abs(sys.eigenvectors[N, best[k]]))
        return out

    recorded = np.array(_run_parallel(one, n_trials, threads)).reshape(n_trials, len(modes))
    thresholds, magnitudes, discarded = {}, {}, {}
    for k, n in enumerate(modes):
        col = recorded[:, k]
        kept = col[~np.isnan(col)]
        discarded[n] = int(n_trials - kept.size)
        if discarded[n] > n_trials / 2:
            raise RuntimeError(f"mode {n}: {discarded[n]} of {n_trials} trials "
                               "could not be matched to the original mode")
        magnitudes[n] = kept
        thresholds[n] = float(kept.mean() + 2 * kept.std(ddof=1))
    return ComponentBand(modes, thresholds, magnitudes, discarded, n_trials, seed)
