"""Synthetic market panels with planted lead/lag structure.

A factor is a sum of cosines at a set of frequencies with random phases.
Series ``a`` sees factor ``f`` delayed by ``lag[a]`` days and scaled by
``loading[a]``::

    x_a(t) = sum_f loading_f[a] * factor_f(t - lag_f[a]) + noise

so a larger lag means the series follows.  For two series sharing a single
factor the complex correlation has phase
``arg sum_k exp(i w_k (lag_a - lag_b))``, which for one frequency is
``w (lag_a - lag_b)``.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ingest import PanelSeries, VARIABLES


@dataclass(frozen=True)
class Factor:
    """Frequencies in cycles per panel length; per-series lags and loadings."""

    frequencies: tuple
    lags: np.ndarray
    loadings: np.ndarray
    name: str = "factor"


@dataclass(frozen=True)
class SynthSpec:
    n_products: int
    variables: tuple = ("P", "Q", "TVAd")
    T: int = 365
    factors: tuple = ()
    noise_sd: float = 0.3
    firms: tuple | None = None
    seed: int = 0
    integer_frequencies: bool = True
    start: str = "2013-04-01"

    @property
    def N(self) -> int:
        return self.n_products * len(self.variables)

    def validate(self):
        if self.T < 64:
            raise ValueError("T must be at least 64")
        if self.firms is not None and len(self.firms) != self.n_products:
            raise ValueError("one firm per product is required")
        for f in self.factors:
            lags = np.asarray(f.lags, float)
            load = np.asarray(f.loadings, float)
            if lags.shape != (self.N,) or load.shape != (self.N,):
                raise ValueError(f"{f.name}: lags and loadings need {self.N} entries")
            if np.any(np.abs(lags) >= self.T / 4):
                raise ValueError(f"{f.name}: lags must lie in (-T/4, T/4)")
            if np.any((load < 0) | (load > 1)):
                raise ValueError(f"{f.name}: loadings must lie in [0, 1]")
            freqs = np.asarray(f.frequencies, float)
            if freqs.size == 0 or np.any(freqs <= 0) or np.any(freqs >= self.T / 2):
                raise ValueError(f"{f.name}: frequencies must lie in (0, T/2)")
            if self.integer_frequencies and np.any(freqs != np.round(freqs)):
                raise ValueError(f"{f.name}: non-integer frequency; "
                                 "set integer_frequencies=False")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")


@dataclass
class SynthResult:
    panel: PanelSeries
    truth: pd.DataFrame
    expected_theta: np.ndarray = field(repr=False)
    spec: SynthSpec = field(repr=False, default=None)


def product_codes(n_products: int, firms=None) -> list[str]:
    """Codes ``<firm letter><running number>``, e.g. A1, A2, B1."""
    if firms is None:
        firms = ["A"] * n_products
    seen: dict[str, int] = {}
    codes = []
    for f in firms:
        seen[f] = seen.get(f, 0) + 1
        codes.append(f"{f}{seen[f]}")
    return codes


def expected_phase(freqs, lag_a, lag_b, T) -> float:
    w = 2 * np.pi * np.asarray(freqs, float) / T
    return float(np.angle(np.exp(1j * w * (lag_a - lag_b)).sum()))


def generate(spec: SynthSpec) -> SynthResult:
    """Draw a panel (unstandardized) plus its ground truth."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    T, N = spec.T, spec.N
    t = np.arange(T, dtype=float)
    x = np.zeros((N, T))
    for f in spec.factors:
        freqs = np.asarray(f.frequencies, float)
        w = 2 * np.pi * freqs / T
        phases = rng.uniform(0, 2 * np.pi, freqs.size)
        amp = np.sqrt(2.0 / freqs.size)
        lags = np.asarray(f.lags, float)
        load = np.asarray(f.loadings, float)
        arg = w[None, :, None] * (t[None, None, :] - lags[:, None, None]) + phases[None, :, None]
        x += load[:, None] * amp * np.cos(arg).sum(axis=1)
    x += spec.noise_sd * rng.standard_normal((N, T))

    codes = product_codes(spec.n_products, spec.firms)
    firms = spec.firms or ("A",) * spec.n_products
    labels = [(c, v) for c in codes for v in spec.variables]
    days = np.arange(np.datetime64(spec.start, "D"), np.datetime64(spec.start, "D") + T)
    panel = PanelSeries(labels, x, days, np.full(N, T))

    truth = pd.DataFrame({
        "index": np.arange(N),
        "product": [l[0] for l in labels],
        "variable": [l[1] for l in labels],
        "firm": [firms[i // len(spec.variables)] for i in range(N)],
    })
    for f in spec.factors:
        truth[f"{f.name}_lag"] = np.asarray(f.lags, float)
        truth[f"{f.name}_loading"] = np.asarray(f.loadings, float)

    theta = np.full((N, N), np.nan)
    member = np.array([np.asarray(f.loadings) > 0 for f in spec.factors], dtype=bool).reshape(len(spec.factors), N)
    for a in range(N):
        for b in range(N):
            shared = np.flatnonzero(member[:, a] & member[:, b])
            if a != b and shared.size == 1 and member[:, a].sum() == 1 and member[:, b].sum() == 1:
                f = spec.factors[shared[0]]
                theta[a, b] = expected_phase(f.frequencies, f.lags[a], f.lags[b], T)
    return SynthResult(panel, truth, theta, spec)


# ---------------------------------------------------------------------------
# ready-made specs
# ---------------------------------------------------------------------------

def chain_spec(n_products: int = 6, lead_days: float = 2.0, noise_sd: float = 0.3,
               seed: int = 0, T: int = 365, frequencies=tuple(range(3, 21)),
               loading: float = 0.9, firms=None) -> SynthSpec:
    """Price leads quantity by ``lead_days``, quantity leads TV exposure by the
    same amount, for every product, all driven by one market factor."""
    variables = ("P", "Q", "TVAd")
    step = {"P": 0.0, "Q": lead_days, "TVAd": 2 * lead_days}
    lags = np.array([step[v] for _ in range(n_products) for v in variables])
    f = Factor(tuple(frequencies), lags, np.full(lags.size, loading), "market")
    if firms is None:
        firms = tuple(string.ascii_uppercase[i % 3] for i in range(n_products))
    return SynthSpec(n_products, variables, T, (f,), noise_sd, tuple(firms), seed)


def single_factor_spec(n_series: int = 20, n_loaded: int = 8, loading: float = 0.8,
                       T: int = 365, seed: int = 0, noise_sd: float = 0.6,
                       frequencies=tuple(range(2, 60)), max_lag: float = 3.0) -> SynthSpec:
    """One broadband factor loading the first ``n_loaded`` of ``n_series``
    quantity series with lags spread over ``[0, max_lag]``; the rest are noise."""
    load = np.zeros(n_series)
    load[:n_loaded] = loading
    lags = np.zeros(n_series)
    lags[:n_loaded] = np.linspace(0, max_lag, n_loaded)
    f = Factor(tuple(frequencies), lags, load, "factor")
    return SynthSpec(n_series, ("Q",), T, (f,), noise_sd,
                     tuple("A" for _ in range(n_series)), seed)


def noise_spec(n_series: int = 20, T: int = 365, seed: int = 0) -> SynthSpec:
    return SynthSpec(n_series, ("Q",), T, (), 1.0, None, seed)


# ---------------------------------------------------------------------------
# customers
# ---------------------------------------------------------------------------

_UNITS = {"Q": 350.0, "Visit": 30.0, "TVAd": 15.0, "Search": 1.0}


def generate_customers(panel: PanelSeries, n_customers: int = 200, seed: int = 0,
                       base_rate: float = 0.08):
    """Per-customer events and profiles consistent with ``panel``.

    Each customer has an activity level; daily event counts for every series
    are Poisson with intensity ``activity * base_rate * exp(0.6 x(t))`` where
    ``x`` is the standardized aggregate row.  Price rows record the unit price
    on purchase days.  Returns ``(events, profiles)`` data frames; events use
    the default event-file columns.
    """
    rng = np.random.default_rng(seed)
    x = panel.values
    x = (x - x.mean(axis=1, keepdims=True)) / x.std(axis=1, keepdims=True)
    activity = rng.lognormal(0.0, 0.5, n_customers)
    idx = {lab: i for i, lab in enumerate(panel.labels)}
    products = list(dict.fromkeys(l[0] for l in panel.labels))
    days = [str(d) for d in panel.days]
    records = []
    qty_by_product = np.zeros((n_customers, len(products)))
    freq = np.zeros(n_customers, int)
    for j, prod in enumerate(products):
        for var in VARIABLES:
            if var == "P" or (prod, var) not in idx:
                continue
            row = x[idx[(prod, var)]]
            lam = activity[:, None] * base_rate * np.exp(0.6 * row)[None, :]
            counts = rng.poisson(lam)
            for p, t in zip(*np.nonzero(counts)):
                records.append((f"c{p:05d}", prod, f"{prod}-350", var, days[t],
                                counts[p, t] * _UNITS[var]))
                if var == "Q":
                    if (prod, "P") in idx:
                        price = 0.3 * np.exp(0.02 * x[idx[(prod, "P")], t])
                        records.append((f"c{p:05d}", prod, f"{prod}-350", "P",
                                        days[t], round(float(price), 6)))
                    qty_by_product[p, j] += counts[p, t] * _UNITS[var]
                    freq[p] += 1
    events = pd.DataFrame(records, columns=["customer_id", "product_code", "sku_code",
                                            "variable", "date", "value"])
    events = events.sort_values(["customer_id", "date", "product_code", "variable"],
                                kind="stable").reset_index(drop=True)
    profiles = pd.DataFrame({
        "customer_id": [f"c{p:05d}" for p in range(n_customers)],
        "age": rng.integers(1, 10, n_customers),
        "gender": rng.integers(0, 2, n_customers),
        "marital": rng.integers(0, 2, n_customers),
        "personal_income": rng.integers(1, 10, n_customers),
        "household_income": rng.integers(1, 6, n_customers),
        "total_frequency": freq,
        "total_quantity": qty_by_product.sum(axis=1),
    })
    for j, prod in enumerate(products):
        profiles[f"quantity_{prod}"] = qty_by_product[:, j]
    return events, profiles
