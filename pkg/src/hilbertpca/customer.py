"""Customer space: per-customer projections on the aggregate eigenmodes and
their regression on customer profiles."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .chpca import EigenSystem
from .hilbert import clockwise_analytic, standardize_complex
from .ingest import VARIABLES, RawEventTable, _daily_grid, window_days


@dataclass(frozen=True)
class CustomerPanel:
    """Real series ``values[p, a, t]`` aligned with the aggregate labels."""

    customer_ids: list[str]
    labels: list[tuple[str, str]]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[0] != len(self.customer_ids) or v.shape[1] != len(self.labels):
            raise ValueError(f"values of shape {v.shape} do not match "
                             f"{len(self.customer_ids)} customers x {len(self.labels)} series")
        object.__setattr__(self, "values", v)

    @property
    def P(self) -> int:
        return self.values.shape[0]


def customer_panel(raw: RawEventTable, labels, window) -> CustomerPanel:
    """Aggregate each customer's events onto the given labels.

    Per-customer price is the unit price paid on purchase days and zero on
    other days; it is not carried forward.
    """
    days = window_days(window)
    frame = raw.frame
    lo, hi = pd.Timestamp(days[0]), pd.Timestamp(days[-1])
    frame = frame[(frame["date"] >= lo) & (frame["date"] <= hi)]
    products = sorted({l[0] for l in labels})
    pos = {(p, v): i for i, (p, v) in enumerate(labels)}
    rows = [pos.get((p, v)) for p in products for v in VARIABLES]
    ids = sorted(frame["customer_id"].unique())
    out = np.zeros((len(ids), len(labels), len(days)))
    for k, (cid, sub) in enumerate(frame.groupby("customer_id", sort=True)):
        grid = _daily_grid(sub, products, days).reshape(-1, len(days))
        for src, dst in enumerate(rows):
            if dst is not None:
                out[k, dst] = grid[src]
    return CustomerPanel([str(i) for i in ids], list(labels), out)


@dataclass
class CustomerSignals:
    """Complexified, standardized customer series and their sparsity."""

    customer_ids: list[str]
    values: np.ndarray
    nonzero_days: np.ndarray


def customer_complexify(cp: CustomerPanel) -> CustomerSignals:
    """Complexify and standardize each (customer, series) row.

    Rows that are identically zero stay zero.  A constant nonzero row cannot be
    standardized and raises ``ValueError`` naming ``(customer, label)``.
    """
    x = cp.values
    raw = clockwise_analytic(x, axis=-1)
    try:
        z = standardize_complex(raw, allow_zero=True)
    except ValueError:
        flat = []
        for p in range(cp.P):
            for a in range(x.shape[1]):
                row = x[p, a]
                if np.any(row != 0) and np.ptp(row) == 0:
                    flat.append((cp.customer_ids[p], cp.labels[a]))
        raise ValueError(f"constant nonzero series cannot be standardized: {flat}")
    return CustomerSignals(list(cp.customer_ids), z, (x != 0).sum(axis=-1))


@dataclass
class CustomerSpace:
    """``coordinates[p, k]`` is the mean squared projection of customer ``p``
    on mode ``modes[k]`` (0-based)."""

    customer_ids: list[str]
    modes: tuple[int, ...]
    coordinates: np.ndarray
    signals: np.ndarray | None = field(default=None, repr=False)

    def table(self) -> pd.DataFrame:
        df = pd.DataFrame(self.coordinates,
                          columns=[f"X{m + 1}" for m in self.modes])
        df.insert(0, "customer_id", self.customer_ids)
        return df


def project(zhat, sys: EigenSystem, modes: Sequence[int],
            keep_signals: bool = False, chunk: int = 256) -> CustomerSpace:
    """Project every customer on the selected modes.

    ``a[n, p](t) = sum_a conj(e_n[a]) zhat[p, a](t)`` and the coordinate is
    ``X[n, p] = mean_t |a[n, p](t)|^2``.  A global phase on an eigenvector
    cancels in the coordinate.
    """
    if isinstance(zhat, CustomerSignals):
        ids, z = zhat.customer_ids, zhat.values
    else:
        z = np.asarray(zhat)
        ids = [str(i) for i in range(z.shape[0])]
    modes = tuple(int(m) for m in modes)
    N = sys.eigenvectors.shape[0]
    if any(m < 0 or m >= N for m in modes):
        raise IndexError(f"mode index out of range for N={N}: {modes}")
    if z.shape[1] != N:
        raise ValueError(f"customer series count {z.shape[1]} != {N}")
    e = sys.eigenvectors[:, list(modes)].conj()
    coords = np.empty((z.shape[0], len(modes)))
    signals = np.empty((z.shape[0], len(modes), z.shape[2]), complex) if keep_signals else None
    for lo in range(0, z.shape[0], chunk):
        a = np.einsum("an,pat->pnt", e, z[lo:lo + chunk])
        coords[lo:lo + chunk] = (np.abs(a) ** 2).mean(axis=-1)
        if keep_signals:
            signals[lo:lo + chunk] = a
    return CustomerSpace(list(ids), modes, coords, signals)


# ---------------------------------------------------------------------------
# profiles and regression
# ---------------------------------------------------------------------------

#: Declared ranges of the profile variables; other columns are unconstrained.
PROFILE_RANGES = {
    "age": (1, 9),
    "gender": (0, 1),
    "marital": (0, 1),
    "personal_income": (1, 9),
    "household_income": (1, 5),
}
BASE_PREDICTORS = ["age", "gender", "marital", "personal_income",
                   "household_income", "total_frequency"]


def total_quantity_spec() -> list[str]:
    """Predictors of the total-quantity model, named X<n>.1 in reports."""
    return BASE_PREDICTORS + ["total_quantity"]


def per_product_spec(products) -> list[str]:
    """Predictors of the per-product-quantity model, named X<n>.2 in reports."""
    return BASE_PREDICTORS + [f"quantity_{p}" for p in products]


class RankDeficientError(ValueError):
    def __init__(self, columns):
        self.columns = columns
        super().__init__(f"design matrix is rank deficient; collinear columns: {columns}")


@dataclass
class ProfileTable:
    """Customer profile covariates indexed by customer id."""

    data: pd.DataFrame

    def __post_init__(self):
        if "customer_id" in self.data.columns:
            self.data = self.data.set_index("customer_id")
        self.data.index = self.data.index.astype(str)

    @classmethod
    def from_csv(cls, path, sep=","):
        return cls(pd.read_csv(path, sep=sep, dtype={"customer_id": str}))

    def validate(self) -> dict[str, list[str]]:
        """Out-of-range values per column; raises if any are found."""
        bad = {}
        for col, (lo, hi) in PROFILE_RANGES.items():
            if col in self.data:
                v = self.data[col]
                out = v.notna() & ((v < lo) | (v > hi))
                if out.any():
                    bad[col] = list(self.data.index[out])
        if bad:
            raise ValueError(f"profile values out of range: {bad}")
        return bad

    def missing(self) -> dict[str, list[str]]:
        """Customers with a missing value, per column."""
        na = self.data.isna()
        return {c: list(self.data.index[na[c]]) for c in self.data.columns if na[c].any()}


def stars(p: float) -> str:
    """Significance marks: aa p<.001, a p<.01, b p<.05, c p<.10."""
    if p < 0.001:
        return "aa"
    if p < 0.01:
        return "a"
    if p < 0.05:
        return "b"
    if p < 0.10:
        return "c"
    return ""


@dataclass
class RegressionResult:
    name: str
    coefficients: pd.Series
    std_errors: pd.Series
    t_values: pd.Series
    p_values: pd.Series
    r2: float
    adj_r2: float
    n_obs: int
    residuals: np.ndarray = field(repr=False, default=None)

    @property
    def stars(self) -> pd.Series:
        return self.p_values.map(stars)

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({"variable": self.coefficients.index,
                             "coef": self.coefficients.values,
                             "se": self.std_errors.values,
                             "star": self.stars.values})


def _collinear_columns(X: np.ndarray, names) -> list[str]:
    rank = np.linalg.matrix_rank(X)
    out = []
    for j in range(X.shape[1]):
        if np.linalg.matrix_rank(np.delete(X, j, axis=1)) == rank:
            out.append(names[j])
    return out


def ols(y, X, names, name: str = "model") -> RegressionResult:
    """OLS with classical standard errors; ``X`` must include the intercept."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    if n <= k:
        raise ValueError(f"need more observations ({n}) than parameters ({k})")
    if np.linalg.matrix_rank(X) < k:
        raise RankDeficientError(_collinear_columns(X, names))
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = n - k
    sigma2 = resid @ resid / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = np.sqrt(np.diag(cov))
    t = beta / se
    p = 2 * stats.t.sf(np.abs(t), dof)
    tss = ((y - y.mean()) ** 2).sum()
    r2 = 1 - (resid @ resid) / tss
    adj = 1 - (1 - r2) * (n - 1) / dof
    idx = pd.Index(names)
    return RegressionResult(name, pd.Series(beta, idx), pd.Series(se, idx),
                            pd.Series(t, idx), pd.Series(p, idx),
                            float(r2), float(adj), n, resid)


def regress(space: CustomerSpace, profiles: ProfileTable, model_spec: Sequence[str],
            mode: int = 0, standardize: bool = False, name: str | None = None) -> RegressionResult:
    """Regress one customer-space coordinate on profile covariates.

    ``mode`` is the 0-based eigenmode whose coordinate is the criterion.
    Customers without a profile are skipped; a missing predictor value
    raises rather than being imputed.
    """
    if mode not in space.modes:
        raise IndexError(f"mode {mode} not in customer space modes {space.modes}")
    y = pd.Series(space.coordinates[:, space.modes.index(mode)],
                  index=pd.Index(space.customer_ids, dtype=str))
    cols = list(model_spec)
    missing_cols = [c for c in cols if c not in profiles.data.columns]
    if missing_cols:
        raise KeyError(f"profile columns not found: {missing_cols}")
    common = y.index.intersection(profiles.data.index)
    X = profiles.data.loc[common, cols].astype(float)
    if X.isna().any().any():
        raise ValueError(f"missing predictor values: "
                         f"{ {c: list(X.index[X[c].isna()]) for c in cols if X[c].isna().any()} }")
    if standardize:
        sd = X.std(ddof=0).replace(0, 1.0)
        X = (X - X.mean()) / sd
    design = np.column_stack([np.ones(len(common)), X.to_numpy()])
    return ols(y.loc[common].to_numpy(), design, ["Intercept"] + cols,
               name or f"X{mode + 1}")


def regression_table(results: Sequence[RegressionResult]) -> pd.DataFrame:
    """Side-by-side coefficient / s.e. / star columns, one block per model."""
    variables = []
    for r in results:
        variables += [v for v in r.coefficients.index if v not in variables]
    table = pd.DataFrame({"variable": variables + ["R2", "adj_R2", "n"]})
    for r in results:
        coef = [r.coefficients.get(v, np.nan) for v in variables]
        se = [r.std_errors.get(v, np.nan) for v in variables]
        st = [stars(r.p_values[v]) if v in r.p_values else "" for v in variables]
        table[f"{r.name}_coef"] = coef + [r.r2, r.adj_r2, r.n_obs]
        table[f"{r.name}_se"] = se + [np.nan, np.nan, np.nan]
        table[f"{r.name}_star"] = st + ["", "", ""]
    return table
