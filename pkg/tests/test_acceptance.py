"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary, or on stdout when this file is run as a script.
"""
import json
import time
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from hilbertpca import chpca, cli, customer, export, hilbert, hodge, ingest, significance, synth

RESULTS: list[str] = []


def record(n, title, ok, detail):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}  {title}: {detail}")
    assert ok, detail


# 1 -------------------------------------------------------------------------

def test_01_hilbert_convention():
    start = time.perf_counter()
    T = 256
    t = np.arange(T)
    errs = [np.abs(hilbert.clockwise_analytic(np.cos(2 * np.pi * k * t / T))
                   - np.exp(-2j * np.pi * k * t / T)).max() for k in (1, 5, 31)]
    elapsed = time.perf_counter() - start
    record(1, "Hilbert convention", max(errs) < 1e-10 and elapsed < 1.0,
           f"max error {max(errs):.1e} (< 1e-10), {elapsed:.3f} s (< 1 s)")


# 2 -------------------------------------------------------------------------

def _pair_theta(t0, noise_sd, seed=0):
    f = synth.Factor((13,), np.array([0.0, t0]), np.ones(2))
    res = synth.generate(synth.SynthSpec(2, ("Q",), 365, (f,), noise_sd, seed=seed))
    _, theta = hodge.polar(chpca.correlation(hilbert.complexify(res.panel)).matrix)
    return theta[1, 0]


def test_02_lag_recovery():
    w = 2 * np.pi * 13 / 365
    clean = [abs(_pair_theta(t0, 0.0) - w * t0) for t0 in (1, 3, 7)]
    noisy = [abs(_pair_theta(t0, 0.5) - w * t0) for t0 in (1, 3, 7)]
    ok = max(clean) < 1e-6 and max(noisy) < 0.05
    record(2, "lag recovery", ok,
           f"noise-free max |dtheta| {max(clean):.1e} (< 1e-6), "
           f"noise sd 0.5 max |dtheta| {max(noisy):.3f} (< 0.05)")


# 3 -------------------------------------------------------------------------

def test_03_spectrum_identities():
    start = time.perf_counter()
    N, T = 65, 365
    rng = np.random.default_rng(0)
    factors = (
        synth.Factor(tuple(range(3, 21)), rng.uniform(-5, 5, N), rng.uniform(0, 1, N), "f1"),
        synth.Factor(tuple(range(20, 60)), rng.uniform(-5, 5, N), rng.uniform(0, 0.6, N), "f2"),
    )
    spec = synth.SynthSpec(13, ingest.VARIABLES, T, factors, 0.7, seed=0)
    panel = hilbert.complexify(ingest.standardize(synth.generate(spec).panel))
    C = chpca.correlation(panel).matrix
    sys = chpca.eigendecompose(C, panel)
    herm = np.abs(C - C.conj().T).max()
    trace = abs(sys.eigenvalues.sum() - N)
    recon = np.abs(sys.eigenvectors @ sys.mode_signals - panel.values).max()
    strength = np.abs((np.abs(sys.mode_signals) ** 2).sum(axis=1) / T - sys.eigenvalues).max()
    elapsed = time.perf_counter() - start
    ok = herm < 1e-12 and trace < 1e-8 and recon < 1e-8 and strength < 1e-8 and elapsed < 5
    record(3, "spectrum identities", ok,
           f"hermiticity {herm:.1e}, |sum lambda - N| {trace:.1e}, reconstruction "
           f"{recon:.1e}, strength {strength:.1e}, N=65 T=365 in {elapsed:.2f} s")


# 4 -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def planted_panel():
    res = synth.generate(synth.single_factor_spec(n_series=20, n_loaded=8, loading=0.8, seed=0))
    return hilbert.complexify(ingest.standardize(res.panel))


def test_04_rrs_calibration(planted_panel):
    start = time.perf_counter()
    noise = hilbert.complexify(ingest.standardize(synth.generate(synth.noise_spec(20, seed=0)).panel))
    null = significance.rrs_test(noise, n_sims=2000, seed=0)
    t_null = time.perf_counter() - start
    start = time.perf_counter()
    planted = significance.rrs_test(planted_panel, n_sims=2000, seed=0)
    t_planted = time.perf_counter() - start
    z1 = planted.z_scores[0]
    ok = (null.n_significant == 0 and planted.n_significant == 1 and z1 > 5
          and max(t_null, t_planted) < 60)
    record(4, "RRS calibration", ok,
           f"noise panel {null.n_significant} significant, planted panel "
           f"{planted.n_significant} significant with z1 {z1:.1f}; "
           f"{t_null:.1f} s / {t_planted:.1f} s at 2000 sims")


# 5 -------------------------------------------------------------------------

def test_05_component_bands(planted_panel):
    band = significance.component_bands(planted_panel, [0], n_trials=100, seed=0)
    mags = np.abs(chpca.eigendecompose(chpca.correlation(planted_panel)).eigenvectors[:, 0])
    level = band.threshold(0)
    loaded, unloaded = mags[:8], mags[8:]
    below = float((unloaded < level).mean())
    ok = bool(np.all(loaded > level)) and below >= 0.8
    record(5, "component bands", ok,
           f"band {level:.3f}; loaded min {loaded.min():.3f}; "
           f"{below:.0%} of unloaded below (>= 80%), {band.discarded[0]} trials discarded")


# 6 -------------------------------------------------------------------------

def _random_connected(rng, n):
    W = np.zeros((n, n))
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = order[i], order[rng.integers(0, i)]
        W[a, b] = W[b, a] = 1.0
    extra = np.triu(rng.random((n, n)) < 0.2, 1)
    return np.maximum(W, extra + extra.T)


def _cycle_flow(rng, n):
    F = np.zeros((n, n))
    W = np.zeros((n, n))
    # a cycle through every node keeps the graph connected, then extra cycles
    sizes = [n] + [int(rng.integers(3, n + 1)) for _ in range(rng.integers(0, 3))]
    for size in sizes:
        cyc = rng.choice(n, size=size, replace=False)
        f = rng.uniform(0.1, 2.0)
        for a, b in zip(cyc, np.roll(cyc, -1)):
            F[a, b] += f
            F[b, a] -= f
            W[a, b] = W[b, a] = 1.0
    return F, W


def _identities(F, W, res):
    grad = res.gradient_flow(W)
    decomposition = np.abs(F - grad - res.loop_flow).max()
    divergence = np.abs(res.loop_flow.sum(axis=1)).max()
    return max(decomposition, divergence)


def test_06_hodge_round_trip():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    pot_err = loop_err = ident = cyc_err = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 31))
        W = _random_connected(rng, n)
        psi = rng.standard_normal(n) * 3
        F = W * (psi[:, None] - psi[None, :])
        res = hodge.hodge_potentials(F, W)
        pot_err = max(pot_err, np.abs(res.potentials - (psi - psi.mean())).max())
        loop_err = max(loop_err, np.abs(res.loop_flow).max())
        ident = max(ident, _identities(F, W, res))
    for _ in range(50):
        n = int(rng.integers(3, 31))
        F, W = _cycle_flow(rng, n)
        res = hodge.hodge_potentials(F, W)
        cyc_err = max(cyc_err, np.abs(res.potentials).max())
        ident = max(ident, _identities(F, W, res))
    elapsed = time.perf_counter() - start
    ok = pot_err < 1e-8 and loop_err < 1e-8 and cyc_err < 1e-8 and ident < 1e-8 and elapsed < 10
    record(6, "Hodge round trip", ok,
           f"potential error {pot_err:.1e}, gradient-case loop {loop_err:.1e}, "
           f"cycle-case |phi| {cyc_err:.1e}, identities {ident:.1e}, {elapsed:.2f} s")


# 7 -------------------------------------------------------------------------

def _toy():
    rho, theta = np.eye(3), np.zeros((3, 3))
    for a, b, r in [(0, 1, 0.9), (1, 2, 0.8), (0, 2, 0.2)]:
        rho[a, b] = rho[b, a] = r
        theta[b, a], theta[a, b] = 0.3, -0.3
    return rho, theta


def _nx_connected(rho, theta, v, k):
    t, h, r, _ = hodge.candidate_edges(rho, theta)
    g = nx.Graph()
    g.add_edges_from((int(a), int(b)) for a, b, x in zip(t, h, r) if x > v)
    return g.number_of_nodes() >= max(2, rho.shape[0] - k) and nx.is_connected(g)


def _random_graph(rng, n=20):
    c = rng.standard_normal((n, 40)) + 1j * rng.standard_normal((n, 40))
    c = c + 1.2 * rng.standard_normal(40) * np.exp(1j * rng.uniform(0, 1.0, (n, 1)))
    c = c @ c.conj().T
    d = np.sqrt(np.diag(c).real)
    return hodge.polar(c / np.outer(d, d))


def test_07_threshold_selection():
    rho, theta = _toy()
    toy = {k: (hodge.select_threshold(rho, theta, k, "scan"),
               hodge.select_threshold(rho, theta, k, "bisect")) for k in (0, 1)}
    toy_ok = all(a == b for a, b in toy.values()) and toy[0][0] == 0.2
    rng = np.random.default_rng(0)
    good = 0
    for _ in range(100):
        rho, theta = _random_graph(rng)
        v = hodge.select_threshold(rho, theta)
        cands = hodge.threshold_candidates(rho, theta)
        higher = cands[cands > v]
        ok = _nx_connected(rho, theta, v, 1)
        if higher.size:
            ok = ok and not _nx_connected(rho, theta, higher[0], 1)
        good += ok
    record(7, "threshold selection", toy_ok and good == 100,
           f"toy scan/bisect {toy[0][0]}/{toy[0][1]} (no isolates), "
           f"{toy[1][0]}/{toy[1][1]} (one isolate); random N=20 graphs {good}/100")


# 8 and 11 --------------------------------------------------------------------

CHAIN = ["--synth", "--synth-products", 6, "--synth-lead-days", 2, "--synth-noise", 0.3,
         "--n-sims", 1000, "--seed", 0]


def _run(out, *extra):
    start = time.perf_counter()
    code = cli.main([str(a) for a in ["run", *CHAIN, *extra, "--out-dir", out]])
    return code, time.perf_counter() - start


@pytest.fixture(scope="module")
def chain_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("chain")
    code, elapsed = _run(out, "--threads", 1)
    return out, code, elapsed


def test_08_end_to_end_ordering(chain_run):
    out, code, elapsed = chain_run
    pot = export.read_table(out / "potentials.csv")
    phi = {(p, v): x for p, v, x in zip(pot["product"], pot["variable"], pot["potential"])}
    products = sorted({p for p, _ in phi})
    ordered = sum(phi[(p, "P")] > phi[(p, "Q")] > phi[(p, "TVAd")] for p in products)
    ok = code == 0 and ordered >= 5 and len(products) == 6 and elapsed < 120
    record(8, "end-to-end ordering", ok,
           f"exit {code}; P > Q > TVAd in {ordered}/6 products (>= 5); {elapsed:.1f} s (< 120 s)")


# 9 -------------------------------------------------------------------------

def test_09_customer_projection(planted_panel):
    sys = chpca.eigendecompose(chpca.correlation(planted_panel), planted_panel)
    T = planted_panel.values.shape[1]
    rng = np.random.default_rng(0)
    s = rng.standard_normal(T) + 1j * rng.standard_normal(T)
    z = np.stack([np.outer(sys.eigenvectors[:, 0], s), np.zeros_like(planted_panel.values)])
    X = customer.project(z, sys, [0, 1]).coordinates
    err1 = abs(X[0, 0] - (abs(s) ** 2).mean())
    ok = err1 < 1e-10 and X[0, 1] < 1e-10 and np.all(X[1] == 0)
    record(9, "customer projection", ok,
           f"|X1 - mean|s|^2| {err1:.1e}, X2 {X[0, 1]:.1e}, zero customer {X[1].tolist()}")


# 10 ------------------------------------------------------------------------

def test_10_ols_oracle():
    names = customer.total_quantity_spec()
    beta = np.array([0.9, 0.016, -0.02, 0.01, 0.004, -0.006, 0.002, 0.0005])
    covered = total = 0
    adj_ok = True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        P = 500
        X = np.column_stack([
            np.ones(P), rng.integers(1, 10, P), rng.integers(0, 2, P), rng.integers(0, 2, P),
            rng.integers(1, 10, P), rng.integers(1, 6, P), rng.poisson(20, P),
            rng.gamma(2.0, 500.0, P)])
        y = X @ beta + 0.1 * rng.standard_normal(P)
        res = customer.ols(y, X, ["Intercept"] + names)
        inside = np.abs(res.coefficients.to_numpy() - beta) <= 2 * res.std_errors.to_numpy()
        covered += int(inside.sum())
        total += inside.size
        adj_ok &= res.adj_r2 <= res.r2
    share = covered / total
    record(10, "OLS oracle", share >= 0.95 and adj_ok,
           f"{share:.1%} of {total} coefficients within 2 s.e. (>= 95%), adj R2 <= R2: {adj_ok}")


# 11 ------------------------------------------------------------------------

def _max_artifact_diff(a: Path, b: Path) -> float:
    ma = json.loads((a / "manifest.json").read_text())
    worst = 0.0
    for art in ma["artifacts"]:
        name = art["name"]
        if not name.endswith(".csv"):
            same = (a / name).read_bytes() == (b / name).read_bytes()
            worst = max(worst, 0.0 if same else np.inf)
            continue
        ta, tb = export.read_table(a / name), export.read_table(b / name)
        if list(ta.columns) != list(tb.columns) or len(ta) != len(tb):
            return np.inf
        for col in ta.columns:
            if ta[col].dtype.kind in "fiu":
                d = np.abs(ta[col].to_numpy(float) - tb[col].to_numpy(float))
                worst = max(worst, float(np.nanmax(d, initial=0.0)))
            elif ta[col].tolist() != tb[col].tolist():
                return np.inf
    return worst


def test_11_determinism(chain_run, tmp_path):
    first, code1, _ = chain_run
    code2, _ = _run(tmp_path / "again", "--threads", 1)
    code3, _ = _run(tmp_path / "threads8", "--threads", 8)
    identical = ((first / "manifest.json").read_bytes()
                 == (tmp_path / "again" / "manifest.json").read_bytes())
    diff = _max_artifact_diff(first, tmp_path / "threads8")
    ok = code1 == code2 == code3 == 0 and identical and diff <= 1e-10
    record(11, "determinism", ok,
           f"manifests byte-identical: {identical}; threads 1 vs 8 max difference {diff:.1e}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
