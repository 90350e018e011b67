"""Synchronization network and Hodge decomposition of its lead/lag flow.

Pairs whose complex correlation has phase in (0, pi/2) are comoving; with
the clockwise convention ``theta[a, b] > 0`` means ``a`` lags ``b``.  An edge
runs from the leader to the follower and carries the correlation magnitude
as its flow.  The net flow ``F`` is split as ``F = W * (phi_a - phi_b) +
F_loop`` where ``F_loop`` is divergence free and ``phi`` are the Hodge
potentials (larger = further upstream).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .chpca import ComplexCorrelation
from .unionfind import UnionFind

HALF_PI = np.pi / 2


class DisconnectedGraphError(ValueError):
    def __init__(self, components):
        self.components = components
        super().__init__(f"network is not weakly connected; components: {components}")


def polar(C) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude (symmetric) and phase (antisymmetric) of a Hermitian matrix."""
    c = C.matrix if isinstance(C, ComplexCorrelation) else np.asarray(C)
    n = c.shape[0]
    rho = np.abs(c)
    rho = 0.5 * (rho + rho.T)
    np.fill_diagonal(rho, 1.0)
    iu = np.triu_indices(n, 1)
    theta = np.zeros((n, n))
    theta[iu] = np.angle(c[iu])
    theta = theta - theta.T
    return rho, theta


def candidate_edges(rho, theta):
    """Directed comoving pairs ``(tails, heads, rho, theta)``.

    An edge ``a -> b`` exists when ``0 < theta[b, a] < pi/2``, i.e. ``b`` lags
    ``a``; the returned phase is that positive ``theta[b, a]``.
    """
    rho = np.asarray(rho)
    theta = np.asarray(theta)
    heads, tails = np.nonzero((theta > 0) & (theta < HALF_PI))
    return tails, heads, rho[heads, tails], theta[heads, tails]


def _connected(n, tails, heads, allowed_isolates) -> bool:
    """Weakly connected on its non-isolated nodes, which number >= n - k."""
    if len(tails) == 0:
        return False
    uf = UnionFind(n)
    for a, b in zip(tails, heads):
        uf.union(int(a), int(b))
    touched = np.union1d(tails, heads)
    if touched.size < max(2, n - allowed_isolates):
        return False
    root = uf.find(int(touched[0]))
    return all(uf.find(int(m)) == root for m in touched)


def threshold_candidates(rho, theta) -> np.ndarray:
    """Distinct candidate edge magnitudes, ascending, preceded by the largest
    float below the smallest one (the threshold that keeps every edge)."""
    _, _, r, _ = candidate_edges(rho, theta)
    if r.size == 0:
        raise ValueError("no comoving pair with 0 < theta < pi/2")
    vals = np.unique(r)
    return np.concatenate([[np.nextafter(vals[0], -np.inf)], vals])


def connected_at(rho, theta, threshold, allowed_isolates: int = 1) -> bool:
    t, h, r, _ = candidate_edges(rho, theta)
    keep = r > threshold
    return _connected(np.asarray(rho).shape[0], t[keep], h[keep], allowed_isolates)


def select_threshold(rho, theta, allowed_isolates: int = 1,
                     method: str = "bisect") -> float:
    """Largest candidate ``v`` such that the edges with ``rho > v`` connect.

    "Connect" means the undirected graph is connected over its non-isolated
    nodes and leaves at most ``allowed_isolates`` nodes isolated.  With
    ``allowed_isolates <= 1`` connectivity is monotone in the threshold and a
    binary search is used; otherwise, or with ``method="scan"``, every
    candidate is tried from the top.
    """
    n = np.asarray(rho).shape[0]
    t, h, r, _ = candidate_edges(rho, theta)
    cands = threshold_candidates(rho, theta)

    def ok(i):
        keep = r > cands[i]
        return _connected(n, t[keep], h[keep], allowed_isolates)

    if method == "scan" or allowed_isolates > 1:
        for i in range(cands.size - 1, -1, -1):
            if ok(i):
                return float(cands[i])
        raise ValueError("no threshold yields a connected graph")
    if method != "bisect":
        raise ValueError(f"unknown method {method!r}")
    if not ok(0):
        raise ValueError("no threshold yields a connected graph")
    lo, hi = 0, cands.size - 1  # ok(lo) holds; find the last index that does
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid - 1
    return float(cands[lo])


@dataclass
class SyncNetwork:
    """Directed comovement network.

    ``A`` is the binary adjacency (``A[a, b] = 1`` for an edge a -> b), ``B``
    the flow-weighted one, ``F = B - B.T`` the net flow and ``W = A + A.T``
    the net weight.  ``edges`` lists ``(tail, head, rho, theta)``.
    """

    labels: list
    rho_star: float
    edges: list[tuple[int, int, float, float]]
    A: np.ndarray
    B: np.ndarray
    F: np.ndarray
    W: np.ndarray

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def active(self) -> np.ndarray:
        return self.W.sum(axis=1) > 0


def build_network(rho, theta, rho_star: float, labels=None) -> SyncNetwork:
    """Keep comoving pairs with ``rho > rho_star``; flow runs leader -> follower."""
    rho = np.asarray(rho, dtype=float)
    n = rho.shape[0]
    t, h, r, th = candidate_edges(rho, theta)
    keep = r > rho_star
    if not np.any(keep):
        raise ValueError(f"no edge above rho_star={rho_star}")
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    A[t[keep], h[keep]] = 1.0
    B[t[keep], h[keep]] = r[keep]
    edges = sorted((int(a), int(b), float(x), float(y))
                   for a, b, x, y in zip(t[keep], h[keep], r[keep], th[keep]))
    if labels is None:
        labels = [(str(i), "") for i in range(n)]
    return SyncNetwork(list(labels), float(rho_star), edges, A, B, B - B.T, A + A.T)


@dataclass
class HodgeResult:
    """Potentials (NaN for isolated nodes), loop flow and graph Laplacian."""

    potentials: np.ndarray
    loop_flow: np.ndarray
    laplacian: np.ndarray

    def gradient_flow(self, W) -> np.ndarray:
        phi = np.nan_to_num(self.potentials)
        return np.asarray(W) * (phi[:, None] - phi[None, :])


def hodge_potentials(F, W) -> HodgeResult:
    """Solve ``L phi = sum_b F[:, b]`` on the non-isolated nodes.

    ``L`` is singular with the constants as null space; the minimum-norm
    least-squares solution is taken and shifted to zero mean.
    """
    F = np.asarray(F, dtype=float)
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    L = np.diag(W.sum(axis=1)) - W
    active = np.flatnonzero(W.sum(axis=1) > 0)
    if active.size == 0:
        raise ValueError("network has no edges")
    uf = UnionFind(n)
    for a, b in zip(*np.nonzero(np.triu(W, 1))):
        uf.union(int(a), int(b))
    groups = uf.groups(active.tolist())
    if len(groups) > 1:
        raise DisconnectedGraphError(groups)

    sub = np.ix_(active, active)
    div = F.sum(axis=1)[active]
    phi_active = np.linalg.lstsq(L[sub], div, rcond=None)[0]
    phi_active -= phi_active.mean()
    phi = np.full(n, np.nan)
    phi[active] = phi_active
    grad = W * (np.nan_to_num(phi)[:, None] - np.nan_to_num(phi)[None, :])
    return HodgeResult(phi, F - grad, L)


def hodge_decompose(net: SyncNetwork) -> HodgeResult:
    return hodge_potentials(net.F, net.W)


def potential_report(net: SyncNetwork, hodge: HodgeResult,
                     scale_days_per_unit: float | None = None) -> pd.DataFrame:
    """Nodes sorted by potential, most upstream first; isolated nodes last."""
    df = pd.DataFrame({
        "node": np.arange(net.N),
        "product": [l[0] for l in net.labels],
        "variable": [l[1] for l in net.labels],
        "potential": hodge.potentials,
    })
    if scale_days_per_unit is not None:
        df["days"] = df["potential"] * float(scale_days_per_unit)
    return df.sort_values(["potential", "node"], ascending=[False, True],
                          na_position="last", kind="stable").reset_index(drop=True)
