"""Max-type small-gain composition of sub-barrier certificates.

The pairwise gain from subsystem j into subsystem i is kappa_i on the
diagonal and rho_i / alpha_j off it (linear gains), zero when there is
no connection.  The small-gain condition asks every directed cycle's
slope product to stay below one; it is decided through the minimum
cycle mean of the -log slopes (Karp's algorithm, vectorized), so no
exponential cycle enumeration happens.  Scaling weights come from
shortest-path potentials (Bellman-Ford) on the same log graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .certify import CsbcRecord

_BRUTE_CYCLE_LIMIT = 12


class CompositionError(ValueError):
    """Compositionality conditions cannot be met for these certificates."""


@dataclass(frozen=True)
class GainMatrix:
    """Dense matrix of pairwise gain slopes; entry (i, j) couples
    subsystem j's barrier into subsystem i's drift."""

    slopes: np.ndarray
    ids: tuple

    def __post_init__(self):
        n = len(self.ids)
        if self.slopes.shape != (n, n):
            raise ValueError("gain matrix shape does not match ids")
        if np.any(self.slopes < 0):
            raise ValueError("gain slopes must be nonnegative")
        diag = np.diag(self.slopes)
        if np.any(diag <= 0) or np.any(diag >= 1):
            raise ValueError("diagonal gains must lie in (0, 1)")

    @property
    def n(self) -> int:
        return len(self.ids)

    def edges(self) -> tuple:
        rows, cols = np.nonzero(self.slopes)
        return tuple(zip(rows.tolist(), cols.tolist()))


def gain_matrix(records: Sequence[CsbcRecord], wired_pairs=None) -> GainMatrix:
    """Build the pairwise gain matrix from member certificates.

    wired_pairs lists (receiver, sender) index pairs with a live
    connection; None means fully connected.  Unwired pairs contribute
    zero gain.
    """
    n = len(records)
    slopes = np.zeros((n, n))
    for i, rec in enumerate(records):
        slopes[i, i] = rec.kappa.slope
    if wired_pairs is None:
        wired_pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for i, j in wired_pairs:
        if i == j:
            continue
        alpha_j = records[j].alpha.slope
        if alpha_j <= 0:
            raise CompositionError(f"member {records[j].subsystem_id!r} has zero output gain")
        slopes[i, j] = records[i].rho.slope / alpha_j
    return GainMatrix(slopes=slopes, ids=tuple(r.subsystem_id for r in records))


@dataclass(frozen=True)
class SmallGainResult:
    holds: bool
    worst_cycle: tuple | None = None
    worst_product: float | None = None

    def to_dict(self) -> dict:
        out = {"holds": self.holds}
        if self.worst_cycle is not None:
            out["worst_cycle"] = list(self.worst_cycle)
            out["worst_product"] = self.worst_product
        return out


def _karp_table(n: int, edges: np.ndarray, weights: np.ndarray):
    """Min-weight walk table with a virtual zero-weight source.

    Returns D of shape (n+2, n+1): D[k][v] is the minimum weight of a
    k-edge walk from the virtual source (index n) to v.
    """
    m = n + 1
    src = np.concatenate([edges[:, 0], np.full(n, n)])
    dst = np.concatenate([edges[:, 1], np.arange(n)])
    w = np.concatenate([weights, np.zeros(n)])
    D = np.full((m + 1, m), np.inf)
    D[0][n] = 0.0
    for k in range(1, m + 1):
        nxt = np.full(m, np.inf)
        cand = D[k - 1][src] + w
        np.minimum.at(nxt, dst, cand)
        D[k] = nxt
    return D, (src, dst, w)


def _karp_min_mean(n: int, edges: np.ndarray, weights: np.ndarray):
    """Minimum cycle mean and a witness cycle (node index tuple)."""
    if len(edges) == 0:
        return (math.inf, None)
    D, (src, dst, w) = _karp_table(n, edges, weights)
    m = n + 1
    best_val, best_v = math.inf, None
    finite = np.isfinite(D[m])
    for v in np.flatnonzero(finite[:n]):
        ratios = []
        for k in range(m):
            if np.isfinite(D[k][v]):
                ratios.append((D[m][v] - D[k][v]) / (m - k))
        val = max(ratios)
        if val < best_val:
            best_val, best_v = val, int(v)
    if best_v is None:
        return (math.inf, None)
    # backtrack the m-edge optimal walk ending at best_v; it must contain
    # a cycle, and at least one of its cycles attains a mean <= best_val
    path = [best_v]
    k, v = m, best_v
    incoming: dict = {}
    for idx in range(len(src)):
        incoming.setdefault(int(dst[idx]), []).append(idx)
    while k > 0:
        for idx in incoming.get(v, ()):
            u = int(src[idx])
            if np.isfinite(D[k - 1][u]) and abs(D[k - 1][u] + w[idx] - D[k][v]) <= 1e-9 * max(
                1.0, abs(D[k][v])
            ):
                v = u
                break
        else:
            break
        path.append(v)
        k -= 1
    path.reverse()
    best_cycle, best_cycle_mean = None, math.inf
    seen: dict = {}
    for pos, node in enumerate(path):
        if node in seen and node != n:
            cycle = path[seen[node]:pos]
            wmap = {(int(a), int(b)): float(c) for a, b, c in zip(src, dst, w)}
            total = sum(wmap[(cycle[t], cycle[(t + 1) % len(cycle)])] for t in range(len(cycle)))
            mean = total / len(cycle)
            if mean < best_cycle_mean:
                best_cycle_mean, best_cycle = mean, tuple(cycle)
        seen[node] = pos
    return (best_val, best_cycle)


def _brute_worst_cycle(G: GainMatrix):
    """Exhaustive simple-cycle search for small matrices."""
    n = G.n
    adj = [[j for j in range(n) if G.slopes[i, j] > 0] for i in range(n)]
    best_prod, best_cycle = 0.0, None

    def walk(start, node, product, path, visited):
        nonlocal best_prod, best_cycle
        for nxt in adj[node]:
            if nxt == start and len(path) >= 1:
                p = product * G.slopes[node, nxt]
                if p > best_prod:
                    best_prod, best_cycle = p, tuple(path)
            elif nxt > start and nxt not in visited:
                visited.add(nxt)
                path.append(nxt)
                walk(start, nxt, product * G.slopes[node, nxt], path, visited)
                path.pop()
                visited.remove(nxt)

    for start in range(n):
        walk(start, start, 1.0, [start], {start})
    return best_prod, best_cycle


def small_gain_check(G: GainMatrix) -> SmallGainResult:
    """Decide whether every directed cycle's gain product is below one.

    Fast path: every entry below one is sufficient.  Otherwise the
    minimum cycle mean of -log slopes decides; a nonpositive mean means
    some cycle reaches product >= 1 and the maximizing cycle is
    reported.
    """
    if float(G.slopes.max()) < 1.0:
        return SmallGainResult(holds=True)
    if G.n <= _BRUTE_CYCLE_LIMIT:
        product, cycle = _brute_worst_cycle(G)
        if product >= 1.0:
            return SmallGainResult(holds=False, worst_cycle=_named(G, cycle), worst_product=product)
        return SmallGainResult(holds=True)
    rows, cols = np.nonzero(G.slopes)
    edges = np.stack([rows, cols], axis=1)
    weights = -np.log(G.slopes[rows, cols])
    mean, cycle = _karp_min_mean(G.n, edges, weights)
    if mean > 0.0:
        return SmallGainResult(holds=True)
    if cycle is None:
        return SmallGainResult(holds=False)
    product = float(
        np.prod([G.slopes[cycle[t], cycle[(t + 1) % len(cycle)]] for t in range(len(cycle))])
    )
    return SmallGainResult(holds=False, worst_cycle=_named(G, cycle), worst_product=product)


def _named(G: GainMatrix, cycle):
    if cycle is None:
        return None
    return tuple(G.ids[i] for i in cycle)


def solve_scaling(G: GainMatrix) -> np.ndarray:
    """Positive weights lambda with max over wired pairs of
    slope * lambda_j / lambda_i below one.

    Identity weights when every slope is already below one; otherwise
    shortest-path potentials on -log slopes with half the minimum
    cycle mean as margin.
    """
    n = G.n
    if float(G.slopes.max()) < 1.0:
        return np.ones(n)
    check = small_gain_check(G)
    if not check.holds:
        raise CompositionError("small-gain condition violated; no scaling exists")
    rows, cols = np.nonzero(G.slopes)
    edges = np.stack([rows, cols], axis=1)
    weights = -np.log(G.slopes[rows, cols])
    mean, _ = _karp_min_mean(n, edges, weights)
    margin = 0.5 * mean
    dist = np.zeros(n)
    for _ in range(n):
        cand = dist[rows] + weights - margin
        nxt = dist.copy()
        np.minimum.at(nxt, cols, cand)
        if np.allclose(nxt, dist, rtol=0, atol=0):
            break
        dist = nxt
    lambdas = np.exp(dist)
    lambdas /= lambdas.max()
    scaled = G.slopes[rows, cols] * lambdas[cols] / lambdas[rows]
    if scaled.max() >= 1.0:
        raise AssertionError("scaling failed despite a valid small-gain certificate")
    return lambdas


@dataclass(frozen=True)
class CbcRecord:
    """Composite max-form certificate for the interconnection.

    The composite barrier is max_i members[i].barrier / lambdas[i];
    constants are the correspondingly scaled maxima, and kappa_hat is
    the largest scaled pairwise gain.
    """

    members: tuple
    lambdas: np.ndarray
    eta: float
    beta: float
    c: float
    kappa_hat: float
    gain: GainMatrix

    def evaluate(self, state: Mapping[str, float]) -> float:
        return max(
            rec.barrier(state) / lam for rec, lam in zip(self.members, self.lambdas)
        )

    def member_for(self, sid: str) -> CsbcRecord:
        for rec in self.members:
            if rec.subsystem_id == sid:
                return rec
        raise KeyError(sid)

    def to_dict(self) -> dict:
        return {
            "members": [rec.subsystem_id for rec in self.members],
            "lambdas": [float(v) for v in self.lambdas],
            "eta": self.eta,
            "beta": self.beta,
            "c": self.c,
            "kappa_hat": self.kappa_hat,
        }


def compose_cbc(records: Sequence[CsbcRecord], lambdas, wired_pairs=None) -> CbcRecord:
    """Compose member certificates into the interconnection certificate.

    Raises CompositionError when the scaled level gap closes
    (beta <= eta) or the scaled gains reach one.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 0):
        raise CompositionError("scaling weights must be positive")
    G = gain_matrix(records, wired_pairs)
    rows, cols = np.nonzero(G.slopes)
    kappa_hat = float((G.slopes[rows, cols] * lambdas[cols] / lambdas[rows]).max())
    if kappa_hat >= 1.0:
        raise CompositionError(f"scaled gains reach {kappa_hat:.6g} >= 1 under these weights")
    eta = max(rec.eta / lam for rec, lam in zip(records, lambdas))
    beta = max(rec.beta / lam for rec, lam in zip(records, lambdas))
    c = max(rec.c / lam for rec, lam in zip(records, lambdas))
    if beta <= eta:
        raise CompositionError(
            f"compositionality violated: scaled beta {beta:.6g} <= scaled eta {eta:.6g}"
        )
    return CbcRecord(
        members=tuple(records),
        lambdas=lambdas,
        eta=eta,
        beta=beta,
        c=c,
        kappa_hat=kappa_hat,
        gain=G,
    )
