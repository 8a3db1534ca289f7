"""Chain metrics, minimal chain counts, and the chain inequalities.

An eps-chain is a point sequence whose consecutive distances are strictly
below eps.  The chain metric d_eps(x, y) is the least total length of such a
chain; N_eps(x, y) is the least hop count.  On a finite space both are
realized by shortest paths in the proximity graph whose edges are exactly
the pairs at distance < eps, so Dijkstra / BFS give the infima exactly.
Ties at exactly eps are excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .space import FiniteMetricMeasureSpace, SpaceError


class ChainError(ValueError):
    pass


@dataclass
class ProximityIndex:
    """Graph on the space's points with an edge (i, j) iff d(i, j) < eps."""

    space: FiniteMetricMeasureSpace
    epsilon: float
    edges: sp.csr_matrix

    @classmethod
    def build(cls, space: FiniteMetricMeasureSpace, epsilon: float) -> "ProximityIndex":
        if epsilon <= 0:
            raise ChainError("epsilon must be positive")
        adj = (space.dist < epsilon) & ~np.eye(space.n, dtype=bool)
        edges = sp.csr_matrix(np.where(adj, space.dist, 0.0))
        return cls(space=space, epsilon=epsilon, edges=edges)

    def shortest_paths(self, source: int, weighted: bool = True):
        dist, pred = csgraph.dijkstra(
            self.edges, directed=False, indices=source,
            return_predecessors=True, unweighted=not weighted,
        )
        return dist, pred

    def component_labels(self) -> np.ndarray:
        return csgraph.connected_components(self.edges, directed=False)[1]


@dataclass
class ChainAnalysis:
    """Per-(eps, x, y) chain record with witnesses."""

    x: int
    y: int
    epsilon: float
    d_eps: float
    n_eps: float
    witness_metric: list[int]
    witness_hops: list[int]

    def verify(self, space: FiniteMetricMeasureSpace, rel_tol: float = 1e-12) -> None:
        """Re-sum the witnesses and re-check admissibility."""
        if math.isinf(self.d_eps) != math.isinf(self.n_eps):
            raise ChainError("finiteness of d_eps and n_eps must coincide")
        if math.isinf(self.d_eps):
            return
        for path, total, count in (
            (self.witness_metric, self.d_eps, None),
            (self.witness_hops, None, self.n_eps),
        ):
            hops = [space.dist[a, b] for a, b in zip(path[:-1], path[1:])]
            if any(h >= self.epsilon for h in hops):
                raise ChainError("witness hop at or above epsilon")
            if path[0] != self.x or path[-1] != self.y:
                raise ChainError("witness endpoints do not match")
            if total is not None and not math.isclose(
                sum(hops), total, rel_tol=rel_tol, abs_tol=1e-300
            ):
                raise ChainError("witness length does not reproduce d_eps")
            if count is not None and len(hops) != count:
                raise ChainError("witness hop count does not reproduce n_eps")


def _walk_predecessors(pred, source: int, target: int) -> list[int]:
    path = [target]
    while path[-1] != source:
        p = pred[path[-1]]
        if p < 0:
            return []
        path.append(int(p))
    return path[::-1]


def _check_ids(space, *ids):
    for i in ids:
        if not 0 <= i < space.n:
            raise SpaceError(f"unknown point id {i}")


def chain_metric(space: FiniteMetricMeasureSpace, epsilon: float, x: int,
                 y: int, index: ProximityIndex | None = None) -> tuple[float, list[int]]:
    """d_eps(x, y) and an optimal witness chain (empty when disconnected)."""
    _check_ids(space, x, y)
    if index is None:
        index = ProximityIndex.build(space, epsilon)
    if x == y:
        return 0.0, [x]
    dist, pred = index.shortest_paths(x, weighted=True)
    if not np.isfinite(dist[y]):
        return math.inf, []
    return float(dist[y]), _walk_predecessors(pred, x, y)


def min_chain_count(space: FiniteMetricMeasureSpace, epsilon: float, x: int,
                    y: int, index: ProximityIndex | None = None) -> tuple[float, list[int]]:
    """N_eps(x, y) and a hop-minimal witness; 0 when x == y."""
    _check_ids(space, x, y)
    if index is None:
        index = ProximityIndex.build(space, epsilon)
    if x == y:
        return 0, [x]
    hops, pred = index.shortest_paths(x, weighted=False)
    if not np.isfinite(hops[y]):
        return math.inf, []
    return int(hops[y]), _walk_predecessors(pred, x, y)


def analyze_pair(space: FiniteMetricMeasureSpace, epsilon: float, x: int,
                 y: int, index: ProximityIndex | None = None) -> ChainAnalysis:
    if index is None:
        index = ProximityIndex.build(space, epsilon)
    d_eps, wm = chain_metric(space, epsilon, x, y, index)
    n_eps, wh = min_chain_count(space, epsilon, x, y, index)
    analysis = ChainAnalysis(x=x, y=y, epsilon=epsilon, d_eps=d_eps,
                             n_eps=n_eps, witness_metric=wm, witness_hops=wh)
    analysis.verify(space)
    return analysis


def chain_sandwich_check(analysis: ChainAnalysis) -> bool:
    """ceil(d_eps/eps) <= N_eps <= 9 ceil(d_eps/eps); requires d_eps finite."""
    if math.isinf(analysis.d_eps):
        raise ChainError("chain sandwich requires finite d_eps")
    if analysis.x == analysis.y:
        return analysis.n_eps == 0
    blocks = math.ceil(analysis.d_eps / analysis.epsilon)
    return blocks <= analysis.n_eps <= 9 * blocks


def main_inequality_scan(space: FiniteMetricMeasureSpace, psi, pairs,
                         epsilons) -> dict:
    """Scan the ratio (d_eps^2/eps^2) / (psi(d)/psi(eps)) over pairs and scales.

    Only (eps, x, y) with d(x, y) >= eps and finite d_eps participate; others
    are counted and skipped.  Also tabulates psi(eps) d_eps / eps per eps (the
    vanishing functional whose trend is reported, not its limit).
    """
    worst = 0.0
    argmax = None
    table = []
    trend = []
    skipped = 0
    for eps in epsilons:
        index = ProximityIndex.build(space, eps)
        cache: dict[int, np.ndarray] = {}
        trend_max = 0.0
        any_pair = False
        for x, y in pairs:
            d = space.dist[x, y]
            if d < eps:
                skipped += 1
                continue
            if x not in cache:
                cache[x] = index.shortest_paths(x, weighted=True)[0]
            d_eps = float(cache[x][y])
            if math.isinf(d_eps):
                skipped += 1
                continue
            ratio = (d_eps ** 2 / eps ** 2) / (psi(d) / psi(eps))
            table.append({"x": int(x), "y": int(y), "eps": float(eps),
                          "d": float(d), "d_eps": d_eps, "ratio": ratio})
            trend_max = max(trend_max, psi(eps) * d_eps / eps)
            any_pair = True
            if ratio > worst:
                worst = ratio
                argmax = (float(eps), int(x), int(y))
        if any_pair:
            trend.append({"eps": float(eps), "max_vanishing_functional": trend_max})
    return {"worst_ratio": worst, "argmax": argmax, "table": table,
            "trend": trend, "skipped": skipped}


def chain_condition_estimate(space: FiniteMetricMeasureSpace, epsilons,
                             pairs=None) -> dict:
    """K_hat = max over eps and pairs of d_eps(x, y) / d(x, y).

    Disconnection at some eps is reported as an infinite K_hat together with
    the offending scale.
    """
    if pairs is None:
        pairs = [(i, j) for i in range(space.n) for j in range(i + 1, space.n)]
    K_hat = 1.0
    argmax = None
    for eps in epsilons:
        index = ProximityIndex.build(space, eps)
        cache: dict[int, np.ndarray] = {}
        for x, y in pairs:
            if x == y:
                continue
            if x not in cache:
                cache[x] = index.shortest_paths(x, weighted=True)[0]
            d_eps = float(cache[x][y])
            if math.isinf(d_eps):
                return {"K_hat": math.inf, "disconnected_at": float(eps),
                        "argmax": (float(eps), int(x), int(y))}
            ratio = d_eps / space.dist[x, y]
            if ratio > K_hat:
                K_hat = ratio
                argmax = (float(eps), int(x), int(y))
    return {"K_hat": K_hat, "disconnected_at": None, "argmax": argmax}


def d_eps_step_function(space: FiniteMetricMeasureSpace, x: int, y: int):
    """d_eps(x, y) as a step function of eps.

    Returns (breaks, values): d_eps equals values[k] on the interval
    (breaks[k], breaks[k+1]] and values[-1] for eps > breaks[-1].  The breaks
    are the distinct positive pairwise distances, where proximity edges
    appear.
    """
    breaks = space.critical_radii()
    breaks = breaks[breaks > 0]
    values = []
    for k in range(breaks.size):
        upper = breaks[k + 1] if k + 1 < breaks.size else breaks[k] * 2 + 1
        # on (breaks[k], breaks[k+1]] the edge set is {d <= breaks[k]}
        index = ProximityIndex.build(space, 0.5 * (breaks[k] + upper))
        d_eps, _ = chain_metric(space, index.epsilon, x, y, index)
        values.append(d_eps)
    return breaks, np.array(values)


def epsilon_of_t(space: FiniteMetricMeasureSpace, psi, x: int, y: int,
                 t: float) -> float:
    """sup{eps > 0 : (psi(eps)/eps) d_eps(x, y) <= t}, capped at the diameter.

    Exact: d_eps is a step function of eps with jumps at pairwise distances,
    and psi(eps)/eps is continuous, so the supremum is found by scanning the
    critical intervals from the top and bisecting within one of them.
    """
    if t <= 0:
        raise ChainError("t must be positive")
    if x == y:
        raise ChainError("epsilon_of_t requires x != y")
    diam = space.diameter()
    breaks, values = d_eps_step_function(space, x, y)

    def F(eps, L):
        return psi(eps) / eps * L

    for k in range(breaks.size - 1, -1, -1):
        lo = breaks[k]
        hi = breaks[k + 1] if k + 1 < breaks.size else diam
        if hi <= lo:
            hi = lo  # top interval degenerates when breaks[-1] == diam
        L = values[k]
        if math.isinf(L):
            continue
        if hi > lo and F(hi, L) <= t:
            return float(min(hi, diam))
        if F(lo, L) >= t:  # limit from the right at lo
            continue
        if hi <= lo:
            continue
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if F(mid, L) <= t:
                a = mid
            else:
                b = mid
            if b - a <= 1e-15 * max(1.0, b):
                break
        return float(min(a, diam))
    raise ChainError("time below chain resolution: no eps satisfies the bound")
