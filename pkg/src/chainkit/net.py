"""Epsilon-nets, Voronoi cells, partitions of unity, and the proof replay.

Nets are built greedily in ascending id order (seeded with any forced
members), which makes them deterministic; maximal separated sets are also
eps-covers, so separation and covering hold by construction and are
certified by exhaustive scans.  The partition bump functions are piecewise
linear in the distance to the Voronoi cell with slope width eps/4, which
makes the plateau, support and disjointness properties exact on graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dirichlet as df
from .chain import ProximityIndex
from .space import FiniteMetricMeasureSpace, SpaceError


class NetError(ValueError):
    pass


@dataclass
class EpsilonNet:
    """Maximal eps-separated subset with its Voronoi assignment."""

    space: FiniteMetricMeasureSpace
    epsilon: float
    members: list[int]
    include_set: frozenset[int] = field(default_factory=frozenset)
    voronoi: np.ndarray | None = None

    def certify(self) -> None:
        """Exhaustive separation and covering check."""
        mem = np.asarray(self.members)
        sub = self.space.dist[np.ix_(mem, mem)]
        off = sub[~np.eye(mem.size, dtype=bool)]
        if off.size and off.min() < self.epsilon:
            masked = np.where(np.eye(mem.size, dtype=bool), math.inf, sub)
            i, j = divmod(int(np.argmin(masked)), mem.size)
            raise NetError(
                f"separation violated by members {mem[i]} and {mem[j]}"
            )
        nearest = self.space.dist[:, mem].min(axis=1)
        if (nearest >= self.epsilon).any():
            p = int(np.argmax(nearest))
            raise NetError(f"covering violated at point {p}")


def build_net(space: FiniteMetricMeasureSpace, epsilon: float,
              include=None) -> EpsilonNet:
    """Greedy maximal eps-separated set, seeded with the forced members."""
    if epsilon <= 0:
        raise NetError("epsilon must be positive")
    include = sorted(set(include)) if include else []
    for i in include:
        if not 0 <= i < space.n:
            raise SpaceError(f"unknown point id {i}")
    for a in range(len(include)):
        for b in range(a + 1, len(include)):
            if space.dist[include[a], include[b]] < epsilon:
                raise NetError(
                    f"include set violates separation: points {include[a]} "
                    f"and {include[b]} are at distance "
                    f"{space.dist[include[a], include[b]]}"
                )
    members = list(include)
    for p in range(space.n):
        if p in members:
            continue
        if all(space.dist[p, q] >= epsilon for q in members):
            members.append(p)
    net = EpsilonNet(space=space, epsilon=epsilon, members=members,
                     include_set=frozenset(include))
    net.certify()
    net.voronoi = voronoi_assign(net)
    return net


def voronoi_assign(net: EpsilonNet) -> np.ndarray:
    """Nearest-member assignment, ties broken to the smallest member id.

    Certifies B(z, eps/2) subset R_z subset closed-ball(z, eps) for every
    member z.
    """
    mem = np.asarray(sorted(net.members))
    d = net.space.dist[:, mem]
    owner = mem[np.argmin(d, axis=1)]  # argmin takes the first (smallest id) tie
    for z in mem:
        cell = owner == z
        dz = net.space.dist[z]
        if (cell & (dz > net.epsilon)).any():
            raise NetError(f"Voronoi cell of {z} leaves the closed eps-ball")
        if ((dz < net.epsilon / 2) & ~cell).any():
            raise NetError(f"Voronoi cell of {z} misses part of B(z, eps/2)")
    return owner


@dataclass
class PartitionOfUnity:
    """Family {psi_z} indexed by net members, summing to one everywhere."""

    net: EpsilonNet
    form: df.GraphDirichletForm
    psi_values: dict[int, np.ndarray]
    energies: dict[int, float]

    def verify(self) -> None:
        eps = self.net.epsilon
        space = self.net.space
        total = sum(self.psi_values.values())
        if np.abs(total - 1.0).max() > 1e-12:
            raise NetError("partition does not sum to one")
        for z, psi_z in self.psi_values.items():
            dz = space.dist[z]
            if (np.abs(psi_z[dz < eps / 4] - 1.0) > 0).any():
                raise NetError(f"psi_{z} is not identically 1 on B(z, eps/4)")
            if (psi_z[dz >= 5 * eps / 4] != 0).any():
                raise NetError(f"psi_{z} does not vanish outside B(z, 5 eps/4)")
        for z in self.psi_values:
            dz = space.dist[z]
            for w, psi_w in self.psi_values.items():
                if w != z and (psi_w[dz < eps / 4] != 0).any():
                    raise NetError(f"psi_{w} does not vanish on B({z}, eps/4)")


def build_partition(space: FiniteMetricMeasureSpace, net: EpsilonNet) -> PartitionOfUnity:
    """Bump functions phi_z = clamp(1 - d(p, R_z)/(eps/4), 0, 1), normalized.

    Requires a graph-backed space (the energies are graph Dirichlet
    energies).  Every point lies in its owner's cell, so the normalizing
    denominator is at least 1 everywhere.
    """
    if space.graph is None:
        raise NetError("partition of unity requires a graph-backed space")
    eps = net.epsilon
    owner = net.voronoi if net.voronoi is not None else voronoi_assign(net)
    phis = {}
    for z in sorted(net.members):
        cell = np.flatnonzero(owner == z)
        d_cell = space.dist[:, cell].min(axis=1)
        phis[z] = np.clip(1.0 - d_cell / (eps / 4.0), 0.0, 1.0)
    denom = sum(phis.values())
    if (denom <= 0).any():
        raise AssertionError("partition denominator vanished; net is not maximal")
    psis = {z: phi / denom for z, phi in phis.items()}
    energies = {z: df.energy(space.graph, psi_z) for z, psi_z in psis.items()}
    pou = PartitionOfUnity(net=net, form=space.graph, psi_values=psis,
                           energies=energies)
    pou.verify()
    return pou


def partition_energy_report(space: FiniteMetricMeasureSpace,
                            pou: PartitionOfUnity, psi_scale) -> dict:
    """Compare E(psi_z, psi_z) with m(B(z, eps)) / Psi(eps) per member."""
    eps = pou.net.epsilon
    rows = []
    worst = 0.0
    for z, E in sorted(pou.energies.items()):
        vol = float(space.measure[space.dist[z] < eps].sum())
        bound_core = vol / psi_scale(eps)
        ratio = E / bound_core if bound_core > 0 else math.inf
        rows.append({"member": int(z), "energy": E, "volume": vol,
                     "ratio": ratio})
        worst = max(worst, ratio)
    return {"constant": worst, "table": rows}


@dataclass
class ReplayReport:
    """Numerical replay of the chain-counting test-function argument."""

    x: int
    y: int
    epsilon: float
    eps_prime: float
    n_eps_xy: float
    u_hat: dict[int, float]
    lipschitz_ok: bool
    max_maximal_function: float
    maximal_constant: float  # Psi(eps) * max over members of M_R Gamma(u,u)
    two_point: dict
    recovered_constant: float  # C with N_eps^2 = C * Psi(d) / Psi(eps)
    recovered_ok: bool
    partition_constant: float
    u: np.ndarray


def proof_replay(space: FiniteMetricMeasureSpace, psi_scale, x: int, y: int,
                 epsilon: float, R: float | None = None) -> ReplayReport:
    """Rebuild the chain-counting test function and check its bounds.

    Steps: build the eps/3-net containing {x, y}, set u_hat(z) = N_eps(x, z)
    on members, assert the unit-Lipschitz property on eps-close member
    pairs, blend u through the partition of unity, and evaluate the
    truncated maximal function of the energy measure of u at all members.
    R defaults to 2 d(x, y).
    """
    if space.graph is None:
        raise NetError("proof replay requires a graph-backed space")
    d_xy = float(space.dist[x, y])
    if epsilon > d_xy:
        raise NetError("replay requires eps <= d(x, y)")
    index = ProximityIndex.build(space, epsilon)
    hops, _ = index.shortest_paths(x, weighted=False)
    if not np.isfinite(hops).all():
        raise NetError("proximity graph is disconnected at this epsilon")

    eps_prime = epsilon / 3.0
    net = build_net(space, eps_prime, include={x, y})
    u_hat = {z: int(hops[z]) for z in net.members}

    lipschitz_ok = True
    mem = sorted(net.members)
    for i, z1 in enumerate(mem):
        for z2 in mem[i + 1:]:
            if space.dist[z1, z2] < epsilon and abs(u_hat[z1] - u_hat[z2]) > 1:
                lipschitz_ok = False
    if not lipschitz_ok:
        raise AssertionError(
            "unit-Lipschitz property of the chain count failed; "
            "this indicates a minimal-chain-count bug"
        )

    pou = build_partition(space, net)
    u = sum(u_hat[z] * pou.psi_values[z] for z in net.members)

    # u is constant on each plateau B(z, eps'/4), so the energy measure
    # vanishes there; checked via the per-vertex density.
    gamma = df.energy_measure(space.graph, u).density
    for z in mem:
        plateau = space.dist[z] < eps_prime / 4
        if not np.allclose(u[plateau], u_hat[z], rtol=0, atol=1e-9):
            raise AssertionError("u does not equal u_hat on the plateau")

    if R is None:
        R = 2.0 * d_xy
    max_M = max(df.truncated_maximal(space, gamma, z, R) for z in mem)
    maximal_constant = psi_scale(epsilon) * max_M

    two_point = df.two_point_check(space.graph, psi_scale, u, x, y, R)

    n_eps_xy = u_hat[y]
    recovered_constant = (n_eps_xy ** 2) * psi_scale(epsilon) / psi_scale(d_xy)
    part = partition_energy_report(space, pou, psi_scale)

    return ReplayReport(
        x=x, y=y, epsilon=epsilon, eps_prime=eps_prime, n_eps_xy=n_eps_xy,
        u_hat=u_hat, lipschitz_ok=lipschitz_ok,
        max_maximal_function=max_M, maximal_constant=maximal_constant,
        two_point=two_point, recovered_constant=recovered_constant,
        recovered_ok=n_eps_xy ** 2 <= recovered_constant * psi_scale(d_xy) / psi_scale(epsilon) * (1 + 1e-12),
        partition_constant=part["constant"], u=u,
    )
