import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import chainkit.net as nt
import chainkit.space as sp
from chainkit.dirichlet import path_graph
from chainkit.scale import power_scale


def unit_line(n=11):
    return sp.build_space({"type": "euclidean", "coords": np.arange(float(n)).tolist()})


def test_build_net_greedy_on_line():
    space = unit_line(11)
    net = nt.build_net(space, 2.0)
    assert net.members == [0, 2, 4, 6, 8, 10]
    net.certify()


def test_build_net_with_include_set():
    space = unit_line(11)
    net = nt.build_net(space, 2.0, include=[1, 10])
    assert 1 in net.members and 10 in net.members
    net.certify()


def test_build_net_rejects_close_include():
    space = unit_line(11)
    with pytest.raises(nt.NetError, match="separation"):
        nt.build_net(space, 2.0, include=[0, 1])


def test_voronoi_ties_to_smallest_id():
    space = unit_line(5)
    net = nt.build_net(space, 2.0)  # members 0, 2, 4
    # point 1 is equidistant from 0 and 2 -> owner 0; point 3 -> owner 2
    assert net.voronoi[1] == 0
    assert net.voronoi[3] == 2


def test_partition_of_unity_properties():
    space = sp.space_from_graph(path_graph(21))
    net = nt.build_net(space, 4.0)
    pou = nt.build_partition(space, net)
    pou.verify()
    total = sum(pou.psi_values.values())
    assert np.abs(total - 1.0).max() <= 1e-12
    for z, psi_z in pou.psi_values.items():
        assert psi_z[z] == pytest.approx(1.0)
        assert (psi_z >= 0).all() and (psi_z <= 1).all()


def test_partition_requires_graph_backing():
    space = unit_line(9)
    net = nt.build_net(space, 2.0)
    with pytest.raises(nt.NetError, match="graph-backed"):
        nt.build_partition(space, net)


def test_partition_energy_report():
    space = sp.space_from_graph(path_graph(21))
    net = nt.build_net(space, 4.0)
    pou = nt.build_partition(space, net)
    rep = nt.partition_energy_report(space, pou, power_scale(2.0))
    assert rep["constant"] > 0
    assert len(rep["table"]) == len(net.members)


def test_proof_replay_frozen_values():
    space = sp.space_from_graph(path_graph(101))
    rep = nt.proof_replay(space, power_scale(2.0), 0, 100, 6.0)
    # hops at scale 6: ceil(100/5) = 20; net at eps' = 2 is {0, 2, ..., 100}
    assert rep.n_eps_xy == 20
    assert rep.u_hat[0] == 0 and rep.u_hat[100] == 20
    assert rep.lipschitz_ok
    # frozen from the first verified run: max M = 1/2, Psi(6) * 1/2 = 18
    assert rep.maximal_constant == pytest.approx(18.0, abs=1e-9)
    assert rep.recovered_constant == pytest.approx(1.44, abs=1e-12)
    assert rep.recovered_ok
    # u interpolates u_hat: endpoint values survive the blending
    assert rep.u[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.u[100] == pytest.approx(20.0, abs=1e-12)


def test_proof_replay_rejects_large_eps():
    space = sp.space_from_graph(path_graph(11))
    with pytest.raises(nt.NetError, match="eps"):
        nt.proof_replay(space, power_scale(2.0), 0, 10, 11.0)


def test_proof_replay_rejects_disconnected_scale():
    coords = [0.0, 1.0, 10.0, 11.0]
    space = sp.build_space({"type": "euclidean", "coords": coords})
    space.graph = path_graph(4)  # backing irrelevant; proximity check fires first
    with pytest.raises(nt.NetError, match="disconnected"):
        nt.proof_replay(space, power_scale(2.0), 0, 3, 2.0)


@given(st.integers(4, 20), st.floats(1.1, 5.0), st.integers(0, 10 ** 6))
@settings(max_examples=50, deadline=None)
def test_net_separation_and_covering_random(n, eps, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 10, size=(n, 2))
    space = sp.build_space({"type": "euclidean", "coords": pts.tolist()})
    net = nt.build_net(space, eps)
    mem = np.asarray(net.members)
    subs = space.dist[np.ix_(mem, mem)]
    off = subs[~np.eye(mem.size, dtype=bool)]
    if off.size:
        assert off.min() >= eps
    assert (space.dist[:, mem].min(axis=1) < eps).all()
