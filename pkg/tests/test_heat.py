import math

import numpy as np
import pytest
import scipy.sparse as sps

import chainkit.heat as ht
import chainkit.space as sp
from chainkit.dirichlet import (
    DirichletFormError,
    GraphDirichletForm,
    cycle_graph,
    path_graph,
)
from chainkit.scale import PhiTransform, power_scale


def two_vertex():
    return GraphDirichletForm(
        sps.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]])), np.ones(2))


def test_two_vertex_kernel_closed_form():
    # eigenvalues {0, 2}: p_t(x,x) = (1 + e^{-2t})/2, p_t(x,y) = (1 - e^{-2t})/2
    table = ht.heat_kernel(two_vertex(), [0.3, 1.0, 5.0])
    for t in (0.3, 1.0, 5.0):
        P = table.kernels[t]
        assert P[0, 0] == pytest.approx((1 + math.exp(-2 * t)) / 2, abs=1e-12)
        assert P[0, 1] == pytest.approx((1 - math.exp(-2 * t)) / 2, abs=1e-12)


def test_kernel_equilibrates_to_reciprocal_mass():
    form = cycle_graph(8)
    table = ht.heat_kernel(form, [500.0])
    np.testing.assert_allclose(table.kernels[500.0], 1.0 / 8.0, atol=1e-10)


def test_kernel_verify_catches_tampering():
    table = ht.heat_kernel(two_vertex(), [1.0, 2.0])
    table.verify()
    table.kernels[1.0][0, 1] += 1e-6
    with pytest.raises(ht.HeatError):
        table.verify()


def test_kernel_at_interpolates_spectrally():
    table = ht.heat_kernel(two_vertex(), [1.0, 2.0])
    np.testing.assert_allclose(table.kernel_at(3.0),
                               ht.heat_kernel(two_vertex(), [3.0]).kernels[3.0],
                               atol=1e-14)


def test_heat_kernel_rejects_bad_times():
    with pytest.raises(ht.HeatError):
        ht.heat_kernel(two_vertex(), [0.0, 1.0])


def test_sub_gaussian_fit_requires_dynamic_range():
    table = ht.heat_kernel(two_vertex(), [1.0, 200.0])
    with pytest.raises(ht.HeatError):
        ht.sub_gaussian_fit(table, table.form.geodesic_distances())


def test_sub_gaussian_fit_cycle_beta_near_2():
    form = cycle_graph(200)
    table = ht.heat_kernel(form, np.geomspace(1.0, 400.0, 25), verify=False)
    fit = ht.sub_gaussian_fit(table, form.geodesic_distances())
    assert 1.8 <= fit.beta <= 2.2
    assert fit.c_lower <= fit.C_upper
    assert fit.n_points > 100


def test_chaining_lower_bound_basics():
    form = cycle_graph(200)
    dist = form.geodesic_distances()
    table = ht.heat_kernel(form, [4.0], verify=False)
    # n = 1 on an admissible (near-diagonal) pair is exactly p_t
    p = ht.chaining_lower_bound(table, dist, 0, 4, 4.0, 1)
    assert p == pytest.approx(float(table.kernels[4.0][0, 4]))
    # inadmissible single hop gives 0
    assert ht.chaining_lower_bound(table, dist, 0, 100, 4.0, 1) == 0.0
    with pytest.raises(ht.HeatError):
        ht.chaining_lower_bound(table, dist, 0, 4, 4.0, 0)


def test_chaining_lower_bound_is_lower_bound_on_resolvable_pair():
    form = cycle_graph(60)
    dist = form.geodesic_distances()
    table = ht.heat_kernel(form, [9.0], verify=False)
    true = float(table.kernels[9.0][0, 20])
    assert true > 1e-12  # resolvable above float noise
    for n in range(1, 17):
        b = ht.chaining_lower_bound(table, dist, 0, 20, 9.0, n)
        assert b <= true + 1e-12


def test_chaining_lower_bound_disconnected_pair():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = 1.0
    w[2, 3] = w[3, 2] = 1.0
    form = GraphDirichletForm(sps.csr_matrix(w), np.ones(4))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = ht.heat_kernel(form, [1.0], verify=False)
    dist = form.geodesic_distances()
    assert ht.chaining_lower_bound(table, dist, 0, 3, 1.0, 4) == 0.0


def test_generalized_estimate_eval_gaussian_reduction():
    form = cycle_graph(40)
    space = sp.space_from_graph(form)
    psi = power_scale(2.0)
    phi = PhiTransform(psi)
    # eps(t) needs psi(eps)/eps * d <= t with eps above the lattice scale,
    # so t must exceed d = 10 here
    table = ht.heat_kernel(form, [20.0], verify=False)
    rep = ht.generalized_estimate_eval(table, space, psi, phi, 0, 10, 20.0)
    # geodesic space: d_eps = d, so the exponent is t * (d/t)^2 / 4 = d^2/(4t)
    assert rep["d_eps"] == pytest.approx(10.0)
    assert rep["exponent"] == pytest.approx(100.0 / 80.0)
    assert rep["p"] > 0 and rep["volume"] > 0


def test_gasket_counts():
    # level k: (3^(k+1) + 3) / 2 vertices, 3^(k+1) edges
    for level in range(0, 5):
        form = ht.sierpinski_gasket_graph(level)
        assert form.n == (3 ** (level + 1) + 3) // 2
        assert form.conductances.nnz // 2 == 3 ** (level + 1)
    with pytest.raises(ht.HeatError):
        ht.sierpinski_gasket_graph(9)


def test_gasket_corner_degrees():
    form = ht.sierpinski_gasket_graph(3)
    deg = np.asarray((form.conductances > 0).sum(axis=1)).ravel()
    assert sorted(np.unique(deg)) == [2, 4]
    assert (deg == 2).sum() == 3  # exactly the three corners


def test_mean_exit_time_single_vertex_ball():
    # ball = {x}: u = m(x)/deg(x); path interior vertex has degree 2
    form = path_graph(5)
    assert ht.mean_exit_time(form, 2, 1.0) == pytest.approx(0.5)
    assert ht.mean_exit_time(form, 0, 1.0) == pytest.approx(1.0)


def test_mean_exit_time_interval_profile():
    # interval {d < r} around the center of a long path: the discrete
    # quadratic profile u(j) = (r^2 - j^2)/2 gives E = r^2 / 2 at the center
    form = path_graph(41)
    for r in (2.0, 5.0, 10.0):
        assert ht.mean_exit_time(form, 20, r) == pytest.approx(r * r / 2, abs=1e-10)


def test_mean_exit_time_whole_graph_raises():
    form = path_graph(5)
    with pytest.raises(DirichletFormError):
        ht.mean_exit_time(form, 2, 100.0)


def test_exit_time_walk_dimension_path_is_2():
    # integer radii hit the exact quadratic profile E = r^2/2, so the
    # log-log slope is exactly 2
    form = path_graph(201)
    rep = ht.exit_time_walk_dimension(form, [100], [2.0, 4.0, 8.0, 16.0, 32.0])
    assert rep["beta_hat"] == pytest.approx(2.0, abs=1e-9)
