import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqrkdg import (DGSpace, QuadRule, build_mesh, error_norms, eval_at_quad, norm_L2,
                    norm_Linf, project, trace_avg_jump)
from eqrkdg.dg import legendre_orthonormal
from eqrkdg.mesh import PERIODIC

from conftest import periodic_space


def sinsin(x):
    return np.sin(x[..., 0] / 2) * np.sin(x[..., 1] / 2)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_gauss_rule_exactness(m):
    q = QuadRule(m, 1)
    for p in range(2 * m):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert np.dot(q.ref_weights, q.ref_nodes ** p) == pytest.approx(exact, abs=1e-14)
    assert np.all(q.ref_weights > 0)


def test_mapped_weights_sum_to_cell_measure():
    sp = periodic_space(3, 2, 0.0, 6.0)
    assert sp.weights.sum() == pytest.approx(sp.mesh.cell_volume)


def test_legendre_orthonormal_on_reference():
    q = QuadRule(6, 1)
    P, _ = legendre_orthonormal(4, q.ref_nodes)
    gram = (P * q.ref_weights) @ P.T
    assert np.allclose(gram, np.eye(5), atol=1e-14)


def test_basis_function_projection_idempotent():
    sp = periodic_space(3, 2)
    c = np.zeros((sp.mesh.n_cells, sp.n_basis))
    c[4, 5] = 1.0
    u = sp.field(c)
    v = project(eval_at_quad(u), sp)
    assert np.abs(v.coeffs - c).max() < 1e-12


def test_project_constant():
    sp = periodic_space(4, 3)
    u = sp.project(lambda x: np.ones(x.shape[:-1]))
    assert np.allclose(eval_at_quad(u).values, 1.0, atol=1e-13)


def test_projection_rate_k1():
    errs = []
    for n in (8, 16, 32):
        sp = periodic_space(n, 1)
        errs.append(error_norms(sp.project(sinsin), sinsin)[0])
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert ratios[-1] == pytest.approx(4.0, rel=0.10)


def test_eval_constant_field():
    sp = periodic_space(3, 2)
    u = sp.constant(2.5)
    assert np.allclose(eval_at_quad(u).values, 2.5, atol=1e-14)


def test_round_trip_identity(rng):
    sp = periodic_space(3, 3)
    c = rng.standard_normal((sp.mesh.n_cells, sp.n_basis))
    back = project(eval_at_quad(sp.field(c)), sp)
    assert np.abs(back.coeffs - c).max() < 1e-12


def test_linear_field_at_gauss_nodes():
    sp = DGSpace(build_mesh([(0.0, 1.0)], [2], "periodic"), 1, m=2)
    # x on [0, 1]: project cellwise and evaluate at the two Gauss nodes of the
    # cell [0, 0.5] and of the cell [0.5, 1]
    u = sp.project(lambda x: x[..., 0])
    vals = eval_at_quad(u).values
    g = 1 / (2 * np.sqrt(3))
    assert np.allclose(vals[0], 0.25 + 0.5 * np.array([-g, g]), atol=1e-14)
    assert np.allclose(vals[1], 0.75 + 0.5 * np.array([-g, g]), atol=1e-14)
    assert np.allclose(sp.nodes[0, :, 0], 0.25 + 0.5 * np.array([-g, g]))


def test_linear_field_single_interval_nodes():
    # mapping of Gauss nodes onto [0, 1] gives 0.5 -+ 1/(2 sqrt 3)
    q = QuadRule(2, 1)
    mapped = 0.5 + 0.5 * q.ref_nodes
    assert np.allclose(np.sort(mapped), [0.5 - 1 / (2 * np.sqrt(3)), 0.5 + 1 / (2 * np.sqrt(3))])


def test_trace_avg_jump_piecewise_constant():
    sp = DGSpace(build_mesh([(0.0, 2.0)], [2], "periodic"), 0)
    c = np.array([[1.0], [3.0]]) * np.sqrt(sp.mesh.cell_volume)
    u = sp.field(c)
    face = next(f for f in sp.mesh.faces if f.left == 0 and f.right == 1)
    tr = trace_avg_jump(u, face)
    assert np.allclose(tr["avg"], 2.0) and np.allclose(tr["jump"], 2.0)
    assert np.allclose(tr["avg_dn"], 0.0)


def test_continuous_field_has_no_jumps():
    sp = periodic_space(4, 2, 0.0, 1.0)
    u = sp.project(lambda x: 1.0 + 2 * x[..., 0] - x[..., 1])  # linear: in V_h, continuous
    for f in sp.mesh.faces:
        if f.kind != PERIODIC:
            assert np.abs(trace_avg_jump(u, f)["jump"]).max() < 1e-12


def test_natural_boundary_trace_is_one_sided():
    sp = DGSpace(build_mesh([(0.0, 1.0)], [3], "natural"), 2)
    u = sp.project(lambda x: x[..., 0] ** 2)
    f = sp.mesh.faces[0]
    tr = trace_avg_jump(u, f)
    assert np.allclose(tr["avg"], 0.0, atol=1e-13) and np.all(tr["jump"] == 0)
    tr = trace_avg_jump(u, sp.mesh.faces[-1])
    assert np.allclose(tr["avg"], 1.0) and np.allclose(tr["avg_dn"], 2.0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_wrap_jump_decay(k):
    jumps = []
    for n in (8, 16, 32):
        sp = DGSpace(build_mesh([(-2 * np.pi, 2 * np.pi)], [n], "periodic"), k)
        u = sp.project(lambda x: np.sin(x[..., 0] / 2))
        wrap = next(f for f in sp.mesh.faces if f.kind == PERIODIC)
        jumps.append(abs(trace_avg_jump(u, wrap)["jump"]).max())
    rates = np.log2(np.array(jumps[:-1]) / np.array(jumps[1:]))
    assert rates[-1] > k + 1 - 0.3


def test_norms_trivial():
    sp = periodic_space(4, 2)
    assert norm_L2(sp.zeros()) == 0.0 and norm_Linf(sp.zeros()) == 0.0
    assert norm_L2(sp.constant(1.0)) == pytest.approx(4 * np.pi)


@settings(max_examples=25, deadline=None)
@given(k=st.integers(0, 3), n=st.integers(2, 4), seed=st.integers(0, 10 ** 6),
       dim=st.integers(1, 2))
def test_parseval(k, n, seed, dim):
    sp = periodic_space(n, k, 0.0, 3.0, dim)
    c = np.random.default_rng(seed).standard_normal((sp.mesh.n_cells, sp.n_basis))
    q = eval_at_quad(sp.field(c)).norm_L2()
    assert abs(q - np.linalg.norm(c)) <= 1e-10 * max(1.0, q)


def test_projection_contractive_on_random_quadfields(rng):
    sp = periodic_space(3, 2, 0.0, 1.0)
    worst = -np.inf
    for _ in range(1000):
        qf = sp.quad_field(rng.standard_normal((sp.mesh.n_cells, sp.quad.n_points)) * rng.uniform(0.1, 10))
        worst = max(worst, norm_L2(project(qf, sp)) - qf.norm_L2())
    assert worst <= 1e-12


def test_error_norms_zero_for_exact_member():
    sp = periodic_space(4, 2, 0.0, 1.0)
    f = lambda x: x[..., 0] * x[..., 1] + 1
    l2, linf = error_norms(sp.project(f), f)
    assert l2 < 1e-13 and linf < 1e-13


def test_linf_sees_corners():
    sp = DGSpace(build_mesh([(0.0, 1.0)], [2], "periodic"), 1)
    u = sp.project(lambda x: x[..., 0])
    assert norm_Linf(u) == pytest.approx(1.0)
