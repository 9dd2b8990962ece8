import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdgstokes.forms import (MethodParams, a_terms, boundary_rhs, local_a, local_b, local_rhs, local_s,
                             pressure_mass)
from hdgstokes.manufactured import exact_fields
from hdgstokes.mesh import from_triangles, generate_structured
from hdgstokes.quadrature import triangle_rule
from hdgstokes.spaces import bdm_interpolate, make_spaces, physical_points

from oracles import a_matrix_reference

REF_MESH = from_triangles([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])


def _all(mesh):
    return np.arange(mesh.n_elements)


@pytest.mark.parametrize("epsilon", [-1, 1])
@pytest.mark.parametrize("nu", [1.0, 0.01])
def test_a_matches_symbolic_reference(epsilon, nu):
    sp = make_spaces(REF_MESH, 1)
    params = MethodParams(nu=nu, epsilon=epsilon)
    A = local_a(sp, params, np.array([0]))[0]
    V = sp.velocity
    nb = V.local_dim
    ref = np.array(a_matrix_reference(nu=1, tau=6, epsilon=epsilon).evalf(), dtype=float) * nu
    glob = np.empty((nb, nb))
    d = V.local_dofs[0]
    glob[np.ix_(d, d)] = A[:nb, :nb]
    assert np.abs(glob - ref).max() < 1e-12 * max(1, np.abs(ref).max())


def test_constant_field_has_no_volume_or_consistency_contribution():
    mesh = generate_structured(3, "alternating")
    sp = make_spaces(mesh, 1)
    terms = a_terms(sp, MethodParams(), _all(mesh))
    V = sp.velocity
    c = bdm_interpolate(V, lambda x: np.broadcast_to([0.7, -1.3], x.shape), MethodParams().erule)
    cl = np.zeros(terms["volume"].shape[:2])
    cl[:, : V.local_dim] = c[V.local_dofs]
    assert np.abs(np.einsum("tij,tj->ti", terms["volume"], cl)).max() < 1e-13
    assert np.abs(np.einsum("tij,tj->ti", terms["consistency"], cl)).max() < 1e-13


@pytest.mark.parametrize("k", [1, 2])
def test_symmetric_variant_gives_symmetric_blocks(k):
    mesh = generate_structured(2, "left")
    sp = make_spaces(mesh, k)
    A = local_a(sp, MethodParams(k=k, epsilon=-1), _all(mesh))
    assert np.abs(A - np.transpose(A, (0, 2, 1))).max() < 1e-12 * np.abs(A).max()
    A1 = local_a(sp, MethodParams(k=k, epsilon=1), _all(mesh))
    assert np.abs(A1 - np.transpose(A1, (0, 2, 1))).max() > 1e-3


def test_consistency_and_adjoint_are_transposes():
    mesh = generate_structured(2)
    t = a_terms(make_spaces(mesh, 1), MethodParams(epsilon=1), _all(mesh))
    assert np.allclose(t["adjoint"], -np.transpose(t["consistency"], (0, 2, 1)), atol=1e-13)


@pytest.mark.parametrize("pattern", ["right", "alternating"])
def test_b_entries_follow_divergence_theorem(pattern):
    mesh = generate_structured(3, pattern)
    sp = make_spaces(mesh, 1, "baseline")
    params = MethodParams(variant="baseline")
    Bl = local_b(sp, params, _all(mesh))  # (T, 1, 6)
    V = sp.velocity
    for K in range(mesh.n_elements):
        expected = np.zeros(V.local_dim)
        for i, e in enumerate(mesh.element_edges[K]):
            # int_K div phi = sum over edges of the normal flux; only the L_0 moment carries flux.
            expected[list(V.local_dofs[K]).index(2 * e)] = -mesh.signs[K, i]
        assert np.abs(Bl[K, 0] - expected).max() < 1e-13


def test_b_stabilised_constant_row_matches_baseline():
    mesh = generate_structured(2)
    bs = local_b(make_spaces(mesh, 1, "stabilised"), MethodParams(), _all(mesh))
    bb = local_b(make_spaces(mesh, 1, "baseline"), MethodParams(variant="baseline"), _all(mesh))
    assert bs.shape[1] == 3 and bb.shape[1] == 1
    assert np.allclose(bs[:, 0], bb[:, 0], atol=1e-14)
    # Divergence of BDM1 is piecewise constant: mean-free pressure parts never see it.
    assert np.abs(bs[:, 1:]).max() < 1e-13


def test_stabiliser_on_reference_element():
    sp = make_spaces(REF_MESH, 1)
    S = local_s(sp, MethodParams(), np.array([0]))[0]
    P = sp.pressure
    x = np.array([[[0.2, 0.1], [0.5, 0.3], [0.1, 0.7]]])
    vals = P.basis_at(x, np.array([0]))[0]
    cx = np.linalg.solve(vals, x[0, :, 0])  # coefficients of q(x, y) = x
    assert cx @ S @ cx == pytest.approx(1 / 36, rel=1e-13)


def test_stabiliser_kernel_and_sign():
    mesh = generate_structured(3, "alternating")
    sp = make_spaces(mesh, 1)
    S = local_s(sp, MethodParams(), _all(mesh))
    const = np.zeros(3)
    const[0] = 1
    assert np.abs(S @ const).max() < 1e-13
    assert np.linalg.eigvalsh(S).min() > -1e-15


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 0.1, 10.0]))
def test_stabiliser_matches_independent_quadrature(seed, nu):
    rng = np.random.default_rng(seed)
    mesh = generate_structured(2, "left")
    sp = make_spaces(mesh, 1)
    els = _all(mesh)
    S = local_s(sp, MethodParams(nu=nu), els)
    c = rng.standard_normal((mesh.n_elements, 3))
    rule = triangle_rule(4)
    x = physical_points(mesh, rule.points)
    q = np.einsum("tqj,tj->tq", sp.pressure.basis_at(x, els), c)
    mean = (rule.weights @ q.T) / rule.weights.sum()
    expected = mesh.areas * 2 * np.einsum("q,tq->t", rule.weights, (q - mean[:, None]) ** 2) / nu
    assert np.allclose(np.einsum("ti,tij,tj->t", c, S, c), expected, rtol=1e-11, atol=1e-15)


def test_stabiliser_zero_for_baseline():
    mesh = generate_structured(2)
    S = local_s(make_spaces(mesh, 1, "baseline"), MethodParams(variant="baseline"), _all(mesh))
    assert S.shape == (mesh.n_elements, 1, 1) and not S.any()


def test_pressure_mass_well_conditioned():
    mesh = generate_structured(16)
    M = pressure_mass(make_spaces(mesh, 1), _all(mesh), triangle_rule(4))
    M = M / mesh.areas[:, None, None]
    assert np.linalg.cond(M).max() < 100


def test_tau_and_nu_scaling():
    mesh = generate_structured(2, "alternating")
    sp = make_spaces(mesh, 1)
    els = _all(mesh)
    t6 = a_terms(sp, MethodParams(tau=6), els)
    t12 = a_terms(sp, MethodParams(tau=12), els)
    assert np.allclose(t12["penalty"], 2 * t6["penalty"], rtol=1e-14)
    for name in ("volume", "consistency", "adjoint"):
        assert np.array_equal(t12[name], t6[name])
    p1, p2 = MethodParams(nu=1), MethodParams(nu=0.01)
    assert np.allclose(local_a(sp, p2, els), 0.01 * local_a(sp, p1, els), rtol=1e-13, atol=1e-16)
    assert np.array_equal(local_b(sp, p2, els), local_b(sp, p1, els))
    assert np.allclose(local_s(sp, p2, els), 100 * local_s(sp, p1, els), rtol=1e-13)


def test_penalty_positive_semidefinite():
    mesh = generate_structured(2)
    P = a_terms(make_spaces(mesh, 2), MethodParams(k=2), _all(mesh))["penalty"]
    assert np.linalg.eigvalsh(P).min() > -1e-12


def test_boundary_flux_of_unit_data():
    mesh = generate_structured(3)
    sp = make_spaces(mesh, 1)
    owners, G = boundary_rhs(sp, MethodParams(), lambda x, n: np.ones(x.shape[:-1]))
    V = sp.velocity
    for row, (K, e) in enumerate(zip(owners, mesh.boundary_edges)):
        dofs = list(V.local_dofs[K])
        assert G[row, dofs.index(2 * e)] == pytest.approx(1.0, abs=1e-14)
        assert abs(G[row, dofs.index(2 * e + 1)]) < 1e-14
        others = [j for j, d in enumerate(dofs) if d // 2 != e]
        assert np.abs(G[row, others]).max() < 1e-14


def test_load_vector_quadrature_converged():
    mesh = generate_structured(4)
    sp = make_spaces(mesh, 1)
    f = exact_fields().f
    params = MethodParams()
    lo = local_rhs(sp, params, _all(mesh), f)
    hi = local_rhs(sp, params, _all(mesh), f, trule=triangle_rule(2 * params.quad_degree))
    assert np.abs(lo - hi).max() < 1e-10


def test_load_vector_of_constant_force():
    mesh = generate_structured(2)
    sp = make_spaces(mesh, 1)
    F = local_rhs(sp, MethodParams(), _all(mesh), lambda x: np.broadcast_to([1.0, 0.0], x.shape))
    # int_K phi_x summed against a unit force: the interpolant of (x, 0) has a constant divergence of one,
    # so sum_j F_j c_j = int_K (1, 0) . (x, 0) = |K| * centroid_x.
    c = bdm_interpolate(sp.velocity, lambda x: np.stack([x[..., 0], 0 * x[..., 0]], -1), MethodParams().erule)
    got = np.einsum("tj,tj->t", F, c[sp.velocity.local_dofs])
    centroids = mesh.points[mesh.triangles].mean(axis=1)
    assert np.allclose(got, mesh.areas * centroids[:, 0], atol=1e-14)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        MethodParams(nu=0)
    with pytest.raises(ValueError):
        MethodParams(tau=-1)
    with pytest.raises(ValueError):
        MethodParams(epsilon=0)
    with pytest.raises(ValueError):
        MethodParams(variant="unstable")
