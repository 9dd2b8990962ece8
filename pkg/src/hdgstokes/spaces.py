"""Velocity (BDM), pressure (discontinuous P_m) and edge-trace spaces.

The BDM element is built on the reference triangle as the basis dual to its
degrees of freedom:

* edge moments  ``int_E (v . n) L_j(s) ds``, j = 0..k, with ``L_j`` the
  Legendre polynomial in the edge parameter ``s`` in [0, 1];
* for k = 2, interior moments ``int_K v . w`` against the three lowest-order
  Nedelec fields ``(1, 0), (0, 1), (-y, x)``.

The contravariant Piola map leaves edge moments unchanged and the covariant
map applied to the Nedelec fields leaves interior moments unchanged, so a
physical basis function is the pushed-forward reference one times a sign.
On an element edge the sign is ``sigma_{K,E}`` (global vs. outward normal)
times ``(-1)**j`` when the local edge parameter runs against the global one
(lower vertex id -> higher vertex id). Trace functions use the same
parametrisation, so they pick up the same parity factor.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre

from .mesh import Mesh

SUPPORTED_ORDERS = (1, 2)

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# Local edge i runs from vertex (i+1)%3 to (i+2)%3.
REF_EDGE_START = REF_VERTICES[[1, 2, 0]]
REF_EDGE_END = REF_VERTICES[[2, 0, 1]]
REF_EDGE_LENGTHS = np.linalg.norm(REF_EDGE_END - REF_EDGE_START, axis=1)
REF_NORMALS = np.column_stack(
    [(REF_EDGE_END - REF_EDGE_START)[:, 1], -(REF_EDGE_END - REF_EDGE_START)[:, 0]]
) / REF_EDGE_LENGTHS[:, None]


def legendre_edge(j_max, s):
    """Legendre polynomials ``L_j(s) = P_j(2 s - 1)`` for j = 0..j_max, shape (len(s), j_max + 1)."""
    s = np.asarray(s, dtype=float)
    return legendre.legvander(2.0 * s - 1.0, j_max)


def ref_edge_points(i, s):
    s = np.asarray(s, dtype=float)[:, None]
    return REF_EDGE_START[i] + s * (REF_EDGE_END[i] - REF_EDGE_START[i])


def _scalar_monomials(k):
    return [(a, d - a) for d in range(k + 1) for a in range(d, -1, -1)]


def _monomial_vectors(k, pts):
    """Values (nq, nm, 2) and gradients (nq, nm, 2, 2) of the monomial basis of [P_k]^2."""
    x, y = pts[:, 0], pts[:, 1]
    exps = _scalar_monomials(k)
    nq = len(pts)
    val = np.zeros((nq, 2 * len(exps), 2))
    grad = np.zeros((nq, 2 * len(exps), 2, 2))
    for m, (a, b) in enumerate(exps):
        f = x**a * y**b
        fx = a * x ** max(a - 1, 0) * y**b if a else np.zeros(nq)
        fy = b * x**a * y ** max(b - 1, 0) if b else np.zeros(nq)
        for c in range(2):
            val[:, 2 * m + c, c] = f
            grad[:, 2 * m + c, c, 0] = fx
            grad[:, 2 * m + c, c, 1] = fy
    return val, grad


def _nedelec0(pts):
    """Lowest-order Nedelec fields on the reference triangle, (nq, 3, 2)."""
    w = np.zeros((len(pts), 3, 2))
    w[:, 0, 0] = 1.0
    w[:, 1, 1] = 1.0
    w[:, 2, 0] = -pts[:, 1]
    w[:, 2, 1] = pts[:, 0]
    return w


class BDMReference:
    """BDM_k element on the reference triangle, basis dual to its moments."""

    def __init__(self, k):
        if k not in SUPPORTED_ORDERS:
            raise ValueError(f"BDM order {k} not implemented; supported orders are {SUPPORTED_ORDERS}")
        from .quadrature import edge_rule, triangle_rule

        self.k = k
        self.n_edge_dofs = k + 1
        self.n_interior = 3 if k == 2 else 0
        self.dim = (k + 1) * (k + 2)
        D = self.apply_dofs(lambda p: _monomial_vectors(k, p)[0], edge_rule(2 * k + 2), triangle_rule(2 * k + 2))
        self.coeffs = np.linalg.solve(D, np.eye(self.dim))

    def apply_dofs(self, field, erule, trule):
        """Dof functionals applied to ``field(pts) -> (nq, nf, 2)``; returns (ndof, nf)."""
        rows = []
        for i in range(3):
            pts = ref_edge_points(i, erule.points)
            v = field(pts)
            vn = v @ REF_NORMALS[i]
            L = legendre_edge(self.k, erule.points)
            rows.append(np.einsum("q,qj,qf->jf", erule.weights * REF_EDGE_LENGTHS[i], L, vn))
        if self.n_interior:
            v = field(trule.points)
            w = _nedelec0(trule.points)
            rows.append(np.einsum("q,qmc,qfc->mf", trule.weights, w, v))
        return np.vstack(rows)

    def evaluate(self, pts):
        """Reference values (nq, nb, 2), gradients (nq, nb, 2, 2), divergence (nq, nb)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        mv, mg = _monomial_vectors(self.k, pts)
        val = np.einsum("qmc,mj->qjc", mv, self.coeffs)
        grad = np.einsum("qmcd,mj->qjcd", mg, self.coeffs)
        div = grad[..., 0, 0] + grad[..., 1, 1]
        return val, grad, div


@dataclass
class LocalBasisEval:
    """Basis values pushed forward to physical elements, batched as (T, nq, nb, ...)."""

    values: np.ndarray
    gradients: np.ndarray = None
    divergence: np.ndarray = None


def piola(B, detB, val, grad=None, div=None):
    """Contravariant Piola push-forward of reference values for a batch of elements."""
    inv_det = 1.0 / detB
    out_v = np.einsum("t,tcd,qjd->tqjc", inv_det, B, val)
    out_g = out_d = None
    if grad is not None:
        Binv = np.linalg.inv(B)
        out_g = np.einsum("t,tcd,qjde,tef->tqjcf", inv_det, B, grad, Binv)
    if div is not None:
        out_d = inv_det[:, None, None] * div[None]
    return out_v, out_g, out_d


class BDMSpace:
    """Global BDM_k space with signed element-to-dof maps."""

    def __init__(self, mesh: Mesh, k: int):
        self.mesh = mesh
        self.k = k
        self.ref = BDMReference(k)
        T, E = mesh.n_elements, mesh.n_edges
        ne = k + 1
        self.n_edge_dofs = ne * E
        self.n_dofs = self.n_edge_dofs + self.ref.n_interior * T

        tri = mesh.triangles
        reversed_ = tri[:, [1, 2, 0]] > tri[:, [2, 0, 1]]  # local edge param against the global one
        parity = np.where(reversed_[:, :, None] & (np.arange(ne) % 2 == 1)[None, None, :], -1, 1)
        dofs = mesh.element_edges[:, :, None] * ne + np.arange(ne)[None, None, :]
        signs = mesh.signs[:, :, None] * parity
        dofs = dofs.reshape(T, -1)
        signs = signs.reshape(T, -1)
        if self.ref.n_interior:
            idof = self.n_edge_dofs + np.arange(T)[:, None] * self.ref.n_interior + np.arange(self.ref.n_interior)
            dofs = np.hstack([dofs, idof])
            signs = np.hstack([signs, np.ones_like(idof)])
        self.local_dofs = dofs
        self.local_signs = signs.astype(float)
        self.edge_reversed = reversed_

    @property
    def local_dim(self):
        return self.ref.dim

    def basis(self, ref_points, elements=None):
        """Signed, Piola-mapped basis at reference points on the selected elements."""
        B, _, detB = self.mesh.affine_maps()
        signs = self.local_signs
        if elements is not None:
            B, detB, signs = B[elements], detB[elements], signs[elements]
        val, grad, div = self.ref.evaluate(ref_points)
        v, g, d = piola(B, detB, val, grad, div)
        s = signs[:, None, :]
        return LocalBasisEval(v * s[..., None], g * s[..., None, None], d * s)

    def evaluate(self, coeffs, ref_points, elements=None):
        """Field values (T, nq, 2) and gradients (T, nq, 2, 2) of a coefficient vector."""
        ev = self.basis(ref_points, elements)
        c = coeffs[self.local_dofs if elements is None else self.local_dofs[elements]]
        return np.einsum("tqjc,tj->tqc", ev.values, c), np.einsum("tqjcd,tj->tqcd", ev.gradients, c)


class PressureSpace:
    """Discontinuous P_m with monomials about the centroid scaled by 1/h_K."""

    def __init__(self, mesh: Mesh, order: int):
        if order < 0:
            raise ValueError(f"pressure order must be >= 0, got {order}")
        self.mesh = mesh
        self.order = order
        self.exponents = _scalar_monomials(order)
        self.block = len(self.exponents)
        self.n_dofs = mesh.n_elements * self.block
        self.local_dofs = np.arange(self.n_dofs).reshape(mesh.n_elements, self.block)
        self.centroids = mesh.points[mesh.triangles].mean(axis=1)

    def basis_at(self, phys_points, elements=None):
        """Values at physical points (T, nq, nb); ``phys_points`` is (T, nq, 2)."""
        c = self.centroids if elements is None else self.centroids[elements]
        h = self.mesh.diameters if elements is None else self.mesh.diameters[elements]
        X = (phys_points[..., 0] - c[:, None, 0]) / h[:, None]
        Y = (phys_points[..., 1] - c[:, None, 1]) / h[:, None]
        return np.stack([X**a * Y**b for a, b in self.exponents], axis=-1)

    def evaluate(self, coeffs, phys_points, elements=None):
        dofs = self.local_dofs if elements is None else self.local_dofs[elements]
        return np.einsum("tqj,tj->tq", self.basis_at(phys_points, elements), coeffs[dofs])


class TraceSpace:
    """P_{order} on interior edges, zero on the boundary; basis L_j in the global edge parameter."""

    def __init__(self, mesh: Mesh, order: int, edge_reversed: np.ndarray):
        self.mesh = mesh
        self.order = order
        nb = order + 1
        self.block = nb
        self.n_dofs = nb * len(mesh.interior_edges)
        idx = mesh.interior_index[mesh.element_edges]  # (T, 3)
        dofs = np.where(idx[:, :, None] >= 0, idx[:, :, None] * nb + np.arange(nb), -1)
        parity = np.where(edge_reversed[:, :, None] & (np.arange(nb) % 2 == 1), -1.0, 1.0)
        self.local_dofs = dofs.reshape(mesh.n_elements, -1)
        self.local_signs = parity.reshape(mesh.n_elements, -1)


def physical_points(mesh, ref_points, elements=None):
    B, b, _ = mesh.affine_maps()
    if elements is not None:
        B, b = B[elements], b[elements]
    return np.einsum("tcd,qd->tqc", B, ref_points) + b[:, None, :]


def psi_projection(pspace: PressureSpace, rule, values, elements=None):
    """Local L2(K) projection onto P_m of values sampled at ``rule`` points, per element.

    ``values`` is (T, nq). Returns coefficients (T, nb) in the pressure monomial basis.
    """
    pts = physical_points(pspace.mesh, rule.points, elements)
    phi = pspace.basis_at(pts, elements)
    area = pspace.mesh.areas if elements is None else pspace.mesh.areas[elements]
    w = rule.weights[None, :] * (2.0 * area)[:, None]
    M = np.einsum("tq,tqi,tqj->tij", w, phi, phi)
    rhs = np.einsum("tq,tqi,tq->ti", w, phi, values)
    return np.linalg.solve(M, rhs[..., None])[..., 0]


def phi_projection(order, erule, values):
    """L2(E) projection onto P_order of edge samples; Legendre coefficients in the edge parameter.

    ``values`` has the quadrature axis last. The Legendre basis is orthogonal,
    so the coefficient of ``L_j`` is ``(2j+1) * mean(w L_j)``.
    """
    L = legendre_edge(order, erule.points)
    scale = 2.0 * np.arange(order + 1) + 1.0
    return np.einsum("...q,q,qj->...j", values, erule.weights, L) * scale


def bdm_interpolate(space: BDMSpace, u, erule, trule=None):
    """Canonical BDM interpolant: coefficients equal the dof functionals of ``u``.

    ``u`` maps an (..., 2) array of physical points to (..., 2) vectors.
    """
    mesh = space.mesh
    k = space.k
    a = mesh.points[mesh.edges[:, 0]]
    d = mesh.points[mesh.edges[:, 1]] - a
    pts = a[:, None, :] + erule.points[None, :, None] * d[:, None, :]
    un = np.einsum("eqc,ec->eq", u(pts), mesh.normals)
    L = legendre_edge(k, erule.points)
    edge_moments = np.einsum("q,eq,qj->ej", erule.weights, un, L) * mesh.lengths[:, None]
    coeffs = np.zeros(space.n_dofs)
    coeffs[: space.n_edge_dofs] = edge_moments.ravel()
    if space.ref.n_interior:
        if trule is None:
            raise ValueError("interior moments need a triangle rule")
        B, _, detB = mesh.affine_maps()
        x = physical_points(mesh, trule.points)
        w_cov = np.einsum("tdc,qmd->tqmc", np.linalg.inv(B), _nedelec0(trule.points))
        mom = np.einsum("q,t,tqmc,tqc->tm", trule.weights, detB, w_cov, u(x))
        coeffs[space.n_edge_dofs:] = mom.ravel()
    return coeffs


@dataclass
class Spaces:
    """The three discrete spaces for one method variant on one mesh."""

    mesh: Mesh
    k: int
    pressure_order: int

    @cached_property
    def velocity(self):
        return BDMSpace(self.mesh, self.k)

    @cached_property
    def trace(self):
        return TraceSpace(self.mesh, self.k - 1, self.velocity.edge_reversed)

    @cached_property
    def pressure(self):
        return PressureSpace(self.mesh, self.pressure_order)


def make_spaces(mesh, k, variant="stabilised"):
    if variant not in ("stabilised", "baseline"):
        raise ValueError(f"unknown variant {variant!r}")
    if k not in SUPPORTED_ORDERS:
        raise ValueError(f"order k={k} not implemented; supported orders are {SUPPORTED_ORDERS}")
    return Spaces(mesh, k, k if variant == "stabilised" else k - 1)
