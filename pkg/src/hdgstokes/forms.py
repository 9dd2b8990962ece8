"""Element-local matrices for the bilinear forms a, b, s and the load vectors.

Everything is batched over a set of elements: arrays carry a leading
element axis. The local (u, u~) space of an element stacks its
``(k+1)(k+2)`` signed BDM functions followed by ``k`` trace functions for
each of its three edges (boundary-edge trace slots are computed but never
scattered, which is how u~ = 0 on the boundary enters).

Tangential quantities use the global edge tangent on both sides of an edge,
so the multiplier approximates ``u . t_E`` as a single-valued function.
"""
from dataclasses import dataclass

import numpy as np

from .quadrature import edge_rule, triangle_rule
from .spaces import legendre_edge, physical_points, ref_edge_points

VARIANTS = ("stabilised", "baseline")


@dataclass(frozen=True)
class MethodParams:
    nu: float = 1.0
    epsilon: int = -1
    tau: float = 6.0
    k: int = 1
    variant: str = "stabilised"
    quad_degree: int = 12
    edge_degree: int = 6

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got nu={self.nu}")
        if not self.tau > 0:
            raise ValueError(f"penalty parameter must be positive, got tau={self.tau}")
        if self.epsilon not in (-1, 1):
            raise ValueError(f"epsilon must be -1 or +1, got {self.epsilon}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    @property
    def pressure_order(self):
        return self.k if self.variant == "stabilised" else self.k - 1

    @property
    def trule(self):
        return triangle_rule(self.quad_degree)

    @property
    def erule(self):
        return edge_rule(self.edge_degree)


@dataclass
class EdgeKit:
    """Basis data on the three edges of each element in a batch."""

    jump: np.ndarray  # (T, 3, q, nl): (v)_t - v~ for every local (u, u~) function
    dn_t: np.ndarray  # (T, 3, q, nl): t . (grad v n)
    dn: np.ndarray  # (T, 3, q, nl, 2): grad v n (velocity functions only, zero for traces)
    vn: np.ndarray  # (T, 3, q, nl): v . n_outward
    ds: np.ndarray  # (T, 3, q): physical quadrature weights
    points: np.ndarray  # (T, 3, q, 2) physical points
    normals: np.ndarray  # (T, 3, 2) outward
    tangents: np.ndarray  # (T, 3, 2) global edge tangents
    s_global: np.ndarray  # (T, 3, q) global edge parameter of each point


def edge_kit(spaces, elements, erule):
    mesh = spaces.mesh
    V, M = spaces.velocity, spaces.trace
    k = spaces.k
    nb = V.local_dim
    nl = nb + 3 * k
    T = len(elements)
    nq = len(erule.points)
    ee = mesh.element_edges[elements]
    normals = mesh.signs[elements][..., None] * mesh.normals[ee]
    tangents = mesh.tangents[ee]
    jump = np.zeros((T, 3, nq, nl))
    dn_t = np.zeros((T, 3, nq, nl))
    dn = np.zeros((T, 3, nq, nl, 2))
    vn = np.zeros((T, 3, nq, nl))
    pts = np.zeros((T, 3, nq, 2))
    L = legendre_edge(max(k - 1, 0), erule.points)[:, :k]
    tsig = M.local_signs[elements].reshape(T, 3, k)
    rev = V.edge_reversed[elements]
    for i in range(3):
        ref = ref_edge_points(i, erule.points)
        ev = V.basis(ref, elements)
        n = normals[:, i]
        t = tangents[:, i]
        grad_n = np.einsum("tqjcd,td->tqjc", ev.gradients, n)
        dn[:, i, :, :nb] = grad_n
        dn_t[:, i, :, :nb] = np.einsum("tqjc,tc->tqj", grad_n, t)
        jump[:, i, :, :nb] = np.einsum("tqjc,tc->tqj", ev.values, t)
        vn[:, i, :, :nb] = np.einsum("tqjc,tc->tqj", ev.values, n)
        jump[:, i, :, nb + i * k : nb + (i + 1) * k] = -tsig[:, i, None, :] * L[None]
        pts[:, i] = physical_points(mesh, ref, elements)
    ds = erule.weights[None, None, :] * mesh.lengths[ee][..., None]
    s_global = np.where(rev[..., None], 1.0 - erule.points, erule.points[None, None, :])
    return EdgeKit(jump, dn_t, dn, vn, ds, pts, normals, tangents, s_global)


def a_terms(spaces, params, elements, erule=None, trule=None):
    """The four contributions to the local a-matrix, each (T, nl, nl).

    Row index = test function, column index = trial function.
    """
    erule = erule or params.erule
    trule = trule or params.trule
    mesh = spaces.mesh
    V = spaces.velocity
    k = spaces.k
    nb = V.local_dim
    nl = nb + 3 * k
    nu = params.nu
    T = len(elements)

    ev = V.basis(trule.points, elements)
    _, _, detB = mesh.affine_maps()
    wK = trule.weights[None, :] * detB[elements][:, None]
    volume = np.zeros((T, nl, nl))
    volume[:, :nb, :nb] = nu * np.einsum("tq,tqicd,tqjcd->tij", wK, ev.gradients, ev.gradients)

    kit = edge_kit(spaces, elements, erule)
    consistency = -nu * np.einsum("teq,teqi,teqj->tij", kit.ds, kit.jump, kit.dn_t)
    adjoint = params.epsilon * nu * np.einsum("teq,teqi,teqj->tij", kit.ds, kit.dn_t, kit.jump)

    lengths = mesh.lengths[mesh.element_edges[elements]]
    mom = projected_moments(kit.jump, kit.ds, kit.s_global, lengths, k - 1)
    h = mesh.diameters[elements]
    penalty = (nu * params.tau / h)[:, None, None] * np.einsum("temi,temj->tij", mom, mom)
    return {"volume": volume, "consistency": consistency, "adjoint": adjoint, "penalty": penalty}


def projected_moments(values, ds, s_global, lengths, order):
    """Normalised Legendre moments so that ``sum_m mom_m^2 = ||Phi^order(values)||^2_E``.

    ``values`` is (T, 3, q, ...). With the orthogonal Legendre basis
    ``||L_m||^2_E = |E| / (2m + 1)``, so the moment against ``L_m`` divided by
    ``sqrt(|E| / (2m+1))`` gives the coefficient in an orthonormal basis.
    """
    L = np.polynomial.legendre.legvander(2.0 * s_global - 1.0, order)  # (T, 3, q, order+1)
    raw = np.einsum("teq,teqm,teq...->tem...", ds, L, values)
    norm = np.sqrt(lengths[..., None] / (2.0 * np.arange(order + 1) + 1.0))
    extra = raw.ndim - 3
    return raw / norm.reshape(norm.shape + (1,) * extra)


def local_a(spaces, params, elements, erule=None, trule=None):
    terms = a_terms(spaces, params, elements, erule, trule)
    return terms["volume"] + terms["consistency"] + terms["adjoint"] + terms["penalty"]


def local_b(spaces, params, elements, trule=None):
    """b-block (T, n_p, nb): entries ``-int_K q_i div v_j``."""
    trule = trule or params.trule
    mesh = spaces.mesh
    ev = spaces.velocity.basis(trule.points, elements)
    x = physical_points(mesh, trule.points, elements)
    q = spaces.pressure.basis_at(x, elements)
    _, _, detB = mesh.affine_maps()
    wK = trule.weights[None, :] * detB[elements][:, None]
    return -np.einsum("tq,tqi,tqj->tij", wK, q, ev.divergence)


def pressure_mass(spaces, elements, trule):
    mesh = spaces.mesh
    x = physical_points(mesh, trule.points, elements)
    q = spaces.pressure.basis_at(x, elements)
    _, _, detB = mesh.affine_maps()
    wK = trule.weights[None, :] * detB[elements][:, None]
    return np.einsum("tq,tqi,tqj->tij", wK, q, q)


def local_s(spaces, params, elements, trule=None):
    """Stabiliser (1/nu) int (p - Psi p)(q - Psi q) with Psi onto P_{k-1}; zero for the baseline."""
    trule = trule or params.trule
    P = spaces.pressure
    T = len(elements)
    if params.variant == "baseline":
        return np.zeros((T, P.block, P.block))
    M = pressure_mass(spaces, elements, trule)
    m1 = (spaces.k) * (spaces.k + 1) // 2  # dim P_{k-1}, the leading monomials
    M11 = M[:, :m1, :m1]
    M1 = M[:, :m1, :]
    proj = np.linalg.solve(M11, M1)  # coefficients of Psi q in the P_{k-1} monomials
    S = M - np.einsum("tai,tab->tib", M1, proj)
    S = 0.5 * (S + np.transpose(S, (0, 2, 1)))
    return S / params.nu


def local_rhs(spaces, params, elements, f, trule=None):
    """Load vector (T, nb): ``int_K f . v_j``; ``f`` maps (..., 2) points to (..., 2)."""
    trule = trule or params.trule
    mesh = spaces.mesh
    ev = spaces.velocity.basis(trule.points, elements)
    x = physical_points(mesh, trule.points, elements)
    _, _, detB = mesh.affine_maps()
    wK = trule.weights[None, :] * detB[elements][:, None]
    return np.einsum("tq,tqjc,tqc->tj", wK, ev.values, f(x))


def boundary_rhs(spaces, params, g, erule=None):
    """Flux data on boundary edges: ``int_E g (v_j . n)`` for the owning element's local functions.

    Returns ``(elements, G)`` with G of shape (n_boundary_edges, nb) and
    ``g`` mapping points (..., 2) and outward normals (..., 2) to values (...).
    """
    erule = erule or params.erule
    mesh = spaces.mesh
    V = spaces.velocity
    bnd = mesh.boundary_edges
    owners = mesh.edge_elements[bnd, 0]
    local = np.argmax(mesh.element_edges[owners] == bnd[:, None], axis=1)
    nb = V.local_dim
    G = np.zeros((len(bnd), nb))
    for i in range(3):
        sel = np.flatnonzero(local == i)
        if len(sel) == 0:
            continue
        els = owners[sel]
        ref = ref_edge_points(i, erule.points)
        ev = V.basis(ref, els)
        x = physical_points(mesh, ref, els)
        n = mesh.normals[bnd[sel]]  # outward on the boundary
        vn = np.einsum("tqjc,tc->tqj", ev.values, n)
        gv = g(x, np.broadcast_to(n[:, None, :], x.shape))
        ds = erule.weights[None, :] * mesh.lengths[bnd[sel]][:, None]
        G[sel] = np.einsum("tq,tq,tqj->tj", ds, gv, vn)
    return owners, G
