"""Manufactured Stokes solution, its data, and discrete error norms.

The velocity is the curl ``(d/dy, -d/dx)`` of the stream function
``phi(x, y) = F(x) F(y)`` with ``F(s) = (1 - cos((1-s)^2)) sin(s^2)``; the
pressure is ``tan(x y)``. All derivatives below are closed forms; the tests
check them against finite differences and sympy.
"""
import math
from dataclasses import dataclass, fields

import numpy as np

from . import forms
from .assembly import SolutionFields, _chunks
from .spaces import bdm_interpolate, legendre_edge, phi_projection, physical_points, psi_projection


def profile(s):
    """F and its first three derivatives at ``s``."""
    s = np.asarray(s, dtype=float)
    r = 1.0 - s
    r2 = r * r
    sr, cr = np.sin(r2), np.cos(r2)
    # a(s) = 1 - cos(r^2), r = 1 - s, differentiated in r then flipped by dr/ds = -1.
    a0 = 1.0 - cr
    a1 = -(2.0 * r * sr)
    a2 = 2.0 * sr + 4.0 * r2 * cr
    a3 = -(12.0 * r * cr - 8.0 * r * r2 * sr)
    s2 = s * s
    ss, cs = np.sin(s2), np.cos(s2)
    b0 = ss
    b1 = 2.0 * s * cs
    b2 = 2.0 * cs - 4.0 * s2 * ss
    b3 = -12.0 * s * ss - 8.0 * s * s2 * cs
    F0 = a0 * b0
    F1 = a1 * b0 + a0 * b1
    F2 = a2 * b0 + 2.0 * a1 * b1 + a0 * b2
    F3 = a3 * b0 + 3.0 * a2 * b1 + 3.0 * a1 * b2 + a0 * b3
    return F0, F1, F2, F3


@dataclass(frozen=True)
class ExactSolution:
    nu: float = 1.0

    def stream(self, x):
        return profile(x[..., 0])[0] * profile(x[..., 1])[0]

    def u(self, x):
        Fx, Fy = profile(x[..., 0]), profile(x[..., 1])
        return np.stack([Fx[0] * Fy[1], -Fx[1] * Fy[0]], axis=-1)

    def grad_u(self, x):
        """``G[..., i, j] = d u_i / d x_j``."""
        Fx, Fy = profile(x[..., 0]), profile(x[..., 1])
        G = np.empty(x.shape[:-1] + (2, 2))
        G[..., 0, 0] = Fx[1] * Fy[1]
        G[..., 0, 1] = Fx[0] * Fy[2]
        G[..., 1, 0] = -Fx[2] * Fy[0]
        G[..., 1, 1] = -Fx[1] * Fy[1]
        return G

    def div_u(self, x):
        G = self.grad_u(x)
        return G[..., 0, 0] + G[..., 1, 1]

    def laplace_u(self, x):
        Fx, Fy = profile(x[..., 0]), profile(x[..., 1])
        return np.stack(
            [Fx[2] * Fy[1] + Fx[0] * Fy[3], -Fx[3] * Fy[0] - Fx[1] * Fy[2]], axis=-1
        )

    def p(self, x):
        return np.tan(x[..., 0] * x[..., 1])

    def grad_p(self, x):
        sec2 = 1.0 / np.cos(x[..., 0] * x[..., 1]) ** 2
        return np.stack([x[..., 1] * sec2, x[..., 0] * sec2], axis=-1)

    def f(self, x):
        return -self.nu * self.laplace_u(x) + self.grad_p(x)

    def g(self, x, n):
        """Normal-normal stress ``nu n . (grad u n) - p``."""
        Gn = np.einsum("...ij,...j->...i", self.grad_u(x), n)
        return self.nu * np.einsum("...i,...i->...", n, Gn) - self.p(x)


def exact_fields(nu=1.0):
    return ExactSolution(nu)


@dataclass
class ErrorReport:
    h: float
    n_dofs: int
    err_u_l2: float
    err_p_l2: float
    err_h1: float
    err_triple: float
    err_triple_full: float

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def compute_errors(solution: SolutionFields, exact: ExactSolution, params) -> ErrorReport:
    """Velocity/pressure L2 errors, broken H1 seminorm, and the two mesh-dependent energy norms."""
    spaces = solution.spaces
    mesh = spaces.mesh
    k = spaces.k
    trule, erule = params.trule, params.erule
    V, P = spaces.velocity, spaces.pressure
    _, _, detB = mesh.affine_maps()
    eu2 = ep2 = eh1 = edge_dn = edge_pen = 0.0
    for els in _chunks(mesh.n_elements):
        x = physical_points(mesh, trule.points, els)
        w = trule.weights[None, :] * detB[els][:, None]
        uh, guh = V.evaluate(solution.u, trule.points, els)
        ph = P.evaluate(solution.p, x, els)
        eu2 += np.sum(w[..., None] * (exact.u(x) - uh) ** 2)
        ep2 += np.sum(w * (exact.p(x) - ph) ** 2)
        per_el_h1 = np.einsum("tq,tqij->t", w, (exact.grad_u(x) - guh) ** 2)
        eh1 += per_el_h1.sum()

        kit = forms.edge_kit(spaces, els, erule)
        c = solution.u[V.local_dofs[els]]
        nb = V.local_dim
        uh_e = np.einsum("teqj,tj->teq", kit.jump[..., :nb], c)  # u_h . t_E
        dn_h = np.einsum("teqjc,tj->teqc", kit.dn[..., :nb, :], c)
        xe = kit.points
        ue = exact.u(xe)
        dn_ex = np.einsum("teqij,tej->teqi", exact.grad_u(xe), kit.normals)
        ee = mesh.element_edges[els]
        idx = mesh.interior_index[ee]
        tc = np.zeros(ee.shape + (k,))
        inside = idx >= 0
        tc[inside] = solution.trace[idx[inside][:, None] * k + np.arange(k)]
        L = np.polynomial.legendre.legvander(2.0 * kit.s_global - 1.0, k - 1)
        trace_h = np.einsum("teqm,tem->teq", L, tc)
        ut_exact = np.einsum("teqc,tec->teq", ue, kit.tangents)
        # Exact multiplier is u . t on every edge (zero on the boundary).
        jump_err = (ut_exact - uh_e) - (ut_exact - trace_h)
        edge_dn += np.sum(mesh.diameters[els][:, None, None] * kit.ds * np.sum((dn_ex - dn_h) ** 2, axis=-1))
        lengths = mesh.lengths[ee]
        mom = forms.projected_moments(jump_err, kit.ds, kit.s_global, lengths, k - 1)
        edge_pen += np.sum((params.tau / mesh.diameters[els])[:, None] * np.sum(mom**2, axis=-1))
    triple = math.sqrt(params.nu * (eh1 + edge_dn + edge_pen))
    err_p = math.sqrt(ep2)
    n_dofs = V.n_dofs + spaces.trace.n_dofs + P.n_dofs
    return ErrorReport(mesh.h, n_dofs, math.sqrt(eu2), err_p, math.sqrt(eh1), triple, triple + err_p / math.sqrt(params.nu))


def interpolate_exact(spaces, exact: ExactSolution, params) -> SolutionFields:
    """Discrete fields built from the exact solution: BDM interpolant, edge projection of u.t, Psi p."""
    mesh = spaces.mesh
    k = spaces.k
    trule, erule = params.trule, params.erule
    u = bdm_interpolate(spaces.velocity, exact.u, erule, trule)
    inner = mesh.interior_edges
    a = mesh.points[mesh.edges[inner, 0]]
    d = mesh.points[mesh.edges[inner, 1]] - a
    pts = a[:, None, :] + erule.points[None, :, None] * d[:, None, :]
    ut = np.einsum("eqc,ec->eq", exact.u(pts), mesh.tangents[inner])
    trace = phi_projection(k - 1, erule, ut).ravel()
    x = physical_points(mesh, trule.points)
    p = psi_projection(spaces.pressure, trule, exact.p(x)).ravel()
    return SolutionFields(u, trace, p, spaces, residual=float("nan"))


def eoc(errors, h=None):
    """Experimental orders ``log(e_{l-1}/e_l) / log(h_{l-1}/h_l)``; the first entry is nan.

    Without ``h`` the meshes are assumed to halve, giving ``log2`` of the ratio.
    Non-positive or non-finite errors give an undefined (nan) order.
    """
    e = np.asarray(errors, dtype=float)
    out = np.full(len(e), np.nan)
    for i in range(1, len(e)):
        a, b = e[i - 1], e[i]
        if not (a > 0 and b > 0 and np.isfinite(a) and np.isfinite(b)):
            continue
        ratio = 2.0 if h is None else h[i - 1] / h[i]
        out[i] = math.log(a / b) / math.log(ratio)
    return out
