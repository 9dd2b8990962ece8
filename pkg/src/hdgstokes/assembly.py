"""Global saddle-point system ``[[A, B^T], [B, -S]]`` and its direct solution."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forms
from .forms import MethodParams
from .spaces import Spaces, legendre_edge, make_spaces, physical_points

CHUNK = 8192


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class DofLayout:
    n_u: int
    n_trace: int
    n_p: int

    @property
    def u_slice(self):
        return slice(0, self.n_u)

    @property
    def trace_slice(self):
        return slice(self.n_u, self.n_u + self.n_trace)

    @property
    def p_slice(self):
        return slice(self.n_u + self.n_trace, self.size)

    @property
    def size(self):
        return self.n_u + self.n_trace + self.n_p


@dataclass
class GlobalSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    layout: DofLayout
    params: MethodParams
    spaces: Spaces

    def dump(self, path):
        """Coordinate text dump, ``row col value`` per line, 0-based."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {float(v)!r}\n")


def layout_for(spaces):
    return DofLayout(spaces.velocity.n_dofs, spaces.trace.n_dofs, spaces.pressure.n_dofs)


def _chunks(n, size=CHUNK):
    for start in range(0, n, size):
        yield np.arange(start, min(start + size, n))


def _scatter(rows, cols, blocks):
    """Flatten a batch of dense blocks with row/col index arrays, dropping ``-1`` slots."""
    R = np.broadcast_to(rows[:, :, None], blocks.shape)
    C = np.broadcast_to(cols[:, None, :], blocks.shape)
    keep = (R >= 0) & (C >= 0)
    return R[keep], C[keep], blocks[keep]


def assemble(mesh, params: MethodParams, f=None, g=None, spaces=None):
    """Assemble the global matrix and right-hand side.

    ``f(x) -> (..., 2)`` is the body force, ``g(x, n) -> (...)`` the normal
    flux data on the boundary; either may be None for zero data.
    """
    if spaces is None:
        spaces = make_spaces(mesh, params.k, params.variant)
    elif spaces.pressure_order != params.pressure_order or spaces.k != params.k:
        raise ValueError("spaces do not match the requested method variant")
    layout = layout_for(spaces)
    V, M, P = spaces.velocity, spaces.trace, spaces.pressure
    off_t = layout.n_u
    off_p = layout.n_u + layout.n_trace

    rows, cols, vals = [], [], []
    rhs = np.zeros(layout.size)
    for els in _chunks(mesh.n_elements):
        trace_dofs = M.local_dofs[els]
        uv = np.hstack([V.local_dofs[els], np.where(trace_dofs >= 0, trace_dofs + off_t, -1)])
        pd = P.local_dofs[els] + off_p

        A = forms.local_a(spaces, params, els)
        Bl = forms.local_b(spaces, params, els)
        S = forms.local_s(spaces, params, els)

        for r, c, v in (_scatter(uv, uv, A), _scatter(pd, V.local_dofs[els], Bl),
                        _scatter(V.local_dofs[els], pd, np.transpose(Bl, (0, 2, 1))), _scatter(pd, pd, -S)):
            rows.append(r)
            cols.append(c)
            vals.append(v)
        if f is not None:
            F = forms.local_rhs(spaces, params, els, f)
            np.add.at(rhs, V.local_dofs[els].ravel(), F.ravel())
    if g is not None:
        owners, G = forms.boundary_rhs(spaces, params, g)
        np.add.at(rhs, V.local_dofs[owners].ravel(), G.ravel())

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(layout.size,) * 2
    ).tocsr()
    matrix.sum_duplicates()
    return GlobalSystem(matrix, rhs, layout, params, spaces)


def apply_operator(system: GlobalSystem, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (system.layout.size,):
        raise ValueError(f"vector of shape {x.shape} does not match system size {system.layout.size}")
    return system.matrix @ x


def is_symmetric(matrix, rtol=1e-10):
    diff = abs(matrix - matrix.T)
    dmax = diff.max() if diff.nnz else 0.0
    return dmax <= rtol * abs(matrix).max()


@dataclass
class SolutionFields:
    u: np.ndarray
    trace: np.ndarray
    p: np.ndarray
    spaces: Spaces
    residual: float

    def velocity_at(self, ref_points, elements=None):
        """Velocity values (T, nq, 2) and gradients at reference points of each element."""
        return self.spaces.velocity.evaluate(self.u, ref_points, elements)

    def pressure_at(self, ref_points, elements=None):
        x = physical_points(self.spaces.mesh, ref_points, elements)
        return self.spaces.pressure.evaluate(self.p, x, elements)

    def trace_at(self, edges, s):
        """Multiplier values on the given edges at global edge parameters ``s``; zero on the boundary."""
        mesh = self.spaces.mesh
        edges = np.asarray(edges)
        k = self.spaces.k
        idx = mesh.interior_index[edges]
        L = legendre_edge(k - 1, s)  # (nq, k)
        coeffs = np.zeros((len(edges), k))
        inside = idx >= 0
        coeffs[inside] = self.trace[(idx[inside, None] * k + np.arange(k))]
        return coeffs @ L.T

    def locate(self, points):
        """Element index and reference coordinates of physical points."""
        return locate_points(self.spaces.mesh, points)

    def velocity(self, points):
        els, ref = self.locate(points)
        out = np.empty((len(els), 2))
        for i, (K, xh) in enumerate(zip(els, ref)):
            out[i] = self.velocity_at(xh[None], np.array([K]))[0][0, 0]
        return out

    def pressure(self, points):
        els, ref = self.locate(points)
        return np.array([self.pressure_at(xh[None], np.array([K]))[0, 0] for K, xh in zip(els, ref)])


def locate_points(mesh, points, tol=1e-12):
    from scipy.spatial import cKDTree

    points = np.atleast_2d(np.asarray(points, dtype=float))
    B, b, _ = mesh.affine_maps()
    Binv = np.linalg.inv(B)
    centroids = mesh.points[mesh.triangles].mean(axis=1)
    tree = cKDTree(centroids)
    nnb = min(12, mesh.n_elements)
    _, cand = tree.query(points, k=nnb)
    cand = np.atleast_2d(cand).reshape(len(points), nnb)
    els = np.empty(len(points), dtype=np.int64)
    ref = np.empty((len(points), 2))
    for i, x in enumerate(points):
        for K in cand[i]:
            xh = Binv[K] @ (x - b[K])
            if xh.min() >= -tol and xh.sum() <= 1.0 + tol:
                els[i], ref[i] = K, xh
                break
        else:
            raise ValueError(f"point {x} is outside the mesh")
    return els, ref


def solve(system: GlobalSystem, check=1e-8):
    """Sparse LU (SuperLU, COLAMD ordering) solve of the saddle-point system."""
    A = system.matrix.tocsc()
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        diag = np.abs(A.diagonal())
        raise SolverError(
            f"factorization of the {A.shape[0]}x{A.shape[0]} system failed ({exc}); "
            f"{int((diag == 0).sum())} zero diagonal entries, dof layout {system.layout}"
        ) from exc
    x = lu.solve(system.rhs)
    if not np.all(np.isfinite(x)):
        raise SolverError("solution contains non-finite entries")
    res = np.linalg.norm(system.matrix @ x - system.rhs)
    scale = np.linalg.norm(system.rhs)
    if res > check * max(scale, np.finfo(float).tiny) and res > 1e-14:
        raise SolverError(f"residual {res:.3e} exceeds {check:g} * ||rhs|| = {check * scale:.3e}")
    lay = system.layout
    return SolutionFields(x[lay.u_slice].copy(), x[lay.trace_slice].copy(), x[lay.p_slice].copy(),
                          system.spaces, float(res))
