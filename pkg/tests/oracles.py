"""Independent symbolic reference computations for the test-suite."""
import sympy as sp

x, y, s = sp.symbols("x y s", real=True)

# Single element (0,0), (1,0), (0,1) with vertex ids 0, 1, 2. Edges in ascending
# vertex-pair order, parametrised from the lower vertex id to the higher one.
VERTS = [(0, 0), (1, 0), (0, 1)]
EDGES = [(0, 1), (0, 2), (1, 2)]


def _edge_geometry(a, b):
    pa, pb = sp.Matrix(VERTS[a]), sp.Matrix(VERTS[b])
    d = pb - pa
    length = sp.sqrt(d.dot(d))
    n = sp.Matrix([d[1], -d[0]]) / length
    centroid = sp.Matrix([sp.Rational(1, 3), sp.Rational(1, 3)])
    if n.dot(pa - centroid) < 0:
        n = -n
    t = sp.Matrix([-n[1], n[0]])
    return pa, d, length, n, t


def bdm1_reference_basis():
    """BDM1 basis dual to the edge moments int_E (v.n) L_j ds, j = 0, 1, in global dof order."""
    cs = sp.symbols("c0:12")
    monos = [sp.Integer(1), x, y]
    fields = []
    for m in monos:
        fields.append(sp.Matrix([m, 0]))
        fields.append(sp.Matrix([0, m]))
    legendre = [sp.Integer(1), 2 * s - 1]
    D = sp.zeros(6, 6)
    for e, (a, b) in enumerate(EDGES):
        pa, d, length, n, _ = _edge_geometry(a, b)
        sub = {x: pa[0] + s * d[0], y: pa[1] + s * d[1]}
        for j, L in enumerate(legendre):
            for m, F in enumerate(fields):
                D[2 * e + j, m] = sp.integrate((F.dot(n)).subs(sub) * L * length, (s, 0, 1))
    C = D.inv()
    return [sum((C[m, i] * fields[m] for m in range(6)), sp.zeros(2, 1)) for i in range(6)]


def _grad(v):
    return sp.Matrix([[sp.diff(v[0], x), sp.diff(v[0], y)], [sp.diff(v[1], x), sp.diff(v[1], y)]])


def a_matrix_reference(nu=1, tau=6, epsilon=-1):
    """a-form on the single reference element, multiplier zero on all (boundary) edges."""
    basis = bdm1_reference_basis()
    h = sp.sqrt(2)
    grads = [_grad(v) for v in basis]
    A = sp.zeros(6, 6)
    for i in range(6):
        for j in range(6):
            vol = sum(grads[i][r, c] * grads[j][r, c] for r in range(2) for c in range(2))
            A[i, j] = nu * sp.integrate(sp.integrate(vol, (y, 0, 1 - x)), (x, 0, 1))
    for a, b in EDGES:
        pa, d, length, n, t = _edge_geometry(a, b)
        sub = {x: pa[0] + s * d[0], y: pa[1] + s * d[1]}
        vt = [basis[i].dot(t).subs(sub) for i in range(6)]
        dnt = [(t.T * grads[i] * n)[0, 0].subs(sub) for i in range(6)]
        means = [sp.integrate(vt[i], (s, 0, 1)) for i in range(6)]
        for i in range(6):
            for j in range(6):
                cons = -nu * sp.integrate(dnt[j] * vt[i] * length, (s, 0, 1))
                adj = epsilon * nu * sp.integrate(vt[j] * dnt[i] * length, (s, 0, 1))
                # Phi^0 is the edge mean: (tau/h) |E| mean_i mean_j.
                pen = nu * tau / h * length * means[i] * means[j]
                A[i, j] += cons + adj + pen
    return A


def stream_function():
    F = lambda z: (1 - sp.cos((1 - z) ** 2)) * sp.sin(z**2)  # noqa: E731
    return F(x) * F(y)


def exact_symbolic(nu=1):
    """Symbolic u, grad u, laplacian, p, f for the manufactured solution."""
    phi = stream_function()
    u = sp.Matrix([sp.diff(phi, y), -sp.diff(phi, x)])
    p = sp.tan(x * y)
    lap = sp.Matrix([sp.diff(u[i], x, 2) + sp.diff(u[i], y, 2) for i in range(2)])
    f = -nu * lap + sp.Matrix([sp.diff(p, x), sp.diff(p, y)])
    return {"phi": phi, "u": u, "grad_u": _grad(u), "lap": lap, "p": p, "f": f}
