"""Direct and iterative solvers for the first-order time-harmonic system.

The unknown is the pair U = (E, H) with E on edges and H on faces.  The
square system stacks three row groups::

    face rows       curl E - i w mu H   = J_m
    interior edges  i w eps E + curl H  = J_e
    boundary edges  tangential E        = f

For grids up to ``DIRECT_LIMIT`` cells per axis the 6N sparse system is
factored once (SuperLU) and reused.  Larger grids eliminate H and solve the
interior curl-curl system matrix-free with GMRES, preconditioned by an exact
constant-coefficient inverse built from fast trigonometric diagonalization.

Assembly uses scipy.sparse Kronecker products; the stencils agree with the
array forms in :mod:`maxnlinv.grid` (the tests pin this).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ResonanceError, SolverError
from .grid import (
    FieldPair,
    Grid,
    VectorField3C,
    apply_tangential_values,
    boundary_edge_masks,
    curl_h,
    edge_shapes,
    face_shapes,
    node_to_edge_average,
    node_to_face_average,
    tangential_trace,
    zeros_edge_field,
    zeros_face_field,
)

log = logging.getLogger(__name__)

DIRECT_LIMIT = 24          # largest n handled by sparse LU
CONDITION_CAP = 1e8        # condition estimate above this flags a resonance
DEFAULT_TOL = 1e-10


# ======================================================================
# sparse operator assembly (kron products of 1D differences)

def _d_fwd(m, h):
    return sp.diags([-np.ones(m), np.ones(m)], [0, 1], shape=(m, m + 1)) / h


def curl_matrix(n):
    """Sparse curl taking stacked edge unknowns to stacked face values."""
    h = 1.0 / n
    Ie, Ic = sp.eye(n + 1), sp.eye(n)

    def D(m):
        return _d_fwd(m, h)

    cx_z = sp.kron(Ie, sp.kron(D(n), Ic))
    cx_y = sp.kron(Ie, sp.kron(Ic, D(n)))
    cy_x = sp.kron(Ic, sp.kron(Ie, D(n)))
    cy_z = sp.kron(D(n), sp.kron(Ie, Ic))
    cz_y = sp.kron(D(n), sp.kron(Ic, Ie))
    cz_x = sp.kron(Ic, sp.kron(D(n), Ie))
    ne = {c: int(np.prod(s)) for c, s in edge_shapes(n).items()}
    nh = {c: int(np.prod(s)) for c, s in face_shapes(n).items()}
    blocks = [
        [sp.csr_matrix((nh["x"], ne["x"])), -cx_y, cx_z],
        [cy_x, sp.csr_matrix((nh["y"], ne["y"])), -cy_z],
        [-cz_x, cz_y, sp.csr_matrix((nh["z"], ne["z"]))],
    ]
    return sp.bmat(blocks, format="csr")


def _interior_mask_flat(grid):
    masks = boundary_edge_masks(grid)
    return ~np.concatenate([masks[c].ravel() for c in "xyz"])


def assemble_first_order_system(grid, omega, eps_edge, mu_face):
    """Square sparse matrix over [E; H] with the three row groups above.

    ``eps_edge``/``mu_face`` are per-component coefficient arrays on the
    field's own staggering.
    """
    n = grid.n
    Cef = curl_matrix(n)
    NE = Cef.shape[1]
    NH = Cef.shape[0]
    mu_diag = sp.diags(np.concatenate([a.ravel() for a in mu_face]))
    eps_diag = sp.diags(np.concatenate([a.ravel() for a in eps_edge]))
    interior = _interior_mask_flat(grid)
    Pint = sp.eye(NE, format="csr")[interior]
    Pbnd = sp.eye(NE, format="csr")[~interior]
    top = sp.hstack([Cef, -1j * omega * mu_diag], format="csr")
    mid = sp.hstack([1j * omega * (Pint @ eps_diag), Pint @ Cef.T.tocsr()],
                    format="csr")
    bot = sp.hstack([Pbnd, sp.csr_matrix((Pbnd.shape[0], NH))], format="csr")
    return sp.vstack([top, mid, bot], format="csc"), interior


# ======================================================================
# constant-coefficient inverse by trigonometric diagonalization

class TrigCurlCurlSolver:
    """Exact solve of ``curl curl E - kappa^2 E = S`` on interior edges with
    zero tangential boundary values and constant coefficients.

    Each edge component is expanded in a half-point cosine basis along its
    own axis and interior sine bases transversally; in that basis the
    operator is block-diagonal with 3x3 blocks ``lam lam^T + (|lam|^2 -
    kappa^2) I - lam lam^T`` whose inverse is available in closed form.
    """

    def __init__(self, n, kappa2):
        self.n, self.h = n, 1.0 / n
        self.kappa2 = kappa2
        i = np.arange(n)
        j = np.arange(1, n)
        p = np.arange(n)
        q = np.arange(1, n)
        Cb = np.cos(np.pi * np.outer(i + 0.5, p) / n)
        Cb /= np.linalg.norm(Cb, axis=0)
        Sb = np.sin(np.pi * np.outer(j, q) / n)
        Sb /= np.linalg.norm(Sb, axis=0)
        self.Cb, self.Sb = Cb, Sb
        lam1 = (2.0 / self.h) * np.sin(np.pi * np.arange(n) / (2 * n))
        lam = np.zeros((3, n, n, n))
        lam[0] = lam1[:, None, None]
        lam[1] = lam1[None, :, None]
        lam[2] = lam1[None, None, :]
        self.lam = lam
        self.lam2 = (lam ** 2).sum(axis=0)
        a = self.lam2 - kappa2
        amin = np.abs(a[np.abs(self.lam2) > 0]).min() if n > 1 else np.inf
        if abs(kappa2) < 1e-14 or amin < 1e-10 * max(abs(kappa2), 1.0):
            raise ResonanceError(
                f"constant-coefficient symbol nearly singular: kappa^2={kappa2:.6g}")
        self.a = a

    def _tx(self, A, Bs, fwd=True):
        out = A
        for ax, B in enumerate(Bs):
            M = B.T if fwd else B
            out = np.moveaxis(
                np.tensordot(M, np.moveaxis(out, ax, 0), axes=(1, 0)), 0, ax)
        return out

    def solve(self, Sx, Sy, Sz):
        """Source on interior edges (full-shape arrays; boundary ignored)."""
        n = self.n
        Cb, Sb = self.Cb, self.Sb
        sx = self._tx(Sx[:, 1:-1, 1:-1], [Cb, Sb, Sb])
        sy = self._tx(Sy[1:-1, :, 1:-1], [Sb, Cb, Sb])
        sz = self._tx(Sz[1:-1, 1:-1, :], [Sb, Sb, Cb])
        s = np.zeros((3, n, n, n), dtype=complex)
        s[0, :, 1:, 1:] = sx
        s[1, 1:, :, 1:] = sy
        s[2, 1:, 1:, :] = sz
        dot = (self.lam * s).sum(axis=0)
        e = s / self.a - self.lam * (dot / (self.a * self.kappa2))
        Ex = np.zeros((n, n + 1, n + 1), dtype=complex)
        Ey = np.zeros((n + 1, n, n + 1), dtype=complex)
        Ez = np.zeros((n + 1, n + 1, n), dtype=complex)
        Ex[:, 1:-1, 1:-1] = self._tx(e[0, :, 1:, 1:], [Cb, Sb, Sb], fwd=False)
        Ey[1:-1, :, 1:-1] = self._tx(e[1, 1:, :, 1:], [Sb, Cb, Sb], fwd=False)
        Ez[1:-1, 1:-1, :] = self._tx(e[2, 1:, 1:, :], [Sb, Sb, Cb], fwd=False)
        return Ex, Ey, Ez


# ======================================================================
# operator and reports

@dataclass
class SolveReport:
    residual: float
    iterations: int
    method: str
    condition_estimate: float | None = None
    c_obs: float | None = None

    def to_dict(self):
        return {
            "residual": self.residual,
            "iterations": self.iterations,
            "method": self.method,
            "condition_estimate": self.condition_estimate,
            "c_obs": self.c_obs,
        }


@dataclass
class LinearMaxwellOperator:
    """Assembled discrete operator for one material profile and frequency."""

    mat: object
    tol: float = DEFAULT_TOL
    method: str = "auto"  # {"auto", "direct", "krylov"}
    _lu: object = field(default=None, repr=False)
    _A: object = field(default=None, repr=False)
    _interior: object = field(default=None, repr=False)
    _trig: object = field(default=None, repr=False)
    _mu_bar: complex = 0.0

    def __post_init__(self):
        g = self.grid
        self.eps_edge = node_to_edge_average(self.mat.epsilon.values)
        self.mu_face = node_to_face_average(self.mat.mu.values)
        if self.method == "auto":
            self.method = "direct" if g.n <= DIRECT_LIMIT else "krylov"
        if self.method not in ("direct", "krylov"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def grid(self):
        return self.mat.grid

    @property
    def omega(self):
        return self.mat.omega

    # ---- lazy backends ------------------------------------------------
    def _ensure_direct(self):
        if self._lu is None:
            A, interior = assemble_first_order_system(
                self.grid, self.omega, self.eps_edge, self.mu_face)
            self._A, self._interior = A, interior
            try:
                self._lu = spla.splu(A)
            except RuntimeError as exc:  # exactly singular factorization
                raise ResonanceError(
                    f"factorization failed at omega={self.omega}: {exc}") from exc
        return self._lu

    def _ensure_trig(self):
        if self._trig is None:
            eps_bar = complex(np.mean([a.mean() for a in self.eps_edge]))
            mu_bar = complex(np.mean([a.mean() for a in self.mu_face]))
            self._mu_bar = mu_bar
            self._trig = TrigCurlCurlSolver(
                self.grid.n, self.omega ** 2 * eps_bar * mu_bar)
        return self._trig

    def condition_estimate(self):
        """1-norm condition estimate of the assembled first-order system."""
        if self.grid.n > DIRECT_LIMIT:
            raise SolverError(
                "condition estimate needs the direct factorization; grid too large")
        lu = self._ensure_direct()
        a_norm = spla.onenormest(self._A)
        inv_op = spla.LinearOperator(
            self._A.shape,
            matvec=lu.solve,
            rmatvec=lambda v: lu.solve(v, trans="H"),
            dtype=complex,
        )
        inv_norm = spla.onenormest(inv_op)
        return float(a_norm * inv_norm)


def assemble_operator(mat, tol=DEFAULT_TOL, method="auto"):
    if mat.omega <= 1e-8:
        raise ResonanceError("frequency must be positive; the static limit is degenerate")
    return LinearMaxwellOperator(mat=mat, tol=tol, method=method)


# ======================================================================
# norms used by reports

def trace_l2_norm(tbf):
    """L2-style surface norm of a tangential boundary field."""
    h2 = tbf.grid.h ** 2
    total = 0.0
    for key in tbf.sides:
        for c in tbf.sides[key]:
            total += float((np.abs(tbf.sides[key][c]) ** 2).sum())
    return float(np.sqrt(h2 * total))


def _field_l2(f):
    h3 = f.grid.h ** 3
    return float(np.sqrt(h3 * sum((np.abs(c) ** 2).sum() for c in f.comps)))


# ======================================================================
# solving

def _interior_slab(c, arr):
    if c == 0:
        return arr[:, 1:-1, 1:-1]
    if c == 1:
        return arr[1:-1, :, 1:-1]
    return arr[1:-1, 1:-1, :]


def _pack_interior(E):
    return np.concatenate([_interior_slab(i, E.comps[i]).ravel() for i in range(3)])


def _unpack_interior(grid, vec):
    E = zeros_edge_field(grid)
    off = 0
    for i in range(3):
        slab = _interior_slab(i, E.comps[i])
        m = slab.size
        slab[...] = vec[off:off + m].reshape(slab.shape)
        off += m
    return E


def _reduced_matvec(op, E):
    """curl (mu^-1 curl E) - w^2 eps E on interior edges, as a full field."""
    CE = curl_h(E)
    scaled = VectorField3C(op.grid, "face",
                           *(CE.comps[i] / op.mu_face[i] for i in range(3)))
    R = curl_h(scaled)  # interior rows; boundary entries zero
    w2 = op.omega ** 2
    out = VectorField3C(op.grid, "edge",
                        *(R.comps[i] - w2 * op.eps_edge[i] * E.comps[i]
                          for i in range(3)))
    # only interior entries are meaningful; zero the boundary to be safe
    masks = boundary_edge_masks(op.grid)
    for i, c in enumerate("xyz"):
        out.comps[i][masks[c]] = 0.0
    return out


def _solve_krylov(op, Jm, Je, f):
    g = op.grid
    trig = op._ensure_trig()
    E_lift = zeros_edge_field(g)
    if f is not None:
        apply_tangential_values(E_lift, f)

    # right-hand side of the reduced system on interior edges
    rhs_f = VectorField3C(g, "face",
                          *(Jm.comps[i] / op.mu_face[i] for i in range(3)))
    S = curl_h(rhs_f)  # interior rows of curl(Jm/mu)
    lift_term = _reduced_matvec(op, E_lift)
    Svec = np.concatenate([
        (_interior_slab(i, S.comps[i])
         + 1j * op.omega * _interior_slab(i, Je.comps[i])
         - _interior_slab(i, lift_term.comps[i])).ravel()
        for i in range(3)
    ])

    def mv(vec):
        return _pack_interior(_reduced_matvec(op, _unpack_interior(g, vec)))

    def pc(vec):
        E = _unpack_interior(g, vec)
        Ex, Ey, Ez = trig.solve(E.x, E.y, E.z)
        out = VectorField3C(g, "edge", Ex, Ey, Ez)
        return op._mu_bar * _pack_interior(out)

    N = Svec.size
    A = spla.LinearOperator((N, N), matvec=mv, dtype=complex)
    M = spla.LinearOperator((N, N), matvec=pc, dtype=complex)
    it = [0]

    def cb(_):
        it[0] += 1

    x, info = spla.gmres(A, Svec, rtol=op.tol, atol=0.0, restart=80,
                         maxiter=8, M=M, callback=cb, callback_type="pr_norm")
    if info > 0:
        raise SolverError(
            f"iterative solve stalled after {it[0]} inner iterations "
            f"(possible resonance near omega={op.omega})")
    E = _unpack_interior(g, x)
    if f is not None:
        apply_tangential_values(E, f)
    CE = curl_h(E)
    H = VectorField3C(g, "face",
                      *((CE.comps[i] - Jm.comps[i]) / (1j * op.omega * op.mu_face[i])
                        for i in range(3)))
    return FieldPair(E, H), it[0]


def _solve_direct(op, Jm, Je, f):
    g = op.grid
    lu = op._ensure_direct()
    interior = op._interior
    je_flat = np.concatenate([c.ravel() for c in Je.comps])
    f_field = zeros_edge_field(g)
    if f is not None:
        apply_tangential_values(f_field, f)
    f_flat = np.concatenate([c.ravel() for c in f_field.comps])
    rhs = np.concatenate([
        np.concatenate([c.ravel() for c in Jm.comps]),
        je_flat[interior],
        f_flat[~interior],
    ])
    x = lu.solve(rhs)
    NE = g.edge_size()
    E = VectorField3C.from_flat(g, "edge", x[:NE])
    H = VectorField3C.from_flat(g, "face", x[NE:])
    return FieldPair(E, H), 0


def _first_order_residual(op, U, Jm, Je, f):
    """Relative residual of the three row groups, computed from stencils."""
    g = op.grid
    w = op.omega
    r1 = curl_h(U.E)
    r1 = [r1.comps[i] - 1j * w * op.mu_face[i] * U.H.comps[i] - Jm.comps[i]
          for i in range(3)]
    CH = curl_h(U.H)
    r2 = [1j * w * op.eps_edge[i] * U.E.comps[i] + CH.comps[i] - Je.comps[i]
          for i in range(3)]
    masks = boundary_edge_masks(g)
    r2n = 0.0
    for i, c in enumerate("xyz"):
        r2n += float((np.abs(r2[i]) ** 2)[~masks[c]].sum())
    h3 = g.h ** 3
    vol = np.sqrt(h3 * (sum(float((np.abs(a) ** 2).sum()) for a in r1) + r2n))
    tr = tangential_trace(U.E)
    bmax = 0.0
    if f is not None:
        for key in f.sides:
            for c in f.sides[key]:
                bmax = max(bmax, float(np.abs(tr.sides[key][c]
                                              - f.sides[key][c]).max()))
    else:
        bmax = tr.max_abs()
    scale = _field_l2(Jm) + _field_l2(Je)
    if f is not None:
        scale += trace_l2_norm(f)
    scale = max(scale, 1e-300)
    return float(vol / scale + bmax / scale)


def _solve(op, Jm, Je, f):
    if op.method == "direct":
        U, iters = _solve_direct(op, Jm, Je, f)
    else:
        U, iters = _solve_krylov(op, Jm, Je, f)
    res = _first_order_residual(op, U, Jm, Je, f)
    if res > 100.0 * op.tol:
        cond = None
        if op.grid.n <= DIRECT_LIMIT:
            cond = op.condition_estimate()
            if cond > CONDITION_CAP:
                raise ResonanceError(
                    f"solve left residual {res:.2e}; condition estimate "
                    f"{cond:.2e} flags omega={op.omega} as resonant")
        raise SolverError(
            f"solve left relative residual {res:.2e} (> 100*tol); "
            f"condition estimate {cond}")
    return U, res, iters


def solve_homogeneous(op, f):
    """Boundary-driven solve: L U = 0 with prescribed tangential E trace."""
    g = op.grid
    zJm = zeros_face_field(g)
    zJe = zeros_edge_field(g)
    U, res, iters = _solve(op, zJm, zJe, f)
    from .grid import norm_W1p
    fn = trace_l2_norm(f)
    c_obs = norm_W1p(U, 4) / fn if fn > 0 else 0.0
    return U, SolveReport(residual=res, iterations=iters, method=op.method,
                          c_obs=c_obs)


def solve_inhomogeneous(op, J_m, J_e):
    """Source-driven solve with zero tangential E trace (the right inverse
    used throughout the fixed-point and series constructions)."""
    U, res, iters = _solve(op, J_m, J_e, None)
    from .grid import norm_W1p
    jn = _field_l2(J_m) + _field_l2(J_e)
    c_obs = norm_W1p(U, 4) / jn if jn > 0 else 0.0
    return U, SolveReport(residual=res, iterations=iters, method=op.method,
                          c_obs=c_obs)


def divergence_defect(op, U):
    """Discrete divergence residuals of a solved pair.

    Returns ``(max |div(mu H)| on cells, max |div(eps E)| at interior
    nodes)``, both normalized by the field scale.  For solutions of the
    source-free system these vanish to roundoff: the face divergence of
    ``mu H`` is the divergence of a discrete curl, and the nodal divergence
    of ``eps E`` is annihilated by the gradient-transpose/curl-transpose
    compatibility of the complex.
    """
    from .grid import div_h

    g = op.grid
    h = g.h
    muH = VectorField3C(g, "face",
                        *(op.mu_face[i] * U.H.comps[i] for i in range(3)))
    d1 = np.abs(div_h(muH).values).max()

    def dpadT(a, ax):
        z_shape = list(a.shape)
        z_shape[ax] = 1
        z = np.zeros(z_shape, dtype=a.dtype)
        return np.diff(np.concatenate([z, a, z], axis=ax), axis=ax) / h

    epsE = [op.eps_edge[i] * U.E.comps[i] for i in range(3)]
    node_div = sum(dpadT(epsE[i], i) for i in range(3))
    d2 = np.abs(node_div[1:-1, 1:-1, 1:-1]).max()
    scale = max(np.abs(c).max() for c in (*U.E.comps, *U.H.comps)) / h
    return float(d1 / scale), float(d2 / scale)


# ======================================================================
# resonance scan

@dataclass
class ResonancePoint:
    omega: float
    condition: float
    flagged: bool

    def to_dict(self):
        return {"omega": self.omega, "condition": self.condition,
                "flagged": self.flagged}


def resonance_scan(mat, omega_range, count):
    """Condition estimates of the assembled system over a frequency grid.

    Spikes locate the discrete resonance set.  Frequencies at or below zero
    are flagged without assembly (the system degenerates there).
    """
    from .materials import MaterialProfile  # noqa: F401  (documented input type)

    lo, hi = omega_range
    omegas = np.linspace(lo, hi, count)
    out = []
    for w in omegas:
        if w <= 1e-8:
            out.append(ResonancePoint(float(w), np.inf, True))
            continue
        probe = LinearMaxwellOperator(
            mat=_with_omega(mat, float(w)), tol=DEFAULT_TOL, method="direct")
        try:
            cond = probe.condition_estimate()
        except ResonanceError:
            cond = np.inf
        out.append(ResonancePoint(float(w), float(cond), bool(cond > CONDITION_CAP)))
    return out


def _with_omega(mat, w):
    from .materials import MaterialProfile
    return MaterialProfile(epsilon=mat.epsilon, mu=mat.mu,
                           lambda_bound=mat.lambda_bound,
                           M_bound=mat.M_bound, omega=w)


# ======================================================================
# analytic reference fields

def plane_wave_fields(grid, omega, direction, polarization):
    """Sampled plane wave (E, H) = (p, (k x p)/omega) * exp(i k.x) with
    k = omega * unit(direction); requires p orthogonal to k."""
    from .grid import sample_on_edges, sample_on_faces

    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    p = np.asarray(polarization, dtype=complex)
    if abs(np.dot(d, p)) > 1e-12 * np.linalg.norm(p):
        raise ValueError("polarization must be orthogonal to the direction")
    k = omega * d
    q = np.cross(k, p) / omega
    idx = {"x": 0, "y": 1, "z": 2}

    def Ef(c, X, Y, Z):
        return p[idx[c]] * np.exp(1j * (k[0] * X + k[1] * Y + k[2] * Z))

    def Hf(c, X, Y, Z):
        return q[idx[c]] * np.exp(1j * (k[0] * X + k[1] * Y + k[2] * Z))

    return FieldPair(sample_on_edges(grid, Ef), sample_on_faces(grid, Hf))
