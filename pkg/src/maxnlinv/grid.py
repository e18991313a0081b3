"""Staggered grid on the unit cube and the discrete vector-calculus operators.

Electric-type fields live on edges, magnetic-type fields on faces, scalars on
nodes or cell centers.  The difference operators form an exact complex:
``curl_h(grad_h(.)) == 0`` and ``div_h(curl_h(.)) == 0`` hold to roundoff,
which the solvers and the boundary-pairing identity rely on.

Component array shapes for ``n`` cells per axis (spacing ``h = 1/n``)::

    edge x: (n, n+1, n+1)     face x: (n+1, n, n)
    edge y: (n+1, n, n+1)     face y: (n, n+1, n)
    edge z: (n+1, n+1, n)     face z: (n, n, n+1)

Flattened vectors always use the component order x, y, z with C ordering
inside each component.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "VectorField3C",
    "ScalarFieldC",
    "TangentialBoundaryField",
    "FieldPair",
    "edge_shapes",
    "face_shapes",
    "zeros_edge_field",
    "zeros_face_field",
    "random_field",
    "curl_h",
    "div_h",
    "grad_h",
    "tangential_trace",
    "apply_tangential_values",
    "norm_W1p",
    "boundary_edge_masks",
    "edge_positions",
    "face_positions",
    "cell_centers",
    "node_positions",
    "edge_to_cell_average",
    "cell_to_edge_average",
    "face_sq_to_cell_average",
    "cell_to_face_average",
    "node_to_cell_average",
    "node_to_edge_average",
    "node_to_face_average",
    "sbp_boundary_pairing",
    "transpose_curl_rows",
    "l2_norm",
]

_EDGE_TANGENT_AXES = {"x": (1, 2), "y": (0, 2), "z": (0, 1)}


def edge_shapes(n):
    return {
        "x": (n, n + 1, n + 1),
        "y": (n + 1, n, n + 1),
        "z": (n + 1, n + 1, n),
    }


def face_shapes(n):
    return {
        "x": (n + 1, n, n),
        "y": (n, n + 1, n),
        "z": (n, n, n + 1),
    }


@dataclass(frozen=True)
class Grid:
    """Uniform staggered grid with ``n`` cells per axis on [0, 1]^3."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid needs at least 2 cells per axis")

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def edge_shapes(self):
        return edge_shapes(self.n)

    @property
    def face_shapes(self):
        return face_shapes(self.n)

    def edge_size(self):
        return sum(int(np.prod(s)) for s in self.edge_shapes.values())

    def face_size(self):
        return sum(int(np.prod(s)) for s in self.face_shapes.values())


@dataclass
class VectorField3C:
    """Complex 3-component field sampled on edges or faces of a grid."""

    grid: Grid
    location: str  # "edge" or "face"
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        if self.location not in ("edge", "face"):
            raise ValueError(f"unknown field location {self.location!r}")
        want = (edge_shapes if self.location == "edge" else face_shapes)(self.grid.n)
        for c in "xyz":
            got = getattr(self, c).shape
            if got != want[c]:
                raise ValueError(
                    f"{self.location} component {c}: shape {got} != {want[c]}"
                )

    @property
    def comps(self):
        return (self.x, self.y, self.z)

    def copy(self):
        return VectorField3C(self.grid, self.location,
                             self.x.copy(), self.y.copy(), self.z.copy())

    def ravel(self):
        return np.concatenate([c.ravel() for c in self.comps])

    def __add__(self, other):
        self._check_like(other)
        return VectorField3C(self.grid, self.location,
                             self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other):
        self._check_like(other)
        return VectorField3C(self.grid, self.location,
                             self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, a):
        return VectorField3C(self.grid, self.location,
                             a * self.x, a * self.y, a * self.z)

    __rmul__ = __mul__

    def _check_like(self, other):
        if self.location != other.location or self.grid.n != other.grid.n:
            raise ValueError("field layout mismatch")

    @classmethod
    def from_flat(cls, grid, location, vec):
        shapes = (edge_shapes if location == "edge" else face_shapes)(grid.n)
        out = []
        off = 0
        for c in "xyz":
            m = int(np.prod(shapes[c]))
            out.append(np.asarray(vec[off:off + m]).reshape(shapes[c]))
            off += m
        return cls(grid, location, *out)


@dataclass
class ScalarFieldC:
    """Complex scalar samples on grid nodes or cell centers."""

    grid: Grid
    location: str  # "node" or "cell"
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        want = (n + 1,) * 3 if self.location == "node" else (n,) * 3
        if self.location not in ("node", "cell"):
            raise ValueError(f"unknown scalar location {self.location!r}")
        if self.values.shape != want:
            raise ValueError(f"scalar field shape {self.values.shape} != {want}")


@dataclass
class TangentialBoundaryField:
    """Tangential field samples on the six faces of the cube boundary.

    ``sides`` maps a side key like ``"x0"`` / ``"x1"`` (the plane x = 0 or
    x = 1) to a dict of the two tangential component arrays, keyed by
    component name.  The normal component is not stored; by construction the
    trace contains no normal part.
    """

    grid: Grid
    location: str  # "edge" for electric-type, "face" for magnetic-type
    sides: dict = field(default_factory=dict)

    def ravel(self):
        out = []
        for key in sorted(self.sides):
            for c in sorted(self.sides[key]):
                out.append(self.sides[key][c].ravel())
        return np.concatenate(out) if out else np.zeros(0, dtype=complex)

    def max_abs(self):
        vals = self.ravel()
        return float(np.abs(vals).max()) if vals.size else 0.0


@dataclass
class FieldPair:
    """An (electric, magnetic) pair on a common grid."""

    E: VectorField3C
    H: VectorField3C

    def __post_init__(self):
        if self.E.location != "edge" or self.H.location != "face":
            raise ValueError("pair must be (edge field, face field)")
        if self.E.grid.n != self.H.grid.n:
            raise ValueError("pair components live on different grids")

    @property
    def grid(self):
        return self.E.grid

    def __add__(self, other):
        return FieldPair(self.E + other.E, self.H + other.H)

    def __sub__(self, other):
        return FieldPair(self.E - other.E, self.H - other.H)

    def __mul__(self, a):
        return FieldPair(a * self.E, a * self.H)

    __rmul__ = __mul__

    def copy(self):
        return FieldPair(self.E.copy(), self.H.copy())


# ======================================================================
# constructors

def zeros_edge_field(grid, dtype=complex):
    sh = edge_shapes(grid.n)
    return VectorField3C(grid, "edge", *(np.zeros(sh[c], dtype=dtype) for c in "xyz"))


def zeros_face_field(grid, dtype=complex):
    sh = face_shapes(grid.n)
    return VectorField3C(grid, "face", *(np.zeros(sh[c], dtype=dtype) for c in "xyz"))


def random_field(grid, location, rng, scale=1.0):
    """Gaussian random complex field; mostly for tests and probes."""
    sh = (edge_shapes if location == "edge" else face_shapes)(grid.n)
    comps = [
        scale * (rng.standard_normal(sh[c]) + 1j * rng.standard_normal(sh[c]))
        for c in "xyz"
    ]
    return VectorField3C(grid, location, *comps)


# ======================================================================
# difference operators

def _curl_edge_to_face(f):
    n = f.grid.n
    h = f.grid.h
    Ex, Ey, Ez = f.comps
    cx = (Ez[:, 1:, :] - Ez[:, :-1, :]) / h - (Ey[:, :, 1:] - Ey[:, :, :-1]) / h
    cy = (Ex[:, :, 1:] - Ex[:, :, :-1]) / h - (Ez[1:, :, :] - Ez[:-1, :, :]) / h
    cz = (Ey[1:, :, :] - Ey[:-1, :, :]) / h - (Ex[:, 1:, :] - Ex[:, :-1, :]) / h
    return VectorField3C(f.grid, "face", cx, cy, cz)


def _curl_face_to_edge(f):
    """Adjoint-patterned curl; boundary-tangential edge entries are left zero.

    The rows on boundary edges belong to the boundary condition in every
    square system assembled here, so the interior stencil never defines them.
    """
    n = f.grid.n
    h = f.grid.h
    Hx, Hy, Hz = f.comps
    out = zeros_edge_field(f.grid)
    out.x[:, 1:-1, 1:-1] = ((Hz[:, 1:, :] - Hz[:, :-1, :])[:, :, 1:-1]
                            - (Hy[:, :, 1:] - Hy[:, :, :-1])[:, 1:-1, :]) / h
    out.y[1:-1, :, 1:-1] = ((Hx[:, :, 1:] - Hx[:, :, :-1])[1:-1, :, :]
                            - (Hz[1:, :, :] - Hz[:-1, :, :])[:, :, 1:-1]) / h
    out.z[1:-1, 1:-1, :] = ((Hy[1:, :, :] - Hy[:-1, :, :])[:, 1:-1, :]
                            - (Hx[:, 1:, :] - Hx[:, :-1, :])[1:-1, :, :]) / h
    return out


def curl_h(f):
    """Discrete curl.  Edge fields map to face fields and vice versa."""
    if f.location == "edge":
        return _curl_edge_to_face(f)
    return _curl_face_to_edge(f)


def div_h(f):
    """Discrete divergence of a face field, valued at cell centers."""
    if f.location != "face":
        raise ValueError("div_h expects a face field")
    h = f.grid.h
    Hx, Hy, Hz = f.comps
    d = ((Hx[1:, :, :] - Hx[:-1, :, :])
         + (Hy[:, 1:, :] - Hy[:, :-1, :])
         + (Hz[:, :, 1:] - Hz[:, :, :-1])) / h
    return ScalarFieldC(f.grid, "cell", d)


def grad_h(s):
    """Discrete gradient of a node scalar, valued on edges."""
    if s.location != "node":
        raise ValueError("grad_h expects a node scalar")
    h = s.grid.h
    v = s.values
    gx = (v[1:, :, :] - v[:-1, :, :]) / h
    gy = (v[:, 1:, :] - v[:, :-1, :]) / h
    gz = (v[:, :, 1:] - v[:, :, :-1]) / h
    return VectorField3C(s.grid, "edge", gx, gy, gz)


# ======================================================================
# boundary structure

def boundary_edge_masks(grid):
    """Boolean masks (component-shaped) marking boundary-tangential edges."""
    masks = {}
    sh = edge_shapes(grid.n)
    for c, axes in _EDGE_TANGENT_AXES.items():
        m = np.zeros(sh[c], dtype=bool)
        for ax in axes:
            idx = [slice(None)] * 3
            idx[ax] = 0
            m[tuple(idx)] = True
            idx[ax] = -1
            m[tuple(idx)] = True
        masks[c] = m
    return masks


def tangential_trace(f):
    """Tangential boundary trace of an edge field.

    Returns the two tangential components on each of the six sides; edge
    samples already sit in the boundary plane so no interpolation happens.
    For a face field the samples half a cell inside each side are returned
    (the natural staggered trace location for magnetic-type fields).
    """
    n = f.grid.n
    sides = {}
    if f.location == "edge":
        comp = {"x": f.x, "y": f.y, "z": f.z}
        for ax, ax_name in enumerate("xyz"):
            tang = [c for c in "xyz" if c != ax_name]
            for end, key in ((0, ax_name + "0"), (-1, ax_name + "1")):
                vals = {}
                for c in tang:
                    idx = [slice(None)] * 3
                    idx[ax] = end
                    vals[c] = comp[c][tuple(idx)].copy()
                sides[key] = vals
        return TangentialBoundaryField(f.grid, "edge", sides)
    # face field: tangential components nearest to each side
    comp = {"x": f.x, "y": f.y, "z": f.z}
    for ax, ax_name in enumerate("xyz"):
        tang = [c for c in "xyz" if c != ax_name]
        for end, key in ((0, ax_name + "0"), (-1, ax_name + "1")):
            vals = {}
            for c in tang:
                idx = [slice(None)] * 3
                idx[ax] = end
                vals[c] = comp[c][tuple(idx)].copy()
            sides[key] = vals
    return TangentialBoundaryField(f.grid, "face", sides)


def apply_tangential_values(f, trace, scale=1.0):
    """Write trace values into the boundary entries of an edge field."""
    if f.location != "edge":
        raise ValueError("needs an edge field")
    comp = {"x": f.x, "y": f.y, "z": f.z}
    for ax, ax_name in enumerate("xyz"):
        for end, key in ((0, ax_name + "0"), (-1, ax_name + "1")):
            side = trace.sides[key]
            for c, vals in side.items():
                idx = [slice(None)] * 3
                idx[ax] = end
                comp[c][tuple(idx)] = scale * vals
    return f


# ======================================================================
# norms and averages

def l2_norm(f, interior_only=False):
    """Cell-weighted l2 norm of a vector field or pair."""
    if isinstance(f, FieldPair):
        return float(np.hypot(l2_norm(f.E, interior_only),
                              l2_norm(f.H, interior_only)))
    h3 = f.grid.h ** 3
    if not interior_only or f.location == "face":
        s = sum((np.abs(c) ** 2).sum() for c in f.comps)
        return float(np.sqrt(h3 * s))
    s = ((np.abs(f.x[:, 1:-1, 1:-1]) ** 2).sum()
         + (np.abs(f.y[1:-1, :, 1:-1]) ** 2).sum()
         + (np.abs(f.z[1:-1, 1:-1, :]) ** 2).sum())
    return float(np.sqrt(h3 * s))


def _w1p_component(arr, h, p):
    terms = [np.abs(arr) ** p]
    for ax in range(3):
        d = np.abs(np.diff(arr, axis=ax)) / h
        terms.append(d ** p)
    return sum(float(t.sum()) for t in terms)


def norm_W1p(f, p=4):
    """Discrete Sobolev norm with first differences, one-sided at the boundary.

    Accepts a vector field or a field pair.  ``p = np.inf`` gives the max of
    values and difference quotients instead.
    """
    if isinstance(f, FieldPair):
        if np.isinf(p):
            return max(norm_W1p(f.E, p), norm_W1p(f.H, p))
        return float((norm_W1p(f.E, p) ** p + norm_W1p(f.H, p) ** p) ** (1.0 / p))
    h = f.grid.h
    if np.isinf(p):
        worst = 0.0
        for arr in f.comps:
            worst = max(worst, float(np.abs(arr).max()))
            for ax in range(3):
                d = np.abs(np.diff(arr, axis=ax)) / h
                if d.size:
                    worst = max(worst, float(d.max()))
        return worst
    total = sum(_w1p_component(arr, h, p) for arr in f.comps)
    return float((h ** 3 * total) ** (1.0 / p))


def edge_to_cell_average(f):
    """Average each edge component to cell centers (4 neighbouring edges)."""
    out = []
    for ax, arr in enumerate(f.comps):
        a = arr
        for other in range(3):
            if other == ax:
                continue
            a = 0.5 * (np.take(a, range(0, a.shape[other] - 1), axis=other)
                       + np.take(a, range(1, a.shape[other]), axis=other))
        out.append(a)
    return out


def cell_to_edge_average(cell_vals, grid):
    """Average a cell array back onto the three edge layouts (adjoint stencil).

    Boundary edges average only the adjacent existing cells.
    """
    n = grid.n
    padded = np.pad(cell_vals, 1, mode="edge")
    out = []
    for ax in range(3):
        a = padded
        for other in range(3):
            if other == ax:
                continue
            a = 0.5 * (np.take(a, range(0, a.shape[other] - 1), axis=other)
                       + np.take(a, range(1, a.shape[other]), axis=other))
        sl = [slice(1, -1)] * 3
        sl[ax] = slice(1, -1)
        # after the two transverse averages the transverse axes have n+1
        # entries aligned with edges; the longitudinal axis keeps n+2 and
        # needs its padding stripped
        take = [slice(None)] * 3
        take[ax] = slice(1, n + 1)
        out.append(a[tuple(take)])
    return out


def face_sq_to_cell_average(f):
    """Average |component|^2 of a face field to cell centers (2 faces each)."""
    out = []
    for ax, arr in enumerate(f.comps):
        a = np.abs(arr) ** 2
        a = 0.5 * (np.take(a, range(0, a.shape[ax] - 1), axis=ax)
                   + np.take(a, range(1, a.shape[ax]), axis=ax))
        out.append(a)
    return out


def cell_to_face_average(cell_vals, grid):
    """Average a cell array onto the three face layouts (2 cells per face)."""
    n = grid.n
    padded = np.pad(cell_vals, 1, mode="edge")
    out = []
    for ax in range(3):
        a = 0.5 * (np.take(padded, range(0, n + 1), axis=ax)
                   + np.take(padded, range(1, n + 2), axis=ax))
        take = [slice(1, -1)] * 3
        take[ax] = slice(None)
        out.append(a[tuple(take)])
    return out


def node_to_cell_average(node_vals):
    """Average node samples to cell centers (8 nodes per cell)."""
    a = node_vals
    for ax in range(3):
        a = 0.5 * (np.take(a, range(0, a.shape[ax] - 1), axis=ax)
                   + np.take(a, range(1, a.shape[ax]), axis=ax))
    return a


def node_to_edge_average(node_vals):
    """Average node samples onto the three edge layouts (2 nodes per edge)."""
    out = []
    for ax in range(3):
        a = 0.5 * (np.take(node_vals, range(0, node_vals.shape[ax] - 1), axis=ax)
                   + np.take(node_vals, range(1, node_vals.shape[ax]), axis=ax))
        out.append(a)
    return out


def node_to_face_average(node_vals):
    """Average node samples onto the three face layouts (4 nodes per face)."""
    out = []
    for ax in range(3):
        a = node_vals
        for other in range(3):
            if other == ax:
                continue
            a = 0.5 * (np.take(a, range(0, a.shape[other] - 1), axis=other)
                       + np.take(a, range(1, a.shape[other]), axis=other))
        out.append(a)
    return out


# ======================================================================
# positions

def _axes(n):
    h = 1.0 / n
    return np.arange(n + 1) * h, (np.arange(n) + 0.5) * h


def edge_positions(grid, c):
    g_int, g_half = _axes(grid.n)
    if c == "x":
        return np.meshgrid(g_half, g_int, g_int, indexing="ij")
    if c == "y":
        return np.meshgrid(g_int, g_half, g_int, indexing="ij")
    return np.meshgrid(g_int, g_int, g_half, indexing="ij")


def face_positions(grid, c):
    g_int, g_half = _axes(grid.n)
    if c == "x":
        return np.meshgrid(g_int, g_half, g_half, indexing="ij")
    if c == "y":
        return np.meshgrid(g_half, g_int, g_half, indexing="ij")
    return np.meshgrid(g_half, g_half, g_int, indexing="ij")


def cell_centers(grid):
    _, g_half = _axes(grid.n)
    return np.meshgrid(g_half, g_half, g_half, indexing="ij")


def node_positions(grid):
    g_int, _ = _axes(grid.n)
    return np.meshgrid(g_int, g_int, g_int, indexing="ij")


def sample_on_edges(grid, fun):
    """Sample ``fun(component, X, Y, Z)`` on the three edge layouts."""
    comps = [fun(c, *edge_positions(grid, c)) for c in "xyz"]
    comps = [np.asarray(a, dtype=complex) for a in comps]
    return VectorField3C(grid, "edge", *comps)


def sample_on_faces(grid, fun):
    comps = [fun(c, *face_positions(grid, c)) for c in "xyz"]
    comps = [np.asarray(a, dtype=complex) for a in comps]
    return VectorField3C(grid, "face", *comps)


# ======================================================================
# summation-by-parts pairing

def sbp_boundary_pairing(e, hf):
    """Discrete boundary term of the curl pairing, bilinear convention.

    Returns ``h^3 * sum(e_bnd * rows_bnd)`` where ``rows_bnd`` are the
    boundary-edge rows of the transposed edge-to-face curl applied to ``hf``.
    By the transpose identity this equals

        h^3 * (<curl_h e, hf>_faces - <e, curl_h hf>_edges)

    exactly (the interior rows of the transpose are the face-to-edge curl),
    so the value only involves ``e`` on boundary edges and ``hf`` on faces
    within one layer of the wall.  No conjugation is applied to either
    argument; conjugate beforehand if a sesquilinear pairing is wanted.
    """
    h3 = e.grid.h ** 3
    masks = boundary_edge_masks(e.grid)
    rows = transpose_curl_rows(hf)
    return h3 * sum(
        (e.comps[i][masks[c]] * rows[i][masks[c]]).sum()
        for i, c in enumerate("xyz")
    )


def transpose_curl_rows(hf):
    """All rows of the transposed edge-to-face curl applied to a face field.

    Interior entries coincide with ``curl_h`` of the face field; boundary
    entries carry the one-sided stencils that feed the boundary pairing.
    """
    h = hf.grid.h
    Hx, Hy, Hz = hf.comps

    def dpad(a, ax):
        # transpose of the forward difference: -diff of the zero-padded array
        z_shape = list(a.shape)
        z_shape[ax] = 1
        z = np.zeros(z_shape, dtype=a.dtype)
        return -np.diff(np.concatenate([z, a, z], axis=ax), axis=ax) / h

    return [
        dpad(Hy, 2) - dpad(Hz, 1),
        dpad(Hz, 0) - dpad(Hx, 2),
        dpad(Hx, 1) - dpad(Hy, 0),
    ]
