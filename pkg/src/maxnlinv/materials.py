"""Material profiles and intensity-dependent susceptibility laws.

A law stores the series coefficients of two scalar responses, one driven by
the electric intensity and one by the magnetic intensity::

    X(x, s) = sum_k a_k(x) s^k        Y(x, s) = sum_k b_k(x) s^k

with ``s`` the pointwise squared field magnitude.  Closed forms are kept for
the two standard cases (cubic/Kerr and saturable) so series truncation never
enters where an exact evaluation exists.

The full nonlinear forcing of a field pair U = (E, H) is

    F(U) = ( Y(|H|^2) H ,  -X(|E|^2) E )

returned with the magnetic forcing in the face slot and the electric forcing
in the edge slot, matching the block rows of the first-order operator.  All
intensities are formed at cell centers (edge/face squares averaged inward)
and the evaluated response is averaged back onto the field's own staggering
before multiplying -- this keeps every product single-located and
second-order accurate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grid import (
    FieldPair,
    Grid,
    ScalarFieldC,
    VectorField3C,
    cell_centers,
    cell_to_edge_average,
    cell_to_face_average,
    edge_to_cell_average,
    face_sq_to_cell_average,
    node_positions,
    node_to_cell_average,
    norm_W1p,
)

log = logging.getLogger(__name__)

K_MAX_DEFAULT = 12


# ======================================================================
# coefficient field constructors

def constant_coefficient(grid, value):
    """Node-located scalar field with a single constant value."""
    vals = np.full((grid.n + 1,) * 3, value, dtype=complex)
    return ScalarFieldC(grid, "node", vals)


def gaussian_bump_coefficient(grid, amplitude, width, center=(0.5, 0.5, 0.5)):
    """Isotropic Gaussian profile; ``width`` is the standard deviation."""
    X, Y, Z = node_positions(grid)
    r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2 + (Z - center[2]) ** 2
    vals = amplitude * np.exp(-0.5 * r2 / width ** 2)
    return ScalarFieldC(grid, "node", vals.astype(complex))


def polynomial_coefficient(grid, coeffs_xyz):
    """Separable polynomial profile: product over axes of sum_j c_j t^j."""
    X, Y, Z = node_positions(grid)
    vals = np.ones_like(X, dtype=complex)
    for t, cs in zip((X, Y, Z), coeffs_xyz):
        vals = vals * sum(c * t ** j for j, c in enumerate(cs))
    return ScalarFieldC(grid, "node", vals)


# ======================================================================
# domain types

@dataclass(frozen=True)
class MaterialProfile:
    """Linear material data: permittivity/permeability node samples plus the
    structural constants (ellipticity floor, regularity cap, frequency)."""

    epsilon: ScalarFieldC
    mu: ScalarFieldC
    lambda_bound: float
    M_bound: float
    omega: float

    def __post_init__(self):
        if self.epsilon.location != "node" or self.mu.location != "node":
            raise ValueError("material samples must be node-located")
        if self.omega <= 0 or self.lambda_bound <= 0 or self.M_bound <= 0:
            raise ValueError("omega, lambda_bound, M_bound must be positive")

    @property
    def grid(self):
        return self.epsilon.grid


def vacuum_material(grid, omega, lambda_bound=0.5, M_bound=10.0):
    return MaterialProfile(
        epsilon=constant_coefficient(grid, 1.0),
        mu=constant_coefficient(grid, 1.0),
        lambda_bound=lambda_bound,
        M_bound=M_bound,
        omega=omega,
    )


@dataclass
class NonlinearLaw:
    """Series representation of the intensity responses X (electric) and
    Y (magnetic), with optional exact closed form."""

    grid: Grid
    a_coeffs: list  # node ScalarFieldC, index j holds the degree-(j+1) term
    b_coeffs: list
    s0: float
    M_bound: float
    closed_form: str | None = None  # {"kerr", "saturable", None}
    cf_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.s0 <= 0 or self.M_bound <= 0:
            raise ValueError("s0 and M_bound must be positive")
        for f in (*self.a_coeffs, *self.b_coeffs):
            if f.location != "node" or f.grid.n != self.grid.n:
                raise ValueError("coefficient fields must be node-located on the law grid")

    @property
    def k_max(self):
        return max(len(self.a_coeffs), len(self.b_coeffs))

    def tail_bound(self, s):
        """Geometric bound on the truncated series remainder at intensity s.

        The envelope condition gives coefficient norms at most M·s0^(1-k), so
        the tail after K terms is bounded by M·s0·(s/s0)^(K+1)/(1-s/s0).
        """
        s = float(np.max(s))
        if s >= self.s0:
            return np.inf
        r = s / self.s0
        return self.M_bound * self.s0 * r ** (self.k_max + 1) / (1.0 - r)


def kerr_law(grid, a1=1.0, b1=0.0, s0=1.0, M_bound=10.0):
    """Single cubic term.  ``a1``/``b1`` may be scalars or node fields."""
    a1f = a1 if isinstance(a1, ScalarFieldC) else constant_coefficient(grid, a1)
    b1f = b1 if isinstance(b1, ScalarFieldC) else constant_coefficient(grid, b1)
    return NonlinearLaw(grid, [a1f], [b1f], s0, M_bound, closed_form="kerr")


def saturable_law(grid, a=1.0, b=1.0, a_mag=0.0, b_mag=0.0, s0=None,
                  M_bound=20.0, k_max=K_MAX_DEFAULT):
    """Saturating response a·s/(1 + b·s), expanded as a_k = a(-b)^{k-1}.

    ``a``/``b`` drive the electric response; ``a_mag``/``b_mag`` the magnetic
    one.  The convergence envelope defaults to 0.9/max|b|.
    """
    def as_field(v):
        return v if isinstance(v, ScalarFieldC) else constant_coefficient(grid, v)

    af, bf = as_field(a), as_field(b)
    amf, bmf = as_field(a_mag), as_field(b_mag)
    bmax = max(np.abs(bf.values).max(), np.abs(bmf.values).max(), 1e-30)
    if s0 is None:
        s0 = 0.9 / bmax
    a_list = [ScalarFieldC(grid, "node", af.values * (-bf.values) ** (k - 1))
              for k in range(1, k_max + 1)]
    b_list = [ScalarFieldC(grid, "node", amf.values * (-bmf.values) ** (k - 1))
              for k in range(1, k_max + 1)]
    law = NonlinearLaw(grid, a_list, b_list, s0, M_bound,
                       closed_form="saturable")
    law.cf_params = {"X": (af.values, bf.values), "Y": (amf.values, bmf.values)}
    return law


def series_law(grid, a_coeffs, b_coeffs, s0=1.0, M_bound=10.0):
    """Law from explicit coefficient lists (scalars or node fields)."""
    def lift(lst):
        return [v if isinstance(v, ScalarFieldC) else constant_coefficient(grid, v)
                for v in lst]
    return NonlinearLaw(grid, lift(a_coeffs), lift(b_coeffs), s0, M_bound)


# ======================================================================
# evaluation

def _coeff_at(law, which, location):
    coeffs = law.a_coeffs if which == "X" else law.b_coeffs
    if location == "node":
        return [c.values for c in coeffs]
    return [node_to_cell_average(c.values) for c in coeffs]


def _check_envelope(s, s0, what):
    m = float(np.max(s.real)) if np.size(s) else 0.0
    if np.min(np.asarray(s).real) < -1e-14:
        raise ValidationError(f"negative intensity passed to {what}")
    if m >= s0:
        raise ValidationError(
            f"{what}: intensity {m:.4g} exceeds the convergence envelope s0={s0:.4g}")


def eval_X(law, which, s):
    """Evaluate the response ``which`` in {"X","Y"} at intensities ``s``.

    ``s`` is a ScalarFieldC (cell or node located) of nonnegative values.
    Closed forms are used when the law carries one; otherwise the truncated
    series is summed by Horner's rule and the geometric tail bound is logged.
    """
    if which not in ("X", "Y"):
        raise ValueError("which must be 'X' or 'Y'")
    sv = np.asarray(s.values).real
    _check_envelope(sv, law.s0, f"eval_{which}")

    if law.closed_form == "saturable":
        a, b = law.cf_params[which]
        if s.location == "cell":
            a, b = node_to_cell_average(a), node_to_cell_average(b)
        out = a * sv / (1.0 + b * sv)
        return ScalarFieldC(law.grid, s.location, out.astype(complex))

    coeffs = _coeff_at(law, which, s.location)
    out = np.zeros_like(sv, dtype=complex)
    for c in reversed(coeffs):  # Horner in s: ((a_K s + a_{K-1}) s + ...) s
        out = (out + c) * sv
    if law.closed_form is None and len(coeffs) > 1:
        log.debug("eval_%s: series truncated at K=%d, tail bound %.3e",
                  which, law.k_max, law.tail_bound(sv))
    return ScalarFieldC(law.grid, s.location, out)


def intensity_E_cells(E):
    """|E|^2 at cell centers: each squared component averaged inward."""
    sq = VectorField3C(E.grid, "edge", *(np.abs(c) ** 2 for c in E.comps))
    parts = edge_to_cell_average(sq)
    return ScalarFieldC(E.grid, "cell", (parts[0] + parts[1] + parts[2]).astype(complex))


def intensity_H_cells(H):
    parts = face_sq_to_cell_average(H)
    return ScalarFieldC(H.grid, "cell", (parts[0] + parts[1] + parts[2]).astype(complex))


def _scaled_field(resp_cells, f):
    """Multiply a field by a cell response, averaging the response onto the
    field's own staggering first."""
    g = f.grid
    if f.location == "edge":
        on = cell_to_edge_average(resp_cells, g)
    else:
        on = cell_to_face_average(resp_cells, g)
    return VectorField3C(g, f.location, *(on[i] * f.comps[i] for i in range(3)))


def eval_F(law, U):
    """Full nonlinear forcing F(U) = (Y(|H|^2)H in the face slot,
    -X(|E|^2)E in the edge slot)."""
    sE = intensity_E_cells(U.E)
    sH = intensity_H_cells(U.H)
    Xc = eval_X(law, "X", sE).values
    Yc = eval_X(law, "Y", sH).values
    Je = _scaled_field(-Xc, U.E)
    Jm = _scaled_field(Yc, U.H)
    return FieldPair(Je, Jm)


def eval_F_k(law, k, U):
    """Single homogeneous term of degree 2k+1:
    (b_k |H|^{2k} H, -a_k |E|^{2k} E)."""
    if not 1 <= k <= law.k_max:
        raise ValueError(f"k={k} outside 1..{law.k_max}")
    sE = intensity_E_cells(U.E).values.real
    sH = intensity_H_cells(U.H).values.real
    ak = node_to_cell_average(law.a_coeffs[k - 1].values) if k <= len(law.a_coeffs) else 0.0
    bk = node_to_cell_average(law.b_coeffs[k - 1].values) if k <= len(law.b_coeffs) else 0.0
    Je = _scaled_field(-(ak * sE ** k), U.E)
    Jm = _scaled_field(bk * sH ** k, U.H)
    return FieldPair(Je, Jm)


# ======================================================================
# assumption validation

def _w1inf_proxy(vals, h):
    worst = float(np.abs(vals).max())
    for ax in range(3):
        d = np.abs(np.diff(vals, axis=ax)) / h
        if d.size:
            worst = max(worst, float(d.max()))
    return worst


def _wkinf_proxy(vals, h, order):
    """Max over nodes of axis-aligned finite differences up to ``order``."""
    worst = float(np.abs(vals).max())
    for ax in range(3):
        d = vals
        for m in range(1, order + 1):
            if d.shape[ax] <= 1:
                break
            d = np.diff(d, axis=ax) / h
            worst = max(worst, float(np.abs(d).max()))
    return worst


def validate_assumptions(mat, law, s_samples=32):
    """Check the structural hypotheses on (mat, law) by direct sampling.

    Returns a report dict: each entry has ``passed``, the measured worst
    constant, and where it occurred.  Report-only; nothing raises.
    """
    g = mat.grid
    h = g.h
    checks = {}

    # ellipticity floor: real parts bounded below
    re_min = min(float(mat.epsilon.values.real.min()),
                 float(mat.mu.values.real.min()))
    checks["ellipticity_floor"] = {
        "passed": bool(re_min >= mat.lambda_bound),
        "measured": re_min,
        "required": f">= {mat.lambda_bound}",
    }

    # smoothness cap: 5th-order finite-difference proxy
    reg = max(_wkinf_proxy(mat.epsilon.values, h, 5),
              _wkinf_proxy(mat.mu.values, h, 5))
    checks["regularity_cap"] = {
        "passed": bool(reg <= mat.M_bound),
        "measured": reg,
        "required": f"<= {mat.M_bound}",
    }

    # series envelope: sum_k (|a_k| + |b_k|)_{W^{1,inf}} s^k < M s on (0, s0)
    norms = []
    for j in range(law.k_max):
        na = _w1inf_proxy(law.a_coeffs[j].values, h) if j < len(law.a_coeffs) else 0.0
        nb = _w1inf_proxy(law.b_coeffs[j].values, h) if j < len(law.b_coeffs) else 0.0
        norms.append(na + nb)
    ss = np.linspace(law.s0 / s_samples, law.s0 * (1 - 1.0 / s_samples), s_samples)
    worst0 = worst1 = worst2 = -np.inf
    at0 = at1 = at2 = None
    for s in ss:
        ratio0 = sum(c * s ** (k + 1) for k, c in enumerate(norms)) / (law.M_bound * s)
        ratio1 = sum((k + 1) * c * s ** k for k, c in enumerate(norms)) / law.M_bound
        ratio2 = sum((k + 1) * k * c * s ** (k - 1) for k, c in enumerate(norms)
                     if k >= 1) / law.M_bound
        if ratio0 > worst0:
            worst0, at0 = ratio0, float(s)
        if ratio1 > worst1:
            worst1, at1 = ratio1, float(s)
        if ratio2 > worst2:
            worst2, at2 = ratio2, float(s)
    checks["series_envelope"] = {
        "passed": bool(worst0 < 1.0), "measured": worst0, "at_s": at0,
        "required": "< 1 (ratio to M*s)",
    }
    checks["series_derivative_1"] = {
        "passed": bool(worst1 < 1.0), "measured": worst1, "at_s": at1,
        "required": "< 1 (ratio to M)",
    }
    checks["series_derivative_2"] = {
        "passed": bool(worst2 < 1.0), "measured": worst2, "at_s": at2,
        "required": "< 1 (ratio to M)",
    }

    # closed-form consistency when a tag is present
    if law.closed_form == "saturable":
        aX, bX = law.cf_params["X"]
        worst = 0.0
        for j, cf in enumerate(law.a_coeffs):
            expect = aX * (-bX) ** j
            worst = max(worst, float(np.abs(cf.values - expect).max()))
        checks["closed_form_series_match"] = {
            "passed": bool(worst <= 1e-12), "measured": worst, "required": "<= 1e-12",
        }

    report = {"passed": all(c["passed"] for c in checks.values()), "checks": checks}
    return report


def lipschitz_check(law, U, Uprime, p=4):
    """Measured ratio ||F(U)-F(U')|| / ((||U||^2 + ||U'||^2)·||U-U'||).

    All norms are the discrete first-difference Sobolev norm with the given
    exponent.  Identical inputs return 0 by convention.  Inputs whose
    pointwise intensity leaves the law's envelope raise.
    """
    for V in (U, Uprime):
        _check_envelope(intensity_E_cells(V.E).values.real, law.s0, "lipschitz_check")
        _check_envelope(intensity_H_cells(V.H).values.real, law.s0, "lipschitz_check")
    dU = U - Uprime
    denom_d = norm_W1p(dU, p)
    if denom_d == 0.0:
        return 0.0
    nF = norm_W1p(eval_F(law, U) - eval_F(law, Uprime), p)
    nU2 = norm_W1p(U, p) ** 2 + norm_W1p(Uprime, p) ** 2
    if nU2 == 0.0:
        return 0.0
    return nF / (nU2 * denom_d)
