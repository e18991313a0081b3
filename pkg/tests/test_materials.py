"""Susceptibility-law tests.

Closed-form oracles (hand-evaluated rational responses) are computed first
and the series evaluations are required to match them within the reported
geometric tail bound.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxnlinv import grid as G
from maxnlinv import materials as M
from maxnlinv.errors import ValidationError


def _const_cells(g, v):
    return G.ScalarFieldC(g, "cell", np.full((g.n,) * 3, v, dtype=complex))


def _smooth_pair(g, amps, scale=0.2):
    """Deterministic smooth field pair built from three fixed Fourier modes.

    The same ``amps`` on two different grids sample the same continuum field,
    which is what grid-refinement comparisons need.
    """
    modes = [(1, 0, 0), (0, 1, 2), (2, 1, 0)]
    E = G.zeros_edge_field(g)
    H = G.zeros_face_field(g)
    for i, c in enumerate("xyz"):
        Xe, Ye, Ze = G.edge_positions(g, c)
        Xf, Yf, Zf = G.face_positions(g, c)
        acc_e = np.zeros(Xe.shape, dtype=complex)
        acc_f = np.zeros(Xf.shape, dtype=complex)
        for m, (kx, ky, kz) in enumerate(modes):
            a = amps[i, m]
            acc_e += a * np.exp(2j * np.pi * (kx * Xe + ky * Ye + kz * Ze))
            acc_f += np.conj(a) * np.exp(2j * np.pi * (kx * Xf + ky * Yf + kz * Zf))
        E.comps[i][...] = scale * acc_e
        H.comps[i][...] = scale * acc_f
    return G.FieldPair(E, H)


# ======================================================================
# eval_X

def test_kerr_single_term_value():
    g = G.Grid(6)
    law = M.kerr_law(g, a1=1.0)
    out = M.eval_X(law, "X", _const_cells(g, 0.01))
    assert np.abs(out.values - 0.01).max() == 0.0


def test_saturable_closed_form_value():
    # a=1, b=2 at s=0.1: s/(1+2s) = 1/12
    g = G.Grid(6)
    law = M.saturable_law(g, a=1.0, b=2.0)
    out = M.eval_X(law, "X", _const_cells(g, 0.1))
    assert np.abs(out.values - 1.0 / 12.0).max() < 1e-15


def test_series_matches_closed_form_within_tail():
    g = G.Grid(6)
    closed = M.saturable_law(g, a=1.0, b=2.0)
    a_series = [(-2.0) ** (k - 1) for k in range(1, 9)]
    series = M.series_law(g, a_series, [0.0] * 8, s0=0.45, M_bound=20.0)
    s = _const_cells(g, 0.1)
    diff = np.abs(M.eval_X(series, "X", s).values
                  - M.eval_X(closed, "X", s).values).max()
    assert diff <= series.tail_bound(0.1)
    assert diff > 0.0  # truncation is real, the bound is not vacuous


def test_eval_X_rejects_envelope_violation():
    g = G.Grid(4)
    law = M.kerr_law(g, s0=1.0)
    with pytest.raises(ValidationError):
        M.eval_X(law, "X", _const_cells(g, 1.5))


# ======================================================================
# eval_F / eval_F_k

def test_F_of_zero_is_zero():
    g = G.Grid(6)
    law = M.saturable_law(g, a=1.0, b=1.0, a_mag=0.5, b_mag=0.5)
    U = G.FieldPair(G.zeros_edge_field(g), G.zeros_face_field(g))
    FU = M.eval_F(law, U)
    assert G.l2_norm(FU) == 0.0


def test_F_constant_field_hand_value():
    g = G.Grid(6)
    law = M.kerr_law(g, a1=1.0, b1=1.0)
    c = 0.3 + 0.4j
    E = G.zeros_edge_field(g)
    E.x[...] = c
    U = G.FieldPair(E, G.zeros_face_field(g))
    FU = M.eval_F(law, U)
    assert np.abs(FU.E.x - (-(abs(c) ** 2) * c)).max() == 0.0
    assert np.abs(FU.E.y).max() == 0.0
    assert G.l2_norm(FU.H) == 0.0


def test_F_k_single_term_equals_F_for_kerr():
    g = G.Grid(5)
    rng = np.random.default_rng(0)
    law = M.kerr_law(g, a1=0.7, b1=0.2)
    U = G.FieldPair(0.1 * G.random_field(g, "edge", rng),
                    0.1 * G.random_field(g, "face", rng))
    d = M.eval_F(law, U) - M.eval_F_k(law, 1, U)
    assert G.l2_norm(d) < 1e-15


def test_F_k_homogeneity_machine_exact():
    g = G.Grid(5)
    rng = np.random.default_rng(1)
    law = M.series_law(g, [0.5, 0.25], [0.1, 0.1], s0=4.0)
    U = G.FieldPair(0.25 * G.random_field(g, "edge", rng),
                    0.25 * G.random_field(g, "face", rng))
    for k in (1, 2):
        lhs = M.eval_F_k(law, k, 2.0 * U)
        rhs = 2.0 ** (2 * k + 1) * M.eval_F_k(law, k, U)
        assert G.l2_norm(lhs - rhs) <= 1e-14 * G.l2_norm(rhs)


def test_F_term_sum_matches_full_F():
    g = G.Grid(5)
    rng = np.random.default_rng(2)
    law = M.saturable_law(g, a=1.0, b=2.0, a_mag=0.5, b_mag=1.0)
    U = G.FieldPair(0.1 * G.random_field(g, "edge", rng),
                    0.1 * G.random_field(g, "face", rng))
    total = M.eval_F_k(law, 1, U)
    for k in range(2, law.k_max + 1):
        total = total + M.eval_F_k(law, k, U)
    smax = max(M.intensity_E_cells(U.E).values.real.max(),
               M.intensity_H_cells(U.H).values.real.max())
    assert G.l2_norm(M.eval_F(law, U) - total) <= 10 * law.tail_bound(smax)


def test_F_is_odd():
    g = G.Grid(5)
    rng = np.random.default_rng(3)
    law = M.saturable_law(g, a=1.0, b=1.5)
    U = G.FieldPair(0.2 * G.random_field(g, "edge", rng),
                    0.2 * G.random_field(g, "face", rng))
    s = M.eval_F(law, U) + M.eval_F(law, -1.0 * U)
    assert G.l2_norm(s) < 1e-15


@settings(max_examples=25, deadline=None)
@given(theta=st.floats(0.0, 2.0 * np.pi))
def test_unimodular_phase_gauge_invariance(theta):
    g = G.Grid(4)
    rng = np.random.default_rng(4)
    law = M.kerr_law(g, a1=1.0, b1=0.5)
    U = G.FieldPair(0.2 * G.random_field(g, "edge", rng),
                    0.2 * G.random_field(g, "face", rng))
    z = np.exp(1j * theta)
    FU = M.eval_F(law, U)
    FzU = M.eval_F(law, z * U)
    # intensities are phase-blind, so F commutes with the phase itself
    assert G.l2_norm(FzU - z * FU) <= 1e-12 * max(G.l2_norm(FU), 1e-30)


def test_F_k_out_of_range():
    g = G.Grid(4)
    law = M.kerr_law(g)
    U = G.FieldPair(G.zeros_edge_field(g), G.zeros_face_field(g))
    with pytest.raises(ValueError):
        M.eval_F_k(law, 0, U)
    with pytest.raises(ValueError):
        M.eval_F_k(law, law.k_max + 1, U)


# ======================================================================
# validate_assumptions

def test_validate_vacuum_kerr_passes():
    g = G.Grid(8)
    mat = M.vacuum_material(g, omega=1.0)
    law = M.kerr_law(g, a1=1.0, s0=1.0, M_bound=10.0)
    rep = M.validate_assumptions(mat, law)
    assert rep["passed"], rep


def test_validate_flags_negative_real_epsilon():
    g = G.Grid(6)
    bad = M.MaterialProfile(M.constant_coefficient(g, -1.0),
                            M.constant_coefficient(g, 1.0), 0.5, 10.0, 1.0)
    rep = M.validate_assumptions(bad, M.kerr_law(g))
    assert not rep["checks"]["ellipticity_floor"]["passed"]
    assert not rep["passed"]


def test_validate_flags_series_blowup_near_envelope():
    # negative b makes every series term positive; with a small regularity
    # budget the envelope ratio crosses 1 near the edge of convergence
    g = G.Grid(6)
    mat = M.vacuum_material(g, omega=1.0)
    law = M.saturable_law(g, a=1.0, b=-3.0, s0=0.3, M_bound=2.0)
    rep = M.validate_assumptions(mat, law)
    assert not rep["checks"]["series_envelope"]["passed"]


# ======================================================================
# lipschitz_check

def test_lipschitz_identical_inputs():
    g = G.Grid(4)
    rng = np.random.default_rng(5)
    law = M.kerr_law(g)
    U = G.FieldPair(0.1 * G.random_field(g, "edge", rng),
                    0.1 * G.random_field(g, "face", rng))
    assert M.lipschitz_check(law, U, U) == 0.0


def test_lipschitz_scale_invariance():
    g = G.Grid(6)
    rng = np.random.default_rng(6)
    law = M.kerr_law(g, a1=1.0, b1=0.3)
    U = G.FieldPair(0.2 * G.random_field(g, "edge", rng),
                    0.2 * G.random_field(g, "face", rng))
    V = G.FieldPair(0.2 * G.random_field(g, "edge", rng),
                    0.2 * G.random_field(g, "face", rng))
    r1 = M.lipschitz_check(law, U, V)
    r2 = M.lipschitz_check(law, 0.1 * U, 0.1 * V)
    assert r1 > 0
    assert abs(r2 / r1 - 1.0) < 0.10


def test_lipschitz_ensemble_stable_under_refinement():
    rng = np.random.default_rng(7)
    law_of = {n: M.kerr_law(G.Grid(n)) for n in (6, 12)}
    worst = {}
    for n in (6, 12):
        g = G.Grid(n)
        ratios = []
        for _ in range(100):
            amps = 0.5 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
            amps2 = 0.5 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
            U = _smooth_pair(g, amps)
            V = _smooth_pair(g, amps2)
            ratios.append(M.lipschitz_check(law_of[n], U, V))
        worst[n] = max(ratios)
    assert worst[6] > 0 and np.isfinite(worst[12])
    assert abs(worst[12] / worst[6] - 1.0) < 0.30


def test_lipschitz_rejects_envelope_violation():
    g = G.Grid(4)
    law = M.kerr_law(g, s0=0.25)
    E = G.zeros_edge_field(g)
    E.x[...] = 1.0  # intensity 1 > s0
    U = G.FieldPair(E, G.zeros_face_field(g))
    with pytest.raises(ValidationError):
        M.lipschitz_check(law, U, 0.5 * U)
