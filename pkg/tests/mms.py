"""Manufactured-solution helpers shared by solver tests.

The reference fields are smooth closed-form expressions; their curls are
evaluated by high-order central differencing of the closed forms (step 1e-5,
error ~1e-10), far below the O(h^2) discretization levels being measured.
"""
import numpy as np

from maxnlinv import grid as G
from maxnlinv import materials as M


def eps_fun(X, Y, Z):
    return 1.0 + 0.3 * np.sin(np.pi * X) * np.sin(np.pi * Y) * np.sin(np.pi * Z)


def make_variable_eps_material(g, omega=1.0):
    X, Y, Z = G.node_positions(g)
    eps = G.ScalarFieldC(g, "node", eps_fun(X, Y, Z).astype(complex))
    return M.MaterialProfile(eps, M.constant_coefficient(g, 1.0), 0.5, 50.0, omega)


def E_star(c, X, Y, Z):
    # tangential components vanish on every wall: sin factors in the
    # transverse coordinates
    if c == "x":
        return np.sin(np.pi * Y) * np.sin(np.pi * Z) * (0.4 + np.cos(np.pi * X))
    if c == "y":
        return np.sin(np.pi * X) * np.sin(np.pi * Z) * np.cos(np.pi * Y)
    return np.sin(np.pi * X) * np.sin(np.pi * Y) * np.cos(2 * np.pi * Z)


def H_star(c, X, Y, Z):
    if c == "x":
        return np.sin(np.pi * Y) * np.cos(np.pi * Z)
    if c == "y":
        return np.cos(np.pi * X) * np.sin(np.pi * Z) - 0.2
    return np.sin(np.pi * X) * np.cos(np.pi * Y)


def _dd(f, X, Y, Z, axis, hh=1e-5):
    args = [X, Y, Z]
    args[axis] = args[axis] + hh
    fp = f(*args)
    args[axis] = args[axis] - 2 * hh
    fm = f(*args)
    return (fp - fm) / (2 * hh)


def curl_of(fun, g, on_faces):
    pos = G.face_positions if on_faces else G.edge_positions
    comp = {"x": ("z", 1, "y", 2), "y": ("x", 2, "z", 0), "z": ("y", 0, "x", 1)}
    out = {}
    for c in "xyz":
        X, Y, Z = pos(g, c)
        c1, a1, c2, a2 = comp[c]
        out[c] = (_dd(lambda *p: fun(c1, *p), X, Y, Z, a1)
                  - _dd(lambda *p: fun(c2, *p), X, Y, Z, a2))
    return out


def manufactured_sources(g, omega):
    """(J_m, J_e) so that (E_star, H_star) solves the variable-eps system."""
    cE = curl_of(E_star, g, True)
    cH = curl_of(H_star, g, False)
    Jm = G.VectorField3C(g, "face", *[
        (cE[c] - 1j * omega * H_star(c, *G.face_positions(g, c))).astype(complex)
        for c in "xyz"])
    Je_comps = []
    for c in "xyz":
        X, Y, Z = G.edge_positions(g, c)
        Je_comps.append((1j * omega * eps_fun(X, Y, Z) * E_star(c, X, Y, Z)
                         + cH[c]).astype(complex))
    Je = G.VectorField3C(g, "edge", *Je_comps)
    return Jm, Je


def sampled_E_star(g):
    return G.VectorField3C(g, "edge", *[
        E_star(c, *G.edge_positions(g, c)).astype(complex) for c in "xyz"])


def interior_rel_err(E, E_exact):
    return (G.l2_norm(E - E_exact, interior_only=True)
            / G.l2_norm(E_exact, interior_only=True))
