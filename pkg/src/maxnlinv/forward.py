"""Nonlinear forward solves by fixed-point (Picard) iteration.

Writing G for the zero-trace right inverse of the linear operator and U0 for
the boundary-driven linear solution, the solved map is

    T(U) = U0 + G(F(U))

iterated to a fixed point.  For small boundary data T contracts on a ball
around U0 and the iteration converges geometrically; the step norms and
their ratios are recorded so callers can audit the contraction directly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionError, SolverError, ValidationError
from .grid import (
    FieldPair,
    TangentialBoundaryField,
    norm_W1p,
    tangential_trace,
    zeros_edge_field,
    zeros_face_field,
)
from .linear import solve_homogeneous, solve_inhomogeneous, trace_l2_norm
from .materials import eval_F, lipschitz_check

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-11
DEFAULT_MAX_ITER = 60


def scale_trace(f, t):
    """Tangential boundary field scaled by a (complex) factor."""
    return TangentialBoundaryField(
        f.grid, f.location,
        {k: {c: t * v for c, v in d.items()} for k, d in f.sides.items()})


@dataclass
class PicardState:
    """Iteration record: step norms, observed contraction ratios, and the
    ball data backing the smallness bookkeeping."""

    step_norms: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    ball_radius: float = 0.0
    c_bound_obs: float = 0.0  # ||U|| / ||f||, the data-to-solution constant

    def worst_ratio(self):
        return max(self.ratios) if self.ratios else 0.0

    def to_dict(self):
        return {
            "step_norms": self.step_norms,
            "ratios": self.ratios,
            "iterations": self.iterations,
            "converged": self.converged,
            "ball_radius": self.ball_radius,
            "c_bound_obs": self.c_bound_obs,
        }


def picard_step(op, law, U0, U):
    """One application of the solved map: U0 + G(F(U))."""
    FU = eval_F(law, U)
    GU, _ = solve_inhomogeneous(op, FU.H, FU.E)
    return U0 + GU


def _sup_amplitude(U):
    return max(float(np.abs(c).max()) for c in (*U.E.comps, *U.H.comps))


def solve_nonlinear(op, law, f, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                    U_init=None):
    """Fixed point of T for boundary datum f.

    Returns ``(U, PicardState)``.  Raises ContractionError when the observed
    step ratios reach 1 or the iterates leave the law's intensity envelope --
    in both cases the error carries ``achievable_scale``, an estimate of how
    much the datum must shrink for the iteration to contract.
    """
    fn = trace_l2_norm(f)
    if fn == 0.0:
        U = FieldPair(zeros_edge_field(op.grid), zeros_face_field(op.grid))
        return U, PicardState(iterations=0, converged=True)

    U0, rep0 = solve_homogeneous(op, f)
    state = PicardState(ball_radius=2.0 * norm_W1p(U0, 4))
    U = U0.copy() if U_init is None else U_init
    prev_step = None
    for it in range(1, max_iter + 1):
        try:
            U_next = picard_step(op, law, U0, U)
        except ValidationError as exc:
            # iterate left the envelope: the datum is too large
            s_seen = _sup_amplitude(U) ** 2
            scale = float(np.sqrt(0.8 * law.s0 / max(s_seen, 1e-300)))
            raise ContractionError(
                f"iterate left the intensity envelope at step {it}: {exc}",
                achievable_scale=min(scale, 0.9)) from exc
        step = norm_W1p(U_next - U, 4)
        state.step_norms.append(step)
        state.iterations = it
        if prev_step is not None and prev_step > 0:
            r = step / prev_step
            state.ratios.append(r)
            if r >= 1.0 and step > 10 * tol:
                raise ContractionError(
                    f"no contraction: step ratio {r:.3f} at iteration {it}; "
                    "boundary data exceeds the smallness threshold",
                    achievable_scale=float(np.sqrt(0.4 / r)))
        U = U_next
        if step <= tol:
            state.converged = True
            break
        prev_step = step
    if not state.converged:
        raise SolverError(
            f"fixed-point iteration did not reach tol={tol:.1e} in "
            f"{max_iter} steps (last step {state.step_norms[-1]:.3e})")
    state.c_bound_obs = norm_W1p(U, 4) / fn
    log.debug("nonlinear solve: %d iterations, worst ratio %.3f",
              state.iterations, state.worst_ratio())
    return U, state


def smallness_threshold(op, law, f, p=4):
    """Estimated largest admissible scaling of the datum f.

    Combines the observed data-to-solution constant, the observed source-to-
    solution constant of the right inverse, and a sampled cubic Lipschitz
    constant into the contraction requirement (2 C_G C_L)^(1/2) * m < 1 with
    m = 2 t ||U0||; the intensity envelope caps the result independently.
    Returns ``(t_max, details)``.
    """
    U0, rep0 = solve_homogeneous(op, f)
    nrm0 = norm_W1p(U0, p)
    amp0 = _sup_amplitude(U0)
    if nrm0 == 0.0:
        return np.inf, {"reason": "zero datum"}
    # probe scale far inside the envelope
    t_probe = 0.25 * np.sqrt(law.s0) / max(amp0, 1e-300)
    Up = t_probe * U0
    C_L = lipschitz_check(law, Up, 0.5 * Up, p=p)
    FUp = eval_F(law, Up)
    GFU, repG = solve_inhomogeneous(op, FUp.H, FUp.E)
    nF = norm_W1p(GFU, p)
    # ||G F(U)|| ~ C_GL * ||U||^3 at the probe scale
    C_GL = nF / (t_probe * nrm0) ** 3
    # contraction factor ~ 2 * C_GL-ish * m^2; require < 1 at m = 2 t nrm0
    t_contract = 1.0 / (2.0 * nrm0 * np.sqrt(max(2.0 * C_GL, 1e-300)))
    t_env = 0.8 * np.sqrt(law.s0) / max(amp0, 1e-300)
    t_max = min(t_contract, t_env)
    details = {
        "t_contraction": float(t_contract),
        "t_envelope": float(t_env),
        "C_lipschitz": float(C_L),
        "C_cubic_solved": float(C_GL),
        "linear_c_obs": float(rep0.c_obs),
        "U0_norm": float(nrm0),
    }
    return float(t_max), details


@dataclass
class MeasurementSet:
    """Boundary measurements for a family of scaled data t·f: the tangential
    traces of E and of H (first interior face layer) for each t."""

    t_values: list
    traces_E: list
    traces_H: list
    omega: float
    grid_n: int
    datum: TangentialBoundaryField | None = None

    def __len__(self):
        return len(self.t_values)


def measurement_map(op, law, f, t_values):
    """Solve the nonlinear problem for each scaled datum and record traces."""
    tE, tH = [], []
    for t in t_values:
        U, state = solve_nonlinear(op, law, scale_trace(f, t))
        tE.append(tangential_trace(U.E))
        tH.append(tangential_trace(U.H))
        log.debug("measurement at t=%g: %d picard iterations", t, state.iterations)
    return MeasurementSet(
        t_values=list(t_values), traces_E=tE, traces_H=tH,
        omega=op.omega, grid_n=op.grid.n, datum=f)
