"""Steady-state and time-domain solution of the master equation."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .atomic_model import (
    DIM, N_LEVELS, TRACE_FUNCTIONAL, Liouvillian, LiouvillianFamily,
    RelaxationMode, from_real_vector, to_real_vector,
)
from .errors import (
    DegenerateNullSpace, LengthMismatch, NoSteadyState, PointFailure, StepSizeTooLarge,
)

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
TRACE_TOL = 1e-10
STEP_ERROR_TOL = 1e-8
NULL_RCOND = 1e-10
MAX_HALVINGS = 30
TRACE_ROW = 0


@dataclass(frozen=True)
class DensityMatrix:
    elements: np.ndarray
    loss_population: float = 0.0

    @classmethod
    def from_vector(cls, x) -> "DensityMatrix":
        rho, loss = from_real_vector(x)
        return cls(rho, loss)

    @classmethod
    def thermal_ground(cls) -> "DensityMatrix":
        rho = np.zeros((N_LEVELS, N_LEVELS), complex)
        rho[0, 0] = rho[1, 1] = 0.5
        return cls(rho, 0.0)

    def to_vector(self) -> np.ndarray:
        return to_real_vector(self.elements, self.loss_population)

    @property
    def populations(self) -> np.ndarray:
        return self.elements.diagonal().real.copy()

    @property
    def total_trace(self) -> float:
        return float(self.elements.trace().real + self.loss_population)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.elements - self.elements.conj().T).max())

    def __getitem__(self, ij):
        """1-based element access: ``rho[2, 4]`` is rho_24."""
        i, j = ij
        return self.elements[i - 1, j - 1]


@dataclass(frozen=True)
class SolveReport:
    residual_norm: float
    null_space_dimension: int
    iterations_or_rank: int
    pivot_ratio: float = 1.0


def _check_trace_conserving(L: Liouvillian):
    leak = L.trace_leak()
    scale = max(1.0, float(np.abs(L.matrix).max()))
    if L.mode is RelaxationMode.PAPER_VERBATIM or leak > TRACE_TOL * scale:
        raise NoSteadyState(
            f"generator does not conserve the trace (mode={L.mode.value}, leak={leak:.3e}); "
            "use the trace-conserving relaxation mode"
        )


def _constrained_system(M):
    A = np.array(M, dtype=float)
    A[TRACE_ROW] = TRACE_FUNCTIONAL
    b = np.zeros(DIM)
    b[TRACE_ROW] = 1.0
    return A, b


def _degenerate_fallback(M, rcond, reference=None):
    """Trace-normalised null-space element closest to ``reference``.

    The default reference is the thermal ground mixture.
    """
    null = scipy.linalg.null_space(M, rcond=rcond)
    target = (reference or DensityMatrix.thermal_ground()).to_vector()
    x = null @ (null.T @ target)
    tr = TRACE_FUNCTIONAL @ x
    if abs(tr) > 1e-14:
        x = x / tr
    return x, null.shape[1]


def steady_state(L: Liouvillian, strict: bool = True, pivot_tol: float = PIVOT_TOL,
                 reference: DensityMatrix | None = None):
    """Unique stationary state of a trace-conserving generator.

    One population equation (redundant because the trace is conserved) is
    replaced by the unit-trace constraint and the square system is solved by
    LU with partial pivoting. A pivot below ``pivot_tol`` times the largest
    pivot signals a null space of dimension > 1; with ``strict`` this raises
    ``DegenerateNullSpace`` (the fallback state rides on the exception),
    otherwise it is logged and the fallback is returned. The fallback is the
    projection of ``reference`` (thermal ground mixture by default) onto the
    null space, renormalised to unit trace.

    Returns ``(DensityMatrix, SolveReport)``. The residual is the max-norm of
    ``L x`` in units of ``RATE_UNIT``.
    """
    _check_trace_conserving(L)
    M = L.matrix
    A, b = _constrained_system(M)
    with warnings.catch_warnings():
        # exact zero pivots are handled below via the pivot ratio
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    pivots = np.abs(np.diag(lu))
    ratio = float(pivots.min() / pivots.max())
    if ratio < pivot_tol:
        x, dim = _degenerate_fallback(M, NULL_RCOND, reference)
        report = SolveReport(float(np.abs(M @ x).max()), dim, DIM - dim + 1, ratio)
        rho = DensityMatrix.from_vector(x)
        msg = f"stationary states are not unique (null space dimension {dim})"
        if strict:
            raise DegenerateNullSpace(msg, rho=rho, report=report)
        log.warning(msg)
        return rho, report
    x = scipy.linalg.lu_solve((lu, piv), b)
    report = SolveReport(float(np.abs(M @ x).max()), 1, DIM, ratio)
    return DensityMatrix.from_vector(x), report


@dataclass(frozen=True)
class BatchResult:
    states: np.ndarray       # (n, DIM) real-parametrised
    residuals: np.ndarray    # max-norm of the constrained-system residual
    pivot_ratios: np.ndarray


def constrained_parts(family: LiouvillianFamily) -> np.ndarray:
    """Family matrices with the trace constraint substituted into one row."""
    parts = np.array(family.parts)
    parts[:, TRACE_ROW, :] = 0.0
    parts[0, TRACE_ROW, :] = TRACE_FUNCTIONAL
    return parts


def steady_state_batch(family: LiouvillianFamily, dp_eff, dc_eff, gamma_L, parts=None,
                       backend=None, pivot_tol: float = PIVOT_TOL,
                       strict: bool = True) -> BatchResult:
    """Steady states for many points of an affine Liouvillian family (rad/s inputs).

    With ``strict`` a rank-deficient point raises ``PointFailure`` (callers
    attach the physical coordinates); otherwise such points are left for the
    caller to inspect through ``pivot_ratios``.
    """
    if family.mode is RelaxationMode.PAPER_VERBATIM:
        raise NoSteadyState("verbatim relaxation does not conserve the trace")
    if parts is None:
        parts = constrained_parts(family)
    coeffs = family.coefficients(dp_eff, dc_eff, gamma_L).reshape(-1, parts.shape[0])
    x, res, ratio = kernels.solve_affine(parts, coeffs, TRACE_ROW, backend=backend)
    bad = np.flatnonzero(~(ratio >= pivot_tol))
    if bad.size and strict:
        raise PointFailure(f"degenerate steady state at batch index {bad[0]}", None, None)
    return BatchResult(x, res, ratio)


def _spectral_radius(M, iters=200, seed=0):
    # power iteration on M^T M; returns an upper estimate of max |eigenvalue|
    rng = np.random.default_rng(seed)
    v = rng.normal(size=M.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = M.T @ (M @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        new = math.sqrt(nrm)
        v = w / nrm
        if abs(new - est) <= 1e-10 * new:
            est = new
            break
        est = new
    return est * 1.01


def _rk4_step_matrix(M, h):
    hm = h * M
    eye = np.eye(M.shape[0])
    term = eye.copy()
    P = eye.copy()
    for k in range(1, 5):
        term = term @ hm / k
        P = P + term
    return P


def time_evolve(L: Liouvillian, rho0: DensityMatrix, t_final: float,
                dt_max: float | None = None, adapt: bool = True):
    """Integrate d x/dt = L x with the classical fourth-order Runge-Kutta scheme.

    For a constant linear generator one RK4 step is the fixed matrix
    P = I + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24, so ``n`` steps are applied as
    P^n by binary powering. The step starts at min(dt_max, 0.1 / max|eig|),
    with the eigenvalue bound from power iteration. The step-doubling error
    ||P_h - P_{h/2}^2|| bounds the per-step error of any state of norm <= 1;
    if it exceeds 1e-8 the step is halved (``adapt``) or
    ``StepSizeTooLarge`` is raised. Hermiticity is structural in the real
    parametrisation, so no re-symmetrisation is needed.

    Parameters
    ----------
    L : Liouvillian
    rho0 : DensityMatrix
    t_final : float
        Duration in seconds.
    dt_max : float, optional
        Upper bound on the step in seconds.
    adapt : bool
        Halve the step until the error test passes instead of raising.
    """
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    M = L.matrix
    x = rho0.to_vector()
    if t_final == 0 or not np.any(M):
        return DensityMatrix.from_vector(x)
    T = t_final * L.rate_unit
    lam = _spectral_radius(M)
    h = 0.1 / lam if lam > 0 else T
    if dt_max is not None:
        h = min(h, dt_max * L.rate_unit)
    for _ in range(MAX_HALVINGS):
        n = max(1, math.ceil(T / h))
        h = T / n
        P = _rk4_step_matrix(M, h)
        half = _rk4_step_matrix(M, h / 2)
        err = np.linalg.norm(P - half @ half, 2)
        if err <= STEP_ERROR_TOL:
            break
        if not adapt:
            raise StepSizeTooLarge(
                f"step-doubling error {err:.2e} per step exceeds {STEP_ERROR_TOL:g}; reduce dt_max"
            )
        h /= 2
    else:
        raise StepSizeTooLarge(f"no stable step found (last error {err:.2e})")
    Q = P
    while n:
        if n & 1:
            x = Q @ x
        n >>= 1
        if n:
            Q = Q @ Q
    return DensityMatrix.from_vector(x)


def velocity_average(values, grid):
    """Weighted sum over velocity classes, accumulated strictly left to right.

    ``values`` may carry trailing dimensions (e.g. one state vector per
    velocity); the first axis must match the grid. ``grid`` is a
    ``VelocityGrid`` or a bare weight array.
    """
    values = np.asarray(values)
    w = np.asarray(getattr(grid, "weights", grid))
    if values.shape[0] != w.shape[0]:
        raise LengthMismatch(f"{values.shape[0]} values for {w.shape[0]} grid points")
    weighted = values * w.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.cumsum(weighted, axis=0)[-1]
