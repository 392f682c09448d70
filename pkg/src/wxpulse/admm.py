"""ADMM for the constant-modulus fractional code subproblem.

Minimizes ``x^H P x / x^H Q x`` subject to ``|x_i| = 1`` with two slack
copies ``y`` (numerator) and ``z`` (denominator) and scaled duals ``u``,
``v``.  One sweep runs the x, y, z and dual updates in that order.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateIterateError
from .quartic import QuarticProblem, optimal_magnitude

_Z_PERTURB = 1e-8
_DEGENERACY_TOL = 1e-14


@dataclass(frozen=True)
class AdmmParams:
    rho1: float = 1.0
    rho2: float = 1.0
    max_iters: int = 500
    primal_tol: float = 1e-6

    def __post_init__(self):
        for name in ("rho1", "rho2", "primal_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be a positive integer")


@dataclass(frozen=True)
class AdmmState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def start(cls, x0):
        """Feasible start ``y = z = x0`` with zero duals."""
        x0 = np.asarray(x0, dtype=complex)
        zero = np.zeros_like(x0)
        return cls(x0.copy(), x0.copy(), x0.copy(), zero, zero.copy())


@dataclass
class AdmmTrace:
    """Per-iteration record of one subproblem solve.

    ``safeguarded`` is set when the returned code is not the last ADMM
    iterate (an earlier iterate or the initial code scored better).
    """

    objective: list = field(default_factory=list)
    residual_y: list = field(default_factory=list)
    residual_z: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    converged: bool = False
    safeguarded: bool = False
    best_iter: int = -1

    @property
    def iterations(self):
        return len(self.objective)


def rank_one_frame(w_core):
    """Unitary ``U`` whose first row is ``w_core^H / ||w_core||``.

    Built from one Householder reflector, so ``Q = w w^H`` satisfies
    ``U Q U^H = diag(||w||^2, 0, ..., 0)``.
    """
    w = np.asarray(w_core, dtype=complex)
    n = w.shape[0]
    q = w / np.linalg.norm(w)
    phase = q[0] / abs(q[0]) if abs(q[0]) > 0 else 1.0
    q_real = q * np.conj(phase)  # q_real[0] = |q[0]| >= 0
    h = np.eye(n, dtype=complex)
    d = q_real.copy()
    d[0] -= 1.0
    dn = np.vdot(d, d).real
    if dn > 1e-30:
        h -= 2.0 * np.outer(d, d.conj()) / dn
    # h e_1 = q_real, so V = h diag(phase, 1, ...) maps e_1 to q
    h[:, 0] *= phase
    return h.conj().T


def update_x(state, params):
    """Phase projection of the penalty-weighted average of the slacks."""
    a = (2.0 / (params.rho1 + params.rho2)) * (
        params.rho1 * (state.y + state.u) + params.rho2 * (state.z + state.v)
    )
    x = np.ones_like(a)
    nz = a != 0
    x[nz] = a[nz] / np.abs(a[nz])
    return x


def update_y(state, forms, params):
    """Closed-form y step ``y = -P_tilde^{-1} b / 2``.

    ``P_tilde = P / (z^H Q z) + (rho1 / 2) I`` and ``b = rho1 (u - x)``;
    the solve reuses the cached eigen-decomposition of ``P``.
    """
    zqz = abs(np.vdot(forms.w_core, state.z)) ** 2
    scale = np.vdot(state.z, state.z).real * np.vdot(forms.w_core, forms.w_core).real
    if zqz <= _DEGENERACY_TOL * scale:
        raise DegenerateIterateError("z^H Q z vanished (z orthogonal to filter core)")
    b = params.rho1 * (state.u - state.x)
    lam, vec = forms.eig
    d = lam / zqz + 0.5 * params.rho1
    return -0.5 * (vec @ ((vec.conj().T @ b) / d))


def update_z(state, forms, params, frame=None):
    """Rank-one spectral z step.

    In the frame ``U`` the objective separates into a scalar magnitude
    problem along ``w_core`` (solved through the quartic) and an
    unconstrained quadratic on the orthogonal complement.
    """
    ypy = np.real(np.vdot(state.y, forms.P @ state.y))
    if ypy <= 0:
        raise DegenerateIterateError("y^H P y is not positive")
    if frame is None:
        frame = rank_one_frame(forms.w_core)
    lambda1 = np.vdot(forms.w_core, forms.w_core).real / ypy
    c = params.rho2 * (state.v - state.x)
    ct = frame @ c
    c1 = abs(ct[0])
    if c1 <= 1e-14 * np.linalg.norm(c):
        c1, phase = 0.0, 1.0  # arg tie-break
    else:
        phase = ct[0] / c1
    t = optimal_magnitude(QuarticProblem(params.rho2, c1, lambda1))
    zt = -ct / params.rho2
    zt[0] = -t * phase
    return frame.conj().T @ zt


def update_duals(state):
    """Scaled dual ascent on both consensus constraints."""
    return state.u + (state.y - state.x), state.v + (state.z - state.x)


def sweep(state, forms, params, frame=None):
    """One full pass of x, y, z and dual updates."""
    state = replace(state, x=update_x(state, params))
    state = replace(state, y=update_y(state, forms, params))
    state = replace(state, z=update_z(state, forms, params, frame))
    u, v = update_duals(state)
    return replace(state, u=u, v=v)


def _guarded_sweep(state, forms, params, frame):
    try:
        return sweep(state, forms, params, frame)
    except DegenerateIterateError:
        q = forms.w_core / np.linalg.norm(forms.w_core)
        z = state.z + _Z_PERTURB * q
        y = state.y + _Z_PERTURB * state.x
        return sweep(replace(state, y=y, z=z), forms, params, frame)


def solve_x_subproblem(forms, x_init, params=None):
    """Safeguarded ADMM over unimodular codes.

    Parameters
    ----------
    forms : QuadraticForms
    x_init : ndarray
        Unimodular starting code.
    params : AdmmParams, optional

    Returns
    -------
    x : ndarray
        Unimodular code whose ratio never exceeds that of ``x_init``.
    trace : AdmmTrace
    """
    params = params or AdmmParams()
    x_init = np.asarray(x_init, dtype=complex)
    n = x_init.shape[0]
    frame = rank_one_frame(forms.w_core)
    state = AdmmState.start(x_init)
    trace = AdmmTrace()
    best_x, best_ratio = x_init, forms.ratio(x_init)
    stop = params.primal_tol * np.sqrt(n)
    for it in range(int(params.max_iters)):
        state = _guarded_sweep(state, forms, params, frame)
        ypy = np.real(np.vdot(state.y, forms.P @ state.y))
        zqz = abs(np.vdot(forms.w_core, state.z)) ** 2
        ry = np.linalg.norm(state.y - state.x)
        rz = np.linalg.norm(state.z - state.x)
        r = forms.ratio(state.x)
        trace.objective.append(ypy / zqz if zqz > 0 else np.inf)
        trace.residual_y.append(ry)
        trace.residual_z.append(rz)
        trace.ratio.append(r)
        if r < best_ratio:
            best_x, best_ratio, trace.best_iter = state.x, r, it
        if ry < stop and rz < stop:
            trace.converged = True
            break
    trace.safeguarded = trace.best_iter != trace.iterations - 1
    return best_x.copy(), trace
