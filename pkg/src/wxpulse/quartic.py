"""Magnitude step of the ADMM z-update.

The scalar problem is to minimize

    g(t) = 1 / (lambda1 t^2) + (rho2 / 2) t^2 - |c1| t,   t > 0,

whose stationarity condition is the quartic
``rho2 t^4 - |c1| t^3 - 2 / lambda1 = 0``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

IMAG_TOL = 1e-9
RESIDUAL_TOL = 1e-10
_POLISH_STEPS = 5


@dataclass(frozen=True)
class QuarticProblem:
    rho2: float
    c1_mag: float
    lambda1: float

    def __post_init__(self):
        if not self.rho2 > 0:
            raise DomainError(f"rho2 must be positive, got {self.rho2}")
        if not self.lambda1 > 0:
            raise DomainError(f"lambda1 must be positive, got {self.lambda1}")
        if not self.c1_mag >= 0:
            raise DomainError(f"|c1| must be nonnegative, got {self.c1_mag}")

    @property
    def coefficients(self):
        """Coefficients from highest degree down."""
        return np.array([self.rho2, -self.c1_mag, 0.0, 0.0, -2.0 / self.lambda1])

    def poly(self, t):
        t = np.asarray(t, dtype=float)
        return self.rho2 * t**4 - self.c1_mag * t**3 - 2.0 / self.lambda1

    def objective(self, t):
        """``g(t)``"""
        t = np.asarray(t, dtype=float)
        return 1.0 / (self.lambda1 * t**2) + 0.5 * self.rho2 * t**2 - self.c1_mag * t

    def residual_ok(self, t):
        return abs(self.poly(t)) < RESIDUAL_TOL * max(1.0, self.rho2 * t**4)


def _companion_roots(p):
    # monic t^4 + a3 t^3 + a2 t^2 + a1 t + a0
    a3 = -p.c1_mag / p.rho2
    a0 = -2.0 / (p.lambda1 * p.rho2)
    comp = np.zeros((4, 4))
    comp[0, :] = [-a3, 0.0, 0.0, -a0]
    comp[1, 0] = comp[2, 1] = comp[3, 2] = 1.0
    return np.linalg.eigvals(comp)


def _polish(p, t):
    for _ in range(_POLISH_STEPS):
        f = p.rho2 * t**4 - p.c1_mag * t**3 - 2.0 / p.lambda1
        df = 4.0 * p.rho2 * t**3 - 3.0 * p.c1_mag * t**2
        if df <= 0:
            break
        step = f / df
        t_new = t - step
        if t_new <= 0:
            break
        t = t_new
        if abs(step) <= 4 * np.finfo(float).eps * t:
            break
    return t


def _bisect(p):
    # sign change: poly(0) < 0, poly(hi) > 0 for hi past the Cauchy bound
    lo = 0.0
    hi = 1.0 + max(p.c1_mag / p.rho2, 2.0 / (p.lambda1 * p.rho2))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p.poly(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 2 * np.finfo(float).eps * hi:
            break
    return 0.5 * (lo + hi)


def positive_real_roots(p):
    """Positive real roots of the stationarity quartic.

    Companion-matrix eigenvalues are filtered for (numerically) real,
    positive values and refined by a few Newton steps.  The constant term
    is negative and the leading coefficient positive, so at least one
    positive root exists; a bisection fallback covers the case where the
    eigenvalue route misses it to rounding.

    Returns
    -------
    list of float
        Sorted ascending, duplicates within rounding merged.
    """
    roots = []
    for r in _companion_roots(p):
        if abs(r.imag) < IMAG_TOL * (1.0 + abs(r.real)) and r.real > 0:
            t = _polish(p, float(r.real))
            if p.residual_ok(t):
                roots.append(t)
    if not roots:
        roots.append(_polish(p, _bisect(p)))
    roots.sort()
    merged = [roots[0]]
    for t in roots[1:]:
        if t - merged[-1] > 1e-12 * t:
            merged.append(t)
    return merged


def optimal_magnitude(p):
    """Positive root with the smallest ``g``; ties go to the larger root."""
    best_t, best_g = None, np.inf
    for t in positive_real_roots(p):
        g = float(p.objective(t))
        if g < best_g or (g == best_g and t > best_t):
            best_t, best_g = t, g
    return best_t
