"""Fast-time signal model for a pulse-compression weather radar.

Lags and gates are 0-based throughout.  The shift operator follows the rule
``(J_k v)[m] = v[m - k]`` with zero fill, so a positive lag delays the
sequence.  Lag-indexed vectors of length ``2L - 1`` store lag ``k`` at
position ``k + L - 1``.

Dense shift matrices never appear here; every operation is matrix free.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateFilterError, DomainError, OrthogonalFilterError

UNIMODULAR_TOL = 1e-12
_ZERO_FILTER_TOL = 1e-12


def _frozen(a, dtype=None):
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def as_phase_code(x):
    """Validate and return ``x`` as a complex unimodular code vector."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1 or x.size < 2:
        raise DomainError(f"code must be a 1-D vector with N >= 2, got shape {x.shape}")
    dev = np.max(np.abs(np.abs(x) - 1.0))
    if dev > UNIMODULAR_TOL:
        raise DomainError(f"code is not unimodular (max | |x_i| - 1 | = {dev:.3e})")
    return x


def code_from_phases(phases):
    """Unimodular code ``exp(j * phases)``."""
    return np.exp(1j * np.asarray(phases, dtype=float))


def random_code(n, rng):
    """Uniformly random unimodular code of length ``n``."""
    return code_from_phases(2.0 * np.pi * rng.random(n))


def shift_apply(v, k):
    """Apply the ``k``-lag shift matrix to ``v`` without forming it.

    Parameters
    ----------
    v : array_like
        Vector of length ``L``.
    k : int
        Lag with ``|k| < L``.

    Returns
    -------
    ndarray
        ``out[m] = v[m - k]``, zero where ``m - k`` falls outside ``[0, L)``.
    """
    v = np.asarray(v)
    n = v.shape[0]
    k = int(k)
    if abs(k) >= n:
        raise DomainError(f"lag {k} exceeds vector support of length {n}")
    out = np.zeros_like(v)
    if k >= 0:
        out[k:] = v[: n - k]
    else:
        out[:k] = v[-k:]
    return out


def zero_pad(x, pad):
    """Embed ``x`` between ``pad`` zeros on each side."""
    if pad < 0:
        raise DomainError(f"pad length must be nonnegative, got {pad}")
    x = np.asarray(x, dtype=complex)
    return np.concatenate([np.zeros(pad, complex), x, np.zeros(pad, complex)])


def _shift_stack(v, lags):
    """Matrix whose column ``j`` is ``shift_apply(v, lags[j])``."""
    n = v.shape[0]
    idx = np.arange(n)[:, None] - np.asarray(lags)[None, :]
    valid = (idx >= 0) & (idx < n)
    out = np.zeros(idx.shape, dtype=complex)
    out[valid] = v[idx[valid]]
    return out


@dataclass(frozen=True)
class ClutterProfile:
    """Reflectivity power per lag plus receiver noise power.

    ``zeta`` has odd length ``2L - 1`` and holds lag ``k`` at index
    ``k + L - 1``; ``L`` is the longest vector the profile can describe.
    """

    zeta: np.ndarray
    noise_power: float

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=float)
        if zeta.ndim != 1 or zeta.size % 2 == 0:
            raise DomainError("zeta must be a 1-D vector of odd length 2L-1")
        if not np.all(np.isfinite(zeta)) or np.any(zeta < 0):
            raise DomainError("zeta entries must be finite and nonnegative")
        if zeta[zeta.size // 2] <= 0:
            raise DomainError("zeta at lag 0 must be positive")
        if not np.isfinite(self.noise_power) or self.noise_power <= 0:
            raise DomainError(f"noise power must be positive, got {self.noise_power}")
        object.__setattr__(self, "zeta", _frozen(zeta))
        object.__setattr__(self, "noise_power", float(self.noise_power))

    @classmethod
    def uniform(cls, length, clutter=1.0, noise_power=1.0, zeta0=None):
        """Profile with ``zeta_k = clutter`` for every nonzero lag."""
        zeta = np.full(2 * length - 1, float(clutter))
        zeta[length - 1] = float(clutter if zeta0 is None else zeta0)
        return cls(zeta, noise_power)

    @property
    def max_length(self):
        return (self.zeta.size + 1) // 2

    @property
    def zeta0(self):
        return float(self.zeta[self.max_length - 1])

    def lags(self, length=None):
        """Lags ``-(length-1) .. length-1`` (default: full support)."""
        length = self.max_length if length is None else length
        return np.arange(-(length - 1), length)

    def central(self, length):
        """Zeta restricted to lags ``|k| < length``."""
        if length > self.max_length:
            raise DomainError(
                f"profile covers vectors up to length {self.max_length}, need {length}"
            )
        c = self.max_length - 1
        return self.zeta[c - (length - 1) : c + length]


def _check_profile(prof, length):
    if prof.max_length < length:
        raise DomainError(
            f"profile lag range covers length {prof.max_length}, need {length}"
        )


def build_covariance(xp, prof):
    """Interference-plus-noise covariance seen by a filter on padded code ``xp``.

    ``R = sum_{k != 0} zeta_k (J_k xp)(J_k xp)^H + sigma^2 I``.
    """
    xp = np.asarray(xp, dtype=complex)
    n = xp.shape[0]
    _check_profile(prof, n)
    lags = prof.lags(n)
    zeta = prof.central(n).copy()
    zeta[n - 1] = 0.0
    s = _shift_stack(xp, lags)
    r = (s * zeta) @ s.conj().T
    r = 0.5 * (r + r.conj().T)
    r[np.diag_indices(n)] += prof.noise_power
    return r


@dataclass(frozen=True)
class QuadraticForms:
    """Numerator/denominator matrices of the code-update ratio.

    ``P`` is Hermitian PSD, ``Q = w_core w_core^H`` has rank one.
    """

    P: np.ndarray
    Q: np.ndarray
    w_core: np.ndarray

    @cached_property
    def eig(self):
        """Eigen-decomposition of ``P``, reused by every ADMM y-update."""
        lam, vec = np.linalg.eigh(self.P)
        return np.clip(lam, 0.0, None), vec

    def ratio(self, x):
        """``x^H P x / x^H Q x``."""
        num = np.real(np.vdot(x, self.P @ x))
        den = abs(np.vdot(self.w_core, x)) ** 2
        return num / den


def build_quadratic_forms(w_tilde, prof, pad, n, taps="full"):
    """Quadratic forms of the code-update subproblem for a fixed filter.

    Parameters
    ----------
    w_tilde : array_like
        Receive filter of length ``2 * pad + n``.
    prof : ClutterProfile
    pad, n : int
        Pad length and code length.
    taps : {"full", "core"}
        ``"full"`` builds each interference vector from the whole padded
        filter, so ``x^H P x / x^H Q x`` equals the estimator MSE for every
        pad length.  ``"core"`` uses only the central ``n`` taps and lags
        ``|k| < n``.  Both agree when ``pad == 0``.

    Returns
    -------
    QuadraticForms
    """
    w = np.asarray(w_tilde, dtype=complex)
    length = 2 * pad + n
    if w.shape != (length,):
        raise DomainError(f"filter length {w.shape} does not match 2M+N = {length}")
    w_core = w[pad : pad + n]
    if np.linalg.norm(w_core) <= _ZERO_FILTER_TOL:
        raise DegenerateFilterError("central filter slice is the zero vector")
    if taps == "full":
        _check_profile(prof, length)
        lags = prof.lags(length)
        zeta = prof.central(length).copy()
        zeta[length - 1] = 0.0
        # column k holds w[pad + i + k], i.e. the core window of J_k^H w
        b = _shift_stack(w, -lags)[pad : pad + n]
        noise = prof.noise_power * np.vdot(w, w).real / n
    elif taps == "core":
        _check_profile(prof, n)
        lags = prof.lags(n)
        zeta = prof.central(n).copy()
        zeta[n - 1] = 0.0
        b = _shift_stack(w_core, -lags)
        noise = prof.noise_power * np.vdot(w_core, w_core).real / n
    else:
        raise ValueError(f"unknown taps mode {taps!r}")
    p = (b * zeta) @ b.conj().T
    p = 0.5 * (p + p.conj().T)
    p[np.diag_indices(n)] += noise
    q = np.outer(w_core, w_core.conj())
    return QuadraticForms(_frozen(p), _frozen(q), _frozen(w_core))


def cross_correlation(xp, w):
    """``r[k + L - 1] = w^H J_k xp`` for every lag ``k``."""
    xp = np.asarray(xp, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if xp.shape != w.shape:
        raise DomainError(f"filter shape {w.shape} does not match code shape {xp.shape}")
    # np.correlate(a, v)[j] = sum_n a[n + j] conj(v[n]) with j ascending
    return np.correlate(xp, w, mode="full")[::-1]


def _gain(xp, w):
    g = np.vdot(w, xp)
    scale = np.linalg.norm(w) * np.linalg.norm(xp)
    if abs(g) <= 1e-14 * scale:
        raise OrthogonalFilterError("filter is orthogonal to the padded code")
    return g


def interference_power(xp, w, prof):
    """``w^H R w`` evaluated through the cross-correlation sidelobes."""
    xp = np.asarray(xp, dtype=complex)
    w = np.asarray(w, dtype=complex)
    n = xp.shape[0]
    _check_profile(prof, n)
    r = cross_correlation(xp, w)
    zeta = prof.central(n).copy()
    zeta[n - 1] = 0.0
    return float(np.dot(zeta, np.abs(r) ** 2) + prof.noise_power * np.vdot(w, w).real)


def mse(xp, w, prof):
    """Mean square error of the instrumental-variable estimate of ``alpha_0``."""
    g = _gain(xp, w)
    return interference_power(xp, w, prof) / abs(g) ** 2


def sinr(xp, w, prof):
    """Output signal-to-interference-plus-noise ratio (linear)."""
    g = _gain(xp, w)
    return prof.zeta0 * abs(g) ** 2 / interference_power(xp, w, prof)


def estimate_alpha0(sample, w, xp):
    """Normalize a filtered sample by the filter's mainlobe gain."""
    return sample / _gain(xp, w)


def filter_gate_output(received, w, gate):
    """Correlate ``w`` against the window ``received[gate : gate + len(w)]``.

    Sample ``n`` of ``received`` carries the return of range gate ``g`` at
    ``n = g + i`` for padded-code tap ``i``, so a scatterer ``alpha`` at gate
    ``d`` contributes ``alpha * w^H J_{d - gate} xp`` to the output.
    """
    received = np.asarray(received, dtype=complex)
    w = np.asarray(w, dtype=complex)
    n = w.shape[0]
    if gate < 0 or gate + n > received.shape[0]:
        raise DomainError(
            f"window [{gate}, {gate + n}) outside received vector of length {received.shape[0]}"
        )
    return np.vdot(w, received[gate : gate + n])
