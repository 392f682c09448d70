"""Synthetic weather scenes and radar moment estimation.

A scene is a set of range gates, each with a slow-time sequence of complex
scatter coefficients.  Echoes are formed by linear convolution of the gate
sequence with the padded transmit code (fast time), noise is added, the
result is compressed with a receive filter, and reflectivity and radial
velocity are recovered per gate with the pulse-pair estimator.

Velocity sign: a gate moving at ``v`` advances its slow-time phase by
``-4 pi pri v / wavelength`` per pulse, so the lag-1 estimator returns
``+v``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import signal_model as sm
from .errors import DomainError


@dataclass(frozen=True)
class RadarParams:
    wavelength: float = 0.107
    pri: float = 1e-3
    n_pulses: int = 128
    calibration_db: float = 0.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        if not self.pri > 0:
            raise DomainError("pri must be positive")
        if int(self.n_pulses) < 2:
            raise DomainError("n_pulses must be >= 2")

    @property
    def nyquist_velocity(self):
        return self.wavelength / (4.0 * self.pri)


@dataclass(frozen=True)
class RangeScene:
    alpha: np.ndarray  # gates x pulses
    truth_zeta: np.ndarray
    truth_velocity: np.ndarray

    @property
    def gates(self):
        return self.alpha.shape[0]

    def truth_dbz(self, calibration_db=0.0):
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.truth_zeta) + calibration_db

    def __add__(self, other):
        return RangeScene(
            self.alpha + other.alpha,
            self.truth_zeta + other.truth_zeta,
            self.truth_velocity,
        )


@dataclass(frozen=True)
class MomentEstimates:
    reflectivity_dbz: np.ndarray
    velocity: np.ndarray  # NaN marks undefined gates


def generate_scene(truth_zeta, truth_velocity, radar, seed=None, amplitude="gaussian",
                   correlation=0.9):
    """Draw one realization of a range scene.

    Parameters
    ----------
    truth_zeta : array_like
        Mean power per gate (linear).
    truth_velocity : array_like
        Radial velocity per gate, m/s.
    radar : RadarParams
    seed : int or numpy.random.Generator, optional
    amplitude : {"gaussian", "rotation"}
        ``"gaussian"``: zero-mean circular complex Gaussian sequence with
        AR(1) pulse-to-pulse correlation ``correlation``.  ``"rotation"``:
        constant modulus ``sqrt(zeta)`` with a random initial phase, i.e. a
        pure Doppler rotation.
    correlation : float
        Lag-1 amplitude correlation for the Gaussian model, in ``[0, 1)``.

    Returns
    -------
    RangeScene
    """
    zeta = np.asarray(truth_zeta, dtype=float)
    vel = np.asarray(truth_velocity, dtype=float)
    if zeta.shape != vel.shape or zeta.ndim != 1:
        raise DomainError("truth_zeta and truth_velocity must be 1-D of equal length")
    if np.any(zeta < 0):
        raise DomainError("truth_zeta must be nonnegative")
    rng = np.random.default_rng(seed)
    g, p = zeta.size, int(radar.n_pulses)
    if amplitude == "gaussian":
        if not 0 <= correlation < 1:
            raise DomainError("correlation must lie in [0, 1)")
        e = (rng.standard_normal((g, p)) + 1j * rng.standard_normal((g, p))) / np.sqrt(2)
        amp = np.empty_like(e)
        amp[:, 0] = e[:, 0]
        if p > 1:
            zi = (correlation * e[:, :1]).astype(complex)
            amp[:, 1:], _ = lfilter([np.sqrt(1 - correlation**2)], [1.0, -correlation],
                                    e[:, 1:], axis=1, zi=zi)
    elif amplitude == "rotation":
        amp = np.exp(2j * np.pi * rng.random((g, 1))) * np.ones((1, p))
    else:
        raise DomainError(f"unknown amplitude model {amplitude!r}")
    m = np.arange(p)
    doppler = np.exp(-4j * np.pi * radar.pri * vel[:, None] * m[None, :] / radar.wavelength)
    alpha = np.sqrt(zeta)[:, None] * amp * doppler
    return RangeScene(alpha, zeta.copy(), vel.copy())


def synthesize_echo(scene, xp):
    """Uncompressed fast-time echo, shape ``(gates + len(xp) - 1, n_pulses)``.

    Gate ``g`` contributes ``alpha[g] * xp[n - g]`` to fast-time sample
    ``n`` (full linear convolution, zero boundary).
    """
    xp = np.asarray(xp, dtype=complex)
    a = np.asarray(scene.alpha if isinstance(scene, RangeScene) else scene)
    g, p = a.shape
    out = np.zeros((g + xp.size - 1, p), dtype=complex)
    for i, tap in enumerate(xp):
        if tap != 0:
            out[i : i + g] += tap * a
    return out


def add_noise(echo, noise_power, rng):
    """Add circular white Gaussian receiver noise of the given power."""
    if noise_power <= 0:
        return np.array(echo, dtype=complex)
    shape = np.shape(echo)
    n = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return echo + np.sqrt(noise_power / 2.0) * n


def compress(echo, w, xp):
    """Pulse-compress ``echo`` with filter ``w``, normalized to unit mainlobe gain.

    Output gate ``g`` is ``w^H echo[g : g + L] / (w^H xp)``; the number of
    gates is ``len(echo) - L + 1``.
    """
    w = np.asarray(w, dtype=complex)
    echo = np.asarray(echo, dtype=complex)
    gain = sm.estimate_alpha0(1.0, w, xp)  # 1 / (w^H xp); raises when orthogonal
    n = w.size
    g = echo.shape[0] - n + 1
    if g < 1:
        raise DomainError(f"echo of {echo.shape[0]} samples shorter than filter ({n})")
    out = np.zeros((g,) + echo.shape[1:], dtype=complex)
    for i, tap in enumerate(np.conj(w)):
        if tap != 0:
            out += tap * echo[i : i + g]
    return out * gain


def estimate_moments(compressed, radar):
    """Reflectivity (dBZ) and pulse-pair radial velocity per gate."""
    s = np.asarray(compressed, dtype=complex)
    if s.ndim != 2 or s.shape[1] < 2:
        raise DomainError("need a gates x pulses array with at least 2 pulses")
    power = np.mean(np.abs(s) ** 2, axis=1)
    r1 = np.sum(np.conj(s[:, :-1]) * s[:, 1:], axis=1)
    with np.errstate(divide="ignore"):
        dbz = 10.0 * np.log10(power) + radar.calibration_db
    vel = -(radar.wavelength / (4.0 * np.pi * radar.pri)) * np.angle(r1)
    undefined = ~(power > 0)
    dbz[undefined] = -np.inf
    vel[undefined] = np.nan
    return MomentEstimates(dbz, vel)


@dataclass(frozen=True)
class ProfileErrors:
    dbz_bias: float
    dbz_rmse: float
    vel_bias: float
    vel_rmse: float
    dbz_residuals: np.ndarray
    vel_residuals: np.ndarray

    def summary(self):
        return {
            "dbz_bias": self.dbz_bias,
            "dbz_rmse": self.dbz_rmse,
            "vel_bias": self.vel_bias,
            "vel_rmse": self.vel_rmse,
        }


def velocity_residual(est, truth, nyquist=None):
    """``est - truth``, wrapped into the unambiguous interval when given."""
    d = np.asarray(est, dtype=float) - np.asarray(truth, dtype=float)
    if nyquist is not None:
        d = (d + nyquist) % (2.0 * nyquist) - nyquist
    return d


def _stats(res):
    ok = np.isfinite(res)
    if not ok.any():
        return np.nan, np.nan
    r = res[ok]
    return float(np.mean(r)), float(np.sqrt(np.mean(r**2)))


def compare_profiles(truth, est, calibration_db=0.0, nyquist=None):
    """Bias and RMSE of estimated moments against the scene truth.

    Gates with zero truth power or undefined estimates are excluded.
    ``truth`` may be a single scene or a sequence of scenes matched with a
    sequence of estimates; statistics are then pooled over all of them.
    """
    if isinstance(truth, RangeScene):
        truth, est = [truth], [est]
    if len(truth) != len(est):
        raise DomainError("need one estimate per truth scene")
    dres, vres = [], []
    for t, e in zip(truth, est):
        if t.gates != e.reflectivity_dbz.size or t.gates != e.velocity.size:
            raise DomainError(f"gate count mismatch: truth {t.gates}, estimate {e.velocity.size}")
        tdbz = t.truth_dbz(calibration_db)
        bad = ~np.isfinite(tdbz) | ~np.isfinite(e.reflectivity_dbz)
        d = np.full(t.gates, np.nan)
        d[~bad] = e.reflectivity_dbz[~bad] - tdbz[~bad]
        v = velocity_residual(e.velocity, t.truth_velocity, nyquist)
        v[bad | ~np.isfinite(e.velocity)] = np.nan
        dres.append(d)
        vres.append(v)
    dres = np.concatenate(dres)
    vres = np.concatenate(vres)
    db, dr = _stats(dres)
    vb, vr = _stats(vres)
    return ProfileErrors(db, dr, vb, vr, dres, vres)


def step_profile(gates, low_dbz=0.0, step_db=30.0, step_gate=None, calibration_db=0.0):
    """Linear power profile with a single reflectivity step."""
    step_gate = gates // 2 if step_gate is None else step_gate
    dbz = np.full(gates, float(low_dbz))
    dbz[step_gate:] += step_db
    return 10.0 ** ((dbz - calibration_db) / 10.0)


def simulate(code, filt, pad, truth_zeta, truth_velocity, radar, trials=1, seed=0,
             noise_power=0.0, amplitude="gaussian", correlation=0.9):
    """Full truth-to-moments pipeline over independent seeded trials.

    Trial ``i`` uses the ``i``-th child of ``SeedSequence(seed)`` for both
    the scene and the receiver noise, so pairing two waveforms under the
    same seed exposes them to identical scenes.

    Returns
    -------
    scenes : list of RangeScene
    estimates : list of MomentEstimates
    """
    xp = sm.zero_pad(code, pad)
    scenes, estimates = [], []
    for ss in np.random.SeedSequence(seed).spawn(trials):
        scene_ss, noise_ss = ss.spawn(2)
        sc = generate_scene(truth_zeta, truth_velocity, radar, np.random.default_rng(scene_ss),
                            amplitude=amplitude, correlation=correlation)
        echo = add_noise(synthesize_echo(sc, xp), noise_power, np.random.default_rng(noise_ss))
        comp = compress(echo, filt, xp)
        scenes.append(sc)
        estimates.append(estimate_moments(comp, radar))
    return scenes, estimates
