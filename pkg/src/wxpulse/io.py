"""Run configuration and waveform file persistence.

Configuration is YAML.  Validation errors carry the offending field path
and, when the field is present in the file, its line number.
"""

from dataclasses import dataclass, field
import datetime as _dt
import hashlib
import json
import os

import numpy as np
import yaml

from . import signal_model as sm
from .admm import AdmmParams
from .design import DesignConfig
from .errors import ConfigError, DomainError
from .scene import RadarParams, step_profile

SCHEMA_VERSION = 1


def _line_map(text):
    """Map dotted key paths to 1-based line numbers."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                path = f"{prefix}[{i}]"
                lines[path] = v.start_mark.line + 1
                walk(v, path)

    root = yaml.compose(text, Loader=yaml.SafeLoader)
    if root is not None:
        walk(root, "")
    return lines


class _Section:
    """Typed accessor over one mapping of the config with error context."""

    def __init__(self, data, path, lines, source):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("expected a mapping", path, lines.get(path), source)
        self.data, self.path, self.lines, self.source = data, path, lines, source

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def fail(self, key, msg):
        k = self._key(key)
        line = self.lines.get(k, self.lines.get(self.path))
        raise ConfigError(msg, k, line, self.source)

    def section(self, key):
        return _Section(self.data.get(key), self._key(key), self.lines, self.source)

    def has(self, key):
        return self.data.get(key) is not None

    def get(self, key, default, kind=float, check=None, msg=None):
        raw = self.data.get(key, default)
        if raw is None:
            return None
        try:
            if kind is int and (isinstance(raw, bool) or float(raw) != int(raw)):
                raise ValueError
            val = kind(raw)
        except (TypeError, ValueError):
            self.fail(key, f"expected {kind.__name__}, got {raw!r}")
        if kind is float and not np.isfinite(val):
            self.fail(key, "must be finite")
        if check is not None and not check(val):
            self.fail(key, msg or f"invalid value {raw!r}")
        return val

    def choice(self, key, default, options):
        val = self.data.get(key, default)
        if val not in options:
            self.fail(key, f"must be one of {sorted(options)}, got {val!r}")
        return val

    def vector(self, key, length=None):
        raw = self.data.get(key)
        if raw is None:
            return None
        try:
            arr = np.asarray(raw, dtype=float)
        except (TypeError, ValueError):
            self.fail(key, "expected a list of numbers")
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            self.fail(key, "expected a flat list of finite numbers")
        if length is not None and arr.size != length:
            self.fail(key, f"expected {length} entries, got {arr.size}")
        return arr


_positive = (lambda v: v > 0, "must be positive")
_nonneg = (lambda v: v >= 0, "must be nonnegative")


@dataclass
class RunConfig:
    """Validated run configuration.

    ``profile_spec`` is kept unresolved because the lag range of the clutter
    profile depends on the filter length it is applied to.
    """

    N: int = 32
    M: int = 0
    seed: int = 0
    restarts: int = 3
    outer_iters: int = 100
    outer_tol: float = 1e-6
    taps: str = "full"
    admm: AdmmParams = field(default_factory=AdmmParams)
    profile_spec: dict = field(default_factory=dict)
    radar: RadarParams = field(default_factory=RadarParams)
    scene_spec: dict = field(default_factory=dict)
    source: str = None
    config_hash: str = None

    def profile(self, length):
        """Clutter profile covering vectors of ``length`` samples."""
        spec = self.profile_spec
        if spec.get("zeta") is not None:
            zeta = np.asarray(spec["zeta"], dtype=float)
            if zeta.size < 2 * length - 1:
                raise ConfigError(
                    f"explicit zeta has {zeta.size} lags, filter length {length} "
                    f"needs {2 * length - 1}", "profile.zeta", spec.get("_line"), self.source)
            return sm.ClutterProfile(zeta, spec["noise_power"])
        return sm.ClutterProfile.uniform(length, spec["clutter"], spec["noise_power"],
                                         spec["zeta0"])

    def design_config(self, seed=None, restarts=None):
        return DesignConfig(
            N=self.N,
            M=self.M,
            profile=self.profile(2 * self.M + self.N),
            admm=self.admm,
            outer_iters=self.outer_iters,
            outer_tol=self.outer_tol,
            seed=self.seed if seed is None else seed,
            restarts=self.restarts if restarts is None else restarts,
            taps=self.taps,
        )

    def scene_truth(self):
        """Per-gate truth power (linear) and velocity (m/s)."""
        s = self.scene_spec
        return s["zeta"], s["velocity"]

    def scene_noise_power(self):
        snr = self.scene_spec["snr_db"]
        if snr is None:
            return 0.0
        zeta = self.scene_spec["zeta"]
        ref = zeta[zeta > 0].min()
        return ref / 10.0 ** (snr / 10.0)


def load_config(path):
    """Parse and validate a YAML run configuration."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from exc
    return parse_config(raw.decode("utf-8"), source=str(path),
                        config_hash=hashlib.sha256(raw).hexdigest())


def parse_config(text, source="<config>", config_hash=None):
    try:
        data = yaml.safe_load(text)
        lines = _line_map(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          line=line, source=source) from exc
    root = _Section(data, "", lines, source)
    cfg = RunConfig(source=source, config_hash=config_hash)
    cfg.seed = root.get("seed", 0, int, *_nonneg)

    d = root.section("design")
    cfg.N = d.get("N", 32, int, lambda v: v >= 2, "must be >= 2")
    cfg.M = d.get("M", 0, int, *_nonneg)
    cfg.restarts = d.get("restarts", 3, int, lambda v: v >= 1, "must be >= 1")
    cfg.outer_iters = d.get("outer_iters", 100, int, lambda v: v >= 1, "must be >= 1")
    cfg.outer_tol = d.get("outer_tol", 1e-6, float, *_positive)
    cfg.taps = d.choice("taps", "full", {"full", "core"})

    a = root.section("admm")
    cfg.admm = AdmmParams(
        rho1=a.get("rho1", 1.0, float, *_positive),
        rho2=a.get("rho2", 1.0, float, *_positive),
        max_iters=a.get("max_iters", 500, int, lambda v: v >= 1, "must be >= 1"),
        primal_tol=a.get("primal_tol", 1e-6, float, *_positive),
    )

    p = root.section("profile")
    spec = {
        "noise_power": p.get("noise_power", 1.0, float, *_positive),
        "clutter": p.get("clutter", 1.0, float, *_nonneg),
        "zeta0": p.get("zeta0", None, float, *_positive),
        "zeta": None,
    }
    if p.has("zeta"):
        zeta = p.vector("zeta")
        if zeta.size % 2 == 0:
            p.fail("zeta", "needs odd length 2L-1 (lags -(L-1)..L-1)")
        if np.any(zeta < 0):
            p.fail("zeta", "entries must be nonnegative")
        if zeta[zeta.size // 2] <= 0:
            p.fail("zeta", "lag-0 entry must be positive")
        if zeta.size < 2 * (2 * cfg.M + cfg.N) - 1:
            p.fail("zeta", f"needs at least {2 * (2 * cfg.M + cfg.N) - 1} lags for 2M+N")
        spec["zeta"] = zeta
        spec["_line"] = lines.get("profile.zeta")
    cfg.profile_spec = spec

    r = root.section("radar")
    cfg.radar = RadarParams(
        wavelength=r.get("wavelength", 0.107, float, *_positive),
        pri=r.get("pri", 1e-3, float, *_positive),
        n_pulses=r.get("n_pulses", 128, int, lambda v: v >= 2, "must be >= 2"),
        calibration_db=r.get("calibration_db", 0.0, float),
    )

    s = root.section("scene")
    gates = s.get("gates", 64, int, lambda v: v >= 1, "must be >= 1")
    kind = s.choice("kind", "step", {"step", "explicit"})
    if kind == "step":
        low = s.get("low_dbz", 0.0, float)
        step = s.get("step_db", 30.0, float)
        at = s.get("step_gate", gates // 2, int, lambda v: 0 <= v <= gates,
                   f"must lie in [0, {gates}]")
        zeta = step_profile(gates, low, step, at, cfg.radar.calibration_db)
    else:
        dbz = s.vector("dbz", gates)
        if dbz is None:
            s.fail("dbz", "explicit scene needs a per-gate 'dbz' list")
        zeta = 10.0 ** ((dbz - cfg.radar.calibration_db) / 10.0)
    vel = s.data.get("velocity", 0.0)
    if isinstance(vel, list):
        vel = s.vector("velocity", gates)
    elif isinstance(vel, dict):
        v = s.section("velocity")
        vel = np.linspace(v.get("start", 0.0, float), v.get("stop", 0.0, float), gates)
    else:
        vel = np.full(gates, s.get("velocity", 0.0, float))
    vn = cfg.radar.nyquist_velocity
    if np.any(np.abs(vel) >= vn):
        s.fail("velocity", f"must stay inside the unambiguous interval |v| < {vn:.4g} m/s")
    cfg.scene_spec = {
        "gates": gates,
        "zeta": zeta,
        "velocity": vel,
        "amplitude": s.choice("amplitude", "gaussian", {"gaussian", "rotation"}),
        "correlation": s.get("correlation", 0.9, float, lambda v: 0 <= v < 1,
                             "must lie in [0, 1)"),
        "snr_db": s.get("snr_db", 20.0, float),
    }
    return cfg


def _timestamp():
    """UTC timestamp, pinned by SOURCE_DATE_EPOCH when set."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        t = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        t = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class WaveformFile:
    """Persisted code/filter pair.

    The code is stored as phases in radians and the filter as ``[re, im]``
    pairs; JSON float formatting round-trips both bit-exactly.
    """

    N: int
    M: int
    phases: np.ndarray
    filter: np.ndarray
    provenance: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_pair(cls, code, filt, pad, config_hash=None, seed=None, label=None):
        code = sm.as_phase_code(code)
        filt = np.asarray(filt, dtype=complex)
        if filt.shape != (2 * pad + code.size,):
            raise DomainError("filter length must equal 2M+N")
        prov = {"config_hash": config_hash, "seed": seed, "timestamp": _timestamp()}
        if label is not None:
            prov["label"] = label
        return cls(code.size, pad, np.angle(code), filt.copy(), prov)

    @property
    def code(self):
        return sm.code_from_phases(self.phases)

    @property
    def length(self):
        return 2 * self.M + self.N

    def to_json(self):
        doc = {
            "schema_version": self.schema_version,
            "N": self.N,
            "M": self.M,
            "code_phases": [float(p) for p in self.phases],
            "filter": [[float(z.real), float(z.imag)] for z in self.filter],
            "provenance": dict(self.provenance),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text, source="<waveform>"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno, source=source) from exc
        if not isinstance(doc, dict):
            raise ConfigError("waveform file must hold a JSON object", source=source)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {doc.get('schema_version')!r}",
                              "schema_version", source=source)
        try:
            n, m = int(doc["N"]), int(doc["M"])
            phases = np.array(doc["code_phases"], dtype=float)
            pairs = np.array(doc["filter"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"missing or malformed field: {exc}", source=source) from exc
        if phases.shape != (n,) or n < 2:
            raise ConfigError(f"expected {n} code phases (N >= 2)", "code_phases", source=source)
        if pairs.shape != (2 * m + n, 2):
            raise ConfigError(f"expected {2 * m + n} [re, im] filter pairs", "filter", source=source)
        if not (np.all(np.isfinite(phases)) and np.all(np.isfinite(pairs))):
            raise ConfigError("non-finite values in waveform file", source=source)
        filt = np.empty(pairs.shape[0], dtype=complex)
        filt.real, filt.imag = pairs[:, 0], pairs[:, 1]
        return cls(n, m, phases, filt, dict(doc.get("provenance") or {}))

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read waveform file: {exc}", source=str(path)) from exc
        return cls.from_json(text, source=str(path))
