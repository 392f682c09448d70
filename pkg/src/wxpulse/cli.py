"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 solver failure,
4 degenerate code/filter pair during evaluation.  Log verbosity comes from
the ``WXPULSE_LOG`` environment variable (default ``WARNING``).
"""

import argparse
import csv
import io as _stdio
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import scene as sc
from . import signal_model as sm
from .design import design, evaluate, matched_filter
from .errors import (
    ConditioningError,
    ConfigError,
    DegenerateFilterError,
    DegenerateIterateError,
    DomainError,
    OrthogonalFilterError,
    SolverError,
)
from .io import WaveformFile, load_config

log = logging.getLogger("wxpulse")

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_DEGENERATE = 4

BARKER13 = np.array([1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1], dtype=complex)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _csv_text(header, rows):
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x):
    return repr(float(x))


def _dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _metrics_for(wf, cfg):
    prof = cfg.profile(wf.length)
    return evaluate(wf.code, wf.filter, prof, wf.M)


def _simulate_for(wf, cfg, trials, seed):
    zeta, vel = cfg.scene_truth()
    s = cfg.scene_spec
    scenes, est = sc.simulate(
        wf.code, wf.filter, wf.M, zeta, vel, cfg.radar,
        trials=trials, seed=seed, noise_power=cfg.scene_noise_power(),
        amplitude=s["amplitude"], correlation=s["correlation"],
    )
    err = sc.compare_profiles(scenes, est, cfg.radar.calibration_db,
                              nyquist=cfg.radar.nyquist_velocity)
    return scenes, est, err


def cmd_design(args):
    cfg = load_config(args.config)
    dcfg = cfg.design_config(seed=args.seed, restarts=args.restarts)
    result = design(dcfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    wf = WaveformFile.from_pair(result.code, result.filter, dcfg.M,
                                config_hash=cfg.config_hash, seed=dcfg.seed)
    wf.save(out / "waveform.json")
    zeta0 = dcfg.profile.zeta0
    rows = [(i, _num(m), _num(10 * np.log10(zeta0 / m)))
            for i, m in enumerate(result.objective_trace)]
    _write_csv(out / "convergence.csv", ["iter", "mse", "sinr_db"], rows)
    print(f"mse {result.mse:.6g}  sinr_db {10 * np.log10(result.sinr):.4f}  "
          f"outer iterations {result.objective_trace.size - 1}  -> {out}")
    return 0


def cmd_evaluate(args):
    wf = WaveformFile.load(args.waveform)
    cfg = load_config(args.config)
    m = _metrics_for(wf, cfg)
    doc = {k: float(v) for k, v in m.as_dict().items()}
    doc["N"], doc["M"] = wf.N, wf.M
    doc["provenance"] = {"waveform": wf.provenance, "config_hash": cfg.config_hash}
    text = _dumps(doc)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_simulate(args):
    wf = WaveformFile.load(args.waveform)
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    scenes, est, err = _simulate_for(wf, cfg, args.trials, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for t, (s, e) in enumerate(zip(scenes, est)):
        tdbz = s.truth_dbz(cfg.radar.calibration_db)
        for g in range(s.gates):
            rows.append((t, g, _num(tdbz[g]), _num(e.reflectivity_dbz[g]),
                         _num(s.truth_velocity[g]), _num(e.velocity[g])))
    _write_csv(out / "moments.csv",
               ["trial", "gate", "truth_dbz", "est_dbz", "truth_v", "est_v"], rows)
    summary = err.summary()
    summary.update(trials=args.trials, seed=seed)
    text = _dumps(summary)
    (out / "summary.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_compare(args):
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    header = ["waveform", "N", "M", "sinr_db", "mse", "psl_db", "isl_db",
              "dbz_bias", "dbz_rmse", "vel_rmse"]
    rows = []
    for path in args.waveforms:
        wf = WaveformFile.load(path)
        m = _metrics_for(wf, cfg)
        _, _, err = _simulate_for(wf, cfg, args.trials, seed)
        rows.append((path, wf.N, wf.M, _num(m.sinr_db), _num(m.mse), _num(m.psl_db),
                     _num(m.isl_db), _num(err.dbz_bias), _num(err.dbz_rmse),
                     _num(err.vel_rmse)))
    text = _csv_text(header, rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_baseline(args):
    if args.kind == "barker13":
        code = BARKER13
    else:
        if args.N < 2:
            raise ConfigError("must be >= 2", "--N")
        code = sm.random_code(args.N, np.random.default_rng(args.seed))
    if args.M < 0:
        raise ConfigError("must be >= 0", "--M")
    wf = WaveformFile.from_pair(code, matched_filter(code, args.M), args.M,
                                seed=None if args.kind == "barker13" else args.seed,
                                label=f"{args.kind}+matched")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    wf.save(args.out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="wxpulse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="design a code/filter pair")
    d.add_argument("config")
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--restarts", type=int, default=None)
    d.add_argument("--out", default="out")
    d.set_defaults(func=cmd_design)

    e = sub.add_parser("evaluate", help="SINR, MSE and sidelobe metrics of a pair")
    e.add_argument("waveform")
    e.add_argument("config")
    e.add_argument("--out", default=None, help="also write the JSON here")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("simulate", help="moment estimation on a synthetic scene")
    s.add_argument("waveform")
    s.add_argument("config")
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="side-by-side metrics for several waveforms")
    c.add_argument("waveforms", nargs="+")
    c.add_argument("config")
    c.add_argument("--trials", type=int, default=10)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("baseline", help="write a matched-filter reference waveform")
    b.add_argument("--kind", choices=["matched", "barker13"], default="matched",
                   help="matched: seeded random code with its matched filter")
    b.add_argument("--N", type=int, default=32)
    b.add_argument("--M", type=int, default=0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_baseline)
    return p


def main(argv=None):
    level = os.environ.get("WXPULSE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    for flag in ("seed", "restarts", "trials"):
        val = getattr(args, flag, None)
        if val is not None and val < (1 if flag != "seed" else 0):
            print(f"error: --{flag} out of range: {val}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OrthogonalFilterError, DegenerateFilterError) as exc:
        print(f"error: degenerate code/filter pair: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (SolverError, ConditioningError, DegenerateIterateError) as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DomainError, ValueError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
