"""Command line entry point ``dnls-decay``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 verdict fail.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, pde
from .nonlinearity import compute_nu, load_nonlinearity, nu_quadrature_oracle
from .profile import l2_norm, profile_trajectory
from .scenario import (Scenario, ScenarioError, StageError, classification_report,
                       initial_profile, profile_log_times, run_scenario, run_sweep, write_csv)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_VERDICT = 0, 2, 3, 4


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read config {path}: {exc}") from exc


def _scenario(args, **defaults) -> Scenario:
    data = dict(defaults)
    data.update(_load_config(getattr(args, "config", None)))
    if getattr(args, "nonlinearity", None) is not None:
        data["nonlinearity"] = args.nonlinearity
    if getattr(args, "engine", None) is not None:
        data["engine"] = args.engine
    if getattr(args, "eps", None) is not None:
        data["epsilon"] = args.eps
    if getattr(args, "t_end", None) is not None:
        # the profile engine runs in log t; the PDE engine in t
        if data.get("engine", "profile") == "pde":
            data["t_end"] = args.t_end
        else:
            data["log_t_end"] = math.log(args.t_end)
    if getattr(args, "log_t_end", None) is not None:
        data["log_t_end"] = args.log_t_end
    if getattr(args, "allow_non_gauge", False):
        data["allow_non_gauge"] = True
    return Scenario.from_dict(data)


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_classify(args) -> int:
    _print_json(classification_report(load_nonlinearity(args.nonlinearity)))
    return EXIT_OK


def cmd_nu(args) -> int:
    N = load_nonlinearity(args.nonlinearity)
    nu = compute_nu(N)
    out = {"nu_coeffs": nu.to_json()}
    if args.xi:
        out["values"] = []
        for x in args.xi:
            v = complex(nu(x))
            entry = {"xi": x, "re": v.real, "im": v.imag}
            if args.oracle:
                w = nu_quadrature_oracle(N, x)
                entry["oracle_re"], entry["oracle_im"] = w.real, w.imag
            out["values"].append(entry)
    _print_json(out)
    return EXIT_OK


def cmd_simulate_profile(args) -> int:
    s = _scenario(args, engine="profile")
    N = load_nonlinearity(s.nonlinearity)
    nu = compute_nu(N)
    init = initial_profile(s)
    log_times = profile_log_times(s, init)
    rows = [(st.t, st.log_t, l2_norm(st), float(np.max(np.abs(st.beta))))
            for st in profile_trajectory(init, nu, log_times, s.steps_per_decade)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "profile_series.csv", ("t", "log_t", "l2_norm", "max_node_modulus"), rows)
    return EXIT_OK


def cmd_simulate_pde(args) -> int:
    s = _scenario(args, engine="pde")
    N = load_nonlinearity(s.nonlinearity)
    grid = pde.SpatialGrid(s.L, s.n)
    state = pde.initialize(pde.gaussian_datum(s.epsilon), grid)
    every = max(1, int(round(s.snapshot_every / s.dt)))
    rows = [(0.0, pde.mass(state), pde.j_norm(state), pde.h3_norm(state))]
    snaps = []
    for st in pde.evolve(state, N, s.dt, s.t_end, every=every):
        rows.append((st.t, pde.mass(st), pde.j_norm(st), pde.h3_norm(st)))
        if args.snapshots:
            prof = pde.extract_profile(st, s.compare_xi)
            snaps.append({"t": st.t, "xi": prof.xi.tolist(),
                          "modulus": np.abs(prof.alpha).tolist()})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "pde_series.csv", ("t", "mass", "j_norm", "h3_norm"), rows)
    if args.snapshots:
        (out / "profile_snapshots.json").write_text(json.dumps(snaps) + "\n")
    return EXIT_OK


def _read_series(path, eps) -> analysis.DecaySeries:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ScenarioError(f"{path} has no rows")
    cols = rows[0].keys()
    value_col = next((c for c in ("l2_norm", "mass", "value") if c in cols), None)
    if value_col is None:
        raise ScenarioError("series needs an l2_norm, mass or value column")
    if "log_t" in cols:
        log_t = np.array([float(r["log_t"]) for r in rows])
    elif "t" in cols:
        log_t = np.log([float(r["t"]) for r in rows])
    else:
        raise ScenarioError("series needs a log_t or t column")
    vals = np.array([float(r[value_col]) for r in rows])
    keep = log_t >= math.log(2.0)
    return analysis.DecaySeries(log_t[keep], vals[keep], eps)


def cmd_fit_decay(args) -> int:
    series = _read_series(args.series, args.eps)
    fit = analysis.fit_decay_exponent(series, (args.window_lo, args.window_hi),
                                      min_decades=args.min_decades)
    _print_json(fit.to_json())
    return EXIT_OK


def cmd_verify_matsumura(args) -> int:
    inst = analysis.MatsumuraInstance(args.C0, args.C1, args.q, args.s, args.Phi2)
    kw = {"log_t_end": args.log_t_end} if args.log_t_end else {"t_end": args.t_end}
    res = analysis.verify_matsumura(inst, args.ode, **kw)
    _print_json(res.to_json())
    return EXIT_OK if res.passed else EXIT_VERDICT


def cmd_run(args) -> int:
    s = _scenario(args)
    summary = run_scenario(s, args.out)
    print(summary.to_json())
    if summary.passed is False:
        return EXIT_VERDICT
    if summary.comparison is not None and not summary.comparison["passed"]:
        return EXIT_VERDICT
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    if args.eps is not None:
        config.setdefault("base", {})["epsilon"] = args.eps
    if args.engine is not None:
        config.setdefault("base", {})["engine"] = args.engine
    if args.allow_non_gauge:
        config.setdefault("base", {})["allow_non_gauge"] = True
    results = run_sweep(config, args.out, args.workers)
    _print_json(results)
    if any(r["error"] for r in results):
        return EXIT_INVALID
    return EXIT_VERDICT if any(r["passed"] is False for r in results) else EXIT_OK


def _common(p, out_required=False):
    p.add_argument("--config", help="scenario JSON file")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--eps", type=float, help="data size epsilon")
    p.add_argument("--t-end", type=float, help="final time")
    p.add_argument("--log-t-end", type=float, help="final log t (profile engine)")
    p.add_argument("--allow-non-gauge", action="store_true",
                   help="simulate N violating weak gauge invariance (no predictions)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dnls-decay",
                                 description="Cubic derivative NLS: resonance, decay rates, simulation.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="nu, dissipation class and predicted exponent")
    p.add_argument("nonlinearity")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("nu", help="resonance coefficient nu(xi)")
    p.add_argument("nonlinearity")
    p.add_argument("--xi", type=float, nargs="*", default=[])
    p.add_argument("--oracle", action="store_true", help="also evaluate by contour quadrature")
    p.set_defaults(func=cmd_nu)

    p = sub.add_parser("simulate-profile", help="integrate the profile equation")
    p.add_argument("--nonlinearity")
    _common(p, out_required=True)
    p.set_defaults(func=cmd_simulate_profile)

    p = sub.add_parser("simulate-pde", help="integrate the full equation")
    p.add_argument("--nonlinearity")
    p.add_argument("--snapshots", action="store_true", help="write |alpha| snapshots as JSON")
    _common(p, out_required=True)
    p.set_defaults(func=cmd_simulate_pde)

    p = sub.add_parser("fit-decay", help="fit the log-time decay exponent of a CSV series")
    p.add_argument("series")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--window-lo", type=float, default=5.0)
    p.add_argument("--window-hi", type=float, default=5.0e4)
    p.add_argument("--min-decades", type=float, default=4.0)
    p.set_defaults(func=cmd_fit_decay)

    p = sub.add_parser("verify-matsumura", help="check the comparison-lemma bound")
    for name in ("C0", "C1", "q", "s", "Phi2"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--ode", default="equality",
                   choices=("equality", "strong-damping", "weak-forcing"))
    p.add_argument("--t-end", type=float, default=1e12)
    p.add_argument("--log-t-end", type=float)
    p.set_defaults(func=cmd_verify_matsumura)

    p = sub.add_parser("run", help="classify, simulate, fit and judge one scenario")
    p.add_argument("--nonlinearity")
    p.add_argument("--engine", choices=("profile", "pde", "both"))
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a batch of scenarios in a worker pool")
    p.add_argument("--config", required=True, help="sweep JSON file")
    p.add_argument("--out", required=True)
    p.add_argument("--engine", choices=("profile", "pde", "both"))
    p.add_argument("--eps", type=float)
    p.add_argument("--allow-non-gauge", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc.error, ArithmeticError) else EXIT_INVALID
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
