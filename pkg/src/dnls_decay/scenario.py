"""Scenario configuration and the classify -> simulate -> fit -> verdict pipeline."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import analysis, pde
from .classifier import (RealCubicPoly, Trichotomy, check_condition_A, classify)
from .nonlinearity import (CubicNonlinearity, compute_nu, is_weakly_gauge_invariant,
                           load_nonlinearity)
from .profile import (FrequencyGrid, InitialProfile, l2_norm, log_sample_times,
                      predicted_exponent, profile_trajectory)

ENGINES = ("profile", "pde", "both")
SHAPES = ("bracket", "gaussian")


class ScenarioError(ValueError):
    """Invalid or refused scenario (exit code 2)."""


class StageError(RuntimeError):
    def __init__(self, stage: str, error: BaseException):
        super().__init__(f"{stage}: {error}")
        self.stage = stage
        self.error = error


@dataclass
class Scenario:
    name: str = "scenario"
    nonlinearity: Any = "-i*|ux|^2*(u+ux) + 3*u^2*ux"
    epsilon: float = 0.1
    engine: str = "profile"
    seed: int = 0
    allow_non_gauge: bool = False
    # profile engine
    shape: str = "bracket"
    width: float = 1.0
    xi_half_width: float = 20.0
    xi_count: int = 32768
    t0: float = 2.0
    steps_per_decade: int = 64
    log_t_end: Optional[float] = None
    samples: int = 120
    # fit, in the scaled variable eps^2 log t
    fit_start: float = 5.0
    fit_end: float = 5.0e4
    min_decades: float = 4.0
    tolerance: float = 0.03
    max_residual: float = 0.05
    # pde engine
    L: float = 200.0
    n: int = 8192
    dt: float = 0.05
    t_end: float = 100.0
    snapshot_every: float = 1.0
    compare_start: float = 10.0
    compare_xi: float = 5.0
    output_dir: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.engine not in ENGINES:
            raise ScenarioError(f"engine must be one of {ENGINES}")
        if self.shape not in SHAPES:
            raise ScenarioError(f"shape must be one of {SHAPES}")
        if not self.epsilon > 0:
            raise ScenarioError("epsilon must be positive")
        if self.engine in ("profile", "both"):
            if self.steps_per_decade < 16:
                raise ScenarioError("steps_per_decade must be >= 16")
            if self.xi_count < 2 or not self.xi_half_width > 0:
                raise ScenarioError("bad frequency grid")
            if not self.t0 > 0:
                raise ScenarioError("t0 must be positive")
            if not 0 < self.fit_start < self.fit_end:
                raise ScenarioError("need 0 < fit_start < fit_end")
            if self.log_t_end is not None and not self.log_t_end > math.log(self.t0):
                raise ScenarioError("log_t_end must exceed log t0")
            if self.samples < 10:
                raise ScenarioError("samples must be >= 10")
        if self.engine in ("pde", "both"):
            if self.n < 4 or self.n & (self.n - 1):
                raise ScenarioError("n must be a power of two")
            if not (self.L > 0 and self.dt > 0 and self.t_end > self.dt):
                raise ScenarioError("need L > 0, dt > 0 and t_end > dt")
            if self.engine == "both" and not self.dt <= self.compare_start < self.t_end:
                raise ScenarioError("compare_start must lie in [dt, t_end)")

    @property
    def profile_log_t_end(self) -> float:
        if self.log_t_end is not None:
            return self.log_t_end
        return self.fit_end / self.epsilon ** 2

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.nonlinearity, CubicNonlinearity):
            d["nonlinearity"] = self.nonlinearity.to_json()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


@dataclass
class RunSummary:
    scenario: dict
    nu_coeffs: list
    weakly_gauge_invariant: bool
    classification: Optional[dict]
    predicted_exponent: Optional[float]
    fit: Optional[dict]
    verdict: Optional[dict]
    notes: list = field(default_factory=list)
    steps: dict = field(default_factory=dict)
    comparison: Optional[dict] = None
    wall_clock: float = 0.0
    series: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> Optional[bool]:
        return None if self.verdict is None else bool(self.verdict["passed"])

    def to_json(self) -> str:
        """Deterministic JSON (wall-clock time excluded)."""
        d = {k: v for k, v in asdict(self).items() if k not in ("wall_clock", "series")}
        return json.dumps(d, indent=2, sort_keys=True, allow_nan=False)


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def classification_report(N: CubicNonlinearity) -> dict:
    """The JSON emitted by the ``classify`` subcommand."""
    nu = compute_nu(N)
    p = RealCubicPoly.from_nu(nu)
    cond_a = check_condition_A(p)
    report = {
        "nu_coeffs": nu.to_json(),
        "p_coeffs": list(p.coeffs),
        "weakly_gauge_invariant": is_weakly_gauge_invariant(N),
        "condA": cond_a,
        "trichotomy": None,
        "certificates": None,
        "admissible_theta_sup": None,
        "predicted_L2_exponent": None,
    }
    if cond_a:
        cls = classify(p)
        report.update(cls.to_json())
        report["admissible_theta_sup"] = cls.admissible_theta_sup
        if cls.trichotomy is not Trichotomy.IDENTICALLY_ZERO:
            report["predicted_L2_exponent"] = predicted_exponent(cls)
    return report


def initial_profile(s: Scenario) -> InitialProfile:
    grid = FrequencyGrid.symmetric(s.xi_half_width, s.xi_count)
    if s.shape == "bracket":
        return InitialProfile.bracket_envelope(grid, s.epsilon, s.t0)
    return InitialProfile.gaussian(grid, s.epsilon, s.width, s.t0)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ScenarioError, StageError):
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        raise StageError(name, exc) from exc


def profile_log_times(s: Scenario, init: InitialProfile) -> np.ndarray:
    """Geometric samples in log t, with the fit window edges added."""
    end = s.profile_log_t_end
    base = log_sample_times(init.log_t0, end, s.samples)
    edges = [x / s.epsilon ** 2 for x in (s.fit_start, s.fit_end)]
    edges = [x for x in edges if init.log_t0 < x <= end]
    return np.unique(np.concatenate([base, edges]))


def _run_profile(s: Scenario, nu):
    init = initial_profile(s)
    log_times = profile_log_times(s, init)
    rows, values = [], []
    steps = 0
    for st in profile_trajectory(init, nu, log_times, s.steps_per_decade):
        norm = l2_norm(st)
        rows.append((st.t, st.log_t, norm, float(np.max(np.abs(st.beta)))))
        values.append(norm)
        steps = st.steps
    series = analysis.DecaySeries(np.array([r[1] for r in rows]), np.array(values),
                                  s.epsilon, s.name)
    return rows, series, steps


def _run_pde(s: Scenario, N, nu):
    grid = pde.SpatialGrid(s.L, s.n)
    state = pde.initialize(pde.gaussian_datum(s.epsilon), grid)
    every = max(1, int(round(s.snapshot_every / s.dt)))
    compare_step = int(round(s.compare_start / s.dt))
    rows = [(0.0, pde.mass(state), pde.j_norm(state), pde.h3_norm(state))]
    snaps = []
    last = state
    for st in pde.evolve(state, N, s.dt, s.t_end, every=every,
                         snapshot_times=[s.compare_start], safety=pde.DEFAULT_SAFETY):
        k = st.steps
        if k % every == 0 or k == compare_step or st.t >= s.t_end - 0.5 * s.dt:
            rows.append((st.t, pde.mass(st), pde.j_norm(st), pde.h3_norm(st)))
        if k >= compare_step:
            snaps.append(pde.extract_profile(st, s.compare_xi))
        last = st
    x = grid.x
    u = last.u
    edge = grid.dx * float(np.sum(np.abs(u[np.abs(x) > grid.L / 2]) ** 2))
    comparison = None
    comp_rows = []
    if s.engine == "both" and snaps:
        start = snaps[0]
        later = snaps[1:]
        tol = 10 * s.epsilon ** 3
        worst = 0.0
        preds = pde.profile_prediction(start, nu, [sn.t for sn in later])
        for sn, (t_model, beta) in zip(later, preds):
            diff = float(np.max(np.abs(np.abs(sn.alpha) - np.abs(beta))))
            worst = max(worst, diff)
            comp_rows.append((sn.t, diff, tol))
        comparison = {"t_start": start.t, "t_end": later[-1].t if later else start.t,
                      "xi_max": s.compare_xi, "max_abs_diff": worst, "tolerance": tol,
                      "passed": worst <= tol}
    return rows, comp_rows, comparison, last.steps, edge


def run_scenario(s: Scenario, out_dir: str | Path | None = None) -> RunSummary:
    """Classify, simulate, fit and judge one scenario; write CSV/JSON when
    ``out_dir`` (or ``s.output_dir``) is set."""
    started = time.perf_counter()
    s.validate()
    N = _stage("parse", load_nonlinearity, s.nonlinearity)
    nu = compute_nu(N)
    gauge = is_weakly_gauge_invariant(N)
    notes = []
    predictions = True
    if not gauge:
        if not s.allow_non_gauge:
            raise ScenarioError("weak gauge invariance N(e^{i theta},0) = e^{i theta} N(1,0) "
                                "fails; pass --allow-non-gauge to simulate anyway")
        predictions = False
        notes.append("non-gauge-invariant nonlinearity: rate predictions disabled")

    p = RealCubicPoly.from_nu(nu)
    cls = None
    if check_condition_A(p):
        cls = classify(p)
    else:
        notes.append("condition (A) fails: Im nu > 0 somewhere; no decay prediction")
    predicted = None
    if predictions and cls is not None:
        if cls.trichotomy is Trichotomy.IDENTICALLY_ZERO:
            notes.append("Im nu vanishes identically (A0): no L2 decay, no fit")
        else:
            predicted = predicted_exponent(cls)

    summary = RunSummary(
        scenario=s.to_dict(), nu_coeffs=nu.to_json(), weakly_gauge_invariant=gauge,
        classification=cls.to_json() if cls else None, predicted_exponent=predicted,
        fit=None, verdict=None, notes=notes)

    if s.engine in ("profile", "both"):
        rows, series, steps = _stage("profile", _run_profile, s, nu)
        summary.steps["profile"] = steps
        summary.series["profile"] = rows
        summary.series["profile_decay"] = series
        if predicted is not None:
            fit = _stage("fit", analysis.fit_decay_exponent, series,
                         (s.fit_start, s.fit_end), min_decades=s.min_decades)
            summary.fit = fit.to_json()
            summary.verdict = _stage("verdict", analysis.verdict, cls, fit, s.tolerance,
                                     s.max_residual, s.name).to_json()
    if s.engine in ("pde", "both"):
        rows, comp_rows, comparison, steps, edge = _stage("pde", _run_pde, s, N, nu)
        summary.steps["pde"] = steps
        summary.series["pde"] = rows
        if comp_rows:
            summary.series["comparison"] = comp_rows
        summary.comparison = comparison
        if edge >= 1e-8:
            notes.append(f"mass outside |x| < L/2 reached {edge:.3g}; box may be too small")
        if s.engine == "pde":
            notes.append("PDE engine validates the reduction on a finite window; "
                         "log-time decay exponents are fitted on the profile engine")

    summary.wall_clock = time.perf_counter() - started
    target = out_dir if out_dir is not None else s.output_dir
    if target is not None:
        write_outputs(summary, Path(target))
    return summary


def write_outputs(summary: RunSummary, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if "profile" in summary.series:
        write_csv(out / "profile_series.csv", ("t", "log_t", "l2_norm", "max_node_modulus"),
                  summary.series["profile"])
    if "pde" in summary.series:
        write_csv(out / "pde_series.csv", ("t", "mass", "j_norm", "h3_norm"),
                  summary.series["pde"])
    (out / "summary.json").write_text(summary.to_json() + "\n")
    (out / "timing.json").write_text(json.dumps({"wall_clock_s": summary.wall_clock}) + "\n")
    emit_plotdata(summary, out)


REFERENCE_EXPONENTS = (0.25, 0.375, 0.5)


def emit_plotdata(summary: RunSummary, out: str | Path) -> list[Path]:
    """CSV of (log t, L2 norm) plus reference power laws in eps^2 log t.

    The reference lines pass through the first sample of the series.  With a
    PDE-vs-profile comparison an extra CSV is written.
    """
    if summary is None or not summary.series:
        raise ValueError("summary has no series to plot")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "profile" in summary.series:
        rows = summary.series["profile"]
        log_t = np.array([r[1] for r in rows])
        norms = np.array([r[2] for r in rows])
    else:
        rows = [r for r in summary.series["pde"] if r[0] >= 2.0]
        log_t = np.log([r[0] for r in rows])
        norms = np.array([r[1] for r in rows])
    if log_t.size == 0:
        raise ValueError("no samples with t >= 2 to plot")
    path = out / "plot_series.csv"
    write_csv(path, ("log_t", "l2_norm"), zip(log_t, norms))
    written.append(path)
    eps = float(summary.scenario["epsilon"])
    s = eps ** 2 * log_t
    refs = [norms[0] * (s / s[0]) ** (-g) for g in REFERENCE_EXPONENTS]
    path = out / "plot_reference.csv"
    write_csv(path, ("log_t", "ref_0.25", "ref_0.375", "ref_0.5"), zip(log_t, *refs))
    written.append(path)
    if "comparison" in summary.series:
        path = out / "plot_pde_vs_profile.csv"
        write_csv(path, ("t", "max_abs_diff", "tolerance"), summary.series["comparison"])
        written.append(path)
    return written


# -- sweeps --------------------------------------------------------------------


def expand_sweep(config: dict) -> list[Scenario]:
    """Scenarios from {"base": {...}, "vary": {key: [values]}, "random": {...}}.

    ``random`` = {"count": k, "<key>": [lo, hi], ...} draws k scenarios with
    uniform values from ``numpy.random.default_rng(seed)``; the seed is the
    sweep's ``seed`` (default 0) and is recorded in every scenario.
    """
    base = dict(config.get("base", {}))
    seed = int(config.get("seed", base.get("seed", 0)))
    base["seed"] = seed
    name = base.get("name", "sweep")
    out = []
    vary = config.get("vary", {})
    keys = sorted(vary)
    for combo in itertools.product(*(vary[k] for k in keys)):
        d = dict(base, **dict(zip(keys, combo)))
        d["name"] = f"{name}-{len(out):03d}"
        out.append(Scenario.from_dict(d))
    rand = config.get("random")
    if rand:
        rng = np.random.default_rng(seed)
        ranges = {k: v for k, v in rand.items() if k != "count"}
        for _ in range(int(rand.get("count", 0))):
            d = dict(base)
            for k in sorted(ranges):
                lo, hi = ranges[k]
                d[k] = float(rng.uniform(lo, hi))
            d["name"] = f"{name}-{len(out):03d}"
            out.append(Scenario.from_dict(d))
    if not out:
        out.append(Scenario.from_dict(dict(base, name=f"{name}-000")))
    return out


def _sweep_worker(args):
    scen_dict, out_dir = args
    s = Scenario.from_dict(scen_dict)
    try:
        summary = run_scenario(s, Path(out_dir) / s.name)
        return {"name": s.name, "passed": summary.passed, "error": None,
                "fit": summary.fit, "predicted_exponent": summary.predicted_exponent}
    except (ScenarioError, StageError) as exc:
        return {"name": s.name, "passed": False, "error": str(exc), "fit": None,
                "predicted_exponent": None}


def run_sweep(config: dict, out_dir: str | Path, workers: int = 1) -> list[dict]:
    """Run every scenario of a sweep, each in its own output subdirectory."""
    scenarios = expand_sweep(config)
    jobs = [(s.to_dict(), str(out_dir)) for s in scenarios]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(j) for j in jobs]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_summary.json").write_text(
        json.dumps(results, indent=2, sort_keys=True) + "\n")
    return results
