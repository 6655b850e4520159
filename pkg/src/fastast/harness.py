"""Monte Carlo experiment harness: synthetic problems, trials, sweeps and traces."""

import csv
import io
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from . import lse, solver
from .cones import PrimalPoint

log = logging.getLogger(__name__)

CSV_COLUMNS = ["trial", "n", "snr_db", "variant", "iters", "wall_ms", "gap", "f_obj",
               "nmse", "oracle_nmse", "success", "freq_mse", "status"]
NONDETERMINISTIC_COLUMNS = ["wall_ms"]
TRACE_COLUMNS = ["iter", "f_obj", "gap", "step_alpha", "dual_feasible", "err_to_ref"]
MAX_DRAWS = 10_000
ABORTED = "error"


class SeparationError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "solve"
    n: List[int] = field(default_factory=lambda: [64])
    snr_db: List[float] = field(default_factory=lambda: [20.0])
    k: Optional[int] = None  # None: N/10 rounded
    trials: int = 1
    seed: int = 0
    variant: str = "lbfgs"
    out: Optional[str] = None
    format: str = "csv"
    jobs: int = 1
    trace_ref: Optional[str] = None
    tol_abs: Optional[float] = None
    tol_rel: Optional[float] = None
    gamma: Optional[float] = None
    memory: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("solve", "sweep-N", "sweep-SNR", "trace"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.variant not in ("newton", "lbfgs", "both"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if any(n < 2 for n in self.n):
            raise ValueError("N must be at least 2")
        if self.k is not None and self.k < 0:
            raise ValueError("K must be non-negative")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def variants(self):
        return ["newton", "lbfgs"] if self.variant == "both" else [self.variant]

    def k_for(self, n):
        return int(round(n / 10)) if self.k is None else self.k

    def solver_config(self, variant, **extra):
        overrides = {}
        for name, value in (("eps_abs", self.tol_abs), ("eps_rel", self.tol_rel),
                            ("gamma", self.gamma), ("memory", self.memory)):
            if value is not None:
                overrides[name] = value
        overrides.update(extra)
        return solver.SolverConfig.for_variant(variant, **overrides)


@dataclass
class TrialRecord:
    trial: int
    n: int
    snr_db: float
    variant: str
    iters: int
    wall_ms: float
    gap: float
    f_obj: float
    nmse: float
    oracle_nmse: float
    success: bool
    freq_mse: Optional[float]
    status: str

    @property
    def aborted(self):
        return self.status == ABORTED


def draw_frequencies(k, min_sep, rng, max_draws=MAX_DRAWS):
    """Uniform frequencies on ``[0, 2 pi)``, each redrawn until it keeps ``min_sep`` to the others."""
    freqs = []
    draws = 0
    while len(freqs) < k:
        if draws >= max_draws:
            raise SeparationError(f"could not place {k} frequencies with separation {min_sep:.4g}")
        draws += 1
        w = rng.uniform(0, 2 * np.pi)
        if not freqs or np.all(lse.wrap_distance(w, np.asarray(freqs)) >= min_sep):
            freqs.append(w)
    return np.sort(np.asarray(freqs, dtype=float))


def generate_problem(n, k, snr_db, seed):
    """Sinusoids with separation ``4 pi / N`` in white circular Gaussian noise.

    The noise variance is set so that ``||x||^2 / (N sigma^2)`` equals the SNR.
    With ``K = 0`` there is no signal power to reference and ``sigma^2 = 1``.
    """
    rng = np.random.default_rng(seed)
    omega = draw_frequencies(k, 4 * np.pi / n, rng)
    coef = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
    x = lse.steering(omega, n) @ coef
    power = float(np.real(np.vdot(x, x))) / n
    sigma2 = power / 10 ** (snr_db / 10) if k > 0 else 1.0
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return lse.LineSpectralProblem(y=x + noise, frequencies=omega, coefficients=coef,
                                   sigma2=sigma2, seed=seed)


def _error_row(trial, n, snr_db, variant, oracle_nmse=float("nan"), wall_ms=0.0):
    nan = float("nan")
    return TrialRecord(trial, n, snr_db, variant, 0, wall_ms, nan, nan, nan, oracle_nmse,
                       False, None, ABORTED)


def run_trial(cfg, trial, n, snr_db):
    """All configured variants on one synthetic problem; one record per variant.

    Failures never propagate: they become rows with status ``error``.
    """
    seed = cfg.seed + trial
    try:
        problem = generate_problem(n, cfg.k_for(n), snr_db, seed)
        tau = lse.select_tau(n, np.sqrt(problem.sigma2))
        oracle = lse.metrics(lse.oracle_estimate(problem), problem)
    except Exception as exc:
        log.warning("trial %d (N=%d, SNR=%g) could not be generated: %s", trial, n, snr_db, exc)
        return [_error_row(trial, n, snr_db, v) for v in cfg.variants]
    records = []
    for variant in cfg.variants:
        start = time.perf_counter()
        try:
            result = solver.solve(problem.y, tau, config=cfg.solver_config(variant))
            elapsed = 1e3 * (time.perf_counter() - start)
            m = lse.metrics(lse.estimate(result.x, problem.y, tau), problem)
        except Exception as exc:
            log.warning("trial %d (N=%d, SNR=%g, %s) aborted: %s", trial, n, snr_db, variant, exc)
            records.append(_error_row(trial, n, snr_db, variant, oracle.nmse,
                                      1e3 * (time.perf_counter() - start)))
            continue
        records.append(TrialRecord(trial, n, snr_db, variant, result.iterations, elapsed, result.gap,
                                   result.f_obj, m.nmse, oracle.nmse, m.success, m.freq_mse,
                                   result.status.value))
    return records


def _run_cell(args):
    return run_trial(*args)


def run_trials(cfg):
    tasks = [(cfg, trial, n, snr) for n in cfg.n for snr in cfg.snr_db for trial in range(cfg.trials)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    return [rec for recs in results for rec in recs]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_records(records, fmt="csv"):
    rows = [asdict(r) for r in records]
    if fmt == "json":
        payload = {"columns": CSV_COLUMNS, "nondeterministic": NONDETERMINISTIC_COLUMNS,
                   "rows": [{c: _json_value(row[c]) for c in CSV_COLUMNS} for row in rows]}
        return json.dumps(payload, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_reference(path, result, meta):
    mu = result.primal
    payload = dict(meta, v=mu.v, x_re=mu.x.real.tolist(), x_im=mu.x.imag.tolist(),
                   u=mu.u.tolist(), f_obj=result.f_obj, gap=result.gap)
    write_atomic(path, json.dumps(payload) + "\n")


def load_reference(path):
    with open(path) as fh:
        data = json.load(fh)
    x = np.asarray(data["x_re"]) + 1j * np.asarray(data["x_im"])
    return PrimalPoint(v=float(data["v"]), x=x, u=np.asarray(data["u"], dtype=float)), data


def reference_solution(y, tau):
    """Tight Newton solve used as ground truth in trace mode."""
    cfg = solver.SolverConfig.newton(eps_abs=0.0, eps_rel=1e-10, max_iters=400)
    return solver.solve(y, tau, config=cfg)


def run_trace(cfg, n, snr_db, variant, reference=None):
    """Per-iteration rows ``iter, f_obj, gap, step_alpha, dual_feasible, err_to_ref``.

    Unless tolerances are given explicitly, the solver runs until it cannot make
    further progress (line search stall) or hits its iteration cap.
    """
    problem = generate_problem(n, cfg.k_for(n), snr_db, cfg.seed)
    tau = lse.select_tau(n, np.sqrt(problem.sigma2))
    extra = {}
    if cfg.tol_abs is None:
        extra["eps_abs"] = 0.0
    if cfg.tol_rel is None:
        extra["eps_rel"] = 0.0
    ref_vec = None if reference is None else reference.as_vector()
    rows = []

    def collect(record, mu, lam):
        err = "" if ref_vec is None else float(np.sum((mu.as_vector() - ref_vec) ** 2))
        rows.append([record.iteration, record.f_obj, record.gap, record.step_alpha,
                     record.dual_feasible, err])

    result = solver.solve(problem.y, tau, config=cfg.solver_config(variant, **extra), callback=collect)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue(), result
