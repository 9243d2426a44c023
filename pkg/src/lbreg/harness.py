"""Experiment harness: phase-transition sweeps and solver comparisons.

Signals and sensing matrices are generated from the shared Philox
source, with per-trial seeds spawned from (master_seed, m, k,
alpha-index, trial) so any subset of the grid can be recomputed in
isolation and parallel execution cannot change the results. All CSV
emission formats floats with 17 significant digits, which round-trips
float64 exactly.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import choose, normals, philox, signs
from .certificates import polish_primal, project_Ystar, solution_set
from .models import DenseVectorOp, Model
from .solvers import SolverError, SolverOptions, run_solver

KINDS = ("flat", "gaussian", "powerlaw")


@dataclass(frozen=True)
class SignalSpec:
    """Recipe for one synthetic sparse signal with sup norm 1.

    kind is "flat" (magnitude 1, random signs), "gaussian"
    (independent normal entries), or "powerlaw" (ith largest magnitude
    i^-2, random signs).
    """

    n: int
    k: int
    kind: str
    seed: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"sparsity k={self.k} outside 1..{self.n}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}; expected "
                             f"one of {KINDS}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid description for a phase-transition sweep.

    alphas are multiples of the generated signal's sup norm (which is
    1 by construction). error_levels are the relative-error levels the
    cutoff curves are drawn at.
    """

    n: int
    m_range: tuple
    k_range: tuple
    trials: int
    alphas: tuple
    kind: str = "flat"
    error_levels: tuple = (1e-3, 1e-5)
    master_seed: int = 0
    tol: float = 1e-6
    max_iter: int = 5000

    def __post_init__(self):
        for name in ("m_range", "k_range", "alphas", "error_levels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.alphas:
            raise ValueError("alphas must be nonempty")
        if any(a <= 0 for a in self.alphas):
            raise ValueError("alphas must be positive")
        if not self.m_range or any(m < 1 for m in self.m_range):
            raise ValueError("m_range must hold positive counts")
        if not self.k_range:
            raise ValueError("k_range must be nonempty")
        if any(not 1 <= k <= self.n for k in self.k_range):
            raise ValueError(f"k_range entries must lie in 1..{self.n}")
        if not self.error_levels or any(e <= 0 for e in self.error_levels):
            raise ValueError("error_levels must be positive")
        if self.kind not in KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one recovery trial of the phase grid."""

    m: int
    k: int
    alpha_multiple: float
    trial: int
    rel_error: float
    iterations: int
    wall_time: float


@dataclass(frozen=True)
class CurvePoint:
    """One point of a cutoff curve: smallest m whose mean relative
    error meets `level` at sparsity k; nan when no m in the grid
    does."""

    level: float
    alpha_multiple: float
    k: int
    m_star: float


@dataclass(eq=False)
class PhaseResult:
    """Trial grid plus the cutoff curves derived from it."""

    trials: list
    curves: list


@dataclass(eq=False)
class ConvergenceResult:
    """Per-iteration error curves of the three solvers on one
    instance."""

    model: Model
    x_star: np.ndarray
    rows: list
    iterations: dict
    traces: dict = field(default_factory=dict)


def desk_scale_config(kind="flat", master_seed=0, **overrides):
    """Default desk-scale grid: n=100, m in 10..60 step 5, k in 1..20,
    25 trials, alpha multiples 1, 10, and the 1000 proxy."""
    base = dict(n=100, m_range=tuple(range(10, 61, 5)),
                k_range=tuple(range(1, 21)), trials=25,
                alphas=(1.0, 10.0, 1000.0), kind=kind,
                master_seed=master_seed)
    base.update(overrides)
    return ExperimentConfig(**base)


def paper_scale_config(kind="flat", master_seed=0, **overrides):
    """Full-scale grid: n=400, m in 40..200, k in 1..80, 100 trials."""
    base = dict(n=400, m_range=tuple(range(40, 201)),
                k_range=tuple(range(1, 81)), trials=100,
                alphas=(1.0, 10.0, 1000.0), kind=kind,
                master_seed=master_seed)
    base.update(overrides)
    return ExperimentConfig(**base)


def gen_signal(spec):
    """Sparse test signal with uniformly random support and sup norm 1.

    Parameters
    ----------
    spec : SignalSpec

    Returns
    -------
    ndarray
        Length spec.n with exactly spec.k nonzeros; deterministic
        given spec.seed.
    """
    gen = philox(spec.seed)
    support = choose(gen, spec.n, spec.k)
    x = np.zeros(spec.n)
    if spec.kind == "flat":
        x[support] = signs(gen, spec.k)
    elif spec.kind == "gaussian":
        z = normals(gen, spec.k)
        while not np.any(z):
            z = normals(gen, spec.k)
        x[support] = z / np.abs(z).max()
    else:
        mags = (np.arange(spec.k) + 1.0) ** -2.0
        x[support] = mags * signs(gen, spec.k)
    return x


def gen_gaussian_matrix(m, n, seed):
    """m by n matrix of independent standard normal entries.

    Deterministic given the seed; entries come from the shared
    Box-Muller path, filled row-major.
    """
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    return normals(philox(seed), m * n).reshape(m, n)


def relative_error(x_star, x_true):
    """||x_star - x_true||_2 / ||x_true||_2.

    Raises ValueError when x_true is zero.
    """
    x_star = np.asarray(x_star, dtype=np.float64)
    x_true = np.asarray(x_true, dtype=np.float64)
    denom = np.linalg.norm(x_true)
    if denom == 0.0:
        raise ValueError("reference signal must be nonzero")
    return float(np.linalg.norm(x_star - x_true) / denom)


def _phase_cell(args):
    """One trial of the phase grid; top level so worker processes can
    import it."""
    config, m, k, alpha_idx, trial = args
    ss = np.random.SeedSequence(config.master_seed,
                                spawn_key=(m, k, alpha_idx, trial))
    sig_seed, mat_seed = (int(s) for s in ss.generate_state(2))
    x0 = gen_signal(SignalSpec(n=config.n, k=k, kind=config.kind,
                               seed=sig_seed))
    A = gen_gaussian_matrix(m, config.n, mat_seed)
    alpha = config.alphas[alpha_idx] * np.abs(x0).max()
    model = Model(DenseVectorOp(A), A @ x0, alpha)
    opts = SolverOptions(variant="bb", tol=config.tol,
                         max_iter=config.max_iter, record_iterates=False)
    start = time.perf_counter()
    try:
        trace = run_solver(model, opts)
    except SolverError:
        return TrialResult(m=m, k=k,
                           alpha_multiple=config.alphas[alpha_idx],
                           trial=trial, rel_error=float("inf"),
                           iterations=0,
                           wall_time=time.perf_counter() - start)
    wall = time.perf_counter() - start
    return TrialResult(m=m, k=k, alpha_multiple=config.alphas[alpha_idx],
                       trial=trial,
                       rel_error=relative_error(trace.final_x, x0),
                       iterations=trace.iterations, wall_time=wall)


def _cutoff_curves(config, trials, smooth=False):
    """Smallest m meeting each error level per (level, alpha, k),
    forced into a monotone staircase in k."""
    means = {}
    for t in trials:
        cell = means.setdefault((t.m, t.k, t.alpha_multiple), [])
        cell.append(t.rel_error)
    ms = sorted(config.m_range)
    curves = []
    for level in config.error_levels:
        for alpha in config.alphas:
            raw = []
            for k in config.k_range:
                m_star = float("inf")
                for m in ms:
                    if np.mean(means[(m, k, alpha)]) <= level:
                        m_star = float(m)
                        break
                raw.append(m_star)
            # the success region is monotone, so the boundary is a
            # staircase; running max removes Monte-Carlo dents
            stair = list(np.maximum.accumulate(raw))
            vals = [float("nan") if np.isinf(v) else v for v in stair]
            if smooth:
                vals = smooth_curve(vals)
            curves.extend(
                CurvePoint(level=level, alpha_multiple=alpha, k=k, m_star=v)
                for k, v in zip(config.k_range, vals))
    return curves


def run_phase(config, workers=1, smooth=False):
    """Run the full phase-transition grid.

    Parameters
    ----------
    config : ExperimentConfig
    workers : int, optional
        Process count; results are identical for any value.
    smooth : bool, optional
        Apply the centered 3-point moving average to the cutoff
        curves.

    Returns
    -------
    PhaseResult
        trials sorted by (m, k, alpha index, trial); curves per
        (error level, alpha) over k. A trial whose solve raises is
        recorded with rel_error = inf and the run continues.
    """
    tasks = [(config, m, k, ai, t)
             for m in config.m_range
             for k in config.k_range
             for ai in range(len(config.alphas))
             for t in range(config.trials)]
    if workers > 1:
        chunk = max(1, len(tasks) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_phase_cell, tasks, chunksize=chunk))
    else:
        results = [_phase_cell(t) for t in tasks]
    order = {a: i for i, a in enumerate(config.alphas)}
    results.sort(key=lambda t: (t.m, t.k, order[t.alpha_multiple], t.trial))
    return PhaseResult(trials=results,
                       curves=_cutoff_curves(config, results, smooth=smooth))


def smooth_curve(values):
    """Centered 3-point moving average, truncated at the ends.

    nan entries are left in place and skipped when averaging their
    neighbors; a window with no finite entries stays nan.
    """
    out = []
    n = len(values)
    for i in range(n):
        window = [values[j] for j in range(max(0, i - 1), min(n, i + 2))
                  if not np.isnan(values[j])]
        out.append(float(np.mean(window)) if window else float("nan"))
    return out


def run_convergence(m, n, k, kind="gaussian", alpha_multiple=10.0, seed=0,
                    tol=1e-6, max_iter=100000):
    """Compare the three solvers on one instance, per iteration.

    The sensing matrix depends only on (m, n, seed), so different
    signal kinds at the same seed share it. Each solver runs to
    ||grad f|| < tol; x* is the consensus solution (refit on the
    support found by the BB run when possible) and each solver's y*
    is the projection of its own final iterate onto the dual solution
    set.

    Parameters
    ----------
    m, n, k : int
    kind : str, optional
    alpha_multiple : float, optional
        alpha = alpha_multiple * ||x0||_inf.
    seed : int, optional
    tol, max_iter : optional
        Passed to every solver.

    Returns
    -------
    ConvergenceResult
        rows are (k, solver, x_err, y_err, f, grad_norm) tuples.

    Raises
    ------
    RuntimeError
        If the solvers' final solutions disagree beyond 1e-4.
    """
    if alpha_multiple <= 0:
        raise ValueError("alpha_multiple must be positive")
    ss = np.random.SeedSequence(seed)
    sig_seed, mat_seed = (int(s) for s in ss.generate_state(2))
    x0 = gen_signal(SignalSpec(n=n, k=k, kind=kind, seed=sig_seed))
    A = gen_gaussian_matrix(m, n, mat_seed)
    alpha = alpha_multiple * np.abs(x0).max()
    model = Model(DenseVectorOp(A), A @ x0, alpha)
    traces = {}
    for variant in ("fixed", "kicking", "bb"):
        traces[variant] = run_solver(model, SolverOptions(
            variant=variant, tol=tol, max_iter=max_iter))
    finals = {v: tr.final_x for v, tr in traces.items()}
    names = sorted(finals)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            gap = np.linalg.norm(finals[a] - finals[b])
            scale = max(1.0, np.linalg.norm(finals[a]),
                        np.linalg.norm(finals[b]))
            if gap > 1e-4 * scale:
                raise RuntimeError(
                    f"solvers {a} and {b} disagree on the solution "
                    f"({gap:.3e}); this flags a bug")
    x_star = finals["bb"]
    support = np.flatnonzero(np.abs(x_star) > 1e-8 * np.abs(x_star).max())
    try:
        x_star, _ = polish_primal(model, support,
                                  np.sign(x_star[support]))
    except ValueError:
        x_star = finals["bb"]
    ystar_set = solution_set(model, x_star, tol=max(1e-6, 10.0 * tol))
    rows = []
    iterations = {}
    for variant in ("fixed", "kicking", "bb"):
        trace = traces[variant]
        iterations[variant] = trace.iterations
        y_star = project_Ystar(ystar_set, A, trace.final_y).y_proj
        for rec in trace.records:
            rows.append((rec.k, variant,
                         float(np.linalg.norm(rec.x - x_star)),
                         float(np.linalg.norm(rec.y - y_star)),
                         rec.f, rec.grad_norm))
    return ConvergenceResult(model=model, x_star=x_star, rows=rows,
                             iterations=iterations, traces=traces)


def _fmt(v):
    return format(float(v), ".17g")


def write_trials_csv(path, trials, timing=False):
    """Write TrialResult rows as CSV.

    The wall_time column is off by default so repeated runs of the
    same grid emit byte-identical files.
    """
    cols = "m,k,alpha_multiple,trial,rel_error,iterations"
    with open(path, "w") as fh:
        fh.write(cols + (",wall_time" if timing else "") + "\n")
        for t in trials:
            row = (f"{t.m},{t.k},{_fmt(t.alpha_multiple)},{t.trial},"
                   f"{_fmt(t.rel_error)},{t.iterations}")
            if timing:
                row += f",{_fmt(t.wall_time)}"
            fh.write(row + "\n")


def write_curves_csv(path, curves):
    """Write cutoff-curve points as CSV (level, alpha_multiple, k,
    m_star); unattained levels appear as nan."""
    with open(path, "w") as fh:
        fh.write("level,alpha_multiple,k,m_star\n")
        for p in curves:
            fh.write(f"{_fmt(p.level)},{_fmt(p.alpha_multiple)},"
                     f"{p.k},{_fmt(p.m_star)}\n")


def write_conv_csv(path, rows):
    """Write per-iteration solver comparison rows as CSV."""
    with open(path, "w") as fh:
        fh.write("k,solver,x_err,y_err,f,grad_norm\n")
        for k, solver, x_err, y_err, f, grad_norm in rows:
            fh.write(f"{k},{solver},{_fmt(x_err)},{_fmt(y_err)},"
                     f"{_fmt(f)},{_fmt(grad_norm)}\n")
