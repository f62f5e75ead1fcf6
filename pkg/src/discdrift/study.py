"""Monte Carlo convergence studies against a coupled fine-grid reference.

Each replication draws one Brownian path on the fine grid. The reference
solution is the Euler scheme on that grid; every coarse approximation is
driven by the partial sums of the same increments. Replications are
processed in fixed-size batches whose results are concatenated in
replication order, so reports do not depend on the number of worker
threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytics import InvariantDensity, invariant_cdf
from .errors import ParameterError
from .model import Direction, PiecewiseDrift, SdeSpec, classify
from .noise import CHAIN_STREAM, coarsen_arrays, generate_block, stream
from .schemes import SchemeKind, integrate

# absolute error below which two values count as equal up to rounding
MACHINE_ACCURACY = 1e-12


@dataclass(frozen=True)
class ConvergenceStudyConfig:
    spec: SdeSpec
    scheme: SchemeKind = SchemeKind.EULER
    fine_exponent: int = 14
    coarse_exponents: tuple = (4, 5, 6, 7, 8, 9, 10)
    replications: int = 100_000
    master_seed: int = 0
    regression_window: tuple | None = None
    batch_size: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        exps = tuple(sorted({int(e) for e in self.coarse_exponents}))
        if not exps:
            raise ParameterError("need at least one coarse exponent")
        if exps[0] < 0 or exps[-1] >= self.fine_exponent:
            raise ParameterError(
                f"coarse exponents must lie in [0, {self.fine_exponent}), got {exps}"
            )
        object.__setattr__(self, "coarse_exponents", exps)
        if self.replications < 2:
            raise ParameterError(f"need at least 2 replications, got {self.replications}")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be positive")
        if self.regression_window is not None:
            lo, hi = self.regression_window
            if lo > hi or not [e for e in exps if lo <= e <= hi]:
                raise ParameterError(f"regression window {self.regression_window} selects no exponent")

    @property
    def fine_step(self) -> float:
        return self.spec.horizon / 2**self.fine_exponent

    def window(self) -> tuple:
        if self.regression_window is None:
            return self.coarse_exponents
        lo, hi = self.regression_window
        return tuple(e for e in self.coarse_exponents if lo <= e <= hi)


# ---------------------------------------------------------------- regression


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    residual: float
    slope_stderr: float

    @property
    def rate(self) -> float:
        return -self.slope


def regress(points) -> RegressionFit:
    """Least-squares line through ``(exponent, log2 rmse)`` pairs."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ParameterError("points must be a sequence of (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    if len(np.unique(x)) < 2:
        raise ParameterError("need at least two distinct exponents to fit a line")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    rss = float(np.sum(resid**2))
    dof = len(x) - 2
    se = math.sqrt(rss / dof / sxx) if dof > 0 else float("nan")
    return RegressionFit(float(slope), float(intercept), math.sqrt(rss), se)


# ------------------------------------------------------------------- engine


@dataclass
class _Batch:
    terminal: np.ndarray  # (E, B) reference minus approximation at T
    path_max: np.ndarray  # (E, B) largest |error| over shared grid times
    changes: np.ndarray  # (E, B)
    ref_changes: np.ndarray  # (B,)
    ref_first: np.ndarray  # (B,) fine step index or -1
    sq_over_time: np.ndarray | None = None  # (n+1,) summed squared errors
    step_changes: np.ndarray | None = None  # (n,)
    first: np.ndarray | None = None  # (B,) coarse step index or -1


def _run_batch(cfg: ConvergenceStudyConfig, exponents, start, stop, evolution):
    spec = cfg.spec
    inc, _ = generate_block(cfg.master_seed, start, stop, cfg.fine_exponent, spec.horizon, bridge=False)
    finest = exponents[-1]
    ref = integrate(
        spec.drift, spec.sigma, spec.initial_value, cfg.fine_step,
        np.ascontiguousarray(inc.T), scheme=SchemeKind.EULER,
        record_every=2 ** (cfg.fine_exponent - finest),
    )
    want_integrals = cfg.scheme is SchemeKind.PLATEN
    shape = (len(exponents), stop - start)
    out = _Batch(np.empty(shape), np.empty(shape), np.empty(shape, dtype=np.int64),
                 ref.changes, ref.first_change)
    for row, e in enumerate(exponents):
        c_inc, c_int = coarsen_arrays(inc, cfg.fine_step, 2 ** (cfg.fine_exponent - e), want_integrals)
        run = integrate(
            spec.drift, spec.sigma, spec.initial_value, spec.horizon / 2**e,
            np.ascontiguousarray(c_inc.T), None if c_int is None else np.ascontiguousarray(c_int.T),
            cfg.scheme,
        )
        diff = ref.values[:: 2 ** (finest - e)] - run.values
        out.terminal[row] = diff[-1]
        out.path_max[row] = np.abs(diff).max(axis=0)
        out.changes[row] = run.changes
        if evolution:
            out.sq_over_time = np.sum(diff**2, axis=1)
            out.step_changes = run.changes_per_step
            out.first = run.first_change
    return out


def _run(cfg, exponents, threads=1, evolution=False, replications=None):
    total = cfg.replications if replications is None else replications
    bounds = [(s, min(s + cfg.batch_size, total)) for s in range(0, total, cfg.batch_size)]

    def job(b):
        return _run_batch(cfg, exponents, b[0], b[1], evolution)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, bounds))
    return [job(b) for b in bounds]


# -------------------------------------------------------- convergence study


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-exponent RMSE, drift-change statistics and the fitted rate.

    ``rate`` is ``None`` when some RMSE in the regression window is at
    machine accuracy; ``rate_note`` then says so. ``path_errors`` are the
    largest deviations over the shared grid times of each path, as opposed
    to the ``terminal_errors`` at the horizon.
    """

    exponents: tuple
    rmse: tuple
    rmse_stderr: tuple
    window: tuple
    fit: RegressionFit | None
    rate: float | None
    rate_note: str
    mean_changes: tuple
    frac_changed: tuple
    reference_mean_changes: float
    reference_paths_changed: int
    replications: int
    terminal_errors: np.ndarray = field(repr=False)
    path_errors: np.ndarray = field(repr=False)

    def rows(self) -> list[dict]:
        out = []
        abs_term = np.abs(self.terminal_errors)
        for j, e in enumerate(self.exponents):
            out.append({
                "exponent": e,
                "step": 2.0**-e,
                "rmse": self.rmse[j],
                "rmse_stderr": self.rmse_stderr[j],
                "log2_rmse": math.log2(self.rmse[j]) if self.rmse[j] > 0 else float("-inf"),
                "mean_drift_changes": self.mean_changes[j],
                "frac_paths_with_change": self.frac_changed[j],
                "max_terminal_error": float(abs_term[j].max()),
                "min_terminal_error": float(abs_term[j].min()),
                "max_path_error": float(self.path_errors[j].max()),
                "min_path_error": float(self.path_errors[j].min()),
            })
        return out

    def summary(self) -> dict:
        return {
            "rate": self.rate,
            "rate_note": self.rate_note,
            "slope": None if self.fit is None else self.fit.slope,
            "intercept": None if self.fit is None else self.fit.intercept,
            "residual": None if self.fit is None else self.fit.residual,
            "slope_stderr": None if self.fit is None else self.fit.slope_stderr,
            "regression_window": list(self.window),
            "replications": self.replications,
            "reference_mean_drift_changes": self.reference_mean_changes,
            "reference_paths_with_change": self.reference_paths_changed,
        }


def _rmse(errors):
    sq = errors**2
    mean_sq = np.sum(sq, axis=-1) / sq.shape[-1]
    rmse = np.sqrt(mean_sq)
    # delta method: se(sqrt(m)) = se(m) / (2 sqrt(m))
    se_sq = np.std(sq, axis=-1, ddof=1) / math.sqrt(sq.shape[-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.where(rmse > 0, se_sq / (2 * rmse), 0.0)
    return rmse, se


def run_convergence(cfg: ConvergenceStudyConfig, threads: int = 1) -> ConvergenceReport:
    exps = cfg.coarse_exponents
    batches = _run(cfg, exps, threads)
    terminal = np.concatenate([b.terminal for b in batches], axis=1)
    path_max = np.concatenate([b.path_max for b in batches], axis=1)
    changes = np.concatenate([b.changes for b in batches], axis=1)
    ref_changes = np.concatenate([b.ref_changes for b in batches])
    rmse, se = _rmse(terminal)

    window = cfg.window()
    picked = [exps.index(e) for e in window]
    fit, rate = None, None
    if len(window) < 2:
        note = "rate not meaningful: fewer than two exponents in the regression window"
    elif any(rmse[j] < MACHINE_ACCURACY for j in picked):
        note = "rate not meaningful: errors at machine accuracy"
    else:
        fit = regress([(exps[j], math.log2(rmse[j])) for j in picked])
        rate, note = fit.rate, "ok"
    return ConvergenceReport(
        exponents=exps,
        rmse=tuple(float(v) for v in rmse),
        rmse_stderr=tuple(float(v) for v in se),
        window=window,
        fit=fit,
        rate=rate,
        rate_note=note,
        mean_changes=tuple(float(v) for v in changes.mean(axis=1)),
        frac_changed=tuple(float(v) for v in (changes > 0).mean(axis=1)),
        reference_mean_changes=float(ref_changes.mean()),
        reference_paths_changed=int(np.count_nonzero(ref_changes)),
        replications=cfg.replications,
        terminal_errors=terminal,
        path_errors=path_max,
    )


# ------------------------------------------------------- error over time


@dataclass(frozen=True)
class ErrorEvolution:
    exponent: int
    times: np.ndarray
    rmse: np.ndarray
    change_times: np.ndarray  # detection times (k+1) * dt of the coarse scheme
    change_counts: np.ndarray
    mean_changes: float
    frequent_change_times: tuple  # round(mean_changes) most frequent, ties kept
    modal_change_times: tuple  # every time with the maximal count
    first_change_reference: float | None
    first_change_scheme: float | None


def _top_times(times, counts, k):
    if k <= 0 or not counts.any():
        return ()
    order = np.argsort(-counts, kind="stable")
    cutoff = counts[order[min(k, len(order)) - 1]]
    if cutoff == 0:
        cutoff = 1
    return tuple(float(t) for t, c in zip(times, counts) if c >= cutoff)


def error_evolution(cfg: ConvergenceStudyConfig, coarse_exponent: int, samples: int = 10_000,
                    threads: int = 1) -> ErrorEvolution:
    """RMSE at every coarse grid time and drift-change timing for one step size."""
    if not 0 <= coarse_exponent < cfg.fine_exponent:
        raise ParameterError(f"coarse exponent must lie in [0, {cfg.fine_exponent})")
    if samples < 1:
        raise ParameterError("need at least one sample path")
    batches = _run(cfg, (coarse_exponent,), threads, evolution=True, replications=samples)
    n = 2**coarse_exponent
    dt = cfg.spec.horizon / n
    sq = np.zeros(n + 1)
    counts = np.zeros(n, dtype=np.int64)
    for b in batches:
        sq += b.sq_over_time
        counts += b.step_changes
    changes = np.concatenate([b.changes[0] for b in batches])
    ref_first = np.concatenate([b.ref_first for b in batches])
    first = np.concatenate([b.first for b in batches])

    times = dt * np.arange(n + 1)
    change_times = dt * np.arange(1, n + 1)
    mean_changes = float(changes.mean())
    modal = ()
    if counts.any():
        modal = tuple(float(t) for t in change_times[counts == counts.max()])
    ref_hits = ref_first[ref_first >= 0]
    hits = first[first >= 0]
    return ErrorEvolution(
        exponent=coarse_exponent,
        times=times,
        rmse=np.sqrt(sq / samples),
        change_times=change_times,
        change_counts=counts,
        mean_changes=mean_changes,
        frequent_change_times=_top_times(change_times, counts, int(round(mean_changes))),
        modal_change_times=modal,
        first_change_reference=float((ref_hits.min() + 1) * cfg.fine_step) if ref_hits.size else None,
        first_change_scheme=float((hits.min() + 1) * dt) if hits.size else None,
    )


# --------------------------------------------------------- error histogram


@dataclass(frozen=True)
class ErrorHistogram:
    """Counts of ``log2 |x_N - x_n|`` at the horizon.

    Errors below ``MACHINE_ACCURACY`` go to ``underflow`` instead of a bin.
    """

    exponent: int
    edges: np.ndarray
    counts: np.ndarray
    underflow: int

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow


def histogram_from_errors(errors, exponent: int, bin_width: float = 1.0) -> ErrorHistogram:
    if not bin_width > 0:
        raise ParameterError("bin width must be positive")
    err = np.abs(np.asarray(errors, dtype=float))
    small = err < MACHINE_ACCURACY
    logs = np.log2(err[~small])
    if logs.size == 0:
        return ErrorHistogram(exponent, np.empty(0), np.empty(0, dtype=np.int64), int(small.sum()))
    lo = math.floor(logs.min() / bin_width) * bin_width
    hi = math.ceil(logs.max() / bin_width) * bin_width
    if hi <= lo:
        hi = lo + bin_width
    nbins = int(round((hi - lo) / bin_width))
    edges = lo + bin_width * np.arange(nbins + 1)
    counts, _ = np.histogram(logs, bins=edges)
    return ErrorHistogram(exponent, edges, counts.astype(np.int64), int(small.sum()))


def error_histogram(cfg: ConvergenceStudyConfig, coarse_exponent: int, bin_width: float = 1.0,
                    threads: int = 1) -> ErrorHistogram:
    if not 0 <= coarse_exponent < cfg.fine_exponent:
        raise ParameterError(f"coarse exponent must lie in [0, {cfg.fine_exponent})")
    batches = _run(cfg, (coarse_exponent,), threads)
    errors = np.concatenate([b.terminal[0] for b in batches])
    return histogram_from_errors(errors, coarse_exponent, bin_width)


# ------------------------------------------------------------ sample paths


def sample_paths(spec: SdeSpec, count: int, fine_exponent: int = 14, seed: int = 0) -> np.ndarray:
    """Reference Euler paths, shape ``(2**fine_exponent + 1, count)``."""
    if count < 1:
        raise ParameterError("need at least one path")
    inc, _ = generate_block(seed, 0, count, fine_exponent, spec.horizon, bridge=False)
    run = integrate(spec.drift, spec.sigma, spec.initial_value, spec.horizon / 2**fine_exponent,
                    np.ascontiguousarray(inc.T))
    return run.values


# ------------------------------------------------------------ stationarity


@dataclass(frozen=True)
class StationaryCheck:
    step: float
    burn_in: int
    length: int
    initial_value: float
    probes: np.ndarray
    ecdf: np.ndarray
    cdf: np.ndarray
    sup_distance: float
    ergodic_second_moment: float
    invariant_second_moment: float


def inward_rates(drift: PiecewiseDrift):
    """``(alpha1, alpha2)`` of a two-region drift pointing inward to zero."""
    direction = classify(drift)
    if drift.regions != 2 or direction.kind is not Direction.INWARD or direction.point != 0:
        raise ParameterError(f"need a two-region drift pointing inward to 0, got {drift}")
    return drift.values


def euler_chain(alpha1, alpha2, step, length, seed, initial_value=0.0, burn_in=0, chunk=2**20,
                chain_index=0):
    """Yield successive chunks (numpy arrays) of the unit-noise Euler chain after burn-in."""
    rng = stream(seed, CHAIN_STREAM, chain_index)
    root = math.sqrt(step)
    x = float(initial_value)
    todo_burn, todo = burn_in, length
    while todo_burn or todo:
        size = min(chunk, todo_burn + todo)
        noise = (root * rng.standard_normal(size)).tolist()
        out = []
        append = out.append
        for z in noise:
            # same operation order as schemes.euler_step
            x = x + (alpha1 if x < 0.0 else alpha2) * step + z
            append(x)
        skip = min(todo_burn, size)
        todo_burn -= skip
        kept = size - skip
        todo -= kept
        if kept:
            yield np.array(out[skip:])


def stationary_check(drift: PiecewiseDrift, step: float, burn_in: int, length: int,
                     probes=None, seed: int = 0, initial_value: float = 0.0,
                     chain_index: int = 0) -> StationaryCheck:
    """Compare one long Euler chain with the invariant law of the SDE."""
    alpha1, alpha2 = inward_rates(drift)
    if not step > 0 or burn_in < 0 or length < 1:
        raise ParameterError("need step > 0, burn_in >= 0 and length >= 1")
    density = InvariantDensity(alpha1, alpha2)
    probes = np.linspace(-4.0, 4.0, 801) if probes is None else np.sort(np.asarray(probes, dtype=float))
    below = np.zeros(len(probes) + 1, dtype=np.int64)
    sum_sq = 0.0
    for block in euler_chain(alpha1, alpha2, step, length, seed, initial_value, burn_in,
                             chain_index=chain_index):
        # x <= probes[j] iff fewer than j+1 probes lie strictly below x
        below += np.bincount(np.searchsorted(probes, block, side="left"), minlength=len(probes) + 1)
        sum_sq += float(np.sum(block * block))
    ecdf = np.cumsum(below)[:-1] / length
    cdf = invariant_cdf(density, probes)
    return StationaryCheck(
        step=step,
        burn_in=burn_in,
        length=length,
        initial_value=float(initial_value),
        probes=probes,
        ecdf=ecdf,
        cdf=np.asarray(cdf),
        sup_distance=float(np.max(np.abs(ecdf - cdf))),
        ergodic_second_moment=sum_sq / length,
        invariant_second_moment=density.second_moment(),
    )
