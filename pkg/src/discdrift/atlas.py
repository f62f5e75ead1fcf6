"""First-order rank-based market models and the Atlas model.

Log-capitalizations follow ``dY_i = (gamma + g_{r_i}) dt + sigma_{r_i} dW_i``,
where ``r_i`` is firm i's rank (1 = largest). The Euler scheme recomputes
the ranks from the current state at every step.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .noise import MARKET_STREAM, stream


@dataclass(frozen=True)
class FirstOrderModel:
    gamma: float
    growth: tuple  # g_1..g_d by rank
    sigmas: tuple  # sigma_1..sigma_d by rank
    initial_log_caps: tuple

    def __post_init__(self):
        g = tuple(float(v) for v in self.growth)
        s = tuple(float(v) for v in self.sigmas)
        y0 = tuple(float(v) for v in self.initial_log_caps)
        if not (len(g) == len(s) == len(y0) >= 1):
            raise ParameterError("growth rates, volatilities and initial values need one entry per firm")
        if any(v <= 0 for v in s):
            raise ParameterError("volatilities must be positive")
        partial = np.cumsum(g)
        scale = max(1.0, max(abs(v) for v in g))
        if np.any(partial[:-1] >= 0) or abs(partial[-1]) > 1e-12 * scale * len(g):
            raise ParameterError(
                f"growth rates need negative partial sums and total zero, got {g}"
            )
        object.__setattr__(self, "growth", g)
        object.__setattr__(self, "sigmas", s)
        object.__setattr__(self, "initial_log_caps", y0)

    @property
    def d(self) -> int:
        return len(self.growth)

    def rates_by_rank(self) -> np.ndarray:
        return self.gamma + np.asarray(self.growth)


def atlas_model(d: int, g: float, sigma: float, initial_log_caps) -> FirstOrderModel:
    """Atlas parameters: ``gamma = g``, ``g_k = -g`` for k < d, ``g_d = (d-1) g``."""
    if d < 1:
        raise ParameterError(f"need at least one firm, got d={d}")
    if not g > 0:
        raise ParameterError(f"g must be positive, got {g}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if len(initial_log_caps) != d:
        raise ParameterError(f"need {d} initial log-capitalizations, got {len(initial_log_caps)}")
    growth = (-g,) * (d - 1) + ((d - 1) * g,)
    return FirstOrderModel(g, growth, (sigma,) * d, tuple(initial_log_caps))


def rank(log_caps) -> np.ndarray:
    """Ranks 1..d along the last axis; ties go to the lower firm index."""
    y = np.asarray(log_caps, dtype=float)
    order = np.argsort(-y, axis=-1, kind="stable")
    ranks = np.empty_like(order)
    positions = np.broadcast_to(np.arange(1, y.shape[-1] + 1), y.shape)
    np.put_along_axis(ranks, order, positions, axis=-1)
    return ranks


@dataclass(frozen=True)
class OccupationMatrix:
    """``rates[i, k]``: fraction of grid times firm i+1 held rank k+1.

    Averaged entrywise over ``replications`` independent runs.
    """

    rates: np.ndarray
    horizon: float
    step: float
    replications: int
    terminal_log_caps: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.rates.shape[0]


def occupation_deviation(occupation) -> np.ndarray:
    """Per firm, the summed squared distance of its occupation rates from 1/d."""
    rates = occupation.rates if isinstance(occupation, OccupationMatrix) else np.asarray(occupation)
    d = rates.shape[0]
    return np.sum((rates - 1.0 / d) ** 2, axis=1)


def _grid_steps(horizon, step):
    if not (horizon > 0 and step > 0):
        raise ParameterError("horizon and step must be positive")
    steps = horizon / step
    if abs(steps - round(steps)) > 1e-9 * steps:
        raise ParameterError(f"horizon {horizon} is not an integer multiple of step {step}")
    return int(round(steps))


def _ranks_into(y, out):
    """Zero-based ranks of the columns of ``y`` (shape (d, M)) written into ``out``."""
    out[...] = 0
    d = y.shape[0]
    for i in range(d):
        for j in range(i + 1, d):
            # firm j outranks firm i only when strictly larger
            beats = y[j] > y[i]
            out[i] += beats
            out[j] += ~beats
    return out


def _simulate_block(model, steps, step, first, stop, seed, chunk):
    """Rank counts (flattened d*d, firm-major) and terminal state for replications first..stop-1."""
    d = model.d
    m = stop - first
    rates = model.rates_by_rank() * step
    scales = np.asarray(model.sigmas) * math.sqrt(step)
    gens = [[stream(seed, MARKET_STREAM, rep, firm) for rep in range(first, stop)] for firm in range(d)]
    # state is firm-major, shape (d, m), so per-firm rows are contiguous
    y = np.repeat(np.asarray(model.initial_log_caps)[:, None], m, axis=1)
    r = _ranks_into(y, np.empty((d, m), dtype=np.int64))
    counts = np.zeros(d * d, dtype=np.int64)
    offsets = (np.arange(d) * d)[None, :, None]
    raw = np.empty((d, m, chunk))
    seen = np.empty((chunk, d, m), dtype=np.int64)
    done = 0
    while done < steps:
        size = min(chunk, steps - done)
        for firm, row in enumerate(gens):
            for rep, g in enumerate(row):
                raw[firm, rep, :size] = g.standard_normal(size)
        noise = np.ascontiguousarray(raw[:, :, :size].transpose(2, 0, 1))
        for k in range(size):
            y = y + rates.take(r) + scales.take(r) * noise[k]
            _ranks_into(y, r)
            seen[k] = r
        counts += np.bincount((seen[:size] + offsets).ravel(), minlength=d * d)
        done += size
    return counts, y


def simulate_market(model: FirstOrderModel, horizon: float, step: float, replications: int = 1,
                    seed: int = 0, chunk: int = 512, keep_terminal: bool = False,
                    threads: int = 1) -> OccupationMatrix:
    """Euler simulation of ``model`` with occupation counting at t = step, 2 step, ..., horizon.

    Each (replication, firm) pair has its own Brownian stream and the rank
    counts are integers, so results depend neither on ``chunk`` nor on
    ``threads``.
    """
    steps = _grid_steps(horizon, step)
    if replications < 1:
        raise ParameterError("need at least one replication")
    if chunk < 1 or threads < 1:
        raise ParameterError("chunk and threads must be positive")
    workers = min(threads, replications)
    edges = [replications * i // workers for i in range(workers + 1)]
    jobs = list(zip(edges[:-1], edges[1:]))

    def job(bounds):
        return _simulate_block(model, steps, step, bounds[0], bounds[1], seed, chunk)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, jobs))
    else:
        parts = [job(b) for b in jobs]
    counts = sum(p[0] for p in parts)
    d = model.d
    occupation = counts.reshape(d, d) / (steps * replications)
    terminal = np.concatenate([p[1] for p in parts], axis=1).T.copy() if keep_terminal else None
    return OccupationMatrix(occupation, float(horizon), float(step), replications, terminal)
