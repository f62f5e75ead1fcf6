"""Explicit one-step schemes for piecewise-constant drift and additive noise.

The step functions accept scalars or numpy arrays. :func:`integrate` runs a
whole batch of replications in lockstep and is what the study harness uses;
:func:`simulate` is the single-path convenience wrapper around it. Both go
through the same private kernels, so a path gives bit-identical values
whichever entry point produced it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import PiecewiseDrift, SdeSpec
from .noise import NoisePath, coarsen


class SchemeKind(enum.Enum):
    EULER = "euler"
    HEUN = "heun"
    PLATEN = "platen"


def _euler(x, a, dt, noise):
    return x + a * dt + noise


def _heun(x, a, a_pred, dt, noise):
    return x + 0.5 * (a + a_pred) * dt + noise


def _platen(x, a, a_plus, a_minus, dt, root_dt, noise, integral):
    euler = x + a * dt + noise
    return euler + (
        0.25 * (a_plus - 2.0 * a + a_minus) * dt + (a_plus - a_minus) / (2.0 * root_dt) * integral
    )


def euler_step(x, drift: PiecewiseDrift, sigma, dt, dw):
    return _euler(x, drift(x), dt, sigma * dw)


def heun_step(x, drift: PiecewiseDrift, sigma, dt, dw):
    a = drift(x)
    noise = sigma * dw
    return _heun(x, a, drift(_euler(x, a, dt, noise)), dt, noise)


def platen_step(x, drift: PiecewiseDrift, sigma, dt, dw, integral):
    """Wagner-Platen type step.

    The two probes ``x + a(x) dt +/- sigma sqrt(dt)`` replace the drift
    derivative; ``integral`` is the time integral of ``W_u - W_{k dt}`` over
    the step.
    """
    a = drift(x)
    root = math.sqrt(dt)
    base = x + a * dt
    return _platen(
        x, a, drift(base + sigma * root), drift(base - sigma * root), dt, root, sigma * dw, integral
    )


@dataclass(frozen=True)
class BatchRun:
    """Result of :func:`integrate` for a batch of B replications.

    ``values`` holds every ``record_every``-th grid value, shape
    ``(n // record_every + 1, B)``. ``first_change`` is the step index k of
    the first region switch between ``x_k`` and ``x_{k+1}``, or -1.
    ``changes_per_step[k]`` counts replications switching region on step k.
    """

    values: np.ndarray
    changes: np.ndarray
    first_change: np.ndarray
    changes_per_step: np.ndarray


def integrate(drift, sigma, x0, dt, increments, integrals=None,
              scheme=SchemeKind.EULER, record_every=1) -> BatchRun:
    """Run ``scheme`` over time-major ``increments`` of shape (n, B)."""
    scheme = SchemeKind(scheme)
    if not dt > 0:
        raise ParameterError(f"step size must be positive, got {dt}")
    if scheme is SchemeKind.PLATEN and integrals is None:
        raise ParameterError("the Platen scheme needs the per-step time integrals")
    n, batch = increments.shape
    if n % record_every:
        raise ParameterError(f"record_every={record_every} does not divide {n} steps")

    x = np.empty(batch)
    x[...] = x0
    values = np.empty((n // record_every + 1, batch))
    values[0] = x
    reg = drift.region(x)
    vals = np.asarray(drift.values)
    changes = np.zeros(batch, dtype=np.int64)
    first = np.full(batch, -1, dtype=np.int64)
    per_step = np.zeros(n, dtype=np.int64)
    root = math.sqrt(dt)
    shift = sigma * root

    for k in range(n):
        a = vals[reg]
        noise = sigma * increments[k]
        if scheme is SchemeKind.EULER:
            x = _euler(x, a, dt, noise)
        elif scheme is SchemeKind.HEUN:
            x = _heun(x, a, drift(_euler(x, a, dt, noise)), dt, noise)
        else:
            base = x + a * dt
            x = _platen(x, a, drift(base + shift), drift(base - shift), dt, root, noise, integrals[k])
        new = drift.region(x)
        moved = new != reg
        count = np.count_nonzero(moved)
        if count:
            per_step[k] = count
            changes += moved
            first[moved & (first < 0)] = k
        reg = new
        if (k + 1) % record_every == 0:
            values[(k + 1) // record_every] = x
    return BatchRun(values, changes, first, per_step)


@dataclass(frozen=True)
class Trajectory:
    grid_exponent: int
    values: np.ndarray
    drift_changes: tuple
    scheme: SchemeKind

    @property
    def steps(self) -> int:
        return len(self.values) - 1


def simulate(spec: SdeSpec, scheme, path: NoisePath, coarse_exponent: int) -> Trajectory:
    """Approximate ``spec`` on the grid with 2^coarse_exponent steps driven by ``path``."""
    scheme = SchemeKind(scheme)
    if spec.horizon != path.horizon:
        raise ParameterError(f"horizon mismatch: spec {spec.horizon}, noise {path.horizon}")
    inc, bridge = coarsen(path, coarse_exponent)
    dt = spec.horizon / 2**coarse_exponent
    run = integrate(
        spec.drift, spec.sigma, spec.initial_value, dt, inc[:, None],
        None if bridge is None else bridge[:, None], scheme,
    )
    values = run.values[:, 0]
    values.flags.writeable = False
    changes = tuple(int(k) for k in np.flatnonzero(run.changes_per_step))
    return Trajectory(coarse_exponent, values, changes, scheme)


def implicit_solvable(alpha1, alpha2, dt, z):
    """Solve ``y - a(y) dt = z`` for the drift ``alpha1`` on (-inf, 0), ``alpha2`` on [0, inf).

    Returns ``y`` or ``None`` when there is no solution. With the breakpoint
    owned by the right region the gap is ``[-alpha1*dt, -alpha2*dt)``: at the
    left endpoint the left-branch candidate is exactly 0, which belongs to the
    right region.
    """
    if not (alpha1 > 0 > alpha2):
        raise ParameterError(f"need alpha1 > 0 > alpha2, got {alpha1}, {alpha2}")
    if not dt > 0:
        raise ParameterError(f"step size must be positive, got {dt}")
    left = z + alpha1 * dt
    if left < 0:
        return left
    right = z + alpha2 * dt
    if right >= 0:
        return right
    return None
