"""Coupled Brownian driving noise on dyadic grids.

Every replication owns an independent Philox stream keyed by
``(seed, replication_index)``, so paths can be generated in any order and
on any number of workers. Within a stream all the standard normals for the
increments are drawn first and the ones for the time integrals second; the
increments therefore do not depend on whether the integrals are requested.

Normals come from numpy's ziggurat sampler (``Generator.standard_normal``),
which is bit-reproducible for a fixed numpy build.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# spawn-key tags keep the noise, chain and market streams disjoint
NOISE_STREAM = 0x4E4F
CHAIN_STREAM = 0x4348
MARKET_STREAM = 0x4D4B


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``seed`` and an integer spawn key."""
    if seed < 0 or seed >= 2**64:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class NoisePath:
    """Brownian increments and per-step integrals of one replication.

    ``bridge_integrals[k]`` is the value of the integral of
    ``W_u - W_{k*dt}`` over the k-th fine step.
    """

    seed: int
    replication_index: int
    fine_exponent: int
    horizon: float
    increments: np.ndarray
    bridge_integrals: np.ndarray

    @property
    def steps(self) -> int:
        return 2**self.fine_exponent

    @property
    def fine_step(self) -> float:
        return self.horizon / self.steps


def _check_grid(fine_exponent: int, horizon: float) -> None:
    if int(fine_exponent) != fine_exponent or fine_exponent < 1:
        raise ParameterError(f"fine_exponent must be an integer >= 1, got {fine_exponent}")
    if not horizon > 0 or not math.isfinite(horizon):
        raise ParameterError(f"horizon must be positive and finite, got {horizon}")


def _draw(seed: int, replication_index: int, steps: int, dt: float, bridge: bool):
    rng = stream(seed, NOISE_STREAM, replication_index)
    dw = math.sqrt(dt) * rng.standard_normal(steps)
    if not bridge:
        return dw, None
    z2 = rng.standard_normal(steps)
    integrals = (dt / 2.0) * dw + (dt**1.5 / math.sqrt(12.0)) * z2
    return dw, integrals


def generate(seed: int, replication_index: int, fine_exponent: int, horizon: float) -> NoisePath:
    _check_grid(fine_exponent, horizon)
    if replication_index < 0:
        raise ParameterError(f"replication_index must be >= 0, got {replication_index}")
    steps = 2**fine_exponent
    dw, integrals = _draw(seed, replication_index, steps, horizon / steps, bridge=True)
    dw.flags.writeable = False
    integrals.flags.writeable = False
    return NoisePath(seed, replication_index, fine_exponent, float(horizon), dw, integrals)


def generate_block(seed, start, stop, fine_exponent, horizon, bridge=True):
    """Rows ``start..stop-1`` of the replication ensemble as 2-D arrays.

    Row ``r`` is bit-identical to ``generate(seed, start + r, ...)``.
    Returns ``(increments, bridge_integrals)``; the latter is ``None`` when
    ``bridge`` is false.
    """
    _check_grid(fine_exponent, horizon)
    steps = 2**fine_exponent
    dt = horizon / steps
    inc = np.empty((stop - start, steps))
    bri = np.empty((stop - start, steps)) if bridge else None
    for row, rep in enumerate(range(start, stop)):
        dw, integrals = _draw(seed, rep, steps, dt, bridge)
        inc[row] = dw
        if bridge:
            bri[row] = integrals
    return inc, bri


def coarsen_arrays(increments, fine_step, factor, integrals=True):
    """Aggregate the last axis of fine-grid increments by ``factor`` steps.

    Coarse increments are left-to-right partial sums of the fine ones. The
    coarse time integrals (returned when ``integrals`` is true, else
    ``None``) are rebuilt from the fine Brownian values with the
    trapezoidal rule.
    """
    shape = increments.shape[:-1] + (increments.shape[-1] // factor, factor)
    # cumsum is strictly sequential, unlike the pairwise reduction of sum()
    partial = np.cumsum(increments.reshape(shape), axis=-1)
    coarse = partial[..., -1].copy()
    if not integrals:
        return coarse, None
    if factor == 1:
        return coarse, fine_step * 0.5 * coarse
    interior = np.cumsum(partial[..., :-1], axis=-1)[..., -1]
    return coarse, fine_step * (interior + 0.5 * partial[..., -1])


def coarsen(path: NoisePath, coarse_exponent: int):
    """Increments and time integrals of ``path`` on the grid with 2^coarse_exponent steps.

    At the path's own resolution the sampled integrals are returned as they
    are; coarser grids get trapezoidal reconstructions.
    """
    if int(coarse_exponent) != coarse_exponent or coarse_exponent < 0:
        raise ParameterError(f"coarse exponent must be a non-negative integer, got {coarse_exponent}")
    if coarse_exponent > path.fine_exponent:
        raise ParameterError(
            f"coarse exponent {coarse_exponent} exceeds fine exponent {path.fine_exponent}"
        )
    if coarse_exponent == path.fine_exponent:
        return path.increments, path.bridge_integrals
    factor = 2 ** (path.fine_exponent - coarse_exponent)
    return coarsen_arrays(path.increments, path.fine_step, factor)
