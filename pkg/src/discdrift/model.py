"""Scalar SDEs ``dX = a(X) dt + sigma dW`` with piecewise-constant drift."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class PiecewiseDrift:
    """Drift taking ``values[j]`` on the j-th interval cut out by ``breakpoints``.

    Intervals are closed on the left and open on the right, so each
    breakpoint belongs to the region on its right and ``a`` is
    right-continuous.
    """

    breakpoints: tuple = ()
    values: tuple = (0.0,)

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(bps) + 1:
            raise ParameterError(
                f"need len(values) == len(breakpoints) + 1, got {len(vals)} and {len(bps)}"
            )
        if not all(math.isfinite(b) for b in bps) or not all(math.isfinite(v) for v in vals):
            raise ParameterError("breakpoints and values must be finite")
        if any(b1 >= b2 for b1, b2 in zip(bps, bps[1:])):
            raise ParameterError(f"breakpoints must be strictly increasing, got {bps}")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_bps", np.array(bps))
        object.__setattr__(self, "_vals", np.array(vals))

    @property
    def regions(self) -> int:
        return len(self.values)

    def region(self, x):
        """Zero-based region of ``x`` (scalar or array)."""
        return np.searchsorted(self._bps, x, side="right")

    def __call__(self, x):
        idx = self.region(x)
        if np.ndim(idx) == 0:
            return self.values[int(idx)]
        return self._vals[idx]

    def negate(self) -> "PiecewiseDrift":
        return PiecewiseDrift(self.breakpoints, tuple(-v for v in self.values))

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}


def evaluate(drift: PiecewiseDrift, x):
    return drift(x)


def region_index(drift: PiecewiseDrift, x):
    """One-based index of the region containing ``x``."""
    idx = drift.region(x) + 1
    return int(idx) if np.ndim(idx) == 0 else idx


@dataclass(frozen=True)
class SdeSpec:
    drift: PiecewiseDrift
    sigma: float = 1.0
    initial_value: float = 0.0
    horizon: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not self.horizon > 0:
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if not math.isfinite(self.initial_value):
            raise ParameterError("initial value must be finite")


class Direction(enum.Enum):
    INWARD = "inward"
    OUTWARD = "outward"
    NEITHER = "neither"


@dataclass(frozen=True)
class DriftDirection:
    kind: Direction
    point: float | None = None


def classify(drift: PiecewiseDrift) -> DriftDirection:
    """Inward/outward classification about a single sign change."""
    vals = drift.values
    if any(v == 0 for v in vals):
        return DriftDirection(Direction.NEITHER)
    flips = [j for j in range(1, len(vals)) if (vals[j - 1] > 0) != (vals[j] > 0)]
    if len(flips) != 1:
        return DriftDirection(Direction.NEITHER)
    x_star = drift.breakpoints[flips[0] - 1]
    kind = Direction.INWARD if vals[0] > 0 else Direction.OUTWARD
    return DriftDirection(kind, x_star)


CATALOG = {
    "sign": PiecewiseDrift((0.0,), (-1.0, 1.0)),
    "minusSign": PiecewiseDrift((0.0,), (1.0, -1.0)),
    "10sign": PiecewiseDrift((0.0,), (-10.0, 10.0)),
    "minus10sign": PiecewiseDrift((0.0,), (10.0, -10.0)),
    "elementary_minus34": PiecewiseDrift((1.4,), (-3.0, 4.0)),
    "elementary4minus3": PiecewiseDrift((1.4,), (4.0, -3.0)),
    "elementary_minus0.6_1": PiecewiseDrift((1.4,), (-0.6, 1.0)),
    "elementary1minus0.6": PiecewiseDrift((1.4,), (1.0, -0.6)),
}


def catalog(name: str, xi: float = 0.0) -> SdeSpec:
    """Named test equation with unit noise on [0, 1] started at ``xi``."""
    try:
        drift = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog drift {name!r}; known: {', '.join(CATALOG)}") from None
    return SdeSpec(drift, sigma=1.0, initial_value=float(xi), horizon=1.0)
