"""Gauge (dimension) functions used to price covering cubes.

A gauge h is nondecreasing on [0, inf) with h(0) = 0 and h(t) > 0 for
t > 0.  Three families are supported:

* ``PowerGauge``:    h(t) = c * t**s, with c = 1 or the classical
  normalization omega_s = pi**(s/2) / Gamma(s/2 + 1).
* ``PowerLogGauge``: h(t) = t**s / max(1, log(1/t))**beta, a gauge with
  h(t)/t**s -> 0 as t -> 0 (the log factor is clamped at 1 so h stays
  monotone and finite for all t, not only near zero).
* ``TableGauge``:    monotone piecewise-linear interpolation of knots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def volume_constant(s: float) -> float:
    """omega_s = pi^(s/2) / Gamma(s/2 + 1); omega_1 = 2, omega_2 = pi."""
    return math.pi ** (s / 2.0) / math.gamma(s / 2.0 + 1.0)


def _check_argument(t: float) -> None:
    if t < 0:
        raise ValueError(f"gauge argument must be nonnegative, got {t}")


class Gauge:
    """Base class; concrete gauges implement __call__."""

    kind = "abstract"

    def __call__(self, t: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerGauge(Gauge):
    s: float
    normalized: bool = False

    kind = "power"

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError(f"power gauge needs s > 0, got {self.s}")

    @property
    def constant(self) -> float:
        return volume_constant(self.s) if self.normalized else 1.0

    def __call__(self, t: float) -> float:
        _check_argument(t)
        if t == 0.0:
            return 0.0
        return self.constant * t**self.s


@dataclass(frozen=True)
class PowerLogGauge(Gauge):
    s: float
    beta: float

    kind = "power_log"

    def __post_init__(self):
        if self.s <= 0 or self.beta <= 0:
            raise ValueError("power_log gauge needs s > 0 and beta > 0")

    def __call__(self, t: float) -> float:
        _check_argument(t)
        if t == 0.0:
            return 0.0
        return t**self.s / max(1.0, math.log(1.0 / t)) ** self.beta


class TableGauge(Gauge):
    """Piecewise-linear gauge through user knots.

    Knots must have strictly increasing arguments and nondecreasing
    values; any knot with t > 0 must have h > 0 (otherwise h would
    vanish on an interval).  A (0, 0) knot is prepended when absent.
    Above the top knot the value is clamped.
    """

    kind = "table"

    def __init__(self, knots):
        knots = [(float(t), float(v)) for t, v in knots]
        if not knots:
            raise ValueError("table gauge needs at least one knot")
        if knots[0][0] != 0.0:
            knots.insert(0, (0.0, 0.0))
        ts = [t for t, _ in knots]
        vs = [v for _, v in knots]
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("table gauge knots must be strictly increasing in t")
        if any(v2 < v1 for v1, v2 in zip(vs, vs[1:])):
            raise ValueError("table gauge values must be nondecreasing")
        if vs[0] != 0.0:
            raise ValueError("table gauge must have h(0) = 0")
        if any(v <= 0.0 for t, v in knots if t > 0.0):
            raise ValueError("table gauge needs h(t) > 0 for every knot t > 0")
        self.knots = tuple(zip(ts, vs))
        self._ts = ts
        self._vs = vs

    def __call__(self, t: float) -> float:
        _check_argument(t)
        ts, vs = self._ts, self._vs
        if t >= ts[-1]:
            return vs[-1]
        # binary search for the bracketing knot interval
        lo, hi = 0, len(ts) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ts[mid] <= t:
                lo = mid
            else:
                hi = mid
        t0, t1 = ts[lo], ts[hi]
        v0, v1 = vs[lo], vs[hi]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    def __eq__(self, other):
        return isinstance(other, TableGauge) and self.knots == other.knots

    def __hash__(self):
        return hash(self.knots)

    def __repr__(self):
        return f"TableGauge({list(self.knots)!r})"


def eval_gauge(gauge: Gauge, t: float) -> float:
    """h(t); raises ValueError for t < 0."""
    return gauge(t)


def gauge_ratio(gauge: Gauge, t: float, dim: int) -> float:
    """h(t) / t^(dim-1), the admissibility ratio against the codimension-one
    power gauge.  A user gauge is certified by this ratio decreasing to zero
    along a decreasing sample of t."""
    if t <= 0:
        raise ValueError(f"gauge_ratio needs t > 0, got {t}")
    return gauge(t) / t ** (dim - 1)
