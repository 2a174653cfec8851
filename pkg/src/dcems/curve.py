"""Piecewise-linear concave map from electrical power to compute rate.

A data center does not convert power to useful compute at a fixed rate:
cooling overhead, voltage/frequency scaling and scheduling slack make the
marginal compute per kW fall as the hall approaches its rating. We model
the relationship as a continuous concave piecewise-linear function

    rate(p) = slope_k * p + intercept_k   for p in segment k,

with strictly decreasing positive slopes, ``intercept_1 == 0`` (zero power
does zero work) and value continuity at the segment joins. Concavity is
what lets a dispatch optimizer keep the curve exact inside a linear
program: the constraint set ``w <= slope_k * p + intercept_k`` for all k is
the hypograph of the curve, and the smallest power supporting a given work
target always lies on the curve itself.

Work over an interval of ``dt`` hours is ``rate(p) * dt`` (rate is in
GFLOP-equivalents per hour).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Joins of consecutive segments must agree in value to within this.
CONTINUITY_TOL = 1e-9
#: Slack used when comparing powers/rates against domain ends.
DOMAIN_TOL = 1e-9


class CurveError(ValueError):
    """Malformed curve definition."""


class PowerOutOfRange(ValueError):
    """Power query outside the curve domain [0, max_power_kw]."""

    def __init__(self, power_kw: float, max_power_kw: float):
        self.power_kw = power_kw
        self.max_power_kw = max_power_kw
        super().__init__(
            f"power {power_kw:g} kW outside curve domain [0, {max_power_kw:g}] kW"
        )


class WorkExceedsCapacity(ValueError):
    """Work target above what the curve can deliver; carries the shortfall."""

    def __init__(self, work: float, max_work: float):
        self.work = work
        self.max_work = max_work
        self.shortfall = work - max_work
        super().__init__(
            f"work target {work:g} exceeds curve maximum {max_work:g} "
            f"(shortfall {self.shortfall:g})"
        )


@dataclass(frozen=True)
class Segment:
    start_kw: float
    end_kw: float
    slope: float  # GFLOP-equiv per hour per kW
    intercept: float  # GFLOP-equiv per hour


class ProcessingCurve:
    """Validated concave piecewise-linear power-to-rate curve.

    Build either from explicit segments or, more conveniently, from the
    list of breakpoints ``[(power_0=0, rate_0=0), ..., (power_K, rate_K)]``
    via :meth:`from_breakpoints`.
    """

    def __init__(self, segments: list[Segment]):
        if not segments:
            raise CurveError("curve needs at least one segment")
        prev_end = 0.0
        prev_slope = np.inf
        for i, seg in enumerate(segments):
            if abs(seg.start_kw - prev_end) > CONTINUITY_TOL:
                raise CurveError(
                    f"segment {i} starts at {seg.start_kw:g} kW, expected {prev_end:g}"
                )
            if seg.end_kw <= seg.start_kw:
                raise CurveError(f"segment {i} has nonpositive width")
            if seg.slope <= 0:
                raise CurveError(f"segment {i} slope {seg.slope:g} is not positive")
            if seg.slope >= prev_slope:
                raise CurveError(
                    f"segment {i} slope {seg.slope:g} does not decrease "
                    f"(previous {prev_slope:g}); curve must be strictly concave"
                )
            prev_end = seg.end_kw
            prev_slope = seg.slope
        if abs(segments[0].intercept) > CONTINUITY_TOL:
            raise CurveError("first segment must pass through the origin")
        # value continuity at joins
        for left, right in zip(segments, segments[1:]):
            v_left = left.slope * left.end_kw + left.intercept
            v_right = right.slope * right.start_kw + right.intercept
            if abs(v_left - v_right) > CONTINUITY_TOL * max(1.0, abs(v_left)):
                raise CurveError(
                    f"discontinuity at {left.end_kw:g} kW: {v_left:g} vs {v_right:g}"
                )

        self.segments = list(segments)
        self._starts = np.array([s.start_kw for s in segments])
        self._ends = np.array([s.end_kw for s in segments])
        self._slopes = np.array([s.slope for s in segments])
        self._intercepts = np.array([s.intercept for s in segments])
        # rate at each segment end, used to invert work -> power
        self._end_rates = self._slopes * self._ends + self._intercepts

    @classmethod
    def from_breakpoints(cls, points: list[tuple[float, float]]) -> "ProcessingCurve":
        """Build from ``[(power_kw, rate), ...]`` starting at ``(0, 0)``."""
        if len(points) < 2:
            raise CurveError("need at least two breakpoints")
        if abs(points[0][0]) > CONTINUITY_TOL or abs(points[0][1]) > CONTINUITY_TOL:
            raise CurveError("first breakpoint must be (0, 0)")
        segments = []
        for (p0, r0), (p1, r1) in zip(points, points[1:]):
            if p1 <= p0:
                raise CurveError("breakpoint powers must strictly increase")
            slope = (r1 - r0) / (p1 - p0)
            intercept = r0 - slope * p0
            segments.append(Segment(p0, p1, slope, intercept))
        return cls(segments)

    @property
    def max_power_kw(self) -> float:
        return float(self._ends[-1])

    @property
    def max_rate(self) -> float:
        return float(self._end_rates[-1])

    @property
    def num_segments(self) -> int:
        return len(self.segments)

    def hypograph_rows(self) -> list[tuple[float, float]]:
        """(slope, intercept) pairs; ``rate <= slope*p + intercept`` for all."""
        return [(s.slope, s.intercept) for s in self.segments]

    def _segment_index(self, power_kw: np.ndarray) -> np.ndarray:
        # segment k covers [start_k, end_k); the last also covers its end
        return np.minimum(
            np.searchsorted(self._ends, power_kw, side="right"),
            len(self.segments) - 1,
        )

    def rate(self, power_kw):
        """Processing rate (GFLOP-equiv per hour) at the given power draw."""
        p = np.asarray(power_kw, dtype=float)
        bad_low = p < -DOMAIN_TOL
        bad_high = p > self.max_power_kw + DOMAIN_TOL
        if np.any(bad_low | bad_high):
            offender = p[bad_low | bad_high].flat[0]
            raise PowerOutOfRange(float(offender), self.max_power_kw)
        p = np.clip(p, 0.0, self.max_power_kw)
        k = self._segment_index(p)
        out = self._slopes[k] * p + self._intercepts[k]
        return float(out) if np.isscalar(power_kw) else out

    def work(self, power_kw, dt_hours: float):
        """Work done over ``dt_hours`` at constant ``power_kw``."""
        return self.rate(power_kw) * dt_hours

    def min_power_for_work(self, work, dt_hours: float):
        """Smallest power able to deliver ``work`` within ``dt_hours``.

        Raises :class:`WorkExceedsCapacity` when the target is above
        ``max_rate * dt_hours``. Round-trips with :meth:`work` to within
        1e-9 relative.
        """
        if dt_hours <= 0:
            raise ValueError("dt_hours must be positive")
        w = np.asarray(work, dtype=float)
        if np.any(w < -DOMAIN_TOL):
            raise ValueError(f"work target must be nonnegative, got {w.min():g}")
        target_rate = np.maximum(w, 0.0) / dt_hours
        max_work = self.max_rate * dt_hours
        too_big = target_rate > self.max_rate * (1 + DOMAIN_TOL) + DOMAIN_TOL
        if np.any(too_big):
            offender = float(w[too_big].flat[0])
            raise WorkExceedsCapacity(offender, max_work)
        target_rate = np.minimum(target_rate, self.max_rate)
        # first segment whose end rate reaches the target (end rates increase)
        k = np.minimum(
            np.searchsorted(self._end_rates, target_rate, side="left"),
            len(self.segments) - 1,
        )
        p = (target_rate - self._intercepts[k]) / self._slopes[k]
        p = np.clip(p, self._starts[k], self._ends[k])
        return float(p) if np.isscalar(work) else p

    def __repr__(self) -> str:
        joins = [(0.0, 0.0)] + [
            (s.end_kw, s.slope * s.end_kw + s.intercept) for s in self.segments
        ]
        pts = ", ".join(f"({p:g} kW, {r:g})" for p, r in joins)
        return f"ProcessingCurve[{pts}]"
