"""Periodic scheduling logics and the per-plant switching signals they induce.

A schedule is a repeating list of (access set, duration) segments with
right-open interval semantics: at a switching instant the new access set is
already active. Time is continuous; schedules are stored symbolically and
never sampled.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .cycles import CycleDesign
from .graph import VertexLabel

STABLE = "stable"
UNSTABLE = "unstable"


class ScheduleError(Exception):
    pass


class UnknownPlant(ScheduleError):
    pass


class InsufficientHorizon(ScheduleError):
    pass


@dataclass(frozen=True)
class ScheduleLogic:
    n_plants: int
    segments: list[tuple[VertexLabel, float]]  # (access set, duration)

    def __post_init__(self):
        if not self.segments:
            raise ScheduleError("schedule needs at least one segment")
        for _, dur in self.segments:
            if dur <= 0:
                raise ScheduleError("segment durations must be positive")
        n = len(self.segments)
        for j in range(n):
            if n > 1 and self.segments[j][0] == self.segments[(j + 1) % n][0]:
                raise ScheduleError("consecutive access sets must differ")

    @property
    def period(self) -> float:
        return sum(dur for _, dur in self.segments)

    @property
    def starts(self) -> list[float]:
        out, acc = [], 0.0
        for _, dur in self.segments:
            out.append(acc)
            acc += dur
        return out


@dataclass(frozen=True)
class SwitchingSignal:
    plant: int
    period: float
    segments: list[tuple[str, float]]  # (mode, duration) over one period


@dataclass(frozen=True)
class SwitchStats:
    d_stable: float
    d_unstable: float
    n_su: int
    n_us: int


def build_schedule(design: CycleDesign) -> ScheduleLogic:
    """Turn a T-contractive cycle into the periodic scheduling logic: one
    segment per cycle vertex, holding its access set for its T-factor."""
    segments = [
        (vertex, float(t)) for vertex, t in zip(design.vertices, design.t_factors)
    ]
    return ScheduleLogic(n_plants=len(design.certificates), segments=segments)


def gamma_at(s: ScheduleLogic, t: float) -> VertexLabel:
    """Access set active at time t >= 0 (right-open segments)."""
    if t < 0 or not math.isfinite(t):
        raise ScheduleError(f"time must be finite and >= 0, got {t}")
    period = s.period
    r = math.fmod(t, period)
    if r < 0:  # fmod of a tiny negative rounding artifact
        r += period
    idx = bisect.bisect_right(s.starts, r) - 1
    return s.segments[idx][0]


def switching_signal(s: ScheduleLogic, plant: int) -> SwitchingSignal:
    """Per-plant mode trace over one period; adjacent same-mode segments
    are merged so transition counts match actual mode switches."""
    if not 1 <= plant <= s.n_plants:
        raise UnknownPlant(f"plant {plant} not in 1..{s.n_plants}")
    merged: list[tuple[str, float]] = []
    for access, dur in s.segments:
        mode = STABLE if plant in access else UNSTABLE
        if merged and merged[-1][0] == mode:
            merged[-1] = (mode, merged[-1][1] + dur)
        else:
            merged.append((mode, dur))
    return SwitchingSignal(plant=plant, period=s.period, segments=merged)


def switch_stats(sig: SwitchingSignal, t_from: float, t_to: float) -> SwitchStats:
    """Mode durations and transition counts on the interval ]t_from, t_to].

    Exact with respect to the periodic structure; D_s + D_u equals the
    interval length by construction.
    """
    if not 0 <= t_from < t_to:
        raise ScheduleError(f"need 0 <= from < to, got ({t_from}, {t_to})")
    period = sig.period
    n_seg = len(sig.segments)

    d_stable = 0.0
    n_su = n_us = 0
    k = int(t_from // period)
    # One extra period so transitions landing exactly at t_to are seen.
    while k * period <= t_to:
        seg_start = k * period
        for j, (mode, dur) in enumerate(sig.segments):
            seg_end = seg_start + dur
            if mode == STABLE:
                overlap = min(seg_end, t_to) - max(seg_start, t_from)
                if overlap > 0:
                    d_stable += overlap
            # Switch into this mode at the segment start; j == 0 is the
            # wraparound from the last segment of the previous period.
            prev_mode = sig.segments[(j - 1) % n_seg][0]
            if n_seg > 1 and prev_mode != mode and t_from < seg_start <= t_to:
                if mode == STABLE:
                    n_us += 1
                else:
                    n_su += 1
            seg_start = seg_end
        k += 1
    d_unstable = (t_to - t_from) - d_stable
    return SwitchStats(d_stable=d_stable, d_unstable=d_unstable, n_su=n_su, n_us=n_us)
