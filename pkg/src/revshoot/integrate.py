"""Adaptive Runge-Kutta integration with dense output and section crossings.

The propagator is an embedded explicit 5(4) pair (Dormand-Prince
coefficients) with the classic free 4th-order interpolant, written out on
scalar components.  The state dimension is fixed at four and grid sweeps
integrate tens of thousands of shots on one core, so the inner loop avoids
array temporaries on purpose.

Step acceptance uses the mixed test ||err|| <= abs_tol + rel_tol * ||s||
componentwise (RMS of the scaled error).  Crossings of the section
{p_u = 0} are located by sign change of p_u across an accepted step and
refined by bisection on the interpolant; tangential touches do not change
sign and are ignored by construction.

Everything is deterministic: identical inputs give bit-identical
trajectories, and the arithmetic is sign-symmetric, so integrating
backward from s mirrors integrating forward from Q s exactly.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from .system import Params, State

# Dormand-Prince 5(4) tableau.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
# 5th-order weights minus the embedded 4th-order weights.
_E1, _E3, _E4 = 71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0
_E5, _E6, _E7 = -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0
# Free interpolant weights.
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0

# Crossings closer than this in time count as one.
MERGE_TIME = 1e-9
_BISECT_MAX = 64


class StepSizeUnderflow(RuntimeError):
    """Step control hit h_min without meeting the tolerance.

    Carries the last good node (t, state) and any crossings already
    detected before the failure in ``events``.
    """

    def __init__(self, t: float, s: State):
        super().__init__(f"step size underflow at t={t!r}")
        self.t = t
        self.state = s
        self.events: list = []


class NonFiniteState(RuntimeError):
    """The flow left float64 range; carries the last good node.

    ``events`` holds crossings detected before the failure.
    """

    def __init__(self, t: float, s: State):
        super().__init__(f"non-finite state after t={t!r}")
        self.t = t
        self.state = s
        self.events: list = []


@dataclass(frozen=True)
class StepControl:
    """Error and step-size limits for the embedded pair."""

    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 0.1

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("tolerances must be strictly positive")
        if not (0.0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        for name in ("rel_tol", "abs_tol", "h_init", "h_min", "h_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


class CrossingDirection(Enum):
    PU_INCREASING = "pu_increasing"
    PU_DECREASING = "pu_decreasing"


class CrossingRecord(NamedTuple):
    """A refined intersection with {p_u = 0}; index counts from 1."""

    t: float
    s: State
    index: int
    direction: CrossingDirection


# Dense segment: (t0, h, cu, cv, cw, cz), each c* holding the five
# coefficients of the interpolating quartic in theta = (t - t0) / h.
Segment = tuple[float, float, tuple, tuple, tuple, tuple]


def _seg_eval(seg: Segment, theta: float) -> State:
    _, _, cu, cv, cw, cz = seg
    return State(
        ((cu[4] * theta + cu[3]) * theta + cu[2]) * theta * theta + cu[1] * theta + cu[0],
        ((cv[4] * theta + cv[3]) * theta + cv[2]) * theta * theta + cv[1] * theta + cv[0],
        ((cw[4] * theta + cw[3]) * theta + cw[2]) * theta * theta + cw[1] * theta + cw[0],
        ((cz[4] * theta + cz[3]) * theta + cz[2]) * theta * theta + cz[1] * theta + cz[0],
    )


def _seg_eval_pu(seg: Segment, theta: float) -> float:
    cw = seg[4]
    return ((cw[4] * theta + cw[3]) * theta + cw[2]) * theta * theta + cw[1] * theta + cw[0]


@dataclass
class Trajectory:
    """Accepted nodes, optional dense segments, and detected crossings.

    Node times are strictly monotone in the direction of integration.
    ``eval`` reproduces node states exactly at node times and uses the
    4th-order interpolant inside steps.  ``segs`` is None when a caller
    asked the driver not to keep dense output.
    """

    p: Params
    ts: list[float]
    states: list[State]
    segs: list[Segment] | None
    events: list[CrossingRecord] = field(default_factory=list)

    @property
    def t0(self) -> float:
        return self.ts[0]

    @property
    def t1(self) -> float:
        return self.ts[-1]

    def eval(self, t: float) -> State:
        ts = self.ts
        if self.segs is None:
            raise ValueError("trajectory was built without dense output")
        forward = ts[-1] >= ts[0]
        key = ts if forward else [-x for x in ts]
        tq = t if forward else -t
        if tq < key[0] or tq > key[-1]:
            raise ValueError(f"t={t!r} outside trajectory span [{ts[0]!r}, {ts[-1]!r}]")
        i = bisect_left(key, tq)
        if i < len(ts) and ts[i] == t:
            return self.states[i]
        seg = self.segs[i - 1]
        return _seg_eval(seg, (t - seg[0]) / seg[1])


def _refine_crossing(seg: Segment, w_lo: float, w_hi: float) -> tuple[float, State]:
    """Bisect the interpolant's p_u over theta in [0, 1]; returns (t, state)."""
    lo, hi = 0.0, 1.0
    neg_lo = w_lo < 0.0
    best_th, best_abs = 0.5, math.inf
    for _ in range(_BISECT_MAX):
        mid = 0.5 * (lo + hi)
        pm = _seg_eval_pu(seg, mid)
        am = abs(pm)
        if am < best_abs:
            best_abs, best_th = am, mid
        if pm == 0.0:
            break
        if (pm < 0.0) == neg_lo:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-18:
            break
    s = _seg_eval(seg, best_th)
    return seg[0] + best_th * seg[1], s


def _make_segment(
    t: float,
    h: float,
    u: float,
    v: float,
    w: float,
    z: float,
    u5: float,
    v5: float,
    w5: float,
    z5: float,
    ku1, kv1, kw1, kz1,
    ku3, kv3, kw3, kz3,
    ku4, kv4, kw4, kz4,
    ku5, kv5, kw5, kz5,
    ku6, kv6, kw6, kz6,
    ku7, kv7, kw7, kz7,
) -> Segment:
    cs = []
    for y0, y1, k1, k3, k4, k5, k6, k7 in (
        (u, u5, ku1, ku3, ku4, ku5, ku6, ku7),
        (v, v5, kv1, kv3, kv4, kv5, kv6, kv7),
        (w, w5, kw1, kw3, kw4, kw5, kw6, kw7),
        (z, z5, kz1, kz3, kz4, kz5, kz6, kz7),
    ):
        d = y1 - y0
        r3 = h * k1 - d
        r4 = d - h * k7 - r3
        r5 = h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6 + _D7 * k7)
        cs.append((y0, d + r3, r4 + r5 - r3, -r4 - 2.0 * r5, r5))
    return (t, h, cs[0], cs[1], cs[2], cs[3])


def _drive(
    p: Params,
    y0: State,
    t0: float,
    t_end: float,
    ctrl: StepControl,
    *,
    store_nodes: bool = True,
    store_dense: bool = True,
    detect: bool = False,
    r_max: float | None = None,
    max_events: int | None = None,
) -> tuple[Trajectory, str]:
    """Propagate y0 over [t0, t_end]; returns (trajectory, reason).

    reason is "t_end", "radius" (left the ball of radius r_max), or
    "budget" (collected max_events crossings).  Dense segments and node
    storage are optional so sweep shots stay allocation-free.
    """
    a = p.a
    b = p.b
    desc, kmin = p.nonlinearity._f_data
    km_range = range(kmin - 1)
    rtol, atol = ctrl.rel_tol, ctrl.abs_tol
    hmin, hmax = ctrl.h_min, ctrl.h_max
    isfinite = math.isfinite

    fwd = t_end >= t0
    sgn = 1.0 if fwd else -1.0
    t = t0
    u, v, w, z = y0
    r2_limit = r_max * r_max if r_max is not None else None

    ts = [t0]
    states = [y0]
    segs: list[Segment] | None = [] if store_dense else None
    events: list[CrossingRecord] = []

    # FSAL seed stage.
    acc = 0.0
    for cc in desc:
        acc = acc * u + cc
    pw = u
    for _ in km_range:
        pw *= u
    fu = b * (acc * pw)
    ku1, kv1, kw1, kz1 = v, z, -u + fu, -w - a * v

    if not (isfinite(ku1) and isfinite(kv1) and isfinite(kw1) and isfinite(kz1)):
        err = NonFiniteState(t, State(u, v, w, z))
        err.events = events
        raise err

    h = sgn * min(ctrl.h_init, hmax)
    reason = "t_end"
    cap_next = _FAC_MAX

    while (t_end - t) * sgn > 0.0:
        last = False
        if (t + h - t_end) * sgn >= 0.0:
            h = t_end - t
            last = True

        # -- stages 2..6 --------------------------------------------------
        uu = u + h * (_A21 * ku1)
        vv = v + h * (_A21 * kv1)
        ww = w + h * (_A21 * kw1)
        zz = z + h * (_A21 * kz1)
        acc = 0.0
        for cc in desc:
            acc = acc * uu + cc
        pw = uu
        for _ in km_range:
            pw *= uu
        fu = b * (acc * pw)
        ku2, kv2, kw2, kz2 = vv, zz, -uu + fu, -ww - a * vv

        uu = u + h * (_A31 * ku1 + _A32 * ku2)
        vv = v + h * (_A31 * kv1 + _A32 * kv2)
        ww = w + h * (_A31 * kw1 + _A32 * kw2)
        zz = z + h * (_A31 * kz1 + _A32 * kz2)
        acc = 0.0
        for cc in desc:
            acc = acc * uu + cc
        pw = uu
        for _ in km_range:
            pw *= uu
        fu = b * (acc * pw)
        ku3, kv3, kw3, kz3 = vv, zz, -uu + fu, -ww - a * vv

        uu = u + h * (_A41 * ku1 + _A42 * ku2 + _A43 * ku3)
        vv = v + h * (_A41 * kv1 + _A42 * kv2 + _A43 * kv3)
        ww = w + h * (_A41 * kw1 + _A42 * kw2 + _A43 * kw3)
        zz = z + h * (_A41 * kz1 + _A42 * kz2 + _A43 * kz3)
        acc = 0.0
        for cc in desc:
            acc = acc * uu + cc
        pw = uu
        for _ in km_range:
            pw *= uu
        fu = b * (acc * pw)
        ku4, kv4, kw4, kz4 = vv, zz, -uu + fu, -ww - a * vv

        uu = u + h * (_A51 * ku1 + _A52 * ku2 + _A53 * ku3 + _A54 * ku4)
        vv = v + h * (_A51 * kv1 + _A52 * kv2 + _A53 * kv3 + _A54 * kv4)
        ww = w + h * (_A51 * kw1 + _A52 * kw2 + _A53 * kw3 + _A54 * kw4)
        zz = z + h * (_A51 * kz1 + _A52 * kz2 + _A53 * kz3 + _A54 * kz4)
        acc = 0.0
        for cc in desc:
            acc = acc * uu + cc
        pw = uu
        for _ in km_range:
            pw *= uu
        fu = b * (acc * pw)
        ku5, kv5, kw5, kz5 = vv, zz, -uu + fu, -ww - a * vv

        uu = u + h * (_A61 * ku1 + _A62 * ku2 + _A63 * ku3 + _A64 * ku4 + _A65 * ku5)
        vv = v + h * (_A61 * kv1 + _A62 * kv2 + _A63 * kv3 + _A64 * kv4 + _A65 * kv5)
        ww = w + h * (_A61 * kw1 + _A62 * kw2 + _A63 * kw3 + _A64 * kw4 + _A65 * kw5)
        zz = z + h * (_A61 * kz1 + _A62 * kz2 + _A63 * kz3 + _A64 * kz4 + _A65 * kz5)
        acc = 0.0
        for cc in desc:
            acc = acc * uu + cc
        pw = uu
        for _ in km_range:
            pw *= uu
        fu = b * (acc * pw)
        ku6, kv6, kw6, kz6 = vv, zz, -uu + fu, -ww - a * vv

        # -- 5th-order solution and FSAL stage ----------------------------
        u5 = u + h * (_B1 * ku1 + _B3 * ku3 + _B4 * ku4 + _B5 * ku5 + _B6 * ku6)
        v5 = v + h * (_B1 * kv1 + _B3 * kv3 + _B4 * kv4 + _B5 * kv5 + _B6 * kv6)
        w5 = w + h * (_B1 * kw1 + _B3 * kw3 + _B4 * kw4 + _B5 * kw5 + _B6 * kw6)
        z5 = z + h * (_B1 * kz1 + _B3 * kz3 + _B4 * kz4 + _B5 * kz5 + _B6 * kz6)
        acc = 0.0
        for cc in desc:
            acc = acc * u5 + cc
        pw = u5
        for _ in km_range:
            pw *= u5
        fu = b * (acc * pw)
        ku7, kv7, kw7, kz7 = v5, z5, -u5 + fu, -w5 - a * v5

        eu = h * (_E1 * ku1 + _E3 * ku3 + _E4 * ku4 + _E5 * ku5 + _E6 * ku6 + _E7 * ku7)
        ev = h * (_E1 * kv1 + _E3 * kv3 + _E4 * kv4 + _E5 * kv5 + _E6 * kv6 + _E7 * kv7)
        ew = h * (_E1 * kw1 + _E3 * kw3 + _E4 * kw4 + _E5 * kw5 + _E6 * kw6 + _E7 * kw7)
        ez = h * (_E1 * kz1 + _E3 * kz3 + _E4 * kz4 + _E5 * kz5 + _E6 * kz6 + _E7 * kz7)

        su = atol + rtol * max(abs(u), abs(u5))
        sv = atol + rtol * max(abs(v), abs(v5))
        sw = atol + rtol * max(abs(w), abs(w5))
        sz = atol + rtol * max(abs(z), abs(z5))
        enorm2 = 0.25 * (
            (eu / su) * (eu / su)
            + (ev / sv) * (ev / sv)
            + (ew / sw) * (ew / sw)
            + (ez / sz) * (ez / sz)
        )

        if not (
            isfinite(u5) and isfinite(v5) and isfinite(w5) and isfinite(z5) and isfinite(enorm2)
        ):
            if abs(h) <= hmin * (1.0 + 1e-12):
                err = NonFiniteState(t, State(u, v, w, z))
                err.events = events
                raise err
            h = sgn * max(0.25 * abs(h), hmin)
            cap_next = 1.0
            continue

        if enorm2 > 1.0:
            # rejected: shrink and retry, never above h_min
            if abs(h) <= hmin * (1.0 + 1e-12):
                err = StepSizeUnderflow(t, State(u, v, w, z))
                err.events = events
                raise err
            fac = max(_FAC_MIN, _SAFETY * enorm2 ** -0.1)
            h = sgn * max(hmin, abs(h) * fac)
            cap_next = 1.0
            continue

        # accepted
        t_new = t_end if last else t + h
        s_new = State(u5, v5, w5, z5)

        seg: Segment | None = None
        if store_dense or (detect and (w5 == 0.0 or (w != 0.0 and (w < 0.0) != (w5 < 0.0)))):
            seg = _make_segment(
                t, h, u, v, w, z, u5, v5, w5, z5,
                ku1, kv1, kw1, kz1, ku3, kv3, kw3, kz3, ku4, kv4, kw4, kz4,
                ku5, kv5, kw5, kz5, ku6, kv6, kw6, kz6, ku7, kv7, kw7, kz7,
            )
            if store_dense:
                segs.append(seg)

        if store_nodes:
            ts.append(t_new)
            states.append(s_new)

        stop = None
        if detect:
            if w5 == 0.0:
                cand = (t_new, s_new)
            elif w != 0.0 and (w < 0.0) != (w5 < 0.0):
                cand = _refine_crossing(seg, w, w5)
            else:
                cand = None
            if cand is not None and not (events and abs(cand[0] - events[-1].t) < MERGE_TIME):
                direction = (
                    CrossingDirection.PU_INCREASING if w < 0.0 else CrossingDirection.PU_DECREASING
                )
                events.append(CrossingRecord(cand[0], cand[1], len(events) + 1, direction))
                if max_events is not None and len(events) >= max_events:
                    stop = "budget"

        if stop is None and r2_limit is not None:
            if u5 * u5 + v5 * v5 + w5 * w5 + z5 * z5 > r2_limit:
                stop = "radius"

        t = t_new
        u, v, w, z = u5, v5, w5, z5
        ku1, kv1, kw1, kz1 = ku7, kv7, kw7, kz7

        if stop is not None:
            reason = stop
            break

        if enorm2 == 0.0:
            fac = cap_next
        else:
            fac = min(cap_next, max(_FAC_MIN, _SAFETY * enorm2 ** -0.1))
        cap_next = _FAC_MAX
        h = sgn * min(hmax, max(hmin, abs(h) * fac))

    if not store_nodes and (not ts or ts[-1] != t):
        ts.append(t)
        states.append(State(u, v, w, z))

    return Trajectory(p, ts, states, segs, events), reason


def integrate(
    start: State, p: Params, t_span: tuple[float, float], ctrl: StepControl | None = None
) -> Trajectory:
    """Propagate start over t_span with dense output; backward spans allowed."""
    if ctrl is None:
        ctrl = StepControl()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 == t0:
        return Trajectory(p, [t0], [start], [])
    tr, _ = _drive(p, start, t0, t1, ctrl)
    return tr


def find_crossings(tr: Trajectory, max_count: int | None = None) -> list[CrossingRecord]:
    """Crossings of {p_u = 0} along a dense trajectory, in traversal order.

    The initial node is not counted even if it sits on the section; a
    crossing within MERGE_TIME of the previous one is merged.
    """
    if tr.segs is None:
        raise ValueError("find_crossings needs a trajectory with dense output")
    out: list[CrossingRecord] = []
    states = tr.states
    for i, seg in enumerate(tr.segs):
        w0 = states[i].p_u
        w1 = states[i + 1].p_u
        if w1 == 0.0:
            cand = (tr.ts[i + 1], states[i + 1])
        elif w0 != 0.0 and (w0 < 0.0) != (w1 < 0.0):
            cand = _refine_crossing(seg, w0, w1)
        else:
            continue
        if out and abs(cand[0] - out[-1].t) < MERGE_TIME:
            continue
        direction = (
            CrossingDirection.PU_INCREASING if w0 < 0.0 else CrossingDirection.PU_DECREASING
        )
        out.append(CrossingRecord(cand[0], cand[1], len(out) + 1, direction))
        if max_count is not None and len(out) >= max_count:
            break
    return out
