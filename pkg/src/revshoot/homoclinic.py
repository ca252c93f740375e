"""Shooting for orbits homoclinic to the saddle-center at the origin.

A shot starts on the local unstable manifold, at sigma * epsilon times the
unit unstable eigenvector, and is integrated forward while recording
intersections with the section {p_u = 0}.  If some intersection also has
v = 0, the orbit has hit the fixed-point set of the reversal Q, and gluing
the forward half to its Q-image produces an orbit doubly asymptotic to the
origin.  The signed v value at the k-th intersection is the miss function
whose zeros in the parameter a are located by bisection.

Seeds are H-accurate to O(epsilon^3): the quadratic part of H vanishes
identically on the unstable eigendirection, so no energy correction is
needed at the defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable

from .integrate import (
    CrossingRecord,
    NonFiniteState,
    Segment,
    StepControl,
    StepSizeUnderflow,
    Trajectory,
    _drive,
    integrate,
)
from .spectral import classify, unstable_eigenpair
from .system import NonlinearitySpec, Params, State, eval_f, reversal

MISS_CERTIFY = 1e-7
RECONSTRUCT_GATE = 1e-8


class Sigma(IntEnum):
    """Which side of the origin the shot leaves on (sign of the seed)."""

    PLUS = 1
    MINUS = -1


class Outcome(IntEnum):
    CROSSED = 0  # collected k_max crossings
    ESCAPED = 1  # left the ball of radius r_max
    TIMED_OUT = 2  # reached t_max
    INTEGRATOR_FAILED = 3


@dataclass(frozen=True)
class ShotConfig:
    """Settings for one unstable-manifold shot."""

    epsilon: float = 1e-7
    sigma: Sigma = Sigma.PLUS
    t_max: float = 200.0
    r_max: float = 10.0
    k_max: int = 8
    ctrl: StepControl = StepControl()

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon <= 1e-3):
            raise ValueError(f"epsilon must lie in (0, 1e-3], got {self.epsilon!r}")
        if not (self.t_max > 0.0 and self.r_max > 0.0):
            raise ValueError("t_max and r_max must be positive")
        if not (isinstance(self.k_max, int) and self.k_max >= 1):
            raise ValueError(f"k_max must be an integer >= 1, got {self.k_max!r}")
        object.__setattr__(self, "sigma", Sigma(self.sigma))


@dataclass(frozen=True)
class MissProfile:
    """Crossings recorded by one shot, plus how the shot ended."""

    params: Params
    sigma: Sigma
    crossings: tuple[CrossingRecord, ...]
    outcome: Outcome

    def miss_at(self, k: int) -> float | None:
        """v at the k-th crossing, or None if fewer than k were seen."""
        if k < 1:
            raise ValueError(f"crossing index must be >= 1, got {k}")
        if len(self.crossings) < k:
            return None
        return self.crossings[k - 1].s.v


@dataclass(frozen=True)
class LocusPoint:
    """A certified homoclinic parameter point found by root refinement."""

    a_star: float
    b: float
    sigma: Sigma
    k: int
    miss_residual: float
    lam: float


class BracketInvalid(ValueError):
    """Endpoint misses are absent or do not change sign."""


class CrossingIndexJumped(RuntimeError):
    """The k-th crossing vanished inside the bracket; split and retry."""

    def __init__(self, a_lo: float, a_hi: float, a_mid: float):
        super().__init__(
            f"crossing count changed inside [{a_lo!r}, {a_hi!r}] at a={a_mid!r}"
        )
        self.a_lo = a_lo
        self.a_hi = a_hi
        self.a_mid = a_mid


class ReconstructionRefused(ValueError):
    """The shot does not certify a symmetric intersection."""


def seed_unstable(p: Params, cfg: ShotConfig) -> State:
    """sigma * epsilon * (unit unstable eigenvector)."""
    _, e = unstable_eigenpair(p)
    s = float(cfg.sigma.value) * cfg.epsilon
    return State(s * e.u, s * e.v, s * e.p_u, s * e.p_v)


_OUTCOME_BY_REASON = {
    "budget": Outcome.CROSSED,
    "radius": Outcome.ESCAPED,
    "t_end": Outcome.TIMED_OUT,
}


def shoot(p: Params, cfg: ShotConfig) -> MissProfile:
    """Integrate one seed until t_max, escape, or k_max crossings."""
    seed = seed_unstable(p, cfg)
    try:
        tr, reason = _drive(
            p,
            seed,
            0.0,
            cfg.t_max,
            cfg.ctrl,
            store_nodes=False,
            store_dense=False,
            detect=True,
            r_max=cfg.r_max,
            max_events=cfg.k_max,
        )
    except (StepSizeUnderflow, NonFiniteState) as err:
        return MissProfile(p, cfg.sigma, tuple(err.events), Outcome.INTEGRATOR_FAILED)
    return MissProfile(p, cfg.sigma, tuple(tr.events), _OUTCOME_BY_REASON[reason])


def shot_trajectory(p: Params, cfg: ShotConfig) -> tuple[Trajectory, Outcome]:
    """One shot keeping the node path; integrator failures propagate."""
    seed = seed_unstable(p, cfg)
    tr, reason = _drive(
        p,
        seed,
        0.0,
        cfg.t_max,
        cfg.ctrl,
        store_nodes=True,
        store_dense=False,
        detect=True,
        r_max=cfg.r_max,
        max_events=cfg.k_max,
    )
    return tr, _OUTCOME_BY_REASON[reason]


def miss(p: Params, cfg: ShotConfig, k: int) -> float | None:
    """Signed v at the k-th section crossing of a fresh shot, or None."""
    return shoot(p, cfg).miss_at(k)


def refine_root(
    nonlinearity: NonlinearitySpec,
    b: float,
    a_lo: float,
    a_hi: float,
    cfg: ShotConfig,
    k: int,
) -> LocusPoint:
    """Bisect the miss function in a down to a bracket of width 1e-10.

    Both endpoints must have a k-th crossing with opposite-sign v.  If the
    crossing disappears at an interior point the bracket straddles a
    discontinuity and CrossingIndexJumped asks the caller to split it.
    The returned point records |miss| from an independent shot at a_star;
    callers decide whether that certifies (see MISS_CERTIFY).
    """
    if not (a_lo < a_hi):
        raise BracketInvalid(f"need a_lo < a_hi, got [{a_lo!r}, {a_hi!r}]")
    m_lo = miss(Params(a_lo, b, nonlinearity), cfg, k)
    m_hi = miss(Params(a_hi, b, nonlinearity), cfg, k)
    if m_lo is None or m_hi is None:
        raise BracketInvalid(f"miss absent at a bracket endpoint of [{a_lo!r}, {a_hi!r}]")
    if m_lo == 0.0:
        lo = hi = a_lo
    elif m_hi == 0.0:
        lo = hi = a_hi
    elif (m_lo < 0.0) == (m_hi < 0.0):
        raise BracketInvalid(
            f"miss has equal signs {m_lo!r}, {m_hi!r} on [{a_lo!r}, {a_hi!r}]"
        )
    else:
        lo, hi = a_lo, a_hi
        neg_lo = m_lo < 0.0
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            m_mid = miss(Params(mid, b, nonlinearity), cfg, k)
            if m_mid is None:
                raise CrossingIndexJumped(a_lo, a_hi, mid)
            if m_mid == 0.0:
                lo = hi = mid
                break
            if (m_mid < 0.0) == neg_lo:
                lo = mid
            else:
                hi = mid
    a_star = 0.5 * (lo + hi)
    m_star = miss(Params(a_star, b, nonlinearity), cfg, k)
    if m_star is None:
        raise CrossingIndexJumped(a_lo, a_hi, a_star)
    spec = classify(Params(a_star, b, nonlinearity))
    return LocusPoint(a_star, b, cfg.sigma, k, abs(m_star), spec.lam)


def _scale_segment(seg: Segment, theta: float) -> Segment:
    """Restrict a segment to [t0, t0 + theta * h] as a new unit segment."""
    t0, h, *comps = seg
    th2 = theta * theta
    pows = (1.0, theta, th2, th2 * theta, th2 * th2)
    new = tuple(
        (c[0], c[1] * pows[1], c[2] * pows[2], c[3] * pows[3], c[4] * pows[4])
        for c in comps
    )
    return (t0, theta * h, new[0], new[1], new[2], new[3])


def _mirror_segment(seg: Segment, t_star: float) -> Segment:
    """Q-image of a segment traversed in reverse, anchored after t_star."""
    t0, h, cu, cv, cw, cz = seg
    out = []
    for c, flip in ((cu, 1.0), (cv, -1.0), (cw, -1.0), (cz, 1.0)):
        c0, c1, c2, c3, c4 = c
        # substitute theta -> 1 - theta
        d0 = c0 + c1 + c2 + c3 + c4
        d1 = -(c1 + 2.0 * c2 + 3.0 * c3 + 4.0 * c4)
        d2 = c2 + 3.0 * c3 + 6.0 * c4
        d3 = -(c3 + 4.0 * c4)
        d4 = c4
        out.append((flip * d0, flip * d1, flip * d2, flip * d3, flip * d4))
    return (t_star + (t_star - (t0 + h)), h, out[0], out[1], out[2], out[3])


def reconstruct_orbit(p: Params, cfg: ShotConfig, k: int) -> Trajectory:
    """Homoclinic orbit through the k-th crossing: forward half plus Q-image.

    Refused unless the k-th crossing exists and satisfies |v| <= 1e-8.
    The result spans [0, 2 t_star] with the symmetric intersection at the
    midpoint; both endpoints have norm epsilon by construction.
    """
    seed = seed_unstable(p, cfg)
    try:
        tr, reason = _drive(
            p,
            seed,
            0.0,
            cfg.t_max,
            cfg.ctrl,
            store_nodes=True,
            store_dense=True,
            detect=True,
            r_max=cfg.r_max,
            max_events=k,
        )
    except (StepSizeUnderflow, NonFiniteState) as err:
        raise ReconstructionRefused(f"integration failed before crossing {k}: {err}") from err
    if len(tr.events) < k:
        raise ReconstructionRefused(
            f"only {len(tr.events)} crossings before outcome {reason!r}, needed {k}"
        )
    ev = tr.events[k - 1]
    if abs(ev.s.v) > RECONSTRUCT_GATE:
        raise ReconstructionRefused(
            f"|miss| = {abs(ev.s.v):.3e} at crossing {k} exceeds the gate {RECONSTRUCT_GATE:g}"
        )
    t_star = ev.t

    ts: list[float] = []
    states: list[State] = []
    for i, tt in enumerate(tr.ts):
        if tt >= t_star:
            break
        ts.append(tt)
        states.append(tr.states[i])
    n_keep = len(ts)
    segs: list[Segment] = list(tr.segs[: max(0, n_keep - 1)])
    last_seg = tr.segs[n_keep - 1]
    segs.append(_scale_segment(last_seg, (t_star - last_seg[0]) / last_seg[1]))
    ts.append(t_star)
    states.append(ev.s)

    full_ts = ts + [t_star + (t_star - tt) for tt in reversed(ts[:-1])]
    full_states = states + [reversal(s) for s in reversed(states[:-1])]
    full_segs = segs + [_mirror_segment(s, t_star) for s in reversed(segs)]
    return Trajectory(p, full_ts, full_states, full_segs, list(tr.events[:k]))


def verify_reversibility(
    p: Params, s: State, t: float, ctrl: StepControl | None = None
) -> float:
    """|| psi_t(Q s) - Q(psi_{-t}(s)) ||, the flow-level conjugacy defect."""
    fwd = integrate(reversal(s), p, (0.0, t), ctrl).states[-1]
    bwd = integrate(s, p, (0.0, -t), ctrl).states[-1]
    qb = reversal(bwd)
    return math.sqrt(
        (fwd.u - qb.u) ** 2
        + (fwd.v - qb.v) ** 2
        + (fwd.p_u - qb.p_u) ** 2
        + (fwd.p_v - qb.p_v) ** 2
    )


# ---------------------------------------------------------------------------
# closed-form reference solutions


@dataclass(frozen=True)
class KnownSolution:
    """An explicit homoclinic solution u(x) with its first four derivatives.

    ``alpha`` is the argument scaling of the profile, params_star the
    parameter point at which the profile solves the model exactly, and
    ``decay`` the saddle rate lambda at params_star (the tail exponent).
    """

    name: str
    params_star: Params
    alpha: float
    decay: float
    u: Callable[[float], float]
    du1: Callable[[float], float]
    du2: Callable[[float], float]
    du3: Callable[[float], float]
    du4: Callable[[float], float]

    def phase_state(self, x: float) -> State:
        """Embed the profile into phase space at position x."""
        a = self.params_star.a
        return State(
            self.u(x), self.du1(x), -self.du3(x) - a * self.du1(x), self.du2(x)
        )


def _make_sech() -> KnownSolution:
    alpha = 2.0 ** -0.25
    a_star = math.sqrt(2.0) / 2.0
    spec = NonlinearitySpec(((3, 11.0), (5, -12.0)))

    def u(x: float) -> float:
        return 1.0 / math.cosh(alpha * x)

    def du1(x: float) -> float:
        s = 1.0 / math.cosh(alpha * x)
        return -alpha * s * math.tanh(alpha * x)

    def du2(x: float) -> float:
        s = 1.0 / math.cosh(alpha * x)
        return alpha * alpha * (s - 2.0 * s ** 3)

    def du3(x: float) -> float:
        s = 1.0 / math.cosh(alpha * x)
        return -(alpha ** 3) * s * math.tanh(alpha * x) * (1.0 - 6.0 * s * s)

    def du4(x: float) -> float:
        s = 1.0 / math.cosh(alpha * x)
        return alpha ** 4 * (s - 20.0 * s ** 3 + 24.0 * s ** 5)

    return KnownSolution(
        "sech", Params(a_star, 1.0, spec), alpha, alpha, u, du1, du2, du3, du4
    )


def _make_sech2() -> KnownSolution:
    spec = NonlinearitySpec(((2, 65.0 / 2.0), (3, -40.0)))

    def u(x: float) -> float:
        s = 1.0 / math.cosh(x)
        return s * s

    def du1(x: float) -> float:
        return -2.0 * u(x) * math.tanh(x)

    def du2(x: float) -> float:
        uu = u(x)
        return 4.0 * uu - 6.0 * uu * uu

    def du3(x: float) -> float:
        uu = u(x)
        return math.tanh(x) * uu * (24.0 * uu - 8.0)

    def du4(x: float) -> float:
        uu = u(x)
        return 16.0 * uu - 120.0 * uu * uu + 120.0 * uu ** 3

    return KnownSolution(
        "sech2", Params(-15.0 / 4.0, 3.0, spec), 1.0, 2.0, u, du1, du2, du3, du4
    )


def known_solutions() -> dict[str, KnownSolution]:
    """The two profiles with exactly known homoclinic parameter values."""
    return {"sech": _make_sech(), "sech2": _make_sech2()}


def closed_form_residual(ks: KnownSolution, xs) -> float:
    """max |u'''' + a u'' - u + f(u, b)| over the sample positions."""
    p = ks.params_star
    worst = 0.0
    for x in xs:
        uu = ks.u(x)
        r = ks.du4(x) + p.a * ks.du2(x) - uu + eval_f(p.nonlinearity, uu, p.b)
        if abs(r) > worst:
            worst = abs(r)
    return worst
