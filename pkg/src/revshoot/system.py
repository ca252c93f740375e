"""Model definition for the fourth-order solitary-wave family.

The scalar equation u'''' + a u'' - u + f(u, b) = 0 is treated as a first
order system in the phase variables (u, v, p_u, p_v):

    u'   = v
    v'   = p_v
    p_u' = -u + f(u, b)
    p_v' = -p_u - a v

with conserved energy

    H = p_u v + p_v^2 / 2 + a v^2 / 2 + u^2 / 2 - F(u, b),

where F is the primitive of f in u with F(0, b) = 0.  The flow is
reversible: with Q(u, v, p_u, p_v) = (u, -v, -p_u, p_v) the vector field X
satisfies X(Q s) = -Q X(s), so Q conjugates the forward and backward flows.
The fixed-point set of Q is {v = p_u = 0}.

All operations here are pure float64 arithmetic with a fixed evaluation
order, so results are reproducible bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple


class State(NamedTuple):
    """Phase-space point (u, v, p_u, p_v)."""

    u: float
    v: float
    p_u: float
    p_v: float


ORIGIN = State(0.0, 0.0, 0.0, 0.0)


def _horner_raw(desc: tuple[float, ...], kmin: int, u: float) -> float:
    """Evaluate sum_k c_k u^k with dense descending coefficients.

    ``desc`` holds the coefficients of degrees kmax..kmin (descending,
    gaps filled with zeros); the common factor u^kmin is multiplied last.
    The loop order is part of the determinism contract: eval_f and the
    integrator inline the exact same sequence of operations.
    """
    acc = 0.0
    for c in desc:
        acc = acc * u + c
    pw = u
    for _ in range(kmin - 1):
        pw *= u
    return acc * pw


@dataclass(frozen=True)
class NonlinearitySpec:
    """Polynomial nonlinearity f(u, b) = b * sum_k p_k u^k, degrees >= 2.

    ``terms`` is an ordered tuple of (degree, coefficient) pairs with
    strictly increasing integer degrees.  An empty tuple means f == 0
    (the linear model), which is occasionally useful for calibration.
    """

    terms: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        terms = tuple((int(k), float(p)) for k, p in self.terms)
        object.__setattr__(self, "terms", terms)
        last = 1
        for k, p in terms:
            if k < 2:
                raise ValueError(f"nonlinearity degree {k} < 2 would shift the linearization")
            if k <= last:
                raise ValueError("nonlinearity degrees must be strictly increasing")
            last = k

    @cached_property
    def _f_data(self) -> tuple[tuple[float, ...], int]:
        if not self.terms:
            return (0.0,), 2
        kmin = self.terms[0][0]
        kmax = self.terms[-1][0]
        dense = [0.0] * (kmax - kmin + 1)
        for k, p in self.terms:
            dense[k - kmin] = p
        return tuple(reversed(dense)), kmin

    @cached_property
    def _big_f_data(self) -> tuple[tuple[float, ...], int]:
        # primitive: p_k u^k integrates to (p_k / (k + 1)) u^(k+1)
        if not self.terms:
            return (0.0,), 2
        kmin = self.terms[0][0] + 1
        kmax = self.terms[-1][0] + 1
        dense = [0.0] * (kmax - kmin + 1)
        for k, p in self.terms:
            dense[k + 1 - kmin] = p / (k + 1)
        return tuple(reversed(dense)), kmin

    def linear_coefficient(self) -> float:
        """Coefficient of u^1, always 0.0 under the degree >= 2 rule."""
        return 0.0

    def to_json_dict(self) -> dict:
        return {"terms": [{"degree": k, "coeff": p} for k, p in self.terms]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "NonlinearitySpec":
        if set(d) != {"terms"}:
            raise ValueError(f"nonlinearity spec keys must be exactly {{'terms'}}, got {sorted(d)}")
        terms = []
        for item in d["terms"]:
            if set(item) != {"degree", "coeff"}:
                raise ValueError(f"nonlinearity term keys must be {{'degree', 'coeff'}}, got {sorted(item)}")
            terms.append((item["degree"], item["coeff"]))
        return cls(tuple(terms))

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())


@dataclass(frozen=True)
class Params:
    """Parameter point: linear coefficient a, strength b, and the nonlinearity."""

    a: float
    b: float
    nonlinearity: NonlinearitySpec

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        for name in ("a", "b"):
            x = getattr(self, name)
            if x != x or x in (float("inf"), float("-inf")):
                raise ValueError(f"parameter {name} must be finite, got {x!r}")


def eval_f(spec: NonlinearitySpec, u: float, b: float) -> float:
    """f(u, b) = b * sum_k p_k u^k."""
    desc, kmin = spec._f_data
    return b * _horner_raw(desc, kmin, u)


def eval_F(spec: NonlinearitySpec, u: float, b: float) -> float:
    """Primitive of f in u, normalized so F(0, b) = 0."""
    desc, kmin = spec._big_f_data
    return b * _horner_raw(desc, kmin, u)


def vector_field(s: State, p: Params) -> State:
    """Right-hand side of the first-order system at s."""
    fu = eval_f(p.nonlinearity, s.u, p.b)
    return State(s.v, s.p_v, -s.u + fu, -s.p_u - p.a * s.v)


def hamiltonian(s: State, p: Params) -> float:
    """Conserved energy H(s)."""
    return (
        s.p_u * s.v
        + 0.5 * s.p_v * s.p_v
        + 0.5 * p.a * s.v * s.v
        + 0.5 * s.u * s.u
        - eval_F(p.nonlinearity, s.u, p.b)
    )


def reversal(s: State) -> State:
    """The reversing involution Q: flip the signs of v and p_u."""
    return State(s.u, -s.v, -s.p_u, s.p_v)


def chi_residual(s: State) -> tuple[float, float]:
    """Distance components (v, p_u) from the symmetry section {v = p_u = 0}."""
    return (s.v, s.p_u)
