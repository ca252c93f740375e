"""Spectrum of the linearization at the origin.

Linearizing u'''' + a u'' - u + f(u, b) = 0 at u = 0 gives
u'''' + a u'' - c u = 0 with c = 1 - df/du(0, b); substituting e^(lambda x)
yields the characteristic quartic lambda^4 + a lambda^2 - c = 0, a
quadratic in mu = lambda^2.  Under the degree >= 2 rule for nonlinearity
terms, c = 1 for every parameter point and the origin is always a
saddle-center: one real pair +-lambda and one imaginary pair +-i omega.

The quadratic is solved in closed form with the sign-stable variant (no
cancellation for either sign of a), never with an iterative eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .system import Params, State


class EquilibriumKind(Enum):
    SADDLE_CENTER = "saddle_center"
    SADDLE_SADDLE = "saddle_saddle"
    CENTER_CENTER = "center_center"
    DEGENERATE = "degenerate"


class NotSaddleCenterError(ValueError):
    """Raised when an unstable eigenpair is requested off the saddle-center regime."""


@dataclass(frozen=True)
class EquilibriumSpectrum:
    """Classification plus the saddle-center data (None off that regime)."""

    kind: EquilibriumKind
    lam: float | None
    omega: float | None
    unstable_eigvec: State | None


def classify_coefficients(a: float, c: float) -> EquilibriumSpectrum:
    """Classify the quartic lambda^4 + a lambda^2 - c = 0 by its mu-root signs.

    Complex mu pairs (only possible for c < -a^2/4, hence c < 0) carry no
    real saddle-center data and are reported as DEGENERATE alongside the
    zero-root case c = 0.  Supported nonlinearities always give c = 1.
    """
    disc = a * a + 4.0 * c
    if disc < 0.0:
        return EquilibriumSpectrum(EquilibriumKind.DEGENERATE, None, None, None)
    if c == 0.0:
        return EquilibriumSpectrum(EquilibriumKind.DEGENERATE, None, None, None)
    sq = math.sqrt(disc)
    # Pick the root that avoids cancellation, recover the other from the
    # product mu_plus * mu_minus = -c.
    if a >= 0.0:
        mu_minus = 0.5 * (-a - sq)
        mu_plus = -c / mu_minus
    else:
        mu_plus = 0.5 * (-a + sq)
        mu_minus = -c / mu_plus
    if mu_plus > 0.0 > mu_minus:
        lam = math.sqrt(mu_plus)
        omega = math.sqrt(-mu_minus)
        return EquilibriumSpectrum(
            EquilibriumKind.SADDLE_CENTER, lam, omega, _unit_unstable_eigvec(lam, c)
        )
    if mu_plus > 0.0 and mu_minus > 0.0:
        return EquilibriumSpectrum(EquilibriumKind.SADDLE_SADDLE, None, None, None)
    return EquilibriumSpectrum(EquilibriumKind.CENTER_CENTER, None, None, None)


def _unit_unstable_eigvec(lam: float, c: float) -> State:
    # (1, lam, -c/lam, lam^2) spans ker(J - lam I); normalized with u > 0.
    e = (1.0, lam, -c / lam, lam * lam)
    n = math.sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + e[3] * e[3])
    return State(e[0] / n, e[1] / n, e[2] / n, e[3] / n)


def linearization_constant(p: Params) -> float:
    """c = 1 - df/du(0, b), which is 1 for all supported nonlinearities."""
    return 1.0 - p.b * p.nonlinearity.linear_coefficient()


def classify(p: Params) -> EquilibriumSpectrum:
    """Spectrum of the origin for the given parameters."""
    return classify_coefficients(p.a, linearization_constant(p))


def unstable_eigenpair(p: Params) -> tuple[float, State]:
    """(lambda, unit eigenvector) of the positive real eigenvalue.

    The eigenvector is normalized to unit Euclidean length with positive
    u-component, the seeding convention for unstable-manifold shots.
    """
    spec = classify(p)
    if spec.kind is not EquilibriumKind.SADDLE_CENTER:
        raise NotSaddleCenterError(
            f"origin is {spec.kind.value} at a={p.a!r}, b={p.b!r}; no unstable eigenpair"
        )
    assert spec.lam is not None and spec.unstable_eigvec is not None
    return spec.lam, spec.unstable_eigvec
