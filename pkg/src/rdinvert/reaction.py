"""Nodal reaction curves f(u) with an explicit evaluation domain.

The curves are piecewise linear on a knot set spanning an interval J.
Evaluation outside J is the interesting case: reconstruction schemes must
never silently extrapolate, so the curve either clamps to its endpoint
values while counting the excursions, or raises.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, RangeViolationError


class ClampPolicy(enum.Enum):
    CLAMP_TO_ENDPOINTS = "clamp"
    ERROR_OUTSIDE = "error"


@dataclass
class ReactionCurve:
    """Piecewise-linear f(u) on knots spanning J = [j_lo, j_hi].

    ``clamp_counter`` is a mutable diagnostic: the number of evaluation
    points that fell outside J under the clamping policy.  Share curves
    across threads read-only and give each run its own copy.
    """

    knots: np.ndarray
    nodal_values: np.ndarray
    clamp_policy: ClampPolicy = ClampPolicy.CLAMP_TO_ENDPOINTS
    clamp_counter: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        self.knots = np.asarray(self.knots, dtype=float)
        self.nodal_values = np.asarray(self.nodal_values, dtype=float)
        if self.knots.ndim != 1 or self.knots.size < 2:
            raise ConfigurationError("a reaction curve needs at least two knots")
        if np.any(np.diff(self.knots) <= 0.0):
            raise ConfigurationError("knots must be strictly increasing")
        if self.nodal_values.shape != self.knots.shape:
            raise ConfigurationError("nodal values must match the knot set")
        if not np.all(np.isfinite(self.knots)) or not np.all(np.isfinite(self.nodal_values)):
            raise ConfigurationError("knots and nodal values must be finite")

    @property
    def j_lo(self) -> float:
        return float(self.knots[0])

    @property
    def j_hi(self) -> float:
        return float(self.knots[-1])

    @classmethod
    def from_function(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        j_lo: float,
        j_hi: float,
        n_knots: int = 201,
        clamp_policy: ClampPolicy = ClampPolicy.CLAMP_TO_ENDPOINTS,
    ) -> "ReactionCurve":
        if not j_lo < j_hi:
            raise ConfigurationError(f"empty domain [{j_lo}, {j_hi}]")
        knots = np.linspace(j_lo, j_hi, n_knots)
        vals = np.broadcast_to(np.asarray(fn(knots), dtype=float), knots.shape).copy()
        return cls(knots, vals, clamp_policy)

    @classmethod
    def zero(
        cls,
        j_lo: float,
        j_hi: float,
        n_knots: int = 201,
        clamp_policy: ClampPolicy = ClampPolicy.CLAMP_TO_ENDPOINTS,
    ) -> "ReactionCurve":
        return cls.from_function(lambda u: np.zeros_like(u), j_lo, j_hi, n_knots, clamp_policy)

    def eval(self, u):
        """Evaluate at scalar or array ``u``, applying the clamp policy."""
        arr = np.asarray(u, dtype=float)
        below = arr < self.j_lo
        above = arr > self.j_hi
        n_out = int(np.count_nonzero(below) + np.count_nonzero(above))
        if n_out:
            if self.clamp_policy is ClampPolicy.ERROR_OUTSIDE:
                bad = arr[below | above]
                raise RangeViolationError(float(np.ravel(bad)[0]), self.j_lo, self.j_hi)
            self.clamp_counter += n_out
        out = np.interp(arr, self.knots, self.nodal_values)
        if np.isscalar(u) or arr.ndim == 0:
            return float(out)
        return out

    def with_values(self, nodal_values: np.ndarray) -> "ReactionCurve":
        """Same knots and policy, new values, fresh clamp counter."""
        return ReactionCurve(self.knots.copy(), np.asarray(nodal_values, dtype=float).copy(), self.clamp_policy)

    def copy(self) -> "ReactionCurve":
        return self.with_values(self.nodal_values)

    def resampled(self, j_lo: float, j_hi: float, n_knots: int) -> "ReactionCurve":
        """Re-grid onto a fresh uniform knot set (endpoint extension outside J)."""
        knots = np.linspace(j_lo, j_hi, n_knots)
        return ReactionCurve(knots, np.interp(knots, self.knots, self.nodal_values), self.clamp_policy)


def sup_distance(a: ReactionCurve, b: ReactionCurve) -> float:
    """Sup-norm distance of two curves sharing a knot set."""
    if a.knots.shape != b.knots.shape or not np.array_equal(a.knots, b.knots):
        raise ConfigurationError("curves must share a knot set")
    return float(np.max(np.abs(a.nodal_values - b.nodal_values)))
