"""Distance functions applied to pairwise score differences.

A distance function ``D`` maps the score difference ``x = s_v - s_u`` of a
ranking pair to a misordering error. Three variants are provided:

* ``PiecewiseStep(delta)`` -- linear ramp from 0 to 1 on ``[-delta, +delta]``,
  hard-clamped outside. Continuous everywhere, with value 1/2 at 0.
* ``Sigmoid(lam)`` -- ``1 / (1 + exp(-lam * x))``, a smooth step.
* ``CeSigmoid(lam)`` -- ``-log(1 - S(x)) / lam`` with ``S`` the sigmoid above;
  a softplus-shaped error whose derivative w.r.t. ``x`` is exactly ``S(x)``.

All variants are monotone non-decreasing. ``PiecewiseStep`` and ``Sigmoid``
are bounded in [0, 1] and double as rank-position surrogates; ``CeSigmoid``
is unbounded above and uses its underlying sigmoid for rank counting.

Numerical policy: the sigmoid is evaluated with the branch-on-sign form, so
extreme arguments saturate to 0/1 without overflow. For ``CeSigmoid``,
``1 - S(x)`` is floored at ``LOG_CLAMP_FLOOR`` (1e-30) before taking the log,
which caps the value at a large finite number instead of returning infinity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError

#: Floor applied to ``1 - S(x)`` before the log in the CE-sigmoid distance.
LOG_CLAMP_FLOOR = 1e-30

#: Default slope parameters.
DEFAULT_DELTA = 0.5
DEFAULT_LAMBDA = 8.0


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, elementwise on ``z``."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _eval(fn, x):
    """Apply an array function to ``x``, returning a float for scalar input."""
    arr = np.asarray(x, dtype=np.float64)
    res = fn(np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(res[0])
    return res.reshape(arr.shape)


def piecewise_step(x, delta: float = DEFAULT_DELTA):
    """Ramp comparator: 0 below ``-delta``, ``x/(2 delta) + 1/2`` inside
    ``[-delta, delta]``, 1 above ``delta``.

    Raises ValueError for non-finite ``x`` or ``delta <= 0``.
    """
    if not np.isfinite(delta) or delta <= 0:
        raise ValueError(f"delta must be a positive finite real, got {delta}")
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("piecewise_step requires finite input")
    return _eval(lambda a: np.clip(a / (2.0 * delta) + 0.5, 0.0, 1.0), arr)


def sigmoid_distance(x, lam: float = DEFAULT_LAMBDA):
    """Smooth comparator ``1 / (1 + exp(-lam * x))``.

    Saturates to exactly 0.0 / 1.0 for extreme arguments. Raises ValueError
    for ``lam <= 0``.
    """
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be a positive finite real, got {lam}")
    return _eval(lambda a: _stable_sigmoid(lam * a), x)


def ce_sigmoid_distance(x, lam: float = DEFAULT_LAMBDA):
    """Cross-entropy-of-sigmoid error and its derivative.

    Returns ``(value, d_du)`` where ``value = -log(1 - S(x)) / lam`` and
    ``d_du`` is the derivative with respect to the *first* score of the pair
    (the one subtracted inside ``x``), which is ``-S(x)`` in closed form.

    ``-log(1 - S(x))`` equals ``softplus(lam * x)`` exactly, and the
    softplus form (``max(z, 0) + log1p(exp(-|z|))``) keeps full float
    precision in both tails where the sigmoid itself saturates. The value
    is capped at ``-log(LOG_CLAMP_FLOOR) / lam`` — the same ceiling as
    flooring the complement probability at ``LOG_CLAMP_FLOOR`` before the
    log. Raises ValueError for ``lam <= 0``.
    """
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be a positive finite real, got {lam}")
    cap = -np.log(LOG_CLAMP_FLOOR)
    s = _eval(lambda a: _stable_sigmoid(lam * a), x)

    def _softplus_capped(a):
        z = lam * a
        softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
        return np.minimum(softplus, cap) / lam

    value = _eval(_softplus_capped, x)
    return value, -s


@dataclass(frozen=True)
class PiecewiseStep:
    """Ramp comparator with half-width ``delta``."""

    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta <= 0:
            raise ValueError(f"delta must be a positive finite real, got {self.delta}")

    def value(self, x):
        return piecewise_step(x, self.delta)

    def grad(self, x):
        """Derivative w.r.t. ``x``: ``1/(2 delta)`` inside the ramp, else 0."""
        return _eval(
            lambda a: np.where(np.abs(a) <= self.delta, 1.0 / (2.0 * self.delta), 0.0), x
        )

    def rank_comparator(self, x):
        return self.value(x)


@dataclass(frozen=True)
class Sigmoid:
    """Smooth comparator with slope ``lam`` at the origin."""

    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise ValueError(f"lambda must be a positive finite real, got {self.lam}")

    def value(self, x):
        return sigmoid_distance(x, self.lam)

    def grad(self, x):
        """Derivative w.r.t. ``x``: ``lam * S(x) * (1 - S(x))``.

        Computed as ``lam * S(x) * S(-x)`` so the tail keeps its magnitude
        instead of rounding to zero once ``S(x)`` saturates to 1.
        """
        return self.lam * sigmoid_distance(x, self.lam) * sigmoid_distance(-x, self.lam)

    def rank_comparator(self, x):
        return self.value(x)


@dataclass(frozen=True)
class CeSigmoid:
    """Cross-entropy-of-sigmoid error with slope ``lam``.

    Unbounded above; its derivative w.r.t. the pair difference is the plain
    sigmoid, which is what makes a detached rank-sum normalization reproduce
    the error-driven update exactly.
    """

    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise ValueError(f"lambda must be a positive finite real, got {self.lam}")

    def value(self, x):
        return ce_sigmoid_distance(x, self.lam)[0]

    def grad(self, x):
        """Derivative w.r.t. ``x``: exactly ``S(x)``."""
        return sigmoid_distance(x, self.lam)

    def rank_comparator(self, x):
        """Rank positions are counted with the bounded sigmoid, not the
        unbounded CE value."""
        return sigmoid_distance(x, self.lam)


DistanceFunction = Union[PiecewiseStep, Sigmoid, CeSigmoid]

_VARIANT_NAMES = {
    PiecewiseStep: "piecewise_step",
    Sigmoid: "sigmoid",
    CeSigmoid: "ce_sigmoid",
}


def distance_from_dict(obj: dict) -> DistanceFunction:
    """Build a distance function from its config form.

    Accepted shapes: ``{"type": "piecewise_step", "delta": 0.5}``,
    ``{"type": "sigmoid", "lambda": 8.0}``, ``{"type": "ce_sigmoid",
    "lambda": 8.0}``. Missing slope fields fall back to the defaults.
    """
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError(f"distance config must be a dict with a 'type' key, got {obj!r}")
    kind = obj["type"]
    extra = set(obj) - {"type", "delta", "lambda"}
    if extra:
        raise ConfigError(f"unknown distance config fields: {sorted(extra)}")
    try:
        if kind == "piecewise_step":
            return PiecewiseStep(float(obj.get("delta", DEFAULT_DELTA)))
        if kind == "sigmoid":
            return Sigmoid(float(obj.get("lambda", DEFAULT_LAMBDA)))
        if kind == "ce_sigmoid":
            return CeSigmoid(float(obj.get("lambda", DEFAULT_LAMBDA)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad distance config {obj!r}: {exc}") from exc
    raise ConfigError(f"unknown distance type {kind!r}")


def distance_to_dict(d: DistanceFunction) -> dict:
    """Inverse of :func:`distance_from_dict`."""
    name = _VARIANT_NAMES[type(d)]
    if isinstance(d, PiecewiseStep):
        return {"type": name, "delta": d.delta}
    return {"type": name, "lambda": d.lam}
