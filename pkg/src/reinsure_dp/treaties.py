"""Parametric retained-loss families and budget-feasible parameter ranges.

A treaty maps a claim y >= 0 to the retained part f(y); the ceded part
y - f(y) is what the reinsurer prices. Admissible treaties satisfy f(0) = 0
and 0 <= f(y2) - f(y1) <= y2 - y1, which every constructor here produces by
shape; `is_admissible` probes that numerically as the safety net for
user-supplied pieces.
"""

from __future__ import annotations

import numpy as np

from .distributions import DiscreteDistribution
from .errors import InvalidTreaty, NegativeClaim, UnsupportedFamily
from .premiums import PremiumSpec, premium

_FAMILIES = (
    "identity",
    "full-cession",
    "proportional",
    "stop-loss",
    "layer",
    "piecewise-linear",
    "custom",
)


class Treaty:
    """One retained-loss function; construct through make_treaty."""

    __slots__ = ("family", "params", "_fn")

    def __init__(self, family: str, params: dict):
        self.family = family
        self.params = params
        self._fn = params.get("fn")

    def retained(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if np.any(y < -1e-12):
            raise NegativeClaim("claims must be nonnegative")
        y = np.maximum(y, 0.0)
        fam = self.family
        if fam == "identity":
            return y.copy()
        if fam == "full-cession":
            return np.zeros_like(y)
        if fam == "proportional":
            return self.params["c"] * y
        if fam == "stop-loss":
            return np.minimum(y, self.params["a"])
        if fam == "layer":
            a = self.params["a"]
            upper = a + self.params["w"]
            return np.maximum(np.minimum(a, y), y - upper + a)
        if fam == "piecewise-linear":
            knots = np.asarray(self.params["knots"], dtype=np.float64)
            slopes = np.asarray(self.params["slopes"], dtype=np.float64)
            widths = np.diff(np.concatenate([knots, [np.inf]]))
            segs = np.clip(y[..., None] - knots, 0.0, widths)
            return segs @ slopes
        return np.asarray(self._fn(y), dtype=np.float64)

    def ceded(self, y) -> np.ndarray:
        return np.asarray(y, dtype=np.float64) - self.retained(y)

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items() if k != "fn")
        return f"Treaty({self.family}, {inner})"


def make_treaty(family: str, params: dict) -> Treaty:
    if family not in _FAMILIES:
        raise UnsupportedFamily(f"unknown treaty family {family!r}")
    if family == "proportional":
        c = float(params["c"])
        if not (0.0 <= c <= 1.0):
            raise InvalidTreaty("proportional share must lie in [0, 1]")
        return Treaty(family, {"c": c})
    if family == "stop-loss":
        a = float(params["a"])
        if a < 0.0:
            raise InvalidTreaty("stop-loss retention must be >= 0")
        return Treaty(family, {"a": a})
    if family == "layer":
        a, w = float(params["a"]), float(params["w"])
        if a < 0.0 or w < 0.0:
            raise InvalidTreaty("layer needs deductible >= 0 and width >= 0")
        return Treaty(family, {"a": a, "w": w})
    if family == "piecewise-linear":
        knots = np.asarray(params["knots"], dtype=np.float64)
        slopes = np.asarray(params["slopes"], dtype=np.float64)
        if knots.ndim != 1 or knots.shape != slopes.shape or len(knots) == 0:
            raise InvalidTreaty("knots and slopes must be equal-length vectors")
        if knots[0] < 0.0 or np.any(np.diff(knots) <= 0.0) or not np.all(np.isfinite(slopes)):
            raise InvalidTreaty("knots must be increasing and nonnegative, slopes finite")
        return Treaty(family, {"knots": [float(t) for t in knots], "slopes": [float(s) for s in slopes]})
    if family == "custom":
        if not callable(params.get("fn")):
            raise InvalidTreaty("custom treaty needs a callable fn")
        return Treaty(family, {"fn": params["fn"]})
    return Treaty(family, {})


def is_admissible(f: Treaty, probe_grid) -> bool:
    """Probe 0 <= f <= id and 1-Lipschitz monotonicity on a sorted grid."""
    t = np.asarray(probe_grid, dtype=np.float64)
    vals = f.retained(t)
    slack = 1e-12
    if np.any(vals < -slack) or np.any(vals > t + slack):
        return False
    if np.any(np.diff(vals) < -slack):
        return False
    return not np.any(np.diff(t - vals) < -slack)


def _survival_steps(pspec: PremiumSpec, dY: DiscreteDistribution):
    # g(S_Y(y)) between consecutive atoms, from each atom to the next
    g = pspec.handle()
    tail = 1.0 - np.cumsum(dY.probs)
    return np.asarray(g(np.clip(tail, 0.0, 1.0)), dtype=np.float64)


def premium_breakpoints(
    family: str,
    pspec: PremiumSpec,
    dY: DiscreteDistribution,
    upper: float | None = None,
):
    """Breakpoint table (params, premiums) of the treaty price as a function
    of the retention parameter.

    The price of a stop-loss or layer treaty is (1+theta) times the integral
    of g(S_Y) from the retention upward, so it is piecewise linear in the
    retention with kinks exactly at claim atoms; the table is exact and
    np.interp reproduces the price anywhere. Proportional cessions are linear
    by positive homogeneity. Premiums are decreasing along the table.
    """
    top = float(dY.values[-1])
    if family == "proportional":
        return np.array([0.0, 1.0]), np.array([premium(pspec, dY), 0.0])
    if family not in ("stop-loss", "layer"):
        raise UnsupportedFamily(f"no retention curve for family {family!r}")
    cut = top if family == "stop-loss" or upper is None else float(upper)
    pts = np.concatenate([[0.0], dY.values[(dY.values > 0.0) & (dY.values < cut)], [cut]])
    gs = _survival_steps(pspec, dY)
    idx = np.searchsorted(dY.values, pts[:-1], side="right")
    seg = np.diff(pts) * np.where(idx == 0, 1.0, gs[np.maximum(idx - 1, 0)])
    integral = np.concatenate([[0.0], np.cumsum(seg)])
    prems = (1.0 + pspec.theta) * (integral[-1] - integral)
    return pts, prems


def feasible_retention_range(
    family: str,
    pspec: PremiumSpec,
    dY: DiscreteDistribution,
    budget: float,
    upper: float | None = None,
):
    """Sub-interval of the retention parameter whose premium fits the budget.

    Covers the one-parameter families whose premium is continuous and
    decreasing in the parameter. Returns (lo, hi); hi is the full-retention
    end, which is always feasible (zero premium).
    """
    if family not in ("stop-loss", "layer", "proportional"):
        raise UnsupportedFamily(f"no monotone retention parameter for {family!r}")
    budget = max(0.0, float(budget))
    params, prems = premium_breakpoints(family, pspec, dY, upper=upper)
    hi = float(params[-1])
    if prems[0] <= budget:
        return float(params[0]), hi
    j = int(np.searchsorted(-prems, -budget, side="left")) - 1
    j = min(max(j, 0), len(params) - 2)
    run = prems[j] - prems[j + 1]
    frac = 0.0 if run <= 0.0 else (prems[j] - budget) / run
    lo = float(params[j] + frac * (params[j + 1] - params[j]))
    return lo, hi
