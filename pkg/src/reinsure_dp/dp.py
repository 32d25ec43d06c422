"""Gridded Bellman machinery for the dynamic reinsurance problem.

Value functions live on a fixed surplus grid as piecewise-linear decreasing
functions with explicit tail slopes. The one-period cost of a treaty f at
surplus x is rho(-X' + beta v(X')) where X' = x + Z - f(Y) - pi(f) is the
next surplus. Because -x' + beta v(x') is strictly decreasing in x' whenever
v is decreasing, sorting the cost atoms is the same as sorting next-surplus
atoms in reverse, and the risk-measure weights depend only on that ordering.
With deterministic premium income the ordering is claim-ascending for every
admissible treaty, so a single weight vector per stage prices all states and
all candidate treaties in one batch; the general case re-sorts per candidate.

Candidate search over one-parameter families runs a fixed three-level zoom:
scan an evenly spaced ladder over the feasible interval, then rescan inside
the bracketing cells. Every probe ladder is a pure function of the feasible
interval, and ties in the objective break toward the smaller parameter, so
reruns and equivalent reformulations of the objective select identical
parameters.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .distributions import DiscreteDistribution, ess_sup, independent_product
from .errors import (
    EnvelopeViolation,
    GridMismatch,
    InfeasiblePolicyRow,
    MaxIterations,
    MonotonicityViolation,
    UnsupportedFamily,
    ValidationError,
)
from .premiums import PremiumSpec, premium, treaty_premium
from .risk import RiskSpec, atom_weights, evaluate, is_coherent
from .treaties import (
    Treaty,
    feasible_retention_range,
    make_treaty,
    premium_breakpoints,
)

# tolerated upward wiggle of a computed value function between neighboring
# grid states; anything larger signals a resolution problem, not noise
_MONO_TOL = 1e-6
_ZOOM_LEVELS = 3
_SEARCH_FAMILIES = ("stop-loss", "layer", "proportional", "piecewise-linear")


class ValueFunction:
    """Decreasing piecewise-linear function with linear tails.

    Inside the grid, evaluation interpolates; outside, it continues with the
    stored tail slopes. Construction rejects value rows that increase by more
    than a small tolerance between neighboring states.
    """

    __slots__ = ("grid", "values", "slope_left", "slope_right")

    def __init__(self, grid, values, slope_left=0.0, slope_right=0.0):
        grid = np.ascontiguousarray(grid, dtype=np.float64)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if grid.ndim != 1 or grid.size < 2 or values.shape != grid.shape:
            raise ValidationError("grid and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(grid) <= 0.0):
            raise ValidationError("grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite")
        rise = float(np.max(np.diff(values)))
        if rise > _MONO_TOL:
            raise MonotonicityViolation(
                f"values increase by {rise:.3g} between neighboring states; "
                "refine the state grid or the candidate search"
            )
        self.grid = grid
        self.values = values
        self.slope_left = float(slope_left)
        self.slope_right = float(slope_right)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.interp(x, self.grid, self.values)
        g0, g1 = self.grid[0], self.grid[-1]
        below = x < g0
        if np.any(below):
            out = np.where(below, self.values[0] + self.slope_left * (x - g0), out)
        above = x > g1
        if np.any(above):
            out = np.where(above, self.values[-1] + self.slope_right * (x - g1), out)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StageData:
    """Per-stage model data: claim, premium income, risk measure, pricing."""

    dY: DiscreteDistribution
    dZ: DiscreteDistribution
    risk: RiskSpec
    premium: PremiumSpec
    beta: float
    budget_constrained: bool = True

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValidationError("discount factor must lie in (0, 1]")


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValidationError("grid bounds must be finite with lo < hi")
        if int(self.count) < 16:
            raise ValidationError("grid needs at least 16 points")
        object.__setattr__(self, "count", int(self.count))

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class SearchSpec:
    """Treaty family to optimize over, plus search resolution knobs.

    resolution: cells per zoom level (one-parameter families) or candidate
        count per coordinate (piecewise-linear).
    layer_upper: fixed upper edge of the ceded layer; required for the layer
        family, where the searched parameter is the lower edge.
    knots / sweeps: piecewise-linear family only.
    """

    family: str
    resolution: int = 64
    layer_upper: float | None = None
    knots: tuple[float, ...] | None = None
    sweeps: int = 3

    def __post_init__(self):
        if self.family not in _SEARCH_FAMILIES:
            raise UnsupportedFamily(f"cannot search over family {self.family!r}")
        if int(self.resolution) < 8:
            raise ValidationError("search resolution must be at least 8")
        object.__setattr__(self, "resolution", int(self.resolution))
        if self.family == "layer":
            if self.layer_upper is None or not (float(self.layer_upper) > 0.0):
                raise ValidationError("layer search needs a positive layer_upper")
            object.__setattr__(self, "layer_upper", float(self.layer_upper))
        if self.family == "piecewise-linear":
            if not self.knots:
                raise ValidationError("piecewise-linear search needs knots")
            knots = tuple(float(t) for t in self.knots)
            if knots[0] < 0.0 or any(b <= a for a, b in zip(knots, knots[1:])):
                raise ValidationError("knots must be increasing and nonnegative")
            object.__setattr__(self, "knots", knots)
            if int(self.sweeps) < 1:
                raise ValidationError("sweeps must be >= 1")
            object.__setattr__(self, "sweeps", int(self.sweeps))


@dataclass(frozen=True)
class ModelConfig:
    """Full solve description: horizon, stages, state grid, search, tolerance.

    horizon None means stationary infinite-horizon; stages then holds exactly
    one StageData. A finite horizon accepts either one shared stage or one
    StageData per stage.
    """

    horizon: int | None
    stages: tuple[StageData, ...]
    grid: GridSpec
    search: SearchSpec
    tol: float = 1e-4

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise ValidationError("at least one stage is required")
        if self.horizon is None:
            if len(stages) != 1:
                raise ValidationError("infinite horizon takes a single stationary stage")
            if stages[0].beta >= 1.0:
                raise ValidationError("infinite horizon needs strict discounting (beta < 1)")
        else:
            n = int(self.horizon)
            if n < 1:
                raise ValidationError("horizon must be >= 1")
            object.__setattr__(self, "horizon", n)
            if len(stages) not in (1, n):
                raise ValidationError("provide one shared stage or exactly one per stage")
        if not (float(self.tol) > 0.0):
            raise ValidationError("tolerance must be positive")
        object.__setattr__(self, "tol", float(self.tol))

    @property
    def is_infinite(self) -> bool:
        return self.horizon is None

    def stage(self, n: int) -> StageData:
        return self.stages[0] if len(self.stages) == 1 else self.stages[n]


@dataclass(frozen=True)
class PolicyTable:
    """One treaty per (stage, grid state)."""

    grid: np.ndarray
    rows: tuple[tuple[Treaty, ...], ...]

    def stage_params(self, n: int) -> np.ndarray:
        """Scalar search parameter per state; one-parameter families only."""
        out = []
        for f in self.rows[n]:
            if f.family == "proportional":
                out.append(f.params["c"])
            elif f.family in ("stop-loss", "layer"):
                out.append(f.params["a"])
            else:
                raise ValidationError(f"family {f.family!r} has no scalar parameter")
        return np.asarray(out, dtype=np.float64)


@dataclass(frozen=True)
class InfiniteSolution:
    value: ValueFunction
    policy: PolicyTable
    iterations: int
    certificate: float


# ---------------------------------------------------------------------------
# bounding envelopes and the weighted norm


def _stationary_eta(s: StageData) -> tuple[float, float, float]:
    return evaluate(s.risk, s.dY), premium(s.premium, s.dY), ess_sup(s.dZ)


def _finite_coeffs(config: ModelConfig):
    n = config.horizon
    a = np.zeros(n + 1)
    c_lo = np.zeros(n + 1)
    c_hi = np.zeros(n + 1)
    for k in range(n - 1, -1, -1):
        s = config.stage(k)
        growth = 1.0 + s.beta * a[k + 1]
        scaled = DiscreteDistribution(growth * s.dY.values, s.dY.probs)
        a[k] = growth
        c_lo[k] = growth * ess_sup(s.dZ) + s.beta * c_lo[k + 1]
        c_hi[k] = evaluate(s.risk, scaled) + growth * premium(s.premium, s.dY) + s.beta * c_hi[k + 1]
    return a, c_lo, c_hi


def bounding_functions(config: ModelConfig, n: int):
    """Stage-n envelope (b_low, b_high) sandwiching every candidate value.

    Finite horizon: b_low(x) = -c_lo - a x+ and b_high(x) = c_hi + a x-,
    with the coefficients built backward from zero terminal values. The
    stationary envelope replaces the coefficients by their geometric limits.
    """
    if config.is_infinite:
        s = config.stage(0)
        rho_y, pi_y, zbar = _stationary_eta(s)
        gap = 1.0 - s.beta
        lo_off = zbar / gap**2
        hi_off = (rho_y + pi_y) / gap**2
        slope = 1.0 / gap
    else:
        if not 0 <= n <= config.horizon:
            raise ValidationError(f"stage index {n} outside 0..{config.horizon}")
        a, c_lo, c_hi = _finite_coeffs(config)
        lo_off, hi_off, slope = c_lo[n], c_hi[n], a[n]

    def b_low(x):
        x = np.asarray(x, dtype=np.float64)
        return -lo_off - slope * np.maximum(x, 0.0)

    def b_high(x):
        x = np.asarray(x, dtype=np.float64)
        return hi_off + slope * np.maximum(-x, 0.0)

    return b_low, b_high


def weighted_norm(v1: ValueFunction, v2: ValueFunction, config: ModelConfig) -> float:
    """Largest grid gap |v1 - v2| relative to the stationary weight b."""
    if not np.array_equal(v1.grid, v2.grid):
        raise GridMismatch("value functions live on different grids")
    s = config.stage(0)
    if s.beta >= 1.0:
        raise ValidationError("the weighted norm needs beta < 1")
    rho_y, pi_y, zbar = _stationary_eta(s)
    eta = rho_y + pi_y + zbar
    b = np.abs(v1.grid) / (1.0 - s.beta) + eta / (1.0 - s.beta) ** 2
    return float(np.max(np.abs(v1.values - v2.values) / b))


# ---------------------------------------------------------------------------
# one-treaty evaluation: the reference route


def apply_L(v: ValueFunction, x: float, f: Treaty, s: StageData) -> float:
    """One-period cost of treaty f at surplus x with continuation v.

    Builds the cost distribution explicitly over the (Y, Z) product and hands
    it to the risk measure; exact up to interpolation of v. The batched
    evaluator must agree with this route.
    """
    p = treaty_premium(s.premium, s.dY, f)
    x = float(x)

    def cost(y, z):
        h = f.retained(y)
        nxt = x + z - h - p
        return h + p - z - x + s.beta * v(nxt)

    return evaluate(s.risk, independent_product(s.dY, s.dZ, cost))


# ---------------------------------------------------------------------------
# batched candidate evaluation


def _premium_table(search: SearchSpec, s: StageData):
    if search.family == "layer":
        return premium_breakpoints("layer", s.premium, s.dY, upper=search.layer_upper)
    return premium_breakpoints(search.family, s.premium, s.dY)


def _retained_on(search: SearchSpec, params, y):
    if search.family == "stop-loss":
        return np.minimum(y, params)
    if search.family == "layer":
        return np.minimum(y, params) + np.maximum(y - search.layer_upper, 0.0)
    if search.family == "proportional":
        return params * y
    raise UnsupportedFamily(search.family)


def _params_to_treaty(search: SearchSpec, p: float) -> Treaty:
    if search.family == "stop-loss":
        return make_treaty("stop-loss", {"a": float(p)})
    if search.family == "layer":
        return make_treaty("layer", {"a": float(p), "w": search.layer_upper - float(p)})
    if search.family == "proportional":
        return make_treaty("proportional", {"c": float(p)})
    raise UnsupportedFamily(search.family)


def _candidate_objectives(v: ValueFunction, s: StageData, x, params, search: SearchSpec):
    """Objective value at every (state, candidate parameter) pair.

    x has shape (S,), params (S, P); the result matches params. When premium
    income is deterministic and the risk measure is weight-representable, the
    claim-ascending atom order works for every candidate at once; otherwise
    candidates are priced one by one with their own atom sort.
    """
    x = np.asarray(x, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    bp, bv = _premium_table(search, s)
    prem = np.interp(params, bp, bv)

    fast = len(s.dZ) == 1 and s.risk.kind != "entropic"
    if fast:
        w = atom_weights(s.risk, s.dY.probs)
        act = np.flatnonzero(w)
        wa = w[act]
        ya = s.dY.values[act]
        sw = float(np.sum(wa))
        z0 = float(s.dZ.values[0])
        h = _retained_on(search, params[..., None], ya)
        t = z0 - h - prem[..., None]
        w_t = np.sum(t * wa, axis=-1)
        cont = np.sum(v(x[:, None, None] + t) * wa, axis=-1)
        return -x[:, None] * sw - w_t + s.beta * cont

    zz = np.tile(s.dZ.values, len(s.dY))
    probs = np.outer(s.dY.probs, s.dZ.probs).ravel()
    kz = len(s.dZ)
    out = np.empty(params.shape)
    for j, k in np.ndindex(params.shape):
        f = _params_to_treaty(search, params[j, k])
        h = np.repeat(f.retained(s.dY.values), kz)
        t = zz - h - prem[j, k]
        xt = x[j] + t
        cost = -xt + s.beta * v(xt)
        if s.risk.kind == "entropic":
            g = s.risk.gamma
            out[j, k] = float(logsumexp(g * cost, b=probs)) / g
        else:
            order = np.argsort(-t, kind="stable")
            wts = atom_weights(s.risk, probs[order])
            out[j, k] = float(np.dot(wts, cost[order]))
    return out


def _family_upper(search: SearchSpec, s: StageData) -> float:
    if search.family == "stop-loss":
        return ess_sup(s.dY)
    if search.family == "layer":
        return search.layer_upper
    return 1.0


def _feasible_lo(search: SearchSpec, s: StageData, grid: np.ndarray) -> np.ndarray:
    if not s.budget_constrained:
        return np.zeros(grid.size)
    upper = search.layer_upper if search.family == "layer" else None
    lo = np.empty(grid.size)
    for j, x in enumerate(grid):
        lo[j], _ = feasible_retention_range(
            search.family, s.premium, s.dY, max(float(x), 0.0), upper=upper
        )
    return lo


def _scalar_family_search(v_next, s, grid, search):
    lo = _feasible_lo(search, s, grid)
    hi = np.full(grid.size, _family_upper(search, s))
    lo = np.minimum(lo, hi)
    r = search.resolution
    frac = np.linspace(0.0, 1.0, r + 1)
    sel = np.arange(grid.size)
    best_val = np.full(grid.size, np.inf)
    best_par = hi.copy()
    for _ in range(_ZOOM_LEVELS):
        params = lo[:, None] + (hi - lo)[:, None] * frac
        params = np.clip(params, lo[:, None], hi[:, None])
        obj = _candidate_objectives(v_next, s, grid, params, search)
        idx = np.argmin(obj, axis=1)
        val = obj[sel, idx]
        par = params[sel, idx]
        # ties break toward the smaller parameter, across levels as well
        better = (val < best_val) | ((val == best_val) & (par < best_par))
        best_val = np.where(better, val, best_val)
        best_par = np.where(better, par, best_par)
        lo = params[sel, np.maximum(idx - 1, 0)]
        hi = params[sel, np.minimum(idx + 1, r)]
    row = [_params_to_treaty(search, p) for p in best_par]
    return best_val, row


def _pw_search(v_next, s, grid, search):
    # coordinate descent over knot slopes, identity start (always feasible)
    knots = np.asarray(search.knots)
    cand = np.linspace(0.0, 1.0, search.resolution + 1)
    values = np.empty(grid.size)
    row = []
    for j, x in enumerate(grid):
        budget = max(float(x), 0.0)
        slopes = np.ones(knots.size)
        best_f = make_treaty("piecewise-linear", {"knots": knots, "slopes": slopes})
        best = apply_L(v_next, float(x), best_f, s)
        for _ in range(search.sweeps):
            for i in range(knots.size):
                for c in cand:
                    trial = slopes.copy()
                    trial[i] = c
                    f = make_treaty("piecewise-linear", {"knots": knots, "slopes": trial})
                    if s.budget_constrained:
                        if treaty_premium(s.premium, s.dY, f) > budget + 1e-12:
                            continue
                    got = apply_L(v_next, float(x), f, s)
                    if got < best:
                        best, best_f, slopes = got, f, trial
        values[j] = best
        row.append(best_f)
    return values, row


def bellman_step(v_next: ValueFunction, s: StageData, grid, search: SearchSpec):
    """One backward step: minimize the one-period cost at every grid state.

    Returns the new value function (decreasing, enforced) and the minimizing
    treaty per state. Tail slopes follow the recursion a -> 1 + beta a.
    """
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    if search.family == "piecewise-linear":
        values, row = _pw_search(v_next, s, grid, search)
    else:
        values, row = _scalar_family_search(v_next, s, grid, search)
    out_left = -(1.0 - s.beta * v_next.slope_left)
    out_right = -(1.0 - s.beta * v_next.slope_right)
    return ValueFunction(grid, values, out_left, out_right), tuple(row)


# ---------------------------------------------------------------------------
# solvers


def _check_envelope(values, lo, hi, label):
    slack_lo = 1e-6 * (1.0 + np.abs(lo))
    slack_hi = 1e-6 * (1.0 + np.abs(hi))
    if np.any(values < lo - slack_lo) or np.any(values > hi + slack_hi):
        worst = float(np.max(np.maximum(lo - values, values - hi)))
        raise EnvelopeViolation(f"{label}: value exits its envelope by {worst:.3g}")


def _probe_count(search: SearchSpec, n_states: int):
    # exact for one-parameter families: every state runs the full ladder
    if search.family == "piecewise-linear":
        return None
    return n_states * _ZOOM_LEVELS * (search.resolution + 1)


def solve_finite(config: ModelConfig, stats: list | None = None):
    """Backward induction; returns ([J_0 .. J_N], PolicyTable).

    When ``stats`` is a list it receives one dict per stage, in solve order
    (last stage first), with the stage's runtime and objective-probe count.
    """
    if config.is_infinite:
        raise ValidationError("solve_finite needs a finite horizon")
    grid = config.grid.points()
    n = config.horizon
    values: list[ValueFunction] = [None] * (n + 1)
    values[n] = ValueFunction(grid, np.zeros(grid.size))
    rows = [None] * n
    for k in range(n - 1, -1, -1):
        t0 = time.perf_counter()
        vf, row = bellman_step(values[k + 1], config.stage(k), grid, config.search)
        b_low, b_high = bounding_functions(config, k)
        _check_envelope(vf.values, b_low(grid), b_high(grid), f"stage {k}")
        values[k] = vf
        rows[k] = row
        if stats is not None:
            stats.append(
                {
                    "stage": k,
                    "runtime_seconds": time.perf_counter() - t0,
                    "argmin_evaluations": _probe_count(config.search, grid.size),
                }
            )
    return values, PolicyTable(grid, tuple(rows))


def _policy_values_solve(row, s: StageData, grid: np.ndarray, tail: float):
    """Fixed point of the one-policy operator, via its affine representation.

    For a fixed treaty the atom ordering of the next surplus is known, so the
    stage operator is affine in the value row and the fixed point solves a
    linear system. Returns None if the system is singular.
    """
    size = grid.size
    a_mat = np.eye(size)
    b_vec = np.zeros(size)
    kz = len(s.dZ)
    zz = np.tile(s.dZ.values, len(s.dY))
    probs = np.outer(s.dY.probs, s.dZ.probs).ravel()
    for j, f in enumerate(row):
        p = treaty_premium(s.premium, s.dY, f)
        h = np.repeat(f.retained(s.dY.values), kz)
        t = zz - h - p
        order = np.argsort(-t, kind="stable")
        w = atom_weights(s.risk, probs[order])
        act = np.flatnonzero(w)
        ws = w[act]
        xt = grid[j] + t[order][act]
        b_vec[j] = -float(np.dot(ws, xt))
        left = xt <= grid[0]
        right = xt >= grid[-1]
        mid = ~(left | right)
        if np.any(left):
            a_mat[j, 0] -= s.beta * float(np.sum(ws[left]))
            b_vec[j] += s.beta * tail * float(np.dot(ws[left], xt[left] - grid[0]))
        if np.any(right):
            a_mat[j, -1] -= s.beta * float(np.sum(ws[right]))
            b_vec[j] += s.beta * tail * float(np.dot(ws[right], xt[right] - grid[-1]))
        if np.any(mid):
            cell = np.searchsorted(grid, xt[mid], side="right") - 1
            lam = (xt[mid] - grid[cell]) / (grid[cell + 1] - grid[cell])
            np.subtract.at(a_mat[j], cell, s.beta * ws[mid] * (1.0 - lam))
            np.subtract.at(a_mat[j], cell + 1, s.beta * ws[mid] * lam)
    try:
        return np.linalg.solve(a_mat, b_vec)
    except np.linalg.LinAlgError:
        return None


def solve_infinite(config: ModelConfig, tol=None, accelerate=True, max_iter=10_000):
    """Value iteration to the stationary fixed point, with an error bound.

    Iterates v <- T v from zero until the weighted step is small enough that
    q/(1-q) times it meets the tolerance, q = 1 - (1-beta)^2. With
    accelerate, each plain step is followed by a policy-evaluation jump; the
    certificate always comes from a genuine application of T.
    """
    if not config.is_infinite:
        raise ValidationError("solve_infinite needs a stationary (infinite-horizon) config")
    s = config.stage(0)
    if not is_coherent(s.risk):
        raise ValidationError(
            f"infinite horizon: coherence required, but risk kind {s.risk.kind!r} is not coherent"
        )
    tol = config.tol if tol is None else float(tol)
    q = 1.0 - (1.0 - s.beta) ** 2
    thresh = tol * (1.0 - q) / q
    grid = config.grid.points()
    tail = -1.0 / (1.0 - s.beta)
    b_low, b_high = bounding_functions(config, 0)
    lo_g, hi_g = b_low(grid), b_high(grid)

    v = ValueFunction(grid, np.zeros(grid.size), tail, tail)
    iterations = 0
    while True:
        if iterations >= max_iter:
            raise MaxIterations(
                f"no fixed point within {max_iter} operator applications "
                f"(step target {thresh:.3g})"
            )
        stepped, row = bellman_step(v, s, grid, config.search)
        iterations += 1
        v_new = ValueFunction(grid, stepped.values, tail, tail)
        _check_envelope(v_new.values, lo_g, hi_g, f"iterate {iterations}")
        delta = weighted_norm(v_new, v, config)
        if delta <= thresh:
            cert = q / (1.0 - q) * delta
            return InfiniteSolution(v_new, PolicyTable(grid, (row,)), iterations, cert)
        v = v_new
        if not accelerate:
            continue
        u_vals = _policy_values_solve(row, s, grid, tail)
        if u_vals is None or float(np.max(np.diff(u_vals))) > _MONO_TOL:
            continue
        u = ValueFunction(grid, u_vals, tail, tail)
        stepped, row = bellman_step(u, s, grid, config.search)
        iterations += 1
        v_new = ValueFunction(grid, stepped.values, tail, tail)
        _check_envelope(v_new.values, lo_g, hi_g, f"iterate {iterations}")
        delta = weighted_norm(v_new, u, config)
        if delta <= thresh:
            cert = q / (1.0 - q) * delta
            return InfiniteSolution(v_new, PolicyTable(grid, (row,)), iterations, cert)
        v = v_new


def _row_values(v_next: ValueFunction, s: StageData, grid: np.ndarray, row):
    families = {f.family for f in row}
    if families == {"stop-loss"}:
        params = np.asarray([[f.params["a"]] for f in row])
        return _candidate_objectives(v_next, s, grid, params, SearchSpec("stop-loss"))[:, 0]
    if families == {"proportional"}:
        params = np.asarray([[f.params["c"]] for f in row])
        return _candidate_objectives(v_next, s, grid, params, SearchSpec("proportional"))[:, 0]
    return np.asarray([apply_L(v_next, float(x), f, s) for x, f in zip(grid, row)])


def evaluate_policy(policy: PolicyTable, config: ModelConfig) -> ValueFunction:
    """Value of a fixed Markov policy by backward application of its rows."""
    if config.is_infinite:
        raise ValidationError("evaluate_policy needs a finite horizon")
    grid = config.grid.points()
    if not np.array_equal(grid, policy.grid):
        raise GridMismatch("policy table grid differs from the config grid")
    n = config.horizon
    if len(policy.rows) != n:
        raise ValidationError(f"policy has {len(policy.rows)} rows, horizon is {n}")
    v = ValueFunction(grid, np.zeros(grid.size))
    for k in range(n - 1, -1, -1):
        s = config.stage(k)
        row = policy.rows[k]
        if s.budget_constrained:
            for x, f in zip(grid, row):
                if treaty_premium(s.premium, s.dY, f) > max(float(x), 0.0) + 1e-9:
                    raise InfeasiblePolicyRow(
                        f"stage {k}: treaty premium exceeds surplus at x = {x:.6g}"
                    )
        values = _row_values(v, s, grid, row)
        out_left = -(1.0 - s.beta * v.slope_left)
        out_right = -(1.0 - s.beta * v.slope_right)
        v = ValueFunction(grid, values, out_left, out_right)
    return v
