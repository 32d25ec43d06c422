"""Monte Carlo simulation of the controlled surplus process.

simulate_paths replays a solved policy table forward: each period samples a
claim and a premium-income atom by inverse CDF, looks up the treaty stored
at the nearest grid state at or below the current surplus, and applies the
exact surplus recursion. The below lookup is deliberate: budgets tighten as
surplus falls, so borrowing the row of a lower state can only select a
treaty that was affordable there, never an infeasible one. Ruin means the
surplus is negative at any decision epoch after the start.

Sampling is batched. Batch b draws from Philox(key=seed).jumped(b), a
counter-based stream, so the draws for a given seed do not depend on how
many batches run or in which order they would complete; accumulation
follows batch order and repeated runs agree byte for byte.

ruin_bound_check reports the sum of per-period tail levels, the classical
union bound on the ruin probability available under value-at-risk stages.
The bound is only backed where the policy's cost-to-go stays nonpositive,
so the check walks a worst-case deterministic drift path (largest retained
claim, smallest income atom) and flags whether that precondition held at
every visited state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ess_sup, quantile
from .dp import ModelConfig, PolicyTable, evaluate_policy
from .errors import (
    GridMismatch,
    InfeasiblePolicyRow,
    NotVaRConfig,
    ValidationError,
)
from .premiums import treaty_premium

__all__ = ["SimResult", "ruin_bound_check", "simulate_paths"]

_BATCH = 10_000
_QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)
_BUDGET_SLACK = 1e-9


@dataclass(frozen=True)
class SimResult:
    """Summary statistics of one seeded simulation run.

    period_ruin_counts[n] counts paths whose surplus is negative right
    after period n; a path can appear in several periods. The imputed
    counts, present when stage value functions are supplied, instead count
    paths whose one-step capital requirement stays positive after period n.
    """

    paths: int
    ruin_estimate: float
    ci_half_width: float
    terminal_mean: float
    terminal_quantiles: tuple[tuple[float, float], ...]
    period_ruin_counts: tuple[int, ...]
    imputed_ruin_counts: tuple[int, ...] | None = None

    def to_json_dict(self) -> dict:
        return {
            "paths": self.paths,
            "ruin_estimate": self.ruin_estimate,
            "ci_half_width": self.ci_half_width,
            "terminal_mean": self.terminal_mean,
            "terminal_quantiles": [list(q) for q in self.terminal_quantiles],
            "period_ruin_counts": list(self.period_ruin_counts),
            "imputed_ruin_counts": (
                None
                if self.imputed_ruin_counts is None
                else list(self.imputed_ruin_counts)
            ),
        }


def _treaty_key(stage_key, f):
    # value key for premium caching; opaque callables are not cacheable
    items = []
    for k in sorted(f.params):
        if k == "fn":
            return None
        items.append((k, np.asarray(f.params[k], dtype=np.float64).tobytes()))
    return (stage_key, f.family, tuple(items))


def _premium_table(policy: PolicyTable, config: ModelConfig) -> np.ndarray:
    """Per-stage, per-state reinsurance premia, with budget feasibility."""
    grid = policy.grid
    out = np.empty((len(policy.rows), grid.size))
    shared = len(config.stages) == 1
    cache: dict = {}
    for n, row in enumerate(policy.rows):
        s = config.stage(n)
        for j, f in enumerate(row):
            key = _treaty_key(0 if shared else n, f)
            prem = cache.get(key) if key is not None else None
            if prem is None:
                prem = treaty_premium(s.premium, s.dY, f)
                if key is not None:
                    cache[key] = prem
            if s.budget_constrained and prem > max(float(grid[j]), 0.0) + _BUDGET_SLACK:
                raise InfeasiblePolicyRow(
                    f"stage {n} state {j}: premium {prem:.6g} exceeds the budget"
                )
            out[n, j] = prem
    return out


def simulate_paths(
    policy: PolicyTable,
    config: ModelConfig,
    x0,
    n_paths: int,
    seed: int,
    values=None,
) -> SimResult:
    """Simulate the surplus under ``policy`` from start capital ``x0``.

    ``values``, when given, must hold the stage value functions (one more
    than the horizon) and switches on the imputed per-period counts; the
    sampled paths themselves are unaffected.
    """
    if config.is_infinite:
        raise ValidationError("simulation needs a finite-horizon config")
    n_periods = config.horizon
    grid = config.grid.points()
    if not np.array_equal(policy.grid, grid):
        raise GridMismatch("policy grid does not match the config grid")
    if len(policy.rows) != n_periods:
        raise ValidationError(
            f"policy has {len(policy.rows)} stages, config has {n_periods}"
        )
    n_paths = int(n_paths)
    if n_paths < 1:
        raise ValidationError("path count must be at least 1")
    seed = int(seed)
    if seed < 0:
        raise ValidationError("seed must be nonnegative")
    x0 = float(x0)
    if not math.isfinite(x0):
        raise ValidationError("start capital must be finite")
    if values is not None and len(values) != n_periods + 1:
        raise ValidationError(
            f"expected {n_periods + 1} value functions, got {len(values)}"
        )

    prem_table = _premium_table(policy, config)
    period_counts = np.zeros(n_periods, dtype=np.int64)
    imputed_counts = np.zeros(n_periods, dtype=np.int64)
    terminal = np.empty(n_paths)
    ruin_total = 0
    done = 0
    batch_index = 0
    while done < n_paths:
        bs = min(_BATCH, n_paths - done)
        rng = np.random.Generator(np.random.Philox(key=seed).jumped(batch_index))
        u = rng.random((bs, n_periods, 2))
        x = np.full(bs, x0)
        ruined = np.zeros(bs, dtype=bool)
        for n in range(n_periods):
            s = config.stage(n)
            # 1-u lies in (0, 1], the quantile map's exact domain
            y = quantile(s.dY, 1.0 - u[:, n, 0])
            z = quantile(s.dZ, 1.0 - u[:, n, 1])
            j = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, grid.size - 1)
            h = np.empty(bs)
            for jj in np.unique(j):
                sel = j == jj
                h[sel] = policy.rows[n][jj].retained(y[sel])
            x = x - h - prem_table[n][j] + z
            neg = x < 0.0
            period_counts[n] += int(np.count_nonzero(neg))
            if values is not None:
                required = -x + s.beta * values[n + 1](x)
                imputed_counts[n] += int(np.count_nonzero(required > 0.0))
            ruined |= neg
        terminal[done : done + bs] = x
        ruin_total += int(np.count_nonzero(ruined))
        done += bs
        batch_index += 1

    p_hat = ruin_total / n_paths
    half = 1.96 * math.sqrt(p_hat * (1.0 - p_hat) / n_paths)
    qs = np.quantile(terminal, _QUANTILE_LEVELS)
    return SimResult(
        paths=n_paths,
        ruin_estimate=p_hat,
        ci_half_width=half,
        terminal_mean=float(terminal.mean()),
        terminal_quantiles=tuple(
            (lvl, float(q)) for lvl, q in zip(_QUANTILE_LEVELS, qs)
        ),
        period_ruin_counts=tuple(int(c) for c in period_counts),
        imputed_ruin_counts=(
            tuple(int(c) for c in imputed_counts) if values is not None else None
        ),
    )


def ruin_bound_check(policy: PolicyTable, config: ModelConfig, x0):
    """Union bound on ruin probability plus its precondition certificate.

    Returns (bound, holds): bound is the sum of per-period tail levels
    1 - alpha_n, valid while the policy's cost-to-go stays nonpositive.
    holds reports whether that held at every state visited by the
    worst-case drift path started at ``x0``.
    """
    if config.is_infinite:
        raise ValidationError("the ruin bound applies to finite-horizon configs")
    n_periods = config.horizon
    for n in range(n_periods):
        if config.stage(n).risk.kind != "value-at-risk":
            raise NotVaRConfig("the ruin bound needs value-at-risk at every stage")
    bound = float(sum(1.0 - config.stage(n).risk.alpha for n in range(n_periods)))
    grid = config.grid.points()
    if not np.array_equal(policy.grid, grid):
        raise GridMismatch("policy grid does not match the config grid")
    if len(policy.rows) != n_periods:
        raise ValidationError(
            f"policy has {len(policy.rows)} stages, config has {n_periods}"
        )

    # cost-to-go of the given policy for each start stage
    tails = []
    for n in range(n_periods):
        stages = config.stages if len(config.stages) == 1 else config.stages[n:]
        sub = ModelConfig(n_periods - n, stages, config.grid, config.search, config.tol)
        tails.append(evaluate_policy(PolicyTable(policy.grid, policy.rows[n:]), sub))

    holds = True
    x = float(x0)
    for n in range(n_periods):
        if tails[n](x) > 0.0:
            holds = False
        s = config.stage(n)
        j = int(np.clip(np.searchsorted(grid, x, side="right") - 1, 0, grid.size - 1))
        f = policy.rows[n][j]
        worst_claim = float(np.asarray(f.retained(ess_sup(s.dY))))
        x = x - worst_claim - treaty_premium(s.premium, s.dY, f) + float(s.dZ.values[0])
    return bound, holds
