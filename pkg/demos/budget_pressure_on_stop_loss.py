"""Stop-loss retention under a shrinking reinsurance budget.

Solves a two-period problem with uniform claims, deterministic premium
income, expected-shortfall capital at level 0.95 and an expected-value
reinsurance premium with 20% loading. The budget constraint caps the
reinsurance premium at the current surplus, so as surplus falls the insurer
is forced to retain more. The final-stage retention has a closed form:
the unconstrained optimum theta/(1+theta) while the budget is slack, then
1 - sqrt(2 x+ / (1+theta)) once the budget binds.

Prints the solved retention against the closed form on a band of surplus
levels and reports the worst disagreement over the whole grid.
"""

import numpy as np

from reinsure_dp.distributions import FamilySpec, discretize
from reinsure_dp.dp import GridSpec, ModelConfig, SearchSpec, StageData, solve_finite
from reinsure_dp.oracles import oracle_es_uniform
from reinsure_dp.premiums import PremiumSpec
from reinsure_dp.risk import RiskSpec

THETA = 0.2
ALPHA = 0.95
CLAIM_ATOMS = 1001
GRID = GridSpec(-0.5, 1.5, 256)


def main():
    stage = StageData(
        dY=discretize(FamilySpec("uniform", (0.0, 1.0), atoms=CLAIM_ATOMS)),
        dZ=discretize(FamilySpec("point-mass", (0.3,))),
        risk=RiskSpec("expected-shortfall", alpha=ALPHA),
        premium=PremiumSpec("expected", theta=THETA),
        beta=1.0,
        budget_constrained=True,
    )
    config = ModelConfig(2, (stage,), GRID, SearchSpec("stop-loss"))
    values, policy = solve_finite(config)

    grid = config.grid.points()
    solved = np.asarray(policy.stage_params(1), dtype=np.float64)
    closed = np.array([oracle_es_uniform(THETA, ALPHA, float(x)) for x in grid])

    print("final-stage stop-loss retention (uniform claims, ES 0.95, 20% loading)")
    print(f"unconstrained optimum: theta/(1+theta) = {THETA / (1 + THETA):.4f}")
    print()
    print(f"{'surplus':>8} {'solved a':>9} {'closed form':>12} {'budget':>7}")
    for x in (-0.25, 0.0, 0.05, 0.15, 0.3, 0.6, 1.0, 1.4):
        j = int(np.argmin(np.abs(grid - x)))
        binding = "binds" if closed[j] > THETA / (1 + THETA) + 1e-9 else "slack"
        print(f"{grid[j]:>8.3f} {solved[j]:>9.4f} {closed[j]:>12.4f} {binding:>7}")
    print()
    print(f"worst |solved - closed| over {grid.size} states: "
          f"{float(np.max(np.abs(solved - closed))):.2e}")
    print(f"stage-0 capital requirement at x=0.3: {float(values[0](0.3)):+.4f}")
    print(f"stage-0 capital requirement at x=1.2: {float(values[0](1.2)):+.4f}")


if __name__ == "__main__":
    main()
