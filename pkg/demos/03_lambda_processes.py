"""Constructing the finite-variation state process lambda.

The strategy engine consumes lambda as a precomputed daily path.  Six
constructors cover the useful shapes: constants (scalar or per-asset),
deterministic exponential schedules, three transforms of the realized
quadratic variation of the market weights, and a trailing moving average of
the weights themselves.  Every path carries its monotonicity tag and total
variation bound, which downstream Lyapunov checks rely on.
"""

import numpy as np

from fungen import lambdas, simulate


def describe(label: str, lam: lambdas.LambdaPath) -> None:
    v = lam.values
    print(f"{label:<28} width={lam.width} start={v[0, 0]:.4f} "
          f"end={v[-1, 0]:.4f} monotone={lam.monotone} fv_bound={lam.fv_bound:.4f}")


def main() -> None:
    path = simulate.simulate_market(simulate.SimConfig(4, 250, vol=0.012), seed=7)

    qv = lambdas.realized_qv_path(path)
    print(f"realized QV: starts at {qv.total[0]:.4f}, "
          f"accumulates to {qv.total[-1]:.4f} over {path.n_days} days")
    print()

    describe("constant 1.0", lambdas.build_lambda("constant", {"value": 1.0}, path))
    describe(
        "exp_deterministic -1e-3",
        lambdas.build_lambda("exp_deterministic", {"rate": -1e-3}, path),
    )
    describe("scaled_qv 50", lambdas.build_lambda("scaled_qv", {"scale": 50.0}, path))
    describe("exp_qv -100", lambdas.build_lambda("exp_qv", {"scale": -100.0}, path))
    describe(
        "clip(scaled_qv) in [0.5, 2]",
        lambdas.build_lambda(
            "clip",
            {"xi_lo": 0.5, "xi_hi": 2.0, "inner": {"kind": "scaled_qv", "scale": 50.0}},
            path,
        ),
    )

    ma = lambdas.build_lambda("moving_average", {"window": 20}, path)
    print(f"{'moving_average 20':<28} width={ma.width} rows sum to "
          f"{ma.values.sum(axis=1).min():.6f}..{ma.values.sum(axis=1).max():.6f} "
          f"(simplex-valued, feeds power_diversity)")

    # QV-driven paths are flat on day 0 by convention: no variation has been
    # realized yet, so lambda starts exactly at its transform of zero.
    sq = lambdas.build_lambda("scaled_qv", {"scale": 50.0}, path)
    eq = lambdas.build_lambda("exp_qv", {"scale": -100.0}, path)
    print()
    print(f"day-0 values: scaled_qv={sq.values[0, 0]:.1f}, "
          f"exp_qv={eq.values[0, 0]:.1f}, "
          f"day-1 exp_qv={eq.values[1, 0]:.6f} = exp(-100 x QV(day 1))")
    check = float(np.exp(-100.0 * qv.total[1]))
    print(f"recomputed from the QV path: {check:.6f}")


if __name__ == "__main__":
    main()
