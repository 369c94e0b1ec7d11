"""Self-contained invariant checks runnable from the CLI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diagnostics, engine, genfun, lambdas, marketdata, simulate


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def _compatible_lambdas(g: genfun.GenFunction, path) -> list[lambdas.LambdaPath]:
    if g.domain.lambda_kind == "vector":
        specs = [
            ("constant", {"value": [1.0 / path.n_assets] * path.n_assets}),
            ("moving_average", {"window": 50}),
        ]
    else:
        specs = [
            ("constant", {"value": 1.0}),
            ("exp_deterministic", {"rate": -1e-4}),
            ("exp_qv", {"scale": 100.0}),
            (
                "clip",
                {
                    "xi_lo": 0.5,
                    "xi_hi": 1.5,
                    "inner": {"kind": "exp_deterministic", "rate": 1e-4},
                },
            ),
        ]
        # Raw scaled_qv starts at 0 on day 0, outside some domains; the clip
        # composite keeps it positive while still moving with realized QV.
        specs.append(
            (
                "clip",
                {
                    "xi_lo": 0.5,
                    "xi_hi": 1.5,
                    "inner": {"kind": "scaled_qv", "scale": 200.0},
                },
            )
        )
    return [lambdas.build_lambda(kind, params, path) for kind, params in specs]


def _catalog(d: int, overrides: dict | None) -> list[genfun.GenFunction]:
    overrides = overrides or {}
    made = [
        genfun.make_entropy(),
        genfun.make_quadratic(),
        genfun.make_power_diversity(alpha=0.6, p=0.8),
        genfun.make_ranked_hybrid(d1=max(1, d // 3), d2=max(2, 2 * d // 3), xi_lo=0.5, xi_hi=2.0),
    ]
    return [overrides.get(g.name, g) for g in made]


def run_verification(
    seed: int = 0,
    n_days: int = 300,
    n_assets: int = 8,
    genfun_overrides: dict | None = None,
) -> VerificationReport:
    """Run the invariant suite on a freshly simulated path.

    ``genfun_overrides`` replaces catalog entries by name before checking;
    it exists so tests can plant a corrupted gradient and watch the ledger
    identity fail.
    """
    cfg = simulate.SimConfig(n_assets=n_assets, n_days=n_days, vol=0.01)
    path = simulate.simulate_market(cfg, seed)
    wb = marketdata.begin_weights_all(path)
    checks: list[CheckResult] = []

    # Quadratic oracle: defect-route Gamma equals (1 - scale) * total QV exactly.
    quad = genfun.make_quadratic()
    if genfun_overrides and "quadratic" in genfun_overrides:
        quad = genfun_overrides["quadratic"]
    worst = 0.0
    total_qv = lambdas.realized_qv_path(path).total
    for scale in (0.0, 1.0, 2.0):
        lam = lambdas.build_lambda("scaled_qv", {"scale": scale}, path)
        gam = engine.gamma_defect(quad, path, lam)
        worst = max(worst, float(np.abs(gam.values - (1.0 - scale) * total_qv).max()))
    checks.append(
        CheckResult("quadratic_oracle", worst < 1e-12, worst, "tolerance 1e-12")
    )

    # Ledger identity, self-financing, and wealth-form agreement per catalog
    # function and compatible lambda kind.
    worst_identity = 0.0
    worst_sf = 0.0
    worst_form = 0.0
    for g in _catalog(n_assets, genfun_overrides):
        for lam in _compatible_lambdas(g, path):
            lam0 = lam.values[0] if g.domain.lambda_kind == "vector" else lam.values[0, 0]
            norm = engine.normalize(g, lam0, wb[0])
            ledger, wealth = engine.run_backtest(norm, path, lam, mode="additive")
            gam = engine.gamma_defect(norm, path, lam)
            g_end = engine.g_values(norm, path, lam, at="end")
            worst_identity = max(
                worst_identity, float(np.abs(wealth - g_end - gam.values).max())
            )
            sf = np.abs((ledger.phi * wb).sum(axis=1) - ledger.v_begin).max()
            worst_sf = max(worst_sf, float(sf))
            worst_form = max(worst_form, ledger.max_form_gap)
    checks.append(
        CheckResult("ledger_identity", worst_identity < 1e-10, worst_identity, "tolerance 1e-10")
    )
    checks.append(
        CheckResult("self_financing", worst_sf < 1e-10, worst_sf, "tolerance 1e-10")
    )
    checks.append(
        CheckResult("wealth_form_agreement", worst_form < 1e-10, worst_form, "tolerance 1e-10")
    )

    # Independent ledger identity: wealth minus G minus the closed-route
    # Gamma, which never touches DG.  The defect-route identity above holds
    # algebraically for any gradient map, so only this prong can expose a
    # corrupted DG.  The quadratic closed form is exact on the grid; the
    # others differ by discretization remainders.
    ident_ok = True
    worst_ind = 0.0
    binding = ""
    closed_tols = {"quadratic": 1e-12, "entropy": 1e-4, "power_diversity": 1e-4}
    for g in _catalog(n_assets, genfun_overrides):
        tol = closed_tols.get(g.name)
        if tol is None:
            continue
        if g.domain.lambda_kind == "vector":
            lam = lambdas.build_lambda(
                "constant", {"value": [1.0 / n_assets] * n_assets}, path
            )
            lam0 = lam.values[0]
        else:
            lam = lambdas.build_lambda("constant", {"value": 1.0}, path)
            lam0 = 1.0
        norm = engine.normalize(g, lam0, wb[0])
        _, wealth = engine.run_backtest(norm, path, lam, mode="additive")
        g_end = engine.g_values(norm, path, lam, at="end")
        closed = engine.gamma_closed(norm, path, lam)
        resid = float(np.abs(wealth - g_end - closed.values).max())
        worst_ind = max(worst_ind, resid)
        if resid >= tol:
            ident_ok = False
            binding = g.name
    checks.append(
        CheckResult(
            "ledger_identity_independent",
            ident_ok,
            worst_ind,
            binding or "closed-route cross-check",
        )
    )

    # Route agreement for entropy on this path.
    ent = genfun.make_entropy()
    if genfun_overrides and "entropy" in genfun_overrides:
        ent = genfun_overrides["entropy"]
    lam = lambdas.build_lambda("constant", {"value": 1.0}, path)
    norm = engine.normalize(ent, 1.0, wb[0])
    gap = float(
        np.abs(
            engine.gamma_defect(norm, path, lam).values
            - engine.gamma_closed(norm, path, lam).values
        ).max()
    )
    checks.append(CheckResult("entropy_route_agreement", gap < 1e-4, gap, "tolerance 1e-4"))

    # Direction-indicator sign law in dimension 2.
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.05, 0.95, size=2000)
    b = rng.uniform(0.05, 0.95, size=2000)
    hi = np.maximum(a, 1 - a)
    sign_ok = True
    for w1, w2 in zip(hi, b):
        d_val = diagnostics.direction_indicator(
            np.array([w1, 1 - w1]), np.array([w2, 1 - w2])
        )
        if np.sign(d_val) != np.sign(w1 - w2):
            sign_ok = False
            break
    checks.append(CheckResult("direction_sign_law", sign_ok, 0.0, "2000 pairs"))

    # Concavity spot checks falsify nothing on the concave catalog entries.
    # ranked_hybrid is concave only within each fixed-ordering region, so its
    # midpoint check across re-rankings may fail by design; only its
    # lambda-Lipschitz estimate is held to account.
    spot_ok = True
    worst_name = ""
    for g in _catalog(n_assets, genfun_overrides):
        report = genfun.spot_check_conditions(g, d=n_assets, n_samples=2000, seed=seed)
        concave_required = g.name != "ranked_hybrid"
        if not report.lipschitz_ok or (concave_required and not report.concave_ok):
            spot_ok = False
            worst_name = g.name
            break
    checks.append(
        CheckResult(
            "condition_spot_checks", spot_ok, 0.0, worst_name or "catalog clean"
        )
    )

    return VerificationReport(tuple(checks))
