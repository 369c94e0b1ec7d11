"""Strategy generation and the daily self-financing backtest."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import marketdata
from .errors import ConfigError, DomainError, FungenError, StrategyError
from .genfun import GenFunction
from .lambdas import LambdaPath, realized_qv_path
from .lambdas import truncate as lambdas_truncate

# Normalization treats |G(0)| below this as zero (shift mode); G + c may not
# fall below it in the multiplicative exponent.
POSITIVITY_FLOOR = 1e-10

# The two end-of-day wealth forms are algebraically equal; disagreement beyond
# this is an internal error, not data.
_FORM_ATOL = 1e-9


@dataclass(frozen=True)
class NormalizedGen:
    """A generating function rescaled so its day-0 value is 1.

    ``divide`` mode divides G and DG by the positive initial value ``g0``;
    ``shift`` mode (g0 = 0) adds 1 to G and leaves DG alone.  Both preserve
    the generated strategy's structure while making wealth comparable to the
    market's constant 1.
    """

    base: GenFunction
    g0: float
    mode: str  # "divide" | "shift"
    c_shift: float  # 1.0 in shift mode, 0.0 in divide mode

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def domain(self):
        return self.base.domain

    @property
    def params(self) -> dict:
        return self.base.params

    @property
    def _denom(self) -> float:
        return self.g0 if self.mode == "divide" else 1.0

    def eval_G(self, lam, x):
        return (self.base.eval_G(lam, x) + self.c_shift) / self._denom

    def eval_DG(self, lam, x):
        return self.base.eval_DG(lam, x) / self._denom


def normalize(g: GenFunction, lam0, x0) -> NormalizedGen:
    """Rescale ``g`` so G(lambda(0), mu(0)) = 1; negative initial values are rejected."""
    g0 = float(g.eval_G(lam0, np.asarray(x0, dtype=float)))
    if g0 > POSITIVITY_FLOOR:
        return NormalizedGen(g, g0, "divide", 0.0)
    if abs(g0) <= POSITIVITY_FLOOR:
        return NormalizedGen(g, g0, "shift", 1.0)
    raise DomainError(
        f"{g.name} starts at G = {g0!r} < 0; normalization needs G(0) >= 0"
    )


@dataclass(frozen=True)
class GammaPath:
    """Cumulative earnings Gamma on the trading grid; route is "defect" or "closed"."""

    values: np.ndarray
    route: str


@dataclass(frozen=True)
class StrategyLedger:
    """Day-by-day record of a backtest.

    ``theta`` holds the generated pre-conversion positions, ``phi`` the
    self-financing positions after subtracting the conversion constant
    ``defect_c``; ``v_begin``/``v_end`` are begin and end-of-day wealth
    relative to the market.  ``membership_change`` flags days whose member
    set differs from the prior day (exact-identity checks pause there).
    """

    theta: np.ndarray
    phi: np.ndarray
    defect_c: np.ndarray
    v_begin: np.ndarray
    v_end: np.ndarray
    mode: str
    c_shift: float
    membership_change: np.ndarray
    max_form_gap: float

    @property
    def wealth(self) -> np.ndarray:
        return self.v_end


@dataclass(frozen=True)
class ArbitrageVerdict:
    """First threshold crossing of Gamma, if any: Gamma > 1 (additive) or 1 + epsilon."""

    crossed: bool
    day: int | None
    threshold: float
    mode: str


def _lambda_values(g, lam: LambdaPath, path: marketdata.MarketPath) -> np.ndarray:
    """Align a LambdaPath with what g expects: (N,) scalar or (N, d) vector."""
    if lam.n_days != path.n_days:
        raise ConfigError(
            f"lambda path has {lam.n_days} days, market path has {path.n_days}"
        )
    kind = g.domain.lambda_kind
    if kind == "scalar":
        if lam.width != 1:
            raise ConfigError(
                f"{g.name} takes a scalar lambda, got width {lam.width}"
            )
        return lam.values[:, 0]
    if lam.width == 1:
        return np.broadcast_to(lam.values, (lam.n_days, path.n_assets))
    if lam.width != path.n_assets:
        raise ConfigError(
            f"{g.name} takes a lambda vector of width {path.n_assets}, got {lam.width}"
        )
    return lam.values


def _lam_day(lam_vals: np.ndarray, day: int, mask: np.ndarray):
    if lam_vals.ndim == 1:
        return lam_vals[day]
    return lam_vals[day, mask]


def _g_series(g, lam_vals, weights, path) -> np.ndarray:
    """G evaluated day by day; member-restricted when membership varies.

    Full-membership paths go through one batched evaluation; a domain
    violation there falls back to the day loop so the error names the day.
    """
    if path.member.all():
        try:
            return np.asarray(g.eval_G(lam_vals, weights), dtype=float)
        except DomainError:
            pass
    out = np.empty(path.n_days)
    for l in range(path.n_days):
        mask = path.member[l]
        try:
            out[l] = g.eval_G(_lam_day(lam_vals, l, mask), weights[l, mask])
        except DomainError as exc:
            raise DomainError(f"day {l} ({path.dates[l]}): {exc}", day=l) from exc
    return out


def _dg_series(g, lam_vals, weights, path) -> np.ndarray:
    """DG evaluated day by day on begin weights; zero at non-members."""
    if path.member.all():
        try:
            return np.asarray(g.eval_DG(lam_vals, weights), dtype=float)
        except DomainError:
            pass
    out = np.zeros((path.n_days, path.n_assets))
    for l in range(path.n_days):
        mask = path.member[l]
        try:
            out[l, mask] = g.eval_DG(_lam_day(lam_vals, l, mask), weights[l, mask])
        except DomainError as exc:
            raise DomainError(f"day {l} ({path.dates[l]}): {exc}", day=l) from exc
    return out


def g_values(g, path: marketdata.MarketPath, lam: LambdaPath, at: str = "end") -> np.ndarray:
    """(N,) series of G along the path, at begin-of-day or end-of-day weights."""
    if at not in ("begin", "end"):
        raise ConfigError(f"unknown evaluation point {at!r}")
    weights = (
        marketdata.begin_weights_all(path)
        if at == "begin"
        else marketdata.end_weights_all(path)
    )
    return _g_series(g, _lambda_values(g, lam, path), weights, path)


def gamma_defect(g, path: marketdata.MarketPath, lam: LambdaPath) -> GammaPath:
    """Cumulative earnings via the defect route.

    Gamma(t_l) = G(0) - G(Lambda(t_l), mu_end(t_l))
               + sum_{k<=l} DG(Lambda(t_k), mu_begin(t_k)) . (mu_end - mu_begin)(t_k),
    with every gradient taken at the begin-of-day (left) point.  Exact on the
    grid: no quadratic-variation estimate enters.
    """
    wb = marketdata.begin_weights_all(path)
    we = marketdata.end_weights_all(path)
    lam_vals = _lambda_values(g, lam, path)
    dg = _dg_series(g, lam_vals, wb, path)
    earned = np.cumsum(((we - wb) * dg).sum(axis=1))
    g_end = _g_series(g, lam_vals, we, path)
    g_start = _g_series(g, lam_vals, wb, path)[0]
    return GammaPath(g_start - g_end + earned, "defect")


def gamma_closed(g, path: marketdata.MarketPath, lam: LambdaPath) -> GammaPath:
    """Cumulative earnings via the registered closed form of the base function.

    Available for entropy, quadratic, and power_diversity; integrals are
    discretized with left-point integrands, first differences of Lambda, and
    products of intraday weight increments for the covariations.  Differs
    from the defect route by third-order remainders.
    """
    base = g.base if isinstance(g, NormalizedGen) else g
    denom = g._denom if isinstance(g, NormalizedGen) else 1.0
    lam_vals = _lambda_values(g, lam, path)
    wb = marketdata.begin_weights_all(path)
    we = marketdata.end_weights_all(path)
    delta = we - wb
    member = path.member

    if base.name == "quadratic":
        total_qv = realized_qv_path(path).total
        values = -(lam_vals - lam_vals[0]) + total_qv
        return GammaPath(values / denom, "closed")

    if base.name == "entropy":
        dlam = np.diff(lam_vals, prepend=lam_vals[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            xlogx = np.where(member, wb * np.log(np.where(member, wb, 1.0)), 0.0)
            quad = np.where(member, delta * delta / np.where(member, wb, 1.0), 0.0)
        inc = xlogx.sum(axis=1) * dlam + 0.5 * lam_vals * quad.sum(axis=1)
        return GammaPath(np.cumsum(inc) / denom, "closed")

    if base.name == "power_diversity":
        alpha = base.params["alpha"]
        p = base.params["p"]
        dlam = np.diff(lam_vals, axis=0, prepend=lam_vals[:1])
        blended = np.where(member, alpha * wb + (1.0 - alpha) * lam_vals, 1.0)
        if np.any(blended <= 0):
            raise DomainError("power_diversity closed form needs positive blends")
        gval = (np.where(member, blended, 0.0) ** p).sum(axis=1) ** (1.0 / p)
        b1 = blended ** (p - 1.0)
        lam_term = -(1.0 - alpha) * (
            np.where(member, gval[:, None] ** (1.0 - p) * b1 * dlam, 0.0).sum(axis=1)
        )
        s_cross = np.where(member, b1 * delta, 0.0).sum(axis=1)
        s_diag = np.where(member, blended ** (p - 2.0) * delta * delta, 0.0).sum(axis=1)
        coeff = alpha * alpha * (1.0 - p) / 2.0
        x_term = coeff * (
            gval ** (1.0 - p) * s_diag - gval ** (1.0 - 2.0 * p) * s_cross**2
        )
        return GammaPath(np.cumsum(lam_term + x_term) / denom, "closed")

    raise ConfigError(f"no closed-form Gamma registered for {base.name!r}")


def theta_additive(g: NormalizedGen, path: marketdata.MarketPath, lam: LambdaPath) -> np.ndarray:
    """(N, d) generated positions DG(Lambda(t_l), mu_begin(t_l)); zero off-membership."""
    wb = marketdata.begin_weights_all(path)
    lam_vals = _lambda_values(g, lam, path)
    return _dg_series(g, lam_vals, wb, path)


def theta_multiplicative(
    g: NormalizedGen,
    path: marketdata.MarketPath,
    lam: LambdaPath,
    c: float = 0.0,
    gamma: GammaPath | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Positions and exponent of the multiplicatively generated strategy.

    theta_i(t_l) = DG_i / (1 + c) * exp(sum_{k<l} dGamma(t_k) / (G + c)(t_k))
    with G evaluated at the begin-of-day (left) point and Gamma accumulated
    from the defect route by default.  Returns (theta, exponent).
    """
    if c < 0:
        raise ConfigError("multiplicative shift c must be non-negative")
    if gamma is None:
        gamma = gamma_defect(g, path, lam)
    wb = marketdata.begin_weights_all(path)
    lam_vals = _lambda_values(g, lam, path)
    g_begin = _g_series(g, lam_vals, wb, path)
    den = g_begin + c
    low = den < POSITIVITY_FLOOR
    if low.any():
        day = int(np.flatnonzero(low)[0])
        raise StrategyError(
            f"G + c = {float(den[day])!r} fell below {POSITIVITY_FLOOR} on day {day}; "
            "increase the shift c",
            day=day,
        )
    d_gamma = np.diff(gamma.values, prepend=0.0)
    exponent = np.concatenate([[0.0], np.cumsum(d_gamma / den)[:-1]])
    dg = _dg_series(g, lam_vals, wb, path)
    theta = dg / (1.0 + c) * np.exp(exponent)[:, None]
    return theta, exponent


def self_financing_convert(
    theta: np.ndarray, w_begin: np.ndarray, v_begin: float, member: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Turn positions theta into self-financing phi for one day.

    C = theta . mu_begin - v_begin;  phi_i = theta_i - C for members, else 0.
    Then phi . mu_begin = v_begin: the conversion spends exactly the wealth
    at hand.
    """
    theta = np.asarray(theta, dtype=float)
    w_begin = np.asarray(w_begin, dtype=float)
    c = float(theta @ w_begin) - v_begin
    phi = theta - c
    if member is not None:
        phi = np.where(member, phi, 0.0)
    return c, phi


def run_backtest(
    g: NormalizedGen,
    path: marketdata.MarketPath,
    lam: LambdaPath,
    mode: str = "additive",
    c: float = 0.0,
) -> tuple[StrategyLedger, np.ndarray]:
    """Run the daily discrete backtest; returns the ledger and end-of-day wealth.

    Each day converts the generated theta into self-financing phi, earns the
    intraday weight moves, and carries wealth overnight rescaled by the
    total-capitalization ratio (a no-op absent membership changes).  Initial
    wealth is 1.
    """
    if mode not in ("additive", "multiplicative"):
        raise ConfigError(f"unknown backtest mode {mode!r}")
    try:
        if mode == "additive":
            theta = theta_additive(g, path, lam)
            c_shift = 0.0
        else:
            theta, _ = theta_multiplicative(g, path, lam, c)
            c_shift = c
    except (DomainError, StrategyError) as exc:
        day = getattr(exc, "day", None)
        partial = None
        if day is not None and day > 0:
            # Rerun on the clean prefix so callers get the ledger up to the
            # failure for diagnosis.
            try:
                partial, _ = run_backtest(
                    g,
                    marketdata.truncate(path, day),
                    lambdas_truncate(lam, day),
                    mode=mode,
                    c=c,
                )
            except FungenError:
                partial = None
        raise StrategyError(str(exc), day=day, ledger=partial) from exc

    wb = marketdata.begin_weights_all(path)
    we = marketdata.end_weights_all(path)
    total_begin = marketdata.total_mv_begin(path)
    total_end = marketdata.total_mv_end(path)
    member = path.member
    changes = marketdata.membership_changes(path)

    n = path.n_days
    v_begin = np.empty(n)
    v_end = np.empty(n)
    defect_c = np.empty(n)
    phi = np.zeros_like(theta)
    max_gap = 0.0

    v = 1.0
    for l in range(n):
        if l > 0:
            v = v_end[l - 1] * (total_end[l - 1] / total_begin[l])
        v_begin[l] = v
        cst, phi_l = self_financing_convert(theta[l], wb[l], v, member[l])
        defect_c[l] = cst
        phi[l] = phi_l
        end = float(phi_l @ we[l])
        cross = v + float(theta[l] @ (we[l] - wb[l]))
        gap = abs(end - cross)
        if gap > max_gap:
            max_gap = gap
        if gap > _FORM_ATOL:
            raise StrategyError(
                f"wealth forms disagree by {gap!r} on day {l}", day=l
            )
        v_end[l] = end

    ledger = StrategyLedger(
        theta=theta,
        phi=phi,
        defect_c=defect_c,
        v_begin=v_begin,
        v_end=v_end,
        mode=mode,
        c_shift=c_shift,
        membership_change=changes,
        max_form_gap=max_gap,
    )
    return ledger, v_end


def arbitrage_check(gamma: GammaPath, mode: str, epsilon: float = 0.0) -> ArbitrageVerdict:
    """First day Gamma exceeds its threshold: 1 (additive) or 1 + epsilon.

    A crossing certifies outperformance of the market from that day on for
    additive strategies (wealth = G + Gamma with G >= 0), and for
    multiplicative ones when epsilon covers the finite-variation bound.
    """
    if mode not in ("additive", "multiplicative"):
        raise ConfigError(f"unknown arbitrage mode {mode!r}")
    if epsilon < 0:
        raise ConfigError("epsilon must be non-negative")
    threshold = 1.0 if mode == "additive" else 1.0 + epsilon
    above = gamma.values > threshold
    if above.any():
        return ArbitrageVerdict(True, int(np.flatnonzero(above)[0]), threshold, mode)
    return ArbitrageVerdict(False, None, threshold, mode)
