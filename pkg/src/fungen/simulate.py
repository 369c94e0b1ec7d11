"""Synthetic daily markets: correlated geometric random walks with dividends."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics, marketdata
from .errors import ConfigError, SimulationError


def trading_dates(n_days: int, start: str = "2000-01-03") -> tuple[str, ...]:
    """ISO dates of ``n_days`` consecutive weekdays starting at ``start``."""
    day = dt.date.fromisoformat(start)
    out = []
    while len(out) < n_days:
        if day.weekday() < 5:
            out.append(day.isoformat())
        day += dt.timedelta(days=1)
    return tuple(out)


def _per_asset(value, d: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(d, float(arr))
    if arr.shape != (d,):
        raise ConfigError(f"sim.{name} must be a scalar or length-{d} vector")
    return arr


@dataclass(frozen=True)
class SimConfig:
    """Parameters of the daily market simulator.

    ``drift`` and ``vol`` are per-day log-scale parameters of the intraday
    move; ``corr`` correlates the log moves across assets (identity when
    None).  ``div_yield`` adds a per-day dividend factor to the return index,
    compounded into the next day's begin values so begin weights continue the
    prior end-of-day weights exactly.
    """

    n_assets: int
    n_days: int
    drift: float | tuple[float, ...] = 0.0
    vol: float | tuple[float, ...] = 0.01
    corr: tuple[tuple[float, ...], ...] | None = None
    div_yield: float | tuple[float, ...] = 0.0
    init_mv: tuple[float, ...] | None = None
    start_date: str = "2000-01-03"
    asset_prefix: str = "A"

    def resolved(self) -> "_Resolved":
        d = self.n_assets
        if d < 2:
            raise ConfigError("sim.n_assets must be at least 2")
        if self.n_days < 1:
            raise ConfigError("sim.n_days must be at least 1")
        drift = _per_asset(self.drift, d, "drift")
        vol = _per_asset(self.vol, d, "vol")
        if (vol < 0).any():
            raise ConfigError("sim.vol must be non-negative")
        div = _per_asset(self.div_yield, d, "div_yield")
        if (div <= -1).any():
            raise ConfigError("sim.div_yield must exceed -1")
        if self.init_mv is None:
            # Mild size spectrum by default: one decade between the extremes.
            init = np.logspace(0.0, 1.0, d)
        else:
            init = _per_asset(self.init_mv, d, "init_mv")
        if (init <= 0).any():
            raise ConfigError("sim.init_mv must be positive")
        if self.corr is None:
            factor = np.eye(d)
        else:
            corr = np.asarray(self.corr, dtype=float)
            if corr.shape != (d, d):
                raise ConfigError(f"sim.corr must be {d}x{d}")
            if not np.allclose(corr, corr.T, atol=1e-12):
                raise ConfigError("sim.corr must be symmetric")
            if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
                raise ConfigError("sim.corr must have unit diagonal")
            w, v = np.linalg.eigh(corr)
            if w.min() < -1e-10:
                raise ConfigError(
                    f"sim.corr is not positive semidefinite (min eigenvalue {w.min():.3e})"
                )
            factor = v * np.sqrt(np.clip(w, 0.0, None))
        return _Resolved(d, self.n_days, drift, vol, factor, div, init)


@dataclass(frozen=True)
class _Resolved:
    d: int
    n: int
    drift: np.ndarray
    vol: np.ndarray
    factor: np.ndarray
    div: np.ndarray
    init_mv: np.ndarray


def simulate_market(cfg: SimConfig, seed: int) -> marketdata.MarketPath:
    """Simulate a MarketPath; deterministic for a given (cfg, seed).

    Day 0 is the initial snapshot (unit return factors); each later day l
    applies a correlated lognormal intraday move, the return factor
    ``tr = move * (1 + div_yield)``, and carries ``mv_begin * tr`` into day
    l + 1 so the overnight-invariance assumption holds by construction.
    """
    r = cfg.resolved()
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((r.n - 1, r.d)) @ r.factor.T
    tr = np.ones((r.n, r.d))
    tr[1:] = np.exp(r.drift + r.vol * z) * (1.0 + r.div)

    # Cumulative products reproduce mv[l] = mv[l-1] * tr[l-1] with the exact
    # float multiplications end_of_day performs, so overnight weights match
    # bitwise, not just approximately.
    mv = np.cumprod(np.vstack([r.init_mv[None, :], tr[:-1]]), axis=0)

    path = marketdata.MarketPath(
        dates=trading_dates(r.n, cfg.start_date),
        assets=tuple(f"{cfg.asset_prefix}{i:03d}" for i in range(r.d)),
        mv_begin=mv,
        tr=tr,
        member=np.ones((r.n, r.d), dtype=bool),
    )
    marketdata.validate(path)
    return path


def diversification_scenario(
    kind: str,
    cfg: SimConfig,
    seed: int,
    tilt: float = 3e-4,
    max_retries: int = 8,
) -> marketdata.MarketPath:
    """Simulate a path whose cumulative direction indicator E trends as requested.

    ``increasing`` drags the drift of large initial caps and boosts small ones
    (weight flows large-to-small, so E trends up); ``decreasing`` reverses the
    tilt; ``flat`` applies none.  The realized sign of E at the horizon is
    checked after simulation and the path is regenerated with the next seed on
    failure, up to ``max_retries`` attempts.
    """
    if kind not in ("increasing", "decreasing", "flat"):
        raise ConfigError(f"unknown scenario kind {kind!r}")
    r = cfg.resolved()
    if kind == "flat":
        sign = 0.0
    else:
        sign = 1.0 if kind == "increasing" else -1.0
    score = np.log(r.init_mv)
    score = score - score.mean()
    spread = np.abs(score).max()
    if sign != 0.0 and spread > 0:
        score /= spread
    tilted = replace(cfg, drift=tuple(r.drift - sign * tilt * score))

    last_e = 0.0
    for attempt in range(max_retries):
        path = simulate_market(tilted, seed + attempt)
        if sign == 0.0:
            return path
        series = diagnostics.compute_diagnostics(path)
        last_e = float(series.e_cumulative[-1])
        if sign * last_e > 0:
            return path
    raise SimulationError(
        f"scenario {kind!r} failed after {max_retries} attempts "
        f"(last terminal E {last_e:.3e}); increase tilt or retries"
    )
