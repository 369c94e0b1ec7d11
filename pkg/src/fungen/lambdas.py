"""Finite-variation companion processes and the realized quadratic variation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import marketdata
from .errors import ConfigError, ValidationError

KINDS = (
    "constant",
    "exp_deterministic",
    "exp_qv",
    "scaled_qv",
    "moving_average",
    "clip",
)


@dataclass(frozen=True)
class QVPath:
    """Cumulative realized quadratic variation of the market weights.

    ``values[l, i]`` sums the squared intraday weight increments of asset
    ``i`` over days 0..l; under the overnight-invariance assumption these are
    the only weight moves absent membership changes.  Starts at 0 on day 0.
    """

    values: np.ndarray

    @property
    def total(self) -> np.ndarray:
        """(N,) cumulative quadratic variation summed over assets."""
        return self.values.sum(axis=1)


def realized_qv(begin_weights: np.ndarray, end_weights: np.ndarray) -> QVPath:
    """Estimate per-asset quadratic variation from aligned weight series.

    Both arguments are (N, d) arrays of begin-of-day and end-of-day weights.
    """
    wb = np.asarray(begin_weights, dtype=float)
    we = np.asarray(end_weights, dtype=float)
    if wb.shape != we.shape:
        raise ValidationError(
            f"begin/end weight series differ in shape: {wb.shape} vs {we.shape}"
        )
    delta = we - wb
    return QVPath(np.cumsum(delta * delta, axis=0))


def realized_qv_path(path: marketdata.MarketPath) -> QVPath:
    """Realized QV of a market path's intraday weight increments."""
    return realized_qv(
        marketdata.begin_weights_all(path), marketdata.end_weights_all(path)
    )


@dataclass(frozen=True)
class LambdaPath:
    """A finite-variation process sampled on the trading grid.

    ``values`` has shape (N, m); m is 1 for scalar kinds and the asset count
    for the moving average.  ``monotone`` records the direction guaranteed by
    construction ("nonincreasing", "nondecreasing", "constant") or None, and
    ``fv_bound`` the realized total variation summed over columns.
    """

    values: np.ndarray
    kind: str
    monotone: str | None
    fv_bound: float

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _finish(values: np.ndarray, kind: str, monotone: str | None) -> LambdaPath:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    fv = float(np.abs(np.diff(values, axis=0)).sum())
    return LambdaPath(values, kind, monotone, fv)


def _monotone_from_sign(sign: float) -> str | None:
    if sign > 0:
        return "nondecreasing"
    if sign < 0:
        return "nonincreasing"
    return "constant"


def truncate(lam: LambdaPath, n_days: int) -> LambdaPath:
    """The first n_days of a LambdaPath, with the variation bound recomputed."""
    return _finish(lam.values[:n_days], lam.kind, lam.monotone)


def build_lambda(kind: str, params: dict, path: marketdata.MarketPath) -> LambdaPath:
    """Construct a LambdaPath of the given kind on the path's trading grid.

    Kinds: ``constant`` (value, scalar or per-asset vector),
    ``exp_deterministic`` (exp(rate * l)), ``exp_qv`` (exp(scale * total
    realized QV)), ``scaled_qv`` (scale * total realized QV),
    ``moving_average`` (flat window of begin-of-day weights, padded with the
    day-0 weights), and ``clip`` (inner spec clipped to [xi_lo, xi_hi]).
    """
    n = path.n_days
    if kind == "constant":
        value = np.atleast_1d(np.asarray(params.get("value", 1.0), dtype=float))
        if value.ndim != 1 or value.size not in (1, path.n_assets):
            raise ConfigError("lambda.value must be a scalar or per-asset vector")
        return _finish(np.tile(value, (n, 1)), kind, "constant")

    if kind == "exp_deterministic":
        rate = _require_number(params, "rate")
        values = np.exp(rate * np.arange(n, dtype=float))
        return _finish(values, kind, _monotone_from_sign(rate))

    if kind == "exp_qv":
        scale = _require_number(params, "scale")
        total = realized_qv_path(path).total
        return _finish(np.exp(scale * total), kind, _monotone_from_sign(scale))

    if kind == "scaled_qv":
        scale = _require_number(params, "scale")
        total = realized_qv_path(path).total
        return _finish(scale * total, kind, _monotone_from_sign(scale))

    if kind == "moving_average":
        window = params.get("window", 250)
        if not isinstance(window, (int, np.integer)) or window < 1:
            raise ConfigError("lambda.window must be a positive integer")
        return _finish(_moving_average(path, int(window)), kind, None)

    if kind == "clip":
        if "inner" not in params or not isinstance(params["inner"], dict):
            raise ConfigError("lambda.inner must be a table with its own kind")
        lo = _require_number(params, "xi_lo")
        hi = _require_number(params, "xi_hi")
        if not lo <= hi:
            raise ConfigError("lambda.xi_lo must not exceed lambda.xi_hi")
        inner_params = dict(params["inner"])
        inner_kind = inner_params.pop("kind", None)
        if inner_kind is None:
            raise ConfigError("lambda.inner.kind is required")
        inner = build_lambda(inner_kind, inner_params, path)
        values = np.clip(inner.values, lo, hi)
        return _finish(values, kind, inner.monotone)

    raise ConfigError(f"unknown lambda kind {kind!r}; known: {', '.join(KINDS)}")


def _require_number(params: dict, key: str) -> float:
    if key not in params:
        raise ConfigError(f"lambda.{key} is required")
    value = params[key]
    if not isinstance(value, (int, float, np.integer, np.floating)) or isinstance(
        value, bool
    ):
        raise ConfigError(f"lambda.{key} must be a number")
    return float(value)


def _moving_average(path: marketdata.MarketPath, window: int) -> np.ndarray:
    """Flat-window average of begin-of-day weights, padded with day-0 weights.

    Day l averages the last ``window`` begin-of-day weight vectors; days
    before day 0 count as the day-0 weights, so the first rows average a
    shortened window blended with the initial weights.
    """
    w = marketdata.begin_weights_all(path)
    n = w.shape[0]
    cs = np.vstack([np.zeros((1, w.shape[1])), np.cumsum(w, axis=0)])
    lo = np.maximum(np.arange(n) - window + 1, 0)
    span = cs[np.arange(n) + 1] - cs[lo]
    pad_days = np.maximum(window - (np.arange(n) + 1), 0)
    return (span + pad_days[:, None] * w[0]) / window
