"""Catalog of generating functions G(lambda, x) and their weight gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError

# Sufficient-condition tags: a non-increasing Lambda path makes the cumulative
# earnings of these functions non-decreasing; "none" means no such guarantee.
LYAPUNOV_IF_NONINCREASING = "lyapunov_if_lambda_nonincreasing"
LYAPUNOV_NONE = "not_lyapunov_in_general"


@dataclass(frozen=True)
class DomainSpec:
    """Evaluation domain metadata used by the engine and the spot checker."""

    lambda_kind: str  # "scalar" | "vector"
    open_simplex: bool = True
    lambda_low: float = 0.1
    lambda_high: float = 2.0


@dataclass(frozen=True)
class GenFunction:
    """A generating function bundle: G, its gradient in x, and its domain.

    ``eval_G(lam, x)`` and ``eval_DG(lam, x)`` broadcast over leading axes:
    ``x`` has shape (..., d); ``lam`` has shape (...,) for scalar-lambda
    functions and (..., d) for vector-lambda ones.
    """

    name: str
    eval_G: Callable[[np.ndarray, np.ndarray], np.ndarray]
    eval_DG: Callable[[np.ndarray, np.ndarray], np.ndarray]
    domain: DomainSpec
    lyapunov_hint: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RankedWeights:
    """Weights in descending order with the bookkeeping to map gradients back.

    ``perm[i]`` is the rank (0-based) of asset ``i``; ties are broken by
    original index, ascending.  ``counts[l]`` is the number of assets sharing
    the value at rank ``l``.
    """

    sorted_values: np.ndarray
    perm: np.ndarray
    counts: np.ndarray


def rank_weights(x: np.ndarray) -> RankedWeights:
    """Sort a weight vector in descending order, tracking ranks and ties."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError("rank_weights expects a single weight vector")
    order = np.argsort(-x, kind="stable")
    sorted_values = x[order]
    perm = np.empty_like(order)
    perm[order] = np.arange(x.size)
    counts = np.empty(x.size, dtype=np.int64)
    i = 0
    while i < x.size:
        j = i + 1
        while j < x.size and sorted_values[j] == sorted_values[i]:
            j += 1
        counts[i:j] = j - i
        i = j
    return RankedWeights(sorted_values, perm, counts)


# ---------------------------------------------------------------------------
# entropy: G(lam, x) = lam * sum_i x_i log(1/x_i)

def _entropy_check(lam: np.ndarray, x: np.ndarray) -> None:
    if np.any(x <= 0):
        raise DomainError("entropy needs strictly positive weights")
    if np.any(lam <= 0):
        raise DomainError("entropy needs lambda > 0")


def _entropy_G(lam: np.ndarray, x: np.ndarray) -> np.ndarray:
    _entropy_check(lam, x)
    return lam * -(x * np.log(x)).sum(axis=-1)


def _entropy_DG(lam: np.ndarray, x: np.ndarray) -> np.ndarray:
    _entropy_check(lam, x)
    return -np.asarray(lam)[..., None] * (1.0 + np.log(x))


def entropy(lam, x) -> tuple[np.ndarray, np.ndarray]:
    """Entropy value and gradient: G = lam * sum x log(1/x), DG_i = -lam(1 + log x_i)."""
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    return _entropy_G(lam, x), _entropy_DG(lam, x)


def make_entropy() -> GenFunction:
    return GenFunction(
        name="entropy",
        eval_G=_entropy_G,
        eval_DG=_entropy_DG,
        domain=DomainSpec(lambda_kind="scalar"),
        lyapunov_hint=LYAPUNOV_IF_NONINCREASING,
    )


# ---------------------------------------------------------------------------
# quadratic: G(lam, x) = lam - sum_i x_i^2

def _quadratic_G(lam: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.asarray(lam, dtype=float) - (x * x).sum(axis=-1)


def _quadratic_DG(lam: np.ndarray, x: np.ndarray) -> np.ndarray:
    return -2.0 * np.asarray(x, dtype=float)


def quadratic(lam, x) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic value and gradient: G = lam - sum x^2, DG_i = -2 x_i."""
    x = np.asarray(x, dtype=float)
    return _quadratic_G(lam, x), _quadratic_DG(lam, x)


def make_quadratic() -> GenFunction:
    return GenFunction(
        name="quadratic",
        eval_G=_quadratic_G,
        eval_DG=_quadratic_DG,
        domain=DomainSpec(lambda_kind="scalar", open_simplex=False),
        lyapunov_hint=LYAPUNOV_IF_NONINCREASING,
    )


# ---------------------------------------------------------------------------
# power_diversity: G = (sum_i (alpha x_i + (1-alpha) lam_i)^p)^(1/p)

def _blend(lam: np.ndarray, x: np.ndarray, alpha: float) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    if lam.shape[-1:] != x.shape[-1:]:
        raise DomainError(
            "power_diversity needs a lambda vector matching the weight dimension"
        )
    blended = alpha * x + (1.0 - alpha) * lam
    if np.any(blended < 0):
        raise DomainError("power_diversity needs non-negative blended weights")
    return blended


def _power_G(lam, x, alpha: float, p: float) -> np.ndarray:
    blended = _blend(lam, x, alpha)
    return (blended**p).sum(axis=-1) ** (1.0 / p)


def _power_DG(lam, x, alpha: float, p: float) -> np.ndarray:
    blended = _blend(lam, x, alpha)
    if alpha == 0.0:
        return np.zeros_like(blended)
    g = (blended**p).sum(axis=-1) ** (1.0 / p)
    # A zero blended weight has an unbounded one-sided derivative; surface it
    # as inf rather than failing, the engine never leaves the interior.
    with np.errstate(divide="ignore"):
        return alpha * np.asarray(g)[..., None] ** (1.0 - p) * blended ** (p - 1.0)


def power_diversity(lam, x, alpha: float, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Blended diversity value and gradient for weights alpha and exponent p."""
    _check_power_params(alpha, p)
    return _power_G(lam, x, alpha, p), _power_DG(lam, x, alpha, p)


def _check_power_params(alpha: float, p: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError("power_diversity alpha must lie in [0, 1]")
    if not 0.0 < p < 1.0:
        raise ConfigError("power_diversity p must lie in (0, 1)")


def make_power_diversity(alpha: float, p: float) -> GenFunction:
    _check_power_params(alpha, p)
    return GenFunction(
        name="power_diversity",
        eval_G=lambda lam, x: _power_G(lam, x, alpha, p),
        eval_DG=lambda lam, x: _power_DG(lam, x, alpha, p),
        domain=DomainSpec(lambda_kind="vector"),
        lyapunov_hint=LYAPUNOV_NONE,
        params={"alpha": alpha, "p": p},
    )


# ---------------------------------------------------------------------------
# ranked_hybrid: entropy over the top d1 ranks plus a quadratic middle band,
# with lambda clipped to [xi_lo, xi_hi].

def _check_ranked_params(d1: int, d2: int, xi_lo: float, xi_hi: float) -> None:
    if not (isinstance(d1, (int, np.integer)) and isinstance(d2, (int, np.integer))):
        raise ConfigError("ranked_hybrid d1 and d2 must be integers")
    if not 1 <= d1 < d2:
        raise ConfigError("ranked_hybrid needs 1 <= d1 < d2")
    if not 0 < xi_lo <= xi_hi:
        raise ConfigError("ranked_hybrid needs 0 < xi_lo <= xi_hi")


def _ranked_sort(x: np.ndarray, d2: int):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] < d2:
        raise DomainError(
            f"ranked_hybrid needs at least d2={d2} weights, got {x.shape[-1]}"
        )
    order = np.argsort(-x, axis=-1, kind="stable")
    return x, order, np.take_along_axis(x, order, axis=-1)


def _ranked_G(lam, x, d1: int, d2: int, xi_lo: float, xi_hi: float) -> np.ndarray:
    x_in = np.asarray(x, dtype=float)
    x2, _, xs = _ranked_sort(x_in, d2)
    lam_c = np.clip(np.asarray(lam, dtype=float), xi_lo, xi_hi)
    top = xs[..., :d1]
    if np.any(top <= 0):
        raise DomainError("ranked_hybrid needs positive top-rank weights")
    mid = xs[..., d1:d2]
    g = -lam_c * (top * np.log(top)).sum(axis=-1) + 1.0 - (mid * mid).sum(axis=-1)
    return g.reshape(x_in.shape[:-1])


def _tie_average(row_sorted: np.ndarray, row_dl: np.ndarray) -> np.ndarray:
    """Average rank-space gradients over groups of exactly tied values."""
    out = row_dl.copy()
    i = 0
    n = row_sorted.size
    while i < n:
        j = i + 1
        while j < n and row_sorted[j] == row_sorted[i]:
            j += 1
        if j - i > 1:
            out[i:j] = row_dl[i:j].mean()
        i = j
    return out


def _ranked_DG(lam, x, d1: int, d2: int, xi_lo: float, xi_hi: float) -> np.ndarray:
    x_in = np.asarray(x, dtype=float)
    x2, order, xs = _ranked_sort(x_in, d2)
    lam_c = np.atleast_1d(np.clip(np.asarray(lam, dtype=float), xi_lo, xi_hi))
    if lam_c.size == 1:
        lam_c = np.broadcast_to(lam_c, (x2.shape[0],))
    lam_c = lam_c.reshape(x2.shape[0])
    top = xs[:, :d1]
    if np.any(top <= 0):
        raise DomainError("ranked_hybrid needs positive top-rank weights")
    dl = np.zeros_like(xs)
    dl[:, :d1] = -lam_c[:, None] * (np.log(top) + 1.0)
    dl[:, d1:d2] = -2.0 * xs[:, d1:d2]

    tie_rows = np.flatnonzero((xs[:, 1:] == xs[:, :-1]).any(axis=1))
    for r in tie_rows:
        dl[r] = _tie_average(xs[r], dl[r])
    dg = np.empty_like(xs)
    np.put_along_axis(dg, order, dl, axis=-1)
    return dg.reshape(x_in.shape)


def ranked_hybrid(
    lam, x, d1: int, d2: int, xi_lo: float, xi_hi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Ranked entropy/quadratic hybrid value and gradient with clipped lambda.

    The function is evaluated on the weights sorted in descending order:
    entropy terms over ranks 1..d1, quadratic terms over ranks d1+1..d2, zero
    beyond.  Exactly tied weights share the average of their ranks' gradients,
    which keeps sum_i x_i DG_i equal to its rank-space counterpart.
    """
    _check_ranked_params(d1, d2, xi_lo, xi_hi)
    return (
        _ranked_G(lam, x, d1, d2, xi_lo, xi_hi),
        _ranked_DG(lam, x, d1, d2, xi_lo, xi_hi),
    )


def make_ranked_hybrid(d1: int, d2: int, xi_lo: float, xi_hi: float) -> GenFunction:
    _check_ranked_params(d1, d2, xi_lo, xi_hi)
    return GenFunction(
        name="ranked_hybrid",
        eval_G=lambda lam, x: _ranked_G(lam, x, d1, d2, xi_lo, xi_hi),
        eval_DG=lambda lam, x: _ranked_DG(lam, x, d1, d2, xi_lo, xi_hi),
        domain=DomainSpec(lambda_kind="scalar"),
        lyapunov_hint=LYAPUNOV_IF_NONINCREASING,
        params={"d1": d1, "d2": d2, "xi_lo": xi_lo, "xi_hi": xi_hi},
    )


# ---------------------------------------------------------------------------

CATALOG = ("entropy", "power_diversity", "quadratic", "ranked_hybrid")


def catalog(name: str, **params) -> GenFunction:
    """Build a catalog GenFunction by name; unknown names raise ConfigError."""
    try:
        maker = {
            "entropy": make_entropy,
            "power_diversity": make_power_diversity,
            "quadratic": make_quadratic,
            "ranked_hybrid": make_ranked_hybrid,
        }[name]
    except KeyError:
        raise ConfigError(
            f"unknown generating function {name!r}; known: {', '.join(CATALOG)}"
        ) from None
    try:
        return maker(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None


@dataclass(frozen=True)
class ConditionReport:
    """Monte-Carlo falsification report for the regularity conditions.

    ``lipschitz_estimate`` is the largest sampled difference quotient of G in
    lambda; ``concave_ok`` is False when a sampled midpoint broke concavity in
    x, with the witnesses collected in ``violations``.  Verdicts only ever
    falsify: passing means no counterexample was sampled.
    """

    name: str
    n_samples: int
    lipschitz_estimate: float
    lipschitz_ok: bool
    concave_ok: bool
    violations: tuple[dict, ...]


def spot_check_conditions(
    g: GenFunction,
    d: int,
    n_samples: int = 10_000,
    seed: int = 0,
    tol: float = 1e-9,
) -> ConditionReport:
    """Sample the lambda-Lipschitz and midpoint-concavity conditions of ``g``."""
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(d), size=n_samples)
    y = rng.dirichlet(np.ones(d), size=n_samples)
    if g.domain.lambda_kind == "vector":
        lam1 = rng.dirichlet(np.ones(d), size=n_samples)
        lam2 = rng.dirichlet(np.ones(d), size=n_samples)
        gap = np.linalg.norm(lam1 - lam2, axis=-1)
    else:
        lam1 = rng.uniform(g.domain.lambda_low, g.domain.lambda_high, size=n_samples)
        lam2 = rng.uniform(g.domain.lambda_low, g.domain.lambda_high, size=n_samples)
        gap = np.abs(lam1 - lam2)

    quotients = np.abs(g.eval_G(lam1, x) - g.eval_G(lam2, x)) / np.where(gap > 0, gap, np.inf)
    lipschitz_estimate = float(quotients.max())
    lipschitz_ok = bool(np.isfinite(quotients).all())

    g_x = g.eval_G(lam1, x)
    g_y = g.eval_G(lam1, y)
    g_mid = g.eval_G(lam1, (x + y) / 2.0)
    bad = g_mid < (g_x + g_y) / 2.0 - tol
    violations = []
    for idx in np.flatnonzero(bad)[:10]:
        violations.append(
            {
                "lam": np.asarray(lam1[idx]).tolist(),
                "x": x[idx].tolist(),
                "y": y[idx].tolist(),
                "gap": float((g_x[idx] + g_y[idx]) / 2.0 - g_mid[idx]),
            }
        )
    return ConditionReport(
        name=g.name,
        n_samples=n_samples,
        lipschitz_estimate=lipschitz_estimate,
        lipschitz_ok=lipschitz_ok,
        concave_ok=not bool(bad.any()),
        violations=tuple(violations),
    )
