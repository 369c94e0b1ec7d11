"""Per-day market diagnostics and report files."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable

import numpy as np

from . import marketdata
from .errors import DomainError

DEFAULT_DIVERSITY_CAP = 0.002


def direction_indicator(w_begin: np.ndarray, w_end: np.ndarray) -> float:
    """D = sum_j -log(mu_begin_j) * (mu_end_j - mu_begin_j) over the day's members.

    Positive when weight flows from large to small names over the day.  Pass
    member-restricted vectors; begin weights must be strictly positive.
    """
    w_begin = np.asarray(w_begin, dtype=float)
    w_end = np.asarray(w_end, dtype=float)
    if np.any(w_begin <= 0):
        raise DomainError("direction indicator needs positive begin weights")
    return float(-np.log(w_begin) @ (w_end - w_begin))


def d_series(path: marketdata.MarketPath) -> np.ndarray:
    """(N,) direction indicator per day; day 0 is 0 under the unit-factor convention."""
    wb = marketdata.begin_weights_all(path)
    we = marketdata.end_weights_all(path)
    logs = np.where(path.member, np.log(np.where(path.member, wb, 1.0)), 0.0)
    return (-logs * (we - wb)).sum(axis=1)


def cumulative_e(d_values: np.ndarray) -> np.ndarray:
    """Running sum of the direction indicator."""
    return np.cumsum(np.asarray(d_values, dtype=float))


def diversity_capped(weights: np.ndarray, cap: float = DEFAULT_DIVERSITY_CAP) -> float:
    """Sum of weights with each addend capped: sum_i min(weight_i, cap)."""
    if cap <= 0:
        raise DomainError("diversity cap must be positive")
    w = np.asarray(weights, dtype=float)
    return float(np.minimum(w, cap).sum())


def diversity_series(
    path: marketdata.MarketPath, cap: float = DEFAULT_DIVERSITY_CAP
) -> np.ndarray:
    """(N,) capped diversity of the begin-of-day weights (members only)."""
    if cap <= 0:
        raise DomainError("diversity cap must be positive")
    wb = marketdata.begin_weights_all(path)
    return np.where(path.member, np.minimum(wb, cap), 0.0).sum(axis=1)


@dataclass(frozen=True)
class DiagnosticsSeries:
    """Daily diagnostic series over one path."""

    d_indicator: np.ndarray
    e_cumulative: np.ndarray
    diversity: np.ndarray
    cap: float


def compute_diagnostics(
    path: marketdata.MarketPath, cap: float = DEFAULT_DIVERSITY_CAP
) -> DiagnosticsSeries:
    d_vals = d_series(path)
    return DiagnosticsSeries(
        d_indicator=d_vals,
        e_cumulative=cumulative_e(d_vals),
        diversity=diversity_series(path, cap),
        cap=cap,
    )


def max_drawdown(values: np.ndarray) -> float:
    """Largest peak-to-trough drop of a series (0 for non-decreasing input)."""
    v = np.asarray(values, dtype=float)
    return float((np.maximum.accumulate(v) - v).max()) if v.size else 0.0


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow(list(row))
    return buf.getvalue()


def assemble_report(
    run_id: str,
    out_dir: str,
    path: marketdata.MarketPath,
    diag: DiagnosticsSeries,
    gammas: dict,
    ledgers: dict,
    config_snapshot: dict,
    seed: int | None,
    verdicts: dict | None = None,
    g_series: np.ndarray | None = None,
    notes: list[str] | None = None,
) -> dict[str, str]:
    """Write the per-run report files and return {name: file path}.

    Emits ``<run_id>__{wealth,gamma,D,E,diversity,ledger}.csv`` and
    ``<run_id>__summary.json``.  ``gammas`` maps route name ("defect",
    "closed") to GammaPath; ``ledgers`` maps mode ("additive",
    "multiplicative") to StrategyLedger.  All floats are written with
    full round-trip precision; wall-clock timestamps appear only inside the
    summary's metadata block so repeated runs stay byte-identical elsewhere.
    """
    os.makedirs(out_dir, exist_ok=True)
    n = path.n_days
    days = range(n)
    files: dict[str, str] = {}

    def emit(name: str, text: str) -> None:
        file_path = os.path.join(out_dir, f"{run_id}__{name}")
        _atomic_write(file_path, text)
        files[name] = file_path

    wealth_header = ["day"]
    wealth_cols = []
    for mode, label in (("additive", "v_phi"), ("multiplicative", "v_psi")):
        if mode in ledgers:
            wealth_header.append(label)
            wealth_cols.append(ledgers[mode].v_end)
    emit(
        "wealth.csv",
        _csv_text(
            wealth_header,
            ([l, *(_format(col[l]) for col in wealth_cols)] for l in days),
        ),
    )

    gamma_header = ["day"] + [f"gamma_{route}" for route in sorted(gammas)]
    gamma_cols = [gammas[route].values for route in sorted(gammas)]
    emit(
        "gamma.csv",
        _csv_text(
            gamma_header,
            ([l, *(_format(col[l]) for col in gamma_cols)] for l in days),
        ),
    )

    emit(
        "D.csv",
        _csv_text(["day", "d"], ([l, _format(diag.d_indicator[l])] for l in days)),
    )
    emit(
        "E.csv",
        _csv_text(["day", "e"], ([l, _format(diag.e_cumulative[l])] for l in days)),
    )
    emit(
        "diversity.csv",
        _csv_text(
            ["day", "diversity"], ([l, _format(diag.diversity[l])] for l in days)
        ),
    )

    primary = ledgers.get("additive") or next(iter(ledgers.values()), None)
    if primary is not None:
        d = path.n_assets
        header = (
            ["day"]
            + [f"theta_{a}" for a in path.assets]
            + [f"phi_{a}" for a in path.assets]
            + ["C", "v_begin", "v_end", "G", "Gamma_defect", "Gamma_closed"]
        )
        defect = gammas.get("defect")
        closed = gammas.get("closed")
        rows = (
            [l]
            + [_format(primary.theta[l, i]) for i in range(d)]
            + [_format(primary.phi[l, i]) for i in range(d)]
            + [
                _format(primary.defect_c[l]),
                _format(primary.v_begin[l]),
                _format(primary.v_end[l]),
                _format(g_series[l]) if g_series is not None else "",
                _format(defect.values[l]) if defect is not None else "",
                _format(closed.values[l]) if closed is not None else "",
            ]
            for l in days
        )
        emit("ledger.csv", _csv_text(header, rows))

    summary = {
        "run_id": run_id,
        "seed": seed,
        "n_days": n,
        "n_assets": path.n_assets,
        "config": config_snapshot,
        "terminal": {
            "v_phi": _terminal(ledgers, "additive"),
            "v_psi": _terminal(ledgers, "multiplicative"),
            "gamma_defect": _terminal_gamma(gammas, "defect"),
            "gamma_closed": _terminal_gamma(gammas, "closed"),
            "e_cumulative": float(diag.e_cumulative[-1]),
            "diversity": float(diag.diversity[-1]),
        },
        "max_drawdown_v_phi": (
            max_drawdown(ledgers["additive"].v_end) if "additive" in ledgers else None
        ),
        "membership_change_days": [
            int(l) for l in np.flatnonzero(marketdata.membership_changes(path))
        ],
        "notes": list(notes or []),
        "arbitrage": verdicts or {},
        "metadata": {
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
    }
    summary_path = os.path.join(out_dir, f"{run_id}__summary.json")
    _atomic_write(summary_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files["summary.json"] = summary_path
    return files


def _terminal(ledgers: dict, mode: str):
    return float(ledgers[mode].v_end[-1]) if mode in ledgers else None


def _terminal_gamma(gammas: dict, route: str):
    return float(gammas[route].values[-1]) if route in gammas else None
