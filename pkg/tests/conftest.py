"""Shared fixtures: hand-built market paths with frozen oracle geometry."""

from __future__ import annotations

import numpy as np
import pytest

from fungen import marketdata, simulate


def build_path(mv0, tr_rows, member=None, assets=None):
    """Assemble a MarketPath whose begin values carry exactly overnight."""
    tr = np.asarray(tr_rows, dtype=float)
    n, d = tr.shape
    mv = np.empty((n, d))
    mv[0] = mv0
    for l in range(1, n):
        mv[l] = mv[l - 1] * tr[l - 1]
    dates = [f"2020-01-{l + 1:02d}" for l in range(n)]
    if assets is None:
        assets = [f"A{i}" for i in range(d)]
    return marketdata.from_arrays(dates, assets, mv, tr, member)


@pytest.fixture
def step_path():
    """Two days: begin weights (0.6, 0.4), one move to (0.5, 0.5)."""
    return build_path([0.6, 0.4], [[1.0, 1.0], [0.5 / 0.6, 0.5 / 0.4]])


@pytest.fixture
def three_day_path():
    """(0.6,0.4) -> (0.55,0.45) -> (0.5,0.5), one move per day."""
    return build_path(
        [0.6, 0.4],
        [[1.0, 1.0], [0.55 / 0.6, 0.45 / 0.4], [0.5 / 0.55, 0.5 / 0.45]],
    )


@pytest.fixture
def flat_path():
    """Four days with no weight motion at all."""
    return build_path([0.3, 0.5, 0.2], np.ones((4, 3)))


@pytest.fixture(scope="session")
def sim_path():
    """One default-sized simulated market shared by read-only tests."""
    return simulate.simulate_market(simulate.SimConfig(n_assets=6, n_days=300), seed=11)
