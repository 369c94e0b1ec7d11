"""Daily market data: begin-of-day values, total-return factors, membership."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import ParseError, ValidationError

REQUIRED_COLUMNS = ("date", "asset_id", "market_value", "return_index", "member")

_TRUE_TOKENS = {"1", "true", "t", "yes", "y"}
_FALSE_TOKENS = {"0", "false", "f", "no", "n", ""}

# Relative slack for the overnight-consistency check; actual paths satisfy it
# to machine precision, real violations show up at 1e-3 scale.
_OVERNIGHT_RTOL = 1e-9


@dataclass(frozen=True)
class MarketPath:
    """A panel of N trading days over a fixed universe of d assets.

    ``mv_begin[l, i]`` is the begin-of-day market value of asset ``i`` on day
    ``l`` and ``tr[l, i]`` the total-return factor earned over day ``l``, so
    the implied end-of-day value is ``mv_begin[l, i] * tr[l, i]``.  Begin
    values of day ``l`` equal the implied end values of day ``l - 1`` while
    membership is unchanged (the overnight-invariance assumption); day 0 has
    ``tr == 1``.  Entries where ``member`` is false are NaN.
    """

    dates: tuple[str, ...]
    assets: tuple[str, ...]
    mv_begin: np.ndarray
    tr: np.ndarray
    member: np.ndarray

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.assets)


def validate(path: MarketPath) -> None:
    """Check MarketPath invariants, raising ValidationError on the first failure."""
    n, d = len(path.dates), len(path.assets)
    for name in ("mv_begin", "tr", "member"):
        arr = getattr(path, name)
        if arr.shape != (n, d):
            raise ValidationError(
                f"{name} has shape {arr.shape}, expected {(n, d)}"
            )
    if len(set(path.dates)) != n:
        raise ValidationError("duplicate dates in path")
    if any(a >= b for a, b in zip(path.dates, path.dates[1:])):
        raise ValidationError("dates are not strictly increasing")
    if not path.member.any(axis=1).all():
        day = int(np.flatnonzero(~path.member.any(axis=1))[0])
        raise ValidationError(f"day {day} ({path.dates[day]}) has no member assets")

    mv = np.where(path.member, path.mv_begin, 1.0)
    tr = np.where(path.member, path.tr, 1.0)
    if not (np.isfinite(mv).all() and (mv > 0).all()):
        raise ValidationError("non-positive or non-finite market value for a member")
    if not (np.isfinite(tr).all() and (tr > 0).all()):
        raise ValidationError("non-positive or non-finite return factor for a member")
    if not np.allclose(path.tr[0][path.member[0]], 1.0, rtol=0, atol=0):
        raise ValidationError("day 0 must have unit return factors")

    # Overnight invariance: begin values continue the prior day's implied end
    # values wherever membership did not change between the two days.
    both = path.member[1:] & path.member[:-1]
    carried = path.mv_begin[:-1] * path.tr[:-1]
    fresh = path.mv_begin[1:]
    bad = both & ~np.isclose(fresh, carried, rtol=_OVERNIGHT_RTOL, atol=0.0)
    if bad.any():
        day, asset = np.argwhere(bad)[0]
        raise ValidationError(
            f"overnight inconsistency for asset {path.assets[asset]} on day "
            f"{day + 1} ({path.dates[day + 1]}): begin value "
            f"{float(fresh[day, asset])!r} vs carried {float(carried[day, asset])!r}"
        )


def _parse_member(token: str, line_no: int) -> bool:
    t = token.strip().lower()
    if t in _TRUE_TOKENS:
        return True
    if t in _FALSE_TOKENS:
        return False
    raise ParseError(f"line {line_no}: bad member flag {token!r}")


def _parse_value(token: str, column: str, line_no: int) -> float:
    t = token.strip()
    if not t:
        return np.nan
    try:
        return float(t)
    except ValueError:
        raise ParseError(f"line {line_no}: bad {column} {token!r}") from None


def load_market_csv(source: str | TextIO) -> MarketPath:
    """Load a MarketPath from CSV with columns date,asset_id,market_value,return_index,member.

    Every asset needs a row for every date; the member flag switches assets in
    and out of the universe.  Return factors are ratios of consecutive return
    indexes, with day 0 (and the first day of any membership spell without a
    prior index level) set to 1.
    """
    if isinstance(source, str):
        with open(source, newline="") as fh:
            return load_market_csv(fh)

    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise ParseError("line 1: empty file")
    missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ParseError(f"line 1: missing columns {', '.join(missing)}")

    rows: dict[tuple[str, str], tuple[float, float, bool]] = {}
    dates: list[str] = []
    assets: list[str] = []
    seen_dates: set[str] = set()
    seen_assets: set[str] = set()
    for line_no, row in enumerate(reader, start=2):
        date = (row["date"] or "").strip()
        asset = (row["asset_id"] or "").strip()
        if not date or not asset:
            raise ParseError(f"line {line_no}: empty date or asset_id")
        key = (date, asset)
        if key in rows:
            raise ParseError(f"line {line_no}: duplicate row for {asset} on {date}")
        mv = _parse_value(row["market_value"] or "", "market_value", line_no)
        ri = _parse_value(row["return_index"] or "", "return_index", line_no)
        flag = _parse_member(row["member"] or "", line_no)
        if flag and not (np.isfinite(mv) and mv > 0):
            raise ParseError(f"line {line_no}: member row needs market_value > 0")
        if flag and not (np.isfinite(ri) and ri > 0):
            raise ParseError(f"line {line_no}: member row needs return_index > 0")
        rows[key] = (mv, ri, flag)
        if date not in seen_dates:
            seen_dates.add(date)
            dates.append(date)
        if asset not in seen_assets:
            seen_assets.add(asset)
            assets.append(asset)

    if not rows:
        raise ParseError("line 2: no data rows")
    dates.sort()
    n, d = len(dates), len(assets)

    for date in dates:
        for asset in assets:
            if (date, asset) not in rows:
                raise ValidationError(f"missing day {date} for asset {asset}")

    mv_begin = np.full((n, d), np.nan)
    ri_level = np.full((n, d), np.nan)
    member = np.zeros((n, d), dtype=bool)
    for l, date in enumerate(dates):
        for i, asset in enumerate(assets):
            mv, ri, flag = rows[(date, asset)]
            member[l, i] = flag
            if flag:
                mv_begin[l, i] = mv
            ri_level[l, i] = ri

    tr = np.full((n, d), np.nan)
    tr[0, member[0]] = 1.0
    for l in range(1, n):
        for i in range(d):
            if not member[l, i]:
                continue
            prev = ri_level[l - 1, i]
            cur = ri_level[l, i]
            if np.isfinite(prev) and prev > 0 and np.isfinite(cur):
                tr[l, i] = cur / prev
            else:
                tr[l, i] = 1.0

    path = MarketPath(tuple(dates), tuple(assets), mv_begin, tr, member)
    validate(path)
    return path


def write_market_csv(path: MarketPath, target: str | TextIO, ri_base: float = 100.0) -> None:
    """Write a MarketPath in the load_market_csv format (full-precision floats)."""
    if isinstance(target, str):
        with open(target, "w", newline="") as fh:
            write_market_csv(path, fh, ri_base)
            return

    # Rebuild return-index levels from the factors so the file is self-consistent.
    levels = np.where(path.member, np.nan_to_num(path.tr, nan=1.0), 1.0)
    ri = ri_base * np.cumprod(levels, axis=0)

    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(REQUIRED_COLUMNS)
    for l, date in enumerate(path.dates):
        for i, asset in enumerate(path.assets):
            if path.member[l, i]:
                writer.writerow(
                    [date, asset, repr(float(path.mv_begin[l, i])),
                     repr(float(ri[l, i])), 1]
                )
            else:
                writer.writerow([date, asset, "", "", 0])


def begin_weights(path: MarketPath, day: int) -> np.ndarray:
    """Market weights at the start of ``day``; zero for non-members."""
    return begin_weights_all(path)[day]


def end_of_day(path: MarketPath, day: int) -> tuple[np.ndarray, np.ndarray]:
    """Implied end-of-day market values and the corresponding weights."""
    mv = np.where(path.member[day], path.mv_begin[day] * path.tr[day], 0.0)
    return mv, mv / mv.sum()


def begin_weights_all(path: MarketPath) -> np.ndarray:
    """(N, d) begin-of-day weight matrix; rows sum to 1 over members."""
    mv = np.where(path.member, path.mv_begin, 0.0)
    return mv / mv.sum(axis=1, keepdims=True)


def end_weights_all(path: MarketPath) -> np.ndarray:
    """(N, d) end-of-day weight matrix from the implied end values."""
    mv = np.where(path.member, path.mv_begin * path.tr, 0.0)
    return mv / mv.sum(axis=1, keepdims=True)


def total_mv_begin(path: MarketPath) -> np.ndarray:
    """(N,) total begin-of-day capitalization over members."""
    return np.where(path.member, path.mv_begin, 0.0).sum(axis=1)


def total_mv_end(path: MarketPath) -> np.ndarray:
    """(N,) total implied end-of-day capitalization over members."""
    return np.where(path.member, path.mv_begin * path.tr, 0.0).sum(axis=1)


def membership_changes(path: MarketPath) -> np.ndarray:
    """(N,) bool; True on days whose member set differs from the prior day."""
    out = np.zeros(path.n_days, dtype=bool)
    out[1:] = (path.member[1:] != path.member[:-1]).any(axis=1)
    return out


def truncate(path: MarketPath, n_days: int) -> MarketPath:
    """The first n_days of a path as a new path."""
    return MarketPath(
        path.dates[:n_days],
        path.assets,
        path.mv_begin[:n_days],
        path.tr[:n_days],
        path.member[:n_days],
    )


def from_arrays(
    dates: Iterable[str],
    assets: Iterable[str],
    mv_begin: np.ndarray,
    tr: np.ndarray,
    member: np.ndarray | None = None,
) -> MarketPath:
    """Assemble and validate a MarketPath from plain arrays (full membership default)."""
    dates = tuple(dates)
    assets = tuple(assets)
    mv_begin = np.asarray(mv_begin, dtype=float)
    tr = np.asarray(tr, dtype=float)
    if member is None:
        member = np.ones(mv_begin.shape, dtype=bool)
    else:
        member = np.asarray(member, dtype=bool)
    path = MarketPath(dates, assets, mv_begin, tr, member)
    validate(path)
    return path
