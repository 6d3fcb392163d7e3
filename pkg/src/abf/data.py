"""Market-data ingestion for the return/volatility pipeline.

Two CSV layouts are accepted:

* intraday: columns (date, time, price) with strictly increasing timestamps
  within each day; per-day log returns feed the bipower-variation and
  jump-variation constructions, and the daily return is the sum of the
  intraday log returns;
* daily passthrough: columns (date, return, bv[, rv[, jv]]) with the realized
  measures precomputed (jv defaults to max(rv - bv, 0), rv defaults to bv).

Days with fewer than two intraday observations, or with a nonpositive
bipower measure, are dropped and reported.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .models.jumpdiff import SimulatedJumpDiff, bipower_variation, jump_variation


@dataclass(frozen=True)
class MarketDataBundle:
    dates: tuple
    returns: np.ndarray
    lnbv: np.ndarray
    rv: np.ndarray
    jv: np.ndarray
    dropped_days: tuple = ()

    def __post_init__(self):
        n = len(self.returns)
        if not (len(self.dates) == len(self.lnbv) == len(self.rv) == len(self.jv) == n):
            raise DataError("bundle columns must be aligned")
        if not np.all(np.isfinite(self.lnbv)):
            raise DataError("bipower variation must be strictly positive on every kept day")
        if np.any(self.jv < 0):
            raise DataError("jump variation must be nonnegative")

    def __len__(self):
        return len(self.returns)

    def window(self, n: int) -> "MarketDataBundle":
        return MarketDataBundle(
            dates=self.dates[:n], returns=self.returns[:n], lnbv=self.lnbv[:n],
            rv=self.rv[:n], jv=self.jv[:n],
        )


def ingest_intraday_csv(path: str) -> MarketDataBundle:
    """Build a MarketDataBundle from an intraday or daily CSV file."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        cols = [c.strip().lower() for c in header]
        rows = list(reader)
    if cols[:3] == ["date", "time", "price"]:
        return _ingest_intraday(rows, path)
    if cols[0] == "date" and "return" in cols:
        return _ingest_daily(cols, rows, path)
    raise DataError(f"{path}: expected (date,time,price) or (date,return[,bv[,rv[,jv]]]) columns")


def _parse_float(value: str, path: str, line: int, what: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise DataError(f"{path}:{line}: malformed {what} {value!r}") from exc


def _ingest_intraday(rows, path: str) -> MarketDataBundle:
    by_day: dict = {}
    order = []
    for i, row in enumerate(rows, start=2):
        if len(row) < 3:
            raise DataError(f"{path}:{i}: expected 3 columns")
        day, time_s, price_s = row[0].strip(), row[1].strip(), row[2].strip()
        price = _parse_float(price_s, path, i, "price")
        if price <= 0:
            raise DataError(f"{path}:{i}: nonpositive price {price}")
        if day not in by_day:
            by_day[day] = []
            order.append(day)
        if by_day[day] and time_s <= by_day[day][-1][0]:
            raise DataError(f"{path}:{i}: timestamps must strictly increase within {day}")
        by_day[day].append((time_s, price))

    dates, rets, lnbv, rv_l, jv_l, dropped = [], [], [], [], [], []
    for day in order:
        prices = np.array([p for _, p in by_day[day]])
        if len(prices) < 2:
            dropped.append(day)
            continue
        r_intra = np.diff(np.log(prices))
        bv = bipower_variation(r_intra)
        if bv <= 0:
            dropped.append(day)
            continue
        rv, jv = jump_variation(r_intra)
        dates.append(day)
        rets.append(float(r_intra.sum()))
        lnbv.append(float(np.log(bv)))
        rv_l.append(rv)
        jv_l.append(jv)
    return MarketDataBundle(
        dates=tuple(dates), returns=np.array(rets), lnbv=np.array(lnbv),
        rv=np.array(rv_l), jv=np.array(jv_l), dropped_days=tuple(dropped),
    )


def _ingest_daily(cols, rows, path: str) -> MarketDataBundle:
    idx = {name: cols.index(name) for name in cols}
    need_bv = "bv" in idx
    if not need_bv:
        raise DataError(f"{path}: daily layout needs a bv column")
    dates, rets, lnbv, rv_l, jv_l, dropped = [], [], [], [], [], []
    for i, row in enumerate(rows, start=2):
        if len(row) < len(cols):
            raise DataError(f"{path}:{i}: expected {len(cols)} columns")
        day = row[idx["date"]].strip()
        r = _parse_float(row[idx["return"]], path, i, "return")
        bv = _parse_float(row[idx["bv"]], path, i, "bv")
        if bv <= 0:
            dropped.append(day)
            continue
        rv = _parse_float(row[idx["rv"]], path, i, "rv") if "rv" in idx else bv
        jv = _parse_float(row[idx["jv"]], path, i, "jv") if "jv" in idx else max(rv - bv, 0.0)
        dates.append(day)
        rets.append(r)
        lnbv.append(float(np.log(bv)))
        rv_l.append(rv)
        jv_l.append(jv)
    return MarketDataBundle(
        dates=tuple(dates), returns=np.array(rets), lnbv=np.array(lnbv),
        rv=np.array(rv_l), jv=np.array(jv_l), dropped_days=tuple(dropped),
    )


def bundle_from_simulation(sim: SimulatedJumpDiff, start_date: str = "2010-02-26") -> MarketDataBundle:
    """Wrap a simulated jump-diffusion sample as observed market data."""
    d0 = _dt.date.fromisoformat(start_date)
    dates = tuple((d0 + _dt.timedelta(days=t)).isoformat() for t in range(len(sim)))
    return MarketDataBundle(
        dates=dates, returns=sim.returns.copy(), lnbv=sim.lnbv.copy(),
        rv=sim.rv.copy(), jv=sim.jv.copy(),
    )


def write_bundle_csv(bundle: MarketDataBundle, path: str) -> None:
    lines = ["date,return,bv,rv,jv"]
    for i in range(len(bundle)):
        lines.append(
            f"{bundle.dates[i]},{bundle.returns[i]:.17g},{np.exp(bundle.lnbv[i]):.17g},"
            f"{bundle.rv[i]:.17g},{bundle.jv[i]:.17g}"
        )
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
