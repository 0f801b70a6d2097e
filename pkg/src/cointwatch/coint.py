"""Pairwise cointegration testing and the all-pairs universe scan.

A pair fit regresses y on x and runs the unit-root test on the residuals,
admitting the directed pair when the residual p-value clears the threshold.

Caveat documented on purpose: the residual test reuses the plain
Dickey-Fuller p-value surface. Residuals from a fitted regression are known
to need more negative critical values, so admission is somewhat permissive
for truly unrelated walks (roughly 10% at epsilon=0.05 instead of the
nominal 5%). This behavior is part of the contract; do not "fix" it by
swapping in residual-specific critical values.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import stats
from .errors import (
    CointwatchError,
    DegeneratePair,
    MisalignedCalendar,
    UniverseTooSmall,
)

DIRECTION_BOTH = "both"
DIRECTION_SINGLE = "single"


class PriceSeries:
    """Aligned closing prices for one symbol over a fitting window."""

    __slots__ = ("symbol", "series", "window_id")

    def __init__(self, symbol: str, values, window_id: str = ""):
        series = stats.as_series(values)
        if len(series) and series.values.min() <= 0.0:
            raise ValueError(f"{symbol}: prices must be positive")
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "window_id", window_id)

    def __setattr__(self, name, value):
        raise AttributeError("PriceSeries is immutable")

    @property
    def values(self) -> np.ndarray:
        return self.series.values

    def __len__(self):
        return len(self.series)

    def __repr__(self):
        return f"PriceSeries({self.symbol!r}, n={len(self)}, window={self.window_id!r})"


@dataclass(frozen=True)
class CointModel:
    """Directional pair model: predicts dst (y) from src (x)."""

    beta0: float
    beta1: float
    resid_mean: float
    resid_std: float
    pvalue: float
    adf_stat: float
    window_id: str = ""


@dataclass(frozen=True)
class PairResult:
    src_symbol: str
    dst_symbol: str
    model: CointModel
    admitted: bool


@dataclass(frozen=True)
class SkippedPair:
    src_symbol: str
    dst_symbol: str
    reason: str


@dataclass(frozen=True)
class ScanResult:
    """Canonically ordered scan output plus the pairs that could not be fit."""

    pairs: tuple[PairResult, ...]
    skipped: tuple[SkippedPair, ...]

    @property
    def admitted(self) -> tuple[PairResult, ...]:
        return tuple(p for p in self.pairs if p.admitted)


def coint_fit(x: PriceSeries, y: PriceSeries, lags: int | None = None) -> CointModel:
    """Fit the directional cointegration model x -> y.

    OLS of y on x, then the ADF test on the fit residuals (Schwert default
    lag order unless overridden).

    Raises:
        MisalignedCalendar: the two series come from different windows.
        DegeneratePair: zero residual spread (y is an exact affine image
            of x); such a pair carries no testable leash and is never an
            ordinary edge.
        Everything ols_fit/adf_test raise.
    """
    if x.window_id != y.window_id:
        raise MisalignedCalendar(
            f"{x.symbol} window {x.window_id!r} != {y.symbol} window {y.window_id!r}"
        )
    model = stats.ols_fit(x.series, y.series)
    if model.resid_std == 0.0:
        raise DegeneratePair(f"{x.symbol}->{y.symbol}: residuals have zero spread")
    adf = stats.adf_test(model.residuals, lags)
    return CointModel(
        beta0=model.beta0,
        beta1=model.beta1,
        resid_mean=model.resid_mean,
        resid_std=model.resid_std,
        pvalue=adf.pvalue,
        adf_stat=adf.statistic,
        window_id=x.window_id,
    )


def _ordered_pairs(symbols: Sequence[str], direction_policy: str) -> list[tuple[int, int]]:
    idx = range(len(symbols))
    if direction_policy == DIRECTION_BOTH:
        return [(i, j) for i in idx for j in idx if i != j]
    if direction_policy == DIRECTION_SINGLE:
        return [(i, j) for i in idx for j in idx if symbols[i] < symbols[j]]
    raise ValueError(f"unknown direction policy {direction_policy!r}")


def _fit_one(values, symbols, window_id, lags, pair):
    i, j = pair
    x = PriceSeries(symbols[i], values[i], window_id)
    y = PriceSeries(symbols[j], values[j], window_id)
    try:
        m = coint_fit(x, y, lags)
    except CointwatchError as exc:
        return (i, j, None, f"{type(exc).__name__}: {exc}")
    return (i, j, (m.beta0, m.beta1, m.resid_mean, m.resid_std, m.pvalue, m.adf_stat), None)


_SCAN_CTX = None


def _scan_init(values, symbols, window_id, lags):
    global _SCAN_CTX
    _SCAN_CTX = (np.asarray(values), tuple(symbols), window_id, lags)


def _scan_chunk(pairs):
    values, symbols, window_id, lags = _SCAN_CTX
    return [_fit_one(values, symbols, window_id, lags, p) for p in pairs]


def scan_pairs(
    universe: Sequence[PriceSeries],
    epsilon: float = 0.05,
    direction_policy: str = DIRECTION_BOTH,
    workers: int = 1,
    lags: int | None = None,
) -> ScanResult:
    """Evaluate every ordered pair in the universe against the threshold.

    Results come back in canonical (src, dst) symbol order no matter how many
    workers ran the fits, so repeated scans are byte-identical. Pairs whose
    fit raises (degenerate, too short, ...) land in the skipped list instead
    of being dropped.

    Args:
        universe: aligned PriceSeries, one per symbol.
        epsilon: admission threshold on the residual test p-value, in (0, 1).
        direction_policy: "both" fits x->y and y->x independently;
            "single" fits only the lexicographic direction (half the cost).
        workers: process count for the fan-out; 1 runs inline.
        lags: ADF lag override forwarded to every fit.
    """
    if len(universe) < 2:
        raise UniverseTooSmall(f"need at least 2 symbols, got {len(universe)}")
    if not 0.0 <= epsilon < 1.0:
        # epsilon = 0 is allowed and admits nothing (p-values are clamped
        # strictly above zero); it is useful for dry-run scans
        raise ValueError(f"epsilon must be in [0, 1), got {epsilon}")
    symbols = [p.symbol for p in universe]
    if len(set(symbols)) != len(symbols):
        raise ValueError("universe contains duplicate symbols")
    window_id = universe[0].window_id
    n = len(universe[0])
    for p in universe:
        if p.window_id != window_id or len(p) != n:
            raise MisalignedCalendar(
                f"{p.symbol} is not aligned to window {window_id!r} of length {n}"
            )

    pairs = _ordered_pairs(symbols, direction_policy)
    values = np.vstack([p.values for p in universe]) if universe else np.empty((0, 0))

    if workers <= 1 or len(pairs) < 64:
        raw = [_fit_one(values, symbols, window_id, lags, p) for p in pairs]
    else:
        chunks = _split(pairs, workers * 4)
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_scan_init,
            initargs=(values, symbols, window_id, lags),
        ) as pool:
            raw = [r for chunk in pool.map(_scan_chunk, chunks) for r in chunk]

    results = []
    skipped = []
    for i, j, fields, reason in raw:
        if fields is None:
            skipped.append(SkippedPair(symbols[i], symbols[j], reason))
            continue
        beta0, beta1, resid_mean, resid_std, pvalue, adf_stat = fields
        model = CointModel(beta0, beta1, resid_mean, resid_std, pvalue, adf_stat, window_id)
        results.append(
            PairResult(
                src_symbol=symbols[i],
                dst_symbol=symbols[j],
                model=model,
                admitted=pvalue < epsilon and resid_std > 0.0,
            )
        )
    results.sort(key=lambda r: (r.src_symbol, r.dst_symbol))
    skipped.sort(key=lambda r: (r.src_symbol, r.dst_symbol))
    return ScanResult(pairs=tuple(results), skipped=tuple(skipped))


def _split(items: list, parts: int) -> Iterable[list]:
    parts = max(1, min(parts, len(items)))
    size = (len(items) + parts - 1) // parts
    return [items[k : k + size] for k in range(0, len(items), size)]

