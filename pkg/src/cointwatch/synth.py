"""Seeded synthetic universes and shock scenarios for tests and demos.

Everything here is deterministic given the seed. The planted universe puts
known structure in the data (clusters driven by one latent walk, plus
independent walkers) so graph construction can be judged against ground
truth; the tick builders construct prices whose leash deviations are
controlled by design (in-band baselines, exact-magnitude node shocks,
turbulent days breaking a known edge subset).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Mapping, Sequence

import numpy as np

from . import graph as graphmod
from .coint import PairResult, PriceSeries, coint_fit
from .errors import DegeneratePair
from .graph import CointGraph, neighbors
from .pipeline import PriceTable, WindowSlice, slice_window
from .stats import ols_fit

BASE_LEVEL = 200.0
CLUSTER_NOISE = 1.0
DEFAULT_START = date(2015, 1, 2)

# baseline_tick guarantees every edge deviation stays under this many sigmas
# so that shock margins computed on top of it are airtight
BASELINE_GUARD = 0.9


def _calendar(n_days: int, start: date) -> tuple[date, ...]:
    return tuple(start + timedelta(days=i) for i in range(n_days))


@dataclass(frozen=True)
class PlantedUniverse:
    table: PriceTable
    clusters: tuple[tuple[str, ...], ...]
    independents: tuple[str, ...]


def planted_universe(
    n_clusters: int = 1,
    cluster_size: int = 5,
    n_independent: int = 5,
    n_days: int = 250,
    seed: int = 0,
    start: date = DEFAULT_START,
) -> PlantedUniverse:
    """Generate a universe with known cointegration structure.

    Each cluster is driven by its own latent random walk: member prices are
    independent-noise affine copies of the latent level, so every ordered
    within-cluster pair is cointegrated by construction. Independent symbols
    are plain random walks tied to nothing.
    """
    rng = np.random.default_rng(seed)
    columns: dict[str, np.ndarray] = {}
    clusters: list[tuple[str, ...]] = []
    for c in range(n_clusters):
        latent = BASE_LEVEL + np.cumsum(rng.standard_normal(n_days))
        members = []
        for i in range(cluster_size):
            symbol = f"C{c}S{i:02d}"
            a = rng.uniform(10.0, 60.0)
            b = rng.uniform(0.5, 2.0)
            columns[symbol] = a + b * latent + CLUSTER_NOISE * rng.standard_normal(n_days)
            members.append(symbol)
        clusters.append(tuple(members))
    independents = []
    for i in range(n_independent):
        symbol = f"X{i:02d}"
        columns[symbol] = BASE_LEVEL + np.cumsum(rng.standard_normal(n_days))
        independents.append(symbol)

    symbols = tuple(sorted(columns))
    prices = np.column_stack([columns[s] for s in symbols])
    if prices.min() <= 0.0:
        raise RuntimeError("generated universe produced a non-positive price; adjust scale")
    table = PriceTable(calendar=_calendar(n_days, start), symbols=symbols, prices=prices)
    return PlantedUniverse(table=table, clusters=tuple(clusters), independents=tuple(independents))


def universe_series(table: PriceTable) -> WindowSlice:
    """Full-range window slice of a (gap-free) generated table."""
    return slice_window(table, table.calendar[0], table.calendar[-1])


def planted_graph(series: Sequence[PriceSeries], clusters: Sequence[Sequence[str]]) -> CointGraph:
    """Fit and wire every ordered within-cluster pair, bypassing admission.

    Produces a graph whose topology is the planted ground truth (all
    within-cluster ordered pairs) with genuinely fitted models, which is
    what shock-scenario tests need: known structure, real numbers.
    """
    by_symbol = {p.symbol: p for p in series}
    results: list[PairResult] = []
    for cluster in clusters:
        for src in cluster:
            for dst in cluster:
                if src == dst:
                    continue
                try:
                    model = coint_fit(by_symbol[src], by_symbol[dst])
                except DegeneratePair:
                    continue
                results.append(PairResult(src, dst, model, admitted=True))
    return graphmod.build_graph(results, epsilon=1.0, symbols=[p.symbol for p in series])


def _role_coefficient(edge, node_id: int) -> float:
    """How much one unit of node price moves the edge residual."""
    return 1.0 if edge.dst == node_id else abs(edge.model.beta1)


def baseline_tick(g: CointGraph, fallback: Mapping[str, float]) -> dict[str, float]:
    """Solve for a tick whose every edge deviation is deep inside the leash.

    Weighted least squares over node prices: each edge contributes the
    constraint (dst - beta1*src - beta0 - resid_mean)/resid_std = 0, plus a
    weak anchor pulling every node toward its fallback price (which also
    pins isolated nodes). Raises if the solution leaves any edge beyond
    BASELINE_GUARD sigmas — planted graphs stay well under it.
    """
    n = g.n_nodes
    edge_ids = sorted(g.edges)
    anchor = 1e-3
    rows = []
    rhs = []
    for eid in edge_ids:
        e = g.edges[eid]
        m = e.model
        row = np.zeros(n)
        row[e.dst] = 1.0 / m.resid_std
        row[e.src] = -m.beta1 / m.resid_std
        rows.append(row)
        rhs.append((m.beta0 + m.resid_mean) / m.resid_std)
    for node in g.nodes:
        row = np.zeros(n)
        row[node.id] = anchor
        rows.append(row)
        rhs.append(anchor * float(fallback[node.symbol]))
    design = np.vstack(rows)
    target = np.array(rhs)
    prices, *_ = np.linalg.lstsq(design, target, rcond=None)

    for eid in edge_ids:
        e = g.edges[eid]
        m = e.model
        deviation = abs(prices[e.dst] - m.beta0 - m.beta1 * prices[e.src] - m.resid_mean)
        if deviation / m.resid_std > BASELINE_GUARD:
            raise RuntimeError(
                f"baseline tick leaves edge {eid} at {deviation / m.resid_std:.2f} sigmas; "
                "graph is too inconsistent for scenario generation"
            )
    if prices.min() <= 0.0:
        raise RuntimeError("baseline tick produced a non-positive price")
    return {node.symbol: float(prices[node.id]) for node in g.nodes}


def jittered_tick(
    g: CointGraph,
    base: Mapping[str, float],
    seed: int,
    budget_sigmas: float = 1.0,
) -> dict[str, float]:
    """Perturb a baseline tick while keeping every edge in-band.

    Each node moves at most half the budget against its most sensitive
    incident edge, so no edge deviation shifts by more than budget_sigmas
    from the baseline (which itself is under BASELINE_GUARD).
    """
    rng = np.random.default_rng(seed)
    tick = dict(base)
    for node in g.nodes:
        incident = neighbors(g, node.id)
        price = tick[node.symbol]
        if incident:
            limit = min(
                e.model.resid_std / max(_role_coefficient(e, node.id), 1e-12)
                for e, _ in incident
            )
            delta = rng.uniform(-1.0, 1.0) * 0.5 * budget_sigmas * limit
        else:
            delta = rng.uniform(-1.0, 1.0) * 0.005 * price
        tick[node.symbol] = price + delta
    return tick


def shock_delta(g: CointGraph, node_id: int, sigmas: float, break_all: bool) -> float:
    """Price delta for one node: large enough to push every incident edge
    beyond `sigmas` (break_all) or small enough that even the most
    sensitive incident edge moves exactly `sigmas` (break_none)."""
    incident = neighbors(g, node_id)
    if not incident:
        raise ValueError(f"node {node_id} has no incident edges to shock")
    per_edge = [
        sigmas * e.model.resid_std / max(_role_coefficient(e, node_id), 1e-12)
        for e, _ in incident
    ]
    return max(per_edge) if break_all else min(per_edge)


def shock_tick(
    g: CointGraph,
    base: Mapping[str, float],
    symbol: str,
    sigmas: float = 6.0,
    break_all: bool = True,
) -> tuple[dict[str, float], tuple[int, ...]]:
    """Shock one symbol on top of a baseline tick.

    With break_all the returned expected-broken set is every edge incident
    to the node (each is pushed at least `sigmas` minus the baseline guard
    past its mean); otherwise the shock tops out at `sigmas` on the most
    sensitive edge and the expected set is empty.
    """
    node = g.node_of(symbol)
    delta = shock_delta(g, node.id, sigmas, break_all)
    tick = dict(base)
    tick[symbol] = tick[symbol] + delta
    if break_all:
        expected = tuple(sorted(e.id for e, _ in neighbors(g, node.id)))
    else:
        expected = ()
    return tick, expected


def turbulent_tick(
    g: CointGraph,
    base: Mapping[str, float],
    fraction: float = 0.25,
    seed: int = 0,
    sigmas: float = 6.0,
) -> tuple[dict[str, float], tuple[int, ...]]:
    """Break a seeded subset of roughly `fraction` of all edges at once.

    Picks a seeded independent set of nodes (no two adjacent, so their
    incident edge sets are disjoint and shocks cannot cancel) until the
    union of incident edges covers the requested fraction, then applies a
    break-all shock to each. Returns the tick and the exact broken set.
    """
    if not g.edges:
        raise ValueError("graph has no edges to break")
    rng = np.random.default_rng(seed)
    order = list(range(g.n_nodes))
    rng.shuffle(order)
    target = fraction * g.n_edges
    picked: list[int] = []
    blocked: set[int] = set()
    covered: set[int] = set()
    for nid in order:
        if len(covered) >= target:
            break
        if nid in blocked:
            continue
        incident = neighbors(g, nid)
        if not incident:
            continue
        picked.append(nid)
        blocked.add(nid)
        for e, nbr in incident:
            blocked.add(nbr)
            covered.add(e.id)
    if len(covered) < target:
        raise RuntimeError(
            f"could not cover {fraction:.0%} of edges with an independent node set "
            f"(got {len(covered)}/{g.n_edges})"
        )
    tick = dict(base)
    for nid in picked:
        tick[g.nodes[nid].symbol] += shock_delta(g, nid, sigmas, break_all=True)
    return tick, tuple(sorted(covered))


@dataclass(frozen=True)
class RecomputeScenario:
    """A pair fit on one window, an alert-raising tick, and the trailing
    refit window ending at that tick."""

    fit_x: PriceSeries
    fit_y: PriceSeries
    tick: dict[str, float]
    refit_window: tuple[PriceSeries, PriceSeries]


def transient_scenario(seed: int, n: int = 400, spike_sigmas: float = 6.0) -> RecomputeScenario:
    """A cointegrated pair hit by a one-tick spike that then reverts.

    The refit window (trailing n ticks ending at the spike) is dominated by
    healthy data, so the refit should re-admit the pair.
    """
    rng = np.random.default_rng(seed)
    x = BASE_LEVEL + np.cumsum(rng.standard_normal(n + 1))
    a = rng.uniform(10.0, 60.0)
    b = rng.uniform(0.5, 2.0)
    y = a + b * x + rng.standard_normal(n + 1)
    fit_x = PriceSeries("SRC", x[:n], "fit")
    fit_y = PriceSeries("DST", y[:n], "fit")
    model = ols_fit(fit_x.series, fit_y.series)
    spike_y = model.beta0 + model.beta1 * x[n] + model.resid_mean + spike_sigmas * model.resid_std
    tick = {"SRC": float(x[n]), "DST": float(spike_y)}
    refit_x = PriceSeries("SRC", x[1 : n + 1], "refit")
    refit_y = PriceSeries("DST", np.append(y[1:n], spike_y), "refit")
    return RecomputeScenario(fit_x, fit_y, tick, (refit_x, refit_y))


def regime_break_scenario(
    seed: int,
    n: int = 400,
    drift: float = 0.3,
    old_fraction: float = 0.2,
) -> RecomputeScenario:
    """A pair whose dst abandons the relation and walks off with drift.

    The refit window mixes the tail of the old regime (old_fraction) with
    the walk-off, so the refit should reject and the edge should be removed.
    """
    rng = np.random.default_rng(seed)
    new_len = int(round((1.0 - old_fraction) * n))
    total = n + new_len
    x = BASE_LEVEL + np.cumsum(rng.standard_normal(total))
    a = rng.uniform(10.0, 60.0)
    b = rng.uniform(0.5, 2.0)
    y = a + b * x + rng.standard_normal(total)
    walk = drift * np.arange(1, new_len + 1) + np.cumsum(rng.standard_normal(new_len))
    y[n:] = y[n - 1] + walk
    if y.min() <= 0.0 or x.min() <= 0.0:
        y = y - min(0.0, y.min()) + 1.0
        x = x - min(0.0, x.min()) + 1.0
    fit_x = PriceSeries("SRC", x[:n], "fit")
    fit_y = PriceSeries("DST", y[:n], "fit")
    tick = {"SRC": float(x[total - 1]), "DST": float(y[total - 1])}
    refit_x = PriceSeries("SRC", x[total - n :], "refit")
    refit_y = PriceSeries("DST", y[total - n :], "refit")
    return RecomputeScenario(fit_x, fit_y, tick, (refit_x, refit_y))


def pair_graph(fit_x: PriceSeries, fit_y: PriceSeries) -> CointGraph:
    """Two-node graph with the single fitted edge SRC -> DST."""
    model = coint_fit(fit_x, fit_y)
    result = PairResult(fit_x.symbol, fit_y.symbol, model, admitted=True)
    return graphmod.build_graph([result], epsilon=1.0, symbols=[fit_x.symbol, fit_y.symbol])
