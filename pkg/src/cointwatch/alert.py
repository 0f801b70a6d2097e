"""Leash checking, the alert vertex program, and the per-tick pipeline.

Per tick: update prices -> one vertex-centric job broadcasts fresh prices
along every incident edge and each node leash-checks the edges it can see
-> the local alerts are folded into one report and a global health verdict
-> optionally, edges observed outside their leash are refit on a trailing
window and either re-admitted or dropped.

The price broadcast is realized as the job's initial-messages policy, so a
single superstep (the configured default) both receives neighbor prices and
evaluates the checks: one vertex job per tick, one barrier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import graph as graphmod
from .coint import PriceSeries, coint_fit
from .engine import SuperstepResult, VertexMessage, VertexProgram, run_supersteps
from .errors import (
    CointwatchError,
    DegeneratePair,
    InsufficientWindow,
    TooShort,
    ZeroSigma,
)
from .graph import ALERTED, CLEAR, CointGraph, neighbors

RECOMPUTE_OFF = "off"
RECOMPUTE_ON_BREAK = "onbreak"


@dataclass(frozen=True)
class AlertConfig:
    """Knobs for the alertness pipeline.

    sigma_k: leash width in residual standard deviations (alert on strictly
        greater deviation).
    epsilon: p-value threshold used when refitting broken edges.
    global_fraction: alerted-node fraction above which the default health
        reducer declares a global alert (an arbitrary, documented default;
        set per deployment).
    max_supersteps: vertex-job cap per tick.
    latch_alerts: when True an alerted node stays alerted even if later
        ticks check clean; default re-evaluates every tick.
    """

    sigma_k: float = 3.0
    epsilon: float = 0.05
    global_fraction: float = 0.2
    max_supersteps: int = 1
    latch_alerts: bool = False

    def __post_init__(self):
        if not self.sigma_k > 0:
            raise ValueError(f"sigma_k must be > 0, got {self.sigma_k}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0.0 <= self.global_fraction <= 1.0:
            raise ValueError(f"global_fraction must be in [0, 1], got {self.global_fraction}")
        if self.max_supersteps < 1:
            raise ValueError(f"max_supersteps must be >= 1, got {self.max_supersteps}")


@dataclass(frozen=True)
class AlertReport:
    """One epoch's monitoring outcome.

    broken_edges holds (edge id, observed deviation in sigma units), each
    edge once. node_alerts lists the nodes that personally evaluated a
    failing check this epoch. edges_checked / edges_skipped_stale count
    endpoint evaluations (each edge is scheduled once per endpoint), so
    checked + skipped equals the total evaluations scheduled for the epoch.
    """

    epoch: int
    node_alerts: tuple[int, ...]
    broken_edges: tuple[tuple[int, float], ...]
    global_alert: bool
    edges_checked: int
    edges_skipped_stale: int

    def to_json(self) -> str:
        obj = {
            "epoch": self.epoch,
            "node_alerts": list(self.node_alerts),
            "broken_edges": [[eid, dev] for eid, dev in self.broken_edges],
            "global_alert": self.global_alert,
            "edges_checked": self.edges_checked,
            "edges_skipped_stale": self.edges_skipped_stale,
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def leash_check(model, x_price: float, y_price: float, sigma_k: float):
    """Evaluate one directed pair at current prices.

    Returns (alert, deviation_sigmas) where the deviation is
    |y - (beta0 + beta1*x) - resid_mean| / resid_std and the alert fires on
    strict exceedance of sigma_k (a deviation of exactly k sigma is quiet).
    """
    if model.resid_std <= 0.0:
        raise ZeroSigma("leash check on a zero-sigma model; such edges must be excluded")
    u = y_price - (model.beta0 + model.beta1 * x_price)
    deviation = abs(u - model.resid_mean) / model.resid_std
    return deviation > sigma_k, deviation


def price_broadcast_messages(g: CointGraph) -> list[list[VertexMessage]]:
    """Initial-messages policy: every fresh node sends its last price along
    every incident edge (stale nodes stay silent)."""
    inboxes: list[list[VertexMessage]] = [[] for _ in range(g.n_nodes)]
    for eid in sorted(g.edges):
        e = g.edges[eid]
        if g.is_fresh(e.src):
            inboxes[e.dst].append(VertexMessage(e.src, g.nodes[e.src].last_price))
        if g.is_fresh(e.dst):
            inboxes[e.src].append(VertexMessage(e.dst, g.nodes[e.dst].last_price))
    return inboxes


@dataclass(frozen=True)
class AlertVertexState:
    """Per-node outcome of one tick's checks."""

    node: graphmod.SymbolNode
    failed: tuple[tuple[int, float], ...] = ()
    checked: int = 0
    skipped: int = 0
    evaluated: bool = False


class AlertVertexProgram(VertexProgram):
    """Each node leash-checks every incident edge for which both endpoint
    prices are fresh this epoch; any failing check raises its local alert.

    The program is bound to one published graph version for topology and
    models; neighbor prices arrive as messages."""

    def __init__(self, g: CointGraph, config: AlertConfig):
        self.graph = g
        self.config = config

    def init_state(self, node):
        return AlertVertexState(node=node)

    def compute(self, state: AlertVertexState, inbox, epoch):
        node = state.node
        prices = {m.src: m.payload for m in inbox}
        self_fresh = self.graph.is_fresh(node.id)
        checked = 0
        skipped = 0
        failed: list[tuple[int, float]] = []
        for edge, nbr in neighbors(self.graph, node.id):
            if not self_fresh or nbr not in prices:
                skipped += 1
                continue
            if edge.src == node.id:
                x_price, y_price = node.last_price, prices[nbr]
            else:
                x_price, y_price = prices[nbr], node.last_price
            alert, deviation = leash_check(edge.model, x_price, y_price, self.config.sigma_k)
            checked += 1
            if alert:
                failed.append((edge.id, deviation))

        evaluated = checked > 0
        if evaluated:
            if failed:
                new_alert = ALERTED
            elif self.config.latch_alerts and node.alert_state == ALERTED:
                new_alert = ALERTED
            else:
                new_alert = CLEAR
            history = node.alert_history + ((epoch, new_alert),)
            node = replace(node, alert_state=new_alert, alert_history=history)
        new_state = AlertVertexState(
            node=node,
            failed=tuple(failed),
            checked=checked,
            skipped=skipped,
            evaluated=evaluated,
        )
        return new_state, [], True


def alert_vertex_program(g: CointGraph, config: AlertConfig) -> AlertVertexProgram:
    return AlertVertexProgram(g, config)


HealthFn = Callable[[CointGraph, AlertReport, AlertConfig], bool]


def global_reduce(
    g: CointGraph,
    report: AlertReport,
    config: AlertConfig,
    health_fn: HealthFn | None = None,
) -> bool:
    """Fold local alerts into the global verdict.

    Default health function: alert iff the alerted-node fraction strictly
    exceeds config.global_fraction. Pass health_fn to plug in a different
    policy (sector-weighted, severity-based, ...).
    """
    if health_fn is not None:
        return bool(health_fn(g, report, config))
    if g.n_nodes == 0:
        return False
    return len(report.node_alerts) / g.n_nodes > config.global_fraction


def assemble_report(
    g: CointGraph,
    states: Sequence[AlertVertexState],
    config: AlertConfig,
    health_fn: HealthFn | None = None,
) -> AlertReport:
    """Merge per-node outcomes into the epoch report (each broken edge
    recorded once, both observing endpoints alerted)."""
    broken: dict[int, float] = {}
    node_alerts: list[int] = []
    checked = 0
    skipped = 0
    for state in states:
        checked += state.checked
        skipped += state.skipped
        if state.failed:
            node_alerts.append(state.node.id)
        for eid, deviation in state.failed:
            broken.setdefault(eid, deviation)
    partial = AlertReport(
        epoch=g.epoch,
        node_alerts=tuple(sorted(node_alerts)),
        broken_edges=tuple(sorted(broken.items())),
        global_alert=False,
        edges_checked=checked,
        edges_skipped_stale=skipped,
    )
    return replace(partial, global_alert=global_reduce(g, partial, config, health_fn))


@dataclass(frozen=True)
class RecomputeSummary:
    refitted: tuple[int, ...] = ()
    removed: tuple[int, ...] = ()


def selective_recompute(
    g: CointGraph,
    broken: Iterable[int],
    window: Sequence[PriceSeries],
    config: AlertConfig,
) -> tuple[CointGraph, RecomputeSummary]:
    """Refit only the broken edges on the supplied window.

    An edge whose refit clears pvalue < epsilon gets the new model (broken
    flag cleared); one that does not is removed from the graph. Edges not
    listed are left untouched (same objects, same bytes).
    """
    by_symbol = {p.symbol: p for p in window}
    refitted: list[int] = []
    removed: list[int] = []
    out = g
    for eid in sorted(set(broken)):
        if eid not in g.edges:
            raise CointwatchError(f"edge id {eid} is not in the graph")
        edge = g.edges[eid]
        src_sym = g.nodes[edge.src].symbol
        dst_sym = g.nodes[edge.dst].symbol
        for sym in (src_sym, dst_sym):
            if sym not in by_symbol:
                raise InsufficientWindow(f"window does not cover symbol {sym!r}")
        try:
            model = coint_fit(by_symbol[src_sym], by_symbol[dst_sym])
        except TooShort as exc:
            raise InsufficientWindow(f"{src_sym}->{dst_sym}: {exc}") from exc
        except DegeneratePair:
            removed.append(eid)
            continue
        if model.pvalue < config.epsilon:
            out = graphmod.replace_model(out, eid, model)
            refitted.append(eid)
        else:
            removed.append(eid)
    if removed:
        out = graphmod.remove_edges(out, removed)
    return out, RecomputeSummary(refitted=tuple(refitted), removed=tuple(removed))


@dataclass
class _History:
    """Trailing per-symbol price window used for selective refits."""

    length: int
    symbols: tuple[str, ...]
    columns: dict[str, list[float]] = field(default_factory=dict)

    @classmethod
    def from_series(cls, window: Sequence[PriceSeries]):
        if not window:
            return None
        length = len(window[0])
        cols = {p.symbol: list(p.values) for p in window}
        return cls(length=length, symbols=tuple(p.symbol for p in window), columns=cols)

    def push(self, g: CointGraph):
        for sym in self.symbols:
            node = g.node_of(sym)
            col = self.columns[sym]
            col.append(node.last_price if node.last_price is not None else col[-1])
            if len(col) > self.length:
                del col[0]

    def window(self, epoch: int) -> list[PriceSeries]:
        wid = f"trailing-{self.length}@{epoch}"
        return [PriceSeries(sym, self.columns[sym], wid) for sym in self.symbols]


class TickStream:
    """Iterator over per-tick AlertReports; .graph tracks the latest
    published graph version (refits and removals included)."""

    def __init__(
        self,
        g: CointGraph,
        ticks: Iterable[Mapping[str, float]],
        config: AlertConfig,
        recompute_policy: str = RECOMPUTE_OFF,
        workers: int = 1,
        history: Sequence[PriceSeries] | None = None,
        health_fn: HealthFn | None = None,
    ):
        if recompute_policy not in (RECOMPUTE_OFF, RECOMPUTE_ON_BREAK):
            raise ValueError(f"unknown recompute policy {recompute_policy!r}")
        self.graph = g
        self.config = config
        self.policy = recompute_policy
        self.workers = workers
        self.health_fn = health_fn
        self.last_result: SuperstepResult | None = None
        self.last_recompute: RecomputeSummary | None = None
        self._ticks = iter(ticks)
        self._history = _History.from_series(history) if history else None

    def __iter__(self) -> Iterator[AlertReport]:
        return self

    def __next__(self) -> AlertReport:
        tick = next(self._ticks)
        try:
            return self._step(tick)
        except CointwatchError as exc:
            message = f"tick for epoch {self.graph.epoch + 1} failed: {exc}"
            try:
                wrapped = type(exc)(message)
            except TypeError:
                wrapped = CointwatchError(message)
            raise wrapped from exc

    def _step(self, tick: Mapping[str, float]) -> AlertReport:
        g = graphmod.update_prices(self.graph, tick)
        program = AlertVertexProgram(g, self.config)
        states, result = run_supersteps(
            g,
            program,
            max_supersteps=self.config.max_supersteps,
            initial_messages=price_broadcast_messages,
            workers=self.workers,
        )
        self.last_result = result
        report = assemble_report(g, states, self.config, self.health_fn)

        node_updates = {s.node.id: s.node for s in states if s.evaluated}
        g = graphmod.with_nodes(g, node_updates)
        broken_ids = [eid for eid, _ in report.broken_edges]
        g = graphmod.mark_broken(g, broken_ids)

        if self._history is not None:
            self._history.push(g)

        self.last_recompute = None
        if self.policy == RECOMPUTE_ON_BREAK and broken_ids:
            if self._history is None:
                raise InsufficientWindow(
                    "recompute policy is on but no price history window was provided"
                )
            window = self._history.window(g.epoch)
            g, summary = selective_recompute(g, broken_ids, window, self.config)
            self.last_recompute = summary

        self.graph = g
        return report


def tick_loop(
    g: CointGraph,
    ticks: Iterable[Mapping[str, float]],
    config: AlertConfig,
    recompute_policy: str = RECOMPUTE_OFF,
    workers: int = 1,
    history: Sequence[PriceSeries] | None = None,
    health_fn: HealthFn | None = None,
) -> TickStream:
    """Drive the alertness pipeline over an ordered tick stream.

    Returns a TickStream yielding one AlertReport per tick, in order; the
    whole run is deterministic for fixed inputs, config, and seeds. A
    failing tick aborts iteration with the epoch number in the diagnostic.
    """
    return TickStream(
        g,
        ticks,
        config,
        recompute_policy=recompute_policy,
        workers=workers,
        history=history,
        health_fn=health_fn,
    )


def write_reports(reports: Iterable[AlertReport], fp) -> int:
    """Serialize reports as line-delimited JSON; returns the line count."""
    count = 0
    for report in reports:
        fp.write(report.to_json() + "\n")
        count += 1
    return count
