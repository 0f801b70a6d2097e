"""Synchronous vertex-centric superstep engine.

Standard bulk-synchronous semantics: messages emitted during superstep s are
delivered at the barrier and visible only in superstep s+1; a vertex that
votes to halt goes dormant and is reactivated exactly when a message
arrives. Execution stops when every vertex is halted with nothing in
flight, or when the superstep cap is reached.

Inboxes are presented sorted by sender id, which makes any program that
derives its output from (state, inbox, epoch) alone deterministic under any
worker count or scheduling order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import InvalidDestination
from .graph import CointGraph

# An initial-messages policy maps the graph to per-node inboxes for
# superstep 1; None means every node starts with an empty inbox.
InitialMessages = Callable[[CointGraph], "list[list[VertexMessage]]"]


@dataclass(frozen=True)
class VertexMessage:
    src: int
    payload: object


@dataclass(frozen=True)
class SuperstepResult:
    supersteps_run: int
    halted_all: bool
    messages_sent: tuple[int, ...]


class VertexProgram:
    """Behavioral contract for vertex logic.

    compute must be a pure function of (state, inbox, epoch): same inputs,
    same (new_state, outbox, halt_vote) out — that is what the engine's
    determinism guarantee rests on.
    """

    def init_state(self, node):
        return node

    def compute(self, state, inbox: list[VertexMessage], epoch: int):
        raise NotImplementedError


def run_supersteps(
    g: CointGraph,
    program: VertexProgram,
    max_supersteps: int = 1,
    initial_messages: InitialMessages | None = None,
    workers: int = 1,
) -> tuple[list, SuperstepResult]:
    """Run the program to quiescence or the superstep cap.

    Superstep 1 activates every vertex once, with inboxes taken from the
    initial-messages policy (empty by default). Returns the final state
    vector (indexed by node id) and run statistics.
    """
    if max_supersteps < 1:
        raise ValueError(f"max_supersteps must be >= 1, got {max_supersteps}")
    n = len(g.nodes)
    states = [program.init_state(node) for node in g.nodes]

    if initial_messages is None:
        inboxes: list[list[VertexMessage]] = [[] for _ in range(n)]
    else:
        inboxes = [list(box) for box in initial_messages(g)]
        if len(inboxes) != n:
            raise ValueError("initial-messages policy must cover every node")
        for box in inboxes:
            box.sort(key=lambda m: m.src)

    active = list(range(n))
    messages_sent: list[int] = []
    steps = 0
    epoch = g.epoch

    while steps < max_supersteps and active:
        steps += 1

        def call(nid):
            return program.compute(states[nid], inboxes[nid], epoch)

        if workers > 1 and len(active) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outputs = list(pool.map(call, active))
        else:
            outputs = [call(nid) for nid in active]

        next_inboxes: list[list[VertexMessage]] = [[] for _ in range(n)]
        sent = 0
        awake: set[int] = set()
        for nid, (new_state, outbox, halt) in zip(active, outputs):
            states[nid] = new_state
            if not halt:
                awake.add(nid)
            for dest, payload in outbox:
                if not (isinstance(dest, int) and 0 <= dest < n):
                    raise InvalidDestination(
                        f"vertex {nid} emitted a message to nonexistent node {dest!r}"
                    )
                next_inboxes[dest].append(VertexMessage(nid, payload))
                sent += 1
        messages_sent.append(sent)

        for box in next_inboxes:
            box.sort(key=lambda m: m.src)
        inboxes = next_inboxes
        active = sorted(awake | {i for i in range(n) if inboxes[i]})

    return states, SuperstepResult(
        supersteps_run=steps,
        halted_all=not active,
        messages_sent=tuple(messages_sent),
    )


def audit_determinism(
    g: CointGraph,
    program: VertexProgram,
    max_supersteps: int,
    worker_counts: Sequence[int],
    initial_messages: InitialMessages | None = None,
) -> bool:
    """True iff the final state vectors are byte-identical (by repr) for
    every requested worker count."""
    if not worker_counts:
        raise ValueError("worker_counts must be nonempty")
    frozen = None
    for wc in worker_counts:
        states, _ = run_supersteps(
            g, program, max_supersteps, initial_messages=initial_messages, workers=wc
        )
        snapshot = repr(states)
        if frozen is None:
            frozen = snapshot
        elif snapshot != frozen:
            return False
    return True
