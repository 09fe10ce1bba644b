"""Layered forward chase, traceback and linearisation.

A fact's layer is the sweep in which it was first derived (initial facts are
layer 0).  Sweep ``k`` fires every theorem on the facts of layers ``<= k``
and then runs one solver round over the same snapshot; everything new lands
in layer ``k + 1``.  Rediscoveries only add alternative hyperedges, and only
when all of their premises sit strictly below the fact's layer, so the graph
is acyclic by construction.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Iterable

from geogen.deduction.matching import (
    Binding,
    apply_theorem,
    binding_text,
    match_premises,
    parse_binding,
)
from geogen.deduction.solver import SOLVER_NAMES, solve_equations
from geogen.deduction.state import Fact, State, parse_fact
from geogen.errors import CyclicSubgraph, LimitExceeded, UnknownTarget
from geogen.formal.expr import Equation
from geogen.formal.registry import Registry


@dataclass(frozen=True)
class ChaseLimits:
    max_layers: int = 12
    max_nodes: int = 4000
    max_bindings_per_theorem: int = 2000


@dataclass
class Node:
    id: int
    fact: Fact
    layer: int

    @property
    def text(self) -> str:
        return self.fact.text


@dataclass(frozen=True)
class Hyperedge:
    id: int
    premises: tuple[int, ...]
    theorem_id: int
    binding: str
    conclusion: int

    def sort_key(self, graph: "DeductionGraph") -> tuple:
        return (self.theorem_id, self.binding, tuple(sorted(graph.nodes[p].text for p in self.premises)))


@dataclass
class DeductionGraph:
    nodes: list[Node] = field(default_factory=list)
    edges: list[Hyperedge] = field(default_factory=list)
    index: dict[str, int] = field(default_factory=dict)
    incoming: dict[int, list[int]] = field(default_factory=dict)
    truncated: bool = False

    def add_node(self, fact: Fact, layer: int) -> int:
        nid = len(self.nodes)
        self.nodes.append(Node(nid, fact, layer))
        self.index[fact.text] = nid
        return nid

    def add_edge(self, premises: Iterable[int], theorem_id: int, binding: str, conclusion: int) -> Hyperedge:
        e = Hyperedge(len(self.edges), tuple(premises), theorem_id, binding, conclusion)
        self.edges.append(e)
        self.incoming.setdefault(conclusion, []).append(e.id)
        return e

    def node(self, fact: Fact | str) -> Node:
        t = fact if isinstance(fact, str) else fact.text
        try:
            return self.nodes[self.index[t]]
        except KeyError:
            raise UnknownTarget(f"{t} is not in the graph") from None

    def __contains__(self, fact: Fact | str) -> bool:
        t = fact if isinstance(fact, str) else fact.text
        return t in self.index

    def layer_of(self, fact: Fact | str) -> int:
        return self.node(fact).layer

    @property
    def depth(self) -> int:
        return max((n.layer for n in self.nodes), default=0)

    def facts(self) -> list[Fact]:
        return [n.fact for n in self.nodes]

    def fact_texts(self) -> set[str]:
        return set(self.index)

    def initial(self) -> list[Node]:
        return [n for n in self.nodes if n.layer == 0]

    def state(self, max_layer: int | None = None) -> State:
        return State.from_facts(n.fact for n in self.nodes if max_layer is None or n.layer <= max_layer)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "fact": n.text, "layer": n.layer} for n in self.nodes],
            "edges": [
                {"id": e.id, "premises": list(e.premises), "theorem": e.theorem_id,
                 "binding": e.binding, "conclusion": e.conclusion}
                for e in self.edges
            ],
            "truncated": self.truncated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict, registry: Registry) -> "DeductionGraph":
        g = cls(truncated=bool(data.get("truncated", False)))
        for n in data["nodes"]:
            g.add_node(parse_fact(n["fact"], registry), n["layer"])
        for e in data["edges"]:
            g.add_edge(e["premises"], e["theorem"], e["binding"], e["conclusion"])
        return g


def forward_chase(
    initial: State | Iterable[Fact],
    registry: Registry,
    limits: ChaseLimits | None = None,
) -> DeductionGraph:
    limits = limits or ChaseLimits()
    if limits.max_layers < 1 or limits.max_nodes < 1 or limits.max_bindings_per_theorem < 1:
        raise ValueError("chase limits must be positive")
    facts = initial.facts() if isinstance(initial, State) else list(initial)
    graph = DeductionGraph()
    state = State()
    for f in facts:
        if state.add(f):
            graph.add_node(f, 0)
    fired: set[tuple[int, str]] = set()
    theorems = registry.sorted_theorems()
    k = 0
    while True:
        if k >= limits.max_layers:
            graph.truncated = True
            break
        pending: list[Fact] = []

        def record(fact: Fact, prem_texts: list[str], tid: int, btext: str) -> None:
            prem_ids = [graph.index[t] for t in prem_texts]
            if fact.text in graph.index:
                nid = graph.index[fact.text]
                if all(graph.nodes[p].layer < graph.nodes[nid].layer for p in prem_ids):
                    graph.add_edge(prem_ids, tid, btext, nid)
                return
            nid = graph.add_node(fact, k + 1)
            pending.append(fact)
            graph.add_edge(prem_ids, tid, btext, nid)

        for thm in theorems:
            bindings = match_premises(state, thm, registry)
            if len(bindings) > limits.max_bindings_per_theorem:
                raise LimitExceeded(f"theorem {thm.name} has {len(bindings)} bindings", graph)
            for b in bindings:
                key = (thm.id, binding_text(b))
                if key in fired:
                    continue
                fired.add(key)
                app = apply_theorem(state, thm, b, registry, commit=False)
                for f in app.conclusions:
                    record(f, app.premises, thm.id, key[1])
        result = solve_equations(state.equations.values(), state.values(), max_rounds=1)
        for st in result.steps:
            prem = list(st.equations) + [state.known[s][1] for s in st.substituted]
            record(st.conclusion, list(dict.fromkeys(prem)), st.theorem_id, "")
        if not pending:
            break
        for f in pending:
            state.add(f)
        if len(graph.nodes) > limits.max_nodes:
            raise LimitExceeded(f"graph exceeded {limits.max_nodes} nodes", graph)
        k += 1
    return graph


def chosen_edge(graph: DeductionGraph, nid: int) -> Hyperedge | None:
    """Deterministic derivation choice: lowest theorem id, then binding text."""
    cands = [graph.edges[e] for e in graph.incoming.get(nid, [])]
    if not cands:
        return None
    return min(cands, key=lambda e: e.sort_key(graph))


def traceback(graph: DeductionGraph, target: Fact | str) -> DeductionGraph:
    """Minimal closed subgraph deriving ``target``; node ids are renumbered."""
    root = graph.node(target)
    keep: dict[int, Hyperedge | None] = {}
    stack = [root.id]
    while stack:
        nid = stack.pop()
        if nid in keep:
            continue
        node = graph.nodes[nid]
        e = None if node.layer == 0 else chosen_edge(graph, nid)
        keep[nid] = e
        if e is not None:
            stack.extend(e.premises)
    sub = DeductionGraph()
    remap = {}
    for nid in sorted(keep):
        remap[nid] = sub.add_node(graph.nodes[nid].fact, graph.nodes[nid].layer)
    for nid in sorted(keep):
        e = keep[nid]
        if e is not None:
            sub.add_edge([remap[p] for p in e.premises], e.theorem_id, e.binding, remap[nid])
    return sub


@dataclass(frozen=True)
class ReasoningStep:
    conditions: tuple[Fact, ...]
    theorem_id: int
    theorem_name: str
    binding: str
    conclusion: Fact
    layer: int = 0

    @property
    def binding_map(self) -> Binding:
        return parse_binding(self.binding)

    @property
    def is_algebra(self) -> bool:
        return self.theorem_id in SOLVER_NAMES

    def to_dict(self) -> dict:
        return {
            "conditions": [c.text for c in self.conditions],
            "theorem": {"id": self.theorem_id, "name": self.theorem_name, "binding": self.binding},
            "conclusion": self.conclusion.text,
        }

    @classmethod
    def from_dict(cls, data: dict, registry: Registry) -> "ReasoningStep":
        th = data["theorem"]
        return cls(
            tuple(parse_fact(c, registry) for c in data["conditions"]),
            int(th["id"]), th.get("name", ""), th.get("binding", ""),
            parse_fact(data["conclusion"], registry),
        )


def linearize(subgraph: DeductionGraph, registry: Registry) -> list[ReasoningStep]:
    """Topological order of the derivation steps of a traceback subgraph.

    Ties break on (layer, theorem id, conclusion text).
    """
    edge_of: dict[int, Hyperedge] = {}
    for e in subgraph.edges:
        if e.conclusion in edge_of:
            raise CyclicSubgraph(f"node {e.conclusion} has several derivations; run traceback first")
        edge_of[e.conclusion] = e
    indeg = {n.id: 0 for n in subgraph.nodes}
    users: dict[int, list[int]] = {}
    for nid, e in edge_of.items():
        indeg[nid] = len(set(e.premises))
        for p in set(e.premises):
            users.setdefault(p, []).append(nid)

    def prio(nid: int) -> tuple:
        n = subgraph.nodes[nid]
        tid = edge_of[nid].theorem_id if nid in edge_of else -1
        return (n.layer, tid, n.text)

    heap = [prio(n) + (n,) for n in indeg if indeg[n] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        *_, nid = heapq.heappop(heap)
        order.append(nid)
        for u in users.get(nid, []):
            indeg[u] -= 1
            if indeg[u] == 0:
                heapq.heappush(heap, prio(u) + (u,))
    if len(order) != len(subgraph.nodes):
        raise CyclicSubgraph("subgraph contains a cycle")
    steps = []
    for nid in order:
        e = edge_of.get(nid)
        if e is None:
            continue
        steps.append(ReasoningStep(
            tuple(subgraph.nodes[p].fact for p in e.premises),
            e.theorem_id, registry.theorem_name(e.theorem_id), e.binding,
            subgraph.nodes[nid].fact, subgraph.nodes[nid].layer,
        ))
    return steps


def replay_step(step: ReasoningStep, registry: Registry) -> bool:
    """Re-derive ``step.conclusion`` from ``step.conditions`` alone."""
    local = State.from_facts(step.conditions)
    if step.is_algebra:
        eqs = [c for c in step.conditions if isinstance(c, Equation)]
        try:
            res = solve_equations(eqs, {})
        except Exception:
            return False
        return any(s.conclusion.text == step.conclusion.text for s in res.steps)
    try:
        app = apply_theorem(local, registry.theorem(step.theorem_id), step.binding_map, registry, commit=False)
    except Exception:
        return False
    return any(f.text == step.conclusion.text for f in app.conclusions)
