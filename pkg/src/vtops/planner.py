"""Fastest-route planning over lifts, escalators, stairs, and bridge walks.

The building complex is a directed graph of (building, level) nodes. Edge
costs are frozen at query time: fixed travel for stairs/escalators/walks,
and historical mean wait plus ride time for lifts. Lifts that are not
working contribute no edges.

Route choice is fully deterministic: minimal total seconds, then fewer legs,
then mode preference (stairs first), then lexicographic node order.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Callable, Optional

from .config import SiteConfig
from .model import Direction, LiftId, TimeWindow

log = logging.getLogger(__name__)

Node = tuple[str, int]  # (building code, level)


class UnknownNode(ValueError):
    code = "unknown_node"


class NoRoute(Exception):
    code = "no_route"


class TransportMode(Enum):
    STAIRS = "stairs"
    ESCALATOR = "escalator"
    LIFT = "lift"
    WALK = "walk"


# Tie-break preference between equal-cost, equal-length routes.
_MODE_PRIORITY = {
    TransportMode.STAIRS: 0,
    TransportMode.ESCALATOR: 1,
    TransportMode.LIFT: 2,
    TransportMode.WALK: 3,
}

_STAIRS_ONLY = frozenset({TransportMode.STAIRS, TransportMode.WALK})


@dataclass(frozen=True)
class Edge:
    mode: TransportMode
    frm: Node
    to: Node
    travel_s: float
    dwell_s: float = 0.0
    serving_lift: Optional[LiftId] = None

    def __post_init__(self):
        if self.mode is TransportMode.LIFT and self.serving_lift is None:
            raise ValueError("lift edges must name their serving lift")


@dataclass(frozen=True)
class TransportGraph:
    nodes: frozenset[Node]
    adjacency: dict[Node, tuple[Edge, ...]]

    def edges_from(self, node: Node) -> tuple[Edge, ...]:
        return self.adjacency.get(node, ())

    def all_edges(self) -> list[Edge]:
        return [e for node in sorted(self.adjacency) for e in self.adjacency[node]]

    def isolated_nodes(self) -> list[Node]:
        touched = set()
        for edges in self.adjacency.values():
            for e in edges:
                touched.add(e.frm)
                touched.add(e.to)
        return sorted(self.nodes - touched)


def build_graph(site: SiteConfig) -> TransportGraph:
    """Materialize the configured topology; warns about unreachable levels."""
    nodes: set[Node] = set()
    adjacency: dict[Node, list[Edge]] = {}

    def add(edge: Edge):
        adjacency.setdefault(edge.frm, []).append(edge)

    for code in sorted(site.buildings):
        b = site.buildings[code]
        for level in range(b.min_level, b.max_level + 1):
            nodes.add((code, level))
        for span in b.stairs:
            for level in range(span.from_level, span.to_level):
                cost = span.travel_s_per_level
                add(Edge(TransportMode.STAIRS, (code, level), (code, level + 1), cost))
                add(Edge(TransportMode.STAIRS, (code, level + 1), (code, level), cost))
        for esc in b.escalators:
            add(Edge(TransportMode.ESCALATOR, (code, esc.from_level), (code, esc.to_level), esc.travel_s))
        for lift in b.lifts:
            for a in lift.served_levels:
                for c in lift.served_levels:
                    if a == c:
                        continue
                    add(
                        Edge(
                            TransportMode.LIFT,
                            (code, a),
                            (code, c),
                            travel_s=abs(c - a) * lift.travel_s_per_level,
                            dwell_s=lift.door_dwell_s,
                            serving_lift=lift.lift,
                        )
                    )
    for bridge in site.bridges:
        a: Node = (bridge.building_a, bridge.level_a)
        b_: Node = (bridge.building_b, bridge.level_b)
        add(Edge(TransportMode.WALK, a, b_, bridge.walk_s))
        add(Edge(TransportMode.WALK, b_, a, bridge.walk_s))

    graph = TransportGraph(
        nodes=frozenset(nodes),
        adjacency={node: tuple(edges) for node, edges in sorted(adjacency.items())},
    )
    isolated = graph.isolated_nodes()
    if isolated:
        log.warning("site has %d level(s) no edge reaches: %s", len(isolated), isolated)
    return graph


@dataclass(frozen=True)
class RouteQuery:
    origin: Node
    destination: Node
    at: datetime
    wait_window: TimeWindow


@dataclass(frozen=True)
class EdgeCostModel:
    """Resolves a lift edge's expected wait and availability at query time.

    ``mean_wait`` returns the historical mean wait in seconds for (building,
    direction), or None when there is no data; ``is_working`` gates lift
    edges on live status.
    """

    mean_wait: Callable[[str, Direction], Optional[float]]
    is_working: Callable[[LiftId], bool]
    default_lift_wait_s: float = 45.0


def static_cost_model(default_wait_s: float = 45.0) -> EdgeCostModel:
    """All lifts working, no history: every lift waits the configured default."""
    return EdgeCostModel(
        mean_wait=lambda building, direction: None,
        is_working=lambda lift: True,
        default_lift_wait_s=default_wait_s,
    )


def edge_cost(edge: Edge, model: EdgeCostModel) -> Optional[tuple[float, float]]:
    """(expected_wait_s, travel_s) for an edge, or None when unavailable."""
    if edge.mode is not TransportMode.LIFT:
        return (0.0, edge.travel_s)
    assert edge.serving_lift is not None
    if not model.is_working(edge.serving_lift):
        return None
    direction = Direction.UP if edge.to[1] > edge.frm[1] else Direction.DOWN
    wait = model.mean_wait(edge.frm[0], direction)
    if wait is None:
        wait = model.default_lift_wait_s
    return (wait, edge.travel_s + edge.dwell_s)


@dataclass(frozen=True)
class RouteLeg:
    mode: TransportMode
    frm: Node
    to: Node
    expected_wait_s: float
    travel_s: float


@dataclass(frozen=True)
class RoutePlan:
    legs: tuple[RouteLeg, ...]
    total_s: float
    stairs_advisory: bool = False
    stairs_total_s: Optional[float] = None


@dataclass(order=True)
class _Label:
    """Comparable search label: cost, then legs, then modes, then node path."""

    cost: float
    legs: int
    modes: tuple[int, ...]
    path: tuple[Node, ...]
    edges: tuple[Edge, ...] = field(compare=False)
    waits: tuple[float, ...] = field(compare=False)
    travels: tuple[float, ...] = field(compare=False)


def _search(
    graph: TransportGraph,
    origin: Node,
    destination: Node,
    model: EdgeCostModel,
    allowed_modes: Optional[frozenset[TransportMode]] = None,
) -> Optional[_Label]:
    start = _Label(cost=0.0, legs=0, modes=(), path=(origin,), edges=(), waits=(), travels=())
    best: dict[Node, _Label] = {origin: start}
    frontier: list[_Label] = [start]
    settled: set[Node] = set()
    while frontier:
        label = heapq.heappop(frontier)
        node = label.path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == destination:
            return label
        for edge in graph.edges_from(node):
            if allowed_modes is not None and edge.mode not in allowed_modes:
                continue
            costed = edge_cost(edge, model)
            if costed is None:
                continue
            wait, travel = costed
            candidate = _Label(
                cost=label.cost + wait + travel,
                legs=label.legs + 1,
                modes=label.modes + (_MODE_PRIORITY[edge.mode],),
                path=label.path + (edge.to,),
                edges=label.edges + (edge,),
                waits=label.waits + (wait,),
                travels=label.travels + (travel,),
            )
            incumbent = best.get(edge.to)
            if incumbent is None or candidate < incumbent:
                best[edge.to] = candidate
                heapq.heappush(frontier, candidate)
    return None


def _to_plan(label: _Label) -> RoutePlan:
    legs = tuple(
        RouteLeg(
            mode=edge.mode,
            frm=edge.frm,
            to=edge.to,
            expected_wait_s=wait,
            travel_s=travel,
        )
        for edge, wait, travel in zip(label.edges, label.waits, label.travels)
    )
    return RoutePlan(legs=legs, total_s=label.cost)


def plan_route(
    graph: TransportGraph,
    query: RouteQuery,
    model: EdgeCostModel,
    stairs_advisory_margin: float = 0.15,
) -> RoutePlan:
    """The fastest available route, with a stairs hint when one comes close.

    Raises UnknownNode for nodes outside the graph and NoRoute when the
    destination is unreachable over available edges.
    """
    for node in (query.origin, query.destination):
        if node not in graph.nodes:
            raise UnknownNode(f"no level {node[1]} in building {node[0]}")
    if query.origin == query.destination:
        return RoutePlan(legs=(), total_s=0.0)

    label = _search(graph, query.origin, query.destination, model)
    if label is None:
        raise NoRoute(f"no available route from {query.origin} to {query.destination}")
    plan = _to_plan(label)

    if any(leg.mode not in _STAIRS_ONLY for leg in plan.legs):
        stairs_label = _search(graph, query.origin, query.destination, model, _STAIRS_ONLY)
        if stairs_label is not None and stairs_label.cost <= plan.total_s * (1 + stairs_advisory_margin):
            return RoutePlan(
                legs=plan.legs,
                total_s=plan.total_s,
                stairs_advisory=True,
                stairs_total_s=stairs_label.cost,
            )
    return plan
