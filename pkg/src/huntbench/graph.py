"""Task dependency graph: stage barriers plus fine-grained edges.

Stage barriers mean every task may read artifacts from any earlier stage.
Fine edges are the explicit must-run dependencies; they are validated to
cross from a lower stage to a strictly higher one, which also keeps the
graph acyclic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .registry import TaskCategory, spec, task_names

STAGE_BARRIERS: tuple[TaskCategory, ...] = (
    TaskCategory.THREAT_ATTRIBUTION,
    TaskCategory.BEHAVIOR_ANALYSIS,
    TaskCategory.PRIORITIZATION,
    TaskCategory.RESPONSE_MITIGATION,
)

#: Fine-grained edges stated by the workflow design; overridable via config.
DEFAULT_FINE_EDGES: tuple[tuple[str, str], ...] = (
    ("FileSystemActivityDetection", "AttackComplexityClassification"),
    ("ExecutionContextAnalysis", "AttackComplexityClassification"),
)


class GraphError(ValueError):
    def __init__(self, code: str, detail: str = "") -> None:
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code


@dataclass
class DependencyGraph:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    stage_barriers: tuple[TaskCategory, ...] = STAGE_BARRIERS
    _incoming: dict[str, set[str]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        for node in self.nodes:
            self._incoming.setdefault(node, set())
        for up, down in self.edges:
            self._incoming[down].add(up)

    def parents(self, task: str) -> set[str]:
        return set(self._incoming.get(task, set()))

    def ancestors(self, task: str) -> set[str]:
        seen: set[str] = set()
        stack = list(self.parents(task))
        while stack:
            node = stack.pop()
            if node not in seen:
                seen.add(node)
                stack.extend(self.parents(node))
        return seen

    def closure(self, selection: set[str]) -> set[str]:
        """Selection plus every ancestor reachable over fine edges."""
        closed = set(selection)
        for task in selection:
            closed |= self.ancestors(task)
        return closed

    def topological_order(self) -> list[str]:
        """Deterministic schedule honoring stage barriers and fine edges.

        Kahn's algorithm with a priority queue keyed on (stage, name), so
        every ready lower-stage task runs before any higher-stage task.
        """
        indegree = {n: len(self._incoming[n]) for n in self.nodes}
        key = lambda n: (spec(n).category.stage_index, n)
        heap = [key(n) + (n,) for n in self.nodes if indegree[n] == 0]
        heapq.heapify(heap)
        result: list[str] = []
        children: dict[str, list[str]] = {n: [] for n in self.nodes}
        for up, down in self.edges:
            children[up].append(down)
        while heap:
            node = heapq.heappop(heap)[-1]
            result.append(node)
            for child in children[node]:
                indegree[child] -= 1
                if indegree[child] == 0:
                    heapq.heappush(heap, key(child) + (child,))
        if len(result) != len(self.nodes):
            raise GraphError("cycle-detected")
        return result


def build_graph(
    edge_config: list[tuple[str, str]] | None = None,
) -> DependencyGraph:
    """Validated graph over all 30 tasks; default edges when config is None."""
    nodes = frozenset(task_names())
    edges = tuple(edge_config) if edge_config is not None else DEFAULT_FINE_EDGES
    for up, down in edges:
        if up not in nodes or down not in nodes:
            raise GraphError("unknown-task", f"({up}, {down})")
        if spec(up).category.stage_index >= spec(down).category.stage_index:
            raise GraphError(
                "backward-edge",
                f"({up}, {down}) does not cross to a strictly higher stage",
            )
    graph = DependencyGraph(nodes=nodes, edges=frozenset(edges))
    graph.topological_order()  # cycle check; unreachable given stage rule
    return graph
