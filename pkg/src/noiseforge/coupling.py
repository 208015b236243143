"""Device coupling maps: which qubit pairs support two-qubit gates."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass


@dataclass(frozen=True)
class CouplingMap:
    qubit_count: int
    edges: tuple[tuple[int, int], ...]  # sorted pairs, deduplicated
    name: str = ""

    def __post_init__(self):
        norm = sorted({(min(a, b), max(a, b)) for a, b in self.edges})
        for a, b in norm:
            if a == b:
                raise ValueError("self-loop edge")
            if a < 0 or b >= self.qubit_count:
                raise ValueError(f"edge ({a},{b}) out of range")
        object.__setattr__(self, "edges", tuple(norm))
        if not self._connected():
            raise ValueError("coupling map must be connected")

    def _connected(self) -> bool:
        if self.qubit_count == 1:
            return True
        seen = {0}
        frontier = deque([0])
        adj = self.adjacency()
        while frontier:
            q = frontier.popleft()
            for nb in adj[q]:
                if nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        return len(seen) == self.qubit_count

    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {q: [] for q in range(self.qubit_count)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {q: tuple(sorted(ns)) for q, ns in adj.items()}

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in set(self.edges)

    def shortest_path(self, src: int, dst: int) -> list[int]:
        """BFS shortest path; ties broken toward lower qubit indices."""
        if src == dst:
            return [src]
        adj = self.adjacency()
        prev: dict[int, int] = {src: -1}
        frontier = deque([src])
        while frontier:
            q = frontier.popleft()
            for nb in adj[q]:  # adjacency sorted -> lexicographic tie-break
                if nb not in prev:
                    prev[nb] = q
                    if nb == dst:
                        path = [dst]
                        while path[-1] != src:
                            path.append(prev[path[-1]])
                        return path[::-1]
                    frontier.append(nb)
        raise ValueError(f"no path between {src} and {dst}")


BUILTIN_COUPLINGS = {
    "t-shape": ((0, 1), (1, 2), (1, 3), (3, 4)),
    "bowtie": ((0, 1), (0, 2), (1, 2), (2, 3), (2, 4)),
    "line": ((0, 1), (1, 2), (2, 3), (3, 4)),
}


def builtin_coupling(name: str) -> CouplingMap:
    if name not in BUILTIN_COUPLINGS:
        raise KeyError(f"unknown builtin coupling {name!r}")
    return CouplingMap(5, BUILTIN_COUPLINGS[name], name)


def coupling_to_text(cmap: CouplingMap) -> str:
    lines = [f"name {cmap.name or 'custom'}", f"qubits {cmap.qubit_count}"]
    lines.extend(f"edge {a} {b}" for a, b in cmap.edges)
    return "\n".join(lines) + "\n"


def coupling_from_text(text: str) -> CouplingMap:
    name = ""
    qubits = None
    edges = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "name":
            name = tokens[1]
        elif tokens[0] == "qubits":
            qubits = int(tokens[1])
        elif tokens[0] == "edge":
            edges.append((int(tokens[1]), int(tokens[2])))
        else:
            raise ValueError(f"bad coupling line: {line!r}")
    if qubits is None:
        raise ValueError("missing 'qubits' line")
    return CouplingMap(qubits, tuple(edges), name)


def resolve_coupling(spec: str) -> CouplingMap:
    """Accept a builtin name or a path to a coupling text file."""
    if spec in BUILTIN_COUPLINGS:
        return builtin_coupling(spec)
    with open(spec, "r", encoding="ascii") as fh:
        return coupling_from_text(fh.read())
