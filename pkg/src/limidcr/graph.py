"""Small DAG helpers over ``{node: parents}`` mappings.

All functions take ``parents`` as a mapping from node id to an iterable of
parent ids, which is the shape both diagrams and credal networks expose.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping


def children_map(parents: Mapping[int, Iterable[int]]) -> dict[int, list[int]]:
    children: dict[int, list[int]] = {v: [] for v in parents}
    for v in sorted(parents):
        for p in parents[v]:
            children.setdefault(p, []).append(v)
    return children


def find_cycle(parents: Mapping[int, Iterable[int]]) -> list[int] | None:
    """Return the nodes of one directed cycle, or None for a DAG."""
    state: dict[int, int] = {}
    stack: list[int] = []

    def visit(v):
        state[v] = 1
        stack.append(v)
        for p in parents.get(v, ()):
            if state.get(p) == 1:
                return stack[stack.index(p):]
            if p in parents and p not in state:
                found = visit(p)
                if found:
                    return found
        state[v] = 2
        stack.pop()
        return None

    for v in sorted(parents):
        if v not in state:
            found = visit(v)
            if found:
                return found
    return None


def topological_order(parents: Mapping[int, Iterable[int]], nodes=None) -> list[int]:
    """Kahn's algorithm, smallest id first among ready nodes."""
    import heapq

    nodes = set(parents) if nodes is None else set(nodes)
    indeg = {v: sum(1 for p in parents[v] if p in nodes) for v in nodes}
    children = children_map({v: [p for p in parents[v] if p in nodes] for v in nodes})
    ready = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in children.get(v, ()):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != len(nodes):
        raise ValueError("graph has a cycle")
    return order


def ancestors(parents: Mapping[int, Iterable[int]], targets: Iterable[int]) -> set[int]:
    """Strict ancestors of ``targets`` (targets themselves excluded unless reached)."""
    seen: set[int] = set()
    todo = [p for t in targets for p in parents[t]]
    while todo:
        v = todo.pop()
        if v not in seen:
            seen.add(v)
            todo.extend(parents[v])
    return seen


def d_separated(parents: Mapping[int, Iterable[int]], x: int, y: int, given: Iterable[int]) -> bool:
    """Test ``x`` independent of ``y`` given ``given`` by moralizing the ancestral graph."""
    given = set(given)
    if x in given or y in given:
        return True
    keep = ancestors(parents, {x, y} | given) | {x, y} | given
    adj: dict[int, set[int]] = {v: set() for v in keep}
    for v in keep:
        ps = [p for p in parents[v] if p in keep]
        for p in ps:
            adj[v].add(p)
            adj[p].add(v)
        for i, a in enumerate(ps):
            for b in ps[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
    seen = {x}
    todo = [x]
    while todo:
        v = todo.pop()
        for w in adj[v]:
            if w == y:
                return False
            if w not in seen and w not in given:
                seen.add(w)
                todo.append(w)
    return True
