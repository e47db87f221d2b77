"""Hamiltonian path -> GSCD reduction chain and exhaustive oracles for small inputs."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .compile import GscInstance, verify_gscd
from .pauli import H, PauliString

HP_LIMIT = 9
GSCD_LIMIT = 10 ** 7


class SearchLimitError(RuntimeError):
    pass


class LabelPoolExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset
    start: int | None = None

    def __post_init__(self):
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError("self-loops are not allowed")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside 0..{self.n - 1}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.start is not None and not 0 <= self.start < self.n:
            raise ValueError("start vertex out of range")

    @classmethod
    def from_edges(cls, n: int, edges, start=None) -> "Graph":
        return cls(n, frozenset(tuple(e) for e in edges), start)

    def neighbors(self, v: int) -> list[int]:
        return sorted({b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v})

    def adjacent(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen, todo = {0}, [0]
        while todo:
            v = todo.pop()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return len(seen) == self.n


@dataclass(frozen=True)
class LabeledGraph:
    graph: Graph
    q: int
    vertex_labels: dict = field(hash=False)
    edge_labels: dict = field(hash=False)


@dataclass(frozen=True)
class Reduction:
    instance: GscInstance
    budget: int
    labeled: LabeledGraph
    vertex_of_target: tuple[int, ...]
    edge_of_gate: tuple[tuple[int, int], ...]


def hp2hps(g: Graph) -> Graph:
    """Add a start vertex ``s = n`` joined to every original vertex."""
    if g.n < 1:
        raise ValueError("graph needs at least one vertex")
    s = g.n
    edges = set(g.edges) | {(v, s) for v in range(g.n)}
    return Graph(g.n + 1, frozenset(edges), s)


def brute_hamiltonian_path(g: Graph, start: int | None = None, limit: int = HP_LIMIT):
    """Depth-first search for a Hamiltonian path; returns the vertex list or None."""
    if g.n > limit:
        raise SearchLimitError(f"brute force limited to {limit} vertices")
    if g.n == 0:
        return []
    adj = [set(g.neighbors(v)) for v in range(g.n)]
    starts = [start] if start is not None else range(g.n)

    def extend(path, seen):
        if len(path) == g.n:
            return list(path)
        for w in sorted(adj[path[-1]]):
            if w not in seen:
                seen.add(w)
                path.append(w)
                found = extend(path, seen)
                if found:
                    return found
                path.pop()
                seen.discard(w)
        return None

    for s in starts:
        found = extend([s], {s})
        if found:
            return found
    return None


def _label_pauli(q: int, label: int) -> PauliString:
    # bit i of the label -> X on qubit i, else Z
    full = (1 << q) - 1
    return PauliString(q, label, full & ~label)


def _h_layer(q: int, label: int) -> tuple:
    return tuple(H(i) for i in range(q) if label >> i & 1)


def _greedy_labels(g: Graph, q: int) -> dict[int, int]:
    """Lowest admissible label per vertex, keeping the no-spurious-edge condition.

    Admissible means: labels stay distinct, and for every pair of labelled
    vertices the XOR of their labels is an edge label iff they are adjacent.
    """
    s = g.start
    labels = {s: 0}
    pool = list(range(1, 2 ** q))
    order = [v for v in range(g.n) if v != s]
    for v in order:
        chosen = None
        for cand in pool:
            trial = dict(labels)
            trial[v] = cand
            if _admissible(g, trial):
                chosen = cand
                break
        if chosen is None:
            raise LabelPoolExhausted(f"no admissible label for vertex {v} with q={q}")
        labels[v] = chosen
        pool.remove(chosen)
    return labels


def _admissible(g: Graph, labels: dict[int, int]) -> bool:
    verts = list(labels)
    edge_xor = {labels[u] ^ labels[v] for u, v in g.edges if u in labels and v in labels}
    for u, v in itertools.combinations(verts, 2):
        if not g.adjacent(u, v) and labels[u] ^ labels[v] in edge_xor:
            return False
    return True


def hps2gscd(g: Graph, q: int | None = None) -> Reduction:
    """Build the GSCD instance of a graph with designated start vertex.

    The start vertex carries the all-zero label (Z on every qubit, the only
    native); every other vertex becomes a {Z, X} target and every edge a layer
    of Hadamards given by the XOR of its endpoint labels.  ``q`` defaults to
    the smallest width for which the greedy labelling succeeds.
    """
    if g.start is None:
        raise ValueError("graph needs a designated start vertex")
    if q is None:
        q = 1
        while True:
            if 2 ** q >= g.n:
                try:
                    labels = _greedy_labels(g, q)
                    break
                except LabelPoolExhausted:
                    pass
            q += 1
    else:
        labels = _greedy_labels(g, q)
    s = g.start
    others = [v for v in range(g.n) if v != s]
    targets = tuple(_label_pauli(q, labels[v]) for v in others)
    gates, edge_of_gate, seen = [], [], set()
    edge_labels = {}
    for u, v in sorted(g.edges):
        y = labels[u] ^ labels[v]
        edge_labels[(u, v)] = y
        if y not in seen:
            seen.add(y)
            gates.append(_h_layer(q, y))
            edge_of_gate.append((u, v))
    natives = (_label_pauli(q, 0),)
    inst = GscInstance(q, targets, natives, tuple(gates), seed=None)
    lg = LabeledGraph(g, q, labels, edge_labels)
    return Reduction(inst, max(len(targets) - 1, 0), lg, tuple(others), tuple(edge_of_gate))


def brute_gscd(inst: GscInstance, k: int, limit: int = GSCD_LIMIT):
    """Shortest resolving word of length <= k by breadth-first search, or None.

    States are the phase-free strings of the unresolved targets; identical
    states reached by different words are expanded once.
    """
    tab = inst.tables
    nk = len(inst.mapping_gates)

    def strip(state):
        return tuple(sorted((i, key) for i, key in state if not tab.native[key]))

    root = strip((i, t.key) for i, t in enumerate(inst.targets))
    if not root:
        return []
    frontier = {root: ()}
    seen = {root}
    calls = 0
    for depth in range(1, k + 1):
        nxt = {}
        for state, word in frontier.items():
            for a in range(nk):
                calls += 1
                if calls > limit:
                    raise SearchLimitError(f"more than {limit} expansions")
                conj = tab.conj[a]
                child = strip((i, conj[key]) for i, key in state)
                if not child:
                    return [inst.mapping_gates[b] for b in word + (a,)]
                if child not in seen:
                    seen.add(child)
                    nxt[child] = word + (a,)
        frontier = nxt
        if not frontier:
            break
    return None


def round_trip(g: Graph) -> dict:
    """Run both sides of the HP -> HPS -> GSCD chain on ``g``."""
    gp = hp2hps(g)
    path = brute_hamiltonian_path(gp, gp.start)
    red = hps2gscd(gp)
    n_t = len(red.instance.targets)
    word = brute_gscd(red.instance, n_t)
    word_lit = brute_gscd(red.instance, red.budget)
    if word is not None:
        assert verify_gscd(red.instance, word, n_t)
    return {
        "graph": g,
        "hps_path": path,
        "q": red.instance.q,
        "targets": n_t,
        "gscd_word": word,
        "gscd_word_literal_budget": word_lit,
        "agree": (path is not None) == (word is not None),
        "agree_literal_budget": (path is not None) == (word_lit is not None),
    }


def connected_graphs(n: int):
    """Every connected labelled graph on ``n`` vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(2 ** len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        g = Graph.from_edges(n, edges)
        if g.is_connected():
            yield g


def read_graph(path) -> Graph:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    n, m = int(rows[0][0]), int(rows[0][1])
    edges = [(int(a), int(b)) for a, b in rows[1:1 + m]]
    start = None
    for r in rows[1 + m:]:
        if r[0] == "start":
            start = int(r[1])
    return Graph.from_edges(n, edges, start)


def write_graph(g: Graph, path) -> None:
    lines = [f"{g.n} {len(g.edges)}"] + [f"{u} {v}" for u, v in sorted(g.edges)]
    if g.start is not None:
        lines.append(f"start {g.start}")
    Path(path).write_text("\n".join(lines) + "\n")
