"""Single-player Monte Carlo tree search with naive-completion playouts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..compile import (GscInstance, metrics, naive_individual, naive_simultaneous,
                       solution_from_word)
from ..pauli import PauliString
from .sa import SearchResult


def uct(value: float, c: float, n_parent: int, n_child: int) -> float:
    if n_parent < 1:
        raise ValueError("parent must have been visited")
    if n_child == 0:
        return math.inf
    return value + c * math.sqrt(math.log(n_parent) / n_child)


def playout_reward(n_node: float, n_root: float) -> float:
    if n_root <= 0:
        raise ValueError("root count must be positive")
    return max(0.0, 1.0 - n_node / n_root)


@dataclass(frozen=True)
class MctsConfig:
    c: float = 85.0
    max_depth: int = 1000
    stop_after: int = 100
    budget: int = 400_000
    value_mode: str = "mean"  # or "sum"
    keep_playouts: bool = True  # playout completions count as candidate solutions
    seed: int = 0

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("exploration constant must be non-negative")
        if self.value_mode not in ("mean", "sum"):
            raise ValueError("value_mode must be 'mean' or 'sum'")
        if self.max_depth < 0 or self.budget < 0:
            raise ValueError("max_depth and budget must be non-negative")


@dataclass(eq=False)
class MctsNode:
    survivors: tuple  # (target index, phase-free key) pairs
    depth: int
    action: int | None = None
    parent: "MctsNode | None" = None
    n: int = 0
    total: float = 0.0
    children: dict = field(default_factory=dict)

    @property
    def resolved(self) -> bool:
        return not self.survivors

    def value(self, mode: str) -> float:
        if mode == "sum":
            return self.total
        return self.total / self.n if self.n else 0.0

    def word(self) -> list[int]:
        out, node = [], self
        while node.parent is not None:
            out.append(node.action)
            node = node.parent
        return out[::-1]


class _Completion:
    """Naive simultaneous completion of a node's surviving strings, memoised."""

    def __init__(self, inst: GscInstance):
        self.inst = inst
        self.memo: dict[tuple, tuple] = {}

    def __call__(self, survivors: tuple) -> tuple:
        if not survivors:
            return ()
        key = tuple(k for _, k in survivors)
        if key not in self.memo:
            q = self.inst.q
            sub = self.inst.with_targets([PauliString.from_key(q, k) for k in key])
            self.memo[key] = naive_simultaneous(sub).gates
        return self.memo[key]


class MctsSearch:
    """Search tree plus the bookkeeping of one run; ``iterate`` does one pass."""

    def __init__(self, inst: GscInstance, cfg: MctsConfig = MctsConfig()):
        self.inst, self.cfg = inst, cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.tab = inst.tables
        self.n_actions = len(inst.mapping_gates)
        self.complete = _Completion(inst)
        native = self.tab.native
        self.root = MctsNode(tuple((i, t.key) for i, t in enumerate(inst.targets) if not native[t.key]), 0)
        self.n_root = len(self.complete(self.root.survivors))
        self.candidates: dict[tuple, int] = {(): self.n_root} if cfg.keep_playouts else {}
        self.found: set[int] = set()
        self.evaluations = 0
        self.iterations = 0

    @property
    def done(self) -> bool:
        return (self.root.resolved or self.evaluations >= self.cfg.budget
                or len(self.found) >= self.cfg.stop_after)

    def _select(self) -> MctsNode:
        cfg, node = self.cfg, self.root
        while not node.resolved and node.depth < cfg.max_depth and len(node.children) == self.n_actions:
            scores = [uct(ch.value(cfg.value_mode), cfg.c, node.n, ch.n) for ch in node.children.values()]
            top = max(scores)
            ties = [a for a, sc in zip(node.children, scores) if sc == top]
            pick = ties[int(self.rng.integers(len(ties)))] if len(ties) > 1 else ties[0]
            node = node.children[pick]
        return node

    def _expand(self, node: MctsNode) -> MctsNode:
        if node.resolved or node.depth >= self.cfg.max_depth:
            return node
        free = [a for a in range(self.n_actions) if a not in node.children]
        a = free[int(self.rng.integers(len(free)))]
        conj, native = self.tab.conj[a], self.tab.native
        moved = tuple((i, conj[k]) for i, k in node.survivors)
        child = MctsNode(tuple(s for s in moved if not native[s[1]]), node.depth + 1, a, node)
        node.children[a] = child
        return child

    def iterate(self) -> MctsNode:
        """Select, expand, play out and backpropagate once; returns the scored node."""
        self.iterations += 1
        node = self._expand(self._select())
        tail = self.complete(node.survivors)
        length = node.depth + len(tail)
        reward = playout_reward(length, self.n_root)
        self.evaluations += length
        if node.resolved:
            self.found.add(id(node))
        if node.resolved or self.cfg.keep_playouts:
            self.candidates.setdefault(tuple(node.word()), length)
        walk = node
        while walk is not None:
            walk.n += 1
            walk.total += reward
            walk = walk.parent
        return node

    def result(self) -> SearchResult:
        return _best(self.inst, self.candidates, self.complete, self.evaluations,
                     self.iterations, len(self.found))


def mcts_run(inst: GscInstance, cfg: MctsConfig = MctsConfig()) -> SearchResult:
    """Select / expand / simulate / backpropagate until enough solutions or budget.

    The playout at a node scores the total length ``depth + naive completion``
    against the naive length at the root.  Each iteration costs the depth of
    the node it reached plus the playout's naive length.
    """
    search = MctsSearch(inst, cfg)
    if search.root.resolved:
        sol = solution_from_word(inst, [])
        return SearchResult(sol, metrics(inst, sol, naive_individual(inst).cost), 0, 0, 0, 1)
    while not search.done:
        search.iterate()
    return search.result()


def _best(inst, candidates, complete, evals, iterations, n_found) -> SearchResult:
    if not candidates:
        return SearchResult(None, None, evals, 1, iterations, 0)
    n_ind = naive_individual(inst).cost
    tab = inst.tables
    best = None
    # shortest few candidates by total length, then compared after cancellation
    for prefix, _ in sorted(candidates.items(), key=lambda kv: (kv[1], kv[0]))[:50]:
        survivors = tuple((i, t.key) for i, t in enumerate(inst.targets) if not tab.native[t.key])
        for a in prefix:
            survivors = tuple((i, tab.conj[a][k]) for i, k in survivors if not tab.native[tab.conj[a][k]])
        word = [inst.mapping_gates[a] for a in prefix] + list(complete(survivors))
        sol = solution_from_word(inst, word)
        m = metrics(inst, sol, n_ind)
        if best is None or (m.full_cancelled_count, m.raw_count) < (best[1].full_cancelled_count, best[1].raw_count):
            best = (sol, m)
    return SearchResult(best[0], best[1], evals, 0, iterations, n_found)
