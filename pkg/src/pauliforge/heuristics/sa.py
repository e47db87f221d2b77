"""Simulated annealing over bit-encoded mapping-gate sequences."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..compile import (GscInstance, SimultaneousSolution, SolutionMetrics, Step, metrics,
                       naive_individual, naive_simultaneous, solution_from_word,
                       verify_gscd)


def bits_per_slot(n_actions: int) -> int:
    """Enough bits for codes 0 (no-op) through ``n_actions``."""
    return max(1, math.ceil(math.log2(n_actions + 1)))


@dataclass
class BitEncoding:
    """``bits[i]`` holds the code of slot ``i``, most significant bit first."""
    bits: np.ndarray  # (slots, bits_per_slot) of uint8
    n_actions: int

    @property
    def slots(self) -> int:
        return self.bits.shape[0]

    @property
    def bits_per_slot(self) -> int:
        return self.bits.shape[1]

    def codes(self) -> np.ndarray:
        weights = 1 << np.arange(self.bits_per_slot - 1, -1, -1)
        return self.bits.astype(np.int64) @ weights

    def copy(self) -> "BitEncoding":
        return BitEncoding(self.bits.copy(), self.n_actions)

    def flip(self, slot: int, bit: int) -> None:
        self.bits[slot, bit] ^= 1


def empty_encoding(slots: int, n_actions: int) -> BitEncoding:
    return BitEncoding(np.zeros((slots, bits_per_slot(n_actions)), dtype=np.uint8), n_actions)


def encode_bits(word: Sequence[Step], slots: int, actions: Sequence[Step]) -> BitEncoding:
    if len(word) > slots:
        raise ValueError(f"word of length {len(word)} does not fit {slots} slots")
    index = {a: i for i, a in reversed(list(enumerate(actions)))}
    enc = empty_encoding(slots, len(actions))
    b = enc.bits_per_slot
    for s, g in enumerate(word):
        if g not in index:
            raise ValueError(f"{g} is not a mapping gate of this instance")
        code = index[g] + 1
        enc.bits[s] = [(code >> (b - 1 - j)) & 1 for j in range(b)]
    return enc


def decode_codes(enc: BitEncoding) -> list[int]:
    """Action indices of the in-range, non-zero slot codes."""
    return [int(c) - 1 for c in enc.codes() if 1 <= c <= enc.n_actions]


def decode_bits(enc: BitEncoding, actions: Sequence[Step]) -> list[Step]:
    return [actions[a] for a in decode_codes(enc)]


def _evaluate(inst: GscInstance, actions: Sequence[int]) -> tuple[int, int]:
    """(unresolved targets, prefix length at the last removal).

    Resolved targets are frozen; the loop stops once everything is resolved.
    """
    tab = inst.tables
    native = tab.native
    alive = [t.key for t in inst.targets if not native[t.key]]
    last = 0
    for n, a in enumerate(actions, start=1):
        if not alive:
            break
        conj = tab.conj[a]
        moved = [conj[k] for k in alive]
        alive = [k for k in moved if not native[k]]
        if len(alive) < len(moved):
            last = n
    return len(alive), last


def sa_cost(inst: GscInstance, enc: BitEncoding) -> int:
    return _evaluate(inst, decode_codes(enc))[0]


def accept_prob(c_old: float, c_new: float, tau: float) -> float:
    if tau <= 0:
        raise ValueError("temperature must be positive")
    if c_new <= c_old:
        return 1.0
    return math.exp(-(c_new - c_old) / tau)


@dataclass(frozen=True)
class SaConfig:
    tau0: float = 0.25
    tau_min_ratio: float = 0.01
    anneal_steps: int = 10_000
    start: str = "naive"  # or "empty"
    budget: int = 500_000
    slot_factor: float = 2.0  # slots = factor * naive simultaneous length
    seed: int = 0

    def __post_init__(self):
        if self.start not in ("naive", "empty"):
            raise ValueError("start must be 'naive' or 'empty'")
        if self.tau0 <= 0 or not 0 < self.tau_min_ratio < 1:
            raise ValueError("need tau0 > 0 and 0 < tau_min_ratio < 1")
        if self.budget < 0 or self.anneal_steps < 2:
            raise ValueError("budget >= 0 and anneal_steps >= 2 required")

    @property
    def tau_min(self) -> float:
        return self.tau_min_ratio * self.tau0

    def temperature(self, step: int) -> float:
        """Linear schedule from tau0 at step 0 to tau_min at the last step."""
        frac = step / (self.anneal_steps - 1)
        return self.tau0 + (self.tau_min - self.tau0) * frac


@dataclass
class SearchResult:
    solution: SimultaneousSolution | None
    metrics: SolutionMetrics | None
    evaluations: int
    best_cost: int
    repetitions: int = 0
    solutions_found: int = 0


class _PrefixCache:
    """Per-slot search states so a flip in slot i only re-simulates from i.

    ``states[i]`` is (alive keys, real gates so far, gates at last removal)
    before slot ``i``; once everything is resolved the list stops growing and
    later slots share the final state.
    """

    def __init__(self, inst: GscInstance, codes: list[int]):
        self.tab = inst.tables
        self.n = len(inst.mapping_gates)
        native = self.tab.native
        self.codes = codes
        self.states = [(tuple(t.key for t in inst.targets if not native[t.key]), 0, 0)]
        self.states = self._run(0, codes)

    def _run(self, i: int, codes: list[int]) -> list:
        states = self.states[:i + 1] if i < len(self.states) else self.states[:]
        if len(states) <= i:
            return states  # already resolved before slot i
        native, conj, n = self.tab.native, self.tab.conj, self.n
        alive, length, last = states[i]
        for j in range(i, len(codes)):
            if not alive:
                break
            c = codes[j]
            if 1 <= c <= n:
                length += 1
                table = conj[c - 1]
                moved = [table[k] for k in alive]
                alive = tuple(k for k in moved if not native[k])
                if len(alive) < len(moved):
                    last = length
            states.append((alive, length, last))
        return states

    @staticmethod
    def result(states) -> tuple[int, int]:
        alive, _, last = states[-1]
        return len(alive), last

    def trial(self, slot: int, code: int):
        codes = self.codes[:]
        codes[slot] = code
        return codes, self._run(slot, codes)


def sa_run(inst: GscInstance, cfg: SaConfig = SaConfig(), trace: list | None = None) -> SearchResult:
    """Annealing restarts until the cost-query budget is spent.

    Every bit flip costs one query, as does the evaluation of each restart's
    starting point.  Within a repetition encodings are ranked by (unresolved
    targets, trimmed length); the best of each repetition and the start are
    then compared on fully cancelled gate count and the winner is re-verified.
    ``trace``, if given, collects (repetition, cost, repetition best) per query.
    """
    rng = np.random.default_rng(cfg.seed)
    actions = inst.mapping_gates
    naive = naive_simultaneous(inst)
    slots = max(1, int(round(cfg.slot_factor * naive.body_length)))
    if cfg.start == "naive":
        start = encode_bits(naive.gates, slots, actions)
    else:
        start = empty_encoding(slots, len(actions))
    b = start.bits_per_slot
    start_codes = [int(c) for c in start.codes()]

    candidates = [start_codes]
    evals = reps = 0
    best_cost = _PrefixCache.result(_PrefixCache(inst, start_codes).states)[0]
    while evals < cfg.budget:
        reps += 1
        cache = _PrefixCache(inst, start_codes[:])
        evals += 1
        cost, last = cache.result(cache.states)
        rep_key, rep_codes = _rank((cost, last)), cache.codes
        if trace is not None:
            trace.append((reps, cost, rep_key))
        for step in range(cfg.anneal_steps):
            if evals >= cfg.budget:
                break
            tau = cfg.temperature(step)
            slot, bit = int(rng.integers(slots)), int(rng.integers(b))
            code = cache.codes[slot] ^ (1 << (b - 1 - bit))
            codes, states = cache.trial(slot, code)
            new_cost, new_last = cache.result(states)
            evals += 1
            if new_cost <= cost or rng.random() < accept_prob(cost, new_cost, tau):
                cache.codes, cache.states = codes, states
                cost, last = new_cost, new_last
                key = _rank((cost, last))
                if key < rep_key:
                    rep_key, rep_codes = key, codes
            if trace is not None:
                trace.append((reps, cost, rep_key))
        candidates.append(rep_codes)
        best_cost = min(best_cost, rep_key[0])

    return _report(inst, candidates, actions, best_cost, evals, reps)


def _rank(evaluation: tuple[int, int]) -> tuple[int, int]:
    cost, last = evaluation
    return (cost, last if cost == 0 else 0)


def _report(inst, candidates, actions, best_cost, evals, reps) -> SearchResult:
    n = len(actions)
    n_ind = naive_individual(inst).cost
    best = None
    seen = set()
    for codes in candidates:
        word = tuple(actions[c - 1] for c in codes if 1 <= c <= n)
        if word in seen or not verify_gscd(inst, word):
            continue
        seen.add(word)
        sol = solution_from_word(inst, word)
        m = metrics(inst, sol, n_ind)
        if best is None or (m.full_cancelled_count, m.raw_count) < (best[1].full_cancelled_count, best[1].raw_count):
            best = (sol, m)
    if best is None:
        return SearchResult(None, None, evals, best_cost, reps)
    return SearchResult(best[0], best[1], evals, 0, reps, len(seen))
