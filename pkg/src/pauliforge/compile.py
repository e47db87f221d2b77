"""Gate-set-conversion instances, the naive ladder compiler and solution bookkeeping.

A *step* of a simultaneous solution is either a single :class:`MappingGate` or
a tuple of gates applied as one layer (the reduced instances built in
:mod:`pauliforge.complexity` use layers of Hadamards).  Native-set membership
is always tested modulo phase.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .pauli import (
    CNOT, H, S, SWAP, MappingGate, PauliString, action_space, conjugate,
    conjugate_word, format_pauli, inverse_word, overlap, parse_gate, parse_pauli,
)

Step = Union[MappingGate, tuple]


def default_natives(q: int) -> tuple[PauliString, ...]:
    """Single Z on every qubit, then ZZ on every adjacent pair."""
    singles = [PauliString(q, 0, 1 << j) for j in range(q)]
    pairs = [PauliString(q, 0, 3 << j) for j in range(q - 1)]
    return tuple(singles + pairs)


def apply_step(p: PauliString, step: Step) -> PauliString:
    if isinstance(step, MappingGate):
        return conjugate(p, step)
    return conjugate_word(p, step)


def step_text(step: Step) -> str:
    if isinstance(step, MappingGate):
        return str(step)
    return " + ".join(str(g) for g in step)


def parse_step(text: str) -> Step:
    parts = [t for t in text.split("+")]
    if len(parts) == 1:
        return parse_gate(parts[0])
    return tuple(parse_gate(t) for t in parts)


def step_gates(step: Step) -> tuple[MappingGate, ...]:
    return (step,) if isinstance(step, MappingGate) else tuple(step)


@dataclass(frozen=True)
class GscInstance:
    q: int
    targets: tuple[PauliString, ...]
    natives: tuple[PauliString, ...]
    mapping_gates: tuple[Step, ...]
    seed: int | None = None

    def __post_init__(self):
        keys = [t.key for t in self.targets]
        if len(set(keys)) != len(keys):
            raise ValueError("targets must be distinct modulo phase")
        for p in (*self.targets, *self.natives):
            if p.q != self.q:
                raise ValueError("all strings must share the instance qubit count")

    @property
    def native_keys(self) -> frozenset[int]:
        return frozenset(n.key for n in self.natives)

    def is_native(self, p: PauliString) -> bool:
        return p.key in self.native_keys

    def native_index(self, p: PauliString) -> int:
        for i, n in enumerate(self.natives):
            if n.key == p.key:
                return i
        raise KeyError(p)

    def with_targets(self, targets: Sequence[PauliString]) -> "GscInstance":
        return GscInstance(self.q, tuple(targets), self.natives, self.mapping_gates, self.seed)

    @property
    def tables(self) -> "KeyTables":
        return key_tables(self.q, self.mapping_gates, self.native_keys)


class KeyTables:
    """Phase-free conjugation lookup tables for fast search loops."""

    def __init__(self, q: int, steps: tuple, native_keys: frozenset):
        self.q = q
        n = 4 ** q
        self.conj = []
        for step in steps:
            self.conj.append([apply_step(PauliString.from_key(q, k), step).key for k in range(n)])
        self.native = bytearray(n)
        for k in native_keys:
            self.native[k] = 1


@lru_cache(maxsize=64)
def key_tables(q: int, steps: tuple, native_keys: frozenset) -> KeyTables:
    return KeyTables(q, steps, native_keys)


def make_instance(q: int, t_size: int, seed: int) -> GscInstance:
    """Random instance with default natives and all 4q-2 mapping gates.

    Targets are drawn without replacement from the non-identity strings that
    are not themselves native.
    """
    if q < 2:
        raise ValueError("need q >= 2")
    natives = default_natives(q)
    nkeys = {n.key for n in natives}
    pool = [k for k in range(1, 4 ** q) if k not in nkeys]
    if not 1 <= t_size <= len(pool):
        raise ValueError(f"t_size must lie in [1, {len(pool)}] for q={q}")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pool), size=t_size, replace=False)
    targets = tuple(PauliString.from_key(q, pool[i]) for i in picks)
    return GscInstance(q, targets, natives, tuple(action_space(q)), seed)


# ----------------------------------------------------------------- naive ladder

@dataclass(frozen=True)
class IndividualSolution:
    words: tuple[tuple[MappingGate, ...], ...]
    native_index: tuple[int, ...]

    @property
    def cost(self) -> int:
        """Mapping gates of the individual form: every word plus its adjoint."""
        return 2 * sum(len(w) for w in self.words)


def naive_word(p: PauliString) -> list[MappingGate]:
    """Basis change, SWAP compaction and CNOT ladder for one string."""
    if p.weight == 0:
        raise ValueError("identity has no native image")
    word: list[MappingGate] = []
    for j in range(p.q):
        letter = p.letter(j)
        if letter == "X":
            word.append(H(j))
        elif letter == "Y":
            word.extend([S(j), H(j)])
    support = p.support()
    start = support[0]
    for k, pos in enumerate(support[1:], start=1):
        for j in range(pos - 1, start + k - 1, -1):
            word.append(SWAP(j))
    for j in range(start, start + len(support) - 1):
        word.append(CNOT(j))
    return word


def naive_individual(inst: GscInstance) -> IndividualSolution:
    words, idx = [], []
    for t in inst.targets:
        w = naive_word(t)
        image = conjugate_word(t, w)
        words.append(tuple(w))
        idx.append(inst.native_index(image))
    return IndividualSolution(tuple(words), tuple(idx))


# ------------------------------------------------------------- simultaneous form

@dataclass(frozen=True)
class SimultaneousSolution:
    gates: tuple
    marks: tuple[int, ...]
    order: tuple[int, ...]
    native_assignment: tuple[int, ...]

    @property
    def body_length(self) -> int:
        return len(self.gates)

    @property
    def raw_count(self) -> int:
        return 2 * len(self.gates)


@dataclass(frozen=True)
class GscdResult:
    accepted: bool
    order: tuple[int, ...] = ()
    marks: tuple[int, ...] = ()
    natives: tuple[PauliString, ...] = ()

    def __bool__(self) -> bool:
        return self.accepted


def verify_gscd(inst: GscInstance, word: Sequence[Step], k: int | None = None) -> GscdResult:
    """Run the decision procedure on the first ``k`` steps of ``word``."""
    if k is None:
        k = len(word)
    nkeys = inst.native_keys
    alive = {i: t for i, t in enumerate(inst.targets)}
    order, marks, natives = [], [], []

    def sweep(step_no):
        for i in sorted(alive):
            if alive[i].key in nkeys:
                order.append(i)
                marks.append(step_no)
                natives.append(alive.pop(i))

    sweep(0)
    for n, step in enumerate(word[:k], start=1):
        if not alive:
            break
        for i in alive:
            alive[i] = apply_step(alive[i], step)
        sweep(n)
    return GscdResult(not alive, tuple(order), tuple(marks), tuple(natives))


def solution_from_word(inst: GscInstance, word: Sequence[Step]) -> SimultaneousSolution:
    """Trim ``word`` after the last removal and record the removal bookkeeping."""
    res = verify_gscd(inst, word)
    if not res:
        raise ValueError("word does not resolve the target set")
    k = res.marks[-1] if res.marks else 0
    return SimultaneousSolution(
        tuple(word[:k]), res.marks, res.order, tuple(inst.native_index(n) for n in res.natives))


def individual_to_simultaneous(inst: GscInstance, ind: IndividualSolution,
                               order: Sequence[int] | None = None) -> SimultaneousSolution:
    """Telescoping body V_1 | V_1^dag V_2 | ... with S^dag realised as S.S.S.

    The body is kept whole and target l is marked at the end of its segment,
    where the accumulated product equals V_l.
    """
    order = list(range(len(ind.words)) if order is None else order)
    body: list[MappingGate] = []
    marks, assigned = [], []
    prev: tuple[MappingGate, ...] = ()
    for l in order:
        body.extend(inverse_word(prev))
        body.extend(ind.words[l])
        prev = ind.words[l]
        marks.append(len(body))
        assigned.append(inst.native_index(conjugate_word(inst.targets[l], ind.words[l])))
    if not verify_gscd(inst, body):
        raise ValueError("individual words do not resolve the target set")
    return SimultaneousSolution(tuple(body), tuple(marks), tuple(order), tuple(assigned))


def naive_simultaneous(inst: GscInstance, order: Sequence[int] | None = None) -> SimultaneousSolution:
    return individual_to_simultaneous(inst, naive_individual(inst), order)


# ------------------------------------------------------------------ GSC loop

class GscTimeout(RuntimeError):
    def __init__(self, word):
        self.word = tuple(word)
        super().__init__(f"target set unresolved after {len(word)} steps")


Policy = Callable[[list, int, np.random.Generator], int]


def run_gsc(inst: GscInstance, policy: Policy, max_steps: int, seed=None) -> SimultaneousSolution:
    """Choose-gate / conjugate / remove loop.

    ``policy(survivors, step, rng)`` returns an index into
    ``inst.mapping_gates``; survivors are ``(target index, current string)``
    pairs.  Raises :class:`GscTimeout` if ``max_steps`` is reached.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    rng = np.random.default_rng(seed)
    nkeys = inst.native_keys
    survivors = [(i, t) for i, t in enumerate(inst.targets) if t.key not in nkeys]
    word = []
    while survivors:
        if len(word) >= max_steps:
            raise GscTimeout(word)
        step = inst.mapping_gates[policy(survivors, len(word), rng)]
        word.append(step)
        moved = [(i, apply_step(t, step)) for i, t in survivors]
        survivors = [(i, t) for i, t in moved if t.key not in nkeys]
    return solution_from_word(inst, word)


def uniform_policy(inst: GscInstance) -> Policy:
    n = len(inst.mapping_gates)
    return lambda survivors, step, rng: int(rng.integers(n))


def greedy_policy(inst: GscInstance) -> Policy:
    """Most removals first, then largest similarity; lowest index on ties."""
    nkeys = inst.native_keys

    def choose(survivors, step, rng):
        best, best_score = 0, None
        for a, g in enumerate(inst.mapping_gates):
            moved = [apply_step(t, g) for _, t in survivors]
            removed = sum(m.key in nkeys for m in moved)
            sim = sum(max(overlap(m, n) for n in inst.natives) for m in moved if m.key not in nkeys)
            score = (removed, sim)
            if best_score is None or score > best_score:
                best, best_score = a, score
        return best
    return choose


def replay_policy(inst: GscInstance, word: Sequence[Step]) -> Policy:
    index = {step: a for a, step in reversed(list(enumerate(inst.mapping_gates)))}
    return lambda survivors, step, rng: index[word[step]]


# ----------------------------------------------------------------- cancellation

def _qubits(item) -> frozenset:
    if isinstance(item, PauliString):
        return frozenset(item.support())
    return frozenset(item.qubits)


def _passes(g: MappingGate, item) -> bool:
    """Can ``g`` be moved across ``item`` without changing the circuit?"""
    if isinstance(item, PauliString):
        return conjugate(item, g) == item
    return not (set(g.qubits) & set(item.qubits))


def _peephole_pass(items: list) -> list:
    out: list = []
    for g in items:
        if isinstance(g, PauliString):
            out.append(g)
            continue
        run = []  # identical S/SDG predecessors on the same wire, nearest first
        j = len(out) - 1
        while j >= 0:
            o = out[j]
            if _passes(g, o):
                j -= 1
                continue
            if isinstance(o, MappingGate):
                if not run and o == g.inverse():
                    run = [j]
                    break
                if g.kind in ("S", "SDG") and o == g:
                    run.append(j)
                    if len(run) == 3:
                        break
                    j -= 1
                    continue
            break
        if len(run) == 1 and out[run[0]] == g.inverse():
            del out[run[0]]
        elif len(run) == 3:
            for j in run:  # descending
                del out[j]
        else:
            out.append(g)
    return out


def peephole(items: Sequence) -> list:
    """Cancel inverse pairs and S^4 runs to a fixed point.

    ``items`` may interleave :class:`PauliString` natives, which are kept and
    only crossed by gates that commute with them.
    """
    cur = list(items)
    while True:
        nxt = _peephole_pass(cur)
        if len(nxt) == len(cur):
            return nxt
        cur = nxt


def _flatten(word: Iterable[Step]) -> list[MappingGate]:
    out = []
    for step in word:
        out.extend(step_gates(step))
    return out


def cancel_circuit(word: Sequence[Step], mode: str = "full", marks: Sequence[int] = (),
                   natives: Sequence[PauliString] = ()) -> list:
    """Simplified circuit ``segments(+natives) || tail`` as a flat item list.

    ``tail`` mode leaves the body untouched and replaces the tail
    ``(m_1...m_K)^dag`` by the adjoint of the simplified body product (no
    natives sit inside the tail, so any equal-unitary word is admissible).
    ``full`` mode additionally simplifies across the body, where a native
    only lets commuting gates through.  Without ``natives`` every mark is a
    hard barrier.
    """
    if mode not in ("tail", "full"):
        raise ValueError(f"unknown cancellation mode {mode!r}")
    flat_body = []
    # marks index steps; translate to flat gate positions
    positions = [0]
    for step in word:
        flat_body.extend(step_gates(step))
        positions.append(len(flat_body))
    tail = inverse_word(peephole(flat_body), expand_s=False)
    barrier = [natives[i] if i < len(natives) else None for i in range(len(marks))]
    items: list = []
    cursor = 0
    for m, n in sorted(zip(marks, range(len(marks))), key=lambda t: (t[0], t[1])):
        pos = positions[m]
        items.extend(flat_body[cursor:pos])
        cursor = pos
        items.append(barrier[n] if barrier[n] is not None else _Barrier())
    items.extend(flat_body[cursor:])
    if mode == "tail":
        return items + tail
    body = _peephole_barriers(items)
    return _peephole_barriers(body + tail)


class _Barrier:
    """Opaque stand-in for a native whose string is unknown."""


def _peephole_barriers(items: list) -> list:
    # split on opaque barriers, simplify each piece separately
    out, piece = [], []
    for it in items:
        if isinstance(it, _Barrier):
            out.extend(peephole(piece))
            out.append(it)
            piece = []
        else:
            piece.append(it)
    out.extend(peephole(piece))
    return out


def cancel(word: Sequence[Step], mode: str = "full", marks: Sequence[int] = (),
           natives: Sequence[PauliString] = ()) -> list[MappingGate]:
    """Gates of :func:`cancel_circuit` with the natives stripped."""
    return [it for it in cancel_circuit(word, mode, marks, natives) if isinstance(it, MappingGate)]


@dataclass(frozen=True)
class SolutionMetrics:
    raw_count: int
    tail_cancelled_count: int
    full_cancelled_count: int
    naive_individual_count: int
    percent_raw: float = field(init=False)
    percent_tail: float = field(init=False)
    percent_full: float = field(init=False)

    def __post_init__(self):
        n = self.naive_individual_count
        object.__setattr__(self, "percent_raw", 100.0 * self.raw_count / n)
        object.__setattr__(self, "percent_tail", 100.0 * self.tail_cancelled_count / n)
        object.__setattr__(self, "percent_full", 100.0 * self.full_cancelled_count / n)


def solution_natives(inst: GscInstance, sol: SimultaneousSolution) -> list[PauliString]:
    """Native strings reached at each mark, with the sign they actually carry."""
    res = verify_gscd(inst, sol.gates)
    return list(res.natives)


def metrics(inst: GscInstance, sol: SimultaneousSolution, naive_individual_count: int) -> SolutionMetrics:
    if naive_individual_count <= 0:
        raise ValueError("naive individual count must be positive")
    natives = solution_natives(inst, sol)
    k = len(_flatten(sol.gates))
    return SolutionMetrics(
        raw_count=2 * k,
        tail_cancelled_count=len(cancel(sol.gates, "tail", sol.marks, natives)),
        full_cancelled_count=len(cancel(sol.gates, "full", sol.marks, natives)),
        naive_individual_count=naive_individual_count,
    )


# ----------------------------------------------------------------------- files

def write_instance(inst: GscInstance, path, sidecar: bool | None = None) -> None:
    path = Path(path)
    lines = [str(inst.q), str(len(inst.targets))] + [format_pauli(t) for t in inst.targets]
    path.write_text("\n".join(lines) + "\n")
    custom = (inst.natives != default_natives(inst.q)
              or tuple(inst.mapping_gates) != tuple(action_space(inst.q)))
    if sidecar or (sidecar is None and custom):
        meta = {
            "natives": [format_pauli(n) for n in inst.natives],
            "mapping_gates": [step_text(s) for s in inst.mapping_gates],
            "seed": inst.seed,
        }
        _sidecar(path).write_text(json.dumps(meta, indent=2) + "\n")


def _sidecar(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


def read_instance(path) -> GscInstance:
    path = Path(path)
    rows = [ln.strip() for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    q, n = int(rows[0]), int(rows[1])
    targets = tuple(parse_pauli(r) for r in rows[2:2 + n])
    if len(targets) != n or any(t.q != q for t in targets):
        raise ValueError(f"{path}: expected {n} strings of length {q}")
    natives, gates, seed = default_natives(q), tuple(action_space(q)), None
    side = _sidecar(path)
    if side.exists():
        meta = json.loads(side.read_text())
        if "natives" in meta:
            natives = tuple(parse_pauli(s) for s in meta["natives"])
        if "mapping_gates" in meta:
            gates = tuple(parse_step(s) for s in meta["mapping_gates"])
        seed = meta.get("seed")
    return GscInstance(q, targets, natives, gates, seed)


def format_solution(sol: SimultaneousSolution) -> str:
    lines = []
    marks = list(zip(sol.marks, range(1, len(sol.marks) + 1)))
    mi = 0
    for pos in range(len(sol.gates) + 1):
        while mi < len(marks) and marks[mi][0] == pos:
            lines.append(f"#MARK {marks[mi][1]}")
            mi += 1
        if pos < len(sol.gates):
            lines.append(step_text(sol.gates[pos]))
    return "\n".join(lines) + "\n"


def parse_solution_word(text: str) -> list[Step]:
    return [parse_step(ln) for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
