"""The GSC Markov decision process: states, encoding and shaped reward."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..compile import GscInstance, key_tables
from ..pauli import MappingGate, PauliString, action_space

# I, X, Y, Z -> one-hot in {-1, 1}^4
PHI = {
    "I": (1, -1, -1, -1),
    "X": (-1, 1, -1, -1),
    "Y": (-1, -1, 1, -1),
    "Z": (-1, -1, -1, 1),
}


@dataclass(frozen=True)
class RewardConfig:
    C: float = -0.00001
    D: float = 0.1
    d_sign: int = 1

    def __post_init__(self):
        if self.D < 0:
            raise ValueError("D must be non-negative")
        if self.d_sign not in (1, -1):
            raise ValueError("d_sign must be +1 or -1")


@dataclass(frozen=True)
class EnvState:
    """Unresolved targets as ``(original index, phase-free key)`` pairs."""
    q: int
    survivors: tuple[tuple[int, int], ...]
    step_count: int = 0

    @property
    def terminal(self) -> bool:
        return not self.survivors

    def strings(self) -> list[tuple[int, PauliString]]:
        return [(i, PauliString.from_key(self.q, k)) for i, k in self.survivors]


def phi(letter: str) -> tuple[int, int, int, int]:
    return PHI[letter]


def _phi_table(q: int) -> np.ndarray:
    tab = np.empty((4 ** q, 4 * q), dtype=np.float32)
    for key in range(4 ** q):
        p = PauliString.from_key(q, key)
        tab[key] = np.concatenate([PHI[p.letter(j)] for j in range(q)])
    return tab


def encode(state: EnvState, q: int, t_max: int, table: np.ndarray | None = None) -> np.ndarray:
    """Flat vector of width 4*q*t_max; removed targets leave zero blocks."""
    if len(state.survivors) > t_max:
        raise ValueError("more survivors than t_max")
    if table is None:
        table = _phi_table(q)
    out = np.zeros((t_max, 4 * q), dtype=np.float32)
    for i, key in state.survivors:
        out[i] = table[key]
    return out.reshape(-1)


class GscEnv:
    """Deterministic environment over one instance; actions index ``actions``."""

    def __init__(self, inst: GscInstance, reward: RewardConfig = RewardConfig(),
                 actions: Sequence[MappingGate] | None = None, t_max: int | None = None):
        self.inst = inst
        self.q = inst.q
        self.reward_cfg = reward
        self.actions = tuple(actions) if actions is not None else tuple(action_space(inst.q))
        self.t_max = t_max if t_max is not None else len(inst.targets)
        if len(inst.targets) > self.t_max:
            raise ValueError("instance has more targets than t_max")
        self._tables = key_tables(inst.q, self.actions, inst.native_keys)
        self._native = self._tables.native
        self._conj = self._tables.conj
        self._best_overlap = _best_overlap_table(inst.q, inst.natives)
        self._phi = _phi_table(inst.q)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def reset(self) -> EnvState:
        surv = tuple((i, t.key) for i, t in enumerate(self.inst.targets) if not self._native[t.key])
        return EnvState(self.q, surv, 0)

    def similarity(self, keys) -> int:
        bo = self._best_overlap
        return sum(bo[k] for k in keys)

    def step(self, state: EnvState, action: int) -> tuple[EnvState, float, bool]:
        if not 0 <= action < len(self.actions):
            raise IndexError("action out of range")
        if state.terminal:
            return state, 0.0, True
        conj = self._conj[action]
        native = self._native
        bo = self._best_overlap
        kept = []
        before = after = 0
        for i, k in state.survivors:
            k2 = conj[k]
            if not native[k2]:
                kept.append((i, k2))
                before += bo[k]
                after += bo[k2]
        cfg = self.reward_cfg
        d = cfg.d_sign * (after - before)
        removed = len(state.survivors) - len(kept)
        if removed > 0:
            r = d * cfg.D + removed
        else:
            r = d * cfg.D + cfg.C
        nxt = EnvState(self.q, tuple(kept), state.step_count + 1)
        return nxt, float(r), nxt.terminal

    def encode(self, state: EnvState) -> np.ndarray:
        return encode(state, self.q, self.t_max, self._phi)


def env_step(state: EnvState, action: int, inst: GscInstance, cfg: RewardConfig = RewardConfig()):
    return GscEnv(inst, cfg).step(state, action)


def _best_overlap_table(q: int, natives) -> list[int]:
    full = (1 << q) - 1
    out = []
    for key in range(4 ** q):
        best = 0
        for n in natives:
            d = key ^ n.key
            best = max(best, q - bin((d & full) | (d >> q)).count("1"))
        out.append(best)
    return out
