"""Double deep Q-learning over one or many GSC instances."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..compile import (GscInstance, SimultaneousSolution, metrics, naive_individual,
                       solution_from_word)
from ..util import config_hash
from .env import GscEnv, RewardConfig
from .network import Adam, QNetwork, ddqn_target, ddqn_targets, train_batch

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

__all__ = [
    "TrainConfig", "ReplayBuffer", "EpisodeRecord", "TrainResult", "Stuck",
    "epsilon_greedy", "ddqn_target", "ddqn_targets", "train_batch", "train",
    "evaluate_greedy", "save_checkpoint", "load_checkpoint", "write_curve",
]


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 15000
    max_actions: int = 1000
    gamma: float = 0.75
    eps0: float = 0.9999
    eps_min: float = 0.01
    lr: float = 1e-5
    hidden: tuple[int, ...] = (500, 500, 500)
    replay_capacity: int = 50000
    batch_size: int = 64
    warmup: int = 1000
    sync_every: int = 2500
    step_budget: int | None = None  # hard cap on environment steps
    reward: RewardConfig = RewardConfig()
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 <= self.eps_min <= self.eps0 <= 1:
            raise ValueError("need 0 <= eps_min <= eps0 <= 1")
        if self.episodes < 0 or self.max_actions < 1 or self.batch_size < 1:
            raise ValueError("episodes >= 0, max_actions >= 1, batch_size >= 1")

    @classmethod
    def comparison(cls, **overrides) -> "TrainConfig":
        """Preset used for budget-matched method comparisons."""
        base = dict(episodes=5000, max_actions=100, step_budget=300_000)
        base.update(overrides)
        return cls(**base)

    @property
    def eps_decay(self) -> float:
        if self.episodes == 0 or self.eps0 == 0:
            return 1.0
        return (self.eps_min / self.eps0) ** (1.0 / self.episodes)

    def hash(self) -> str:
        return config_hash(self)


def epsilon_greedy(qvals, eps: float, rng: np.random.Generator) -> int:
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    qvals = np.asarray(qvals)
    if rng.random() < eps:
        return int(rng.integers(len(qvals)))
    return int(np.argmax(qvals))  # first maximum on ties


class ReplayBuffer:
    """Fixed-capacity ring of transitions stored as numpy columns."""

    def __init__(self, capacity: int, width: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, width), dtype=np.float32)
        self.next_states = np.zeros((capacity, width), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.terminal = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._pos = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s, a, r, s2, done) -> None:
        i = self._pos
        self.states[i], self.actions[i], self.rewards[i] = s, a, r
        self.next_states[i], self.terminal[i] = s2, done
        self._pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator):
        idx = rng.integers(self.size, size=n)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.terminal[idx])


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    instance: int
    raw_count: int
    cancelled_count: int
    epsilon: float
    loss: float
    steps: int
    resolved: bool


@dataclass
class TrainResult:
    curve: list[EpisodeRecord]
    best: dict[int, SimultaneousSolution]
    best_counts: dict[int, tuple[int, int]]  # instance -> (full cancelled, raw)
    env_steps: int
    policy: QNetwork
    config: TrainConfig
    naive_counts: list[int] = field(default_factory=list)

    @property
    def raw_counts(self) -> list[int]:
        return [r.raw_count for r in self.curve]

    def resolved_raw_counts(self) -> list[int]:
        """Curve without timeout episodes."""
        return [r.raw_count for r in self.curve if r.resolved]


def _check_instances(instances: Sequence[GscInstance]) -> tuple[int, int]:
    if not instances:
        raise ValueError("need at least one instance")
    q = instances[0].q
    if any(i.q != q for i in instances):
        raise ValueError("all instances must share the qubit count")
    return q, max(len(i.targets) for i in instances)


def train(instances: Sequence[GscInstance], cfg: TrainConfig = TrainConfig(),
          log_every: int = 0) -> TrainResult:
    """Train one agent, sampling a start instance uniformly per episode."""
    q, t_max = _check_instances(instances)
    rng = np.random.default_rng(cfg.seed)
    envs = [GscEnv(inst, cfg.reward, t_max=t_max) for inst in instances]
    n_actions = envs[0].n_actions
    width = 4 * q * t_max
    policy = QNetwork((width, *cfg.hidden, n_actions), rng)
    target = policy.copy()
    opt = Adam(policy.params, lr=cfg.lr)
    buf = ReplayBuffer(min(cfg.replay_capacity, max(cfg.step_budget or cfg.replay_capacity, 1)), width)
    naive = [naive_individual(inst).cost for inst in instances]

    curve: list[EpisodeRecord] = []
    best: dict[int, SimultaneousSolution] = {}
    best_counts: dict[int, tuple[int, int]] = {}
    eps, decay = cfg.eps0, cfg.eps_decay
    steps = 0
    for ep in range(cfg.episodes):
        if cfg.step_budget is not None and steps >= cfg.step_budget:
            break
        k = int(rng.integers(len(envs))) if len(envs) > 1 else 0
        env = envs[k]
        state = env.reset()
        x = env.encode(state)
        word, losses = [], []
        while not state.terminal and len(word) < cfg.max_actions:
            if cfg.step_budget is not None and steps >= cfg.step_budget:
                break
            a = epsilon_greedy(policy.forward(x), eps, rng)
            nxt, r, done = env.step(state, a)
            x2 = env.encode(nxt)
            buf.add(x, a, r, x2, done)
            steps += 1
            word.append(env.actions[a])
            if steps >= cfg.warmup and len(buf) >= cfg.batch_size:
                batch = buf.sample(cfg.batch_size, rng)
                losses.append(train_batch(policy, target, opt, *batch, cfg.gamma))
            if steps % cfg.sync_every == 0:
                target.load_from(policy)
            state, x = nxt, x2

        if state.terminal:
            sol = solution_from_word(instances[k], word)
            m = metrics(instances[k], sol, naive[k])
            raw, cancelled = m.raw_count, m.full_cancelled_count
            if k not in best_counts or (cancelled, raw) < best_counts[k]:
                best[k], best_counts[k] = sol, (cancelled, raw)
        else:
            raw = cancelled = 2 * cfg.max_actions
        loss = float(np.mean(losses)) if losses else float("nan")
        curve.append(EpisodeRecord(ep, k, raw, cancelled, eps, loss, len(word), state.terminal))
        eps = max(eps * decay, cfg.eps_min)
        if log_every and (ep + 1) % log_every == 0:
            recent = [r.raw_count for r in curve[-log_every:]]
            log.info("episode %d steps %d eps %.3f mean raw %.1f", ep + 1, steps, eps, np.mean(recent))

    return TrainResult(curve, best, best_counts, steps, policy, cfg, naive)


@dataclass(frozen=True)
class Stuck:
    word: tuple
    reason: str  # "loop" or "limit"

    def __bool__(self) -> bool:
        return False


def evaluate_greedy(net: QNetwork, inst: GscInstance, max_actions: int,
                    t_max: int | None = None) -> SimultaneousSolution | Stuck:
    """Deterministic rollout; a repeated state means the policy is looping."""
    env = GscEnv(inst, t_max=t_max)
    state = env.reset()
    seen = {state.survivors}
    word = []
    while not state.terminal:
        if len(word) >= max_actions:
            return Stuck(tuple(word), "limit")
        a = int(np.argmax(net.forward(env.encode(state))))
        state, _, _ = env.step(state, a)
        word.append(env.actions[a])
        if state.survivors in seen:
            return Stuck(tuple(word), "loop")
        seen.add(state.survivors)
    return solution_from_word(inst, word)


def save_checkpoint(path, net: QNetwork, opt: Adam | None, episode: int, cfg: TrainConfig) -> None:
    arrays = {f"p{i}": p for i, p in enumerate(net.params)}
    if opt is not None:
        arrays.update({f"m{i}": m for i, m in enumerate(opt.m)})
        arrays.update({f"v{i}": v for i, v in enumerate(opt.v)})
    np.savez(
        Path(path), version=CHECKPOINT_VERSION, episode=episode, adam_t=opt.t if opt else 0,
        sizes=np.array(net.sizes), config_hash=cfg.hash(), **arrays)


def load_checkpoint(path, cfg: TrainConfig | None = None) -> tuple[QNetwork, Adam, int]:
    with np.load(Path(path)) as data:
        if int(data["version"]) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {int(data['version'])}")
        if cfg is not None and str(data["config_hash"]) != cfg.hash():
            raise ValueError("checkpoint was written under a different config")
        sizes = tuple(int(s) for s in data["sizes"])
        net = QNetwork.__new__(QNetwork)
        net.sizes = sizes
        n = 2 * (len(sizes) - 1)
        net.params = [data[f"p{i}"].copy() for i in range(n)]
        net.dtype = net.params[0].dtype.type
        opt = Adam(net.params, lr=cfg.lr if cfg else 1e-5)
        if "m0" in data:
            opt.m = [data[f"m{i}"].copy() for i in range(n)]
            opt.v = [data[f"v{i}"].copy() for i in range(n)]
        opt.t = int(data["adam_t"])
        return net, opt, int(data["episode"])


def write_curve(curve: Sequence[EpisodeRecord], path) -> None:
    lines = ["episode;raw_count;cancelled_count;epsilon;loss"]
    for r in curve:
        lines.append(f"{r.episode};{r.raw_count};{r.cancelled_count};{r.epsilon:.6f};{r.loss:.6g}")
    Path(path).write_text("\n".join(lines) + "\n")
