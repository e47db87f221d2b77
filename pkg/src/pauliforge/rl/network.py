"""Dense ReLU Q-network with hand-written backprop and an Adam optimizer."""
from __future__ import annotations

import numpy as np


class QNetwork:
    """affine -> relu -> ... -> affine.

    ``params`` is a flat list ``[W0, b0, W1, b1, ...]`` with ``W`` of shape
    (fan_in, fan_out); inputs are row batches.
    """

    def __init__(self, sizes, rng=None, dtype=np.float32):
        self.sizes = tuple(int(s) for s in sizes)
        self.dtype = dtype
        rng = np.random.default_rng(rng)
        self.params = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(dtype))
            self.params.append(rng.uniform(-bound, bound, fan_out).astype(dtype))

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    def copy(self) -> "QNetwork":
        net = QNetwork.__new__(QNetwork)
        net.sizes, net.dtype = self.sizes, self.dtype
        net.params = [p.copy() for p in self.params]
        return net

    def load_from(self, other: "QNetwork") -> None:
        for mine, theirs in zip(self.params, other.params):
            mine[...] = theirs

    def forward(self, x, cache: bool = False):
        x = np.asarray(x, dtype=self.dtype)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input width {x.shape[1]} != {self.sizes[0]}")
        acts = [x]
        h = x
        last = self.n_layers - 1
        for layer in range(self.n_layers):
            W, b = self.params[2 * layer], self.params[2 * layer + 1]
            h = h @ W + b
            if layer < last:
                h = np.maximum(h, 0)
            acts.append(h)
        out = h[0] if single else h
        return (out, acts) if cache else out

    def backward(self, acts, grad_out, out=None):
        """Parameter gradients for upstream gradient ``grad_out`` on the output.

        ``out`` may hold arrays shaped like ``params`` to write into; large
        temporaries are costly to allocate on every training step.
        """
        grads = out if out is not None else [np.empty_like(p) for p in self.params]
        g = grad_out
        for layer in reversed(range(self.n_layers)):
            a_in = acts[layer]
            np.matmul(a_in.T, g, out=grads[2 * layer])
            np.sum(g, axis=0, out=grads[2 * layer + 1])
            if layer:
                g = g @ self.params[2 * layer].T
                g = g * (acts[layer] > 0)
        return grads


class Adam:
    def __init__(self, params, lr=1e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self._tmp = [np.empty_like(p) for p in params]
        self.grads = [np.empty_like(p) for p in params]

    def step(self, params, grads) -> None:
        """p -= lr * m_hat / (sqrt(v_hat) + eps), computed in place."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1 - b1 ** self.t
        c2 = 1 - b2 ** self.t
        for p, g, m, v, tmp in zip(params, grads, self.m, self.v, self._tmp):
            m *= b1
            np.multiply(g, 1 - b1, out=tmp)
            m += tmp
            v *= b2
            np.multiply(g, g, out=tmp)
            tmp *= 1 - b2
            v += tmp
            np.sqrt(v, out=tmp)
            tmp *= 1 / np.sqrt(c2)
            tmp += self.eps
            np.divide(m, tmp, out=tmp)
            tmp *= self.lr / c1
            p -= tmp


def ddqn_targets(rewards, next_states, terminal, gamma, policy: QNetwork, target: QNetwork):
    """r + gamma * Q_target(s', argmax_a Q_policy(s', a)); just r when terminal."""
    rewards = np.asarray(rewards, dtype=np.float64)
    q_next_policy = policy.forward(next_states)
    q_next_target = target.forward(next_states)
    if q_next_policy.ndim == 1:
        q_next_policy = q_next_policy[None]
        q_next_target = q_next_target[None]
    best = np.argmax(q_next_policy, axis=1)
    boot = q_next_target[np.arange(len(best)), best]
    done = np.asarray(terminal, dtype=bool)
    return np.where(done, rewards, rewards + gamma * boot)


def ddqn_target(transition, gamma, policy: QNetwork, target: QNetwork) -> float:
    s, a, r, s2, done = transition
    return float(ddqn_targets([r], np.asarray(s2)[None], [done], gamma, policy, target)[0])


def train_batch(policy: QNetwork, target: QNetwork, optimizer: Adam,
                states, actions, rewards, next_states, terminal, gamma) -> float:
    """One Adam step on the mean squared TD error; returns the pre-update loss."""
    y = ddqn_targets(rewards, next_states, terminal, gamma, policy, target)
    q, acts = policy.forward(states, cache=True)
    rows = np.arange(len(actions))
    err = q[rows, actions] - y
    loss = float(np.mean(err ** 2))
    grad = np.zeros_like(q)
    grad[rows, actions] = (2.0 / len(actions)) * err
    optimizer.step(policy.params, policy.backward(acts, grad, out=optimizer.grads))
    return loss
