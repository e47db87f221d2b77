import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pauliforge.compile import GscInstance, default_natives, make_instance, verify_gscd
from pauliforge.pauli import action_space, parse_pauli, similarity
from pauliforge.rl.ddqn import (ReplayBuffer, Stuck, TrainConfig, epsilon_greedy, evaluate_greedy,
                                load_checkpoint, save_checkpoint, train, write_curve)
from pauliforge.rl.env import EnvState, GscEnv, RewardConfig, encode, phi
from pauliforge.rl.network import Adam, QNetwork, ddqn_target, ddqn_targets, train_batch

from oracles import numeric_grad


def inst_of(*texts):
    q = len(texts[0])
    return GscInstance(q, tuple(parse_pauli(t) for t in texts), default_natives(q),
                       tuple(action_space(q)))


SMALL = dict(hidden=(16, 16), warmup=20, batch_size=8, sync_every=50, replay_capacity=500)


# ------------------------------------------------------------------ encoding

def test_phi_table():
    assert phi("Z") == (-1, -1, -1, 1)
    assert phi("I") == (1, -1, -1, -1)


def test_encode_examples():
    assert not encode(EnvState(2, ()), 2, 2).any()
    x = encode(EnvState(2, ((0, parse_pauli("XI").key),)), 2, 2)
    assert x.tolist() == [-1, 1, -1, -1, 1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0]


def test_removed_target_leaves_zero_block():
    x = encode(EnvState(2, ((1, parse_pauli("XI").key),)), 2, 2)
    assert not x[:8].any() and x[8:].any()


def test_encode_rejects_overfull_state():
    state = EnvState(2, ((0, 1), (1, 2), (2, 3)))
    with pytest.raises(ValueError):
        encode(state, 2, 2)


# -------------------------------------------------------------------- reward

def test_removal_reward_example():
    env = GscEnv(inst_of("XI", "YI"))
    state = env.reset()
    nxt, r, done = env.step(state, env.actions.index(action_space(2)[0]))  # H on qubit 0
    assert len(nxt.survivors) == 1 and not done
    assert r == pytest.approx(1.0)


def test_step_penalty_example():
    env = GscEnv(inst_of("XX"))
    nxt, r, done = env.step(env.reset(), env.actions.index(action_space(2)[-1]))  # SWAP
    assert r == pytest.approx(-0.00001)


def test_terminal_then_zero():
    env = GscEnv(inst_of("XI"))
    nxt, r, done = env.step(env.reset(), 0)
    assert done and r == pytest.approx(1.0)
    again, r2, done2 = env.step(nxt, 3)
    assert done2 and r2 == 0.0 and again == nxt


def test_literal_sign_flag():
    inst = make_instance(3, 4, 0)
    env_pos = GscEnv(inst, RewardConfig(C=0.0, D=1.0, d_sign=1))
    env_neg = GscEnv(inst, RewardConfig(C=0.0, D=1.0, d_sign=-1))
    s = env_pos.reset()
    for a in range(env_pos.n_actions):
        n1, r1, _ = env_pos.step(s, a)
        n2, r2, _ = env_neg.step(s, a)
        removed = len(s.survivors) - len(n1.survivors)
        assert r1 - removed == pytest.approx(-(r2 - removed))


@settings(max_examples=40)
@given(st.integers(0, 50), st.lists(st.integers(0, 9), max_size=30))
def test_env_is_pure_and_bounded(seed, log):
    inst = make_instance(3, 4, seed)
    env = GscEnv(inst)
    runs = []
    for _ in range(2):
        s, rewards = env.reset(), []
        for a in log:
            before = {i for i, _ in s.survivors}
            s, r, _ = env.step(s, a)
            after = {i for i, _ in s.survivors}
            assert after <= before
            assert abs(r) <= len(inst.targets) + 0.1 * inst.q * len(inst.targets)
            rewards.append(r)
        runs.append((rewards, env.encode(s).tobytes()))
    assert runs[0] == runs[1]


def test_similarity_gain_uses_survivors_only():
    inst = make_instance(3, 4, 3)
    env = GscEnv(inst, RewardConfig(C=0.0, D=1.0))
    s = env.reset()
    for a in range(env.n_actions):
        n, r, _ = env.step(s, a)
        kept = {i for i, _ in n.survivors}
        before = similarity([p for i, p in s.strings() if i in kept], inst.natives)
        after = similarity([p for _, p in n.strings()], inst.natives)
        removed = len(s.survivors) - len(n.survivors)
        assert r == pytest.approx(after - before + removed)


# ------------------------------------------------------------ epsilon greedy

def test_epsilon_zero_is_argmax_with_low_tie():
    rng = np.random.default_rng(0)
    q = np.array([0.0, 1.0, 3.0, 2.0, 0.0, 3.0])
    assert all(epsilon_greedy(q, 0.0, rng) == 2 for _ in range(20))


def test_epsilon_one_is_uniform():
    rng = np.random.default_rng(1)
    n, draws = 6, 10_000
    counts = np.bincount([epsilon_greedy(np.zeros(n), 1.0, rng) for _ in range(draws)], minlength=n)
    p = 1 / n
    sigma = np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) < 3 * sigma)


# ------------------------------------------------------------------- network

def test_zero_network_outputs_zero():
    net = QNetwork((4, 5, 5, 3), rng=0)
    for p in net.params:
        p[...] = 0
    assert not net.forward(np.ones(4)).any()


def test_single_hidden_layer_hand_case():
    net = QNetwork((2, 2, 2), rng=0)
    net.params[0][...] = np.eye(2)
    net.params[2][...] = np.eye(2)
    net.params[1][...] = net.params[3][...] = 0
    assert net.forward(np.array([1.0, -2.0])).tolist() == [1.0, 0.0]


def test_width_mismatch():
    with pytest.raises(ValueError):
        QNetwork((3, 4, 2), rng=0).forward(np.ones(5))


@pytest.mark.parametrize("sizes", [(3, 4, 2), (5, 8, 8, 3), (4, 16, 16, 4)])
def test_gradient_check(sizes):
    rng = np.random.default_rng(sum(sizes))
    net = QNetwork(sizes, rng=rng, dtype=np.float64)
    x = rng.normal(size=(3, sizes[0]))
    out, acts = net.forward(x, cache=True)
    analytic = net.backward(acts, np.ones_like(out))
    numeric = numeric_grad(lambda: net.forward(x).sum(), net.params)
    for a, n in zip(analytic, numeric):
        rel = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-8)
        assert rel.max() < 1e-4


# ---------------------------------------------------------------- DDQN target

def nets(seed=0):
    policy = QNetwork((4, 8, 3), rng=seed)
    return policy, QNetwork((4, 8, 3), rng=seed + 1)


def test_terminal_target_is_reward():
    p, t = nets()
    assert ddqn_target((np.zeros(4), 0, 1.0, np.ones(4), True), 0.75, p, t) == 1.0


def test_zero_discount_target_is_reward():
    p, t = nets()
    assert ddqn_target((np.zeros(4), 0, 0.5, np.ones(4), False), 0.0, p, t) == pytest.approx(0.5)


def test_same_networks_give_dqn_target():
    p, _ = nets()
    s2 = np.linspace(-1, 1, 4)
    want = 0.3 + 0.75 * float(np.max(p.forward(s2)))
    assert ddqn_target((np.zeros(4), 0, 0.3, s2, False), 0.75, p, p) == pytest.approx(want, rel=1e-6)


def test_policy_selects_target_evaluates():
    p, t = nets()
    s2 = np.linspace(-1, 1, 4)
    a = int(np.argmax(p.forward(s2)))
    want = 0.75 * float(t.forward(s2)[a])
    assert ddqn_targets([0.0], s2[None], [False], 0.75, p, t)[0] == pytest.approx(want, rel=1e-6)


# -------------------------------------------------------------- train_batch

def test_zero_error_batch_leaves_parameters():
    p, t = nets()
    s = np.random.default_rng(0).normal(size=(5, 4)).astype(np.float32)
    a = np.array([0, 1, 2, 0, 1])
    r = p.forward(s)[np.arange(5), a].astype(np.float64)
    before = [x.copy() for x in p.params]
    loss = train_batch(p, t, Adam(p.params), s, a, r, s, np.ones(5, bool), 0.75)
    assert loss == pytest.approx(0.0, abs=1e-10)
    assert all(np.allclose(b, x, atol=1e-12) for b, x in zip(before, p.params))


def test_adam_first_step_is_lr():
    param = [np.array([1.0])]
    opt = Adam(param, lr=1e-3)
    opt.step(param, [np.array([0.37])])
    assert 1.0 - param[0][0] == pytest.approx(1e-3, rel=1e-4)


def test_loss_decreases_on_frozen_batch():
    rng = np.random.default_rng(3)
    p, t = QNetwork((4, 16, 3), rng=1), QNetwork((4, 16, 3), rng=2)
    s = rng.normal(size=(32, 4)).astype(np.float32)
    a = rng.integers(3, size=32)
    r = rng.normal(size=32)
    done = np.ones(32, bool)
    opt = Adam(p.params, lr=1e-2)
    losses = [train_batch(p, t, opt, s, a, r, s, done, 0.75) for _ in range(100)]
    assert losses[-1] < 0.5 * losses[0]


def test_target_untouched_by_training():
    p, t = nets()
    snap = [x.copy() for x in t.params]
    rng = np.random.default_rng(0)
    s = rng.normal(size=(8, 4)).astype(np.float32)
    opt = Adam(p.params, lr=1e-2)
    for _ in range(5):
        train_batch(p, t, opt, s, rng.integers(3, size=8), rng.normal(size=8), s, np.zeros(8, bool), 0.75)
    assert all(np.array_equal(a, b) for a, b in zip(snap, t.params))


def test_replay_ring_wraps():
    buf = ReplayBuffer(3, 2)
    for i in range(5):
        buf.add(np.full(2, i), i % 2, float(i), np.full(2, i), False)
    assert len(buf) == 3 and sorted(buf.rewards.tolist()) == [2.0, 3.0, 4.0]


# -------------------------------------------------------------------- train

def test_config_validation_and_decay():
    with pytest.raises(ValueError):
        TrainConfig(gamma=1.0)
    with pytest.raises(ValueError):
        TrainConfig(eps0=0.1, eps_min=0.2)
    cfg = TrainConfig(episodes=100)
    assert cfg.eps0 * cfg.eps_decay ** 100 == pytest.approx(cfg.eps_min)
    cmp = TrainConfig.comparison()
    assert (cmp.episodes, cmp.max_actions) == (5000, 100)


def test_zero_episodes():
    res = train([make_instance(3, 4, 0)], TrainConfig(episodes=0, **SMALL))
    assert res.curve == [] and res.best == {} and res.env_steps == 0


def test_train_bookkeeping():
    inst = make_instance(3, 4, 0)
    cfg = TrainConfig(episodes=40, max_actions=30, **SMALL)
    res = train([inst], cfg)
    assert res.env_steps == sum(r.steps for r in res.curve)
    for r in res.curve:
        if not r.resolved:
            assert r.raw_count == r.cancelled_count == 2 * cfg.max_actions
        else:
            assert r.cancelled_count <= r.raw_count
    for k, sol in res.best.items():
        assert verify_gscd(inst, sol.gates)
    eps = [r.epsilon for r in res.curve]
    assert all(a >= b for a, b in zip(eps, eps[1:]))


def test_train_is_deterministic():
    inst = make_instance(3, 4, 1)
    cfg = TrainConfig(episodes=15, max_actions=20, **SMALL)
    a, b = train([inst], cfg), train([inst], cfg)
    # repr so that nan losses compare equal
    assert [repr(r) for r in a.curve] == [repr(r) for r in b.curve]
    assert all(np.array_equal(x, y) for x, y in zip(a.policy.params, b.policy.params))


def test_step_budget_caps_environment_steps():
    cfg = TrainConfig(episodes=100, max_actions=50, step_budget=120, **SMALL)
    res = train([make_instance(3, 4, 2)], cfg)
    assert res.env_steps == 120


def test_instances_must_share_width():
    with pytest.raises(ValueError):
        train([make_instance(3, 4, 0), make_instance(4, 4, 0)], TrainConfig(episodes=1, **SMALL))


# ----------------------------------------------------------- greedy rollout

def constant_net(width, n_actions, action):
    net = QNetwork((width, 4, n_actions), rng=0)
    for p in net.params:
        p[...] = 0
    net.params[-1][action] = 1.0
    return net


def test_stuck_two_cycle_detected():
    inst = inst_of("XXII")
    net = constant_net(16, 14, 0)  # H on qubit 0 forever
    got = evaluate_greedy(net, inst, max_actions=100)
    assert isinstance(got, Stuck) and got.reason == "loop" and len(got.word) <= 3


def test_native_targets_resolve_with_empty_word():
    inst = inst_of("ZIII")
    got = evaluate_greedy(constant_net(16, 14, 0), inst, max_actions=10)
    assert not isinstance(got, Stuck) and got.gates == ()


def test_checkpoint_round_trip(tmp_path):
    cfg = TrainConfig(episodes=3, max_actions=10, **SMALL)
    net = QNetwork((16, 16, 16, 14), rng=0)
    opt = Adam(net.params)
    opt.t = 7
    save_checkpoint(tmp_path / "c.npz", net, opt, 3, cfg)
    net2, opt2, ep = load_checkpoint(tmp_path / "c.npz", cfg)
    assert ep == 3 and opt2.t == 7
    assert all(np.array_equal(a, b) for a, b in zip(net.params, net2.params))
    with pytest.raises(ValueError):
        load_checkpoint(tmp_path / "c.npz", TrainConfig(episodes=4, **SMALL))


def test_curve_csv(tmp_path):
    res = train([make_instance(3, 4, 0)], TrainConfig(episodes=5, max_actions=10, **SMALL))
    write_curve(res.curve, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "episode;raw_count;cancelled_count;epsilon;loss"
    assert len(lines) == 6
