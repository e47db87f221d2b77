import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pauliforge.bench import (DEFAULT_BUDGETS, RATIO_BANDS, ExperimentSpec, GeneralizationConfig,
                              baseline_counts, generalization_csv, job_seed, manifest, parse_csv,
                              ratio_histogram, run_generalization, run_suite, runs_csv,
                              summary_csv, write_suite)
from pauliforge.compile import make_instance, naive_individual, naive_word
from pauliforge.rl.ddqn import TrainConfig

TINY_RL = dict(hidden=[16, 16], warmup=20, batch_size=8, sync_every=50, replay_capacity=500,
               episodes=500, max_actions=60)


def test_single_target_baseline_is_twice_its_word():
    inst = make_instance(4, 1, 3)
    n_sim, n_ind = baseline_counts(inst, orderings=5)
    assert n_ind == 2 * len(naive_word(inst.targets[0]))
    assert n_sim == n_ind


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_individual_count_ignores_target_order(seed, t):
    inst = make_instance(4, t, seed)
    reversed_inst = inst.with_targets(inst.targets[::-1])
    assert naive_individual(reversed_inst).cost == naive_individual(inst).cost


@pytest.mark.parametrize("seed", range(5))
def test_simultaneous_baseline_is_larger(seed):
    n_sim, n_ind = baseline_counts(make_instance(4, 8, seed), orderings=20, seed=seed)
    # adjoints of earlier prefixes inflate the simultaneous body
    assert n_ind < n_sim < 3 * n_ind


def test_budget_ordering_enforced():
    with pytest.raises(ValueError):
        ExperimentSpec(methods=("rl", "mcts"), budgets={"rl": 10, "mcts": 5})
    with pytest.raises(ValueError):
        ExperimentSpec(methods=("sa", "mcts"), budgets={"mcts": 10, "sa": 10})
    ExperimentSpec(methods=("rl", "sa"), budgets={"rl": 10, "sa": 20})


def test_spec_rejects_unknown_keys_and_methods():
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({"nme": "typo"})
    with pytest.raises(ValueError):
        ExperimentSpec(methods=("ga",))


def test_method_config_folds_budget():
    spec = ExperimentSpec.from_dict({"methods": ["rl", "mcts", "sa"],
                                     "configs": {"rl": {"hidden": [8, 8]}}})
    rl = spec.method_config("rl")
    assert isinstance(rl, TrainConfig)
    assert rl.step_budget == DEFAULT_BUDGETS["rl"] and rl.hidden == (8, 8)
    assert spec.method_config("sa").budget == DEFAULT_BUDGETS["sa"]
    assert spec.method_config("mcts").budget == DEFAULT_BUDGETS["mcts"]


def test_job_seeds_are_distinct():
    seeds = {job_seed(0, s, m, r) for s in range(3) for m in ("rl", "sa", "mcts") for r in range(3)}
    assert len(seeds) == 27
    assert job_seed(0, 1, "sa", 2) == job_seed(0, 1, "sa", 2)


def test_naive_only_suite():
    spec = ExperimentSpec(methods=("naive",), q=3, t_size=4, instance_seeds=(0, 1), baseline_orderings=5)
    res = run_suite(spec, workers=1)
    assert [r.instance for r in res.rows] == [0, 1]
    assert res.jobs == []
    rows = parse_csv(summary_csv(res))
    assert list(rows[0]) == ["instance", "n_sim", "n_ind"]


def small_spec(**kw):
    base = dict(methods=("naive", "rl", "mcts", "sa"), q=3, t_size=4, instance_seeds=(0,), repeats=2,
                configs={"rl": TINY_RL, "sa": {"anneal_steps": 200}, "mcts": {"stop_after": 5}},
                budgets={"rl": 3000, "mcts": 4000, "sa": 5000}, baseline_orderings=5)
    base.update(kw)
    return ExperimentSpec(**base)


def test_suite_rows_and_csv_round_trip(tmp_path):
    res = run_suite(small_spec(), workers=1)
    assert len(res.jobs) == 6
    assert all(j.diagnostic == "" for j in res.jobs)
    summary = parse_csv(summary_csv(res))
    row = res.rows[0]
    for m in ("rl", "mcts", "sa"):
        raw, full = row.best[m]
        assert summary[0][f"{m}_raw"] == str(raw) and summary[0][f"{m}_full"] == str(full)
        assert float(summary[0][f"{m}_full_pct"]) == pytest.approx(100 * full / row.n_ind, abs=0.05)
        assert full <= raw
    runs = parse_csv(runs_csv(res))
    assert {r["method"] for r in runs} == {"rl", "mcts", "sa"}
    paths = write_suite(res, tmp_path)
    assert (tmp_path / "manifest.json") in paths
    assert any(p.name.startswith("curve_0_rl_") for p in paths)


def test_suite_output_is_deterministic(tmp_path):
    spec = small_spec(repeats=1)
    a, b = tmp_path / "a", tmp_path / "b"
    write_suite(run_suite(spec, workers=1), a)
    write_suite(run_suite(spec, workers=2), b)
    for name in ("summary.csv", "runs.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_manifest_records_hashes_and_seeds():
    spec = small_spec()
    man = manifest(spec)
    assert set(man["config_hashes"]) == {"rl", "mcts", "sa"}
    assert len(man["seeds"]) == 3 * 2
    assert json.loads(json.dumps(man)) == man
    assert manifest(small_spec(seed=1))["spec_hash"] != man["spec_hash"]


# ------------------------------------------------------------ generalization

def test_ratio_histogram_bands():
    hist = ratio_histogram([0.2, 0.6, 1.0, 1.3, 3.0, None, None, 0.99])
    assert len(hist) == len(RATIO_BANDS) + 1
    assert hist == pytest.approx([1 / 8, 1 / 8, 1 / 8, 1 / 8, 1 / 8, 0, 1 / 8, 2 / 8])
    assert sum(hist) == pytest.approx(1.0)


def test_ratio_histogram_empty():
    assert sum(ratio_histogram([])) == 0


def test_generalization_single_state():
    gcfg = GeneralizationConfig(sizes=(1,), q=3, t_size=3, train={**TINY_RL, "episodes": 40}, window=10)
    rows = run_generalization(gcfg, workers=1)
    assert len(rows) == 1 and rows[0].size == 1
    assert rows[0].mean_naive == naive_individual(make_instance(3, 3, 0)).cost
    assert sum(rows[0].histogram) == pytest.approx(1.0)
    text = generalization_csv(rows)
    assert parse_csv(text)[0]["size"] == "1"
