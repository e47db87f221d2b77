import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pauliforge.compile import verify_gscd
from pauliforge.complexity import (Graph, LabelPoolExhausted, SearchLimitError, brute_gscd,
                                   brute_hamiltonian_path, connected_graphs, hp2hps, hps2gscd,
                                   read_graph, round_trip, write_graph)
from pauliforge.pauli import PauliString

from oracles import hamiltonian_path_exists


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 5)])
    assert Graph.from_edges(3, [(1, 0)]).edges == frozenset({(0, 1)})


def test_hp2hps_adds_universal_start():
    g = hp2hps(path_graph(3))
    assert g.n == 4 and g.start == 3
    assert all(g.adjacent(3, v) for v in range(3))


def test_connected_graph_counts():
    # labelled connected graphs on 1..4 vertices: 1, 1, 4, 38
    assert [sum(1 for _ in connected_graphs(n)) for n in range(1, 5)] == [1, 1, 4, 38]


def test_brute_path_matches_permutation_oracle():
    for g in connected_graphs(4):
        for s in range(4):
            found = brute_hamiltonian_path(g, s)
            assert (found is not None) == hamiltonian_path_exists(4, g.edges, s)
            if found:
                assert found[0] == s and sorted(found) == list(range(4))


def test_brute_path_limit():
    with pytest.raises(SearchLimitError):
        brute_hamiltonian_path(path_graph(12), 0)


def test_reduction_shape():
    g = hp2hps(path_graph(3))
    red = hps2gscd(g)
    inst = red.instance
    assert len(inst.targets) == 3
    assert inst.natives == (PauliString(inst.q, 0, (1 << inst.q) - 1),)
    assert all(t.weight == inst.q for t in inst.targets)  # only X and Z letters
    assert red.budget == len(inst.targets) - 1
    labels = red.labeled.vertex_labels
    assert labels[g.start] == 0 and len(set(labels.values())) == g.n


def test_labels_have_no_spurious_edges():
    for g in connected_graphs(4):
        red = hps2gscd(hp2hps(g))
        lab = red.labeled.vertex_labels
        edge_xor = set(red.labeled.edge_labels.values())
        for u, v in itertools.combinations(lab, 2):
            if not red.labeled.graph.adjacent(u, v):
                assert lab[u] ^ lab[v] not in edge_xor


def test_explicit_small_q_may_exhaust_labels():
    g = hp2hps(Graph.from_edges(4, []))
    with pytest.raises(LabelPoolExhausted):
        hps2gscd(g, q=2)


def test_path_solution_maps_to_gscd_word():
    g = hp2hps(path_graph(3))
    red = hps2gscd(g)
    word = brute_gscd(red.instance, len(red.instance.targets))
    assert word is not None and verify_gscd(red.instance, word)


def test_brute_gscd_none_when_budget_too_small():
    g = hp2hps(path_graph(3))
    red = hps2gscd(g)
    assert brute_gscd(red.instance, 1) is None


@settings(max_examples=25)
@given(st.integers(2, 5), st.data())
def test_round_trip_agrees(n, data):
    pairs = list(itertools.combinations(range(n), 2))
    mask = data.draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    g = Graph.from_edges(n, [p for p, keep in zip(pairs, mask) if keep])
    assert round_trip(g)["agree"]


def test_graph_file_round_trip(tmp_path):
    g = hp2hps(path_graph(4))
    write_graph(g, tmp_path / "g.txt")
    assert read_graph(tmp_path / "g.txt") == g
