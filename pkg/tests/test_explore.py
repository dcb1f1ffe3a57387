import numpy as np
import pytest

from conftest import complete_graph, cycle_graph, path_graph, random_tree
from dgreedy.errors import InvalidSequence
from dgreedy.exact import exact_alpha
from dgreedy.explore import SelectionSequence, degree_greedy, uniform_greedy, verify_selection_sequence
from dgreedy.graphgen import MultiGraph, sample_cm, sample_degrees
from dgreedy.rng import stream
from dgreedy.spectra import poisson_distribution


def sampled(lam, n, master, trial):
    d = sample_degrees(poisson_distribution(lam), n, stream(master, trial, "degrees"))
    return sample_cm(d, stream(master, trial, "matching"))


def test_path_and_triangle(rng):
    r = degree_greedy(path_graph(3), rng)
    assert r.sigma == 2 and r.t1_violations == 0
    assert set(r.sequence.vertices) == {0, 2}
    assert degree_greedy(cycle_graph(3), rng).sigma == 1


def test_uniform_trivial_graphs(rng):
    assert uniform_greedy(MultiGraph.from_edges(5, []), rng).sigma == 5
    assert uniform_greedy(complete_graph(4), rng).sigma == 1


def test_verify_examples():
    g = path_graph(3)
    assert verify_selection_sequence(g, SelectionSequence((0, 2), (1, 0))) == (True, True, True)
    assert verify_selection_sequence(g, [1]) == (True, True, False)
    assert verify_selection_sequence(g, [0]) == (True, False, True)
    with pytest.raises(InvalidSequence):
        verify_selection_sequence(g, [0, 1])
    with pytest.raises(InvalidSequence):
        verify_selection_sequence(g, [3])


def test_self_loops_never_selected(rng):
    g = MultiGraph.from_edges(4, [(0, 0), (0, 1), (2, 3)])
    for _ in range(20):
        r = degree_greedy(g, rng)
        assert 0 not in r.sequence.vertices
        assert verify_selection_sequence(g, r.sequence)[:2] == (True, True)
    assert not verify_selection_sequence(g, [0]).independent


def test_multi_edge_degrees(rng):
    g = MultiGraph.from_edges(3, [(0, 1), (0, 1), (1, 2)])
    r = degree_greedy(g, rng)
    assert r.sequence.vertices[0] == 2 and r.sigma == 2


@pytest.mark.parametrize("policy", [degree_greedy, uniform_greedy])
@pytest.mark.parametrize("lam", [0.8, 1.2, 2.0, 4.0])
def test_outputs_are_maximal_independent(policy, lam):
    for trial in range(10):
        g = sampled(lam, 400, 5, trial)
        r = policy(g, stream(5, trial, "explore"))
        independent, maximal, t1 = verify_selection_sequence(g, r.sequence)
        assert independent and maximal
        assert t1 == (r.t1_violations == 0)
        assert r.sigma == len(r.sequence)
        assert r.t1_violations == sum(d >= 2 for d in r.sequence.selected_degrees)


def test_selected_degrees_match_replay():
    g = sampled(2.0, 300, 9, 0)
    r = degree_greedy(g, stream(9, 0, "explore"))
    # replaying a prefix that stops right before each violation must still be T1
    for step, d in enumerate(r.sequence.selected_degrees):
        if d >= 2:
            assert verify_selection_sequence(g, r.sequence.vertices[:step]).t1
            assert not verify_selection_sequence(g, r.sequence.vertices[:step + 1]).t1
            break


def test_degree_greedy_is_deterministic():
    g = sampled(1.5, 2000, 1, 0)
    a = degree_greedy(g, stream(1, 0, "explore"))
    b = degree_greedy(g, stream(1, 0, "explore"))
    assert a == b


def test_trees_are_solved_exactly(rng):
    for _ in range(50):
        t = random_tree(int(rng.integers(1, 201)), rng)
        r = degree_greedy(t, rng)
        assert verify_selection_sequence(t, r.sequence) == (True, True, True)
        assert r.sigma == exact_alpha(t).alpha


def test_t1_implies_optimal_up_to_60():
    checked = 0
    for trial in range(300):
        lam = [0.8, 1.2, 1.6, 2.5][trial % 4]
        g = sampled(lam, 10 + trial % 51, 21, trial)
        r = degree_greedy(g, stream(21, trial, "explore"))
        if verify_selection_sequence(g, r.sequence).t1:
            assert r.sigma == exact_alpha(g).alpha
            checked += 1
    assert checked > 100


def test_subcritical_violations_rare():
    ok = sum(
        degree_greedy(sampled(0.8, 10_000, 31, t), stream(31, t, "explore")).t1_violations / 10_000 <= 0.01
        for t in range(100)
    )
    assert ok >= 95


def test_first_violation_leaves_only_cycles():
    # Degree-greedy picks a degree >= 2 vertex only when every remaining
    # degree is >= 2, so the remaining nu is at least 1; below the one-step
    # threshold it is exactly 1 (disjoint cycles) and the remainder is tiny.
    hits = []
    for t in range(100):
        r = degree_greedy(sampled(1.2, 10_000, 41, t), stream(41, t, "explore"))
        if r.first_violation_step is not None:
            hits.append(r)
    assert hits
    nu_ok = sum(r.remaining_nu_at_first_violation <= 1 + 1e-12 for r in hits)
    assert nu_ok >= 0.9 * len(hits)
    assert all(r.remaining_fraction_at_first_violation <= 0.01 for r in hits)


def test_degree_greedy_beats_uniform():
    wins = 0
    for t in range(50):
        g = sampled(1.0, 100_000, 51, t)
        dg = degree_greedy(g, stream(51, t, "explore")).sigma
        gr = uniform_greedy(g, stream(51, t, "explore")).sigma
        wins += gr < dg
    assert wins >= 48


def test_record_and_trace():
    g = path_graph(3)
    r = degree_greedy(g, 0)
    rec = r.record(seed=0)
    assert set(rec) == {"sigma", "n", "t1_violations", "first_violation_step",
                        "remaining_nu_at_first_violation", "seed"}
    lines = r.trace_csv().splitlines()
    assert lines[0] == "step,vertex,degree_at_selection"
    assert len(lines) == 3
