import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrxray.biset import ConnectorSet, WreathRecursion, identity_recursion
from corrxray.cli import RABBIT_RECURSION
from corrxray.groups import enumerate_ball, parse_word
from corrxray.orbits import (
    BudgetExceeded,
    GraphNotClosed,
    attractor,
    check_contraction,
    drop_profile,
    dumps,
    explore,
    explore_relation,
    graph_to_dot,
    graph_to_json,
    node_norms,
    tarjan,
)

RABBIT = WreathRecursion.from_json(RABBIT_RECURSION)
X = ConnectorSet.basis(2, 1)


@pytest.fixture(scope="module")
def rabbit6():
    g = explore(enumerate_ball(6, 2), X, RABBIT, workers=1)
    return g, attractor(g)


def test_rabbit_attractor(rabbit6):
    g, rep = rabbit6
    assert g.closed
    assert rep.words == [(), (1,), (2,), (-2,)]
    assert rep.forward_closed


def test_every_ray_enters_within_entry_bound(rabbit6):
    g, rep = rabbit6
    members = set(rep.members.tolist())
    level = set(range(g.n_seeds))
    reached = {v for v in level if v in members}
    for _ in range(rep.entry_bound):
        level = {int(j) for v in level - members for j in g.successors(v)}
    assert level <= members
    assert reached <= members


def test_empty_seeds():
    g = explore([], X, RABBIT)
    assert len(g) == 0 and g.closed
    rep = attractor(g)
    assert rep.words == [] and rep.entry_bound == 0


def test_budget_exceeded_keeps_partial_graph():
    with pytest.raises(BudgetExceeded) as e:
        explore(enumerate_ball(3, 2), X, identity_recursion(2, 2), max_nodes=10)
    assert len(e.value.graph) <= 10 or e.value.graph.frontier
    with pytest.raises(GraphNotClosed):
        attractor(e.value.graph)


def test_depth_limit():
    step = lambda n: [(n + 1, 0)]  # noqa: E731
    with pytest.raises(BudgetExceeded) as e:
        explore_relation([0], step, max_depth=5, workers=1)
    assert not e.value.graph.closed


def test_relation_cycle_attractor():
    g = explore_relation([0, 7], lambda n: [((n + 1) % 5, 0), (n % 3, 1)] if n < 5 else [(0, 0)], workers=1)
    rep = attractor(g, key=lambda n: n)
    assert rep.words == [0, 1, 2, 3, 4]
    assert rep.entry_bound == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=120))))
def test_tarjan_matches_networkx(data):
    n, edges = data
    edges = sorted(set(edges))
    ptr = np.zeros(n + 1, dtype=np.int64)
    for u, _ in edges:
        ptr[u + 1] += 1
    ptr = np.cumsum(ptr)
    dst = np.array([v for _, v in edges], dtype=np.int64)
    comp, nc = tarjan(ptr, dst)
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    G.add_edges_from(edges)
    ours = {frozenset(np.nonzero(comp == k)[0].tolist()) for k in range(nc)}
    assert ours == {frozenset(c) for c in nx.strongly_connected_components(G)}
    # sinks first: every edge goes to a component numbered no higher
    for u, v in edges:
        assert comp[v] <= comp[u]


def test_workers_do_not_change_the_graph():
    seeds = enumerate_ball(8, 2)  # frontier above the parallel threshold
    g1 = explore(seeds, X, RABBIT, workers=1)
    g2 = explore(seeds, X, RABBIT, workers=2)
    assert dumps(graph_to_json(g1)) == dumps(graph_to_json(g2))


def test_drop_profile_monotone(rabbit6):
    g, _ = rabbit6
    norms = node_norms(g)
    m1, m3 = drop_profile(g, norms, 1), drop_profile(g, norms, 3)
    assert np.all(m3 <= m1 + 1e-12)


def test_contraction_envelope_on_rabbit(rabbit6):
    g, rep = rabbit6
    norms = node_norms(g)
    cr = check_contraction(g, norms, rep)
    assert np.isfinite(cr.xi) and cr.xi >= 0
    assert cr.envelope_ok and cr.envelope_violations == 0
    assert cr.tail_max_norm <= cr.radius + 1e-12
    # the increment bound holds edge by edge
    src = np.repeat(np.arange(len(g)), np.diff(g.ptr))
    assert np.all(norms[g.dst] - norms[src] <= cr.xi + 1e-12)
    for ray in cr.rays:
        assert ray["words"][0] == ray["start"]


def test_exports_are_deterministic(rabbit6):
    g, rep = rabbit6
    g2 = explore(enumerate_ball(6, 2), X, RABBIT, workers=1)
    rep2 = attractor(g2)
    assert dumps(graph_to_json(g, rep)) == dumps(graph_to_json(g2, rep2))
    dot = graph_to_dot(g, rep, only_attractor=True)
    assert dot == graph_to_dot(g2, rep2, only_attractor=True)
    assert dot.count("doublecircle") == 4
    assert '"a"' in dot and '"e"' in dot


def test_seed_order_fixes_numbering():
    g = explore([parse_word("abab"), ()], X, RABBIT, workers=1)
    assert g.nodes[0] == parse_word("abab") and g.nodes[1] == ()
