import itertools
from math import comb, log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gala.clustering_eval import (
    ClusterAssignment,
    EvaluationError,
    MetricsReport,
    accuracy,
    ari,
    auc_ap,
    evaluate_node_clustering,
    kmeans,
    nmi,
    repeated_clustering,
    sample_non_edges,
    spectral_clustering,
    spectral_embedding,
    split_edges,
    subspace_affinity_graph,
)
from gala.graph_ops import Graph
from gala.objectives import SubspaceConfig

from conftest import cliques, random_graph

# ---------------------------------------------------------------- oracles


def partitions(n):
    """Every labelling of n items as restricted-growth strings (one per set partition)."""
    def rec(prefix, m):
        if len(prefix) == n:
            yield list(prefix)
            return
        for c in range(m + 1):
            yield from rec(prefix + [c], max(m, c + 1))
    yield from rec([], 0)


def pair_count_ari(t, p):
    n = len(t)
    a = b = c = d = 0
    for i, j in itertools.combinations(range(n), 2):
        same_t, same_p = t[i] == t[j], p[i] == p[j]
        a += same_t and same_p
        b += same_t and not same_p
        c += same_p and not same_t
        d += not same_t and not same_p
    pairs = a + b + c + d
    if pairs == 0:
        return 1.0
    expected = (a + b) * (a + c) / pairs
    maximum = ((a + b) + (a + c)) / 2
    if maximum == expected:
        return 1.0
    return (a - expected) / (maximum - expected)


def contingency_nmi(t, p):
    n = len(t)
    ct = {}
    for x, y in zip(t, p):
        ct[(x, y)] = ct.get((x, y), 0) + 1
    rt = {x: sum(1 for v in t if v == x) for x in set(t)}
    rp = {y: sum(1 for v in p if v == y) for y in set(p)}
    mi = sum(c / n * log(c * n / (rt[x] * rp[y])) for (x, y), c in ct.items())
    ht = -sum(c / n * log(c / n) for c in rt.values())
    hp = -sum(c / n * log(c / n) for c in rp.values())
    if ht == 0 and hp == 0:
        return 1.0
    return mi / ((ht + hp) / 2) if ht + hp > 0 else 0.0


def brute_accuracy(t, p):
    """Best injective cluster->class matching by exhaustive DP over subsets of classes."""
    classes, clusters = sorted(set(t)), sorted(set(p))
    table = [[sum(1 for x, y in zip(t, p) if x == c and y == q) for c in classes] for q in clusters]
    best = {0: 0}
    for row in table:
        nxt = dict(best)  # this cluster left unmatched
        for used, score in best.items():
            for c, cnt in enumerate(row):
                if not used >> c & 1:
                    key = used | 1 << c
                    nxt[key] = max(nxt.get(key, 0), score + cnt)
        best = nxt
    return max(best.values()) / len(t)


def pairwise_auc(pos, neg):
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (len(pos) * len(neg))


# ---------------------------------------------------------------- k-means / spectral


def test_kmeans_examples():
    r = kmeans([[0.0], [0.1], [10.0], [10.1]], 2, seed=0)
    assert r.labels[0] == r.labels[1] != r.labels[2] == r.labels[3]
    np.testing.assert_allclose(np.sort(r.centroids.ravel()), [0.05, 10.05])
    pts = np.random.default_rng(0).normal(size=(5, 2))
    r = kmeans(pts, 5, seed=0)
    assert sorted(r.labels) == [0, 1, 2, 3, 4] and r.inertia == pytest.approx(0, abs=1e-20)
    r = kmeans([[1.5, -2.0], [1.5, -2.0]], 1)
    np.testing.assert_array_equal(r.centroids, [[1.5, -2.0]])
    with pytest.raises(EvaluationError):
        kmeans(pts, 6)


def test_cluster_assignment_invariants():
    with pytest.raises(EvaluationError):
        ClusterAssignment(np.array([0, 2]), 2)
    with pytest.raises(EvaluationError):
        ClusterAssignment(np.array([0]), 0)


def test_spectral_clustering_examples():
    g, comp = cliques(5, 5)
    assert accuracy(comp, spectral_clustering(g, 2, seed=0)) == 1.0
    g, _ = cliques(6)
    r = spectral_clustering(g, 1)
    assert np.all(r.labels == 0)
    g, comp = cliques(3, 3, 3)
    assert accuracy(comp, spectral_clustering(g, 3, seed=1)) == 1.0
    with pytest.raises(EvaluationError):
        spectral_clustering(g, 10)


def test_spectral_embedding_rows_unit_or_zero():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    g = Graph(6, __import__("scipy.sparse", fromlist=["x"]).block_diag([g.affinity, [[0]]]).tocsr())
    emb = spectral_embedding(g, 2)
    norms = np.linalg.norm(emb, axis=1)
    assert np.all(np.isclose(norms, 1) | (norms == 0))
    assert norms[5] == 0


def test_spectral_jacobi_and_lapack_agree():
    g, comp = cliques(4, 5, 6)
    a = spectral_clustering(g, 3, seed=3, eig_method="jacobi")
    b = spectral_clustering(g, 3, seed=3, eig_method="lapack")
    assert accuracy(a, b) == 1.0 == accuracy(comp, a)


# ---------------------------------------------------------------- metrics


def test_accuracy_examples():
    assert accuracy([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert accuracy([0, 0, 1, 1], [0, 1, 0, 1]) == 0.5
    assert accuracy([2, 0, 1], [2, 0, 1]) == 1.0
    with pytest.raises(EvaluationError):
        accuracy([0, 1], [0])


def test_nmi_examples():
    assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert nmi([0, 0, 1, 1], [0, 0, 0, 0]) == 0.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)
    assert nmi([0, 0, 0], [1, 1, 1]) == 1.0
    with pytest.raises(EvaluationError):
        nmi([0], [0, 1])


def test_ari_examples(rng):
    assert ari([0, 1, 1, 2], [5, 3, 3, 4]) == 1.0
    assert ari([0, 0, 1, 1], [0, 0, 0, 0]) == pytest.approx(0.0)
    t, p = rng.integers(0, 3, 8), rng.integers(0, 3, 8)
    assert ari(t, p) == pytest.approx(pair_count_ari(list(t), list(p)), abs=1e-12)
    with pytest.raises(EvaluationError):
        ari([0], [0, 1])


# n = 6 (203^2 pairs, about a minute) runs in the acceptance suite
@pytest.mark.parametrize("n", range(1, 6))
def test_metrics_match_oracles_exhaustively(n):
    parts = list(partitions(n))
    for t in parts:
        for p in parts:
            assert ari(t, p) == pytest.approx(pair_count_ari(t, p), abs=1e-12)
            assert nmi(t, p) == pytest.approx(contingency_nmi(t, p), abs=1e-12)
            assert accuracy(t, p) == pytest.approx(brute_accuracy(t, p), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=12), st.data())
def test_metrics_invariant_under_relabeling(t, data):
    p = data.draw(st.lists(st.integers(0, 3), min_size=len(t), max_size=len(t)))
    perm = data.draw(st.permutations(range(4)))
    q = [perm[v] for v in p]
    assert accuracy(t, p) == pytest.approx(accuracy(t, q))
    assert nmi(t, p) == pytest.approx(nmi(t, q), abs=1e-12)
    assert ari(t, p) == pytest.approx(ari(t, q), abs=1e-12)
    assert 0 <= accuracy(t, p) <= 1 and 0 <= nmi(t, p) <= 1 + 1e-12 and ari(t, p) <= 1 + 1e-12


def test_auc_ap_examples():
    assert auc_ap([0.9, 0.8], [0.1, 0.2]) == (1.0, 1.0)
    assert auc_ap([0.5], [0.5])[0] == 0.5
    assert auc_ap([0.8, 0.3], [0.6, 0.1])[0] == 0.75
    # AP by the step rule: precision 1 at recall 1/2, precision 2/3 at recall 1
    assert auc_ap([0.8, 0.3], [0.6, 0.1])[1] == pytest.approx(0.5 * 1 + 0.5 * 2 / 3)
    with pytest.raises(EvaluationError):
        auc_ap([], [0.1])


def test_auc_matches_pairwise_oracle(rng):
    for _ in range(100):
        pos = np.round(rng.random(rng.integers(1, 15)), 1)
        neg = np.round(rng.random(rng.integers(1, 15)), 1)
        auc, ap = auc_ap(pos, neg)
        assert auc == pytest.approx(pairwise_auc(pos, neg), abs=1e-12)
        assert 0 <= ap <= 1


# ---------------------------------------------------------------- splits


def _twenty_edge_graph():
    rng = np.random.default_rng(0)
    iu, ju = np.triu_indices(10, k=1)
    pick = rng.choice(iu.size, 20, replace=False)
    return Graph.from_edges(10, np.stack([iu[pick], ju[pick]], axis=1))


def test_split_counts_and_invariants():
    g = _twenty_edge_graph()
    s = split_edges(g, 0.05, 0.10, seed=0)
    assert (len(s.val_pos), len(s.test_pos), s.train_graph.num_edges) == (1, 2, 17)
    assert len(s.val_neg) == 1 and len(s.test_neg) == 2
    train = s.train_graph.dense()
    for i, j in np.concatenate([s.val_pos, s.test_pos]):
        assert train[i, j] == 0 and g.dense()[i, j] == 1
    neg = np.concatenate([s.val_neg, s.test_neg])
    assert all(g.dense()[i, j] == 0 and i != j for i, j in neg)
    assert len({tuple(e) for e in neg}) == len(neg)
    np.testing.assert_array_equal(train, train.T)


def test_split_is_deterministic_and_seed_sensitive():
    g = random_graph(np.random.default_rng(1), 30, 0.2)
    a, b, c = split_edges(g, seed=5), split_edges(g, seed=5), split_edges(g, seed=6)
    for f in ("val_pos", "val_neg", "test_pos", "test_neg"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    assert not np.array_equal(a.test_pos, c.test_pos)


def test_split_errors():
    g, _ = cliques(8)
    with pytest.raises(EvaluationError, match="non-edges"):
        split_edges(g)
    with pytest.raises(EvaluationError, match="too few"):
        split_edges(Graph.from_edges(4, [(0, 1), (2, 3)]))
    with pytest.raises(EvaluationError):
        split_edges(_twenty_edge_graph(), 0.6, 0.5)


def test_sample_non_edges_respects_exclude(rng):
    g = random_graph(rng, 12, 0.3)
    other = random_graph(rng, 12, 0.3)
    pairs = sample_non_edges(g, 10, rng, exclude=other)
    assert all(g.dense()[i, j] == 0 and other.dense()[i, j] == 0 and i < j for i, j in pairs)


# ---------------------------------------------------------------- end to end


def test_evaluate_one_hot_latents():
    truth = np.repeat([0, 1, 2], 10)
    h = np.eye(3)[truth] + 0.01 * np.random.default_rng(0).normal(size=(30, 3))
    r = evaluate_node_clustering(h, truth, k_nn=5, seed=0)
    assert r.metrics == {"acc": 1.0, "nmi": 1.0, "ari": 1.0}
    assert r.to_json() == evaluate_node_clustering(h, truth, k_nn=5, seed=0).to_json()


def test_evaluate_shuffled_labels_near_chance():
    truth = np.repeat([0, 1, 2], 20)
    h = np.eye(3)[truth] + 0.05 * np.random.default_rng(0).normal(size=(60, 3))
    accs = []
    for s in range(5):
        shuffled = np.random.default_rng(100 + s).permutation(truth)
        accs.append(evaluate_node_clustering(h, shuffled, k_nn=10, seed=s).metrics["acc"])
    assert np.mean(accs) < 0.6


def test_evaluate_subspace_affinity_separates_independent_subspaces():
    rng = np.random.default_rng(0)
    # two 2-D subspaces of R^6, 15 points each
    bases = [np.linalg.qr(rng.normal(size=(6, 2)))[0] for _ in range(2)]
    h = np.concatenate([(b @ rng.normal(size=(2, 15))).T for b in bases])
    truth = np.repeat([0, 1], 15)
    g = subspace_affinity_graph(h, SubspaceConfig(lam=100.0, mu=1.0))
    assert g.dense().diagonal().max() == 0
    r = evaluate_node_clustering(h, truth, affinity="subspace", subspace=SubspaceConfig(lam=100.0, mu=1.0))
    assert r.metrics["acc"] == 1.0


def test_evaluate_errors():
    with pytest.raises(EvaluationError):
        evaluate_node_clustering(np.zeros((4, 2)), [0, 1])
    with pytest.raises(EvaluationError):
        evaluate_node_clustering(np.eye(4), [0, 1, 0, 1], k_nn=2, affinity="cosine")


def test_repeated_clustering_statistics():
    truth = np.repeat([0, 1, 2], 10)
    h = np.eye(3)[truth] + 0.01 * np.random.default_rng(0).normal(size=(30, 3))
    one = repeated_clustering(h, truth, runs=1, k_nn=5)
    many = repeated_clustering(h, truth, runs=50, k_nn=5)
    assert set(one.metrics) == set(many.metrics)
    assert one.metrics["acc_std"] == 0.0
    assert many.metrics["acc_mean"] == 1.0 and many.metrics["acc_std"] == 0.0
    assert repeated_clustering(h, truth, runs=3, k_nn=5, seed=9).to_json() == \
        repeated_clustering(h, truth, runs=3, k_nn=5, seed=9).to_json()


def test_metrics_report_json_is_sorted():
    r = MetricsReport({"b": 1.0, "a": 0.5}, {"z": 1}, seed=3)
    text = r.to_json()
    assert text.index('"a"') < text.index('"b"') and text.endswith("\n")
