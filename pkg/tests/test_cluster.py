import json
import time
from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import connected_components
from sklearn.metrics import adjusted_rand_score
from sklearn.pipeline import make_pipeline

from sociominer.cluster import (ClusterAssignment, JaccardAffinity, KMeans, SpectralClustering,
                                SSECurve, TouchMatrix, jaccard_affinity, kmeans, spectral_cluster,
                                spectral_embedding, sse_sweep, suggest_knee)
from sociominer.errors import CurveTooShort, InputError, InvalidK, IsolatedRows
from sociominer.fixtures import planted_points, planted_touch_matrix


def brute_jaccard(dense):
    sets = [set(np.flatnonzero(r)) for r in dense]
    n = len(sets)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = float(Fraction(len(sets[i] & sets[j]), len(sets[i] | sets[j])))
    return out


def random_binary(rng, n, m, p=0.3):
    X = (rng.random((n, m)) < p).astype(np.int64)
    for i in np.flatnonzero(X.sum(axis=1) == 0):
        X[i, rng.integers(m)] = 1
    return X


def block_affinity(sizes):
    n = sum(sizes)
    A = np.zeros((n, n))
    start = 0
    for s in sizes:
        A[start:start + s, start:start + s] = 1.0
        start += s
    return A


# ---- TouchMatrix -------------------------------------------------------------

def test_touch_matrix_from_touches():
    m = TouchMatrix.from_touches({"b": ["f2", "f1"], "a": ["f1"]})
    assert m.row_ids == ("a", "b") and m.columns == ("f1", "f2")
    assert m.to_csr().toarray().tolist() == [[1, 0], [1, 1]]
    assert m.row_sets() == {"a": {"f1"}, "b": {"f1", "f2"}}


def test_touch_matrix_invariants():
    with pytest.raises(InputError):
        TouchMatrix.from_touches({"a": []})
    with pytest.raises(InputError):
        TouchMatrix(("a",), ("f",), (0, 0), (0, 0))


# ---- Jaccard -----------------------------------------------------------------

def test_jaccard_examples():
    m = TouchMatrix.from_touches({"x": {"f1", "f2", "f3"}, "y": {"f2", "f3", "f4"},
                                  "z": {"f1", "f2", "f3"}, "w": {"f9"}})
    A = jaccard_affinity(m)
    ids = list(m.row_ids)
    x, y, z, w = (ids.index(c) for c in "xyzw")
    assert A[x, y] == 0.5
    assert A[x, z] == 1.0
    assert A[x, w] == 0.0


def test_jaccard_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(10):
        X = random_binary(rng, 20, 50)
        A = jaccard_affinity(X)
        assert np.array_equal(A, brute_jaccard(X))
        assert np.abs(A - A.T).max() <= 1e-12
        assert np.all(np.diag(A) == 1.0)
        assert A.min() >= 0 and A.max() <= 1


def test_jaccard_accepts_sparse_and_rejects_non_binary():
    X = random_binary(np.random.default_rng(0), 5, 7)
    assert np.array_equal(jaccard_affinity(sp.csr_matrix(X)), jaccard_affinity(X))
    with pytest.raises(InputError):
        jaccard_affinity(X * 2)


# ---- k-means -----------------------------------------------------------------

def test_kmeans_two_points_one_cluster():
    res = kmeans([[0, 0], [0, 1]], 1)
    assert np.allclose(res.centroids, [[0, 0.5]])
    assert res.sse == pytest.approx(0.5, abs=1e-12)
    assert list(res.labels) == [0, 0]


def test_kmeans_zero_sse_at_distinct_count():
    X = np.array([[0, 0], [1, 1], [1, 1], [5, 2], [0, 0], [3, 3]], dtype=float)
    res = kmeans(X, 4, seed=3)
    assert res.sse == 0.0
    assert len(set(res.labels)) == 4


def test_kmeans_invalid_k():
    X = [[0, 0], [0, 0], [1, 1]]
    for k in (0, 3, -1):
        with pytest.raises(InvalidK):
            kmeans(X, k)


def test_kmeans_deterministic():
    X, _ = planted_points()
    a, b = kmeans(X, 3, seed=5), kmeans(X, 3, seed=5)
    assert a.labels.tobytes() == b.labels.tobytes()
    assert a.centroids.tobytes() == b.centroids.tobytes()
    assert a.sse == b.sse and a.history == b.history


def test_kmeans_more_restarts_never_worse():
    # restart r uses its own (seed, r) stream, so restarts=r+1 extends restarts=r
    X, _ = planted_points()
    sse = [kmeans(X, 4, seed=1, restarts=r).sse for r in range(1, 11)]
    assert all(b <= a for a, b in zip(sse, sse[1:]))
    assert kmeans(X, 4, seed=1, restarts=10).restart == next(
        i for i, v in enumerate(sse) if v == sse[-1])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(5, 40), st.integers(1, 4), st.integers(1, 6))
def test_kmeans_sse_non_increasing_per_iteration(seed, n, dim, k):
    rng = np.random.default_rng(seed)
    # coarse grid creates duplicates and ties
    X = rng.integers(0, 4, size=(n, dim)).astype(float)
    k = min(k, len({tuple(r) for r in X}))
    res = kmeans(X, k, seed=seed, restarts=3)
    h = np.array(res.history)
    assert np.all(np.diff(h) <= 1e-9 * max(1.0, h[0]))
    assert res.sse == pytest.approx(((X - res.centroids[res.labels]) ** 2).sum(), abs=1e-9)


def test_kmeans_tie_goes_to_lowest_index():
    est = KMeans(n_clusters=2, restarts=1).fit(np.array([[0.0], [2.0]]))
    # 1.0 is equidistant from both centroids
    assert est.predict(np.array([[1.0]]))[0] == 0


def test_kmeans_estimator():
    X, labels = planted_points()
    est = KMeans(n_clusters=3, seed=0)
    assert est.get_params() == {"n_clusters": 3, "seed": 0, "restarts": 10, "max_iter": 300,
                                "tol": 1e-6}
    out = est.fit_predict(X)
    assert adjusted_rand_score(labels, out) == 1.0
    assert np.array_equal(est.predict(X), out)
    assert est.inertia_ == kmeans(X, 3, seed=0).sse


# ---- spectral ------------------------------------------------------------------

def test_spectral_k1():
    A = jaccard_affinity(random_binary(np.random.default_rng(2), 8, 10))
    assert list(spectral_cluster(A, 1)) == [0] * 8


def test_spectral_two_blocks_matches_components():
    A = block_affinity([5, 5])
    _, comp = connected_components(sp.csr_matrix(A - np.eye(10)), directed=False)
    labels = spectral_cluster(A, 2, seed=0)
    assert adjusted_rand_score(comp, labels) == 1.0


def test_spectral_permutation_invariance():
    m, _ = planted_touch_matrix(seed=4)
    A = jaccard_affinity(m)
    base = spectral_cluster(A, 3, seed=0)
    rng = np.random.default_rng(9)
    for _ in range(5):
        p = rng.permutation(len(A))
        permuted = spectral_cluster(A[np.ix_(p, p)], 3, seed=0)
        assert adjusted_rand_score(base[p], permuted) == 1.0


def test_spectral_planted_recovery():
    m, labels = planted_touch_matrix(n_committers=30, n_groups=3, n_files=40, noise=0.1, seed=0)
    t0 = time.perf_counter()
    pred = spectral_cluster(jaccard_affinity(m), 3, seed=0)
    assert time.perf_counter() - t0 < 5
    assert adjusted_rand_score(labels, pred) >= 0.9


def test_spectral_isolated_rows():
    A = block_affinity([3, 3])
    A[5, :] = A[:, 5] = 0
    with pytest.raises(IsolatedRows) as exc:
        spectral_cluster(A, 2, ids=list("abcdef"))
    assert exc.value.ids == ["f"]


def test_spectral_embedding_rows_unit_norm():
    m, _ = planted_touch_matrix()
    U = spectral_embedding(jaccard_affinity(m), 3)
    assert U.shape == (30, 3)
    assert np.allclose(np.linalg.norm(U, axis=1), 1.0)


def test_spectral_rejects_asymmetric():
    A = block_affinity([2, 2])
    A[0, 1] = 0.5
    with pytest.raises(InputError):
        spectral_cluster(A, 2)


def test_spectral_estimator_in_pipeline():
    m, labels = planted_touch_matrix()
    X = m.to_csr()
    direct = SpectralClustering(n_clusters=3, seed=0).fit(X)
    assert adjusted_rand_score(labels, direct.labels_) == 1.0
    pipe = make_pipeline(JaccardAffinity(), SpectralClustering(n_clusters=3, affinity="precomputed"))
    assert np.array_equal(pipe.fit_predict(X), direct.labels_)
    assert np.array_equal(pipe.fit_predict(m), direct.labels_)
    assert SpectralClustering().get_params()["affinity"] == "jaccard"


def test_jaccard_transformer_out_of_sample():
    X = random_binary(np.random.default_rng(1), 6, 9)
    t = JaccardAffinity().fit(X[:4])
    assert np.array_equal(t.transform(X), brute_jaccard(X)[:, :4])


# ---- SSE sweep & knee ------------------------------------------------------------

def test_sweep_length_and_final_zero():
    X, _ = planted_points()
    curve = sse_sweep(X, 1, 30, mode="raw_kmeans", seed=0)
    assert len(curve) == 30 and curve.ks == list(range(1, 31))
    assert curve.sse[-1] == 0.0
    m, _ = planted_touch_matrix()
    curve = sse_sweep(jaccard_affinity(m), 2, 8, mode="spectral_embedding")
    assert len(curve) == 7


def test_sweep_non_increasing_on_fixture():
    # fixture-specific regression: not a general property of k-means
    X, _ = planted_points()
    sse = sse_sweep(X, 1, 30, seed=0, restarts=10).sse
    assert all(b <= a for a, b in zip(sse, sse[1:]))


def test_sweep_invalid():
    X, _ = planted_points()
    for lo, hi in [(0, 3), (4, 3), (1, 31)]:
        with pytest.raises(InvalidK):
            sse_sweep(X, lo, hi)
    with pytest.raises(InputError):
        sse_sweep(X, 1, 3, mode="bogus")


def test_knee_examples():
    assert suggest_knee(SSECurve(((1, 100), (2, 20), (3, 15), (4, 12)))) == 2
    assert suggest_knee(SSECurve(((3, 30), (4, 20), (5, 10), (6, 0)))) == 3
    with pytest.raises(CurveTooShort):
        suggest_knee(SSECurve(((1, 5), (2, 1))))


def test_knee_chord_distances():
    pts = np.array([(1, 100), (2, 20), (3, 15), (4, 12)], float)
    a, b = pts[0], pts[-1]
    u = b - a
    d = [abs(u[0] * (p - a)[1] - u[1] * (p - a)[0]) / np.hypot(*u) for p in pts]
    assert d[1] == pytest.approx(1.73, abs=0.01) and d[2] == pytest.approx(0.90, abs=0.01)


def test_sse_curve_validation(tmp_path):
    with pytest.raises(InputError):
        SSECurve(((1, 3.0), (3, 1.0)))
    with pytest.raises(InputError):
        SSECurve(((1, -1.0),))
    SSECurve(((2, 3.0), (3, 1.0))).write_csv(tmp_path / "sse.csv")
    assert (tmp_path / "sse.csv").read_text().splitlines()[0] == "k,sse"


# ---- ClusterAssignment ----------------------------------------------------------

def test_cluster_assignment_json(tmp_path):
    ca = ClusterAssignment.from_labels(["b", "a", "c"], [1, 0, 1], "spectral", 3, 42)
    assert ca.sizes() == [1, 2, 0] and ca.empty_clusters() == [2]
    assert ca.members(1) == ["b", "c"]
    doc = ca.to_json()
    assert list(doc) == ["algorithm", "k", "seed", "restarts", "labels"]
    ca.dump(tmp_path / "c.json")
    assert ClusterAssignment.load(tmp_path / "c.json") == ca
    assert json.loads((tmp_path / "c.json").read_text()) == doc
    with pytest.raises(InputError):
        ClusterAssignment.from_labels(["a"], [3], "kmeans", 3, 0)
