import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sociominer.analysis import (ClusterTraitTable, committer_component_counts, entropy_bits,
                                 participation_table, read_centroids_csv, render_cell,
                                 top_bottom, trait_centroids, trait_entropy_ranking,
                                 write_centroids_csv, write_crosstab_csv, write_entropy_csv,
                                 write_participation_csv)
from sociominer.cluster import ClusterAssignment, TouchMatrix
from sociominer.errors import InvalidN
from sociominer.ingest import ComponentMap
from sociominer.taxonomy import TRAIT_INDEX, TRAIT_KEYS
from sociominer.traits import TraitVector


def _vec(ident, fill=0.5, **over):
    vals = [fill] * 52
    for k, v in over.items():
        vals[TRAIT_INDEX[k]] = v
    return TraitVector(ident, tuple(vals), "lexicon")


def _table(values):
    values = np.asarray(values, dtype=float)
    return ClusterTraitTable(values, tuple(range(values.shape[1])))


def oracle_entropy(vals):
    total = sum(vals)
    if total == 0:
        return math.log2(len(vals))
    return -sum((v / total) * math.log2(v / total) for v in vals if v > 0)


def oracle_ranking(values):
    ent = [(oracle_entropy(list(row)), i) for i, row in enumerate(values)]
    return [(TRAIT_KEYS[i], h) for h, i in sorted(ent)]


# ---- centroids ---------------------------------------------------------------

def test_trait_centroids_mean_and_identity():
    ca = ClusterAssignment.from_labels(["a", "b", "c", "d"], [0, 0, 1, 1], "spectral", 3, 0)
    traits = [_vec("a", openness=0.2), _vec("b", openness=0.4), _vec("c", 0.7), _vec("d", 0.7)]
    table = trait_centroids(traits, ca)
    assert table.values.shape == (52, 3)
    assert table.row("openness")[0] == pytest.approx(0.3)
    assert np.allclose(table.values[:, 1], 0.7)
    assert table.empty_clusters == [2] and np.isnan(table.values[:, 2]).all()


def test_trait_centroids_excludes_missing_vectors():
    ca = ClusterAssignment.from_labels(["a", "b", "x"], [0, 1, 1], "spectral", 2, 0)
    table = trait_centroids([_vec("a"), _vec("b", 0.9)], ca)
    assert table.excluded == ("x",)
    assert table.sizes == (1, 1)
    assert np.allclose(table.values[:, 1], 0.9)


# ---- entropy ---------------------------------------------------------------------

@pytest.mark.parametrize("values, expected", [
    ([0.2] * 5, math.log2(5)),
    ([1, 0, 0, 0, 0], 0.0),
    ([0.5, 0.5, 0, 0, 0], 1.0),
    ([0, 0, 0], math.log2(3)),
])
def test_entropy_examples(values, expected):
    assert abs(entropy_bits(values) - expected) <= 1e-12


def test_entropy_uniform_five_exact():
    assert abs(entropy_bits([0.2] * 5) - 2.321928) < 1e-6
    assert abs(entropy_bits([0.2] * 5) - math.log2(5)) <= 1e-12


# trait fractions; subnormals would underflow to zero under c=0.1
fractions = st.one_of(st.just(0.0), st.floats(1e-9, 1))


@settings(max_examples=200)
@given(st.lists(fractions, min_size=1, max_size=8), st.sampled_from([0.1, 3.0, 100.0]))
def test_entropy_scale_invariant(values, c):
    h = entropy_bits(values)
    assert abs(entropy_bits([c * v for v in values]) - h) <= 1e-12
    assert -1e-12 <= h <= math.log2(len(values)) + 1e-12


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=8), st.randoms(use_true_random=False))
def test_entropy_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert abs(entropy_bits(shuffled) - entropy_bits(values)) <= 1e-12


def test_ranking_matches_oracle_on_random_tables():
    rng = np.random.default_rng(21)
    for t in range(20):
        k = int(rng.integers(2, 7))
        values = rng.random((52, k))
        # inject ties, zero rows and one-hot rows
        values[5] = values[40]
        values[7] = 0.0
        values[9] = np.eye(k)[t % k]
        values[10] = np.eye(k)[(t + 1) % k]
        got = trait_entropy_ranking(_table(values))
        want = oracle_ranking(values)
        assert [key for key, _ in got] == [key for key, _ in want]
        assert np.allclose([h for _, h in got], [h for _, h in want], atol=1e-12, rtol=0)
        assert sorted(key for key, _ in got) == sorted(TRAIT_KEYS)


def test_ranking_ignores_empty_clusters():
    values = np.random.default_rng(0).random((52, 3))
    with_empty = np.column_stack([values, np.full(52, np.nan)])
    assert trait_entropy_ranking(_table(with_empty)) == trait_entropy_ranking(_table(values))


def test_ranking_ties_follow_canonical_order():
    ranking = trait_entropy_ranking(_table(np.full((52, 4), 0.5)))
    assert [k for k, _ in ranking] == list(TRAIT_KEYS)


def test_top_bottom():
    keys = ["a", "b", "c", "d"]
    table = [[0.25] * 4, [1, 0, 0, 0], [0.5, 0.5, 0, 0], [0.4, 0.3, 0.2, 0.1]]
    ranking = sorted(((k, oracle_entropy(v)) for k, v in zip(keys, table)), key=lambda x: x[1])
    low, high = top_bottom(ranking, 2)
    assert [k for k, _ in low] == ["b", "c"]
    assert [k for k, _ in high] == ["a", "d"]
    full = trait_entropy_ranking(_table(np.random.default_rng(1).random((52, 3))))
    lo, hi = top_bottom(full, 52)
    assert lo == full and hi == full[::-1]
    assert top_bottom(full, 0) == ([], [])
    for bad in (53, -1, 2.5):
        with pytest.raises(InvalidN):
            top_bottom(full, bad)


# ---- participation & cross-tab ------------------------------------------------

CMAP = ComponentMap((("ui/", "UI"), ("swt/", "SWT"), ("core/", "Core")))


def _touches():
    return TouchMatrix.from_touches({
        "a": [f"ui/{i}" for i in range(8)] + ["swt/0", "swt/1"],      # UI .8 SWT .2
        "b": [f"ui/{i}" for i in range(9)] + ["core/0"],              # UI .9 Core .1
        "c": ["swt/0"],                                               # SWT 1.0
        "d": ["swt/1", "docs/x", "core/0", "core/1"],                 # SWT .25 unattr .25 Core .5
    })


def test_participation_examples():
    ca = ClusterAssignment.from_labels(["a", "b", "c", "d"], [0, 0, 1, 2], "spectral", 3, 0)
    pt = participation_table(_touches(), ca, CMAP)
    assert pt.components == ("UI", "SWT", "Core", "unattributed")
    assert pt.values[0, 0] == pytest.approx(0.85, abs=1e-12)
    assert list(pt.values[1]) == [0.0, 1.0, 0.0, 0.0]
    assert np.allclose(pt.values.sum(axis=1), 1.0)
    # UI .85, SWT .10, Core .05 (masked), unattributed 0 (masked)
    assert pt.rendered()[0] == ["0.85", "0.10", "*", "*"]


def test_participation_brute_force_tally():
    rng = np.random.default_rng(5)
    prefixes = [p for p, _ in CMAP.prefixes]
    for _ in range(10):
        touches = {}
        for i in range(12):
            n = int(rng.integers(1, 15))
            touches[f"id{i:02d}"] = {f"{prefixes[rng.integers(3)]}{rng.integers(20)}"
                                     if rng.random() < 0.9 else f"misc/{rng.integers(5)}"
                                     for _ in range(n)}
        m = TouchMatrix.from_touches(touches)
        labels = rng.integers(0, 4, len(m.row_ids))
        ca = ClusterAssignment.from_labels(m.row_ids, labels, "spectral", 4, 0)
        pt = participation_table(m, ca, CMAP)
        comps = list(pt.components)
        for c in range(4):
            members = [r for r in m.row_ids if ca.labels[r] == c]
            if not members:
                assert np.isnan(pt.values[c]).all()
                continue
            for j, comp in enumerate(comps):
                shares = []
                for r in members:
                    files = touches[r]
                    hits = 0
                    for f in files:
                        owner = next((name for p, name in CMAP.prefixes if f.startswith(p)),
                                     "unattributed")
                        hits += owner == comp
                    shares.append(hits / len(files))
                assert abs(pt.values[c, j] - sum(shares) / len(shares)) <= 1e-12


def test_participation_count_mode():
    ca = ClusterAssignment.from_labels(["a", "b", "c", "d"], [0, 0, 1, 1], "spectral", 2, 0)
    pt = participation_table(_touches(), ca, CMAP, mode="count")
    assert pt.mode == "count"
    assert list(pt.values[0]) == [8.5, 1.0, 0.5, 0.0]


@pytest.mark.parametrize("value, text", [(0.0699, "*"), (0.07, "0.07"), (0.05, "*"),
                                         (0.85, "0.85"), (1.0, "1.00"), (0.07 - 1e-15, "0.07")])
def test_render_cell(value, text):
    assert render_cell(value) == text


def test_crosstab_hand_tally():
    ca = ClusterAssignment.from_labels(["a", "b", "c", "d"], [0, 0, 1, 1], "spectral", 2, 0)
    tab = committer_component_counts(_touches(), ca, CMAP)
    # UI, SWT, Core, unattributed
    assert tab.counts.tolist() == [[2, 1, 1, 0], [0, 2, 1, 1]]
    assert tab.sizes == (2, 2)
    assert np.all(tab.counts <= np.array(tab.sizes)[:, None])


def test_csv_outputs(tmp_path):
    values = np.random.default_rng(2).random((52, 3))
    values[:, 2] = np.nan
    table = _table(values)
    write_centroids_csv(tmp_path / "centroids.csv", table)
    rows = list(csv.reader((tmp_path / "centroids.csv").read_text().splitlines()))
    assert rows[0] == ["trait", "0", "1", "2"] and len(rows) == 53
    assert rows[1][3] == "" and len(rows[1][1].split(".")[1]) == 6
    back = read_centroids_csv(tmp_path / "centroids.csv")
    assert np.allclose(back.values[:, :2], values[:, :2], atol=5e-7)

    write_entropy_csv(tmp_path / "entropy.csv", trait_entropy_ranking(table))
    rows = list(csv.reader((tmp_path / "entropy.csv").read_text().splitlines()))
    assert rows[0] == ["trait", "entropy", "rank"] and rows[-1][2] == "52"

    ca = ClusterAssignment.from_labels(["a", "b", "c", "d"], [0, 0, 1, 1], "spectral", 2, 0)
    write_participation_csv(tmp_path / "p.csv", participation_table(_touches(), ca, CMAP))
    write_participation_csv(tmp_path / "pr.csv", participation_table(_touches(), ca, CMAP), True)
    write_crosstab_csv(tmp_path / "x.csv", committer_component_counts(_touches(), ca, CMAP))
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "cluster,UI,SWT,Core,unattributed"
    assert (tmp_path / "pr.csv").read_text().splitlines()[1] == "0,0.85,0.10,*,*"
    assert (tmp_path / "x.csv").read_text().splitlines()[1:] == ["0,2,1,1,0", "1,0,2,1,1"]
