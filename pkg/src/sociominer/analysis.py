"""Crossing cluster assignments with traits and touch data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .cluster import ClusterAssignment, TouchMatrix
from .errors import InputError, InvalidN
from .ingest import ComponentMap, attribute_component
from .taxonomy import N_TRAITS, TRAIT_INDEX, TRAIT_KEYS
from .traits import TraitVector

PARTICIPATION_THRESHOLD = 0.07


@dataclass(frozen=True)
class ClusterTraitTable:
    """52 x k table of mean trait fractions; NaN columns mark empty clusters."""

    values: np.ndarray
    clusters: tuple[int, ...]
    excluded: tuple[str, ...] = ()  # assigned ids without a trait vector
    sizes: tuple[int, ...] = ()

    @property
    def empty_clusters(self) -> list[int]:
        return [c for j, c in enumerate(self.clusters) if np.isnan(self.values[:, j]).all()]

    def row(self, key: str) -> np.ndarray:
        return self.values[TRAIT_INDEX[key]]


@dataclass(frozen=True)
class ParticipationTable:
    values: np.ndarray  # clusters x components
    clusters: tuple[int, ...]
    components: tuple[str, ...]
    threshold: float = PARTICIPATION_THRESHOLD
    mode: str = "fraction"

    def rendered(self) -> list[list[str]]:
        return [[render_cell(v, self.threshold) for v in row] for row in self.values]


@dataclass(frozen=True)
class CrossTab:
    counts: np.ndarray  # clusters x components, int
    clusters: tuple[int, ...]
    components: tuple[str, ...]
    sizes: tuple[int, ...] = field(default_factory=tuple)


# ---- traits x clusters ---------------------------------------------------

def trait_centroids(traits: Iterable[TraitVector], assignment: ClusterAssignment) -> ClusterTraitTable:
    by_id = {t.identity_id: np.asarray(t.values) for t in traits}
    clusters = tuple(range(assignment.k))
    values = np.full((N_TRAITS, assignment.k), np.nan)
    excluded = sorted(i for i in assignment.labels if i not in by_id)
    sizes = []
    for c in clusters:
        members = [by_id[i] for i in assignment.members(c) if i in by_id]
        sizes.append(len(members))
        if members:
            values[:, c] = np.mean(members, axis=0)
    return ClusterTraitTable(values, clusters, tuple(excluded), tuple(sizes))


def entropy_bits(values: Sequence[float]) -> float:
    """Base-2 entropy of non-negative values normalized to sum 1.

    A zero vector is treated as uniform (entropy log2 k).
    """
    v = np.asarray(values, dtype=np.float64)
    total = v.sum()
    if total == 0:
        return math.log2(len(v)) if len(v) else 0.0
    p = v / total
    p = p[p > 0]  # filter after dividing: tiny values can underflow to 0
    return float(-(p * np.log2(p)).sum()) + 0.0


def trait_entropy_ranking(table: ClusterTraitTable) -> list[tuple[str, float]]:
    """All traits sorted by ascending entropy across (non-empty) clusters.

    Ties keep canonical taxonomy order.
    """
    present = ~np.isnan(table.values).all(axis=0)
    if table.values.size == 0 or not present.any():
        raise InputError("trait table has no non-empty cluster")
    vals = table.values[:, present]
    ent = [entropy_bits(vals[i]) for i in range(N_TRAITS)]
    order = sorted(range(N_TRAITS), key=lambda i: (ent[i], i))
    return [(TRAIT_KEYS[i], ent[i]) for i in order]


def top_bottom(ranking: Sequence[tuple[str, float]], n: int = 10):
    """(lowest-n, highest-n) entropy slices; the highest slice starts at the max."""
    if isinstance(n, bool) or not isinstance(n, int) or not 0 <= n <= len(ranking):
        raise InvalidN(f"n must be in [0, {len(ranking)}], got {n!r}")
    lowest = list(ranking[:n])
    highest = list(reversed(ranking))[:n]
    return lowest, highest


# ---- touches x components ------------------------------------------------

def _component_counts(m: TouchMatrix, cmap: ComponentMap, components: Sequence[str]) -> np.ndarray:
    col_comp = np.array([components.index(attribute_component(c, cmap)) for c in m.columns],
                        dtype=np.int64)
    counts = np.zeros((len(m.row_ids), len(components)))
    np.add.at(counts, (m.rows, col_comp[m.cols]), 1)
    return counts


def _check_cover(m: TouchMatrix, assignment: ClusterAssignment) -> None:
    missing = [r for r in m.row_ids if r not in assignment.labels]
    if missing:
        raise InputError(f"assignment does not cover matrix rows: {missing[:5]}")


def participation_table(m: TouchMatrix, assignment: ClusterAssignment, cmap: ComponentMap,
                        threshold: float = PARTICIPATION_THRESHOLD,
                        mode: str = "fraction") -> ParticipationTable:
    """Mean per-member component share of touched files for each cluster.

    ``mode="fraction"`` normalizes each member's counts to sum to 1 before
    averaging; ``mode="count"`` averages the raw touch counts.
    """
    if mode not in ("fraction", "count"):
        raise InputError(f"unknown participation mode {mode!r}")
    _check_cover(m, assignment)
    components = tuple(cmap.components)
    counts = _component_counts(m, cmap, components)
    if mode == "fraction":
        counts = counts / counts.sum(axis=1, keepdims=True)
    labels = np.array([assignment.labels[r] for r in m.row_ids])
    values = np.full((assignment.k, len(components)), np.nan)
    for c in range(assignment.k):
        rows = counts[labels == c]
        if len(rows):
            values[c] = rows.mean(axis=0)
    return ParticipationTable(values, tuple(range(assignment.k)), components, threshold, mode)


def committer_component_counts(m: TouchMatrix, assignment: ClusterAssignment,
                               cmap: ComponentMap) -> CrossTab:
    _check_cover(m, assignment)
    components = tuple(cmap.components)
    touched = _component_counts(m, cmap, components) > 0
    labels = np.array([assignment.labels[r] for r in m.row_ids])
    counts = np.zeros((assignment.k, len(components)), dtype=np.int64)
    sizes = []
    for c in range(assignment.k):
        counts[c] = touched[labels == c].sum(axis=0)
        sizes.append(int((labels == c).sum()))
    return CrossTab(counts, tuple(range(assignment.k)), components, tuple(sizes))


def render_cell(value: float, threshold: float = PARTICIPATION_THRESHOLD) -> str:
    """Two-decimal cell; values below the threshold print as ``*``."""
    if value is None or np.isnan(value):
        return ""
    # absorb float noise so a computed 0.07 is not masked
    if value < threshold - 1e-12:
        return "*"
    return f"{value:.2f}"


# ---- CSV writers -----------------------------------------------------------

def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6f}"


def write_entropy_csv(path, ranking) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trait", "entropy", "rank"])
        for rank, (key, h) in enumerate(ranking, 1):
            w.writerow([key, f"{h:.6f}", rank])


def write_centroids_csv(path, table: ClusterTraitTable, traits: Sequence[str] = TRAIT_KEYS) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trait", *table.clusters])
        for key in traits:
            w.writerow([key, *(_fmt(float(v)) for v in table.row(key))])


def read_centroids_csv(path) -> ClusterTraitTable:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    clusters = tuple(int(c) for c in rows[0][1:])
    values = np.full((N_TRAITS, len(clusters)), np.nan)
    for row in rows[1:]:
        values[TRAIT_INDEX[row[0]]] = [float(x) if x else np.nan for x in row[1:]]
    return ClusterTraitTable(values, clusters)


def write_cluster_component_csv(path, clusters, components, values, fmt=_fmt) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", *components])
        for c, row in zip(clusters, values):
            w.writerow([c, *(fmt(x) for x in row)])


def write_participation_csv(path, table: ParticipationTable, rendered: bool = False) -> None:
    vals = table.rendered() if rendered else [[float(v) for v in r] for r in table.values]
    write_cluster_component_csv(path, table.clusters, table.components, vals,
                                fmt=(str if rendered else _fmt))


def write_crosstab_csv(path, tab: CrossTab) -> None:
    write_cluster_component_csv(path, tab.clusters, tab.components, tab.counts.tolist(), fmt=str)
