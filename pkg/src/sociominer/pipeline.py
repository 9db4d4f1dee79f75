"""File-based workspace pipeline: config, stages, manifest and digests."""

from __future__ import annotations

import csv
import glob
import hashlib
import json
import logging
import os
import posixpath
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import filelock
import numpy as np

from . import __version__
from .analysis import (committer_component_counts, participation_table, read_centroids_csv,
                       render_cell, top_bottom, trait_centroids, trait_entropy_ranking,
                       write_centroids_csv, write_crosstab_csv, write_entropy_csv,
                       write_participation_csv)
from .cluster import (ClusterAssignment, TouchMatrix, jaccard_affinity, kmeans, spectral_cluster,
                      sse_sweep, suggest_knee)
from .errors import ConfigError, InputError, MissingStage, SociominerError
from .graph import build_comm_graph, export_dot, export_graphml
from .identity import AliasOverride, IdentityMap, resolve_identities
from .ingest import (CommitRecord, ComponentMap, DateRange, EmailMessage, ECLIPSE_PLATFORM_COMPONENTS,
                     SUMMARY_COLUMNS, filter_by_date, ingest_summary, parse_git_log, parse_mbox,
                     parse_timestamp, read_jsonl, write_jsonl)
from .report import heatmap_svg, radar_svg
from .taxonomy import RADAR_TRAITS, TRAIT_INDEX, TRAIT_KEYS, display_name
from .traits import (Lexicon, build_author_corpus, read_traits_csv, score_corpora,
                     score_traits_lexicon, score_traits_remote, write_corpora_csv,
                     write_traits_csv)

log = logging.getLogger(__name__)

WORKSPACE_ENV = "SOCIOMINER_WORKSPACE"
MANIFEST = "manifest.json"
TIMINGS = "timings.json"
TARGETS = ("technical", "personality")

ASSUMPTIONS = [
    "word counts for the corpus gate are taken after quote/signature stripping",
    "the personality set is the subset of committers whose corpus passes the word gate",
    "the technical row universe is every committer identity with at least one touched file "
    "across all configured repositories",
    "every path listed in a commit counts as a touch (merges and renames included)",
    "the message threshold for the graph is applied after date filtering",
    "committers without mailing-list messages appear in technical artifacts but not in the graph",
]


# ---- configuration -----------------------------------------------------------

@dataclass
class RunConfig:
    workspace: Path
    git_logs: dict[str, Path]
    mboxes: dict[str, Path]
    base_dir: Path = Path(".")
    overrides: Path | None = None
    date_range: DateRange = field(default_factory=DateRange)
    k_technical: int = 5
    k_personality: int = 3
    seed: int = 0
    restarts: int = 10
    participation_threshold: float = 0.07
    min_words: int = 3500
    min_messages: int = 10
    scorer_mode: str = "lexicon"
    scorer_endpoint: str | None = None
    scorer_timeout: float = 30.0
    scorer_concurrency: int = 4
    lexicon_path: Path | None = None
    component_map: ComponentMap = field(default_factory=lambda: ComponentMap(ECLIPSE_PLATFORM_COMPONENTS))
    touch_granularity: str = "file"
    threshold_mode: str = "per_list"
    participation_mode: str = "fraction"
    sweep: dict[str, tuple[int, int] | None] = field(default_factory=dict)
    radar_traits: tuple[str, ...] = RADAR_TRAITS
    snapshot: dict = field(default_factory=dict)

    def path(self, name: str) -> Path:
        return self.workspace / name


def parse_sweep(text) -> tuple[int, int]:
    if isinstance(text, (list, tuple)) and len(text) == 2:
        a, b = text
    else:
        try:
            a, b = str(text).split("..")
        except ValueError:
            raise ConfigError(f"sweep must look like 'a..b', got {text!r}") from None
    try:
        a, b = int(a), int(b)
    except (TypeError, ValueError):
        raise ConfigError(f"sweep bounds must be integers, got {text!r}") from None
    if not 1 <= a <= b:
        raise ConfigError(f"sweep needs 1 <= a <= b, got {a}..{b}")
    return a, b


def _expect(cond, msg):
    if not cond:
        raise ConfigError(msg)


def load_config(path, env=None) -> RunConfig:
    """Load and validate a JSON run configuration.

    Relative paths are resolved against the config file's directory.
    ``$SOCIOMINER_WORKSPACE`` overrides the ``workspace`` entry.
    """
    env = os.environ if env is None else env
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    _expect(isinstance(raw, dict), "config must be a JSON object")
    base = path.resolve().parent

    def resolve(p):
        return (base / p).resolve() if p is not None else None

    workspace = env.get(WORKSPACE_ENV) or raw.get("workspace")
    _expect(workspace, "config needs a 'workspace' entry (or $SOCIOMINER_WORKSPACE)")
    inputs = raw.get("inputs", {})
    git_logs = inputs.get("git_logs", {})
    _expect(isinstance(git_logs, dict) and git_logs,
            "inputs.git_logs must map repository names to git-log export files")
    mboxes = dict(inputs.get("mboxes", {}))
    mbox_dir = inputs.get("mbox_dir")
    if mbox_dir is not None:
        d = resolve(mbox_dir)
        if not d.is_dir():
            raise ConfigError(f"mbox directory not found: {d}")
        for f in sorted(glob.glob(str(d / "*.mbox"))):
            mboxes.setdefault(Path(f).stem, os.path.relpath(f, base))
    _expect(mboxes, "inputs needs 'mbox_dir' or 'mboxes'")

    dr = raw.get("date_range", {})
    try:
        date_range = DateRange(parse_timestamp(dr.get("start", "2003-01-01T00:00:00Z")),
                               parse_timestamp(dr.get("end", "2015-01-01T00:00:00Z")))
    except ValueError as exc:
        raise ConfigError(f"bad date_range: {exc}") from None

    th = raw.get("thresholds", {})
    scorer = raw.get("scorer", {})
    cm = raw.get("component_map")
    if cm is None:
        component_map = ComponentMap(ECLIPSE_PLATFORM_COMPONENTS)
    else:
        try:
            component_map = ComponentMap(tuple(tuple(p) for p in cm.get("prefixes", [])),
                                         cm.get("default", "unattributed"))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad component_map: {exc}") from None
    sweep_raw = raw.get("sweep", {}) or {}
    sweep = {t: parse_sweep(sweep_raw[t]) if sweep_raw.get(t) else None for t in TARGETS}

    cfg = RunConfig(
        workspace=resolve(workspace),
        git_logs={name: resolve(p) for name, p in sorted(git_logs.items())},
        mboxes={name: resolve(p) for name, p in sorted(mboxes.items())},
        base_dir=base,
        overrides=resolve(raw.get("overrides")),
        date_range=date_range,
        k_technical=raw.get("k_technical", 5),
        k_personality=raw.get("k_personality", 3),
        seed=raw.get("seed", 0),
        restarts=raw.get("restarts", 10),
        participation_threshold=th.get("participation", 0.07),
        min_words=th.get("min_words", 3500),
        min_messages=th.get("min_messages", 10),
        scorer_mode=scorer.get("mode", "lexicon"),
        scorer_endpoint=scorer.get("endpoint"),
        scorer_timeout=scorer.get("timeout", 30.0),
        scorer_concurrency=scorer.get("concurrency", 4),
        lexicon_path=resolve(scorer.get("lexicon_path")),
        component_map=component_map,
        touch_granularity=raw.get("touch_granularity", "file"),
        threshold_mode=raw.get("threshold_mode", "per_list"),
        participation_mode=raw.get("participation_mode", "fraction"),
        sweep=sweep,
        radar_traits=tuple(raw.get("radar_traits", RADAR_TRAITS)),
    )
    for name in ("k_technical", "k_personality", "restarts", "min_words", "min_messages",
                 "scorer_concurrency"):
        v = getattr(cfg, name)
        _expect(isinstance(v, int) and not isinstance(v, bool) and v >= 1,
                f"{name} must be an integer >= 1, got {v!r}")
    _expect(isinstance(cfg.seed, int), "seed must be an integer")
    _expect(0 < cfg.participation_threshold <= 1, "thresholds.participation must be in (0, 1]")
    _expect(cfg.scorer_mode in ("lexicon", "remote"), "scorer.mode must be lexicon or remote")
    _expect(cfg.scorer_mode != "remote" or cfg.scorer_endpoint, "remote scorer needs an endpoint")
    _expect(cfg.touch_granularity in ("file", "directory"), "touch_granularity must be file or directory")
    _expect(cfg.threshold_mode in ("per_list", "total"), "threshold_mode must be per_list or total")
    _expect(cfg.participation_mode in ("fraction", "count"), "participation_mode must be fraction or count")
    for key in cfg.radar_traits:
        _expect(key in TRAIT_INDEX, f"unknown radar trait {key!r}")

    # path-free snapshot: identical configs in different directories digest alike
    cfg.snapshot = {
        "inputs": {"git_logs": {n: os.path.relpath(p, base) for n, p in cfg.git_logs.items()},
                   "mboxes": {n: os.path.relpath(p, base) for n, p in cfg.mboxes.items()}},
        "overrides": os.path.relpath(cfg.overrides, base) if cfg.overrides else None,
        "date_range": {"start": dr.get("start", "2003-01-01T00:00:00Z"),
                       "end": dr.get("end", "2015-01-01T00:00:00Z")},
        "k_technical": cfg.k_technical, "k_personality": cfg.k_personality,
        "seed": cfg.seed, "restarts": cfg.restarts,
        "thresholds": {"participation": cfg.participation_threshold,
                       "min_words": cfg.min_words, "min_messages": cfg.min_messages},
        "scorer": {"mode": cfg.scorer_mode, "endpoint": cfg.scorer_endpoint,
                   "lexicon_path": os.path.relpath(cfg.lexicon_path, base) if cfg.lexicon_path else None},
        "component_map": {"prefixes": [list(p) for p in cfg.component_map.prefixes],
                          "default": cfg.component_map.default_component},
        "touch_granularity": cfg.touch_granularity, "threshold_mode": cfg.threshold_mode,
        "participation_mode": cfg.participation_mode,
        "sweep": {t: list(v) if v else None for t, v in cfg.sweep.items()},
        "radar_traits": list(cfg.radar_traits),
    }
    return cfg


# ---- digests, atomic writes, manifest -------------------------------------------

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def json_digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()


def write_json_atomic(path, obj) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def config_digest(cfg: RunConfig) -> str:
    return json_digest(cfg.snapshot)


def input_digests(cfg: RunConfig) -> dict[str, str]:
    out = {}
    for group, paths in (("git_logs", cfg.git_logs), ("mboxes", cfg.mboxes)):
        for name, p in paths.items():
            if not p.exists():
                raise InputError(f"input file not found: {p}")
            out[f"{group}/{name}"] = file_digest(p)
    if cfg.overrides:
        if not cfg.overrides.exists():
            raise InputError(f"overrides file not found: {cfg.overrides}")
        out["overrides"] = file_digest(cfg.overrides)
    if cfg.lexicon_path:
        out["lexicon"] = file_digest(cfg.lexicon_path)
    return out


class Workspace:
    """Workspace directory plus its manifest; one writer at a time."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = cfg.workspace
        self.root.mkdir(parents=True, exist_ok=True)
        self.lock = filelock.FileLock(str(self.root / ".lock"), timeout=0)
        self.manifest = self._load(MANIFEST) or {"stages": {}}
        self.timings = self._load(TIMINGS) or {}

    def _load(self, name):
        p = self.root / name
        if p.exists():
            try:
                with open(p, encoding="utf-8") as fh:
                    return json.load(fh)
            except ValueError:
                log.warning("ignoring unreadable %s", p)
        return None

    def __enter__(self):
        try:
            self.lock.acquire()
        except filelock.Timeout:
            raise InputError(f"workspace {self.root} is locked by another writer") from None
        return self

    def __exit__(self, *exc):
        self.lock.release()

    def path(self, name: str) -> Path:
        return self.root / name

    def require(self, name: str) -> Path:
        p = self.root / name
        if not p.exists():
            raise MissingStage(name)
        return p

    def save(self) -> None:
        stages = self.manifest.get("stages", {})
        self.manifest.update({
            "tool": "sociominer",
            "version": __version__,
            "config": self.cfg.snapshot,
            "config_digest": config_digest(self.cfg),
            "stages": {k: stages[k] for k in sorted(stages)},
            "warnings": [f"{name}: {w}" for name in sorted(stages)
                         for w in stages[name].get("warnings", [])],
            "assumptions": ASSUMPTIONS,
        })
        write_json_atomic(self.root / MANIFEST, self.manifest)
        write_json_atomic(self.root / TIMINGS, self.timings)


# ---- stage helpers ----------------------------------------------------------------

def _load_commits(ws):
    return read_jsonl(ws.require("commits.jsonl"), CommitRecord)


def _load_messages(ws):
    return read_jsonl(ws.require("messages.jsonl"), EmailMessage)


def _load_identities(ws) -> IdentityMap:
    with open(ws.require("identities.json"), encoding="utf-8") as fh:
        try:
            return IdentityMap.from_json(json.load(fh))
        except (ValueError, KeyError) as exc:
            raise InputError(f"identities.json is unreadable: {exc}") from None


def _committer_ids(commits, imap) -> list[str]:
    return sorted({imap.lookup(c.author_email).id for c in commits})


def _touch_column(path: str, granularity: str) -> str:
    if granularity == "directory":
        return posixpath.dirname(path) or "."
    return path


def build_touch_matrix(commits, imap: IdentityMap, granularity="file", warnings=None):
    touches: dict[str, set[str]] = {}
    for c in commits:
        ident = imap.lookup(c.author_email).id
        touches.setdefault(ident, set()).update(_touch_column(f, granularity) for f in c.files)
    empty = sorted(i for i, t in touches.items() if not t)
    if empty and warnings is not None:
        warnings.append(f"{len(empty)} committer(s) without touched files excluded: {empty}")
    return TouchMatrix.from_touches({i: t for i, t in touches.items() if t})


def _restrict(m: TouchMatrix, ids) -> TouchMatrix:
    keep = set(ids)
    return TouchMatrix.from_touches({i: s for i, s in m.row_sets().items() if i in keep})


def _write_summary(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _read_matrix_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0][1:]
    labels = [r[0] for r in rows[1:]]
    values = np.array([[float(x) if x else np.nan for x in r[1:]] for r in rows[1:]])
    return labels, header, values


def _banner(cfg: RunConfig) -> str:
    note = " (lexicon stand-in, not a validated instrument)" if cfg.scorer_mode == "lexicon" else ""
    return (f"sociominer {__version__} | backend={cfg.scorer_mode}{note} | seed={cfg.seed} | "
            f"config={config_digest(cfg)[:12]}")


# ---- stages ----------------------------------------------------------------------

def stage_ingest(ws: Workspace, warnings: list[str]) -> list[str]:
    cfg = ws.cfg
    commits_by_repo: dict[str, list[CommitRecord]] = {}
    seen: set[str] = set()
    for name, path in cfg.git_logs.items():
        if not path.exists():
            raise InputError(f"git-log export not found: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                recs = parse_git_log(fh)
            except InputError as exc:
                raise InputError(f"{path}: {exc}") from exc
        kept = filter_by_date(recs, cfg.date_range)
        if len(kept) < len(recs):
            warnings.append(f"{name}: {len(recs) - len(kept)} commit(s) outside the date range dropped")
        unique = []
        for c in kept:
            if c.commit_id in seen:
                warnings.append(f"{name}: duplicate commit {c.commit_id} dropped")
                continue
            seen.add(c.commit_id)
            unique.append(c)
        commits_by_repo[name] = unique
    messages: list[EmailMessage] = []
    for name, path in cfg.mboxes.items():
        if not path.exists():
            raise InputError(f"mbox archive not found: {path}")
        with open(path, encoding="utf-8", errors="replace") as fh:
            try:
                msgs = parse_mbox(fh, name, warnings)
            except InputError as exc:
                raise InputError(f"{path}: {exc}") from exc
        kept = filter_by_date(msgs, cfg.date_range)
        if len(kept) < len(msgs):
            warnings.append(f"{name}: {len(msgs) - len(kept)} message(s) outside the date range dropped")
        messages.extend(kept)
    write_jsonl(ws.path("commits.jsonl"), [c for recs in commits_by_repo.values() for c in recs])
    write_jsonl(ws.path("messages.jsonl"), messages)
    _write_summary(ws.path("summary.csv"), ingest_summary(commits_by_repo, messages))
    return ["commits.jsonl", "messages.jsonl", "summary.csv"]


def stage_identities(ws: Workspace, warnings: list[str]) -> list[str]:
    commits, messages = _load_commits(ws), _load_messages(ws)
    raw = [(c.author_name, c.author_email) for c in commits]
    raw += [(m.sender_name, m.sender_email) for m in messages if m.sender_email]
    overrides = AliasOverride.load(ws.cfg.overrides) if ws.cfg.overrides else None
    imap = resolve_identities(raw, overrides)
    n_emails = len({e.strip().lower() for _, e in raw})
    warnings.append(f"{n_emails} distinct e-mail(s) resolved into {len(imap)} identities")
    write_json_atomic(ws.path("identities.json"), imap.to_json())
    return ["identities.json"]


def make_scorer(cfg: RunConfig):
    if cfg.scorer_mode == "remote":
        return lambda c: score_traits_remote(c, cfg.scorer_endpoint, cfg.scorer_timeout)
    lexicon = Lexicon.load(cfg.lexicon_path)
    return lambda c: score_traits_lexicon(c, lexicon)


def stage_traits(ws: Workspace, warnings: list[str]) -> list[str]:
    cfg = ws.cfg
    imap = _load_identities(ws)
    messages = _load_messages(ws)
    committers = _committer_ids(_load_commits(ws), imap)
    corpora = build_author_corpus(messages, imap, cfg.min_words, identities=committers)
    ineligible = [c.identity_id for c in corpora if not c.eligible]
    if ineligible:
        warnings.append(f"{len(ineligible)} committer corpus/corpora below {cfg.min_words} words "
                        f"not scored: {ineligible}")
    silent = len(committers) - len(corpora)
    if silent:
        warnings.append(f"{silent} committer(s) sent no messages")
    vectors = score_corpora(corpora, make_scorer(cfg),
                            cfg.scorer_concurrency if cfg.scorer_mode == "remote" else 1)
    write_corpora_csv(ws.path("corpora.csv"), corpora)
    write_traits_csv(ws.path("traits.csv"), vectors)
    return ["corpora.csv", "traits.csv"]


def stage_cluster(ws: Workspace, warnings: list[str], target: str,
                  sweep: tuple[int, int] | None = None) -> list[str]:
    cfg = ws.cfg
    if target not in TARGETS:
        raise InputError(f"unknown cluster target {target!r}")
    outputs = [f"clusters_{target}.json"]
    if target == "technical":
        imap = _load_identities(ws)
        m = build_touch_matrix(_load_commits(ws), imap, cfg.touch_granularity, warnings)
        A = jaccard_affinity(m)
        off = A - np.eye(len(A))
        isolated = [m.row_ids[i] for i in np.flatnonzero(off.sum(axis=1) <= 0)]
        if isolated:
            warnings.append(f"{len(isolated)} committer(s) share no file with anyone and were "
                            f"excluded from spectral clustering: {isolated}")
            m = _restrict(m, [r for r in m.row_ids if r not in set(isolated)])
            A = jaccard_affinity(m)
        labels = spectral_cluster(A, cfg.k_technical, cfg.seed, cfg.restarts, ids=m.row_ids)
        assignment = ClusterAssignment.from_labels(m.row_ids, labels, "spectral",
                                                   cfg.k_technical, cfg.seed, cfg.restarts)
        data, mode, ids = A, "spectral_embedding", m.row_ids
    else:
        vectors = read_traits_csv(ws.require("traits.csv"))
        ids = [v.identity_id for v in vectors]
        data = np.array([v.values for v in vectors])
        mode = "raw_kmeans"
        if len(data):
            res = kmeans(data, cfg.k_personality, cfg.seed, cfg.restarts)
            labels = res.labels
        else:
            warnings.append("no committer passed the word gate; personality clusters are empty")
            labels = []
            data = data.reshape(0, len(TRAIT_KEYS))
        assignment = ClusterAssignment.from_labels(ids, labels, "kmeans",
                                                   cfg.k_personality, cfg.seed, cfg.restarts)
    if assignment.empty_clusters():
        warnings.append(f"{target}: empty cluster(s) {assignment.empty_clusters()}")
    assignment.dump(ws.path(f"clusters_{target}.json"))
    bounds = (sweep or cfg.sweep.get(target)) if len(data) else None
    if bounds:
        curve = sse_sweep(data, bounds[0], bounds[1], mode, cfg.seed, cfg.restarts)
        curve.write_csv(ws.path(f"sse_{target}.csv"))
        outputs.append(f"sse_{target}.csv")
        if len(curve) >= 3:
            warnings.append(f"{target}: elbow suggestion k={suggest_knee(curve)} (advisory; "
                            f"configured k={assignment.k})")
    else:
        # a curve from an earlier sweep would be an unreferenced artifact
        ws.path(f"sse_{target}.csv").unlink(missing_ok=True)
    return outputs


def stage_analyze(ws: Workspace, warnings: list[str]) -> list[str]:
    cfg = ws.cfg
    technical = ClusterAssignment.load(ws.require("clusters_technical.json"))
    vectors = read_traits_csv(ws.require("traits.csv"))
    imap = _load_identities(ws)
    m = build_touch_matrix(_load_commits(ws), imap, cfg.touch_granularity)
    m = _restrict(m, technical.labels)

    table = trait_centroids(vectors, technical)
    if table.excluded:
        warnings.append(f"{len(table.excluded)} technically clustered committer(s) have no trait "
                        "vector and are left out of the centroids")
    if table.empty_clusters:
        warnings.append(f"technical cluster(s) without trait data: {table.empty_clusters}")
    write_centroids_csv(ws.path("centroids.csv"), table)
    outputs = ["centroids.csv"]
    if len(table.empty_clusters) < len(table.clusters):
        write_entropy_csv(ws.path("entropy.csv"), trait_entropy_ranking(table))
        outputs.append("entropy.csv")
    else:
        warnings.append("no technical cluster has trait data; entropy ranking skipped")
        ws.path("entropy.csv").unlink(missing_ok=True)

    part = participation_table(m, technical, cfg.component_map, cfg.participation_threshold,
                               cfg.participation_mode)
    write_participation_csv(ws.path("participation.csv"), part)
    write_crosstab_csv(ws.path("crosstab.csv"),
                       committer_component_counts(m, technical, cfg.component_map))
    outputs += ["participation.csv", "crosstab.csv"]

    for stale in ("personality_centroids.csv", "personality_entropy.csv"):
        ws.path(stale).unlink(missing_ok=True)
    pers_path = ws.path("clusters_personality.json")
    if pers_path.exists():
        personality = ClusterAssignment.load(pers_path)
        ptable = trait_centroids(vectors, personality)
        write_centroids_csv(ws.path("personality_centroids.csv"), ptable)
        outputs.append("personality_centroids.csv")
        if len(ptable.empty_clusters) < len(ptable.clusters):
            write_entropy_csv(ws.path("personality_entropy.csv"), trait_entropy_ranking(ptable))
            outputs.append("personality_entropy.csv")
    return outputs


def stage_graph(ws: Workspace, warnings: list[str]) -> list[str]:
    cfg = ws.cfg
    imap = _load_identities(ws)
    messages = _load_messages(ws)
    committers = _committer_ids(_load_commits(ws), imap)
    load = lambda n: ClusterAssignment.load(ws.path(n)) if ws.path(n).exists() else None  # noqa: E731
    g = build_comm_graph(messages, imap, load("clusters_personality.json"),
                         load("clusters_technical.json"), cfg.min_messages, cfg.threshold_mode,
                         committers=committers)
    senders = {imap.lookup(m.sender_email).id for m in messages if imap.lookup(m.sender_email)}
    silent = [c for c in committers if c not in senders]
    if silent:
        warnings.append(f"{len(silent)} committer(s) without messages omitted from the graph")
    warnings.append(f"{len(g.committers)} committer(s) above the message threshold in the graph")
    write_text(ws.path("graph.graphml"), export_graphml(g))
    write_text(ws.path("graph.dot"), export_dot(g))
    return ["graph.graphml", "graph.dot"]


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(v):
    return "" if np.isnan(v) else f"{v:.6f}"


def _read_entropy(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return [(r["trait"], float(r["entropy"])) for r in csv.DictReader(fh)]


def _heatmap(ws, centroids_file, entropy_file, stem, title, both_ends, banner) -> list[str]:
    table = read_centroids_csv(ws.require(centroids_file))
    ranking = _read_entropy(ws.require(entropy_file)) if ws.path(entropy_file).exists() else []
    n = min(10, len(ranking))
    lowest, highest = top_bottom(ranking, n) if ranking else ([], [])
    selected = [("lowest", k, h) for k, h in lowest]
    if both_ends:
        selected += [("highest", k, h) for k, h in highest]
    rows = [[k, grp, f"{h:.6f}", *(_fmt(v) for v in table.row(k))] for grp, k, h in selected]
    _write_rows(ws.path(f"{stem}.csv"), ["trait", "entropy_group", "entropy", *table.clusters], rows)
    values = np.array([table.row(k) for _, k, _ in selected]) if selected else np.zeros((0, 0))
    svg = heatmap_svg([display_name(k) for _, k, _ in selected], values,
                      table.clusters if selected else [], title, banner,
                      separator_after=len(lowest) if both_ends else None)
    write_text(ws.path(f"{stem}.svg"), svg)
    return [f"{stem}.csv", f"{stem}.svg"]


def stage_report(ws: Workspace, warnings: list[str]) -> list[str]:
    cfg = ws.cfg
    banner = _banner(cfg)
    for stale in ws.root.glob("radar_*"):
        stale.unlink()
    outputs = _heatmap(ws, "centroids.csv", "entropy.csv", "heatmap",
                       "Personality centroids by technical cluster (10 lowest / 10 highest entropy)",
                       True, banner)
    if ws.path("personality_centroids.csv").exists():
        outputs += _heatmap(ws, "personality_centroids.csv", "personality_entropy.csv",
                            "personality_heatmap",
                            "Personality clusters (10 lowest entropy traits)", False, banner)
    else:
        for ext in ("csv", "svg"):
            ws.path(f"personality_heatmap.{ext}").unlink(missing_ok=True)

    table = read_centroids_csv(ws.require("centroids.csv"))
    keys = list(cfg.radar_traits)
    mean_all = np.nanmean(table.values, axis=1) if not np.isnan(table.values).all() \
        else np.full(len(TRAIT_KEYS), np.nan)
    for j, c in enumerate(table.clusters):
        vals = [table.row(k)[j] for k in keys]
        ref = [mean_all[TRAIT_INDEX[k]] for k in keys]
        _write_rows(ws.path(f"radar_{c}.csv"), ["trait", "value", "mean_all_clusters"],
                    [[k, _fmt(v), _fmt(r)] for k, v, r in zip(keys, vals, ref)])
        write_text(ws.path(f"radar_{c}.svg"),
                   radar_svg([display_name(k) for k in keys], vals,
                             f"Technical cluster TC{c}", banner, reference=ref))
        outputs += [f"radar_{c}.csv", f"radar_{c}.svg"]

    _, comps, values = _read_matrix_csv(ws.require("participation.csv"))
    clusters, _, _ = _read_matrix_csv(ws.path("participation.csv"))
    _write_rows(ws.path("participation_table.csv"), ["cluster", *comps],
                [[c, *(render_cell(v, cfg.participation_threshold) for v in row)]
                 for c, row in zip(clusters, values)])
    outputs.append("participation_table.csv")
    return outputs


STAGES: list[tuple[str, Callable, dict]] = [
    ("ingest", stage_ingest, {}),
    ("identities", stage_identities, {}),
    ("traits", stage_traits, {}),
    ("cluster_technical", stage_cluster, {"target": "technical"}),
    ("cluster_personality", stage_cluster, {"target": "personality"}),
    ("analyze", stage_analyze, {}),
    ("graph", stage_graph, {}),
    ("report", stage_report, {}),
]

# workspace files each stage reads (optional ones are digested when present)
STAGE_INPUTS = {
    "ingest": [],
    "identities": ["commits.jsonl", "messages.jsonl"],
    "traits": ["commits.jsonl", "messages.jsonl", "identities.json"],
    "cluster_technical": ["commits.jsonl", "identities.json"],
    "cluster_personality": ["traits.csv"],
    "analyze": ["commits.jsonl", "identities.json", "traits.csv", "clusters_technical.json",
                "clusters_personality.json"],
    "graph": ["commits.jsonl", "messages.jsonl", "identities.json", "clusters_technical.json",
              "clusters_personality.json"],
    "report": ["centroids.csv", "entropy.csv", "participation.csv", "crosstab.csv",
               "personality_centroids.csv", "personality_entropy.csv"],
}


def _stage_input_digest(ws: Workspace, name: str, extra=None) -> str:
    files = {f: file_digest(ws.path(f)) for f in STAGE_INPUTS[name] if ws.path(f).exists()}
    raw = input_digests(ws.cfg) if name == "ingest" else {}
    return json_digest({"stage": name, "version": __version__, "config": ws.cfg.snapshot,
                        "files": files, "raw": raw, "extra": extra})


def _up_to_date(ws: Workspace, name: str, digest: str) -> bool:
    rec = ws.manifest.get("stages", {}).get(name)
    if not rec or rec.get("status") != "ok" or rec.get("input_digest") != digest:
        return False
    for f, d in rec.get("outputs", {}).items():
        p = ws.path(f)
        if not p.exists() or file_digest(p) != d:
            return False
    return True


def run_stage(ws: Workspace, name: str, skip_unchanged: bool = False, **kwargs) -> str:
    """Run one stage and record it in the manifest; returns 'ran' or 'skipped'."""
    func, defaults = next((f, d) for n, f, d in STAGES if n == name)
    kwargs = {**defaults, **kwargs}
    extra = {k: list(v) if isinstance(v, tuple) else v for k, v in kwargs.items()}
    digest = _stage_input_digest(ws, name, extra)
    if skip_unchanged and _up_to_date(ws, name, digest):
        ws.timings[name] = {"action": "skipped"}
        ws.save()
        log.info("stage %s: up to date, skipped", name)
        return "skipped"
    if name == "ingest":
        ws.manifest["inputs"] = input_digests(ws.cfg)
    warnings: list[str] = []
    started = time.time()
    stages = ws.manifest.setdefault("stages", {})
    try:
        outputs = func(ws, warnings, **kwargs)
    except SociominerError as exc:
        exc.stage = name
        stages[name] = {"status": "failed", "input_digest": digest, "error": str(exc),
                        "error_type": type(exc).__name__, "warnings": warnings, "outputs": {}}
        ws.timings[name] = {"action": "failed", "started": _iso(started), "finished": _iso(time.time())}
        ws.save()
        raise
    except Exception as exc:
        stages[name] = {"status": "failed", "input_digest": digest,
                        "error": f"{type(exc).__name__}: {exc}", "error_type": "InternalError",
                        "warnings": warnings, "outputs": {}}
        ws.timings[name] = {"action": "failed", "started": _iso(started), "finished": _iso(time.time())}
        ws.save()
        raise
    stages[name] = {"status": "ok", "input_digest": digest, "warnings": warnings,
                    "outputs": {f: file_digest(ws.path(f)) for f in sorted(outputs)}}
    ws.timings[name] = {"action": "ran", "started": _iso(started), "finished": _iso(time.time()),
                        "seconds": round(time.time() - started, 3)}
    ws.save()
    for w in warnings:
        log.info("%s: %s", name, w)
    return "ran"


def _iso(t: float) -> str:
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def run_pipeline(cfg: RunConfig) -> dict[str, str]:
    """Run every stage in order, skipping those whose inputs are unchanged.

    Stops at the first failing stage; the manifest records the failure.
    """
    actions = {}
    with Workspace(cfg) as ws:
        for name, _, _ in STAGES:
            actions[name] = run_stage(ws, name, skip_unchanged=True)
    return actions
