"""Seeded synthetic data: planted touch partitions and a small end-to-end
project (git-log exports, mbox archives, overrides, config)."""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .cluster import TouchMatrix
from .ingest import CommitRecord, EmailMessage, serialize_git_log, serialize_mbox
from .traits import Lexicon


def planted_touch_matrix(n_committers=30, n_groups=3, n_files=40, noise=0.1, seed=0):
    """Committers in ``n_groups`` groups, each touching exactly its group's
    disjoint file block, then every bit flipped with probability ``noise``.

    Returns ``(TouchMatrix, planted_labels)`` with rows in id order.
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_groups), int(np.ceil(n_committers / n_groups)))[:n_committers]
    blocks = np.array_split(np.arange(n_files), n_groups)
    dense = np.zeros((n_committers, n_files), dtype=np.int64)
    for i, g in enumerate(labels):
        dense[i, blocks[g]] = 1
    flips = rng.random(dense.shape) < noise
    dense = np.where(flips, 1 - dense, dense)
    for i in np.flatnonzero(dense.sum(axis=1) == 0):
        dense[i, rng.choice(blocks[labels[i]])] = 1
    ids = [f"c{i:03d}" for i in range(n_committers)]
    files = [f"f{j:03d}" for j in range(n_files)]
    m = TouchMatrix.from_touches({ids[i]: {files[j] for j in np.flatnonzero(dense[i])}
                                  for i in range(n_committers)})
    return m, labels


def planted_points(seed=0):
    """The 30-point fixture: dense 0/1 rows of the default planted matrix."""
    m, labels = planted_touch_matrix(seed=seed)
    return m.to_csr().toarray().astype(np.float64), labels


# ---- end-to-end project --------------------------------------------------------

COMPONENTS = [
    ("bundles/org.eclipse.platform", "Eclipse Platform"),
    ("bundles/org.eclipse.core.runtime", "Eclipse Platform Runtime"),
    ("bundles/org.eclipse.swt", "Eclipse Platform SWT"),
    ("bundles/org.eclipse.team", "Eclipse Platform Team"),
    ("bundles/org.eclipse.text", "Eclipse Platform Text"),
    ("bundles/org.eclipse.ui", "Eclipse Platform UI"),
]
LISTS = ["PlatformDev", "Search", "Text", "Core", "Releng", "UI", "SWT", "Team"]

# technical group -> (component index weights); home files are disjoint per group
TECH_GROUPS = [
    {5: 0.8, 2: 0.2},
    {0: 0.5, 5: 0.4, 1: 0.1},
    {2: 0.85, 5: 0.15},
    {3: 0.5, 4: 0.3, 5: 0.2},
    {1: 0.9, 5: 0.1},
]
GROUP_LISTS = [["UI", "PlatformDev"], ["PlatformDev", "Core"], ["SWT"], ["Team", "Text"], ["Core", "Releng"]]

PERSONALITY_WORDS = [
    ["everyone", "party", "help", "support", "happy", "glad", "volunteer", "discipline", "finish"],
    ["friend", "welcome", "hello", "worried", "upset", "nervous", "sorry", "maybe", "feel"],
    ["excited", "talk", "organized", "tidy", "trust", "believe", "caution", "verify", "duty"],
]

FILLER = ("the a patch build bug fix test commit review change code file method class "
          "release branch merge update issue report api plugin view editor widget layout "
          "resource workspace project dialog preference menu action handler event listener "
          "thread job null value string index and to of in for is it this that with on we "
          "should could would will can be have has not but so if when then also").split()

FIRST = ["Alice", "Bruno", "Chen", "Dana", "Emil", "Fatima", "Goran", "Hana", "Ivan", "Julia",
         "Kenji", "Lena", "Marco", "Nadia", "Omar", "Paula", "Quinn", "Rosa", "Sami", "Tomas",
         "Uma", "Viktor", "Wen", "Ximena", "Yusuf", "Zoe", "Arjun", "Beatriz", "Colin", "Daria",
         "Elif", "Felix", "Greta", "Hugo", "Ines", "Jonas", "Kira", "Luca", "Mira", "Nils"]
LAST = ["Novak", "Silva", "Wang", "Keller", "Okafor", "Haddad", "Petrov", "Sato", "Moreau",
        "Larsen", "Costa", "Fischer", "Rossi", "Kowalski", "Nguyen", "Schmidt", "Ortiz",
        "Bauer", "Yilmaz", "Dubois"]


def _person(i):
    return f"{FIRST[i % len(FIRST)]} {LAST[(i * 7) % len(LAST)]}"


def _email(name, domain="example.org"):
    return name.lower().replace(" ", ".") + "@" + domain


def _body(rng, n_words, trait_words, others):
    words = []
    for _ in range(n_words):
        u = rng.random()
        if u < 0.07:
            words.append(trait_words[rng.integers(len(trait_words))])
        elif u < 0.08:
            words.append(others[rng.integers(len(others))])
        else:
            words.append(FILLER[rng.integers(len(FILLER))])
    lines = [" ".join(words[i:i + 12]) for i in range(0, len(words), 12)]
    return "\n".join(lines)


def build_fixture(seed=7, n_per_group=8, n_users=6):
    """Return ``(commits_by_repo, messages_by_list, overrides, people)``."""
    rng = np.random.default_rng(seed)
    n_tech = len(TECH_GROUPS)
    n_committers = n_tech * n_per_group
    lexicon_words = sorted(Lexicon.load().entries)

    files = {c: [f"{prefix}/src/org/eclipse/F{c}_{j:02d}.java" for j in range(60)]
             for c, (prefix, _) in enumerate(COMPONENTS)}
    # each group owns a disjoint slice of every component's files
    home = []
    for g, weights in enumerate(TECH_GROUPS):
        home.append({c: files[c][g * 12:(g + 1) * 12] for c in weights})

    people = []
    for i in range(n_committers):
        name = _person(i)
        people.append({"name": name, "email": _email(name), "tech": i % n_tech,
                       "pers": (i * 2 + i // n_tech) % 3, "aliases": []})
    # alias patterns exercising the identity rules
    people[0]["aliases"].append((people[0]["name"], _email(people[0]["name"], "corp.example.com")))
    people[1]["aliases"].append((people[1]["name"], people[1]["email"].upper()))
    people[2]["aliases"].append(("J. " + people[2]["name"].split()[1], "jay@personal.example.net"))
    overrides = {"merge": [[people[2]["email"], "jay@personal.example.net"]],
                 "never_merge": []}
    # two distinct people who share a name
    twin = people[3]["name"]
    people[4]["name"] = twin
    people[4]["email"] = _email(twin, "other.example.net")
    overrides["never_merge"].append([people[3]["email"], people[4]["email"]])

    start = datetime(2004, 1, 1, tzinfo=timezone.utc)
    span = (datetime(2014, 12, 1, tzinfo=timezone.utc) - start).total_seconds()

    def when():
        return start + timedelta(seconds=int(rng.random() * span))

    repo_of = {c: (name.split()[-1].lower() if name != "Eclipse Platform" else "platform")
               for c, (_, name) in enumerate(COMPONENTS)}
    commits_by_repo = {repo_of[c]: [] for c in range(len(COMPONENTS))}
    serial = 0
    for i, p in enumerate(people):
        weights = TECH_GROUPS[p["tech"]]
        comps = list(weights)
        probs = np.array([weights[c] for c in comps])
        identities = [(p["name"], p["email"])] + p["aliases"]
        for _ in range(int(rng.integers(15, 30))):
            c = comps[rng.choice(len(comps), p=probs)]
            if rng.random() < 0.04:
                pool = files[int(rng.integers(len(COMPONENTS)))]
            else:
                pool = home[p["tech"]][c]
            picked = rng.choice(len(pool), size=int(rng.integers(1, 4)), replace=False)
            author = identities[int(rng.integers(len(identities)))]
            serial += 1
            commits_by_repo[repo_of[c]].append(CommitRecord(
                f"{serial:040x}", author[0], author[1], when(),
                tuple(pool[j] for j in sorted(picked))))
    # out-of-range commit and a committer without touched files
    commits_by_repo["ui"].append(CommitRecord(f"{serial + 1:040x}", people[5]["name"],
                                              people[5]["email"],
                                              datetime(2016, 3, 1, tzinfo=timezone.utc),
                                              (files[5][0],)))
    quiet = "Pat Empty"
    commits_by_repo["platform"].append(CommitRecord(f"{serial + 2:040x}", quiet, _email(quiet),
                                                    datetime(2010, 5, 5, tzinfo=timezone.utc), ()))
    for recs in commits_by_repo.values():
        recs.sort(key=lambda c: (c.timestamp, c.commit_id))

    messages = {lst: [] for lst in LISTS}
    mid = 0
    for i, p in enumerate(people):
        low_volume = i % 9 == 8
        n_msgs = 4 if low_volume else int(rng.integers(16, 26))
        lists = GROUP_LISTS[p["tech"]]
        identities = [(p["name"], p["email"])] + p["aliases"]
        for _ in range(n_msgs):
            lst = lists[0] if rng.random() < 0.7 else (
                lists[-1] if rng.random() < 0.6 else LISTS[int(rng.integers(len(LISTS)))])
            body = _body(rng, int(rng.integers(220, 320)), PERSONALITY_WORDS[p["pers"]],
                         lexicon_words)
            if rng.random() < 0.3:
                body = (f"On Mon, someone wrote:\n> {_body(rng, 20, FILLER, FILLER)}\n\n"
                        + body)
            if rng.random() < 0.1:
                body += "\nFrom the build log the failure is clear"
            if rng.random() < 0.5:
                body += f"\n-- \n{p['name']}\nEclipse committer"
            mid += 1
            sender = identities[int(rng.integers(len(identities)))]
            messages[lst].append(EmailMessage(f"<m{mid:05d}@lists.example.org>", lst, sender[0],
                                              sender[1], when(), f"[{lst}] topic {mid}", body, ""))
    for u in range(n_users):
        name = f"User {LAST[u]}"
        for _ in range(int(rng.integers(1, 15))):
            mid += 1
            lst = LISTS[int(rng.integers(len(LISTS)))]
            messages[lst].append(EmailMessage(f"<m{mid:05d}@lists.example.org>", lst, name,
                                              _email(name, "users.example.com"), when(),
                                              "question", _body(rng, 60, FILLER, FILLER), ""))
    messages["UI"].append(EmailMessage("<late@lists.example.org>", "UI", people[0]["name"],
                                       people[0]["email"],
                                       datetime(2015, 6, 1, tzinfo=timezone.utc), "late", "late", ""))
    for msgs in messages.values():
        msgs.sort(key=lambda m: (m.timestamp, m.message_id))
    return commits_by_repo, messages, overrides, people


def fixture_config(**overrides) -> dict:
    cfg = {
        "workspace": "workspace",
        "inputs": {"git_logs": {}, "mbox_dir": "mbox"},
        "overrides": "overrides.json",
        "date_range": {"start": "2003-01-01T00:00:00Z", "end": "2015-01-01T00:00:00Z"},
        "k_technical": 5,
        "k_personality": 3,
        "seed": 42,
        "restarts": 10,
        "thresholds": {"participation": 0.07, "min_words": 3500, "min_messages": 10},
        "scorer": {"mode": "lexicon"},
        "component_map": {"prefixes": [list(p) for p in COMPONENTS], "default": "unattributed"},
        "touch_granularity": "file",
        "threshold_mode": "per_list",
        "sweep": {"technical": "1..10", "personality": "1..10"},
    }
    cfg.update(overrides)
    return cfg


def write_fixture(directory, seed=7, **config_overrides) -> Path:
    """Write the synthetic project under ``directory``; returns the config path."""
    root = Path(directory)
    (root / "git").mkdir(parents=True, exist_ok=True)
    (root / "mbox").mkdir(exist_ok=True)
    commits_by_repo, messages, overrides, _ = build_fixture(seed)
    cfg = fixture_config(**config_overrides)
    for repo, recs in sorted(commits_by_repo.items()):
        (root / "git" / f"{repo}.gitlog").write_text(serialize_git_log(recs), encoding="utf-8")
        cfg["inputs"]["git_logs"][repo] = f"git/{repo}.gitlog"
    for lst, msgs in sorted(messages.items()):
        (root / "mbox" / f"{lst}.mbox").write_text(serialize_mbox(msgs), encoding="utf-8")
    with open(root / "overrides.json", "w", encoding="utf-8") as fh:
        json.dump(overrides, fh, indent=2)
    path = root / "config.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2)
    return path
