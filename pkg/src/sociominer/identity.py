"""Merge author/sender aliases into canonical developer identities."""

from __future__ import annotations

import hashlib
import json
import re
import string
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ConflictingOverride, InputError


def normalize_email(email: str) -> str:
    return email.strip().lower()


_PUNCT = re.compile(f"[{re.escape(string.punctuation)}]")


def normalize_name(name: str) -> str:
    name = unicodedata.normalize("NFKC", name).casefold()
    name = _PUNCT.sub(" ", name)
    return " ".join(name.split())


def identity_id(canonical_email: str) -> str:
    return "id-" + hashlib.sha256(canonical_email.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Identity:
    id: str
    canonical_email: str
    emails: frozenset[str]
    names: frozenset[str]

    def to_json(self) -> dict:
        return {"id": self.id, "canonical_email": self.canonical_email,
                "emails": sorted(self.emails), "names": sorted(self.names)}

    @classmethod
    def from_json(cls, d: Mapping) -> "Identity":
        return cls(d["id"], d["canonical_email"], frozenset(d["emails"]), frozenset(d["names"]))


@dataclass(frozen=True)
class AliasOverride:
    merge: tuple[frozenset[str], ...] = ()
    never_merge: tuple[frozenset[str], ...] = ()

    def __post_init__(self):
        merge = tuple(frozenset(normalize_email(e) for e in g) for g in self.merge)
        never = tuple(frozenset(normalize_email(e) for e in g) for g in self.never_merge)
        object.__setattr__(self, "merge", merge)
        object.__setattr__(self, "never_merge", never)
        seen: set[str] = set()
        for g in merge:
            if seen & g:
                raise InputError(f"merge override groups overlap on {sorted(seen & g)}")
            seen |= g

    @classmethod
    def from_json(cls, d: Mapping) -> "AliasOverride":
        return cls(tuple(d.get("merge", ())), tuple(d.get("never_merge", ())))

    @classmethod
    def load(cls, path) -> "AliasOverride":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


class IdentityMap:
    """Immutable lookup from lowercase e-mail to :class:`Identity`."""

    def __init__(self, identities: Iterable[Identity]):
        self._identities = tuple(sorted(identities, key=lambda i: i.id))
        self._by_email = {}
        self._by_id = {}
        for ident in self._identities:
            self._by_id[ident.id] = ident
            for e in ident.emails:
                if e in self._by_email:
                    raise InputError(f"e-mail {e} appears in two identities")
                self._by_email[e] = ident

    def __iter__(self):
        return iter(self._identities)

    def __len__(self):
        return len(self._identities)

    def __getitem__(self, ident_id: str) -> Identity:
        return self._by_id[ident_id]

    def lookup(self, email: str) -> Identity | None:
        return self._by_email.get(normalize_email(email))

    def to_json(self) -> dict:
        return {"identities": [i.to_json() for i in self._identities]}

    @classmethod
    def from_json(cls, d: Mapping) -> "IdentityMap":
        return cls(Identity.from_json(x) for x in d["identities"])


def lookup(imap: IdentityMap, email: str) -> Identity | None:
    return imap.lookup(email)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}
        self.members = {x: {x} for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.members[ra] |= self.members.pop(rb)
        return ra


def _blocking_pair(left: set[str], right: set[str], never: tuple[frozenset[str], ...]):
    for group in never:
        a, b = left & group, right & group
        if a and b:
            return min(a), min(b)
    return None


def resolve_identities(raw: Iterable[tuple[str, str]],
                       overrides: AliasOverride | None = None) -> IdentityMap:
    """Partition (name, email) pairs into identities.

    Rules, in order: identical e-mail after lowercasing; identical
    normalized name when both names have at least two tokens (unless a
    never_merge entry separates them); explicit merge groups.
    """
    overrides = overrides or AliasOverride()
    pairs = sorted({(name.strip(), normalize_email(email)) for name, email in raw})
    for _, email in pairs:
        if not email:
            raise InputError("empty e-mail in identity input")
    emails = sorted({e for _, e in pairs})
    uf = _UnionFind(emails)
    names_by_email: dict[str, set[str]] = {e: set() for e in emails}
    for name, email in pairs:
        if name:
            names_by_email[email].add(name)

    # rule 1 is implicit: each e-mail is a single union-find element
    by_name: dict[str, list[str]] = {}
    for name, email in pairs:
        key = normalize_name(name)
        if len(key.split()) >= 2:
            by_name.setdefault(key, []).append(email)
    for key in sorted(by_name):
        group = sorted(set(by_name[key]))
        for other in group[1:]:
            ra, rb = uf.find(group[0]), uf.find(other)
            if ra == rb:
                continue
            if _blocking_pair(uf.members[ra], uf.members[rb], overrides.never_merge):
                continue
            uf.union(ra, rb)

    known = set(emails)
    for g in overrides.merge:
        # e-mails absent from the data are ignored so overrides never add identities
        group = sorted(g & known)
        for other in group[1:]:
            ra, rb = uf.find(group[0]), uf.find(other)
            if ra == rb:
                continue
            pair = _blocking_pair(uf.members[ra], uf.members[rb], overrides.never_merge)
            if pair:
                raise ConflictingOverride(g, pair)
            uf.union(ra, rb)

    identities = []
    for root in sorted(uf.members):
        members = uf.members[root]
        canonical = min(members)
        names = set().union(*(names_by_email[e] for e in members))
        identities.append(Identity(identity_id(canonical), canonical,
                                   frozenset(members), frozenset(names)))
    return IdentityMap(identities)
