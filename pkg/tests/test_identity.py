import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sociominer.errors import ConflictingOverride, InputError
from sociominer.identity import (AliasOverride, Identity, IdentityMap, identity_id, lookup,
                                 normalize_name, resolve_identities)


def test_email_case_merges():
    imap = resolve_identities([("Jane Roe", "JANE@x.org"), ("J. Roe", "jane@x.org")])
    assert len(imap) == 1
    (ident,) = imap
    assert ident.emails == {"jane@x.org"}
    assert ident.names == {"Jane Roe", "J. Roe"}


def test_strong_name_merges():
    imap = resolve_identities([("Jane Roe", "jane@x.org"), ("Jane Roe", "jroe@y.com")])
    assert len(imap) == 1
    ident = imap.lookup("jroe@y.com")
    assert ident.canonical_email == "jane@x.org"
    assert ident.id == identity_id("jane@x.org")


def test_name_normalization_for_rule_two():
    assert normalize_name("  JANE   roe. ") == normalize_name("jane roe")
    imap = resolve_identities([("JANE  Roe", "a@x"), ("jane roe.", "b@y")])
    assert len(imap) == 1


def test_single_token_never_merges():
    imap = resolve_identities([("Jane", "jane@x.org"), ("Jane", "other@y.com")])
    assert len(imap) == 2


def test_override_merges_last():
    raw = [("Jane Roe", "jane@x.org"), ("J R", "jr@z.net")]
    assert len(resolve_identities(raw)) == 2
    ov = AliasOverride(merge=[{"JR@z.net", "jane@x.org"}])
    assert len(resolve_identities(raw, ov)) == 1


def test_never_merge_blocks_rule_two():
    raw = [("Alex Smith", "alex@a.com"), ("Alex Smith", "asmith@b.com")]
    ov = AliasOverride(never_merge=[{"alex@a.com", "asmith@b.com"}])
    assert len(resolve_identities(raw, ov)) == 2


def test_conflicting_override():
    raw = [("Alex Smith", "alex@a.com"), ("Alex Smith", "asmith@b.com")]
    ov = AliasOverride(merge=[{"alex@a.com", "asmith@b.com"}],
                       never_merge=[{"alex@a.com", "asmith@b.com"}])
    with pytest.raises(ConflictingOverride) as exc:
        resolve_identities(raw, ov)
    assert exc.value.pair == ("alex@a.com", "asmith@b.com")
    assert isinstance(exc.value, InputError)


def test_overlapping_merge_groups_rejected():
    with pytest.raises(InputError):
        AliasOverride(merge=[{"a@x", "b@x"}, {"b@x", "c@x"}])


def test_override_with_unknown_emails_ignored():
    raw = [("A", "a@x")]
    imap = resolve_identities(raw, AliasOverride(merge=[{"ghost@x", "phantom@y"}]))
    assert len(imap) == 1 and imap.lookup("ghost@x") is None


def test_lookup():
    imap = resolve_identities([("Jane Roe", "jane@x.org")])
    assert lookup(imap, "jane@x.org").canonical_email == "jane@x.org"
    assert lookup(imap, "nobody@x.org") is None
    assert imap.lookup("JANE@X.ORG") is imap.lookup("jane@x.org")
    ident = imap.lookup("jane@x.org")
    assert imap[ident.id] is ident


def test_empty_email_rejected():
    with pytest.raises(InputError):
        resolve_identities([("A", "  ")])


def test_identity_map_rejects_shared_email():
    a = Identity(identity_id("a@x"), "a@x", frozenset({"a@x", "s@x"}), frozenset())
    b = Identity(identity_id("b@x"), "b@x", frozenset({"b@x", "s@x"}), frozenset())
    with pytest.raises(InputError):
        IdentityMap([a, b])


def test_json_round_trip_and_overrides_file(tmp_path):
    path = tmp_path / "overrides.json"
    path.write_text(json.dumps({"merge": [["a@x", "b@y"]], "never_merge": [["c@x", "d@y"]]}))
    ov = AliasOverride.load(path)
    imap = resolve_identities([("A", "a@x"), ("B", "b@y"), ("C D", "c@x"), ("C D", "d@y")], ov)
    assert len(imap) == 3
    doc = imap.to_json()
    assert set(doc) == {"identities"}
    assert set(doc["identities"][0]) == {"id", "canonical_email", "emails", "names"}
    assert IdentityMap.from_json(json.loads(json.dumps(doc))).to_json() == doc


names = st.sampled_from(["Jane Roe", "jane  roe", "Jane", "John Doe", "J. Doe", "", "Alex Smith"])
emails = st.sampled_from([f"{u}@{d}" for u in "abcdef" for d in ("x.org", "Y.com")])
raw_pairs = st.lists(st.tuples(names, emails), min_size=1, max_size=15)


@settings(max_examples=200)
@given(raw_pairs)
def test_partition(raw):
    imap = resolve_identities(raw)
    seen = {}
    for ident in imap:
        assert ident.canonical_email in ident.emails
        assert all(e == e.lower() for e in ident.emails)
        for e in ident.emails:
            assert e not in seen
            seen[e] = ident.id
    assert set(seen) == {e.lower() for _, e in raw}


@settings(max_examples=100)
@given(raw_pairs, st.randoms(use_true_random=False))
def test_deterministic_under_reordering(raw, rnd):
    shuffled = list(raw)
    rnd.shuffle(shuffled)
    assert resolve_identities(raw).to_json() == resolve_identities(shuffled).to_json()


@settings(max_examples=200)
@given(raw_pairs, st.data())
def test_override_never_increases_count(raw, data):
    known = sorted({e.lower() for _, e in raw})
    group = data.draw(st.sets(st.sampled_from(known + ["ghost@nowhere"]), min_size=1))
    base = len(resolve_identities(raw))
    assert len(resolve_identities(raw, AliasOverride(merge=[group]))) <= base
