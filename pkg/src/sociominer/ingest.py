"""Parsing of git-log exports and mbox archives into normalized records."""

from __future__ import annotations

import email
import email.policy
import hashlib
import json
import logging
import re
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from email.utils import parseaddr, parsedate_to_datetime
from typing import IO, Iterable, Mapping

from .errors import MalformedMbox, MalformedRecord, MissingHeader, UnparseableDate

log = logging.getLogger(__name__)

DEFAULT_COMPONENT = "unattributed"

# ordered like the Eclipse Platform component list
ECLIPSE_PLATFORM_COMPONENTS = [
    ("bundles/org.eclipse.ant", "Eclipse Platform Ant"),
    ("bundles/org.eclipse.core.resources", "Eclipse Platform Resources"),
    ("bundles/org.eclipse.core.runtime", "Eclipse Platform Runtime"),
    ("bundles/org.eclipse.debug", "Eclipse Platform Debug"),
    ("bundles/org.eclipse.releng", "Eclipse Platform Releng"),
    ("bundles/org.eclipse.search", "Eclipse Platform Search"),
    ("bundles/org.eclipse.swt", "Eclipse Platform SWT"),
    ("bundles/org.eclipse.team", "Eclipse Platform Team"),
    ("bundles/org.eclipse.compare", "Eclipse Platform Team"),
    ("bundles/org.eclipse.text", "Eclipse Platform Text"),
    ("bundles/org.eclipse.jface.text", "Eclipse Platform Text"),
    ("bundles/org.eclipse.ui", "Eclipse Platform UI"),
    ("bundles/org.eclipse.platform", "Eclipse Platform"),
]


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant; naive values are taken as UTC."""
    text = value.strip()
    if text.endswith("Z") or text.endswith("z"):
        text = text[:-1] + "+00:00"
    # git's --date=iso emits "2005-03-01 12:00:00 +0100"
    m = re.fullmatch(r"(\S+)[ T](\S+) ([+-]\d{2}):?(\d{2})", text)
    if m:
        text = f"{m.group(1)}T{m.group(2)}{m.group(3)}:{m.group(4)}"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class CommitRecord:
    commit_id: str
    author_name: str
    author_email: str
    timestamp: datetime
    files: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "commit_id": self.commit_id,
            "author_name": self.author_name,
            "author_email": self.author_email,
            "timestamp": format_timestamp(self.timestamp),
            "files": list(self.files),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "CommitRecord":
        return cls(d["commit_id"], d["author_name"], d["author_email"],
                   parse_timestamp(d["timestamp"]), tuple(d["files"]))


@dataclass(frozen=True)
class EmailMessage:
    message_id: str
    list_name: str
    sender_name: str
    sender_email: str
    timestamp: datetime
    subject: str
    body_raw: str
    body_clean: str

    def to_json(self) -> dict:
        d = asdict(self)
        d["timestamp"] = format_timestamp(self.timestamp)
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "EmailMessage":
        d = dict(d)
        d["timestamp"] = parse_timestamp(d["timestamp"])
        return cls(**d)


@dataclass(frozen=True)
class ComponentMap:
    """Ordered path-prefix to component attribution; first match wins."""

    prefixes: tuple[tuple[str, str], ...] = ()
    default_component: str = DEFAULT_COMPONENT

    def __post_init__(self):
        object.__setattr__(self, "prefixes", tuple((p, c) for p, c in self.prefixes))
        for prefix, _ in self.prefixes:
            if not prefix:
                raise ValueError("component prefixes must be non-empty")

    @property
    def components(self) -> list[str]:
        """All component names in first-appearance order, default last."""
        seen = []
        for _, name in self.prefixes:
            if name not in seen:
                seen.append(name)
        if self.default_component not in seen:
            seen.append(self.default_component)
        return seen


def attribute_component(path: str, cmap: ComponentMap) -> str:
    if not path:
        raise ValueError("path must be non-empty")
    for prefix, name in cmap.prefixes:
        if path.startswith(prefix):
            return name
    return cmap.default_component


@dataclass(frozen=True)
class DateRange:
    start: datetime = field(default_factory=lambda: datetime(2003, 1, 1, tzinfo=timezone.utc))
    end: datetime = field(default_factory=lambda: datetime(2015, 1, 1, tzinfo=timezone.utc))

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("DateRange requires start < end")

    def __contains__(self, ts: datetime) -> bool:
        return self.start <= ts < self.end


def filter_by_date(records: Iterable, date_range: DateRange) -> list:
    return [r for r in records if r.timestamp in date_range]


# ---- git log -----------------------------------------------------------

_AUTHOR_RE = re.compile(r"^author (.*?) ?<([^<>]*)>\s*$")


def parse_git_log(stream: IO[str] | Iterable[str]) -> list[CommitRecord]:
    """Parse the plain-text git-log export.

    One record is::

        commit <id>
        author <name> <<email>>
        date <ISO-8601>
        <blank line>
        <zero or more paths>
        ---

    Blank lines between records and inside the path block are ignored.
    """
    records: list[CommitRecord] = []
    state = "commit"
    cur: dict = {}
    line_no = 0
    for line_no, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if state == "commit":
            if not line.strip():
                continue
            if not line.startswith("commit ") or not line[7:].strip():
                raise MalformedRecord(line_no, "expected 'commit <id>'")
            cur = {"commit_id": line[7:].strip(), "files": []}
            state = "author"
        elif state == "author":
            m = _AUTHOR_RE.match(line)
            if not m:
                raise MalformedRecord(line_no, "expected 'author <name> <<email>>'")
            cur["author_name"] = m.group(1).strip()
            cur["author_email"] = m.group(2).strip()
            state = "date"
        elif state == "date":
            if not line.startswith("date "):
                raise MalformedRecord(line_no, "expected 'date <ISO-8601>'")
            try:
                cur["timestamp"] = parse_timestamp(line[5:])
            except ValueError:
                raise UnparseableDate(line_no, line[5:]) from None
            state = "blank"
        elif state == "blank":
            if line.strip():
                raise MalformedRecord(line_no, "expected blank line after date")
            state = "files"
        elif state == "files":
            if line == "---":
                files = list(dict.fromkeys(cur.pop("files")))
                records.append(CommitRecord(files=tuple(files), **cur))
                state = "commit"
            elif line.strip():
                cur["files"].append(line.strip())
    if state != "commit":
        raise MalformedRecord(line_no + 1, "unterminated record (missing '---')")
    return records


def serialize_git_log(commits: Iterable[CommitRecord]) -> str:
    out = []
    for c in commits:
        out.append(f"commit {c.commit_id}")
        out.append(f"author {c.author_name} <{c.author_email}>")
        out.append(f"date {format_timestamp(c.timestamp)}")
        out.append("")
        out.extend(c.files)
        out.append("---")
    return "\n".join(out) + ("\n" if out else "")


# ---- mbox --------------------------------------------------------------

_ESCAPED_FROM = re.compile(r"^>+From ")
_ATTRIBUTION = re.compile(r"^\s*On\b.*\bwrote:\s*$")


def clean_email_body(body_raw: str) -> str:
    """Strip quoted text, signature and reply attributions from a body."""
    kept = []
    for line in body_raw.replace("\r\n", "\n").split("\n"):
        if line == "-- ":
            break
        if line.startswith(">") or _ATTRIBUTION.match(line):
            continue
        kept.append(line.rstrip())
    out = []
    for line in kept:
        if not line.strip():
            if out and out[-1] == "":
                continue
            line = ""
        out.append(line)
    return "\n".join(out).strip("\n")


def _split_mbox(lines: list[str]) -> list[list[str]]:
    chunks: list[list[str]] = []
    started = False
    for line in lines:
        if line.startswith("From "):
            chunks.append([])
            started = True
            continue
        if not started:
            if line.strip():
                raise MalformedMbox("archive does not start with a 'From ' separator line")
            continue
        chunks[-1].append(line)
    for chunk in chunks:
        # the blank line before the next separator belongs to the separator
        if chunk and chunk[-1] == "":
            chunk.pop()
    return chunks


def _unescape_from(text: str) -> str:
    return "\n".join(line[1:] if _ESCAPED_FROM.match(line) else line for line in text.split("\n"))


def _plain_body(msg, index: int, warnings: list[str]) -> str:
    if msg.is_multipart():
        parts = []
        for part in msg.walk():
            if part.is_multipart():
                continue
            ctype = part.get_content_type()
            if ctype == "text/plain":
                parts.append(_decode_part(part))
            else:
                warnings.append(f"message {index}: skipped {ctype} part")
        return "\n".join(parts)
    if msg.get_content_type() not in ("text/plain",) and msg.get_content_maintype() == "text":
        warnings.append(f"message {index}: skipped {msg.get_content_type()} body")
        return ""
    return _decode_part(msg)


def _decode_part(part) -> str:
    cte = str(part.get("Content-Transfer-Encoding", "")).strip().lower()
    if cte in ("", "7bit", "8bit", "binary") and isinstance(part.get_payload(), str):
        # already text; get_payload(decode=True) would re-encode it lossily
        return part.get_payload()
    payload = part.get_payload(decode=True)
    if payload is None:
        payload = part.get_payload()
        return payload if isinstance(payload, str) else ""
    charset = part.get_content_charset() or "utf-8"
    try:
        return payload.decode(charset, errors="replace")
    except LookupError:
        return payload.decode("utf-8", errors="replace")


def parse_mbox(stream: IO[str] | str, list_name: str,
               warnings: list[str] | None = None) -> list[EmailMessage]:
    """Read an mboxrd/mboxo archive. Messages missing From:/Date: are skipped
    and a warning is appended to ``warnings`` (and logged)."""
    if not list_name:
        raise ValueError("list_name must be non-empty")
    if warnings is None:
        warnings = []
    text = stream if isinstance(stream, str) else stream.read()
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # final line terminator
    messages: list[EmailMessage] = []
    seen_ids: set[str] = set()
    for index, chunk in enumerate(_split_mbox(lines)):
        raw = "".join(line + "\n" for line in chunk)
        msg = email.message_from_string(raw, policy=email.policy.compat32)
        try:
            for header in ("From", "Date"):
                if not msg.get(header):
                    raise MissingHeader(index, header)
        except MissingHeader as exc:
            warnings.append(f"{list_name}: {exc} (skipped)")
            log.warning("%s: %s (skipped)", list_name, exc)
            continue
        try:
            ts = parsedate_to_datetime(str(msg["Date"]))
        except (TypeError, ValueError):
            warnings.append(f"{list_name}: message {index} has unparseable Date: (skipped)")
            continue
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        ts = ts.astimezone(timezone.utc)
        name, addr = parseaddr(str(msg["From"]))
        message_id = str(msg.get("Message-ID", "")).strip()
        if not message_id:
            message_id = "<" + hashlib.sha1(raw.encode("utf-8", "replace")).hexdigest() + ">"
        if message_id in seen_ids:
            warnings.append(f"{list_name}: duplicate Message-ID {message_id} (skipped)")
            continue
        seen_ids.add(message_id)
        body_warnings: list[str] = []
        body = _unescape_from(_plain_body(msg, index, body_warnings).replace("\r\n", "\n"))
        warnings.extend(f"{list_name}: {w}" for w in body_warnings)
        messages.append(EmailMessage(
            message_id=message_id,
            list_name=list_name,
            sender_name=name.strip(),
            sender_email=addr.strip(),
            timestamp=ts,
            subject=str(msg.get("Subject", "")).strip(),
            body_raw=body,
            body_clean=clean_email_body(body),
        ))
    return messages


def serialize_mbox(messages: Iterable[EmailMessage]) -> str:
    """Write messages as an mboxrd archive (inverse of :func:`parse_mbox`)."""
    out = []
    for m in messages:
        out.append(f"From {m.sender_email or 'unknown'} "
                   f"{m.timestamp.astimezone(timezone.utc):%a %b %d %H:%M:%S %Y}")
        sender = f"{m.sender_name} <{m.sender_email}>" if m.sender_name else m.sender_email
        out.append(f"From: {sender}")
        out.append(f"Date: {m.timestamp.astimezone(timezone.utc):%a, %d %b %Y %H:%M:%S +0000}")
        out.append(f"Subject: {m.subject}")
        out.append(f"Message-ID: {m.message_id}")
        out.append("Content-Type: text/plain; charset=utf-8")
        out.append("")
        body = m.body_raw.split("\n")
        if body[-1] == "":
            body.pop()
        for line in body:
            if line.startswith("From ") or _ESCAPED_FROM.match(line):
                line = ">" + line
            out.append(line)
        out.append("")
    return "".join(line + "\n" for line in out)


# ---- summaries and serialization ---------------------------------------

SUMMARY_COLUMNS = ["name", "committers", "commits", "senders", "messages"]


def ingest_summary(commits: Mapping[str, Iterable[CommitRecord]] | Iterable[CommitRecord],
                   messages: Iterable[EmailMessage]) -> list[dict]:
    """Per-repository and per-list counts, one row per name.

    ``commits`` is either a mapping of repository name to records or a flat
    iterable (then counted under the name ``"all"``). A repository and a list
    that share a name share a row.
    """
    if not isinstance(commits, Mapping):
        commits = {"all": list(commits)}
    rows: dict[str, dict] = {}

    def row(name):
        return rows.setdefault(name, {"name": name, "committers": set(), "commits": 0,
                                      "senders": set(), "messages": 0})

    for repo, recs in commits.items():
        r = row(repo)
        for c in recs:
            r["commits"] += 1
            r["committers"].add(c.author_email.strip().lower())
    for m in messages:
        r = row(m.list_name)
        r["messages"] += 1
        r["senders"].add(m.sender_email.strip().lower())
    out = []
    for name in sorted(rows):
        r = rows[name]
        out.append({"name": name, "committers": len(r["committers"]), "commits": r["commits"],
                    "senders": len(r["senders"]), "messages": r["messages"]})
    return out


def write_jsonl(path, records: Iterable) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False, sort_keys=False) + "\n")


def read_jsonl(path, cls):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(cls.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRecord(line_no, f"{path}: {exc}") from None
    return out
