"""Tweet file ingestion: parse, bbox filter, spam/duplicate removal, grid labelling, persistence."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import re
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .geo_grid import GeoBoundingBox, GeoPoint, GridError, LatticeSpec, grid_index
from .text import normalize

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
LABELED_HEADER = ["schema_version", "id", "user_id", "label", "lat", "lon", "text",
                  "description", "variant"]
CSV_INPUT_HEADER = ["id", "user_id", "time", "lat", "lon", "text", "description"]
DEFAULT_SPAM_THRESHOLD = 10

_MENTION_HANDLE = re.compile(r"(?<!\w)@(\w+)")


class UsageError(ValueError):
    pass


class CorpusFormatError(ValueError):
    pass


class Variant(str, Enum):
    TEXT_ONLY = "TextOnly"
    TEXT_PLUS_GEO_ENTITIES = "TextPlusGeoEntities"


@dataclass(frozen=True)
class RawTweetRecord:
    id: str
    user_id: str
    time: str
    content: str
    mentions: tuple[str, ...] = ()
    geo: GeoPoint | None = None
    user_description: str | None = None
    user_time_zone: str | None = None


@dataclass(frozen=True)
class CleanTweet:
    id: str
    user_id: str
    content: str
    geo: GeoPoint
    user_description: str | None = None

    def __post_init__(self):
        # NUL cannot pass through the csv module; empty and absent descriptions
        # are the same thing on disk
        if "\x00" in self.content:
            object.__setattr__(self, "content", self.content.replace("\x00", ""))
        desc = self.user_description
        if desc is not None and "\x00" in desc:
            desc = desc.replace("\x00", "")
        object.__setattr__(self, "user_description", desc or None)


@dataclass(frozen=True)
class LabeledExample:
    tweet: CleanTweet
    label: int
    variant: Variant = Variant.TEXT_ONLY

    @property
    def text(self) -> str:
        return self.tweet.content


@dataclass
class ParseSummary:
    parsed: int = 0
    skipped: int = 0


@dataclass
class Reject:
    id: str
    reason: str


class TweetStream:
    """Lazy record iterator over one input file; ``summary`` fills in as it is consumed."""

    def __init__(self, path, fmt: str):
        if fmt not in ("jsonl", "csv"):
            raise UsageError(f"unknown input format {fmt!r}; expected 'jsonl' or 'csv'")
        self.path = os.fspath(path)
        self.fmt = fmt
        self.summary = ParseSummary()
        # fail fast on unreadable input
        with open(self.path, "rb"):
            pass

    def __iter__(self) -> Iterator[RawTweetRecord]:
        parse = _iter_jsonl if self.fmt == "jsonl" else _iter_csv
        for rec in parse(self.path):
            if rec is None:
                self.summary.skipped += 1
            else:
                self.summary.parsed += 1
                yield rec


def parse_tweet_file(path, fmt: str = "jsonl") -> TweetStream:
    return TweetStream(path, fmt)


def _opt_str(value) -> str | None:
    if value is None:
        return None
    s = str(value)
    return s if s else None


def _record_from_json(obj) -> RawTweetRecord | None:
    if not isinstance(obj, dict):
        return None
    user = obj.get("user") or {}
    if not isinstance(user, dict):
        return None
    tid = obj.get("id_str") or obj.get("id")
    uid = user.get("id_str") or user.get("id")
    if tid in (None, "") or uid in (None, ""):
        return None
    text = obj.get("full_text", obj.get("text", ""))
    if not isinstance(text, str):
        return None
    geo = None
    coords = obj.get("coordinates")
    if coords is not None:
        pair = coords.get("coordinates") if isinstance(coords, dict) else coords
        try:
            lon, lat = pair
            geo = GeoPoint(float(lat), float(lon))
        except (TypeError, ValueError):
            return None
    entities = obj.get("entities") or {}
    mentions = tuple(m.get("screen_name", "") for m in entities.get("user_mentions") or []
                     if isinstance(m, dict))
    return RawTweetRecord(
        id=str(tid), user_id=str(uid), time=str(obj.get("created_at") or ""),
        content=text, mentions=mentions, geo=geo,
        user_description=_opt_str(user.get("description")),
        user_time_zone=_opt_str(user.get("time_zone")))


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                yield None
                continue
            yield _record_from_json(obj)


def _iter_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        if [h.strip() for h in header] != CSV_INPUT_HEADER:
            raise CorpusFormatError(
                f"{path}: expected CSV header {','.join(CSV_INPUT_HEADER)}, found {','.join(header)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_INPUT_HEADER):
                yield None
                continue
            tid, uid, time, lat, lon, text, desc = row
            if not tid or not uid:
                yield None
                continue
            geo = None
            if lat.strip() or lon.strip():
                try:
                    geo = GeoPoint(float(lat), float(lon))
                except ValueError:
                    yield None
                    continue
            yield RawTweetRecord(
                id=tid, user_id=uid, time=time, content=text,
                mentions=tuple(_MENTION_HANDLE.findall(text)), geo=geo,
                user_description=_opt_str(desc))


def filter_bbox(records: Iterable[RawTweetRecord], bbox: GeoBoundingBox,
                rejects: list[Reject] | None = None) -> Iterator[RawTweetRecord]:
    for rec in records:
        if rec.geo is not None and bbox.contains(rec.geo):
            yield rec
        elif rejects is not None:
            reason = "no geotag" if rec.geo is None else (
                f"out of bbox: ({rec.geo.latitude}, {rec.geo.longitude})")
            rejects.append(Reject(rec.id, reason))


def dedupe_and_despam(records: Iterable[RawTweetRecord],
                      spam_threshold: int = DEFAULT_SPAM_THRESHOLD) -> list[RawTweetRecord]:
    """Drop blank messages, repeats of (user, text), and mass-posted text.

    Comparison uses the normalised content, so URL-only and mention-only
    messages count as blank. A normalised text posted by more than
    ``spam_threshold`` distinct users is removed entirely. The first occurrence
    in input order wins for same-user repeats.
    """
    items = [(rec, normalize(rec.content)) for rec in records]
    posters: dict[str, set[str]] = defaultdict(set)
    for rec, norm in items:
        if norm:
            posters[norm].add(rec.user_id)
    seen: set[tuple[str, str]] = set()
    out = []
    for rec, norm in items:
        if not norm or len(posters[norm]) > spam_threshold:
            continue
        key = (rec.user_id, norm)
        if key in seen:
            continue
        seen.add(key)
        out.append(rec)
    return out


def clean(record: RawTweetRecord) -> CleanTweet:
    if record.geo is None:
        raise ValueError(f"record {record.id} has no geotag")
    return CleanTweet(id=record.id, user_id=record.user_id, content=normalize(record.content),
                      geo=record.geo, user_description=record.user_description)


def assign_labels(tweets: Iterable[CleanTweet], lattice: LatticeSpec,
                  rejects: list[Reject] | None = None) -> Iterator[LabeledExample]:
    """Label each tweet with its grid cell; unlabelable tweets go to ``rejects``."""
    for tw in tweets:
        try:
            label = grid_index(tw.geo, lattice)
        except GridError as exc:
            if rejects is None:
                raise
            rejects.append(Reject(tw.id, f"out of bbox: {exc}"))
            continue
        yield LabeledExample(tw, label, Variant.TEXT_ONLY)


def relabel(examples: Iterable[LabeledExample], lattice: LatticeSpec) -> list[LabeledExample]:
    return [replace(ex, label=grid_index(ex.tweet.geo, lattice)) for ex in examples]


@dataclass
class User:
    user_id: str
    tweets: list[CleanTweet] = field(default_factory=list)
    real_location: GeoPoint | None = None
    predicted_location: int | None = None


def group_users(tweets: Iterable[CleanTweet]) -> list[User]:
    """Group tweets by author; each user's real location is the mean of their geotags."""
    by_user: dict[str, list[CleanTweet]] = defaultdict(list)
    for tw in tweets:
        by_user[tw.user_id].append(tw)
    users = []
    for uid in sorted(by_user):
        tws = by_user[uid]
        lat = sum(t.geo.latitude for t in tws) / len(tws)
        lon = sum(t.geo.longitude for t in tws) / len(tws)
        users.append(User(uid, tws, GeoPoint(lat, lon)))
    return users


# -- persistence -----------------------------------------------------------

def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def labeled_to_csv(examples: Iterable[LabeledExample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(LABELED_HEADER)
    for ex in examples:
        tw = ex.tweet
        w.writerow([SCHEMA_VERSION, tw.id, tw.user_id, ex.label, repr(tw.geo.latitude),
                    repr(tw.geo.longitude), tw.content, tw.user_description or "",
                    Variant(ex.variant).value])
    return buf.getvalue()


def write_labeled(path, examples: Iterable[LabeledExample]) -> None:
    atomic_write_text(path, labeled_to_csv(examples))


def read_labeled(path) -> list[LabeledExample]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LABELED_HEADER:
            raise CorpusFormatError(
                f"{path}: expected labeled-corpus schema version {SCHEMA_VERSION} with header "
                f"{','.join(LABELED_HEADER)}, found {','.join(header or [])!r}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(LABELED_HEADER):
                raise CorpusFormatError(f"{path}:{lineno}: expected {len(LABELED_HEADER)} fields, found {len(row)}")
            version, tid, uid, label, lat, lon, text, desc, variant = row
            if version != str(SCHEMA_VERSION):
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected schema_version {SCHEMA_VERSION}, found {version!r}")
            try:
                tweet = CleanTweet(tid, uid, text, GeoPoint(float(lat), float(lon)), desc or None)
                out.append(LabeledExample(tweet, int(label), Variant(variant)))
            except ValueError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: {exc}") from None
        return out


def write_rejects(path, rejects: Sequence[Reject]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["id", "reason"])
    for r in rejects:
        w.writerow([r.id, r.reason])
    atomic_write_text(path, buf.getvalue())
