"""On-disk formats, corpus validation, dataset splitting, and batch planning.

File formats:
  manifest        JSON  {"items": [{"id", "modality", "pair_id"?, "genre"?, "split"?}, ...]}
  features        CSV   header "id,f0,...,f{d-1}", one row per item
  token probs     JSONL {"id", "group_id"?, "chars": [...], "logp": [...], "dist"?, "vocab"?}
  split           JSON  {"seed", "ratios", "assignment": {id: split}}

All loaders validate every documented invariant and raise ValidationFailure
naming the offending id; OS-level problems raise InputOutputFailure.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field

import numpy as np

from .errors import InputOutputFailure, ValidationFailure
from .prng import Xoshiro256StarStar

MODALITIES = ("painting", "poem")
GENRES = ("figure", "flower_bird", "landscape", "boundary")
SPLITS = ("train", "val", "test")

DEFAULT_MAX_POEM_LENGTH = 80

# Classical-verse punctuation treated as editorial, not content.
CJK_PUNCTUATION = frozenset("，。？！、")
_ASCII_PUNCTUATION = frozenset(string.punctuation)


@dataclass
class ManifestItem:
    id: str
    modality: str
    pair_id: str | None = None
    genre: str | None = None
    split: str | None = None


@dataclass
class CorpusManifest:
    items: list[ManifestItem]
    _by_id: dict[str, ManifestItem] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_id = {}
        for item in self.items:
            if not item.id:
                raise ValidationFailure("manifest item with empty id")
            if item.id in self._by_id:
                raise ValidationFailure(f"duplicate id: {item.id!r}")
            if item.modality not in MODALITIES:
                raise ValidationFailure(f"invalid modality for id {item.id!r}: {item.modality!r}")
            if item.genre is not None and item.genre not in GENRES:
                raise ValidationFailure(f"invalid genre for id {item.id!r}: {item.genre!r}")
            if item.split is not None and item.split not in SPLITS:
                raise ValidationFailure(f"invalid split for id {item.id!r}: {item.split!r}")
            self._by_id[item.id] = item
        for item in self.items:
            if item.pair_id is None:
                continue
            partner = self._by_id.get(item.pair_id)
            if partner is None:
                raise ValidationFailure(f"dangling pair_id on id {item.id!r}: {item.pair_id!r}")
            if partner.modality == item.modality:
                raise ValidationFailure(
                    f"pair_id on id {item.id!r} points to same-modality item {partner.id!r}"
                )
            if partner.pair_id != item.id:
                raise ValidationFailure(f"asymmetric pairing between {item.id!r} and {partner.id!r}")

    def __getitem__(self, item_id: str) -> ManifestItem:
        return self._by_id[item_id]

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def ids(self) -> list[str]:
        return [item.id for item in self.items]

    def pairs(self) -> list[tuple[str, str]]:
        """Distinct (painting_id, poem_id) links, sorted by painting id."""
        seen = set()
        out = []
        for item in self.items:
            if item.pair_id is None:
                continue
            key = frozenset((item.id, item.pair_id))
            if key in seen:
                continue
            seen.add(key)
            painting = item if item.modality == "painting" else self._by_id[item.pair_id]
            poem = self._by_id[painting.pair_id]
            out.append((painting.id, poem.id))
        out.sort()
        return out


@dataclass
class FeatureMatrix:
    """Row-per-item matrix of encoder outputs for one modality."""

    ids: list[str]
    data: np.ndarray
    modality: str

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.modality not in MODALITIES:
            raise ValidationFailure(f"invalid modality: {self.modality!r}")
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValidationFailure("feature matrix must be 2-D with at least one row and column")
        if len(self.ids) != self.data.shape[0]:
            raise ValidationFailure("feature matrix id count does not match row count")
        bad = np.flatnonzero(~np.isfinite(self.data).all(axis=1))
        if bad.size:
            raise ValidationFailure(f"non-finite feature value for id {self.ids[int(bad[0])]!r}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def sorted_by_id(self) -> "FeatureMatrix":
        order = sorted(range(self.n), key=lambda i: self.ids[i])
        return FeatureMatrix([self.ids[i] for i in order], self.data[order], self.modality)


@dataclass
class TokenProbSequence:
    """A poem's characters with the external LM's log-probabilities for them."""

    id: str
    chars: list[str]
    logp_true: list[float]
    group_id: str | None = None
    dist: np.ndarray | None = None
    vocab: list[str] | None = None

    def __post_init__(self):
        if len(self.chars) < 1:
            raise ValidationFailure(f"sequence {self.id!r} has length 0")
        if len(self.logp_true) != len(self.chars):
            raise ValidationFailure(f"sequence {self.id!r}: chars and logp lengths differ")
        for c in self.chars:
            if not isinstance(c, str) or len(c) != 1:
                raise ValidationFailure(f"sequence {self.id!r}: chars must be single characters")
        for lp in self.logp_true:
            if not math.isfinite(lp):
                raise ValidationFailure(f"sequence {self.id!r}: non-finite log-probability")
            if lp > 0.0:
                raise ValidationFailure(f"sequence {self.id!r}: log-probability > 0")
        if self.dist is not None:
            self._check_dist()

    def _check_dist(self):
        self.dist = np.asarray(self.dist, dtype=np.float64)
        if self.vocab is None:
            raise ValidationFailure(f"sequence {self.id!r}: dist requires a vocab listing")
        if len(set(self.vocab)) != len(self.vocab):
            raise ValidationFailure(f"sequence {self.id!r}: vocab entries must be unique")
        if self.dist.ndim != 2 or self.dist.shape != (len(self.chars), len(self.vocab)):
            raise ValidationFailure(f"sequence {self.id!r}: dist shape must be T x |V|")
        if np.any(self.dist < 0.0) or np.any(self.dist > 1.0):
            raise ValidationFailure(f"sequence {self.id!r}: dist entries outside [0, 1]")
        row_sums = self.dist.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-6):
            raise ValidationFailure(f"sequence {self.id!r}: dist rows must sum to 1")
        index = {c: j for j, c in enumerate(self.vocab)}
        for t, (c, lp) in enumerate(zip(self.chars, self.logp_true)):
            j = index.get(c)
            if j is None:
                raise ValidationFailure(f"sequence {self.id!r}: char at position {t} not in vocab")
            if abs(math.exp(lp) - self.dist[t, j]) > 1e-6:
                raise ValidationFailure(
                    f"sequence {self.id!r}: logp and dist disagree at position {t}"
                )

    def __len__(self) -> int:
        return len(self.chars)


@dataclass
class SplitAssignment:
    assignment: dict[str, str]
    seed: int
    ratios: tuple[float, float, float]

    def ids_for(self, split: str) -> list[str]:
        return sorted(i for i, s in self.assignment.items() if s == split)


@dataclass
class Batch:
    paired_ids: list[tuple[str, str]]
    unpaired_ids: list[str]
    partial: bool = False


@dataclass
class BatchPlan:
    batches: list[Batch]
    paired_per_batch: int
    ratio_k: int
    seed: int


# ---------------------------------------------------------------------------
# Loading and saving


def _read_text(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputOutputFailure(f"cannot read {path}: {exc}") from exc


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputOutputFailure(f"cannot write {path}: {exc}") from exc


def load_manifest(path) -> CorpusManifest:
    """Load and validate a corpus manifest from JSON."""
    text = _read_text(path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"malformed manifest {path}: {exc}") from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("items"), list):
        raise ValidationFailure(f'malformed manifest {path}: expected {{"items": [...]}}')
    items = []
    for entry in raw["items"]:
        if not isinstance(entry, dict) or "id" not in entry or "modality" not in entry:
            raise ValidationFailure(f"malformed manifest entry in {path}: {entry!r}")
        items.append(
            ManifestItem(
                id=entry["id"],
                modality=entry["modality"],
                pair_id=entry.get("pair_id"),
                genre=entry.get("genre"),
                split=entry.get("split"),
            )
        )
    return CorpusManifest(items)


def manifest_to_json(manifest: CorpusManifest) -> str:
    """Canonical manifest serialization: fixed key order, LF, trailing newline."""
    items = []
    for item in manifest.items:
        entry = {"id": item.id, "modality": item.modality}
        if item.pair_id is not None:
            entry["pair_id"] = item.pair_id
        if item.genre is not None:
            entry["genre"] = item.genre
        if item.split is not None:
            entry["split"] = item.split
        items.append(entry)
    return json.dumps({"items": items}, ensure_ascii=False, indent=2) + "\n"


def save_manifest(manifest: CorpusManifest, path) -> None:
    _write_text(path, manifest_to_json(manifest))


def load_features(path, modality: str) -> FeatureMatrix:
    """Load a feature CSV; values are parsed into 64-bit reals, row order kept."""
    text = _read_text(path)
    lines = text.splitlines()
    if not lines:
        raise ValidationFailure(f"empty feature file {path}")
    header = lines[0].split(",")
    if header[0] != "id" or len(header) < 2:
        raise ValidationFailure(f'feature file {path}: header must be "id,f0,..."')
    width = len(header)
    ids: list[str] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != width:
            raise ValidationFailure(f"feature file {path}: ragged row at line {lineno}")
        row_id = cells[0]
        try:
            values = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise ValidationFailure(f"feature file {path}: bad value for id {row_id!r}") from exc
        if not all(math.isfinite(v) for v in values):
            raise ValidationFailure(f"feature file {path}: non-finite value for id {row_id!r}")
        ids.append(row_id)
        rows.append(values)
    if not rows:
        raise ValidationFailure(f"feature file {path}: no data rows")
    return FeatureMatrix(ids, np.array(rows, dtype=np.float64), modality)


def save_features(matrix: FeatureMatrix, path) -> None:
    header = "id," + ",".join(f"f{j}" for j in range(matrix.dim))
    lines = [header]
    for i, row_id in enumerate(matrix.ids):
        lines.append(row_id + "," + ",".join(repr(float(v)) for v in matrix.data[i]))
    _write_text(path, "\n".join(lines) + "\n")


def load_token_probs(
    path,
    max_length: int = DEFAULT_MAX_POEM_LENGTH,
    truncate: bool = False,
) -> list[TokenProbSequence]:
    """Load token-probability sequences from JSON lines.

    Sequences longer than ``max_length`` are rejected unless ``truncate`` is
    set, in which case chars/logp/dist are cut at the cap.
    """
    text = _read_text(path)
    sequences = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"{path}: malformed JSON at line {lineno}: {exc}") from exc
        for key in ("id", "chars", "logp"):
            if key not in raw:
                raise ValidationFailure(f"{path}: line {lineno} missing key {key!r}")
        chars = list(raw["chars"])
        logp = [float(v) for v in raw["logp"]]
        dist = raw.get("dist")
        if len(chars) > max_length:
            if not truncate:
                raise ValidationFailure(
                    f"sequence {raw['id']!r} exceeds max length {max_length} "
                    f"({len(chars)} characters)"
                )
            chars = chars[:max_length]
            logp = logp[:max_length]
            if dist is not None:
                dist = dist[:max_length]
        sequences.append(
            TokenProbSequence(
                id=raw["id"],
                chars=chars,
                logp_true=logp,
                group_id=raw.get("group_id"),
                dist=dist,
                vocab=raw.get("vocab"),
            )
        )
    return sequences


def load_split(path) -> SplitAssignment:
    text = _read_text(path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"malformed split file {path}: {exc}") from exc
    try:
        assignment = dict(raw["assignment"])
        seed = int(raw["seed"])
        ratios = tuple(float(r) for r in raw["ratios"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationFailure(f"malformed split file {path}") from exc
    for item_id, split in assignment.items():
        if split not in SPLITS:
            raise ValidationFailure(f"invalid split for id {item_id!r}: {split!r}")
    return SplitAssignment(assignment, seed, ratios)  # type: ignore[arg-type]


def split_to_json(split: SplitAssignment) -> str:
    payload = {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "assignment": {i: split.assignment[i] for i in sorted(split.assignment)},
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def save_split(split: SplitAssignment, path) -> None:
    _write_text(path, split_to_json(split))


# ---------------------------------------------------------------------------
# Tokenization


def tokenize_chars(text: str, keep_cjk_punctuation: bool = False) -> list[str]:
    """Split text into single characters, dropping whitespace and punctuation.

    ASCII punctuation is always dropped; the classical-verse marks
    ，。？！、 are dropped by default and kept under the flag.
    """
    out = []
    for c in text:
        if c.isspace() or c in _ASCII_PUNCTUATION:
            continue
        if not keep_cjk_punctuation and c in CJK_PUNCTUATION:
            continue
        out.append(c)
    return out


# ---------------------------------------------------------------------------
# Splitting and batch scheduling


def _boundaries(ratios: tuple[float, float, float], n: int) -> tuple[int, int]:
    b1 = int(math.floor(ratios[0] * n + 0.5))
    b2 = int(math.floor((ratios[0] + ratios[1]) * n + 0.5))
    return b1, b2


def split_dataset(
    manifest: CorpusManifest,
    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15),
    seed: int = 0,
) -> SplitAssignment:
    """Deterministic train/val/test assignment.

    Ids are sorted lexicographically, Fisher-Yates shuffled with a seeded
    xoshiro256** stream, and cut at rounded ratio boundaries. Paired items are
    assigned as a unit so supervision never straddles splits; a pair landing
    on a full boundary overflows into the current split (counts may then
    deviate from the rounded targets by up to one pair).
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValidationFailure("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationFailure(f"ratios must sum to 1, got {sum(ratios)!r}")
    if not manifest.items:
        raise ValidationFailure("cannot split an empty manifest")

    ids = sorted(manifest.ids())
    rng = Xoshiro256StarStar(seed)
    rng.shuffle(ids)

    n = len(ids)
    b1, b2 = _boundaries(ratios, n)
    remaining = [b1, b2 - b1, n - b2]

    assignment: dict[str, str] = {}
    cursor = 0
    for item_id in ids:
        if item_id in assignment:
            continue
        unit = [item_id]
        pair_id = manifest[item_id].pair_id
        if pair_id is not None:
            unit.append(pair_id)
        while cursor < 2 and remaining[cursor] <= 0:
            cursor += 1
        for member in unit:
            assignment[member] = SPLITS[cursor]
        remaining[cursor] -= len(unit)

    return SplitAssignment(assignment, seed, tuple(ratios))


class _UnpairedPool:
    """Draws unpaired ids, reshuffling the full pool whenever it runs dry."""

    def __init__(self, ids: list[str], rng: Xoshiro256StarStar):
        self._ids = ids
        self._rng = rng
        self._queue = list(ids)
        self._rng.shuffle(self._queue)
        self._pos = 0

    def draw(self, count: int) -> list[str]:
        out = []
        for _ in range(count):
            if self._pos >= len(self._queue):
                self._queue = list(self._ids)
                self._rng.shuffle(self._queue)
                self._pos = 0
            out.append(self._queue[self._pos])
            self._pos += 1
        return out


def schedule_batches(
    split: SplitAssignment,
    manifest: CorpusManifest,
    paired_per_batch: int,
    ratio_k: int = 5,
    seed: int = 0,
) -> BatchPlan:
    """Plan one epoch of training batches over the train split.

    Every full batch carries ``paired_per_batch`` painting/poem pairs and
    ``ratio_k`` times as many unpaired items; a smaller final batch keeps the
    per-pair ratio and is flagged partial. The unpaired pool recycles (with
    reshuffle) when it cannot cover the demand.
    """
    if paired_per_batch < 1:
        raise ValidationFailure("paired_per_batch must be at least 1")
    if ratio_k < 0:
        raise ValidationFailure("ratio_k must be non-negative")

    train = {i for i, s in split.assignment.items() if s == "train"}
    pairs = [p for p in manifest.pairs() if p[0] in train and p[1] in train]
    unpaired = sorted(
        i for i in train if i in manifest and manifest[i].pair_id is None
    )
    if not pairs:
        raise ValidationFailure("train split has no paired items to anchor batches")
    if ratio_k > 0 and not unpaired:
        raise ValidationFailure("train split has no unpaired items but ratio_k > 0")

    rng = Xoshiro256StarStar(seed)
    rng.shuffle(pairs)
    pool = _UnpairedPool(unpaired, rng) if ratio_k > 0 else None

    batches = []
    for start in range(0, len(pairs), paired_per_batch):
        chunk = pairs[start : start + paired_per_batch]
        unpaired_ids = pool.draw(ratio_k * len(chunk)) if pool is not None else []
        batches.append(Batch(chunk, unpaired_ids, partial=len(chunk) < paired_per_batch))
    return BatchPlan(batches, paired_per_batch, ratio_k, seed)
