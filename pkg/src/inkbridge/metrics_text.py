"""Poem-side metrics over exported language-model outputs and references.

Cross-entropy style metrics consume TokenProbSequence records (the external
LM's per-character log-probabilities); overlap metrics (P/R/F1, BLEU,
simplified METEOR) compare character token lists against references.

Averaging policy: per-poem cross-entropy is a mean over that poem's
characters; the corpus cross-entropy (and its grouped variant) is a macro
average that weights poems equally, while perplexity is micro-averaged over
characters, the usual LM convention. Reductions use exact summation
(math.fsum), so corpus reordering cannot change results.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus_io import TokenProbSequence
from .errors import ValidationFailure

BLEU_EPSILON = 1e-9


@dataclass
class PoemPair:
    """One candidate token list against one or more reference token lists."""

    candidate: list[str]
    references: list[list[str]]

    def __post_init__(self):
        if not self.candidate:
            raise ValidationFailure("candidate must be non-empty")
        if not self.references or any(not r for r in self.references):
            raise ValidationFailure("references must be non-empty token lists")


@dataclass
class MteGroup:
    """The K sampled generations for one source painting."""

    group_id: str
    sequences: list[TokenProbSequence]

    def __post_init__(self):
        if not self.sequences:
            raise ValidationFailure(f"group {self.group_id!r} is empty")
        for seq in self.sequences:
            if seq.group_id != self.group_id:
                raise ValidationFailure(
                    f"sequence {seq.id!r} has group {seq.group_id!r}, expected {self.group_id!r}"
                )


def group_sequences(sequences: list[TokenProbSequence]) -> list[MteGroup]:
    """Group sequences by their source painting, sorted by group id."""
    buckets: dict[str, list[TokenProbSequence]] = {}
    for seq in sequences:
        if seq.group_id is None:
            raise ValidationFailure(f"sequence {seq.id!r} has no group_id")
        buckets.setdefault(seq.group_id, []).append(seq)
    return [MteGroup(gid, buckets[gid]) for gid in sorted(buckets)]


# ---------------------------------------------------------------------------
# Cross-entropy family


def cross_entropy_seq(seq: TokenProbSequence) -> float:
    """Mean negative log-probability of the poem's characters (natural log)."""
    return math.fsum(-lp for lp in seq.logp_true) / len(seq)


def mce(corpus: list[TokenProbSequence]) -> float:
    """Macro-averaged cross-entropy: mean over poems of per-poem cross-entropy."""
    if not corpus:
        raise ValidationFailure("cannot average an empty corpus")
    return math.fsum(cross_entropy_seq(s) for s in corpus) / len(corpus)


def mte(groups: list[MteGroup]) -> float:
    """Grouped cross-entropy: flat average over every sampled generation.

    Groups of unequal size are weighted by their own size, so with a uniform
    K this is exactly the (1/NK) double sum, and singleton groups reduce to
    the plain corpus average.
    """
    if not groups:
        raise ValidationFailure("cannot average an empty group list")
    values = [cross_entropy_seq(s) for g in groups for s in g.sequences]
    return math.fsum(values) / len(values)


def perplexity(corpus: list[TokenProbSequence]) -> float:
    """exp of the character-weighted (micro) mean negative log-probability."""
    if not corpus:
        raise ValidationFailure("cannot average an empty corpus")
    total = math.fsum(-lp for s in corpus for lp in s.logp_true)
    count = sum(len(s) for s in corpus)
    return math.exp(total / count)


# ---------------------------------------------------------------------------
# Character overlap metrics


def _prf_single(candidate: list[str], reference: list[str]) -> tuple[float, float, float]:
    overlap = sum((Counter(candidate) & Counter(reference)).values())
    p = overlap / len(candidate)
    r = overlap / len(reference)
    f1 = 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)
    return p, r, f1


def char_prf(pair: PoemPair) -> tuple[float, float, float]:
    """Bag-of-characters precision/recall/F1 against the best-F1 reference."""
    return max((_prf_single(pair.candidate, ref) for ref in pair.references),
               key=lambda prf: prf[2])


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(pair: PoemPair, max_n: int = 4) -> float:
    """Character-level BLEU with add-epsilon smoothing.

    Modified n-gram precisions are clipped against the per-reference maximum
    counts; zero clipped counts are replaced by epsilon (1e-9) so short poems
    cannot zero the geometric mean. Orders longer than the candidate
    contribute an epsilon precision. The brevity penalty uses the reference
    length closest to the candidate's (ties towards the shorter).
    """
    if max_n < 1:
        raise ValidationFailure("max_n must be at least 1")
    c = len(pair.candidate)
    r = min((len(ref) for ref in pair.references), key=lambda L: (abs(L - c), L))
    log_precisions = []
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(pair.candidate, n)
        total = max(c - n + 1, 0)
        clipped = 0
        if cand_counts:
            ref_counts = [_ngram_counts(ref, n) for ref in pair.references]
            clipped = sum(
                min(count, max(rc[gram] for rc in ref_counts))
                for gram, count in cand_counts.items()
            )
        numerator = clipped if clipped > 0 else BLEU_EPSILON
        log_precisions.append(math.log(numerator / max(total, 1)))
    brevity = math.exp(min(0.0, 1.0 - r / c))
    return brevity * math.exp(math.fsum(log_precisions) / max_n)


# ---------------------------------------------------------------------------
# Simplified METEOR (exact-match core; no stemming or synonymy)


def _counts(tokens: list[str], mask: int) -> Counter:
    return Counter(t for i, t in enumerate(tokens) if mask >> i & 1)


def _run_length(candidate, reference, cand_mask, ref_mask, p, q) -> int:
    length = 0
    while (
        p + length < len(candidate)
        and q + length < len(reference)
        and cand_mask >> (p + length) & 1
        and ref_mask >> (q + length) & 1
        and candidate[p + length] == reference[q + length]
    ):
        length += 1
    return length


def _longest_common_run(candidate, reference, cand_mask, ref_mask) -> tuple[int, int, int]:
    """Longest run of equal characters available in both masks; ties take the
    smallest (candidate, reference) start. Returns (length, p, q)."""
    n_cand, n_ref = len(candidate), len(reference)
    run = [0] * (n_ref + 1)
    best = (0, -1, -1)
    for i in range(n_cand - 1, -1, -1):
        nxt = [0] * (n_ref + 1)
        if cand_mask >> i & 1:
            for j in range(n_ref):
                if ref_mask >> j & 1 and reference[j] == candidate[i]:
                    nxt[j] = run[j + 1] + 1
                    length = nxt[j]
                    if length > best[0] or (length == best[0] and (i, j) < best[1:]):
                        best = (length, i, j)
        run = nxt
    return best


SEARCH_BUDGET = 2_500


class _BudgetExhausted(Exception):
    pass


def _min_chunks(candidate: list[str], reference: list[str]) -> tuple[int, int]:
    """(matches, chunks) of the best unigram alignment.

    Matches are the multiset-intersection size (always attainable); among all
    maximum alignments the number of chunks, i.e. maximal runs contiguous in
    both strings, is minimized. Solved by branch-and-bound over chunk
    placements: a greedy longest-common-run decomposition seeds the incumbent,
    ceil(remaining / longest-available-run) bounds each node, and dominance on
    visited (mask, mask) states cuts re-entries. The search is exact within a
    fixed node budget; adversarially repetitive inputs that exhaust it keep
    the best decomposition found, which is still a maximum matching. Either
    way the result is deterministic.
    """
    matches = sum((Counter(candidate) & Counter(reference)).values())
    if matches == 0:
        return 0, 0

    n_cand, n_ref = len(candidate), len(reference)
    full_cand = (1 << n_cand) - 1
    full_ref = (1 << n_ref) - 1

    def consume(mask: int, start: int, length: int) -> int:
        for off in range(length):
            mask &= ~(1 << (start + off))
        return mask

    # Greedy incumbent: repeatedly take the longest available common run.
    # Each removal shrinks the multiset intersection by exactly its length,
    # so the greedy decomposition always realizes all matches.
    cand_mask, ref_mask, left = full_cand, full_ref, matches
    incumbent = 0
    while left > 0:
        length, p, q = _longest_common_run(candidate, reference, cand_mask, ref_mask)
        cand_mask = consume(cand_mask, p, length)
        ref_mask = consume(ref_mask, q, length)
        left -= length
        incumbent += 1

    best = incumbent
    visited: dict[tuple[int, int], int] = {}
    nodes = 0

    def dfs(cand_mask: int, ref_mask: int, chunks: int, need: int, run_cap: int) -> None:
        nonlocal best, nodes
        if need == 0:
            best = min(best, chunks)
            return
        seen = visited.get((cand_mask, ref_mask))
        if seen is not None and seen <= chunks:
            return
        visited[(cand_mask, ref_mask)] = chunks
        if chunks + -(-need // run_cap) >= best:  # run_cap only shrinks downward
            return
        nodes += 1
        if nodes > SEARCH_BUDGET:
            raise _BudgetExhausted
        longest = _longest_common_run(candidate, reference, cand_mask, ref_mask)[0]
        if chunks + -(-need // longest) >= best:
            return
        ref_counts = _counts(reference, ref_mask)
        cand_counts = _counts(candidate, cand_mask)
        p = next(
            i for i in range(n_cand) if cand_mask >> i & 1 and ref_counts[candidate[i]] > 0
        )
        starts = [
            (q, _run_length(candidate, reference, cand_mask, ref_mask, p, q))
            for q in range(n_ref)
            if ref_mask >> q & 1 and reference[q] == candidate[p]
        ]
        starts.sort(key=lambda item: (-item[1], item[0]))
        for q, max_len in starts:
            for length in range(max_len, 0, -1):
                dfs(
                    consume(cand_mask, p, length),
                    consume(ref_mask, q, length),
                    chunks + 1,
                    need - length,
                    longest,
                )
        # Leave p unmatched; only legal when its character has surplus.
        if cand_counts[candidate[p]] > ref_counts[candidate[p]]:
            dfs(cand_mask & ~(1 << p), ref_mask, chunks, need, longest)

    try:
        dfs(full_cand, full_ref, 0, matches, matches)
    except _BudgetExhausted:
        pass
    return matches, best


def meteor_simplified(pair: PoemPair) -> float:
    """Exact-match METEOR core over characters, against the best reference.

    F_mean = 10PR / (R + 9P), penalty = 0.5 (chunks/matches)^3,
    score = F_mean (1 - penalty); zero when nothing matches. Stemming and
    synonym stages are omitted (meaningless for single CJK characters), hence
    "simplified" in all emitted reports.
    """
    best = 0.0
    for ref in pair.references:
        matches, chunks = _min_chunks(pair.candidate, ref)
        if matches == 0:
            continue
        p = matches / len(pair.candidate)
        r = matches / len(ref)
        f_mean = 10.0 * p * r / (r + 9.0 * p)
        penalty = 0.5 * (chunks / matches) ** 3
        best = max(best, f_mean * (1.0 - penalty))
    return best
