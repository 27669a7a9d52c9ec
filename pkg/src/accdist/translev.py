"""Pronunciation distances over phonetic transcriptions.

Segment-level substitution and indel costs are induced from the data itself:
same-word variant pairs are aligned, aligned segment pairs are counted, and
pointwise mutual information turns co-occurrence into costs (frequently
aligned segments become cheap to substitute). Induction iterates alignment
and counting until the alignments stop changing.

The gap in insertions/deletions takes part in the counts as a pseudo-segment,
so indel costs come out of the same PMI transform as substitutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

from .errors import EmptyCorpus, EmptyTranscription, NoSharedWords

GAP = None
GAP_TOKEN = "-"  # pseudo-segment used in counts and in cost-table files
INDEL_FLOOR = 0.001


@dataclass(frozen=True)
class Transcription:
    """Ordered IPA segment tokens for one word."""

    segments: tuple

    def __post_init__(self):
        segments = tuple(self.segments)
        if any(not s for s in segments):
            raise ValueError("transcription contains empty tokens")
        object.__setattr__(self, "segments", segments)

    @classmethod
    def parse(cls, text: str) -> "Transcription":
        return cls(tuple(text.split()))

    def __len__(self):
        return len(self.segments)


def _segments(t) -> tuple:
    return t.segments if isinstance(t, Transcription) else tuple(t)


@dataclass(frozen=True)
class SegmentCostTable:
    """Substitution and indel costs over segments, normalized to [0, 1].

    ``cost(x, x)`` is 0 for every segment; unseen substitution pairs fall
    back to ``default_sub`` and unseen segments to ``default_indel``.
    """

    sub: dict = field(default_factory=dict)      # {frozen pair key: cost}
    indel: dict = field(default_factory=dict)    # {segment: cost}
    smoothing: float = 0.5
    iterations_run: int = 0
    default_sub: float = 1.0
    default_indel: float = 1.0

    def __post_init__(self):
        for key, value in self.sub.items():
            if not (0.0 <= value <= 1.0) or not math.isfinite(value):
                raise ValueError(f"substitution cost out of [0,1] for {key}: {value}")
        for seg, value in self.indel.items():
            if not (0.0 < value <= 1.0) or not math.isfinite(value):
                raise ValueError(f"indel cost out of (0,1] for {seg!r}: {value}")

    @staticmethod
    def _key(x: str, y: str) -> tuple:
        return (x, y) if x <= y else (y, x)

    def cost(self, x: str, y: str) -> float:
        if x == y:
            return 0.0
        return self.sub.get(self._key(x, y), self.default_sub)

    def indel_cost(self, x: str) -> float:
        return self.indel.get(x, self.default_indel)

    @classmethod
    def uniform(cls) -> "SegmentCostTable":
        """Classic binary costs: substitution 1, indel 1, match 0."""
        return cls(sub={}, indel={}, smoothing=0.0, iterations_run=0)


@dataclass(frozen=True)
class LevAlignment:
    """Alignment columns (left segment or None, right segment or None, cost)."""

    pairs: tuple
    total: float
    normalized: float

    @property
    def structure(self) -> tuple:
        return tuple((left, right) for left, right, _ in self.pairs)


def levenshtein_align(a, b, costs: SegmentCostTable) -> LevAlignment:
    """Minimum-cost alignment of two transcriptions under ``costs``.

    Traceback ties prefer substitution/match, then deleting from the left
    input, then inserting, so alignments are deterministic.
    """
    sa, sb = _segments(a), _segments(b)
    if not sa or not sb:
        raise EmptyTranscription("cannot align an empty transcription")
    m, n = len(sa), len(sb)

    dist = [[0.0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dist[i][0] = dist[i - 1][0] + costs.indel_cost(sa[i - 1])
    for j in range(1, n + 1):
        dist[0][j] = dist[0][j - 1] + costs.indel_cost(sb[j - 1])
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            dist[i][j] = min(
                dist[i - 1][j - 1] + costs.cost(sa[i - 1], sb[j - 1]),
                dist[i - 1][j] + costs.indel_cost(sa[i - 1]),
                dist[i][j - 1] + costs.indel_cost(sb[j - 1]),
            )

    pairs = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            step = costs.cost(sa[i - 1], sb[j - 1])
            if dist[i][j] == dist[i - 1][j - 1] + step:
                pairs.append((sa[i - 1], sb[j - 1], step))
                i, j = i - 1, j - 1
                continue
        if i > 0:
            step = costs.indel_cost(sa[i - 1])
            if dist[i][j] == dist[i - 1][j] + step:
                pairs.append((sa[i - 1], GAP, step))
                i -= 1
                continue
        step = costs.indel_cost(sb[j - 1])
        pairs.append((GAP, sb[j - 1], step))
        j -= 1
    pairs.reverse()

    total = dist[m][n]
    return LevAlignment(pairs=tuple(pairs), total=total,
                        normalized=total / len(pairs))


def _align_corpus(groups, costs: SegmentCostTable) -> list:
    alignments = []
    for group in groups:
        for a, b in combinations(group, 2):
            alignments.append(levenshtein_align(a, b, costs))
    return alignments


def _pmi_table(alignments, smoothing: float, iterations_run: int) -> SegmentCostTable:
    counts: dict = {}
    vocab = set()
    for alignment in alignments:
        for left, right, _ in alignment.pairs:
            x = GAP_TOKEN if left is GAP else left
            y = GAP_TOKEN if right is GAP else right
            vocab.update((x, y))
            counts[(x, y)] = counts.get((x, y), 0) + 1
            counts[(y, x)] = counts.get((y, x), 0) + 1

    symbols = sorted(vocab)
    total = 0.0
    smoothed: dict = {}
    for x in symbols:
        for y in symbols:
            if x == GAP_TOKEN and y == GAP_TOKEN:
                continue
            value = counts.get((x, y), 0) + smoothing
            smoothed[(x, y)] = value
            total += value

    marginal = {x: sum(smoothed.get((x, y), 0.0) for y in symbols) / total
                for x in symbols}
    pmi = {}
    for (x, y), value in smoothed.items():
        if x <= y and x != y:
            pmi[(x, y)] = math.log2((value / total) / (marginal[x] * marginal[y]))

    if not pmi:
        return SegmentCostTable(sub={}, indel={}, smoothing=smoothing,
                                iterations_run=iterations_run)
    hi, lo = max(pmi.values()), min(pmi.values())
    span = hi - lo
    sub = {}
    indel = {}
    for (x, y), value in pmi.items():
        cost = 1.0 if span == 0 else (hi - value) / span
        if GAP_TOKEN in (x, y):
            seg = y if x == GAP_TOKEN else x
            indel[seg] = max(cost, INDEL_FLOOR)
        else:
            sub[(x, y)] = cost
    return SegmentCostTable(sub=sub, indel=indel, smoothing=smoothing,
                            iterations_run=iterations_run)


def induce_pmi_costs(corpus, max_iter: int = 10,
                     smoothing: float = 0.5) -> SegmentCostTable:
    """Induce PMI-based segment costs from same-word transcription groups.

    ``corpus`` is a list of groups, each holding the transcriptions of one
    word's variants. Starting from uniform costs, all same-word pairs are
    aligned, aligned segment pairs are counted (with additive smoothing),
    PMI values are min-max inverted into costs, and the corpus is realigned;
    the loop stops when alignments no longer change or after ``max_iter``
    passes.
    """
    if smoothing <= 0:
        raise ValueError("smoothing must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    groups = [list(g) for g in corpus]
    if not any(len(g) >= 2 for g in groups):
        raise EmptyCorpus("need at least one word with two or more variants")

    alignments = _align_corpus(groups, SegmentCostTable.uniform())
    table = SegmentCostTable.uniform()
    for iteration in range(1, max_iter + 1):
        table = _pmi_table(alignments, smoothing, iterations_run=iteration)
        new_alignments = _align_corpus(groups, table)
        if [a.structure for a in new_alignments] == [a.structure for a in alignments]:
            break
        alignments = new_alignments
    return table


def speaker_pair_lev(a, b, costs: SegmentCostTable) -> float:
    """Mean normalized alignment cost over the words two speakers share."""
    shared = sorted(w for w in a if w in b)
    if not shared:
        raise NoSharedWords("speakers have no transcribed word in common")
    return sum(levenshtein_align(a[w], b[w], costs).normalized
               for w in shared) / len(shared)


def write_cost_table(table: SegmentCostTable, path, header=()) -> None:
    """Serialize a cost table as TSV (gap spelled ``-``), loadable elsewhere.

    Small datasets reuse tables induced on larger ones, so the file format
    is the unit of exchange.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write("# accdist segment cost table\n")
        fh.write(f"# smoothing: {table.smoothing!r}\n")
        fh.write(f"# iterations: {table.iterations_run}\n")
        for (x, y) in sorted(table.sub):
            fh.write(f"{x}\t{y}\t{table.sub[(x, y)]!r}\n")
        for seg in sorted(table.indel):
            fh.write(f"{seg}\t{GAP_TOKEN}\t{table.indel[seg]!r}\n")


def read_cost_table(path) -> SegmentCostTable:
    """Load a cost table written by :func:`write_cost_table`."""
    smoothing = 0.5
    iterations = 0
    sub = {}
    indel = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                text = line[1:].strip()
                if text.startswith("smoothing:"):
                    smoothing = float(text.split(":", 1)[1])
                elif text.startswith("iterations:"):
                    iterations = int(text.split(":", 1)[1])
                continue
            if not line.strip():
                continue
            x, y, value = line.split("\t")
            if y == GAP_TOKEN:
                indel[x] = float(value)
            elif x == GAP_TOKEN:
                indel[y] = float(value)
            else:
                sub[SegmentCostTable._key(x, y)] = float(value)
    return SegmentCostTable(sub=sub, indel=indel, smoothing=smoothing,
                            iterations_run=iterations)
