"""From word-level distances to speaker- and dataset-level scores.

A speaker is represented as a mapping word -> FrameMatrix (or word ->
Transcription for the Levenshtein lane). Pair distances average the
word-level distances over shared words; native-likeness averages the pair
distances over a reference set. On top of that sit the sweep experiments:
layer selection on a held-out split, single-reference sweeps, per-word
correlations, and joint min-max scaling.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass

import numpy as np

from ._parallel import ordered_map
from .dtw import dtw_distance
from .errors import (
    DegenerateCorrelation,
    DegenerateRange,
    EmptyReferenceSet,
    NoSharedWords,
    SplitTooSmall,
    ZeroVariance,
)
from .stats import RatingsTable, pearson, steiger_z


@dataclass(frozen=True)
class DistanceTable:
    """Labeled distance values: speaker x speaker, or speaker x scalar."""

    rows: tuple
    cols: tuple
    values: np.ndarray
    method_tag: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.rows), len(self.cols)):
            raise ValueError("value shape does not match labels")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("distances must be finite and non-negative")
        if tuple(self.rows) == tuple(self.cols) and len(self.rows) > 1:
            if not np.allclose(values, values.T) or np.any(np.diag(values) != 0):
                raise ValueError("square tables must be symmetric with zero diagonal")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cols", tuple(self.cols))


def speaker_pair_acoustic(a, b) -> float:
    """Mean DTW distance over the words two speakers share."""
    shared = sorted(w for w in a if w in b)
    if not shared:
        raise NoSharedWords("speakers share no words")
    return sum(dtw_distance(a[w], b[w]).normalized_cost for w in shared) / len(shared)


def native_likeness(target, reference_set) -> float:
    """Mean pair distance between a target speaker and every reference."""
    reference_set = list(reference_set)
    if not reference_set:
        raise EmptyReferenceSet("reference set is empty")
    return sum(speaker_pair_acoustic(target, ref) for ref in reference_set) \
        / len(reference_set)


def likeness_table(targets, references, method_tag: str = "",
                   pair_fn=speaker_pair_acoustic) -> DistanceTable:
    """Native-likeness scores for every target against a reference set.

    ``targets``/``references`` map speaker id -> word map; ``pair_fn`` lets
    the transcription lane reuse the same plumbing.
    """
    target_ids = tuple(targets)
    reference_words = [references[r] for r in sorted(references)]
    if not reference_words:
        raise EmptyReferenceSet("reference set is empty")

    def score(tid):
        pair_scores = [pair_fn(targets[tid], ref) for ref in reference_words]
        return sum(pair_scores) / len(pair_scores)

    values = np.array(ordered_map(score, target_ids), dtype=np.float64)
    return DistanceTable(rows=target_ids, cols=("native_likeness",),
                         values=values[:, None], method_tag=method_tag)


def pairwise_matrix(speakers, method_tag: str = "",
                    pair_fn=speaker_pair_acoustic) -> DistanceTable:
    """Symmetric speaker x speaker distance matrix (zero diagonal)."""
    ids = tuple(speakers)
    pairs = [(i, j) for i in range(len(ids)) for j in range(i + 1, len(ids))]

    def score(pair):
        i, j = pair
        return pair_fn(speakers[ids[i]], speakers[ids[j]])

    flat = ordered_map(score, pairs)
    values = np.zeros((len(ids), len(ids)))
    for (i, j), value in zip(pairs, flat):
        values[i, j] = values[j, i] = value
    return DistanceTable(rows=ids, cols=ids, values=values, method_tag=method_tag)


@dataclass(frozen=True)
class LayerSweepResult:
    """Correlation per hidden layer on the validation split."""

    per_layer_r: dict
    best_layer: int
    tie_set: frozenset
    split_seed: int
    validation_fraction: float
    validation_speakers: tuple

    def __post_init__(self):
        if self.best_layer not in self.tie_set:
            raise ValueError("best layer must be part of its own tie set")
        for layer, r in self.per_layer_r.items():
            if not (-1.0 <= r <= 1.0):
                raise ValueError(f"correlation out of range for layer {layer}: {r}")


def split_validation(target_ids, validation_fraction: float, seed: int) -> list:
    """Deterministic uniform sample of target speakers for validation."""
    if not (0.0 < validation_fraction < 1.0):
        raise ValueError("validation_fraction must be in (0, 1)")
    ordered = sorted(target_ids)
    k = int(round(validation_fraction * len(ordered)))
    rng = random.Random(seed)
    rng.shuffle(ordered)
    return sorted(ordered[:k])


def layer_sweep(per_layer, ratings: RatingsTable, validation_fraction: float,
                seed: int, threshold: float = 0.05) -> LayerSweepResult:
    """Pick the hidden layer whose distances best track human ratings.

    ``per_layer`` maps layer -> (targets, references) word maps. Target
    speakers are split once by ``seed``; each layer's native-likeness scores
    on the validation split are correlated with the ratings. The best layer
    maximizes |r|; layers whose correlation is not significantly lower
    (dependent-correlation test, p > threshold) join the tie set.
    """
    layers = sorted(per_layer)
    if not layers:
        raise ValueError("per_layer is empty")
    first_targets = per_layer[layers[0]][0]
    validation = split_validation(first_targets, validation_fraction, seed)
    if len(validation) < 4:
        raise SplitTooSmall(
            f"validation split has {len(validation)} speakers; need at least 4")
    rating_vec = ratings.vector_for(validation)

    per_layer_scores = {}
    per_layer_r = {}
    for layer in layers:
        targets, references = per_layer[layer]
        table = likeness_table({s: targets[s] for s in validation}, references)
        scores = table.values[:, 0]
        per_layer_scores[layer] = scores
        per_layer_r[layer] = pearson(scores, rating_vec)

    best = max(layers, key=lambda layer: (abs(per_layer_r[layer]), -layer))
    n = len(validation)
    tie = {best}
    for layer in layers:
        if layer == best:
            continue
        try:
            r_between = pearson(per_layer_scores[best], per_layer_scores[layer])
            _, p = steiger_z(per_layer_r[best], per_layer_r[layer], r_between, n)
        except DegenerateCorrelation:
            p = 1.0  # indistinguishable score vectors cannot differ significantly
        if p > threshold:
            tie.add(layer)
    return LayerSweepResult(
        per_layer_r=per_layer_r, best_layer=best, tie_set=frozenset(tie),
        split_seed=seed, validation_fraction=validation_fraction,
        validation_speakers=tuple(validation),
    )


@dataclass(frozen=True)
class SingleReferenceSweep:
    """Correlation statistics when each reference serves alone."""

    per_reference_r: dict
    mean_r: float
    sd_r: float
    min_r: float
    max_r: float


def single_reference_sweep(targets, references,
                           ratings: RatingsTable) -> SingleReferenceSweep:
    """Correlate ratings against distances to each single reference speaker."""
    target_ids = sorted(targets)
    rating_vec = ratings.vector_for(target_ids)
    per_reference_r = {}
    for rid in sorted(references):
        table = likeness_table({t: targets[t] for t in target_ids},
                               {rid: references[rid]})
        per_reference_r[rid] = pearson(table.values[:, 0], rating_vec)
    values = np.array(list(per_reference_r.values()))
    return SingleReferenceSweep(
        per_reference_r=per_reference_r,
        mean_r=float(values.mean()),
        sd_r=float(values.std(ddof=1)) if values.size > 1 else 0.0,
        min_r=float(values.min()),
        max_r=float(values.max()),
    )


@dataclass(frozen=True)
class PerWordResult:
    """Correlation with ratings when likeness uses one word at a time."""

    per_word_r: dict
    mean_r: float
    sd_r: float


def per_word_correlations(targets, references,
                          ratings: RatingsTable) -> PerWordResult:
    """Correlation per word; words unusable for correlation are skipped."""
    words = sorted({w for t in targets.values() for w in t})
    per_word_r = {}
    for word in words:
        usable_targets = sorted(t for t in targets if word in targets[t])
        usable_refs = [references[r] for r in sorted(references)
                       if word in references[r]]
        if not usable_refs or len(usable_targets) < 3:
            warnings.warn(f"word {word!r} skipped: not enough speakers have it")
            continue
        scores = []
        for tid in usable_targets:
            ds = [dtw_distance(targets[tid][word], ref[word]).normalized_cost
                  for ref in usable_refs]
            scores.append(sum(ds) / len(ds))
        try:
            per_word_r[word] = pearson(scores, ratings.vector_for(usable_targets))
        except ZeroVariance:
            warnings.warn(f"word {word!r} skipped: constant distances")
    values = np.array(list(per_word_r.values()))
    if values.size == 0:
        raise NoSharedWords("no word produced a usable correlation")
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return PerWordResult(per_word_r=per_word_r, mean_r=float(values.mean()),
                         sd_r=sd)


def minmax_scale(values) -> np.ndarray:
    """Scale values to [0, 1] by (v - min) / (max - min)."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        raise DegenerateRange("all values equal; min-max scale undefined")
    return (values - lo) / (hi - lo)


def filter_speakers(speaker_entries, predicate) -> list:
    """Metadata-predicate filter over manifest entries (group analyses)."""
    return [entry for entry in speaker_entries if predicate(entry.metadata)]
