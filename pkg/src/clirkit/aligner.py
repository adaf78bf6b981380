"""Sentence alignment by dynamic programming.

Two sentence lists are segmented into minimal aligned couples (1-1,
1-0, 0-1, 2-1, 1-2, 2-2) by maximizing a log score that combines a
prior over translation patterns, a Gaussian term on relative segment
lengths and a bonus for cognate tokens (words sharing a prefix across
languages). Only the 1-1 couples feed translation-model training.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

# preference order doubles as the tie-break: 1-1 first, then smaller patterns
PATTERNS = ((1, 1), (1, 0), (0, 1), (2, 1), (1, 2), (2, 2))

DEFAULT_PATTERN_PRIOR = {
    (1, 1): 0.89,
    (1, 0): 0.005,
    (0, 1): 0.005,
    (2, 1): 0.0445,
    (1, 2): 0.0445,
    (2, 2): 0.011,
}


@dataclass
class AlignParams:
    pattern_prior: dict = field(default_factory=lambda: dict(DEFAULT_PATTERN_PRIOR))
    length_variance: float = 6.8
    cognate_weight: float = 0.3
    cognate_prefix_len: int = 4

    def __post_init__(self):
        total = sum(self.pattern_prior.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pattern priors sum to {total}, expected 1")
        if any(p <= 0 for p in self.pattern_prior.values()):
            raise ValueError("pattern priors must be positive")


@dataclass
class Couple:
    pattern: tuple        # (source sentences, target sentences)
    source_span: tuple    # [start, end) into the source list
    target_span: tuple
    score: float


def cognates(tokens_a, tokens_b, prefix_len=4):
    """Number of one-to-one token matches sharing a ``prefix_len``-char
    prefix (case-folded); tokens shorter than the prefix are ignored."""
    if prefix_len < 1:
        raise ValueError("prefix_len must be >= 1")
    counts_a = Counter(t[:prefix_len].lower() for t in tokens_a if len(t) >= prefix_len)
    counts_b = Counter(t[:prefix_len].lower() for t in tokens_b if len(t) >= prefix_len)
    return sum(min(counts_a[p], counts_b[p]) for p in counts_a if p in counts_b)


_LOG_NORM = -0.5 * math.log(2.0 * math.pi)


def _log_gaussian(delta):
    return _LOG_NORM - 0.5 * delta * delta


def length_log_term(len_a, len_b, ratio, variance):
    """Log density of the standardized length difference.

    Lengths are counterbalanced by sqrt(ratio) so that swapping the two
    documents (and inverting the ratio) flips the sign of delta only,
    keeping scores symmetric.
    """
    if len_a <= 0 and len_b <= 0:
        return _log_gaussian(0.0)
    scaled_a = len_a * math.sqrt(ratio)
    scaled_b = len_b / math.sqrt(ratio)
    spread = math.sqrt(variance * max((scaled_a + scaled_b) / 2.0, 1.0))
    return _log_gaussian((scaled_b - scaled_a) / spread)


def couple_score(sentences_a, sentences_b, pattern, params, ratio=1.0):
    """Log score of aligning the given sentence groups under a pattern."""
    prior = params.pattern_prior[pattern]
    score = math.log(prior)
    if 0 in pattern:
        return score
    len_a = sum(s.char_length for s in sentences_a)
    len_b = sum(s.char_length for s in sentences_b)
    score += length_log_term(len_a, len_b, ratio, params.length_variance)
    if params.cognate_weight > 0.0:
        tokens_a = [t for s in sentences_a for t in s.tokens]
        tokens_b = [t for s in sentences_b for t in s.tokens]
        score += params.cognate_weight * cognates(
            tokens_a, tokens_b, params.cognate_prefix_len)
    return score


def _corpus_ratio(sentences_a, sentences_b):
    total_a = sum(s.char_length for s in sentences_a)
    total_b = sum(s.char_length for s in sentences_b)
    if total_a <= 0 or total_b <= 0:
        return 1.0
    return total_b / total_a


def align(sentences_a, sentences_b, params=None):
    """Best monotone segmentation of two documents into couples.

    Standard DP over sentence prefixes; ties prefer 1-1, then smaller
    patterns, then earlier positions, so output is deterministic.
    """
    params = params or AlignParams()
    m, n = len(sentences_a), len(sentences_b)
    if m == 0 and n == 0:
        return []
    ratio = _corpus_ratio(sentences_a, sentences_b)
    neg_inf = float("-inf")
    best = [[neg_inf] * (n + 1) for _ in range(m + 1)]
    back = [[None] * (n + 1) for _ in range(m + 1)]
    best[0][0] = 0.0
    for i in range(m + 1):
        for j in range(n + 1):
            if i == 0 and j == 0:
                continue
            for pattern in PATTERNS:
                a, b = pattern
                if i < a or j < b:
                    continue
                prev = best[i - a][j - b]
                if prev == neg_inf:
                    continue
                score = prev + couple_score(
                    sentences_a[i - a:i], sentences_b[j - b:j],
                    pattern, params, ratio)
                if score > best[i][j]:
                    best[i][j] = score
                    back[i][j] = pattern
    couples = []
    i, j = m, n
    while i > 0 or j > 0:
        pattern = back[i][j]
        a, b = pattern
        couples.append(Couple(
            pattern=pattern,
            source_span=(i - a, i),
            target_span=(j - b, j),
            score=best[i][j] - best[i - a][j - b],
        ))
        i, j = i - a, j - b
    couples.reverse()
    return couples


def total_score(couples):
    return sum(c.score for c in couples)


def extract_training_pairs(couples, sentences_a, sentences_b):
    """The 1-1 couples as (source sentence, target sentence), in order."""
    pairs = []
    for couple in couples:
        if couple.pattern == (1, 1):
            pairs.append((sentences_a[couple.source_span[0]],
                          sentences_b[couple.target_span[0]]))
    return pairs


def pattern_label(pattern):
    return f"{pattern[0]}-{pattern[1]}"


def write_training_pairs(pairs, path, header_lines=()):
    """TSV of 1-1 sentence pairs, the translation-training input."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"#{line}\n")
        for src, tgt in pairs:
            fh.write(f"{src.text}\t{tgt.text}\n")


def write_alignment(couples, sentences_a, sentences_b, path, header_lines=()):
    """Full alignment dump: pattern, spans, score and the joined texts."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"#{line}\n")
        for c in couples:
            text_a = " ".join(s.text for s in sentences_a[c.source_span[0]:c.source_span[1]])
            text_b = " ".join(s.text for s in sentences_b[c.target_span[0]:c.target_span[1]])
            fh.write(f"{pattern_label(c.pattern)}\t{c.source_span[0]}:{c.source_span[1]}"
                     f"\t{c.target_span[0]}:{c.target_span[1]}\t{c.score:.6f}"
                     f"\t{text_a}\t{text_b}\n")
