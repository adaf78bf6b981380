"""Word-translation tables trained by EM on 1-1 sentence pairs.

Implements the order-free lexical model: every target token in a pair
may arise from any source token, expected co-occurrence counts are
accumulated from the current table and renormalized until the training
likelihood stabilizes. On top of the trained table sit three pruning
strategies (probability threshold, global top-N by expected count,
noise rules) and the query-projection and variant derivations used by
the retrieval models.
"""

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

NULL_TOKEN = "<null>"
PAIR_TOKEN_CAP = 60  # guards E-step cost against misaligned couples


class TrainingError(ValueError):
    pass


@dataclass
class TrainConfig:
    iterations: int = 5
    use_null_token: bool = False
    min_pair_tokens: int = 1
    convergence_delta: float = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class TranslationModel:
    """Directional sparse table P(target | source) with source marginals."""
    direction: tuple  # (source language, target language)
    table: dict       # source term -> {target term: probability}
    source_marginal: dict = field(default_factory=dict)
    source_vocab_size: int = 0
    target_vocab_size: int = 0
    expected_counts: dict = field(default_factory=dict)  # final E-step counts
    unit_weights: bool = False  # True for the synonym-class variant
    log_likelihood_trace: list = field(default_factory=list)

    def entries(self):
        for s in sorted(self.table):
            row = self.table[s]
            for t in sorted(row, key=lambda t: (-row[t], t)):
                yield s, t, row[t]

    def entry_count(self):
        return sum(len(row) for row in self.table.values())

    def translations(self, source_term):
        return self.table.get(source_term, {})


@dataclass
class QueryModel:
    """Unigram distribution over query terms."""
    language: str
    distribution: dict
    raw_counts: dict = field(default_factory=dict)

    @classmethod
    def from_terms(cls, terms, language):
        counts = Counter(terms)
        total = sum(counts.values())
        if total == 0:
            return cls(language=language, distribution={}, raw_counts={})
        dist = {t: c / total for t, c in counts.items()}
        return cls(language=language, distribution=dist, raw_counts=dict(counts))


def _prepare_pairs(pairs, config):
    usable = []
    for src, tgt in pairs:
        src = list(src)[:PAIR_TOKEN_CAP]
        tgt = list(tgt)[:PAIR_TOKEN_CAP]
        if len(src) < config.min_pair_tokens or len(tgt) < config.min_pair_tokens:
            continue
        if not src or not tgt:
            continue
        if config.use_null_token:
            src = src + [NULL_TOKEN]
        usable.append((src, tgt))
    return usable


def train(pairs, direction, config=None):
    """Fit the lexical table by expectation maximization.

    Initialization is uniform over co-occurring term pairs; each
    iteration accumulates posterior counts c(t,s) = P(t|s) / sum over
    the pair's source tokens of P(t|s'), then renormalizes per source
    term. The per-iteration training log-likelihood is recorded and is
    non-decreasing.
    """
    config = config or TrainConfig()
    usable = _prepare_pairs(pairs, config)
    if not usable:
        raise TrainingError("no usable sentence pairs after preparation")

    cooc = defaultdict(set)
    target_vocab = set()
    token_totals = Counter()
    total_tokens = 0
    for src, tgt in usable:
        for s in src:
            cooc[s].update(tgt)
            token_totals[s] += 1
            total_tokens += 1
        target_vocab.update(tgt)
    # marginals are plain relative frequencies over source tokens
    marginal = {s: c / total_tokens for s, c in token_totals.items()}

    table = {}
    for s, targets in cooc.items():
        p0 = 1.0 / len(targets)
        table[s] = {t: p0 for t in targets}

    trace = []
    counts = {}
    for _ in range(config.iterations):
        counts = {s: defaultdict(float) for s in table}
        ll = 0.0
        for src, tgt in usable:
            length_norm = math.log(len(src))
            for t in tgt:
                denom = 0.0
                for s in src:
                    denom += table[s].get(t, 0.0)
                ll += math.log(denom) - length_norm
                for s in src:
                    p = table[s].get(t, 0.0)
                    if p > 0.0:
                        counts[s][t] += p / denom
        trace.append(ll)
        for s, row in counts.items():
            total = sum(row.values())
            if total > 0.0:
                table[s] = {t: c / total for t, c in row.items()}
        if (config.convergence_delta is not None and len(trace) >= 2
                and abs(trace[-1] - trace[-2]) < config.convergence_delta):
            break

    model = TranslationModel(
        direction=tuple(direction),
        table=table,
        source_marginal=marginal,
        source_vocab_size=len(table),
        target_vocab_size=len(target_vocab),
        expected_counts={(s, t): c for s, row in counts.items()
                         for t, c in row.items()},
        log_likelihood_trace=trace,
    )
    return model


class LogLikelihood(NamedTuple):
    value: float
    zero_probability_tokens: int


LIKELIHOOD_FLOOR = 1e-12


def log_likelihood(model, pairs, config=None):
    """Training-set log-likelihood of a model over sentence pairs.

    Each target token contributes log of its length-normalized total
    translation probability; tokens the model cannot generate at all
    fall back to a fixed floor and are counted separately.
    """
    config = config or TrainConfig()
    usable = _prepare_pairs(pairs, config)
    total = 0.0
    zero_tokens = 0
    for src, tgt in usable:
        length_norm = math.log(len(src))
        for t in tgt:
            p = sum(model.table.get(s, {}).get(t, 0.0) for s in src)
            if p <= 0.0:
                zero_tokens += 1
                total += math.log(LIKELIHOOD_FLOOR)
            else:
                total += math.log(p) - length_norm
    return LogLikelihood(total, zero_tokens)


def _renormalized(row):
    total = sum(row.values())
    return {t: p / total for t, p in row.items()} if total > 0 else {}


def _rebuilt(model, table, counts=None, unit_weights=False):
    return TranslationModel(
        direction=model.direction,
        table=table,
        source_marginal=dict(model.source_marginal),
        source_vocab_size=len(table),
        target_vocab_size=len({t for row in table.values() for t in row}),
        expected_counts=counts if counts is not None else {
            (s, t): c for (s, t), c in model.expected_counts.items()
            if s in table and t in table[s]},
        unit_weights=unit_weights,
        log_likelihood_trace=list(model.log_likelihood_trace),
    )


def prune_threshold(model, theta):
    """Drop entries with probability below ``theta`` and renormalize.

    Rows that lose nothing are kept bit-identical, so theta = 0 leaves
    the model unchanged. Source terms losing every entry drop out of
    the vocabulary.
    """
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must be in [0, 1)")
    table = {}
    for s, row in model.table.items():
        kept = {t: p for t, p in row.items() if p >= theta}
        if not kept:
            continue
        table[s] = dict(row) if len(kept) == len(row) else _renormalized(kept)
    return _rebuilt(model, table)


def prune_topn(model, n, expected_counts=None):
    """Keep the N entries with the largest final expected counts.

    The expected count is the evidence mass the last E-step assigned to
    the pair; it stands in for the contribution of the entry to the
    likelihood of the training set. Ties break on (count, source,
    target) so the result is reproducible.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    counts = expected_counts if expected_counts is not None else model.expected_counts
    scored = []
    for s, row in model.table.items():
        for t in row:
            scored.append((-counts.get((s, t), 0.0), s, t))
    scored.sort()
    keep = {(s, t) for _, s, t in scored[:n]}
    table = {}
    for s, row in model.table.items():
        kept = {t: p for t, p in row.items() if (s, t) in keep}
        if not kept:
            continue
        table[s] = dict(row) if len(kept) == len(row) else _renormalized(kept)
    return _rebuilt(model, table)


def prune_noise(model, marginal_floor=1e-6, digit_rule=True):
    """Noise pruning: drop entries whose source or target term contains
    a digit, and whole rows whose source marginal falls below the
    floor; renormalize what survives."""
    if not 0.0 <= marginal_floor <= 1.0:
        raise ValueError("marginal_floor must be in [0, 1]")
    table = {}
    for s, row in model.table.items():
        if model.source_marginal.get(s, 0.0) < marginal_floor:
            continue
        if digit_rule and any(ch.isdigit() for ch in s):
            continue
        if digit_rule:
            kept = {t: p for t, p in row.items()
                    if not any(ch.isdigit() for ch in t)}
        else:
            kept = dict(row)
        if not kept:
            continue
        table[s] = dict(row) if len(kept) == len(row) else _renormalized(kept)
    return _rebuilt(model, table)


def project_query(query, model, oov_policy="passthrough"):
    """Map a query distribution through the translation table.

    Each target term receives the translation-weighted sum of the
    source masses. Source terms without translations either keep their
    own surface form with full mass (``passthrough``) or are dropped
    with renormalization (``drop``).
    """
    if oov_policy not in ("passthrough", "drop"):
        raise ValueError(f"unknown oov policy: {oov_policy}")
    projected = defaultdict(float)
    for s, mass in query.distribution.items():
        row = model.table.get(s)
        if row:
            for t, p in row.items():
                projected[t] += p * mass
        elif oov_policy == "passthrough":
            projected[s] += mass
    dist = dict(projected)
    if oov_policy == "drop":
        total = sum(dist.values())
        if total > 0.0:
            dist = {t: p / total for t, p in dist.items()}
    return QueryModel(language=model.direction[1], distribution=dist)


VARIANTS = ("BM", "EQ", "SYN")


def derive_variant(model, variant):
    """Reweight a table into one of the degenerate variants.

    BM keeps only the most probable translation per source term at
    probability one; EQ spreads the mass uniformly over a term's
    translations; SYN pins every retained translation at weight one
    without normalizing, modelling translations as an equivalence
    class.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant: {variant}")
    table = {}
    for s, row in model.table.items():
        if not row:
            continue
        if variant == "BM":
            best = min(row.items(), key=lambda tp: (-tp[1], tp[0]))[0]
            table[s] = {best: 1.0}
        elif variant == "EQ":
            share = 1.0 / len(row)
            table[s] = {t: share for t in row}
        else:
            table[s] = {t: 1.0 for t in row}
    return _rebuilt(model, table, counts={}, unit_weights=(variant == "SYN"))


def naive_bag(query_counts, model, oov_policy="passthrough"):
    """Unweighted replacement bag: every translation of every query
    occurrence contributes one count (the dictionary-lookup behaviour,
    kept for contrast with the weighted projections)."""
    bag = Counter()
    for s, count in query_counts.items():
        row = model.table.get(s)
        if row:
            for t in row:
                bag[t] += count
        elif oov_policy == "passthrough":
            bag[s] += count
    return dict(bag)


# ---------------------------------------------------------------------------
# serialization


def save_model(model, path, header_lines=()):
    """TSV rows ``source target probability`` behind # header lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#source_lang={model.direction[0]}\n")
        fh.write(f"#target_lang={model.direction[1]}\n")
        fh.write(f"#entries={model.entry_count()}\n")
        if model.unit_weights:
            fh.write("#unit_weights=1\n")
        for line in header_lines:
            fh.write(f"#{line}\n")
        for s, t, p in model.entries():
            fh.write(f"{s}\t{t}\t{p:.6g}\n")


def save_marginals(model, path, header_lines=()):
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"#{line}\n")
        for s in sorted(model.source_marginal):
            fh.write(f"{s}\t{model.source_marginal[s]:.6g}\n")


def save_expected_counts(model, path, header_lines=()):
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"#{line}\n")
        for (s, t) in sorted(model.expected_counts):
            fh.write(f"{s}\t{t}\t{model.expected_counts[(s, t)]!r}\n")


def load_model(path, marginals_path=None, counts_path=None):
    direction = ["", ""]
    table = defaultdict(dict)
    unit_weights = False
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#source_lang="):
                direction[0] = line.split("=", 1)[1]
            elif line.startswith("#target_lang="):
                direction[1] = line.split("=", 1)[1]
            elif line.startswith("#unit_weights="):
                unit_weights = line.split("=", 1)[1] == "1"
            elif line.startswith("#") or not line:
                continue
            else:
                s, t, p = line.split("\t")
                table[s][t] = float(p)
    marginal = {}
    if marginals_path:
        with open(marginals_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#") or not line:
                    continue
                s, freq = line.split("\t")
                marginal[s] = float(freq)
    counts = {}
    if counts_path:
        with open(counts_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#") or not line:
                    continue
                s, t, c = line.split("\t")
                counts[(s, t)] = float(c)
    return TranslationModel(
        direction=tuple(direction),
        table=dict(table),
        source_marginal=marginal,
        source_vocab_size=len(table),
        target_vocab_size=len({t for row in table.values() for t in row}),
        expected_counts=counts,
        unit_weights=unit_weights,
    )
