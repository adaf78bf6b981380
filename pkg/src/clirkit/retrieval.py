"""Unigram language-model retrieval with embedded translation.

Documents are ranked by the normalized log-likelihood ratio: how much
better a linearly smoothed document model explains the query
distribution than the collection background does. Translation enters
either by projecting the query distribution into the document language
(QT family) or by translating the document model into the query
language inside the score (DT / SYN), plus the unweighted replacement
baseline (NAIVE) and score-level interpolation of two runs.
"""

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .tm import QueryModel, project_query, derive_variant, naive_bag


@dataclass
class RetrievalParams:
    smoothing_lambda: float = 0.7  # weight of the collection model
    top_k: int = 1000
    log_base: float = math.e

    def __post_init__(self):
        if not 0.0 < self.smoothing_lambda < 1.0:
            raise ValueError("lambda must be strictly between 0 and 1")

    @property
    def log_scale(self):
        return 1.0 if self.log_base == math.e else math.log(self.log_base)


@dataclass
class Index:
    """Per-document term counts plus the collection background model."""
    doc_ids: list
    doc_counts: dict    # doc id -> {term: count}
    doc_lengths: dict   # doc id -> token count
    collection_counts: dict
    total_tokens: int
    language: str = ""

    def background(self, term):
        count = self.collection_counts.get(term, 0)
        return count / self.total_tokens if count else 0.0

    def doc_prob(self, doc_id, term):
        length = self.doc_lengths[doc_id]
        if length == 0:
            return 0.0
        return self.doc_counts[doc_id].get(term, 0) / length

    @property
    def vocabulary(self):
        return set(self.collection_counts)


def build_index(documents):
    """Index ``(doc_id, TermSequence)`` records; the same collection
    doubles as the background corpus."""
    doc_ids = []
    doc_counts = {}
    doc_lengths = {}
    collection = Counter()
    language = ""
    for doc_id, seq in documents:
        if doc_id in doc_counts:
            raise ValueError(f"duplicate document id: {doc_id}")
        terms = seq.terms if hasattr(seq, "terms") else list(seq)
        if not language and getattr(seq, "language", ""):
            language = seq.language
        counts = Counter(terms)
        doc_ids.append(doc_id)
        doc_counts[doc_id] = dict(counts)
        doc_lengths[doc_id] = sum(counts.values())
        collection.update(counts)
    if not doc_ids:
        raise ValueError("cannot index an empty document list")
    total = sum(collection.values())
    if total == 0:
        raise ValueError("cannot index a collection with no terms")
    return Index(
        doc_ids=sorted(doc_ids),
        doc_counts=doc_counts,
        doc_lengths=doc_lengths,
        collection_counts=dict(collection),
        total_tokens=total,
        language=language,
    )


@dataclass
class RankedRun:
    """Per-topic ranked document lists under one run tag."""
    tag: str
    topics: dict = field(default_factory=dict)  # topic -> [(doc id, score)]
    diagnostics: dict = field(default_factory=dict)

    def set_topic(self, topic, ranking, note=None):
        self.topics[topic] = ranking
        if note:
            self.diagnostics.setdefault(topic, []).append(note)

    def ranking(self, topic):
        return self.topics.get(topic, [])

    def doc_ids(self, topic):
        return [doc for doc, _ in self.topics.get(topic, [])]


def _finish_ranking(scores, params):
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[: params.top_k]


def _mono_scores(distribution, index, params):
    lam = params.smoothing_lambda
    scale = params.log_scale
    scores = {doc: 0.0 for doc in index.doc_ids}
    skipped = 0
    for term, mass in distribution.items():
        p_c = index.background(term)
        if p_c <= 0.0:
            skipped += 1
            continue
        absent = mass * math.log(lam) / scale
        for doc in index.doc_ids:
            p_d = index.doc_prob(doc, term)
            if p_d > 0.0:
                ratio = ((1.0 - lam) * p_d + lam * p_c) / p_c
                scores[doc] += mass * math.log(ratio) / scale
            else:
                scores[doc] += absent
    return scores, skipped


def score_mono(query, index, params=None, topic="0", tag="MONO", run=None):
    """Rank every document for one query distribution (the monolingual
    model); query terms unseen in the whole collection are skipped."""
    params = params or RetrievalParams()
    run = run if run is not None else RankedRun(tag=tag)
    if not query.distribution:
        run.set_topic(topic, [], note="empty query after normalization")
        return run
    scores, skipped = _mono_scores(query.distribution, index, params)
    note = f"{skipped} query terms missing from the collection" if skipped else None
    run.set_topic(topic, _finish_ranking(scores, params), note=note)
    return run


def score_qt(query, tm_forward, index, params=None, topic="0", tag="QT",
             run=None, oov_policy="passthrough"):
    """Project the query model into the document language, then score
    monolingually."""
    if query.language and tm_forward.direction[0] and \
            query.language != tm_forward.direction[0]:
        raise ValueError(
            f"query language {query.language!r} does not match model "
            f"source {tm_forward.direction[0]!r}")
    projected = project_query(query, tm_forward, oov_policy=oov_policy)
    run = run if run is not None else RankedRun(tag=tag)
    return score_mono(projected, index, params, topic=topic, tag=tag, run=run)


def _reverse_view(model):
    """Query-term view t->s tables as s -> [(t, P(s|t))]."""
    view = defaultdict(list)
    for t, row in model.table.items():
        for s, p in row.items():
            view[s].append((t, p))
    return dict(view)


def _score_translated_documents(query, source_to_targets, index, params,
                                topic, tag, run):
    """Shared scorer for DT and SYN: the document model is carried into
    the query language through reverse translation weights."""
    params = params or RetrievalParams()
    run = run if run is not None else RankedRun(tag=tag)
    if not query.distribution:
        run.set_topic(topic, [], note="empty query after normalization")
        return run
    lam = params.smoothing_lambda
    scale = params.log_scale
    scores = {doc: 0.0 for doc in index.doc_ids}
    skipped = 0
    for s, mass in query.distribution.items():
        weighted = source_to_targets.get(s, ())
        background = sum(w * index.background(t) for t, w in weighted)
        if background <= 0.0:
            skipped += 1
            continue
        for doc in index.doc_ids:
            smoothed = 0.0
            for t, w in weighted:
                p_c = index.background(t)
                if p_c <= 0.0:
                    continue
                smoothed += w * ((1.0 - lam) * index.doc_prob(doc, t) + lam * p_c)
            scores[doc] += mass * math.log(smoothed / background) / scale
    note = (f"{skipped} query terms with no translated collection mass"
            if skipped else None)
    run.set_topic(topic, _finish_ranking(scores, params), note=note)
    return run


def score_dt(query, tm_reverse, index, params=None, topic="0", tag="DT", run=None):
    """Document-translation scoring via a reverse table P(source|target).

    ``tm_reverse`` maps document-language terms to query-language terms;
    its direction is (document language, query language).
    """
    if query.language and tm_reverse.direction[1] and \
            query.language != tm_reverse.direction[1]:
        raise ValueError(
            f"query language {query.language!r} does not match reverse model "
            f"target {tm_reverse.direction[1]!r}")
    return _score_translated_documents(
        query, _reverse_view(tm_reverse), index, params, topic, tag, run)


def score_syn(query, tm_forward, index, params=None, topic="0", tag="SYN", run=None):
    """Equivalence-class scoring: a term's forward translations form a
    class with unit weights, plugged in as pseudo reverse
    probabilities."""
    syn = derive_variant(tm_forward, "SYN")
    view = {s: sorted(row.items()) for s, row in syn.table.items()}
    return _score_translated_documents(
        query, view, index, params, topic, tag, run)


def score_naive(query_counts, tm_forward, index, params=None, topic="0",
                tag="NAIVE", run=None, language=""):
    """Unweighted replacement run: every translation of every query
    occurrence gets one count, so ambiguous terms grab extra mass."""
    bag = naive_bag(query_counts, tm_forward)
    total = sum(bag.values())
    dist = {t: c / total for t, c in bag.items()} if total else {}
    naive_query = QueryModel(language=language or tm_forward.direction[1],
                             distribution=dist, raw_counts=bag)
    run = run if run is not None else RankedRun(tag=tag)
    return score_mono(naive_query, index, params, topic=topic, tag=tag, run=run)


MISSING_DOC_EPSILON = 1e-6


def combine(run_a, run_b, alpha, params=None, tag=None):
    """Interpolate two runs' document scores topic by topic.

    Documents missing from one run take that run's per-topic minimum
    minus a small epsilon. At the exact endpoints only the surviving
    run's documents are kept.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    params = params or RetrievalParams()
    missing_a = sorted(set(run_b.topics) - set(run_a.topics))
    missing_b = sorted(set(run_a.topics) - set(run_b.topics))
    if missing_a or missing_b:
        raise ValueError(
            f"topic sets differ: missing from {run_a.tag}: {missing_a}; "
            f"missing from {run_b.tag}: {missing_b}")
    combined = RankedRun(tag=tag or f"{run_a.tag}+{run_b.tag}")
    for topic in sorted(run_a.topics):
        scores_a = dict(run_a.topics[topic])
        scores_b = dict(run_b.topics[topic])
        if alpha == 1.0:
            docs = set(scores_a)
        elif alpha == 0.0:
            docs = set(scores_b)
        else:
            docs = set(scores_a) | set(scores_b)
        if not docs:
            combined.set_topic(topic, [])
            continue
        floor_a = min(scores_a.values()) - MISSING_DOC_EPSILON if scores_a else 0.0
        floor_b = min(scores_b.values()) - MISSING_DOC_EPSILON if scores_b else 0.0
        merged = {}
        for doc in docs:
            sa = scores_a.get(doc, floor_a)
            sb = scores_b.get(doc, floor_b)
            merged[doc] = alpha * sa + (1.0 - alpha) * sb
        combined.set_topic(topic, _finish_ranking(merged, params))
    return combined


# ---------------------------------------------------------------------------
# topic files and run files


_TOPIC_FIELDS = ("num", "title", "description", "narrative")
_TOPIC_LINE = re.compile(r"^<(num|title|description|narrative)>\s*(.*)$")


@dataclass
class Topic:
    number: str
    title: str = ""
    description: str = ""
    narrative: str = ""

    def query_text(self):
        """Queries are the concatenated title and description."""
        return f"{self.title} {self.description}".strip()


def parse_topics(text):
    """Parse line-tagged topics; untagged lines continue the previous
    field, a new <num> starts the next topic."""
    topics = []
    current = None
    current_field = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        m = _TOPIC_LINE.match(line)
        if m:
            tag, value = m.group(1), m.group(2).strip()
            if tag == "num":
                current = Topic(number=value)
                topics.append(current)
                current_field = None
            elif current is not None:
                setattr(current, tag, value)
                current_field = tag
        elif current is not None and current_field:
            existing = getattr(current, current_field)
            setattr(current, current_field,
                    (existing + " " + line).strip())
    return topics


def read_topics(path):
    with open(path, encoding="utf-8") as fh:
        return parse_topics(fh.read())


def write_run(run, path, header_lines=()):
    """TREC format: ``topic Q0 docid rank score tag``."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"#{line}\n")
        for topic in sorted(run.topics):
            for rank, (doc, score) in enumerate(run.topics[topic], 1):
                fh.write(f"{topic} Q0 {doc} {rank} {score:.6f} {run.tag}\n")


def read_run(path):
    run = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            topic, _q0, doc, _rank, score, tag = line.split()
            if run is None:
                run = RankedRun(tag=tag)
            run.topics.setdefault(topic, []).append((doc, float(score)))
    return run if run is not None else RankedRun(tag="empty")


# ---------------------------------------------------------------------------
# index serialization


def save_index(index, path, header_lines=()):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#language={index.language}\n")
        for line in header_lines:
            fh.write(f"#{line}\n")
        for doc in index.doc_ids:
            counts = index.doc_counts[doc]
            for term in sorted(counts):
                fh.write(f"{doc}\t{term}\t{counts[term]}\n")


def load_index(path):
    language = ""
    doc_counts = defaultdict(dict)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#language="):
                language = line.split("=", 1)[1]
            elif line.startswith("#") or not line:
                continue
            else:
                doc, term, count = line.split("\t")
                doc_counts[doc][term] = int(count)
    collection = Counter()
    doc_lengths = {}
    for doc, counts in doc_counts.items():
        doc_lengths[doc] = sum(counts.values())
        collection.update(counts)
    if not doc_counts:
        raise ValueError(f"index file {path} holds no documents")
    return Index(
        doc_ids=sorted(doc_counts),
        doc_counts=dict(doc_counts),
        doc_lengths=doc_lengths,
        collection_counts=dict(collection),
        total_tokens=sum(collection.values()),
        language=language,
    )
