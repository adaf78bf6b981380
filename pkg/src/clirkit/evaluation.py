"""Run scoring and significance analysis.

Average precision is the uninterpolated kind: each relevant document
retrieved within the cutoff contributes precision at its rank, divided
by the total number of relevant documents; the mean over topics gives
MAP. Runs are compared with the Friedman rank test in its
F-distributed form, followed by rank-sum least-significant-difference
grouping into equivalence classes (letters), plus an exact two-sided
sign test for pairs of runs.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from scipy import stats as _st


@dataclass
class Qrels:
    """Binary relevance judgments keyed by (topic, document id)."""
    judgments: dict = field(default_factory=dict)

    def add(self, topic, doc_id, relevance):
        self.judgments[(topic, doc_id)] = 1 if int(relevance) > 0 else 0

    def relevant_docs(self, topic):
        return {doc for (t, doc), rel in self.judgments.items()
                if t == topic and rel}

    def topics_with_relevant(self):
        topics = set()
        for (topic, _doc), rel in self.judgments.items():
            if rel:
                topics.add(topic)
        return sorted(topics)

    def judged_topics(self):
        return sorted({topic for (topic, _doc) in self.judgments})


def read_qrels(path):
    """Four-column judgments: ``topic 0 docid rel``; unjudged documents
    count as non-relevant."""
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            topic, _iter, doc, rel = line.split()
            qrels.add(topic, doc, rel)
    return qrels


def average_precision(ranked, relevant, cutoff=1000):
    """Uninterpolated AP of one ranking against a relevant set.

    Relevant documents not retrieved within the cutoff contribute zero
    precision; the divisor is always the full relevant count.
    """
    if not relevant:
        raise ValueError("average precision is undefined without relevant documents")
    hits = 0
    precision_sum = 0.0
    for rank, doc in enumerate(ranked[:cutoff], 1):
        if doc in relevant:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / len(relevant)


def per_topic_ap(run, qrels, cutoff=1000, skip_unjudged=False):
    """AP per topic over the topics that have relevant documents.

    Topics the run never answered score zero. Run topics absent from
    the qrels raise unless ``skip_unjudged`` is set.
    """
    usable = qrels.topics_with_relevant()
    unjudged = sorted(set(run.topics) - set(qrels.judged_topics()))
    if unjudged and not skip_unjudged:
        raise ValueError(f"run topics without judgments: {unjudged}")
    aps = {}
    for topic in usable:
        aps[topic] = average_precision(
            run.doc_ids(topic), qrels.relevant_docs(topic), cutoff)
    return aps


def mean_ap(run, qrels, cutoff=1000, skip_unjudged=False):
    """MAP: the arithmetic mean of AP over topics with relevant docs."""
    aps = per_topic_ap(run, qrels, cutoff, skip_unjudged)
    if not aps:
        raise ValueError("no topics with relevant documents to average over")
    return sum(aps.values()) / len(aps)


class FriedmanResult(NamedTuple):
    statistic: float      # F-distributed form
    p_value: float
    chi_square: float     # tie-adjusted rank statistic
    df_between: int
    df_within: int


def _rank_rows(matrix):
    """Within-row ranks, average rank on ties, higher value gets the
    higher rank."""
    ranked = []
    for row in matrix:
        order = sorted(range(len(row)), key=lambda i: row[i])
        ranks = [0.0] * len(row)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and row[order[j + 1]] == row[order[i]]:
                j += 1
            avg = (i + j) / 2.0 + 1.0
            for k in range(i, j + 1):
                ranks[order[k]] = avg
            i = j + 1
        ranked.append(ranks)
    return ranked


def friedman(ap_matrix):
    """Friedman rank test over a topics x runs matrix of AP values.

    The tie-adjusted rank statistic is converted to its F-distributed
    form with (k-1, (k-1)(n-1)) degrees of freedom, which is how the
    significance is judged; the raw chi-square-like statistic is
    returned alongside.
    """
    n = len(ap_matrix)
    if n < 2:
        raise ValueError("need at least two topics")
    k = len(ap_matrix[0])
    if k < 2 or any(len(row) != k for row in ap_matrix):
        raise ValueError("need a rectangular matrix with at least two runs")
    ranks = _rank_rows(ap_matrix)
    rank_sums = [sum(row[j] for row in ranks) for j in range(k)]
    a2 = sum(r * r for row in ranks for r in row)
    c2 = n * k * (k + 1) ** 2 / 4.0
    mean_sum = n * (k + 1) / 2.0
    ss_treat = sum((rs - mean_sum) ** 2 for rs in rank_sums)
    if a2 - c2 <= 0.0:  # every topic ranked every run identically
        return FriedmanResult(0.0, 1.0, 0.0, k - 1, (k - 1) * (n - 1))
    t1 = (k - 1) * ss_treat / (a2 - c2)
    df1 = k - 1
    df2 = (k - 1) * (n - 1)
    denom = n * (k - 1) - t1
    if denom <= 0.0:
        return FriedmanResult(float("inf"), 0.0, t1, df1, df2)
    t2 = (n - 1) * t1 / denom
    p = float(_st.f.sf(t2, df1, df2))
    return FriedmanResult(t2, p, t1, df1, df2)


class LsdResult(NamedTuple):
    classes: dict             # run index -> letter string, e.g. "a,b"
    critical_difference: float
    rank_sums: list
    gated: bool               # True when the global test failed


def fisher_lsd(ap_matrix, alpha=0.05, friedman_result=None):
    """Least-significant-difference grouping after the Friedman test.

    Rank sums within ``critical difference`` of each other share a
    letter; letters are assigned in decreasing order of performance. If
    the global test is not significant at ``alpha``, every run lands in
    a single class (the overall alpha protection).
    """
    result = friedman_result or friedman(ap_matrix)
    n = len(ap_matrix)
    k = len(ap_matrix[0])
    ranks = _rank_rows(ap_matrix)
    rank_sums = [sum(row[j] for row in ranks) for j in range(k)]
    if result.p_value > alpha:
        return LsdResult({j: "a" for j in range(k)}, float("inf"),
                         rank_sums, gated=True)
    a2 = sum(r * r for row in ranks for r in row)
    c2 = n * k * (k + 1) ** 2 / 4.0
    df = (n - 1) * (k - 1)
    t_crit = float(_st.t.ppf(1.0 - alpha / 2.0, df))
    spread = (a2 - c2) * 2.0 * n / df * (1.0 - result.chi_square / (n * (k - 1)))
    critical = t_crit * math.sqrt(max(spread, 0.0))
    # order runs best first (largest rank sum = highest AP ranks)
    order = sorted(range(k), key=lambda j: (-rank_sums[j], j))
    letters = [[] for _ in range(k)]
    letter_idx = 0
    prev_reach = -1
    for start in range(k):
        reach = start
        while (reach + 1 < k and
               rank_sums[order[start]] - rank_sums[order[reach + 1]] <= critical):
            reach += 1
        if reach > prev_reach or start == 0:
            label = _letter(letter_idx)
            letter_idx += 1
            for pos in range(start, reach + 1):
                letters[order[pos]].append(label)
            prev_reach = reach
    classes = {j: ",".join(letters[j]) for j in range(k)}
    return LsdResult(classes, critical, rank_sums, gated=False)


def _letter(i):
    out = ""
    i += 1
    while i:
        i, rem = divmod(i - 1, 26)
        out = chr(ord("a") + rem) + out
    return out


def sign_test(ap_a, ap_b):
    """Exact two-sided sign test on paired per-topic scores; ties drop."""
    if len(ap_a) != len(ap_b):
        raise ValueError("paired samples must have equal length")
    wins = sum(1 for a, b in zip(ap_a, ap_b) if a > b)
    losses = sum(1 for a, b in zip(ap_a, ap_b) if a < b)
    m = wins + losses
    if m == 0:
        return 1.0
    tail = min(wins, losses)
    cumulative = sum(math.comb(m, i) for i in range(tail + 1)) / 2.0 ** m
    return min(1.0, 2.0 * cumulative)


def translation_stats(queries, model):
    """Coverage statistics over the unique query terms of a topic set.

    Returns (percent of terms with no translation entry, mean number of
    entries per unique term with missed terms counted as zero).
    """
    unique = set()
    for query in queries:
        unique.update(query.raw_counts or query.distribution)
    if not unique:
        return 0.0, 0.0
    missed = 0
    total_entries = 0
    for term in unique:
        entries = len(model.table.get(term, ()))
        if entries == 0:
            missed += 1
        total_entries += entries
    percent_missed = 100.0 * missed / len(unique)
    avg_translations = total_entries / len(unique)
    return percent_missed, avg_translations


@dataclass
class EvalReport:
    run_tags: list
    maps: dict
    per_topic: dict                 # run tag -> {topic: AP}
    friedman_result: FriedmanResult = None
    lsd: LsdResult = None
    sign_tests: dict = field(default_factory=dict)
    translation: dict = field(default_factory=dict)
    header_lines: tuple = ()

    def lines(self):
        out = [f"#{line}" for line in self.header_lines]
        out.append("# avg_translations counts missed terms as zero entries")
        out.append("# lsd_formula=rank-sum LSD after Friedman (Conover)")
        out.append(f"runs={','.join(self.run_tags)}")
        topics = sorted(next(iter(self.per_topic.values()), {}))
        out.append(f"topics={len(topics)}")
        for tag in self.run_tags:
            out.append(f"map.{tag}={self.maps[tag]:.6f}")
        for tag in self.run_tags:
            for topic in topics:
                out.append(f"ap.{tag}.{topic}={self.per_topic[tag][topic]:.6f}")
        for tag, (missed, avg) in sorted(self.translation.items()):
            out.append(f"missed_pct.{tag}={missed:.2f}")
            out.append(f"avg_translations.{tag}={avg:.2f}")
        if self.friedman_result is not None:
            fr = self.friedman_result
            out.append(f"friedman.statistic={fr.statistic:.6f}")
            out.append(f"friedman.p_value={fr.p_value:.6f}")
            out.append(f"friedman.chi_square={fr.chi_square:.6f}")
            out.append(f"friedman.df={fr.df_between},{fr.df_within}")
        if self.lsd is not None:
            out.append(f"lsd.critical_difference={self.lsd.critical_difference:.6f}")
            out.append("significance:")
            ordered = sorted(range(len(self.run_tags)),
                             key=lambda j: -self.maps[self.run_tags[j]])
            width = max(len(self.lsd.classes[j]) for j in self.lsd.classes)
            for j in ordered:
                tag = self.run_tags[j]
                letters = self.lsd.classes[j]
                out.append(f"  {letters:<{width}}: {self.maps[tag]:.4f}  {tag}")
        return out


def evaluate_runs(runs, qrels, cutoff=1000, alpha=0.05, significance=True,
                  skip_unjudged=False, header_lines=()):
    """Full report over one or more runs against a qrels set."""
    run_tags = []
    maps = {}
    per_topic = {}
    for run in runs:
        tag = run.tag
        if tag in per_topic:
            raise ValueError(f"duplicate run tag: {tag}")
        aps = per_topic_ap(run, qrels, cutoff, skip_unjudged)
        run_tags.append(tag)
        per_topic[tag] = aps
        maps[tag] = sum(aps.values()) / len(aps) if aps else 0.0
    report = EvalReport(run_tags=run_tags, maps=maps, per_topic=per_topic,
                        header_lines=tuple(header_lines))
    topics = sorted(next(iter(per_topic.values()), {}))
    if significance and len(runs) >= 2 and len(topics) >= 2:
        matrix = [[per_topic[tag][topic] for tag in run_tags]
                  for topic in topics]
        report.friedman_result = friedman(matrix)
        report.lsd = fisher_lsd(matrix, alpha, report.friedman_result)
        for i, tag_a in enumerate(run_tags):
            for tag_b in run_tags[i + 1:]:
                p = sign_test([per_topic[tag_a][t] for t in topics],
                              [per_topic[tag_b][t] for t in topics])
                report.sign_tests[(tag_a, tag_b)] = p
    return report


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        for line in report.lines():
            fh.write(line + "\n")
        for (a, b), p in sorted(report.sign_tests.items()):
            fh.write(f"sign_test.{a}.{b}={p:.6f}\n")
