"""Parallel-page detection inside locally mirrored web-site trees.

A mirrored site stands in for live crawling: candidate pairs are found
by filename/path pattern matching, then verified by text-length ratio,
HTML tag-sequence similarity and character n-gram language
identification.
"""

import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import NamedTuple

from .textprep import extract_text

# tags whose sequence characterizes the page layout
MEANINGFUL_TAGS = {"p", "h1", "h2", "h3", "h4", "h5", "h6", "li", "table",
                   "tr", "td", "ul", "ol", "title"}

MIN_CONFIDENT_CHARS = 50  # below this, language guesses are flagged


@dataclass
class NamingRules:
    """Affix and path-segment substitutions that map source-language
    file names onto their target-language counterparts."""
    source_prefixes: list = field(default_factory=list)
    target_prefixes: list = field(default_factory=list)
    source_suffixes: list = field(default_factory=list)
    target_suffixes: list = field(default_factory=list)
    path_segment_pairs: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.source_prefixes) != len(self.target_prefixes):
            raise ValueError("prefix lists must be parallel")
        if len(self.source_suffixes) != len(self.target_suffixes):
            raise ValueError("suffix lists must be parallel")


DEFAULT_EN_FR_RULES = NamingRules(
    source_prefixes=["", "e", "en", "english", "e-", "en-", "english-", "e_", "en_"],
    target_prefixes=["f", "f", "fr", "french", "f-", "fr-", "french-", "f_", "fr_"],
    source_suffixes=["", "_e", "_en", "-e", "-en", ".e", ".en", "_english", "-english"],
    target_suffixes=["_f", "_f", "_fr", "-f", "-fr", ".f", ".fr", "_french", "-french"],
    path_segment_pairs=[("en", "fr"), ("english", "french"), ("e", "f"), ("eng", "fra")],
)


@dataclass
class PageProfile:
    """Everything the content filters need to know about one page."""
    path: str
    byte_length: int
    text_length: int
    tag_sequence: list
    detected_language: str = ""
    language_confidence: float = 0.0
    text: str = ""
    anchor_texts: list = field(default_factory=list)


@dataclass
class PairCandidate:
    source_profile: PageProfile
    target_profile: PageProfile
    length_ratio: float = 0.0
    structure_distance: float = 0.0
    verdict: str = "pending"
    reason: str = ""

    def reject(self, reason):
        self.verdict = "rejected"
        self.reason = reason
        return self

    def accept(self):
        self.verdict = "accepted"
        self.reason = ""
        return self

    @property
    def accepted(self):
        return self.verdict == "accepted"


class _TagCollector(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.tags = []
        self.anchor_texts = []
        self._anchor_depth = 0
        self._anchor_buf = []

    def handle_starttag(self, tag, attrs):
        if tag in MEANINGFUL_TAGS:
            self.tags.append(tag)
        if tag == "a":
            self._anchor_depth += 1

    def handle_endtag(self, tag):
        if tag == "a" and self._anchor_depth:
            self._anchor_depth -= 1
            if not self._anchor_depth:
                text = " ".join("".join(self._anchor_buf).split())
                if text:
                    self.anchor_texts.append(text)
                self._anchor_buf = []

    def handle_data(self, data):
        if self._anchor_depth:
            self._anchor_buf.append(data)


def profile_page(path, page_bytes=None):
    """Build a PageProfile from a file (or raw bytes for testing)."""
    if page_bytes is None:
        with open(path, "rb") as fh:
            page_bytes = fh.read()
    paragraphs = extract_text(page_bytes)
    text = "\n".join(paragraphs)
    collector = _TagCollector()
    try:
        raw = page_bytes.decode("utf-8", errors="replace") \
            if isinstance(page_bytes, bytes) else page_bytes
        collector.feed(raw)
        collector.close()
    except Exception:
        pass
    return PageProfile(
        path=str(path),
        byte_length=len(page_bytes),
        text_length=len(text),
        tag_sequence=collector.tags,
        text=text,
        anchor_texts=collector.anchor_texts,
    )


# ---------------------------------------------------------------------------
# character n-gram language identification


class LanguageGuess(NamedTuple):
    language: str
    confidence: float
    low_confidence: bool


@dataclass
class LanguageIdModel:
    """Additively smoothed character n-gram model for one language.

    ``ngram_table`` holds P(last char | preceding chars) for every
    n-gram seen in training; unseen events fall back to the leftover
    mass of their context (uniform over the unseen alphabet), and
    wholly unseen contexts to a uniform 1/|alphabet|.
    """
    language: str
    ngram_order: int = 3
    delta: float = 0.5
    ngram_table: dict = field(default_factory=dict)
    alphabet: tuple = ()
    _context_stats: dict = field(default_factory=dict, repr=False)

    @classmethod
    def train(cls, language, samples, ngram_order=3, delta=0.5):
        if not samples:
            raise ValueError("at least one sample document is required")
        counts = Counter()
        context_counts = Counter()
        chars = set()
        for sample in samples:
            text = _normalize_for_langid(sample)
            chars.update(text)
            for gram in _ngrams(text, ngram_order):
                counts[gram] += 1
                context_counts[gram[:-1]] += 1
        alphabet = tuple(sorted(chars))
        vocab = len(alphabet) + 1  # one slot reserved for unseen characters
        table = {}
        for gram, c in counts.items():
            ctx = gram[:-1]
            table[gram] = (c + delta) / (context_counts[ctx] + delta * vocab)
        model = cls(language=language, ngram_order=ngram_order, delta=delta,
                    ngram_table=table, alphabet=alphabet)
        model._rebuild_context_stats()
        return model

    def _rebuild_context_stats(self):
        stats = defaultdict(lambda: [0.0, 0])
        for gram, p in self.ngram_table.items():
            ctx = gram[:-1]
            stats[ctx][0] += p
            stats[ctx][1] += 1
        self._context_stats = dict(stats)

    def _floor(self, context):
        stats = self._context_stats.get(context)
        vocab = len(self.alphabet) + 1
        if stats is None:
            return 1.0 / vocab
        seen_mass, seen = stats
        return max((1.0 - seen_mass) / (vocab - seen), 1e-12)

    def log_likelihood(self, text):
        text = _normalize_for_langid(text)
        total = 0.0
        for gram in _ngrams(text, self.ngram_order):
            p = self.ngram_table.get(gram)
            if p is None:
                p = self._floor(gram[:-1])
            total += math.log(p)
        return total

    def context_sums(self):
        """P(.|context) totals over the full alphabet; 1.0 per context."""
        vocab = len(self.alphabet) + 1
        sums = {}
        for ctx, (seen_mass, seen) in self._context_stats.items():
            sums[ctx] = seen_mass + (vocab - seen) * self._floor(ctx)
        return sums


def _normalize_for_langid(text):
    return " ".join(text.lower().split())


def _ngrams(text, order):
    padded = " " + text + " "
    if len(padded) < order:
        return []
    return [padded[i:i + order] for i in range(len(padded) - order + 1)]


def detect_language(text, models):
    """Most likely language for a text under the given n-gram models.

    Returns a LanguageGuess with the posterior probability of the
    winning model (uniform priors); texts under 50 characters keep
    their best guess but carry the low-confidence flag.
    """
    if not models:
        raise ValueError("no language models configured")
    if not text:
        raise ValueError("cannot identify the language of empty text")
    scores = [(m.language, m.log_likelihood(text)) for m in models]
    scores.sort(key=lambda kv: (-kv[1], kv[0]))
    best_lang, best_ll = scores[0]
    shift = best_ll
    total = sum(math.exp(ll - shift) for _, ll in scores)
    confidence = 1.0 / total
    return LanguageGuess(best_lang, confidence, len(text) < MIN_CONFIDENT_CHARS)


def save_langid_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#language={model.language}\n")
        fh.write(f"#ngram_order={model.ngram_order}\n")
        fh.write(f"#delta={model.delta!r}\n")
        alphabet = "".join(model.alphabet)
        fh.write(f"#alphabet={alphabet.encode('unicode_escape').decode('ascii')}\n")
        for gram in sorted(model.ngram_table):
            esc = gram.encode("unicode_escape").decode("ascii")
            fh.write(f"{esc}\t{model.ngram_table[gram]!r}\n")


def load_langid_model(path):
    meta = {}
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key] = value
            elif line:
                gram, prob = line.split("\t")
                table[gram.encode("ascii").decode("unicode_escape")] = float(prob)
    alphabet = tuple(meta.get("alphabet", "").encode("ascii").decode("unicode_escape"))
    model = LanguageIdModel(
        language=meta.get("language", ""),
        ngram_order=int(meta.get("ngram_order", 3)),
        delta=float(meta.get("delta", 0.5)),
        ngram_table=table,
        alphabet=alphabet,
    )
    model._rebuild_context_stats()
    return model


# ---------------------------------------------------------------------------
# pair scanning by names


def _split_name(path):
    directory, name = os.path.split(path)
    stem, ext = os.path.splitext(name)
    return directory, stem, ext


def _candidate_targets(path, rules):
    """Yield (target path, matched source affix length) for one file."""
    directory, stem, ext = _split_name(path)
    for src, tgt in zip(rules.source_prefixes, rules.target_prefixes):
        if src == tgt:
            continue
        if stem.startswith(src):
            candidate = os.path.join(directory, tgt + stem[len(src):] + ext)
            yield candidate, len(src)
    for src, tgt in zip(rules.source_suffixes, rules.target_suffixes):
        if src == tgt:
            continue
        if stem.endswith(src):
            base = stem[: len(stem) - len(src)] if src else stem
            candidate = os.path.join(directory, base + tgt + ext)
            yield candidate, len(src)
    parts = path.replace("\\", "/").split("/")
    for src, tgt in rules.path_segment_pairs:
        if src == tgt:
            continue
        for i, part in enumerate(parts):
            if part == src:
                swapped = parts[:i] + [tgt] + parts[i + 1:]
                yield "/".join(swapped), len(src)


def scan_pairs(file_listing, rules, max_pairings=1):
    """Pair up files whose names differ by a configured affix or path
    segment. Each file joins at most ``max_pairings`` pairs, preferring
    the longest matched affix, then lexicographic path order."""
    listing = set(file_listing)
    matches = []
    for path in listing:
        normalized = path.replace("\\", "/")
        for candidate, affix_len in _candidate_targets(normalized, rules):
            if candidate in listing and candidate != normalized:
                matches.append((affix_len, normalized, candidate))
    matches.sort(key=lambda m: (-m[0], m[1], m[2]))
    used = Counter()
    pairs = []
    seen = set()
    for _, source, target in matches:
        if (source, target) in seen:
            continue
        if used[source] >= max_pairings or used[target] >= max_pairings:
            continue
        seen.add((source, target))
        used[source] += 1
        used[target] += 1
        pairs.append((source, target))
    pairs.sort()
    return pairs


# ---------------------------------------------------------------------------
# content filters


def length_filter(pair, typical_ratio=1.0, tolerance=0.40):
    """Accept when the text-length ratio sits within ``tolerance`` of
    the typical source/target ratio."""
    src_len = pair.source_profile.text_length
    tgt_len = pair.target_profile.text_length
    if src_len <= 0 or tgt_len <= 0:
        return pair.reject("empty-text")
    pair.length_ratio = src_len / tgt_len
    if abs(pair.length_ratio / typical_ratio - 1.0) <= tolerance:
        return pair.accept()
    return pair.reject("length-ratio")


def edit_distance(seq_a, seq_b):
    """Levenshtein distance between two sequences."""
    if len(seq_a) < len(seq_b):
        seq_a, seq_b = seq_b, seq_a
    previous = list(range(len(seq_b) + 1))
    for i, item_a in enumerate(seq_a, 1):
        current = [i]
        for j, item_b in enumerate(seq_b, 1):
            cost = 0 if item_a == item_b else 1
            current.append(min(previous[j] + 1,
                               current[j - 1] + 1,
                               previous[j - 1] + cost))
        previous = current
    return previous[-1]


def structure_filter(pair, threshold=0.20, min_text=200):
    """Accept when the normalized edit distance between the two pages'
    meaningful-tag sequences stays at or below ``threshold``."""
    if (pair.source_profile.text_length < min_text
            or pair.target_profile.text_length < min_text):
        return pair.reject("insufficient-text")
    tags_a = pair.source_profile.tag_sequence
    tags_b = pair.target_profile.tag_sequence
    denom = max(len(tags_a), len(tags_b), 1)
    pair.structure_distance = edit_distance(tags_a, tags_b) / denom
    if pair.structure_distance <= threshold:
        return pair.accept()
    return pair.reject("structure-distance")


# ---------------------------------------------------------------------------
# mining pipeline


@dataclass
class MinerConfig:
    source_language: str = "en"
    target_language: str = "fr"
    rules: NamingRules = field(default_factory=lambda: DEFAULT_EN_FR_RULES)
    langid_models: list = field(default_factory=list)
    typical_ratio: float = 1.0
    length_tolerance: float = 0.40
    structure_threshold: float = 0.20
    min_text: int = 200
    max_pairings: int = 1
    require_anchor: bool = False
    anchor_patterns: list = field(default_factory=lambda: [
        "english", "french", "français", "francais", "italiano", "italian",
        "version française", "english version", "in french", "in english",
    ])
    extensions: tuple = (".html", ".htm", ".txt")
    # optional extra filter: reject pairs whose sentence alignment is
    # dominated by non-1-1 couples (off by default; no threshold claims)
    alignment_filter: bool = False
    alignment_min_ratio: float = 0.5


@dataclass
class MiningReport:
    pages_scanned: int = 0
    candidates: int = 0
    accepted: int = 0
    rejections: Counter = field(default_factory=Counter)

    def merge(self, other):
        self.pages_scanned += other.pages_scanned
        self.candidates += other.candidates
        self.accepted += other.accepted
        self.rejections.update(other.rejections)
        return self

    def lines(self):
        out = [
            f"pages_scanned={self.pages_scanned}",
            f"candidates={self.candidates}",
            f"accepted={self.accepted}",
        ]
        for reason in sorted(self.rejections):
            out.append(f"rejected.{reason}={self.rejections[reason]}")
        return out


def _site_files(site_root, extensions):
    found = []
    for dirpath, _dirnames, filenames in os.walk(site_root):
        for name in filenames:
            if name.lower().endswith(extensions):
                full = os.path.join(dirpath, name)
                found.append(os.path.relpath(full, site_root).replace(os.sep, "/"))
    return sorted(found)


def _has_language_anchor(profiles, patterns):
    lowered = [p.lower() for p in patterns]
    for profile in profiles.values():
        for anchor in profile.anchor_texts:
            text = anchor.lower()
            if any(pat in text for pat in lowered):
                return True
    return False


def _alignment_ratio(pair):
    from .aligner import align
    from .textprep import segment
    sentences = []
    for profile in (pair.source_profile, pair.target_profile):
        sents = []
        for p_idx, paragraph in enumerate(profile.text.split("\n")):
            sents.extend(segment(paragraph, set(), profile.path, p_idx))
        sentences.append(sents)
    couples = align(sentences[0], sentences[1])
    if not couples:
        return 0.0
    return sum(1 for c in couples if c.pattern == (1, 1)) / len(couples)


def verify_pair(pair, config):
    """Run the content filters in order; the first failure wins."""
    length_filter(pair, config.typical_ratio, config.length_tolerance)
    if not pair.accepted:
        return pair
    structure_filter(pair, config.structure_threshold, config.min_text)
    if not pair.accepted:
        return pair
    if config.langid_models:
        for profile, expected in (
            (pair.source_profile, config.source_language),
            (pair.target_profile, config.target_language),
        ):
            if not profile.text:
                return pair.reject("empty-text")
            guess = detect_language(profile.text, config.langid_models)
            profile.detected_language = guess.language
            profile.language_confidence = guess.confidence
            if guess.language != expected:
                return pair.reject("language-mismatch")
    if config.alignment_filter:
        if _alignment_ratio(pair) < config.alignment_min_ratio:
            return pair.reject("alignment-quality")
    return pair.accept()


def mine(site_root, config):
    """Find verified parallel page pairs in a mirrored site tree.

    Returns (accepted pairs as path tuples, MiningReport). Paths in the
    result are relative to ``site_root``.
    """
    if not os.path.isdir(site_root):
        raise IOError(f"site root not readable: {site_root}")
    report = MiningReport()
    listing = _site_files(site_root, config.extensions)
    report.pages_scanned = len(listing)
    if not listing:
        return [], report
    profiles = {}
    for rel in listing:
        profiles[rel] = profile_page(os.path.join(site_root, rel))
    if config.require_anchor and not _has_language_anchor(profiles, config.anchor_patterns):
        report.rejections["no-candidate-anchor"] += 1
        return [], report
    accepted = []
    for source, target in scan_pairs(listing, config.rules, config.max_pairings):
        report.candidates += 1
        pair = PairCandidate(profiles[source], profiles[target])
        verify_pair(pair, config)
        if pair.accepted:
            report.accepted += 1
            accepted.append((source, target))
        else:
            report.rejections[pair.reason] += 1
    return accepted, report


def write_pairs(pairs, path, header_lines=()):
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"#{line}\n")
        for source, target in pairs:
            fh.write(f"{source}\t{target}\n")


def write_report(report, path, header_lines=()):
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"#{line}\n")
        for line in report.lines():
            fh.write(line + "\n")
