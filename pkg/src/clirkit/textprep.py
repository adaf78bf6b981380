"""Raw page to normalized term sequences.

Covers the whole preparation chain: HTML text extraction with a
plain-text fallback for broken markup, sentence segmentation with an
abbreviation list, language-aware tokenization (elisions, contractions,
possessives) and normalization (lowercase, stem, stopword removal).
"""

import html
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from importlib import resources

# tags that open or close a paragraph-sized text block
BLOCK_TAGS = {"p", "li", "h1", "h2", "h3", "h4", "h5", "h6", "title"}
_VOID_TAGS = {"br", "hr", "img", "meta", "link", "input", "area", "base", "col",
              "embed", "source", "track", "wbr"}
_SKIP_CONTENT = {"script", "style"}


@dataclass
class Sentence:
    """One segmented sentence with its surface tokens and provenance."""
    text: str
    tokens: list
    char_length: int
    origin: tuple  # (document id, paragraph index, sentence index)


@dataclass
class TermSequence:
    """Normalized index terms in document order."""
    terms: list
    language: str = ""


def _decode(page_bytes):
    if isinstance(page_bytes, str):
        return page_bytes
    try:
        return page_bytes.decode("utf-8")
    except UnicodeDecodeError:
        return page_bytes.decode("latin-1")


class _BlockExtractor(HTMLParser):
    """Structured pass: collect paragraphs, flag malformed tag nesting."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.paragraphs = []
        self._buf = []
        self._stack = []
        self._skip_depth = 0
        self._br_run = 0
        self.malformed = False

    def _flush(self):
        text = " ".join("".join(self._buf).split())
        if text:
            self.paragraphs.append(text)
        self._buf = []

    def handle_starttag(self, tag, attrs):
        if tag == "br":
            self._br_run += 1
            if self._br_run >= 2:
                self._flush()
            else:
                self._buf.append(" ")
            return
        self._br_run = 0
        if tag in _SKIP_CONTENT:
            self._skip_depth += 1
            self._stack.append(tag)
            return
        if tag in BLOCK_TAGS:
            self._flush()
        if tag not in _VOID_TAGS:
            self._stack.append(tag)

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)

    def handle_endtag(self, tag):
        if tag in _VOID_TAGS:
            return
        self._br_run = 0
        if self._stack and tag in self._stack:
            while self._stack:
                popped = self._stack.pop()
                if popped in _SKIP_CONTENT:
                    self._skip_depth = max(0, self._skip_depth - 1)
                if popped == tag:
                    break
                self.malformed = True  # implicitly closed tag
        else:
            self.malformed = True  # closing tag that was never opened
        if tag in BLOCK_TAGS:
            self._flush()

    def handle_data(self, data):
        if self._skip_depth:
            return
        if data.strip():
            self._br_run = 0
        self._buf.append(data)

    def close(self):
        super().close()
        self._flush()
        if any(t not in _VOID_TAGS for t in self._stack):
            self.malformed = True


class _BrTracker(HTMLParser):
    """Rewrites markup to whitespace so broken pages still yield text."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.pieces = []
        self._skip_depth = 0
        self._last_br = False

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_CONTENT:
            self._skip_depth += 1
            return
        if tag == "br":
            self.pieces.append("\n\n" if self._last_br else "\n")
            self._last_br = True
            return
        self._last_br = False
        self.pieces.append("\n\n" if tag in BLOCK_TAGS else " ")

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)

    def handle_endtag(self, tag):
        if tag in _SKIP_CONTENT:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        self._last_br = False
        self.pieces.append("\n\n" if tag in BLOCK_TAGS else " ")

    def handle_data(self, data):
        if not self._skip_depth:
            self.pieces.append(data)
            if data.strip():
                self._last_br = False


def _strip_markup(text):
    parser = _BrTracker()
    try:
        parser.feed(text)
        parser.close()
        flat = "".join(parser.pieces)
    except Exception:
        flat = re.sub(r"(?is)<(script|style)\b.*?</\1\s*>", " ", text)
        flat = re.sub(r"(?s)<[^>]*>", " ", flat)
        flat = html.unescape(flat)
    paragraphs = []
    for chunk in re.split(r"\n\s*\n", flat):
        norm = " ".join(chunk.split())
        if norm:
            paragraphs.append(norm)
    return paragraphs


def extract_text(page_bytes):
    """Extract a list of text paragraphs from an HTML or plain-text page.

    Well-formed markup is split on block tags; anything with broken
    nesting falls back to stripping all markup and splitting on blank
    lines. Never raises on arbitrary input.
    """
    text = _decode(page_bytes)
    if not text.strip():
        return []
    if "<" not in text:
        return _strip_markup(text)
    parser = _BlockExtractor()
    try:
        parser.feed(text)
        parser.close()
    except Exception:
        return _strip_markup(text)
    if parser.malformed:
        return _strip_markup(text)
    return parser.paragraphs


_BOUNDARY = re.compile(r"([.!?])(\s+)(?=(\S+))")


def _starts_new_sentence(ch):
    return ch.isupper() or ch.isdigit()


def segment(paragraph, abbreviations, doc_id="", paragraph_index=0):
    """Split a paragraph into sentences.

    A sentence ends at ``. ! ?`` followed by whitespace and an
    uppercase letter or digit, unless the token carrying the period is a
    known abbreviation. Paragraphs with no terminal punctuation (section
    headers and the like) come back as a single sentence.
    """
    text = " ".join(paragraph.split())
    if not text:
        return []
    breaks = []
    for m in _BOUNDARY.finditer(text):
        follower = m.group(3).lstrip("\"'(«¿¡")
        if not follower or not _starts_new_sentence(follower[0]):
            continue
        if m.group(1) == ".":
            token = text[: m.end(1)].rsplit(None, 1)[-1].lower()
            if token in abbreviations:
                continue
        breaks.append((m.end(1), m.end(2)))
    sentences = []
    start = 0
    for end, nxt in breaks:
        piece = text[start:end].strip()
        if piece:
            sentences.append(piece)
        start = nxt
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    out = []
    for idx, sent in enumerate(sentences):
        out.append(Sentence(
            text=sent,
            tokens=sent.split(),
            char_length=len(sent),
            origin=(doc_id, paragraph_index, idx),
        ))
    return out


_WORD = re.compile(r"[^\W_]+(?:['’\-][^\W_]+)*", re.UNICODE)

_FR_ELISIONS = {"c", "d", "j", "l", "m", "n", "s", "t", "qu",
                "lorsqu", "jusqu", "puisqu", "quoiqu"}
_IT_ELISIONS = {"l", "un", "d", "c", "s", "v", "dell", "all", "nell",
                "sull", "dall", "coll", "quest", "sant", "anch"}
_FR_CONTRACTIONS = {
    "au": ("à", "le"),
    "aux": ("à", "les"),
    "du": ("de", "le"),
    "des": ("de", "les"),
}


def _split_elision(token, prefixes):
    i = token.find("'")
    if 0 < i < len(token) - 1 and token[:i].lower() in prefixes:
        return [token[: i + 1], token[i + 1:]]
    return [token]


def tokenize(sentence, language="generic"):
    """Split text into tokens with per-language refinements.

    French/Italian elisions split after the apostrophe (l'amour gives
    l' + amour), French contracted articles expand (au gives à + le) and
    English possessives detach (Bob's gives Bob + 's). Unknown language
    codes fall back to the plain split.
    """
    tokens = []
    for raw in _WORD.findall(sentence):
        token = raw.replace("’", "'")
        if language == "fr":
            expansion = _FR_CONTRACTIONS.get(token.lower())
            if expansion is not None:
                tokens.extend(expansion)
                continue
            tokens.extend(_split_elision(token, _FR_ELISIONS))
        elif language == "it":
            tokens.extend(_split_elision(token, _IT_ELISIONS))
        elif language == "en" and len(token) > 2 and token.lower().endswith("'s"):
            tokens.extend([token[:-2], "'s"])
        else:
            tokens.append(token)
    return tokens


def normalize(tokens, stemmer, stoplist, language=""):
    """Lowercase, stem, then drop stoplist members and emptied tokens."""
    terms = []
    for token in tokens:
        stem = stemmer(token.lower())
        if stem and stem not in stoplist:
            terms.append(stem)
    return TermSequence(terms=terms, language=language)


def load_wordlist(path):
    """One entry per line, ``#`` comments and blank lines ignored."""
    entries = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                entries.add(word.lower())
    return entries


def default_stoplist(language):
    return _load_data_list(f"stop_{language}.txt")


def default_abbreviations(language):
    return _load_data_list(f"abbrev_{language}.txt")


def _load_data_list(name):
    ref = resources.files("clirkit.data").joinpath(name)
    if not ref.is_file():
        return set()
    entries = set()
    for line in ref.read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            entries.add(word.lower())
    return entries


def write_corpus(documents, path, header_lines=()):
    """Write ``(doc_id, [sentence, ...])`` records in the corpus format:
    a ``#doc <id>`` header, one sentence per line, blank line between
    documents."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"#{line}\n")
        first = True
        for doc_id, sentences in documents:
            if not first:
                fh.write("\n")
            first = False
            fh.write(f"#doc {doc_id}\n")
            for sent in sentences:
                fh.write(" ".join(str(sent).split()) + "\n")


def read_corpus(path):
    """Inverse of :func:`write_corpus`; returns ``[(doc_id, [sentence])]``."""
    documents = []
    current_id = None
    current = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#doc "):
                if current_id is not None:
                    documents.append((current_id, current))
                current_id = line[5:].strip()
                current = []
            elif line.startswith("#"):
                continue
            elif line.strip():
                if current_id is None:
                    current_id = "doc0"
                current.append(line.strip())
    if current_id is not None:
        documents.append((current_id, current))
    return documents


def document_sentences(page_bytes, abbreviations, doc_id=""):
    """Full extraction chain for one page: paragraphs then sentences."""
    sentences = []
    for p_idx, paragraph in enumerate(extract_text(page_bytes)):
        sentences.extend(segment(paragraph, abbreviations, doc_id, p_idx))
    return sentences
