"""Suffix-stripping stemmers for English, French and Italian index terms.

The English stemmer is the classic iterative suffix stripper (Porter,
1980); French and Italian use much lighter inflection strippers, which
is adequate because stems only serve as conflation classes for indexing
and translation-model training, never as linguistic output.

The default stemmers handed out by :func:`get_stemmer` re-apply the
stripping rules until a fixed point is reached, so normalizing already
normalized text is a no-op. The single-pass :func:`porter_stem` is kept
public for anyone who needs the textbook behaviour.
"""

_VOWELS = "aeiou"


def _is_consonant(word, i):
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        # y is a vowel when preceded by a consonant
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem):
    """Number of vowel-consonant sequences [C](VC)^m[V] in the stem."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _contains_vowel(stem):
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word):
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word):
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


_STEP2 = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]

_STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4 = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]


def _longest_rule(word, rules):
    best = None
    for suffix, repl in rules:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, repl)
    return best


def porter_stem(word):
    """Single pass of the 1980 suffix-stripping algorithm (lowercase input)."""
    w = word
    if len(w) <= 2:
        return w

    # step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    # step 1b
    fired = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed"):
        if _contains_vowel(w[:-2]):
            w = w[:-2]
            fired = True
    elif w.endswith("ing"):
        if _contains_vowel(w[:-3]):
            w = w[:-3]
            fired = True
    if fired:
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _ends_double_consonant(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w += "e"

    # step 1c
    if w.endswith("y") and _contains_vowel(w[:-1]):
        w = w[:-1] + "i"

    # step 2
    rule = _longest_rule(w, _STEP2)
    if rule is not None:
        suffix, repl = rule
        if _measure(w[: -len(suffix)]) > 0:
            w = w[: -len(suffix)] + repl

    # step 3
    rule = _longest_rule(w, _STEP3)
    if rule is not None:
        suffix, repl = rule
        if _measure(w[: -len(suffix)]) > 0:
            w = w[: -len(suffix)] + repl

    # step 4
    best = None
    for suffix in _STEP4:
        if w.endswith(suffix) and (best is None or len(suffix) > len(best)):
            best = suffix
    if best is not None:
        stem = w[: -len(best)]
        if _measure(stem) > 1 and (best != "ion" or stem.endswith(("s", "t"))):
            w = stem

    # step 5a
    if w.endswith("e"):
        m = _measure(w[:-1])
        if m > 1 or (m == 1 and not _ends_cvc(w[:-1])):
            w = w[:-1]
    # step 5b
    if _measure(w) > 1 and _ends_double_consonant(w) and w.endswith("l"):
        w = w[:-1]

    return w


def _french_pass(word):
    w = word
    if len(w) >= 5 and w.endswith("aux"):
        w = w[:-3] + "al"
    elif len(w) >= 4 and w[-1] in "sx":
        w = w[:-1]
    if len(w) >= 4 and w[-1] in "eé":
        w = w[:-1]
    if len(w) >= 4 and w[-1] == w[-2] and w[-1] not in "aeiouéèêàâîôûù":
        w = w[:-1]
    return w


def _italian_pass(word):
    w = word
    if len(w) >= 4 and w[-1] in "aeioàèéìòù":
        w = w[:-1]
    if len(w) >= 4 and w[-1] == w[-2] and w[-1] not in "aeiou":
        w = w[:-1]
    return w


def _fixpoint(fn):
    def stem(word):
        w = word
        if "'" in w:
            # elision clitics such as l' stay intact for stoplist matching
            return w
        while True:
            nxt = fn(w)
            if nxt == w:
                return w
            w = nxt
    return stem


english_stem = _fixpoint(porter_stem)
french_stem = _fixpoint(_french_pass)
italian_stem = _fixpoint(_italian_pass)


def identity_stem(word):
    return word


_STEMMERS = {
    "en": english_stem,
    "fr": french_stem,
    "it": italian_stem,
}


def get_stemmer(language):
    """Stemming function for a language code; identity for unknown codes."""
    return _STEMMERS.get(language, identity_stem)
