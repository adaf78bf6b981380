"""clirkit: cross-language retrieval over web-mined parallel text.

Pipeline: mine parallel page pairs from mirrored site trees, extract
and align sentences, train word-translation tables by EM, then rank
documents with a translation-embedding unigram retrieval model and
evaluate runs TREC-style.
"""

__version__ = "0.1.0"

from . import aligner, evaluation, miner, retrieval, stemming, textprep, tm  # noqa: F401
