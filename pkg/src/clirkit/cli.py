"""Command-line entry point; one subcommand per pipeline stage."""

import argparse
import os
import sys

from . import aligner, evaluation, miner, retrieval, textprep, tm
from .config import RunConfig
from .stemming import get_stemmer


def _query_pipeline(language, cfg, stoplist_path=None):
    stemmer = get_stemmer(language)
    if stoplist_path:
        stoplist = textprep.load_wordlist(stoplist_path)
    else:
        stoplist = textprep.default_stoplist(language)

    def to_terms(text):
        return textprep.normalize(
            textprep.tokenize(text, language), stemmer, stoplist,
            language=language).terms
    return to_terms


def _naming_rules(cfg):
    def split(key):
        raw = cfg.get(key, "")
        return [v for v in raw.split(",")] if raw else []
    prefixes_s = split("source_prefixes")
    prefixes_t = split("target_prefixes")
    suffixes_s = split("source_suffixes")
    suffixes_t = split("target_suffixes")
    segments = []
    for pair in (cfg.get("path_segments", "") or "").split(","):
        if ":" in pair:
            src, tgt = pair.split(":", 1)
            segments.append((src, tgt))
    if not any((prefixes_s, suffixes_s, segments)):
        return miner.DEFAULT_EN_FR_RULES
    return miner.NamingRules(
        source_prefixes=prefixes_s, target_prefixes=prefixes_t,
        source_suffixes=suffixes_s, target_suffixes=suffixes_t,
        path_segment_pairs=segments)


def cmd_mine(args):
    cfg = RunConfig(args.config, {
        "source_lang": args.source_lang, "target_lang": args.target_lang,
        "typical_ratio": args.typical_ratio,
        "length_tolerance": args.length_tolerance,
        "structure_threshold": args.structure_threshold,
        "min_text": args.min_text,
    })
    models = []
    for path in args.langid_model or []:
        models.append(miner.load_langid_model(path))
    config = miner.MinerConfig(
        source_language=cfg.get("source_lang"),
        target_language=cfg.get("target_lang"),
        rules=_naming_rules(cfg),
        langid_models=models,
        typical_ratio=cfg.get_float("typical_ratio"),
        length_tolerance=cfg.get_float("length_tolerance"),
        structure_threshold=cfg.get_float("structure_threshold"),
        min_text=cfg.get_int("min_text"),
        max_pairings=cfg.get_int("max_pairings"),
        require_anchor=args.require_anchor,
    )
    pairs, report = miner.mine(args.site_root, config)
    header = cfg.header_lines([
        "source_lang", "target_lang", "typical_ratio", "length_tolerance",
        "structure_threshold", "min_text", "max_pairings"])
    miner.write_pairs(pairs, args.out, header)
    if args.report:
        miner.write_report(report, args.report, header)
    for line in report.lines():
        print(line)
    return 0


def cmd_extract(args):
    cfg = RunConfig(args.config, {"source_lang": args.language})
    language = cfg.get("source_lang")
    if args.abbrev:
        abbreviations = textprep.load_wordlist(args.abbrev)
    else:
        abbreviations = textprep.default_abbreviations(language)
    documents = []
    for path in args.input:
        with open(path, "rb") as fh:
            data = fh.read()
        doc_id = os.path.basename(path)
        sentences = textprep.document_sentences(data, abbreviations, doc_id)
        documents.append((doc_id, [s.text for s in sentences]))
    textprep.write_corpus(documents, args.out,
                          cfg.header_lines(["source_lang"]))
    print(f"documents={len(documents)}")
    return 0


def _corpus_to_sentences(path, abbreviations):
    docs = []
    for doc_id, lines in textprep.read_corpus(path):
        sentences = []
        for idx, line in enumerate(lines):
            sentences.append(textprep.Sentence(
                text=line, tokens=line.split(), char_length=len(line),
                origin=(doc_id, 0, idx)))
        docs.append((doc_id, sentences))
    return docs


def cmd_align(args):
    cfg = RunConfig(args.config, {
        "cognate_weight": args.cognate_weight,
        "length_variance": args.length_variance,
    })
    params = aligner.AlignParams(
        length_variance=cfg.get_float("length_variance"),
        cognate_weight=cfg.get_float("cognate_weight"),
        cognate_prefix_len=cfg.get_int("cognate_prefix_len"),
    )
    docs_a = _corpus_to_sentences(args.source, set())
    docs_b = _corpus_to_sentences(args.target, set())
    if len(docs_a) != len(docs_b):
        print(f"error: {len(docs_a)} source documents vs {len(docs_b)} target",
              file=sys.stderr)
        return 1
    header = cfg.header_lines(["cognate_weight", "cognate_prefix_len",
                               "length_variance"])
    all_pairs = []
    dump_rows = []
    for (_id_a, sents_a), (_id_b, sents_b) in zip(docs_a, docs_b):
        couples = aligner.align(sents_a, sents_b, params)
        all_pairs.extend(aligner.extract_training_pairs(couples, sents_a, sents_b))
        if args.dump:
            dump_rows.append((couples, sents_a, sents_b))
    aligner.write_training_pairs(all_pairs, args.out, header)
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as fh:
            for line in header:
                fh.write(f"#{line}\n")
        for couples, sents_a, sents_b in dump_rows:
            _append_alignment(args.dump, couples, sents_a, sents_b)
    print(f"pairs={len(all_pairs)}")
    return 0


def _append_alignment(path, couples, sents_a, sents_b):
    with open(path, "a", encoding="utf-8") as fh:
        for c in couples:
            text_a = " ".join(s.text for s in sents_a[c.source_span[0]:c.source_span[1]])
            text_b = " ".join(s.text for s in sents_b[c.target_span[0]:c.target_span[1]])
            fh.write(f"{aligner.pattern_label(c.pattern)}"
                     f"\t{c.source_span[0]}:{c.source_span[1]}"
                     f"\t{c.target_span[0]}:{c.target_span[1]}"
                     f"\t{c.score:.6f}\t{text_a}\t{text_b}\n")


def _read_pair_tsv(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            src, tgt = line.split("\t")[:2]
            pairs.append((src, tgt))
    return pairs


def cmd_train(args):
    cfg = RunConfig(args.config, {"iterations": args.iterations})
    source_lang, target_lang = args.direction.split("-")
    raw_pairs = _read_pair_tsv(args.pairs)
    if args.no_normalize:
        pairs = [(s.split(), t.split()) for s, t in raw_pairs]
    else:
        src_terms = _query_pipeline(source_lang, cfg)
        tgt_terms = _query_pipeline(target_lang, cfg)
        pairs = [(src_terms(s), tgt_terms(t)) for s, t in raw_pairs]
    train_config = tm.TrainConfig(
        iterations=cfg.get_int("iterations"),
        use_null_token=args.null_token,
    )
    model = tm.train(pairs, (source_lang, target_lang), train_config)
    header = cfg.header_lines(["iterations"]) + [f"config direction={args.direction}"]
    tm.save_model(model, args.out, header)
    tm.save_marginals(model, args.out + ".marginals", header)
    tm.save_expected_counts(model, args.out + ".counts", header)
    for i, ll in enumerate(model.log_likelihood_trace, 1):
        print(f"iteration={i} loglik={ll:.6f}")
    print(f"entries={model.entry_count()}")
    return 0


def _load_model_with_sidecars(path):
    marginals = path + ".marginals"
    counts = path + ".counts"
    return tm.load_model(
        path,
        marginals_path=marginals if os.path.exists(marginals) else None,
        counts_path=counts if os.path.exists(counts) else None,
    )


def cmd_prune(args):
    cfg = RunConfig(args.config, {
        "theta": args.theta, "topn": args.n,
        "marginal_floor": args.marginal_floor,
    })
    model = _load_model_with_sidecars(args.model)
    if args.method == "threshold":
        pruned = tm.prune_threshold(model, cfg.get_float("theta"))
        used = ["theta"]
    elif args.method == "topn":
        if not model.expected_counts:
            print("error: top-N pruning needs the .counts sidecar written by train",
                  file=sys.stderr)
            return 1
        pruned = tm.prune_topn(model, cfg.get_int("topn"))
        used = ["topn"]
    else:
        pruned = tm.prune_noise(
            model, cfg.get_float("marginal_floor"),
            digit_rule=not args.no_digit_rule)
        used = ["marginal_floor", "digit_rule"]
    header = cfg.header_lines(used) + [f"config prune_method={args.method}"]
    tm.save_model(pruned, args.out, header)
    tm.save_marginals(pruned, args.out + ".marginals", header)
    tm.save_expected_counts(pruned, args.out + ".counts", header)
    print(f"entries={pruned.entry_count()}")
    return 0


def _read_documents(path, to_terms, language):
    """Documents either as docid<TAB>text lines or in the corpus format."""
    documents = []
    with open(path, encoding="utf-8") as fh:
        head = fh.read(5)
    if head.startswith("#doc"):
        for doc_id, lines in textprep.read_corpus(path):
            documents.append((doc_id, textprep.TermSequence(
                terms=[t for line in lines for t in to_terms(line)],
                language=language)))
        return documents
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            doc_id, _, text = line.partition("\t")
            documents.append((doc_id, textprep.TermSequence(
                terms=to_terms(text), language=language)))
    return documents


def cmd_index(args):
    cfg = RunConfig(args.config, {"target_lang": args.language})
    language = cfg.get("target_lang")
    to_terms = _query_pipeline(language, cfg, args.stoplist)
    documents = _read_documents(args.docs, to_terms, language)
    index = retrieval.build_index(documents)
    header = cfg.header_lines(["target_lang"])
    retrieval.save_index(index, args.out, header)
    print(f"documents={len(index.doc_ids)} vocabulary={len(index.vocabulary)}")
    return 0


METHODS = ("mono", "qt", "dt", "syn", "qt-bm", "qt-eq", "naive", "external")


def cmd_search(args):
    cfg = RunConfig(args.config, {
        "lambda": args.smoothing_lambda, "top_k": args.top_k,
        "oov_policy": args.oov_policy,
    })
    params = retrieval.RetrievalParams(
        smoothing_lambda=cfg.get_float("lambda"),
        top_k=cfg.get_int("top_k"),
    )
    header = cfg.header_lines(["lambda", "top_k", "oov_policy"])
    if args.combine:
        run_a = retrieval.read_run(args.combine[0])
        run_b = retrieval.read_run(args.combine[1])
        combined = retrieval.combine(run_a, run_b, args.interp_alpha, params,
                                     tag=args.tag or f"{run_a.tag}+{run_b.tag}")
        retrieval.write_run(combined, args.out,
                            header + [f"config combine_alpha={args.interp_alpha}"])
        print(f"topics={len(combined.topics)}")
        return 0
    if not args.method:
        print("error: --method or --combine is required", file=sys.stderr)
        return 1
    if not args.topics or not args.index:
        print("error: --topics and --index are required", file=sys.stderr)
        return 1
    method = args.method
    if method in ("qt", "qt-bm", "qt-eq", "naive", "syn") and not args.tm:
        print(f"error: --method {method} needs --tm", file=sys.stderr)
        return 1
    if method == "dt" and not (args.tm_reverse or args.tm):
        print("error: --method dt needs --tm-reverse", file=sys.stderr)
        return 1

    index = retrieval.load_index(args.index)
    topics = retrieval.read_topics(args.topics)
    forward = reverse = None
    if method in ("qt", "qt-bm", "qt-eq", "naive", "syn"):
        forward = _load_model_with_sidecars(args.tm)
        if method == "qt-bm":
            forward = tm.derive_variant(forward, "BM")
        elif method == "qt-eq":
            forward = tm.derive_variant(forward, "EQ")
    if method == "dt":
        reverse = _load_model_with_sidecars(args.tm_reverse or args.tm)

    if method in ("mono", "external"):
        query_lang = index.language or cfg.get("target_lang")
    elif method == "dt":
        query_lang = reverse.direction[1] or cfg.get("source_lang")
    else:
        query_lang = forward.direction[0] or cfg.get("source_lang")
    to_terms = _query_pipeline(query_lang, cfg, args.stoplist)

    tag = args.tag or method.upper()
    run = retrieval.RankedRun(tag=tag)
    for topic in topics:
        terms = to_terms(topic.query_text())
        query = tm.QueryModel.from_terms(terms, query_lang)
        if method in ("mono", "external"):
            retrieval.score_mono(query, index, params, topic.number, tag, run)
        elif method in ("qt", "qt-bm", "qt-eq"):
            retrieval.score_qt(query, forward, index, params, topic.number,
                               tag, run, oov_policy=cfg.get("oov_policy"))
        elif method == "dt":
            retrieval.score_dt(query, reverse, index, params, topic.number, tag, run)
        elif method == "syn":
            retrieval.score_syn(query, forward, index, params, topic.number, tag, run)
        else:
            retrieval.score_naive(query.raw_counts, forward, index, params,
                                  topic.number, tag, run, language=query_lang)
    retrieval.write_run(run, args.out, header + [f"config method={method}"])
    print(f"topics={len(run.topics)}")
    return 0


def cmd_evaluate(args):
    cfg = RunConfig(args.config, {"alpha": args.alpha})
    qrels = evaluation.read_qrels(args.qrels)
    runs = [retrieval.read_run(args.run)]
    for path in args.runs or []:
        runs.append(retrieval.read_run(path))
    header = cfg.header_lines(["alpha"])
    report = evaluation.evaluate_runs(
        runs, qrels, cutoff=cfg.get_int("top_k"),
        alpha=cfg.get_float("alpha"),
        significance=args.significance or len(runs) > 1,
        skip_unjudged=args.skip_unjudged,
        header_lines=header)
    for line in report.lines():
        print(line)
    for (a, b), p in sorted(report.sign_tests.items()):
        print(f"sign_test.{a}.{b}={p:.6f}")
    if args.out:
        evaluation.write_report(report, args.out)
    return 0


def cmd_stats(args):
    cfg = RunConfig(args.config, {})
    model = _load_model_with_sidecars(args.tm)
    query_lang = args.query_lang or model.direction[0] or cfg.get("source_lang")
    to_terms = _query_pipeline(query_lang, cfg, args.stoplist)
    queries = []
    for topic in retrieval.read_topics(args.topics):
        terms = to_terms(topic.query_text())
        queries.append(tm.QueryModel.from_terms(terms, query_lang))
    missed, avg = evaluation.translation_stats(queries, model)
    print(f"unique_query_terms={len({t for q in queries for t in q.raw_counts})}")
    print(f"percent_missed={missed:.2f}")
    print(f"avg_translations={avg:.2f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="clirkit",
        description="cross-language retrieval pipeline over mined parallel text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="find parallel page pairs in a mirrored site")
    p.add_argument("--site-root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--config")
    p.add_argument("--source-lang")
    p.add_argument("--target-lang")
    p.add_argument("--langid-model", action="append")
    p.add_argument("--require-anchor", action="store_true")
    p.add_argument("--typical-ratio", type=float, dest="typical_ratio")
    p.add_argument("--length-tolerance", type=float, dest="length_tolerance")
    p.add_argument("--structure-threshold", type=float, dest="structure_threshold")
    p.add_argument("--min-text", type=int, dest="min_text")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("extract", help="convert pages to the sentence corpus format")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--language")
    p.add_argument("--abbrev")
    p.add_argument("--config")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("align", help="sentence-align two extracted corpora")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump")
    p.add_argument("--config")
    p.add_argument("--cognate-weight", type=float, dest="cognate_weight")
    p.add_argument("--length-variance", type=float, dest="length_variance")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("train", help="train a translation table on 1-1 pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--direction", required=True, help="e.g. en-fr")
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int)
    p.add_argument("--null-token", action="store_true")
    p.add_argument("--no-normalize", action="store_true",
                   help="pairs file already holds normalized terms")
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("prune", help="prune a trained translation table")
    p.add_argument("--model", required=True)
    p.add_argument("--method", required=True,
                   choices=("threshold", "topn", "noise"))
    p.add_argument("--out", required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--marginal-floor", type=float, dest="marginal_floor")
    p.add_argument("--no-digit-rule", action="store_true")
    p.add_argument("--config")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("index", help="index target-language documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--language")
    p.add_argument("--stoplist")
    p.add_argument("--config")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="rank documents for a topic file")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--topics")
    p.add_argument("--index")
    p.add_argument("--tm")
    p.add_argument("--tm-reverse", dest="tm_reverse")
    p.add_argument("--out", required=True)
    p.add_argument("--tag")
    p.add_argument("--lambda", type=float, dest="smoothing_lambda")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--oov-policy", choices=("passthrough", "drop"),
                   dest="oov_policy")
    p.add_argument("--stoplist")
    p.add_argument("--combine", nargs=2, metavar=("RUN_A", "RUN_B"))
    p.add_argument("--alpha", type=float, dest="interp_alpha", default=0.5)
    p.add_argument("--config")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="score runs against judgments")
    p.add_argument("--run", required=True)
    p.add_argument("--runs", nargs="*")
    p.add_argument("--qrels", required=True)
    p.add_argument("--significance", action="store_true")
    p.add_argument("--alpha", type=float)
    p.add_argument("--skip-unjudged", action="store_true")
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="translation coverage of a topic set")
    p.add_argument("--topics", required=True)
    p.add_argument("--tm", required=True)
    p.add_argument("--query-lang", dest="query_lang")
    p.add_argument("--stoplist")
    p.add_argument("--config")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc.filename or exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
