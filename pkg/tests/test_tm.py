"""EM training, pruning, projection and variant derivations."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from clirkit.tm import (QueryModel, TrainConfig, TrainingError, derive_variant,
                        load_model, log_likelihood, naive_bag, project_query,
                        prune_noise, prune_threshold, prune_topn, save_expected_counts,
                        save_marginals, save_model, train)
from reference_impls import brute_force_em

ORACLE_CORPORA = [
    [("a b".split(), "x y".split()), ("a".split(), "x".split())],
    [("a".split(), "x".split())],
    [("a b".split(), "x y".split()), ("b c".split(), "y z".split()),
     ("c".split(), "z".split())],
    [("a a b".split(), "x x y".split()), ("b".split(), "y".split())],
    [("a b c".split(), "x y z".split()), ("a c".split(), "x z".split()),
     ("b".split(), "y".split()), ("a".split(), "x".split())],
    [("a b".split(), "y x".split()), ("b a".split(), "x y".split()),
     ("a".split(), "x".split()), ("b".split(), "y".split())],
]


def assert_rows_normalized(model, tol=1e-9):
    for s, row in model.table.items():
        assert sum(row.values()) == pytest.approx(1.0, abs=tol), s
        assert all(0.0 < p <= 1.0 for p in row.values())


class TestTrain:
    @pytest.mark.parametrize("corpus", ORACLE_CORPORA)
    @pytest.mark.parametrize("iterations", [1, 3, 7])
    def test_matches_alignment_enumeration_oracle(self, corpus, iterations):
        model = train(corpus, ("s", "t"), TrainConfig(iterations=iterations))
        oracle = brute_force_em(corpus, iterations)
        for s, row in oracle.items():
            for t, p in row.items():
                assert model.table[s].get(t, 0.0) == pytest.approx(p, abs=1e-9), \
                    (s, t, iterations)

    def test_disambiguating_pair_drives_convergence(self):
        corpus = [("a b".split(), "x y".split()), ("a".split(), "x".split())]
        model = train(corpus, ("s", "t"), TrainConfig(iterations=50))
        assert model.table["a"]["x"] >= 1.0 - 1e-6
        # P(y|b) approaches 1 only sublinearly; check the direction and
        # that it agrees with the enumeration oracle exactly
        oracle = brute_force_em(corpus, 20)
        short = train(corpus, ("s", "t"), TrainConfig(iterations=20))
        assert short.table["b"]["y"] == pytest.approx(oracle["b"]["y"], abs=1e-9)
        assert model.table["b"]["y"] > short.table["b"]["y"] > 0.9

    def test_single_pair_single_word(self):
        model = train([(["a"], ["x"])], ("s", "t"), TrainConfig(iterations=1))
        assert model.table == {"a": {"x": 1.0}}

    def test_symmetric_ambiguity_stays_uniform(self):
        corpus = [(["s"], ["x", "y"])]
        for iterations in (1, 2, 5):
            model = train(corpus, ("s", "t"), TrainConfig(iterations=iterations))
            assert model.table["s"]["x"] == pytest.approx(0.5, abs=1e-12)
            assert model.table["s"]["y"] == pytest.approx(0.5, abs=1e-12)

    def test_rows_normalized(self):
        for corpus in ORACLE_CORPORA:
            model = train(corpus, ("s", "t"), TrainConfig(iterations=4))
            assert_rows_normalized(model)

    def test_log_likelihood_trace_non_decreasing(self):
        for corpus in ORACLE_CORPORA:
            model = train(corpus, ("s", "t"), TrainConfig(iterations=8))
            trace = model.log_likelihood_trace
            assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:])), trace

    def test_empty_corpus_is_an_error(self):
        with pytest.raises(TrainingError):
            train([], ("s", "t"))
        with pytest.raises(TrainingError):
            train([([], ["x"])], ("s", "t"))

    def test_null_token_absorbs_mass(self):
        corpus = [(["a"], ["x", "y"]), (["a", "b"], ["x", "y"])]
        model = train(corpus, ("s", "t"),
                      TrainConfig(iterations=5, use_null_token=True))
        assert "<null>" in model.table
        assert_rows_normalized(model)

    def test_marginals_are_relative_frequencies(self):
        corpus = [("a b".split(), "x y".split()), ("a".split(), "x".split())]
        model = train(corpus, ("s", "t"))
        assert model.source_marginal == {"a": 2 / 3, "b": 1 / 3}

    def test_convergence_delta_stops_early(self):
        corpus = [(["a"], ["x"])]
        model = train(corpus, ("s", "t"),
                      TrainConfig(iterations=50, convergence_delta=1e-12))
        assert len(model.log_likelihood_trace) <= 3


class TestLogLikelihood:
    def test_perfect_model_scores_zero(self):
        model = train([(["a"], ["x"])], ("s", "t"))
        result = log_likelihood(model, [(["a"], ["x"])])
        assert result.value == pytest.approx(0.0, abs=1e-12)
        assert result.zero_probability_tokens == 0

    def test_uniform_two_way_model(self):
        # both source words spread their mass half on x, half elsewhere
        model = _model({"a": {"x": 0.5, "w": 0.5}, "b": {"x": 0.5, "w": 0.5}},
                       direction=("s", "t"))
        result = log_likelihood(model, [(["a", "b"], ["x"])])
        assert result.value == pytest.approx(math.log(0.5), abs=1e-12)

    def test_unknown_token_hits_floor(self):
        model = train([(["a"], ["x"])], ("s", "t"))
        result = log_likelihood(model, [(["a"], ["zzz"])])
        assert result.zero_probability_tokens == 1
        assert result.value == pytest.approx(math.log(1e-12))


TABLE5_ROW = {"drug": {"drogue": 0.55, "médicament": 0.45}}


def _model(table, direction=("en", "fr"), marginals=None, counts=None):
    from clirkit.tm import TranslationModel
    return TranslationModel(
        direction=direction, table={s: dict(r) for s, r in table.items()},
        source_marginal=marginals or {s: 1.0 / len(table) for s in table},
        source_vocab_size=len(table),
        target_vocab_size=len({t for r in table.values() for t in r}),
        expected_counts=counts or {},
    )


class TestPruneThreshold:
    def test_drug_row_unchanged_at_point_one(self):
        pruned = prune_threshold(_model(TABLE5_ROW), 0.1)
        assert pruned.table["drug"] == TABLE5_ROW["drug"]

    def test_renormalization_after_drop(self):
        model = _model({"s": {"x": 0.5, "y": 0.35, "z": 0.08, "w": 0.07}})
        pruned = prune_threshold(model, 0.1)
        assert pruned.table["s"]["x"] == pytest.approx(0.5 / 0.85)
        assert pruned.table["s"]["y"] == pytest.approx(0.35 / 0.85)
        assert set(pruned.table["s"]) == {"x", "y"}

    def test_certain_translation_unchanged(self):
        model = _model({"s": {"x": 1.0}})
        assert prune_threshold(model, 0.9).table == {"s": {"x": 1.0}}

    def test_zero_theta_is_identity(self):
        model = train(ORACLE_CORPORA[2], ("s", "t"), TrainConfig(iterations=3))
        pruned = prune_threshold(model, 0.0)
        assert pruned.table == model.table

    def test_row_can_vanish(self):
        model = _model({"s": {"x": 0.6, "y": 0.4}, "r": {"p": 0.05, "q": 0.95}})
        pruned = prune_threshold(model, 0.7)
        assert "s" not in pruned.table          # everything below threshold
        assert pruned.table["r"] == {"q": 1.0}

    def test_normalized_after_prune(self):
        model = train(ORACLE_CORPORA[4], ("s", "t"), TrainConfig(iterations=5))
        assert_rows_normalized(prune_threshold(model, 0.1))


class TestPruneTopn:
    def test_n_at_least_entry_count_is_identity(self):
        model = _model(TABLE5_ROW, counts={("drug", "drogue"): 5.0,
                                           ("drug", "médicament"): 4.0})
        assert prune_topn(model, 3).table == model.table

    def test_keeps_highest_counts_globally(self):
        model = _model(
            {"a": {"x": 0.9, "y": 0.1}, "b": {"z": 1.0}},
            counts={("a", "x"): 10.0, ("a", "y"): 1.0, ("b", "z"): 5.0})
        pruned = prune_topn(model, 2)
        assert pruned.table == {"a": {"x": 1.0}, "b": {"z": 1.0}}

    def test_deterministic_tie_break(self):
        model = _model(
            {"a": {"x": 0.5, "y": 0.5}},
            counts={("a", "x"): 1.0, ("a", "y"): 1.0})
        pruned = prune_topn(model, 1)
        assert set(pruned.table["a"]) == {"x"}

    def test_normalized_after_prune(self):
        model = train(ORACLE_CORPORA[4], ("s", "t"), TrainConfig(iterations=5))
        assert_rows_normalized(prune_topn(model, 3))


class TestPruneNoise:
    def test_digit_entries_removed(self):
        model = _model({"xç64": {"drug": 0.9, "drogue": 0.1},
                        "clean": {"net": 1.0}},
                       marginals={"xç64": 0.5, "clean": 0.5})
        pruned = prune_noise(model, digit_rule=True)
        assert "xç64" not in pruned.table
        assert pruned.table["clean"] == {"net": 1.0}

    def test_digit_targets_removed_too(self):
        model = _model({"clean": {"x9": 0.5, "net": 0.5}},
                       marginals={"clean": 1.0})
        pruned = prune_noise(model)
        assert pruned.table["clean"] == {"net": 1.0}

    def test_clean_model_unchanged(self):
        model = _model(TABLE5_ROW, marginals={"drug": 0.4})
        pruned = prune_noise(model, marginal_floor=1e-6)
        assert pruned.table == model.table

    def test_marginal_floor_drops_rare_sources(self):
        model = _model({"rare": {"x": 1.0}, "common": {"y": 1.0}},
                       marginals={"rare": 1e-8, "common": 0.9})
        pruned = prune_noise(model, marginal_floor=1e-6)
        assert "rare" not in pruned.table
        assert "common" in pruned.table


class TestProjectQuery:
    def test_table5_projection(self):
        query = QueryModel(language="en", distribution={"drug": 1.0})
        projected = project_query(query, _model(TABLE5_ROW))
        assert projected.distribution == pytest.approx(
            {"drogue": 0.55, "médicament": 0.45})
        assert projected.language == "fr"

    def test_identity_model_is_identity(self):
        table = {s: {s: 1.0} for s in ("p", "q", "r")}
        query = QueryModel(language="en", distribution={"p": 0.2, "q": 0.5, "r": 0.3})
        projected = project_query(query, _model(table, direction=("en", "en")))
        assert projected.distribution == query.distribution

    def test_oov_passthrough(self):
        query = QueryModel(language="en", distribution={"a": 0.5, "b": 0.5})
        projected = project_query(query, _model({"a": {"x": 1.0}}))
        assert projected.distribution == pytest.approx({"x": 0.5, "b": 0.5})

    def test_oov_drop_renormalizes(self):
        query = QueryModel(language="en", distribution={"a": 0.5, "b": 0.5})
        projected = project_query(query, _model({"a": {"x": 1.0}}),
                                  oov_policy="drop")
        assert projected.distribution == pytest.approx({"x": 1.0})

    @given(st.dictionaries(st.sampled_from("abcdef"),
                           st.floats(0.05, 1.0), min_size=1, max_size=6))
    @settings(max_examples=50)
    def test_output_is_a_distribution(self, weights):
        total = sum(weights.values())
        dist = {k: v / total for k, v in weights.items()}
        query = QueryModel(language="en", distribution=dist)
        model = _model({"a": {"x": 0.7, "y": 0.3}, "b": {"y": 1.0},
                        "c": {"z": 0.5, "w": 0.5}})
        projected = project_query(query, model)
        assert sum(projected.distribution.values()) == pytest.approx(1.0, abs=1e-9)


class TestDeriveVariant:
    def test_table5_bm(self):
        assert derive_variant(_model(TABLE5_ROW), "BM").table == \
            {"drug": {"drogue": 1.0}}

    def test_table5_eq(self):
        assert derive_variant(_model(TABLE5_ROW), "EQ").table == \
            {"drug": {"drogue": 0.5, "médicament": 0.5}}

    def test_table5_syn(self):
        syn = derive_variant(_model(TABLE5_ROW), "SYN")
        assert syn.table == {"drug": {"drogue": 1.0, "médicament": 1.0}}
        assert syn.unit_weights

    def test_bm_tie_breaks_lexicographically(self):
        model = _model({"s": {"zeta": 0.5, "alpha": 0.5}})
        assert derive_variant(model, "BM").table == {"s": {"alpha": 1.0}}

    def test_bm_and_eq_idempotent(self):
        model = _model({"a": {"x": 0.7, "y": 0.3}, "b": {"z": 1.0}})
        for variant in ("BM", "EQ"):
            once = derive_variant(model, variant)
            twice = derive_variant(once, variant)
            assert twice.table == once.table

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            derive_variant(_model(TABLE5_ROW), "XX")


class TestNaiveBag:
    def test_table5_naive(self):
        assert naive_bag({"drug": 1}, _model(TABLE5_ROW)) == \
            {"drogue": 1, "médicament": 1}

    def test_counts_scale_with_occurrences(self):
        bag = naive_bag({"drug": 2}, _model(TABLE5_ROW))
        assert bag == {"drogue": 2, "médicament": 2}

    def test_oov_passes_through(self):
        bag = naive_bag({"a": 1, "b": 1}, _model({"a": {"x": 1.0}}))
        assert bag == {"x": 1, "b": 1}


class TestSerialization:
    def test_round_trip(self, tmp_path):
        model = train(ORACLE_CORPORA[2], ("en", "fr"), TrainConfig(iterations=3))
        path = str(tmp_path / "model.tsv")
        save_model(model, path)
        save_marginals(model, path + ".marginals")
        save_expected_counts(model, path + ".counts")
        loaded = load_model(path, path + ".marginals", path + ".counts")
        assert loaded.direction == ("en", "fr")
        assert set(loaded.table) == set(model.table)
        for s, row in model.table.items():
            for t, p in row.items():
                assert loaded.table[s][t] == pytest.approx(p, rel=1e-5)
        assert loaded.source_marginal.keys() == model.source_marginal.keys()
        assert loaded.expected_counts == pytest.approx(model.expected_counts)

    def test_header_and_order_deterministic(self, tmp_path):
        model = train(ORACLE_CORPORA[2], ("en", "fr"), TrainConfig(iterations=3))
        p1, p2 = str(tmp_path / "m1.tsv"), str(tmp_path / "m2.tsv")
        save_model(model, p1)
        save_model(model, p2)
        text = open(p1).read()
        assert text == open(p2).read()
        assert text.startswith("#source_lang=en\n#target_lang=fr\n#entries=")


class TestQueryModel:
    def test_from_terms(self):
        q = QueryModel.from_terms(["a", "b", "a"], "en")
        assert q.distribution == pytest.approx({"a": 2 / 3, "b": 1 / 3})
        assert q.raw_counts == {"a": 2, "b": 1}
        assert sum(q.distribution.values()) == pytest.approx(1.0, abs=1e-9)

    def test_empty_terms(self):
        q = QueryModel.from_terms([], "en")
        assert q.distribution == {}
