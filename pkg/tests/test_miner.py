"""Pair scanning, content filters and the mining pipeline."""

import math

import pytest
from hypothesis import given, strategies as st

from clirkit import miner
from clirkit.miner import (LanguageIdModel, MinerConfig, NamingRules,
                           PageProfile, PairCandidate, detect_language,
                           edit_distance, length_filter, load_langid_model,
                           mine, save_langid_model, scan_pairs,
                           structure_filter)

EN_SAMPLE = (
    "The committee met on Tuesday to discuss the new budget proposal. "
    "Members of the board agreed that spending on public transport should "
    "increase next year, while taxes would remain at their current level. "
    "The chairman thanked everyone for their work during the long session."
)
FR_SAMPLE = (
    "Le comité s'est réuni mardi pour discuter du nouveau budget proposé. "
    "Les membres du conseil ont convenu que les dépenses de transport "
    "public devraient augmenter l'année prochaine, tandis que les impôts "
    "resteraient à leur niveau actuel. Le président a remercié tout le monde."
)
IT_SAMPLE = (
    "Il comitato si è riunito martedì per discutere la nuova proposta di "
    "bilancio. I membri del consiglio hanno convenuto che la spesa per i "
    "trasporti pubblici dovrebbe aumentare il prossimo anno, mentre le "
    "tasse resterebbero al livello attuale. Il presidente ha ringraziato tutti."
)

FR_FIXTURE_200 = (
    "Les peintures anciennes du musée attirent chaque année des milliers "
    "de visiteurs venus admirer les œuvres des grands maîtres européens "
    "exposées dans les salles récemment rénovées du bâtiment principal."
)


@pytest.fixture(scope="module")
def langid_models():
    return [
        LanguageIdModel.train("en", [EN_SAMPLE]),
        LanguageIdModel.train("fr", [FR_SAMPLE]),
        LanguageIdModel.train("it", [IT_SAMPLE]),
    ]


class TestDetectLanguage:
    def test_short_text_flagged_low_confidence(self, langid_models):
        guess = detect_language("x" * 40, langid_models)
        assert guess.low_confidence

    def test_training_sample_wins_with_top_confidence(self, langid_models):
        for model, sample in zip(langid_models, (EN_SAMPLE, FR_SAMPLE, IT_SAMPLE)):
            guess = detect_language(sample, langid_models)
            assert guess.language == model.language
            others = [m.log_likelihood(sample) for m in langid_models
                      if m.language != model.language]
            assert model.log_likelihood(sample) > max(others)

    def test_french_paragraph_detected(self, langid_models):
        assert len(FR_FIXTURE_200) >= 200
        guess = detect_language(FR_FIXTURE_200, langid_models)
        assert guess.language == "fr"
        assert not guess.low_confidence
        assert 0.0 <= guess.confidence <= 1.0

    def test_log_likelihood_matches_hand_scoring(self, langid_models):
        # independent rescoring straight off the stored table
        model = langid_models[1]
        text = FR_FIXTURE_200
        normalized = " ".join(text.lower().split())
        padded = " " + normalized + " "
        expected = 0.0
        for i in range(len(padded) - model.ngram_order + 1):
            gram = padded[i:i + model.ngram_order]
            p = model.ngram_table.get(gram)
            if p is None:
                p = model._floor(gram[:-1])
            expected += math.log(p)
        assert model.log_likelihood(text) == pytest.approx(expected, abs=1e-12)

    def test_empty_models_is_an_error(self):
        with pytest.raises(ValueError):
            detect_language("text", [])

    def test_empty_text_is_an_error(self, langid_models):
        with pytest.raises(ValueError):
            detect_language("", langid_models)

    def test_context_probabilities_sum_to_one(self, langid_models):
        for model in langid_models:
            for ctx, total in model.context_sums().items():
                assert total == pytest.approx(1.0, abs=1e-9), ctx

    def test_round_trip_serialization(self, langid_models, tmp_path):
        path = tmp_path / "fr.langid"
        save_langid_model(langid_models[1], path)
        loaded = load_langid_model(path)
        assert loaded.language == "fr"
        assert loaded.ngram_table == langid_models[1].ngram_table
        assert loaded.log_likelihood(FR_FIXTURE_200) == pytest.approx(
            langid_models[1].log_likelihood(FR_FIXTURE_200), abs=1e-9)


SUFFIX_RULES = NamingRules(source_suffixes=[""], target_suffixes=["_f"])
SEGMENT_RULES = NamingRules(path_segment_pairs=[("en", "fr")])


class TestScanPairs:
    def test_suffix_example(self):
        pairs = scan_pairs(["index.html", "index_f.html"], SUFFIX_RULES)
        assert pairs == [("index.html", "index_f.html")]

    def test_no_counterpart(self):
        assert scan_pairs(["a.html"], SUFFIX_RULES) == []

    def test_path_segment_example(self):
        pairs = scan_pairs(["/en/afile.html", "/fr/afile.html"], SEGMENT_RULES)
        assert pairs == [("/en/afile.html", "/fr/afile.html")]

    def test_max_pairings_limits_reuse(self):
        rules = NamingRules(source_suffixes=["", "_e"],
                            target_suffixes=["_f", "_f"])
        listing = ["page.html", "page_e.html", "page_f.html"]
        pairs = scan_pairs(listing, rules, max_pairings=1)
        # the longer matched affix wins the only slot on page_f.html
        assert pairs == [("page_e.html", "page_f.html")]

    def test_parallel_list_validation(self):
        with pytest.raises(ValueError):
            NamingRules(source_prefixes=["e"], target_prefixes=[])

    @given(st.permutations(["index.html", "index_f.html", "/en/a.html",
                            "/fr/a.html", "decoy.html"]))
    def test_listing_order_irrelevant(self, listing):
        rules = NamingRules(source_suffixes=[""], target_suffixes=["_f"],
                            path_segment_pairs=[("en", "fr")])
        expected = scan_pairs(sorted(listing), rules)
        assert scan_pairs(list(listing), rules) == expected


def _profile(text_length, tags=(), path="x.html"):
    return PageProfile(path=path, byte_length=text_length * 2,
                       text_length=text_length, tag_sequence=list(tags))


class TestLengthFilter:
    def test_exact_ratio_accepted(self):
        pair = PairCandidate(_profile(1000), _profile(1000))
        assert length_filter(pair, 1.0, 0.40).accepted

    def test_half_again_longer_rejected(self):
        pair = PairCandidate(_profile(1500), _profile(1000))
        result = length_filter(pair, 1.0, 0.40)
        assert not result.accepted
        assert result.reason == "length-ratio"
        assert result.length_ratio == pytest.approx(1.5)

    def test_thirty_percent_longer_accepted(self):
        pair = PairCandidate(_profile(1300), _profile(1000))
        assert length_filter(pair, 1.0, 0.40).accepted

    def test_empty_text_reason(self):
        pair = PairCandidate(_profile(0), _profile(1000))
        result = length_filter(pair)
        assert result.reason == "empty-text"

    def test_boundary_inclusive(self):
        pair = PairCandidate(_profile(1400), _profile(1000))
        assert length_filter(pair, 1.0, 0.40).accepted


class TestStructureFilter:
    def test_identical_sequences(self):
        pair = PairCandidate(_profile(300, ["p", "p", "h1"]),
                             _profile(300, ["p", "p", "h1"]))
        result = structure_filter(pair)
        assert result.accepted and result.structure_distance == 0.0

    def test_one_third_distance_rejected(self):
        pair = PairCandidate(_profile(300, ["p", "p", "h1"]),
                             _profile(300, ["p", "h1"]))
        result = structure_filter(pair, threshold=0.20)
        assert not result.accepted
        assert result.structure_distance == pytest.approx(1 / 3)

    def test_exact_threshold_accepted(self):
        pair = PairCandidate(_profile(300, ["p", "p", "p", "p", "h1"]),
                             _profile(300, ["p", "p", "p", "p", "h2"]))
        result = structure_filter(pair, threshold=0.20)
        assert result.accepted
        assert result.structure_distance == pytest.approx(0.2)

    def test_short_pages_rejected(self):
        pair = PairCandidate(_profile(100, ["p"]), _profile(300, ["p"]))
        result = structure_filter(pair, min_text=200)
        assert result.reason == "insufficient-text"

    @given(st.lists(st.sampled_from(["p", "h1", "li", "td"]), max_size=8),
           st.lists(st.sampled_from(["p", "h1", "li", "td"]), max_size=8))
    def test_distance_is_a_bounded_metric(self, tags_a, tags_b):
        pair_ab = PairCandidate(_profile(300, tags_a), _profile(300, tags_b))
        pair_ba = PairCandidate(_profile(300, tags_b), _profile(300, tags_a))
        structure_filter(pair_ab, threshold=1.0)
        structure_filter(pair_ba, threshold=1.0)
        assert 0.0 <= pair_ab.structure_distance <= 1.0
        assert pair_ab.structure_distance == pair_ba.structure_distance
        same = PairCandidate(_profile(300, tags_a), _profile(300, tags_a))
        structure_filter(same, threshold=1.0)
        assert same.structure_distance == 0.0


def test_edit_distance_basics():
    assert edit_distance([], []) == 0
    assert edit_distance(["p"], []) == 1
    assert edit_distance(list("kitten"), list("sitting")) == 3


def _page(body, title="Page", anchor=None):
    link = f'<p><a href="other.html">{anchor}</a></p>' if anchor else ""
    return f"<html><head><title>{title}</title></head><body>{link}{body}</body></html>"


def _en_body(extra=""):
    return f"<p>{EN_SAMPLE}</p><p>{EN_SAMPLE}</p>{extra}"


def _fr_body(extra=""):
    return f"<p>{FR_SAMPLE}</p><p>{FR_SAMPLE}</p>{extra}"


@pytest.fixture
def fixture_site(tmp_path, langid_models):
    site = tmp_path / "site"
    (site / "en").mkdir(parents=True)
    (site / "fr").mkdir()
    # three true pairs: two by suffix naming, one by path segment
    (site / "index.html").write_text(_page(_en_body(), anchor="version française"))
    (site / "index_f.html").write_text(_page(_fr_body(), anchor="english version"))
    (site / "news.html").write_text(_page(_en_body()))
    (site / "news_f.html").write_text(_page(_fr_body()))
    (site / "en" / "about.html").write_text(_page(_en_body()))
    (site / "fr" / "about.html").write_text(_page(_fr_body()))
    # near-miss decoys: name matches but content diverges badly
    (site / "press.html").write_text(_page(_en_body()))
    (site / "press_f.html").write_text(
        _page("<p>Court.</p>"))  # fails length/min-text
    # wrong-language decoy: names match, structure matches, language does not
    (site / "cat.html").write_text(_page(_en_body()))
    (site / "cat_f.html").write_text(_page(_en_body()))
    return site


@pytest.fixture
def miner_config(langid_models):
    return MinerConfig(
        source_language="en",
        target_language="fr",
        rules=NamingRules(
            source_suffixes=[""],
            target_suffixes=["_f"],
            path_segment_pairs=[("en", "fr")],
        ),
        langid_models=langid_models,
    )


class TestMine:
    def test_fixture_site_exact_pairs(self, fixture_site, miner_config):
        pairs, report = mine(fixture_site, miner_config)
        assert sorted(pairs) == [
            ("en/about.html", "fr/about.html"),
            ("index.html", "index_f.html"),
            ("news.html", "news_f.html"),
        ]
        assert report.accepted == 3
        assert report.pages_scanned == 10
        assert sum(report.rejections.values()) == report.candidates - 3

    def test_empty_directory(self, tmp_path, miner_config):
        empty = tmp_path / "empty"
        empty.mkdir()
        pairs, report = mine(empty, miner_config)
        assert pairs == []
        assert report.pages_scanned == 0
        assert report.candidates == 0

    def test_anchor_gate_blocks_plain_sites(self, tmp_path, miner_config):
        site = tmp_path / "noanchor"
        site.mkdir()
        (site / "a.html").write_text(_page(_en_body()))
        (site / "a_f.html").write_text(_page(_fr_body()))
        miner_config.require_anchor = True
        pairs, report = mine(site, miner_config)
        assert pairs == []
        assert report.rejections["no-candidate-anchor"] == 1

    def test_anchor_gate_passes_fixture(self, fixture_site, miner_config):
        miner_config.require_anchor = True
        pairs, _report = mine(fixture_site, miner_config)
        assert len(pairs) == 3

    def test_unreadable_root(self, miner_config):
        with pytest.raises(IOError):
            mine("/nonexistent/path/of/doom", miner_config)

    def test_filters_idempotent_on_accepted_pairs(self, fixture_site, miner_config):
        pairs, _ = mine(fixture_site, miner_config)
        for source, target in pairs:
            pair = PairCandidate(
                miner.profile_page(fixture_site / source),
                miner.profile_page(fixture_site / target))
            first = miner.verify_pair(pair, miner_config)
            assert first.accepted
            again = miner.verify_pair(pair, miner_config)
            assert again.accepted and again.reason == ""

    def test_optional_alignment_filter(self, fixture_site, miner_config):
        # parallel fixture pages align 1-1 throughout, so the extra
        # filter keeps them; a scrambled pair falls below the ratio
        miner_config.alignment_filter = True
        pairs, _ = mine(fixture_site, miner_config)
        assert len(pairs) == 3
        good = PairCandidate(
            miner.profile_page(fixture_site / "index.html"),
            miner.profile_page(fixture_site / "index_f.html"))
        assert miner.verify_pair(good, miner_config).accepted
        miner_config.alignment_min_ratio = 1.1  # unreachable on purpose
        bad = PairCandidate(
            miner.profile_page(fixture_site / "index.html"),
            miner.profile_page(fixture_site / "index_f.html"))
        result = miner.verify_pair(bad, miner_config)
        assert result.reason == "alignment-quality"
