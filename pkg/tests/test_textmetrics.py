import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arena_surrogate.core import Passage, QueryRecord
from arena_surrogate.simkit import brute_force_lcs
from arena_surrogate.textmetrics import (ALL_FEATURES, PRESETS, FeatureError, FeatureName, FeatureRecord,
                                         LanguageProfile, TextTooShort, aggregate_features, bleu, build_profile,
                                         citation_metrics, corpus_text, detect_language, ingest_external_scores,
                                         lcs_tokens, load_profiles, make_response, parse_citations,
                                         parse_rag_output, response_features, rouge_l, supported_languages, tokenize)

from citation_cases import CASES


class TestParsing:
    def test_both_markers(self):
        assert parse_rag_output("##Reason: because X ##Answer: Y") == ("because X", "Y")

    def test_no_markers(self):
        assert parse_rag_output("no markers at all") == (None, "no markers at all")

    def test_answer_only(self):
        assert parse_rag_output("##Answer: Y only") == (None, "Y only")

    def test_reason_only(self):
        assert parse_rag_output("##Reason: just thinking") == ("just thinking", None)

    def test_case_and_whitespace_tolerant(self):
        assert parse_rag_output("  ## reason : r\n##ANSWER: a") == ("r", "a")

    def test_first_answer_after_reason(self):
        assert parse_rag_output("##Reason: r ##Answer: a ##Answer: b") == ("r", "a ##Answer: b")

    @pytest.mark.parametrize("text,expected", [
        ("see [12#3] and [12#3] and [4]", ["12#3", "4"]),
        ("", []),
        ("text [1#1], [2#9]. More [1#1]", ["1#1", "2#9"]),
        ("no brackets here", []),
        ("[abc] [1#] [#2] [ 3 ]", []),
    ])
    def test_citations(self, text, expected):
        assert parse_citations(text) == expected


class TestCitationMetrics:
    @pytest.mark.parametrize("relevant,cited,k,recall,ap", CASES)
    def test_hand_enumerated(self, relevant, cited, k, recall, ap):
        r, a = citation_metrics(cited, relevant, k)
        assert r == pytest.approx(float(recall), abs=1e-12)
        assert a == pytest.approx(float(ap), abs=1e-12)

    def test_map_example_value(self):
        assert citation_metrics(["p3", "p1", "p2"], {"p1", "p2"})[1] == pytest.approx(0.5833, abs=1e-4)

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            citation_metrics(["p1"], {"p1"}, 0)

    @given(st.permutations([f"p{i}" for i in range(15)]),
           st.sets(st.sampled_from([f"p{i}" for i in range(15)]), min_size=1),
           st.lists(st.sampled_from([f"p{i}" for i in range(15)] + ["zz"]), max_size=5))
    def test_invariant_beyond_k(self, order, relevant, extra):
        head = list(order[:10])
        assert citation_metrics(head + extra, relevant) == citation_metrics(head, relevant)
        r, a = citation_metrics(order, relevant)
        assert 0 <= r <= 1 and 0 <= a <= 1


class TestOverlap:
    def test_identical(self):
        assert rouge_l("the cat sat on the mat", "the cat sat on the mat") == 1.0

    def test_partial(self):
        assert rouge_l("a c d", "a b c d") == pytest.approx(6 / 7)

    def test_empty(self):
        assert rouge_l("", "x") == 0.0
        assert bleu("", "x") == 0.0

    def test_bleu_identical(self):
        s = " ".join(f"w{i}" for i in range(10))
        assert bleu(s, s) == pytest.approx(1.0)

    def test_bleu_short_candidate_hand_computed(self):
        # p1 = 3/3; smoothed p2 = (2+1)/(2+1); p3 = (1+1)/(1+1); p4 = (0+1)/(0+1); BP = exp(1 - 4/3)
        assert bleu("the cat sat", "the cat sat down") == pytest.approx(math.exp(1 - 4 / 3))

    def test_bleu_smoothing_keeps_score_positive(self):
        assert bleu("one two three four five", "one two six four five three seven eight") > 0

    def test_bleu_hand_computed_partial(self):
        # cand: a b c d e ; ref: a b x d e f
        # p1 = 4/5, p2 = (2+1)/(4+1), p3 = (0+1)/(3+1), p4 = (0+1)/(2+1), BP = exp(1 - 6/5)
        expected = math.exp(1 - 6 / 5) * (4 / 5 * 3 / 5 * 1 / 4 * 1 / 3) ** 0.25
        assert bleu("a b c d e", "a b x d e f") == pytest.approx(expected)

    @given(st.text(max_size=40), st.text(max_size=40))
    def test_ranges_and_symmetry(self, a, b):
        r = rouge_l(a, b)
        assert 0 <= r <= 1
        assert r == pytest.approx(rouge_l(b, a))
        assert 0 <= bleu(a, b) <= 1 + 1e-12

    @given(st.lists(st.sampled_from("abc"), max_size=7), st.lists(st.sampled_from("abc"), max_size=7))
    def test_lcs_matches_recursive_definition(self, a, b):
        assert lcs_tokens(a, b) == brute_force_lcs(a, b)

    def test_tokenize_cjk_and_thai(self):
        assert tokenize("東京タワー") == ["東", "京", "タ", "ワ", "ー"]
        assert tokenize("Hello, World! 42") == ["hello", "world", "42"]
        toks = tokenize("ภาษาไทย")
        assert "".join(toks) == "ภาษาไทย" and all(not t[0] in "ัิี็่" for t in toks)

    def test_tokenize_nfc(self):
        assert tokenize("café") == tokenize("café")

    def test_whitespace_mode(self):
        assert tokenize("A, b", "whitespace") == ["a,", "b"]
        with pytest.raises(ValueError):
            tokenize("x", "nope")


class TestLanguageId:
    def test_english_fixture(self):
        probs = detect_language(corpus_text("en")[:400])
        assert max(probs, key=probs.get) == "en"
        assert sum(probs.values()) == pytest.approx(1.0)

    def test_two_profiles(self):
        profiles = [p for p in load_profiles() if p.language in ("en", "fr")]
        probs = detect_language(corpus_text("fr")[:300], profiles)
        assert probs["fr"] > probs["en"]

    @pytest.mark.parametrize("lang", sorted(supported_languages()))
    def test_every_bundled_language_self_detects(self, lang):
        probs = detect_language(corpus_text(lang))
        assert max(probs, key=probs.get) == lang

    def test_too_short(self):
        with pytest.raises(TextTooShort):
            detect_language("hello")

    def test_needs_two_profiles(self):
        with pytest.raises(ValueError):
            detect_language("a sufficiently long piece of text here", load_profiles()[:1])

    def test_profile_roundtrip_and_norm(self):
        p = build_profile("xx", "abc abd abe")
        q = LanguageProfile.from_json(p.to_json())
        assert q.trigram_weights == pytest.approx(p.trigram_weights)
        assert math.isclose(sum(v * v for v in p.trigram_weights.values()), 1.0)
        assert all(v >= 0 for v in p.trigram_weights.values())

    def test_bundled_profiles_match_corpora(self, tmp_path):
        from arena_surrogate.textmetrics import rebuild_bundled_profiles
        rebuild_bundled_profiles(tmp_path)
        for p in load_profiles():
            rebuilt = LanguageProfile.from_json(__import__("json").loads((tmp_path / f"{p.language}.json").read_text()))
            assert rebuilt.trigram_weights == pytest.approx(p.trigram_weights)


class TestFeatures:
    def test_enum_and_presets(self):
        assert [f.value for f in ALL_FEATURES] == [
            "lang_target", "lang_english", "citation_recall10", "citation_map10", "support_entailment",
            "support_neutral", "reranker_score", "answer_rouge_l", "answer_bleu", "llm_answer_overlap",
            "llm_fluency"]
        assert {k: len(v) for k, v in PRESETS.items()} == {"all11": 11, "no_llm9": 9, "no_lowcorr7": 7,
                                                           "only_llm2": 2}

    def test_ingest_accepts_and_rejects(self):
        ok = ingest_external_scores([{"model": "m1", "query_id": "q1", "feature": "llm_fluency", "value": 4},
                                     {"model": "m1", "query_id": "q1", "feature": "support_entailment",
                                      "value": 0.73},
                                     {"model": "m1", "query_id": "q1", "feature": "reranker_score", "value": 1.7}])
        assert [r.value for r in ok] == [4.0, 0.73, 1.7]
        for bad in ({"feature": "llm_fluency", "value": 6}, {"feature": "llm_fluency", "value": 3.5},
                    {"feature": "nonsense", "value": 1}, {"feature": "answer_bleu", "value": 0.5},
                    {"feature": "support_neutral", "value": -0.1}, {"feature": "reranker_score", "value": "x"}):
            with pytest.raises(FeatureError):
                ingest_external_scores([{"model": "m", "query_id": "q", **bad}])

    def test_aggregate_mean_and_missing(self):
        recs = [FeatureRecord("m", "q1", FeatureName.ANSWER_ROUGE_L, 0.2),
                FeatureRecord("m", "q2", FeatureName.ANSWER_ROUGE_L, 0.4)]
        (v,) = aggregate_features(recs, ["m"], [FeatureName.ANSWER_ROUGE_L.value], queries=["q1", "q2", "q3"])
        assert v.values[FeatureName.ANSWER_ROUGE_L] == pytest.approx(0.3)
        assert v.missing[FeatureName.ANSWER_ROUGE_L] == 1

    def test_aggregate_missing_feature_is_error(self):
        recs = [FeatureRecord("m", "q1", FeatureName.ANSWER_ROUGE_L, 0.2)]
        with pytest.raises(FeatureError):
            aggregate_features(recs, ["m"], "all11")

    def test_aggregate_order_free(self, rng):
        recs = [FeatureRecord(m, f"q{q}", f, float(rng.random())) for m in ("a", "b") for q in range(5)
                for f in ALL_FEATURES if f not in (FeatureName.LLM_FLUENCY, FeatureName.LLM_ANSWER_OVERLAP)]
        subset = "no_llm9"
        base = aggregate_features(recs, ["a", "b"], subset)
        shuffled = [recs[i] for i in rng.permutation(len(recs))]
        again = aggregate_features(shuffled, ["a", "b"], subset)
        for u, v in zip(base, again):
            for f in u.values:
                assert u.values[f] == pytest.approx(v.values[f], abs=1e-15)

    @pytest.mark.parametrize("preset,dropped", [
        ("only_llm2", set(ALL_FEATURES) - {FeatureName.LLM_ANSWER_OVERLAP, FeatureName.LLM_FLUENCY}),
        ("no_lowcorr7", {FeatureName.LANG_TARGET, FeatureName.LANG_ENGLISH, FeatureName.SUPPORT_ENTAILMENT,
                         FeatureName.SUPPORT_NEUTRAL}),
    ])
    def test_subset_vectors(self, preset, dropped):
        recs = [FeatureRecord("m", "q", f, 1.0 if f.value.startswith("llm") else 0.5) for f in ALL_FEATURES]
        (v,) = aggregate_features(recs, ["m"], preset)
        assert set(v.values) == set(ALL_FEATURES) - dropped

    def test_response_features(self):
        q = QueryRecord("q1", "en", "question", (Passage("10#1", "a", True), Passage("10#2", "b", False)))
        raw = ("##Reason: The river flows through the old town before it reaches the sea [10#1] [99#9]. "
               "##Answer: The river reaches the sea.")
        resp = make_response("m", q, raw)
        assert resp.cited_ids == ("10#1", "99#9") and resp.unknown_cited == ("99#9",)
        recs, flags = response_features(q, resp, "The river reaches the sea.")
        got = {r.feature: r.value for r in recs}
        assert got[FeatureName.ANSWER_ROUGE_L] == 1.0
        assert got[FeatureName.CITATION_RECALL10] == 1.0
        assert got[FeatureName.LANG_TARGET] > 0.9
        assert flags == ["unknown_citations"]

    def test_short_text_flagged(self):
        q = QueryRecord("q1", "en", "question", (Passage("1", "a", True),))
        recs, flags = response_features(q, make_response("m", q, "##Answer: yes"), None)
        got = {r.feature: r.value for r in recs}
        assert got[FeatureName.LANG_TARGET] == 0.0 and got[FeatureName.LANG_ENGLISH] == 0.0
        assert "text_too_short" in flags and "no_gold_answer" in flags
        assert FeatureName.ANSWER_BLEU not in got
