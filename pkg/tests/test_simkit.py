import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arena_surrogate.arena import PairCounts, fit_bt, tally
from arena_surrogate.core import Verdict
from arena_surrogate.simkit import (BASELINE_MODELS, SyntheticWorld, brute_force_bt, brute_force_lcs, brute_force_tau,
                                    evenly_spaced_logits, exhaustive_lcs_check, generate_features,
                                    generate_judgments, lcs_by_enumeration, synthetic_corpus)
from arena_surrogate.surrogate import kendall_tau, surrogate_pipeline
from arena_surrogate.textmetrics import ALL_FEATURES, FEATURE_RANGES, lcs_tokens


def _sigma(x):
    return 1 / (1 + math.exp(-x))


def _win_rate(logits, n=10_000, seed=0, p_tie=0.0):
    world = SyntheticWorld(2, logits, n_queries=n, seed=seed, p_tie=p_tie)
    js = generate_judgments(world)
    wins = sum(j.verdict is Verdict.WIN_A for j in js)
    ties = sum(j.verdict is Verdict.TIE for j in js)
    return wins / n, ties / n


class TestJudgments:
    def test_pairing_count(self):
        world = SyntheticWorld(19, evenly_spaced_logits(19), n_queries=100)
        js = generate_judgments(world)
        assert len(js) == 171 * 100
        assert len({(j.query_id, j.model_a, j.model_b) for j in js}) == 171 * 100

    @pytest.mark.parametrize("logits", [(0.0, 0.0), (2.0, -2.0)])
    def test_win_rate_within_three_sigma(self, logits):
        p = _sigma(logits[0] - logits[1])
        rate, _ = _win_rate(logits)
        assert abs(rate - p) <= 3 * math.sqrt(p * (1 - p) / 10_000)

    def test_tie_mass(self):
        rate, ties = _win_rate((1.0, -1.0), p_tie=0.2)
        p = 0.8 * _sigma(2.0)
        assert abs(rate - p) <= 3 * math.sqrt(p * (1 - p) / 10_000)
        assert abs(ties - 0.2) <= 3 * math.sqrt(0.16 / 10_000)

    def test_translation_invariance(self):
        a = SyntheticWorld(4, [1.0, 0.5, -0.2, -1.3], n_queries=30, seed=5)
        b = SyntheticWorld(4, [v + 7.25 for v in [1.0, 0.5, -0.2, -1.3]], n_queries=30, seed=5)
        assert generate_judgments(a) == generate_judgments(b)

    def test_deterministic_per_seed(self):
        w = lambda s: SyntheticWorld(5, evenly_spaced_logits(5), n_queries=20, seed=s)
        assert generate_judgments(w(1)) == generate_judgments(w(1))
        assert generate_judgments(w(1)) != generate_judgments(w(2))

    def test_needs_two_models(self):
        with pytest.raises(ValueError):
            generate_judgments(SyntheticWorld(1, [0.0]))


class TestFeatures:
    def test_no_signal_no_noise(self):
        world = SyntheticWorld(6, evenly_spaced_logits(6), feature_spec={f: (0.0, 0.0) for f in ALL_FEATURES})
        vecs = generate_features(world)
        assert all(v.values == vecs[0].values for v in vecs)

    def test_pure_signal_is_monotone(self):
        world = SyntheticWorld(19, evenly_spaced_logits(19), feature_spec={f: (1.0, 0.0) for f in ALL_FEATURES})
        vecs = generate_features(world)
        for f in ALL_FEATURES:
            col = [v.values[f] for v in vecs]
            assert all(x > y for x, y in zip(col, col[1:])), f

    def test_ranges_clamped(self):
        world = SyntheticWorld(19, evenly_spaced_logits(19), feature_spec={f: (5.0, 10.0) for f in ALL_FEATURES})
        for v in generate_features(world):
            for f, x in v.values.items():
                lo, hi = FEATURE_RANGES[f]
                assert lo <= x <= hi

    def test_mixed_spec_band(self):
        # pre-registered band: every seed tau >= 0.75, mean >= 0.85
        spec = {f: ((1.0, 0.5) if k % 2 == 0 else (0.0, 1.0)) for k, f in enumerate(ALL_FEATURES)}
        taus = []
        for s in range(10):
            w = SyntheticWorld(19, evenly_spaced_logits(19), feature_spec=spec, seed=s)
            taus.append(surrogate_pipeline(generate_features(w), w.truth(), seed=s).tau_vs_bt)
        assert min(taus) >= 0.75 and np.mean(taus) >= 0.85


class TestWorld:
    def test_centred_and_named(self):
        w = SyntheticWorld(19, [v + 3 for v in evenly_spaced_logits(19)])
        assert abs(sum(w.true_logits)) < 1e-12
        assert w.model_names == BASELINE_MODELS
        assert SyntheticWorld(3, [0, 1, 2]).model_names == ("model-00", "model-01", "model-02")

    def test_json_roundtrip(self):
        w = SyntheticWorld(4, [0.3, 0.1, -0.1, -0.3], n_queries=7, p_tie=0.1, seed=9,
                           feature_spec={ALL_FEATURES[0]: (0.5, 0.2)})
        assert SyntheticWorld.from_json(w.to_json()) == w

    def test_minimal_json(self):
        w = SyntheticWorld.from_json({"n_models": 3, "seed": 2})
        assert w.n_queries == 100 and w.true_logits == tuple(evenly_spaced_logits(3))

    @pytest.mark.parametrize("kw", [{"true_logits": [0.0]}, {"p_tie": 1.0},
                                    {"feature_spec": {ALL_FEATURES[0]: (1.0, -0.1)}},
                                    {"model_names": ["x", "x"]}])
    def test_validation(self, kw):
        base = {"n_models": 2, "true_logits": [0.0, 1.0]}
        with pytest.raises(ValueError):
            SyntheticWorld(**{**base, **kw})


def _counts(wins):
    w = np.asarray(wins, dtype=float)
    return PairCounts(tuple(f"m{i}" for i in range(len(w))), w)


class TestBruteForceBt:
    def test_two_models_closed_form(self):
        theta = brute_force_bt(_counts([[0, 3], [1, 0]]))
        assert abs((theta[0] - theta[1]) - math.log(3)) <= 0.01

    def test_symmetric(self):
        assert np.all(brute_force_bt(_counts([[0, 2, 2], [2, 0, 2], [2, 2, 0]])) == 0)

    def test_matches_fit_bt(self):
        c = _counts([[0, 3, 2], [1, 0, 2], [2, 2, 0]])
        ours = fit_bt(c, reg=0.0).logits
        np.testing.assert_allclose(brute_force_bt(c, grid_step=0.01, grid_radius=1.5), ours, atol=0.01 + 1e-6)

    def test_too_many_models(self):
        with pytest.raises(ValueError):
            brute_force_bt(_counts(np.ones((5, 5))))


class TestBruteForceLcs:
    def test_examples(self):
        assert brute_force_lcs("abcab", "abcab") == 5
        assert brute_force_lcs("abc", "xyz") == 0
        assert brute_force_lcs("abcbdab", "bdcaba") == 4

    def test_too_long(self):
        with pytest.raises(ValueError):
            brute_force_lcs("a" * 13, "a")

    @given(st.lists(st.integers(0, 2), max_size=8), st.lists(st.integers(0, 2), max_size=8))
    def test_agrees_with_dp(self, a, b):
        assert brute_force_lcs(a, b) == lcs_tokens(a, b) == lcs_by_enumeration(a, b)

    def test_exhaustive_short(self):
        pairs, mismatches = exhaustive_lcs_check(max_len=5)
        assert pairs == (3 ** 6 - 1) // 2 * ((3 ** 6 - 1) // 2) and mismatches == 0


class TestBruteForceTau:
    def test_examples(self):
        assert brute_force_tau([1, 2, 3], [1, 2, 3]) == 1
        assert brute_force_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3)

    def test_too_long(self):
        with pytest.raises(ValueError):
            brute_force_tau(list(range(10)), list(range(10)))

    @pytest.mark.parametrize("n", range(2, 8))
    def test_exhaustive_permutations(self, n):
        # tau(a, b) depends only on b relative to a, so fixing a = identity is exhaustive
        ident = list(range(n))
        for perm in itertools.permutations(range(n)):
            assert kendall_tau(ident, perm) == brute_force_tau(ident, perm)


class TestCorpus:
    def test_shape_and_determinism(self):
        w = SyntheticWorld(4, [1.5, 0.5, -0.5, -1.5], n_queries=6, seed=3)
        c = synthetic_corpus(w)
        assert len(c.queries) == 6 and len(c.gold) == 6 and len(c.responses) == 24
        assert len(c.external_scores) == 4 * 6 * 5
        assert c == synthetic_corpus(w)
        for q in c.queries:
            assert sum(p["relevant"] for p in q["passages"]) == 2

    def test_quality_follows_strength(self):
        from arena_surrogate.textmetrics import tokenize
        w = SyntheticWorld(2, [3.0, -3.0], n_queries=40, seed=1)
        c = synthetic_corpus(w)
        gold = {g["query_id"]: set(tokenize(g["answer"])) for g in c.gold}
        hit = {m: 0 for m in w.model_names}
        for r in c.responses:
            hit[r["model"]] += len(gold[r["query_id"]] & set(tokenize(r["output"].split("##Answer:")[1])))
        strong, weak = w.model_names
        assert hit[strong] > 2 * hit[weak]

    def test_bad_passage_counts(self):
        with pytest.raises(ValueError):
            synthetic_corpus(SyntheticWorld(2, [0, 1]), n_passages=2, n_relevant=2)
