import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from arena_surrogate import kernels
from arena_surrogate.simkit import (BASELINE_MODELS, SyntheticWorld, brute_force_tau, evenly_spaced_logits,
                                    generate_features)
from arena_surrogate.surrogate import (DatasetError, ForestParams, HoldoutProtocol, RegressionForest, RegressionTree,
                                       build_dataset, feature_importance, fit_forest, kendall_tau, predict,
                                       r_squared, surrogate_pipeline, train_forest, train_linear)
from arena_surrogate.textmetrics import ALL_FEATURES, FeatureName, FeatureVector

NAMES = ("f0", "f1", "f2", "f3", "f4")


def _leaf_tree(value):
    return RegressionTree(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]), np.array([value]),
                          np.zeros(1))


class TestForest:
    def test_constant_targets(self, rng):
        X = rng.random((20, 3))
        f = fit_forest(X, np.full(20, 2.5), NAMES[:3], ForestParams(n_trees=10))
        assert np.all(f.predict(rng.random((50, 3))) == 2.5)
        assert all(v == 0 for v in feature_importance(f).values())

    def test_learns_single_signal(self, rng):
        X = rng.random((200, 5))
        f = fit_forest(X, X[:, 1].copy(), NAMES, ForestParams(n_trees=50), seed=3)
        Xh = rng.random((100, 5))
        assert r_squared(Xh[:, 1], f.predict(Xh)) >= 0.9
        imp = feature_importance(f)
        assert max(imp, key=imp.get) == "f1" and imp["f1"] > 0.75
        assert all(v < 0.1 for k, v in imp.items() if k != "f1")
        assert sum(imp.values()) == pytest.approx(1.0)

    def test_importance_step_signal(self, rng):
        X = rng.random((200, 5))
        y = (X[:, 2] > 0.5).astype(float)
        full = feature_importance(fit_forest(X, y, NAMES, ForestParams(n_trees=50, feature_fraction=1.0), seed=3))
        assert full["f2"] == pytest.approx(1.0, abs=1e-12)
        sub = feature_importance(fit_forest(X, y, NAMES, ForestParams(n_trees=50), seed=3))
        assert max(sub, key=sub.get) == "f2" and sub["f2"] > 0.8

    def test_stump(self):
        f = fit_forest(np.array([[0.0], [1.0]]), np.array([1.0, 3.0]), ["x"],
                       ForestParams(n_trees=1, max_depth=1, feature_fraction=1.0, bootstrap=False))
        t = f.trees[0]
        assert t.feature[0] == 0 and t.threshold[0] == 0.5
        assert sorted(t.value[t.feature < 0]) == [1.0, 3.0]
        assert predict(f, [0.2]) == 1.0 and predict(f, [0.9]) == 3.0

    def test_mean_of_trees(self):
        f = RegressionForest([_leaf_tree(1.0), _leaf_tree(3.0)], ("x",), ForestParams(n_trees=2), 0)
        assert predict(f, [0.0]) == 2.0

    def test_dimension_mismatch(self, rng):
        f = fit_forest(rng.random((10, 3)), rng.random(10), NAMES[:3], ForestParams(n_trees=2))
        with pytest.raises(ValueError):
            f.predict(rng.random((4, 2)))

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            fit_forest(np.zeros((1, 2)), np.zeros(1), NAMES[:2])

    def test_params_validation(self):
        for kw in ({"n_trees": 0}, {"min_leaf": 0}, {"max_depth": -1}, {"feature_fraction": 0}):
            with pytest.raises(ValueError):
                ForestParams(**kw)
        assert ForestParams().m_try(11) == 4 and ForestParams().m_try(9) == 3 and ForestParams().m_try(2) == 1

    def test_leaves_hold_training_means(self, rng):
        X = rng.random((30, 4))
        y = rng.standard_normal(30)
        f = fit_forest(X, y, NAMES[:4], ForestParams(n_trees=1, bootstrap=False, min_leaf=3, feature_fraction=1.0))
        t = f.trees[0]
        leaf_of = np.zeros(30, dtype=int)
        for i in range(30):
            k = 0
            while t.feature[k] >= 0:
                k = t.left[k] if X[i, t.feature[k]] <= t.threshold[k] else t.right[k]
            leaf_of[i] = k
        for k in np.unique(leaf_of):
            assert t.value[k] == pytest.approx(y[leaf_of == k].mean(), abs=1e-12)
            assert (leaf_of == k).sum() >= 3
        reachable = set(np.unique(leaf_of))
        assert reachable == set(np.flatnonzero(t.feature < 0))

    def test_deterministic_and_roundtrip(self, rng):
        X, y = rng.random((17, 11)), rng.standard_normal(17)
        a = fit_forest(X, y, NAMES * 2 + ("x",), seed=5)
        b = fit_forest(X, y, NAMES * 2 + ("x",), seed=5)
        assert a.dumps() == b.dumps()
        assert a.dumps() != fit_forest(X, y, NAMES * 2 + ("x",), seed=6).dumps()
        c = RegressionForest.from_json(a.to_json())
        Xq = rng.random((40, 11))
        assert np.array_equal(a.predict(Xq), c.predict(Xq))
        assert c.dumps() == a.dumps()
        with pytest.raises(ValueError):
            RegressionForest.from_json({**a.to_json(), "version": 99})

    def test_tree_order_and_range(self, rng):
        X, y = rng.random((17, 5)), rng.standard_normal(17)
        f = fit_forest(X, y, NAMES, ForestParams(n_trees=20))
        Xq = rng.random((100, 5)) * 3 - 1
        p = f.predict(Xq)
        g = RegressionForest(list(reversed(f.trees)), f.feature_names, f.params, f.seed)
        np.testing.assert_allclose(g.predict(Xq), p, rtol=0, atol=1e-12)
        assert p.min() >= y.min() - 1e-12 and p.max() <= y.max() + 1e-12

    def test_backends_predict_identically(self, rng, monkeypatch):
        X, y = rng.random((17, 11)), rng.standard_normal(17)
        Xq = rng.random((100, 11))
        monkeypatch.setattr(kernels, "build_tree", kernels.build_tree_numpy)
        ref = fit_forest(X, y, NAMES * 2 + ("x",), ForestParams(n_trees=20), seed=1)
        if not __import__("arena_surrogate._backend", fromlist=["x"]).HAVE_NUMBA:
            pytest.skip("numba not installed")
        monkeypatch.setattr(kernels, "build_tree", kernels.build_tree_numba)
        fast = fit_forest(X, y, NAMES * 2 + ("x",), ForestParams(n_trees=20), seed=1)
        assert np.array_equal(ref.predict(Xq), fast.predict(Xq))

    def test_oob_predictions(self, rng):
        X, y = rng.random((17, 3)), rng.standard_normal(17)
        f = fit_forest(X, y, NAMES[:3], ForestParams(n_trees=100))
        oob = f.oob_predict()
        assert oob.shape == (17,) and np.isfinite(oob).all()
        assert not np.allclose(oob, f.predict(X))
        with pytest.raises(ValueError):
            RegressionForest.from_json(f.to_json()).oob_predict()


class TestKendall:
    def test_identical_and_reversed(self):
        assert kendall_tau([1, 2, 3, 4, 5], [1, 2, 3, 4, 5]) == 1.0
        assert kendall_tau([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]) == -1.0

    def test_single_swap(self):
        assert kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(4 / 6)

    def test_mappings(self):
        assert kendall_tau({"a": 1, "b": 2}, {"b": 5, "a": 0}) == 1.0
        with pytest.raises(ValueError):
            kendall_tau({"a": 1, "b": 2}, {"a": 1, "c": 2})
        with pytest.raises(TypeError):
            kendall_tau({"a": 1}, [1])

    def test_all_tied_is_nan(self):
        assert np.isnan(kendall_tau([1, 1, 1], [1, 2, 3]))

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=2, max_size=9))
    def test_tau_b_with_ties(self, pairs):
        x, y = zip(*pairs)
        ours, oracle = kendall_tau(x, y), brute_force_tau(x, y)
        ref = stats.kendalltau(x, y).statistic
        if np.isnan(oracle):
            assert np.isnan(ours)
        else:
            assert ours == oracle
            assert ours == pytest.approx(ref, abs=1e-12)

    @given(st.permutations(range(8)), st.permutations(range(8)))
    def test_symmetric(self, a, b):
        assert kendall_tau(a, b) == kendall_tau(b, a)


class TestRSquared:
    def test_examples(self):
        assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0
        assert r_squared([1, 2, 3], [2, 2, 2]) == 0.0
        assert r_squared([1, 2, 3], [1, 2, 4]) == pytest.approx(0.5)

    @pytest.mark.parametrize("a,b", [([1, 1], [1, 2]), ([1, 2], [1]), ([1], [1])])
    def test_errors(self, a, b):
        with pytest.raises(ValueError):
            r_squared(a, b)


class TestLinear:
    def test_exact_line(self):
        x = np.linspace(0, 5, 20)[:, None]
        m = train_linear(x, 2 * x[:, 0] + 1)
        assert m.weights[0] == pytest.approx(2, abs=1e-9) and m.intercept == pytest.approx(1, abs=1e-9)

    def test_two_points(self):
        m = train_linear([[0.0], [2.0]], [1.0, 5.0])
        np.testing.assert_allclose(m.predict([[0.0], [2.0], [1.0]]), [1, 5, 3], atol=1e-6)

    def test_noise_target(self, rng):
        X = rng.standard_normal((10_000, 3))
        y = rng.standard_normal(10_000)
        assert r_squared(y, train_linear(X, y).predict(X)) < 0.1

    def test_degenerate(self):
        with pytest.raises(ValueError):
            train_linear([[1.0, 2.0]], [1.0])
        with pytest.raises(np.linalg.LinAlgError):
            train_linear(np.ones((10, 2)) * 1e6, np.arange(10.0))


def _vectors(n=19, seed=0, names=None):
    world = SyntheticWorld(n, evenly_spaced_logits(n), seed=seed, model_names=names)
    return world, generate_features(world)


class TestDataset:
    def test_standard_split(self):
        world, vecs = _vectors()
        train, hold = build_dataset(vecs, world.truth(), HoldoutProtocol())
        assert len(train) == 17 and len(hold) == 2
        assert set(hold.model_ids) == {"Gemma-1.1 (2B)", "Llama-3 (70B)"}
        assert train.feature_names == ALL_FEATURES
        assert not set(train.model_ids) & set(hold.model_ids)

    def test_empty_holdout(self):
        world, vecs = _vectors()
        train, hold = build_dataset(vecs, world.truth(), HoldoutProtocol(frozenset()))
        assert len(train) == 19 and hold is None

    def test_missing_vector(self):
        world, vecs = _vectors()
        with pytest.raises(DatasetError, match="GPT-4o"):
            build_dataset(vecs[1:], world.truth())

    def test_mismatched_features(self):
        world, vecs = _vectors()
        v0 = vecs[0]
        vecs[0] = FeatureVector(v0.model_id, {k: v for k, v in v0.values.items()
                                              if k is not FeatureName.LLM_FLUENCY}, v0.n_queries)
        with pytest.raises(DatasetError):
            build_dataset(vecs, world.truth())

    def test_unknown_holdout(self):
        world, vecs = _vectors()
        with pytest.raises(DatasetError, match="nobody"):
            build_dataset(vecs, world.truth(), HoldoutProtocol(frozenset({"nobody"})))

    def test_feature_subset_order(self):
        world, vecs = _vectors()
        train, _ = build_dataset(vecs, world.truth(), features=[FeatureName.LLM_FLUENCY, FeatureName.LANG_TARGET])
        assert train.feature_names == (FeatureName.LANG_TARGET, FeatureName.LLM_FLUENCY)
        assert train_forest(train, ForestParams(n_trees=3)).feature_names == ("lang_target", "llm_fluency")


class TestPipeline:
    def test_informative_features(self):
        world, vecs = _vectors(seed=1)
        res = surrogate_pipeline(vecs, world.truth(), seed=1)
        assert res.tau_vs_bt >= 0.85
        assert res.holdout_r2 is not None and res.holdout_r2 > 0.5
        assert len(res.leaderboard) == 19 and not res.warnings

    def test_empty_holdout_warns(self):
        world, vecs = _vectors()
        res = surrogate_pipeline(vecs, world.truth(), HoldoutProtocol(frozenset()), ForestParams(n_trees=20))
        assert res.holdout_r2 is None and any("empty holdout" in w for w in res.warnings)
        assert len(res.leaderboard) == 19

    def test_monotone_transform_keeps_ranking(self):
        from arena_surrogate.arena import to_leaderboard
        world, vecs = _vectors()
        res = surrogate_pipeline(vecs, world.truth(), params=ForestParams(n_trees=20))
        warped = to_leaderboard({m: np.exp(3 * v) - 7 for m, v in res.predictions.items()})
        assert warped.models() == res.leaderboard.models()

    def test_prediction_modes(self):
        world, vecs = _vectors()
        oob = surrogate_pipeline(vecs, world.truth(), params=ForestParams(n_trees=30))
        ins = surrogate_pipeline(vecs, world.truth(), params=ForestParams(n_trees=30), train_predictions="in_sample")
        hold = ("Gemma-1.1 (2B)", "Llama-3 (70B)")
        assert all(oob.predictions[m] == ins.predictions[m] for m in hold)
        assert any(oob.predictions[m] != ins.predictions[m] for m in BASELINE_MODELS if m not in hold)
        with pytest.raises(ValueError):
            surrogate_pipeline(vecs, world.truth(), train_predictions="bogus")

    def test_per_tournament_needs_btfit(self):
        world, vecs = _vectors()
        with pytest.raises(TypeError):
            surrogate_pipeline(vecs, world.truth(), per_tournament=True)
