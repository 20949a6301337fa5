import numpy as np
import pytest

from multistep_ensembles.errors import ConfigError, InsufficientDataError, RankWarning, ShapeError
from multistep_ensembles.learners import (LearnerSpec, default_pool, fit_knn, fit_learner,
                                          fit_linear, fit_projection, fit_tree_family, format_pool,
                                          grow_tree, parse_pool, predict)
from multistep_ensembles.series import embed

from .oracles import brute_force_knn, elastic_net_kkt_violation, ridge_normal_equations

X3 = np.array([[1.0], [2.0], [3.0]])
Y3 = np.array([[2.0], [4.0], [6.0]])


def ridge(lam):
    return LearnerSpec("R", "ridge", {"lambda": lam})


# -- pool ---------------------------------------------------------------------

def test_default_pool_contents():
    pool = {s.id: s for s in default_pool()}
    assert len(pool) == 39
    assert pool["KNN_4"].params == {"K": 20, "weight": "uniform"}
    assert pool["RF_6"].params["trees"] == 100 and pool["RF_6"].params["max_depth"] == 5
    assert pool["KNN_6"].params == {"K": 1, "weight": "distance"}
    assert pool["ET_1"].params["max_depth"] is None
    assert [pool[f"LASSO_{i}"].params["lambda"] for i in range(1, 5)] == [1, 0.75, 0.5, 0.25]
    assert [pool[f"PCR_{i}"].params["components"] for i in range(1, 4)] == [2, 3, 5]
    assert pool["EN"].params["alpha"] == 0.5
    assert "PPR" not in pool


def test_pool_file_roundtrip():
    pool = default_pool()
    assert parse_pool(format_pool(pool)) == pool


def test_pool_file_validation():
    with pytest.raises(ConfigError):
        parse_pool("K1 knn K=0\n")
    with pytest.raises(ConfigError):
        parse_pool("K1 knn K=3 weight=gaussian\n")
    with pytest.raises(ConfigError):
        parse_pool("A ridge lambda=1\nA ridge lambda=2\n")
    with pytest.raises(ConfigError):
        parse_pool("A wavelet\n")
    assert parse_pool("# comment\nA knn K=2 weight=distance  # trailing\n")[0].params["K"] == 2


# -- linear -------------------------------------------------------------------

def test_ridge_exact_fit():
    model = fit_linear(ridge(0.0), X3, Y3)
    assert model.coef[0, 0] == pytest.approx(2.0, abs=1e-9)
    assert model.intercept[0] == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(predict(model, [[5.0]]), [[10.0]], atol=1e-9)


def test_ridge_matches_normal_equations():
    model = fit_linear(ridge(1.0), X3, Y3)
    w, b = ridge_normal_equations(X3, Y3, 1.0)
    np.testing.assert_allclose(model.coef, w, rtol=1e-12)
    np.testing.assert_allclose(model.intercept, b, rtol=1e-12, atol=1e-12)


def test_ridge_small_lambda_is_ols():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 4))
    Y = X @ rng.normal(size=(4, 3)) + 0.1 * rng.normal(size=(50, 3))
    model = fit_linear(ridge(1e-10), X, Y)
    A = np.column_stack([X, np.ones(50)])
    ols = np.linalg.lstsq(A, Y, rcond=None)[0]
    np.testing.assert_allclose(model.coef, ols[:-1], atol=1e-6)
    np.testing.assert_allclose(model.intercept, ols[-1], atol=1e-6)


def test_lasso_kill_condition():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 3)) * [1, 5, 0.2]
    y = X @ [1.0, -0.5, 2.0] + rng.normal(size=40)
    Z = (X - X.mean(0)) / X.std(0)
    lam = np.max(np.abs(Z.T @ (y - y.mean()))) / 40
    model = fit_linear(LearnerSpec("L", "lasso", {"lambda": lam}), X, y[:, None])
    np.testing.assert_array_equal(model.coef, 0.0)
    assert model.intercept[0] == pytest.approx(y.mean())


@pytest.mark.parametrize("family, params, l1", [
    ("lasso", {"lambda": 0.05}, 1.0),
    ("lasso", {"lambda": 0.3}, 1.0),
    ("elastic_net", {"lambda": 0.2, "alpha": 0.5}, 0.5),
])
def test_coordinate_descent_kkt(family, params, l1):
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 5))
    X[:, 1] += 0.8 * X[:, 0]
    Y = X @ rng.normal(size=(5, 4)) + rng.normal(size=(60, 4))
    model = fit_linear(LearnerSpec("L", family, params), X, Y)
    assert elastic_net_kkt_violation(X, Y, model.coef, params["lambda"], l1) < 1e-5


def test_linear_needs_two_rows():
    with pytest.raises(InsufficientDataError):
        fit_linear(ridge(1.0), X3[:1], Y3[:1])


# -- knn -----------------------------------------------------------------------

XK = np.array([[0.0], [10.0]])
YK = np.array([[1.0, 2.0], [3.0, 4.0]])


def knn(k, weight="uniform"):
    return LearnerSpec("K", "knn", {"K": k, "weight": weight})


def test_knn_examples():
    np.testing.assert_array_equal(fit_knn(knn(1), XK, YK).predict([[1.0]]), [[1, 2]])
    np.testing.assert_array_equal(fit_knn(knn(2), XK, YK).predict([[5.0]]), [[2, 3]])
    np.testing.assert_array_equal(fit_knn(knn(2, "distance"), XK, YK).predict([[0.0]]), [[1, 2]])
    np.testing.assert_array_equal(predict(fit_knn(knn(1), XK, YK), [[10.0]]), [[3, 4]])


def test_knn_distance_weights():
    # query 2.5: distances 2.5 and 7.5 -> weights 0.75 / 0.25
    out = fit_knn(knn(2, "distance"), XK, YK).predict([[2.5]])
    np.testing.assert_allclose(out, [[1.5, 2.5]])


def test_knn_needs_k_rows():
    with pytest.raises(InsufficientDataError):
        fit_knn(knn(3), XK, YK)


@pytest.mark.parametrize("weight", ["uniform", "distance"])
def test_knn_matches_brute_force(weight):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 3))
    Y = rng.normal(size=(80, 2))
    model = fit_knn(knn(7, weight), X, Y)
    for x in rng.normal(size=(20, 3)):
        np.testing.assert_allclose(model.predict(x[None])[0], brute_force_knn(X, Y, x, 7, weight),
                                   rtol=1e-12)


# -- projection ---------------------------------------------------------------

def test_pcr_full_components_is_ols():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 4))
    Y = X @ rng.normal(size=(4, 2)) + rng.normal(size=(40, 2))
    model = fit_projection(LearnerSpec("P", "pcr", {"components": 4}), X, Y)
    A = np.column_stack([X, np.ones(40)])
    beta = np.linalg.lstsq(A, Y, rcond=None)[0]
    Xq = rng.normal(size=(10, 4))
    np.testing.assert_allclose(model.predict(Xq), np.column_stack([Xq, np.ones(10)]) @ beta, atol=1e-8)


def test_pcr_one_component_with_constant_column():
    rng = np.random.default_rng(5)
    x1 = rng.normal(size=30)
    X = np.column_stack([x1, np.full(30, 7.0)])
    y = 2.0 * x1 + rng.normal(size=30)
    model = fit_projection(LearnerSpec("P", "pcr", {"components": 1}), X, y[:, None])
    slope, intercept = np.polyfit(x1, y, 1)
    xq = np.array([-1.0, 0.3, 2.0])
    np.testing.assert_allclose(model.predict(np.column_stack([xq, np.full(3, 7.0)]))[:, 0],
                               slope * xq + intercept, atol=1e-10)


def test_pls_one_component_recovers_slope():
    x1 = np.linspace(-2, 3, 25)
    X = np.column_stack([x1, np.zeros(25), np.full(25, 1.5)])
    model = fit_projection(LearnerSpec("P", "pls", {"components": 1}), X, (3.0 * x1)[:, None])
    assert model.coef[0, 0] == pytest.approx(3.0, abs=1e-8)
    np.testing.assert_allclose(model.coef[1:, 0], 0.0, atol=1e-12)


def test_pls_full_components_single_output_is_ols():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(50, 3))
    y = X @ [1.0, -2.0, 0.5] + 0.3 * rng.normal(size=50)
    model = fit_projection(LearnerSpec("P", "pls", {"components": 3}), X, y[:, None])
    beta = np.linalg.lstsq(np.column_stack([X, np.ones(50)]), y, rcond=None)[0]
    np.testing.assert_allclose(model.coef[:, 0], beta[:3], atol=1e-8)


def test_projection_errors_and_degenerate_input():
    X = np.ones((10, 2))
    Y = np.arange(10.0)[:, None]
    with pytest.raises(ConfigError):
        fit_projection(LearnerSpec("P", "pcr", {"components": 3}), X, Y)
    for family in ("pcr", "pls"):
        with pytest.warns(RankWarning):
            model = fit_projection(LearnerSpec("P", family, {"components": 1}), X, Y)
        np.testing.assert_allclose(model.predict(X), 4.5)


# -- trees ---------------------------------------------------------------------

def test_single_split_tree():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    Y = np.array([[0.0], [0.0], [10.0], [10.0]])
    spec = LearnerSpec("T", "tree", {"max_depth": 1, "min_samples_leaf": 1})
    model = fit_tree_family(spec, X, Y)
    tree = model.trees[0]
    assert 0.0 < tree.threshold[0] <= 1.0
    np.testing.assert_array_equal(model.predict([[0.0], [0.2], [1.0], [3.0]])[:, 0], [0, 0, 10, 10])


def test_unrestricted_tree_interpolates():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(60, 3))
    Y = rng.normal(size=(60, 4))
    model = fit_tree_family(LearnerSpec("T", "tree", {"min_samples_leaf": 1}), X, Y)
    np.testing.assert_array_equal(model.predict(X), Y)


def test_depth_and_leaf_size_limits():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(200, 5))
    Y = np.sin(X[:, :2]) + 0.1 * rng.normal(size=(200, 2))
    tree = grow_tree(X, Y, max_depth=3)
    assert tree.depth() <= 3
    full = grow_tree(X, Y, min_samples_leaf=5)
    leaves = full.feature < 0
    counts = np.bincount(np.searchsorted(np.flatnonzero(leaves),
                                         _leaf_ids(full, X)), minlength=leaves.sum())
    assert counts.min() >= 5


def _leaf_ids(tree, X):
    from multistep_ensembles.learners.trees import _apply
    return _apply(tree.feature, tree.threshold, tree.left, tree.right, np.ascontiguousarray(X))


def test_bagging_constant_targets():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(40, 5))
    Y = np.tile([2.5, -1.0, 0.3], (40, 1))
    model = fit_tree_family(LearnerSpec("B", "bagging", {"trees": 50}), X, Y, seed=3)
    np.testing.assert_allclose(model.predict(rng.normal(size=(15, 5))), np.tile([2.5, -1.0, 0.3], (15, 1)),
                               rtol=1e-12)


@pytest.mark.parametrize("family", ["random_forest", "extra_trees", "bagging"])
def test_forest_determinism(family):
    rng = np.random.default_rng(10)
    X = rng.normal(size=(80, 5))
    Y = X[:, :3] ** 2 + rng.normal(size=(80, 3))
    spec = LearnerSpec("F", family, {"trees": 20})
    a = fit_tree_family(spec, X, Y, seed=11).predict(X)
    b = fit_tree_family(spec, X, Y, seed=11).predict(X)
    c = fit_tree_family(spec, X, Y, seed=12).predict(X)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_extra_trees_thresholds_within_node_range():
    rng = np.random.default_rng(12)
    X = rng.uniform(size=(100, 2))
    Y = (X[:, :1] > 0.5).astype(float)
    model = fit_tree_family(LearnerSpec("E", "extra_trees", {"trees": 5}), X, Y, seed=1)
    for tree in model.trees:
        internal = tree.feature >= 0
        assert np.all((tree.threshold[internal] > 0) & (tree.threshold[internal] < 1))


# -- whole pool -----------------------------------------------------------------

@pytest.fixture(scope="module")
def ar_dataset():
    rng = np.random.default_rng(13)
    e = rng.normal(size=300)
    y = np.zeros(300)
    for t in range(1, 300):
        y[t] = 0.6 * y[t - 1] + e[t]
    return embed(y, 5, 18)


def test_pool_predictions_finite_and_shaped(ar_dataset):
    for spec in default_pool():
        model = fit_learner(spec, ar_dataset, seed=1)
        out = model.predict(ar_dataset.X[:7])
        assert out.shape == (7, 18), spec.id
        assert np.all(np.isfinite(out)), spec.id
        assert model.predict(np.empty((0, 5))).shape == (0, 18)
        with pytest.raises(ShapeError):
            model.predict(np.zeros((2, 4)))


def test_interpolating_pool_members(ar_dataset):
    pool = {s.id: s for s in default_pool()}
    model = fit_learner(pool["KNN_1"], ar_dataset)
    np.testing.assert_array_equal(model.predict(ar_dataset.X), ar_dataset.Y)


def test_pool_determinism(ar_dataset):
    for spec in default_pool():
        a = fit_learner(spec, ar_dataset, seed=5).predict(ar_dataset.X[:10])
        b = fit_learner(spec, ar_dataset, seed=5).predict(ar_dataset.X[:10])
        assert np.array_equal(a, b), spec.id
