import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trajtax.cv import CvProtocol, FitCounter, cv_score, stratified_kfold
from trajtax.errors import DegenerateDataError
from trajtax.models import _tree_py
from trajtax.models._kernels import BACKEND
from trajtax.models.api import ClassifierSpec, predict, train
from trajtax.models.forest import resolve_max_features
from trajtax.models.grid import default_grids, grid_candidates, grid_search, load_grids
from trajtax.models.mlp import MLP, init_params, loss_and_grad

try:
    from trajtax.models import _tree_core
except ImportError:  # pragma: no cover - extension not built
    _tree_core = None


def accuracy(model, X, y):
    return float(np.mean(np.array(predict(model, X)) == np.array(y)))


def perceptron_separates(X, y, epochs=1000):
    """Oracle: the perceptron converges (zero mistakes) iff the data is linearly separable."""
    Xa = np.hstack([X, np.ones((len(X), 1))])
    t = np.where(np.array(y) == y[0], 1.0, -1.0)
    w = np.zeros(Xa.shape[1])
    for _ in range(epochs):
        mistakes = 0
        for xi, ti in zip(Xa, t):
            if ti * (xi @ w) <= 0:
                w += ti * xi
                mistakes += 1
        if mistakes == 0:
            return True
    return False


def best_linear_split_accuracy(X, y, n_angles=720):
    """Oracle: best accuracy of any half-plane rule, by brute force over directions and thresholds."""
    y = np.array(y)
    best = 0.0
    for a in np.linspace(0, np.pi, n_angles, endpoint=False):
        proj = X @ np.array([np.cos(a), np.sin(a)])
        order = np.argsort(proj)
        ys = y[order]
        for lab in np.unique(y):
            is_lab = (ys == lab).astype(int)
            left = np.concatenate([[0], np.cumsum(is_lab)])
            right_not = np.concatenate([[0], np.cumsum(1 - is_lab)])
            total_not = right_not[-1]
            # predict `lab` to the left of the cut, the other class to the right
            acc = (left + (total_not - right_not)) / len(y)
            best = max(best, acc.max(), (1 - acc).max())
    return best


@pytest.fixture
def xor():
    rng = np.random.default_rng(0)
    centers = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    labels = ["a", "a", "b", "b"]
    X = np.vstack([c + rng.normal(0, 0.1, size=(25, 2)) for c in centers])
    y = [lab for lab in labels for _ in range(25)]
    return (X - 0.5) * 4, y


@pytest.mark.parametrize("family", ["logistic_regression", "random_forest", "gradient_boosted_trees", "mlp"])
def test_separable_blobs(family, blobs):
    X, y = blobs
    assert perceptron_separates(X, y)
    model = train(ClassifierSpec.default(family, seed=1), X, y)
    assert accuracy(model, X, y) >= 0.99
    assert model.classes == ("a", "b")


def test_logistic_l2_separable_c1(blobs):
    X, y = blobs
    model = train(ClassifierSpec("logistic_regression", {"c": 1.0}), X, y)
    assert accuracy(model, X, y) >= 0.99


def test_xor_needs_nonlinearity(xor):
    X, y = xor
    oracle = best_linear_split_accuracy(X, y)
    assert oracle <= 0.76
    lr = train(ClassifierSpec.default("logistic_regression"), X, y)
    assert accuracy(lr, X, y) <= min(0.75, oracle + 1e-12)
    mlp = train(ClassifierSpec.default("mlp", seed=0, hidden_layer_sizes=(50,), learning_rate_init=1e-2), X, y)
    assert accuracy(mlp, X, y) >= 0.95


def test_forest_tree_count(blobs):
    X, y = blobs
    model = train(ClassifierSpec.default("random_forest", n_estimators=100), X, y)
    assert len(model.estimator.trees_) == 100


def test_boosting_tree_count(blobs):
    X, y = blobs
    model = train(ClassifierSpec.default("gradient_boosted_trees", n_estimators=7), X, y)
    assert len(model.estimator.rounds_) == 7
    assert model.estimator.n_trees == 7 * 2  # one tree per class per round


def test_predict_contracts(blobs):
    X, y = blobs
    model = train(ClassifierSpec.default("logistic_regression"), X, y)
    assert predict(model, np.zeros((0, 2))) == []
    assert predict(model, X[:1]) in (["a"], ["b"])
    with pytest.raises(ValueError):
        predict(model, np.zeros((3, 5)))


def test_train_rejects_degenerate_inputs(blobs):
    X, y = blobs
    with pytest.raises(DegenerateDataError):
        train(ClassifierSpec.default("random_forest"), X, ["a"] * len(y))
    Xn = X.copy()
    Xn[0, 0] = np.nan
    with pytest.raises(DegenerateDataError):
        train(ClassifierSpec.default("random_forest"), Xn, y)
    with pytest.raises(ValueError):
        ClassifierSpec("random_forest", {"n_trees": 3})


def test_probability_tie_goes_to_smaller_label():
    X = np.zeros((4, 1))
    y = ["b", "a", "b", "a"]
    model = train(ClassifierSpec.default("logistic_regression"), X, y)
    assert predict(model, np.zeros((1, 1))) == ["a"]


@pytest.mark.parametrize("family", ["logistic_regression", "random_forest", "gradient_boosted_trees", "mlp"])
def test_seed_determinism(family, xor):
    X, y = xor
    spec = ClassifierSpec.default(family, seed=5)
    if family == "random_forest":
        spec = ClassifierSpec.default(family, seed=5, n_estimators=20)
    if family == "gradient_boosted_trees":
        spec = ClassifierSpec.default(family, seed=5, n_estimators=10, sub_sample=0.8)
    a = train(spec, X, y).predict_proba(X)
    b = train(spec, X, y).predict_proba(X)
    assert np.array_equal(a, b)


def test_logistic_coefficient_norm_monotone_in_c():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 4))
    y = np.array(["a", "b", "c"])[(X[:, 0] + 0.5 * rng.normal(size=80) > 0).astype(int) + (X[:, 1] > 0.7)]
    norms = []
    for c in (0.1, 1.0, 10.0):
        m = train(ClassifierSpec("logistic_regression", {"c": c, "penalty": "l2"}), X, y)
        norms.append(np.linalg.norm(m.estimator.coef_))
    assert norms[0] <= norms[1] <= norms[2]


def test_logistic_l2_matches_sklearn():
    from sklearn.linear_model import LogisticRegression as SkLR

    rng = np.random.default_rng(2)
    X = rng.normal(size=(90, 3))
    y = (X[:, 0] + X[:, 1] + rng.normal(0, 0.5, 90) > 0).astype(int) + (X[:, 2] > 0.5).astype(int)
    ours = train(ClassifierSpec("logistic_regression", {"c": 1.0, "penalty": "l2"}), X, y)
    sk = SkLR(C=1.0, tol=1e-10, max_iter=10000).fit(X, y)
    assert np.allclose(ours.estimator.coef_, sk.coef_.T, atol=1e-4)
    assert np.allclose(ours.predict_proba(X), sk.predict_proba(X), atol=1e-5)


def test_logistic_l1_sparsity_and_sklearn():
    from sklearn.linear_model import LogisticRegression as SkLR

    rng = np.random.default_rng(3)
    X = rng.normal(size=(120, 6))
    y = (X[:, 0] - X[:, 1] > 0).astype(int) + (X[:, 0] > 1).astype(int)
    ours = train(ClassifierSpec("logistic_regression", {"c": 0.1, "penalty": "l1"}), X, y)
    coef = ours.estimator.coef_
    assert np.count_nonzero(np.abs(coef[2:]) > 1e-8) < coef[2:].size
    sk = SkLR(C=0.1, penalty="l1", solver="saga", tol=1e-10, max_iter=100000).fit(X, y)
    assert np.allclose(ours.predict_proba(X), sk.predict_proba(X), atol=2e-3)


def _train_acc(family, n, X, y):
    model = train(ClassifierSpec.default(family, seed=0, n_estimators=n), X, y)
    return accuracy(model, X, y)


@pytest.mark.parametrize("family", ["random_forest", "gradient_boosted_trees"])
def test_training_accuracy_monotone_in_trees(family):
    rng = np.random.default_rng(7)
    X = rng.normal(size=(60, 4))
    y = np.where(X[:, 0] * X[:, 1] + 0.3 * rng.normal(size=60) > 0, "p", "q")
    if family == "gradient_boosted_trees":
        accs = [accuracy(train(ClassifierSpec.default(family, seed=0, n_estimators=n, max_depth=2, learning_rate=0.1), X, y), X, y)
                for n in (10, 50, 100)]
    else:
        accs = [_train_acc(family, n, X, y) for n in (10, 50, 100)]
    assert accs[0] <= accs[1] <= accs[2]


def test_mlp_gradient_check():
    rng = np.random.default_rng(0)
    params = init_params((2, 2, 2), rng)
    X = rng.normal(size=(5, 2))
    Y = np.eye(2)[rng.integers(0, 2, size=5)]
    alpha = 0.1
    _, grads = loss_and_grad(params, X, Y, alpha)
    h = 1e-6
    for li, (W, b) in enumerate(params):
        for arr, g in ((W, grads[li][0]), (b, grads[li][1])):
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + h
                up, _ = loss_and_grad(params, X, Y, alpha)
                arr[idx] = old - h
                down, _ = loss_and_grad(params, X, Y, alpha)
                arr[idx] = old
                numeric = (up - down) / (2 * h)
                assert abs(numeric - g[idx]) <= 1e-4 * max(1.0, abs(numeric), abs(g[idx]))


def test_mlp_epoch_budget(xor):
    X, y = xor
    m = MLP(hidden_layer_sizes=(5,), max_epochs=7).fit(X, (np.array(y) == "b").astype(int), 2)
    assert len(m.loss_curve_) <= 7


def test_resolve_max_features():
    assert resolve_max_features("sqrt", 72) == 8
    assert resolve_max_features("log2", 72) == 6
    assert resolve_max_features(16, 72) == 16
    assert resolve_max_features(16, 5) == 5
    assert resolve_max_features(None, 9) == 9


# -- grid search ------------------------------------------------------------------


def test_default_grid_sizes():
    grids = default_grids()
    assert len(grid_candidates("logistic_regression", grids)) == 12
    assert len(grid_candidates("random_forest", grids)) == 27
    assert len(grid_candidates("gradient_boosted_trees", grids)) == 36
    assert len(grid_candidates("mlp", grids)) == 27
    assert grids["random_forest"]["max_depth"] == [None, 10, 20]
    assert grids["mlp"]["hidden_layer_sizes"] == [(50,), (100,), (50, 50)]


def test_grid_search_counts_fits(blobs):
    X, y = blobs
    counter = FitCounter()
    grid_search("logistic_regression", default_grids(), X, y, CvProtocol(seeds=(1,), folds=3), counter=counter)
    assert counter.count == 12 * 3


def test_single_candidate_grid_skips_fitting(blobs):
    X, y = blobs
    grid = load_grids({"logistic_regression": {"c": [1.0], "penalty": ["l2"], "solver": ["lbfgs"]}})
    counter = FitCounter()
    spec = grid_search("logistic_regression", grid, X, y, CvProtocol(seeds=(1,), folds=3), counter=counter)
    assert counter.count == 0 and spec.hyperparameters == {"c": 1.0, "penalty": "l2", "solver": "lbfgs"}


def test_grid_search_picks_dominant_candidate():
    # a four-way interaction that a depth-1 forest cannot express
    rng = np.random.default_rng(4)
    X = rng.uniform(-1, 1, size=(160, 3))
    y = np.where((X[:, 0] > 0) ^ (X[:, 1] > 0), "u", "v")
    grid = {"random_forest": {"n_estimators": [30], "max_depth": [1, None], "max_features": [None]}}
    protocol = CvProtocol(seeds=(3,), folds=4)
    scores = []
    best = grid_search("random_forest", grid, X, y, protocol, scores=scores)
    folds = stratified_kfold(y, 4, 3)
    oracle = {p["max_depth"]: cv_score(ClassifierSpec("random_forest", p, 3), X, y, folds) for p in grid_candidates("random_forest", grid)}
    assert best.hyperparameters["max_depth"] is None
    assert max(oracle, key=lambda k: (oracle[k], k is None)) is None
    assert [s for _, s in scores] == [oracle[1], oracle[None]]


def test_grid_tie_goes_to_first_candidate():
    X = np.zeros((20, 1))
    y = ["a", "b"] * 10
    grid = {"logistic_regression": {"c": [10.0, 0.1], "penalty": ["l2"], "solver": ["lbfgs"]}}
    spec = grid_search("logistic_regression", grid, X, y, CvProtocol(seeds=(0,), folds=2))
    assert spec.hyperparameters["c"] == 10.0


# -- backends ---------------------------------------------------------------------


def test_backend_selected():
    assert BACKEND in ("cython", "python")


@pytest.mark.skipif(_tree_core is None, reason="compiled extension not built")
@settings(max_examples=25)
@given(st.integers(5, 60), st.integers(1, 6), st.integers(2, 4), st.integers(0, 2**32), st.integers(-1, 5))
def test_backends_grow_identical_trees(n, d, k, seed, depth):
    rng = np.random.default_rng(seed)
    X = np.round(rng.normal(size=(n, d)), 1)  # rounding creates ties
    y = rng.integers(0, k, size=n).astype(np.intp)
    rows = rng.integers(0, n, size=n).astype(np.intp)
    mf = int(rng.integers(1, d + 1))
    a = _tree_py.grow_gini_tree(X, y, rows, k, depth, mf, 2, seed)
    b = _tree_core.grow_gini_tree(X, y, rows, k, depth, mf, 2, seed)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    grad = rng.normal(size=n)
    hess = rng.uniform(0.01, 0.25, size=n)
    a = _tree_py.grow_newton_tree(X, grad, hess, rows, max(depth, 0) + 1, 1.0, 1.0)
    b = _tree_core.grow_newton_tree(X, grad, hess, rows, max(depth, 0) + 1, 1.0, 1.0)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert np.array_equal(_tree_py.apply_tree(X, *a[:4]), _tree_core.apply_tree(X, *a[:4]))


def test_gini_tree_fits_training_data_when_unlimited():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 3, size=40).astype(np.intp)
    rows = np.arange(40, dtype=np.intp)
    feat, thr, left, right, value = _tree_py.grow_gini_tree(X, y, rows, 3, -1, 3, 2, 0)
    leaf = _tree_py.apply_tree(X, feat, thr, left, right)
    assert np.array_equal(np.argmax(value[leaf], axis=1), y)
