import math

import numpy as np
import pytest

from emgds import errors
from emgds import svm
from emgds.svm import (SMO_BACKEND, KernelSpec, MulticlassSvmModel, SvmModel,
                       decision, decision_many, gram, kernel_eval, kkt_stats,
                       predict_multiclass, train_binary, train_multiclass)


def assert_kkt(model: SvmModel):
    stats = kkt_stats(model)
    assert stats["alpha_min"] >= -1e-12
    assert stats["alpha_max"] <= stats["c"] + 1e-9
    assert abs(stats["sum_alpha_y"]) < 1e-6


# --- kernels -----------------------------------------------------------------

def test_kernel_examples():
    assert kernel_eval(KernelSpec("rbf", gamma=1.0), [1.0, 2.0], [1.0, 2.0]) == 1.0
    assert kernel_eval(KernelSpec("linear"), [1.0, 2.0], [3.0, 4.0]) == 11.0
    got = kernel_eval(KernelSpec("rbf", gamma=0.5), [0.0, 0.0], [2.0, 0.0])
    assert got == pytest.approx(math.exp(-2.0), rel=1e-12)
    got = kernel_eval(KernelSpec("poly", degree=2, coef0=1.0), [1.0, 0.0], [2.0, 0.0])
    assert got == pytest.approx(9.0, rel=1e-12)
    with pytest.raises(errors.DimensionMismatch):
        kernel_eval(KernelSpec("linear"), [1.0], [1.0, 2.0])


def test_kernel_symmetry_and_rbf_range():
    rng = np.random.default_rng(40)
    spec = KernelSpec("rbf", gamma=0.3)
    for _ in range(100):
        u, v = rng.normal(size=4), rng.normal(size=4)
        kuv = kernel_eval(spec, u, v)
        assert kuv == pytest.approx(kernel_eval(spec, v, u), rel=1e-12)
        assert 0.0 < kuv <= 1.0
        lin = KernelSpec("linear")
        assert kernel_eval(lin, u, v) == pytest.approx(kernel_eval(lin, v, u), rel=1e-12)


def test_gram_matches_pairwise_eval():
    rng = np.random.default_rng(41)
    x = rng.normal(size=(7, 3))
    for spec in (KernelSpec("linear"), KernelSpec("rbf", gamma=0.7),
                 KernelSpec("poly", degree=3, coef0=0.5)):
        k = gram(spec, x, x)
        for i in range(7):
            for j in range(7):
                assert k[i, j] == pytest.approx(kernel_eval(spec, x[i], x[j]),
                                                rel=1e-9, abs=1e-12)


def test_auto_gamma_resolution():
    rng = np.random.default_rng(42)
    x = rng.normal(size=(50, 4)) * np.array([1.0, 2.0, 3.0, 4.0])
    spec = KernelSpec("rbf").resolved(x)
    expected = 1.0 / (4 * float(np.mean(np.var(x, axis=0))))
    assert spec.gamma == pytest.approx(expected, rel=1e-12)
    # fixed gamma untouched
    assert KernelSpec("rbf", gamma=2.0).resolved(x).gamma == 2.0
    # trained models store the resolved value, never the sentinel
    y = np.r_[np.full(25, -1.0), np.full(25, 1.0)]
    model = train_binary(x, y, kernel=KernelSpec("rbf"), seed=1)
    assert isinstance(model.kernel.gamma, float) and model.kernel.gamma > 0


# --- binary training ---------------------------------------------------------

SEPARABLE_X = np.array([[0.0, 0.0], [0.0, 1.0], [2.0, 2.0], [2.0, 3.0]])
SEPARABLE_Y = np.array([-1.0, -1.0, 1.0, 1.0])


def test_separable_training_accuracy():
    model = train_binary(SEPARABLE_X, SEPARABLE_Y, kernel=KernelSpec("linear"),
                         c=10.0, seed=3)
    scores = decision_many(model, SEPARABLE_X)
    assert np.all(np.sign(scores) == SEPARABLE_Y)
    assert decision(model, np.array([0.0, 0.0])) < 0
    assert decision(model, np.array([2.0, 3.0])) > 0
    assert_kkt(model)


def test_xor_with_rbf():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    model = train_binary(x, y, kernel=KernelSpec("rbf", gamma=1.0), c=10.0, seed=4)
    scores = decision_many(model, x)
    assert np.all(np.sign(scores) == y)
    assert_kkt(model)


def test_margin_support_vector_decision():
    model = train_binary(SEPARABLE_X, SEPARABLE_Y, kernel=KernelSpec("linear"),
                         c=10.0, tol=1e-3, seed=5)
    alphas = np.abs(model.dual_coeffs)
    margin = (alphas > 0) & (alphas < model.c)
    scores = decision_many(model, model.support_vectors)
    signs = np.sign(model.dual_coeffs)
    for flag, s, y in zip(margin, scores, signs):
        if flag:
            assert s == pytest.approx(y, abs=0.05)


def test_single_support_vector_linear_is_affine():
    model = train_binary(SEPARABLE_X, SEPARABLE_Y, kernel=KernelSpec("linear"),
                         c=10.0, seed=6)
    sv = model.support_vectors[:1]
    single = SvmModel(sv, model.dual_coeffs[:1], model.bias, model.kernel,
                      model.c, model.labels)
    pts = [np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([2.0, 2.0])]
    d0, d1, d2 = (decision(single, p) for p in pts)
    assert d1 - d0 == pytest.approx(d2 - d1, rel=1e-9)


def test_insufficient_classes_and_bad_input():
    with pytest.raises(errors.InsufficientClasses):
        train_binary(SEPARABLE_X, np.ones(4), seed=1)
    bad = SEPARABLE_X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(errors.NonFiniteInput):
        train_binary(bad, SEPARABLE_Y, seed=1)
    with pytest.raises(errors.InvalidConfig):
        train_binary(SEPARABLE_X, SEPARABLE_Y, c=-1.0, seed=1)
    with pytest.raises(errors.InvalidConfig):
        train_binary(SEPARABLE_X, np.array([-1.0, 2.0, 1.0, 1.0]), seed=1)


def test_objective_monotone_on_toys():
    rng = np.random.default_rng(50)
    for trial in range(5):
        x = np.vstack([rng.normal(size=(15, 2)) - 1.5, rng.normal(size=(15, 2)) + 1.5])
        y = np.r_[np.full(15, -1.0), np.full(15, 1.0)]
        _, trace = train_binary(x, y, kernel=KernelSpec("rbf", gamma=0.5), c=1.0,
                                seed=trial, record_objective=True)
        trace = np.asarray(trace)
        assert len(trace) > 0
        diffs = np.diff(trace)
        assert np.all(diffs >= -1e-9 * np.maximum(1.0, np.abs(trace[:-1])))


def test_backends_bit_identical():
    from emgds import _smo_py
    if SMO_BACKEND != "cython":
        pytest.skip("compiled SMO backend not built")
    from emgds import _smo as _smo_ext
    rng = np.random.default_rng(51)
    for trial in range(10):
        n = int(rng.integers(4, 80))
        x = rng.normal(size=(n, 3))
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        y[0], y[1] = -1.0, 1.0
        k = gram(KernelSpec("rbf", gamma=0.4), x, x)
        a1, b1, p1 = _smo_ext.optimize(k, y, 1.0, 1e-3, 200, 1000 + trial)
        a2, b2, p2, _ = _smo_py.optimize(k, y, 1.0, 1e-3, 200, 1000 + trial)
        assert np.array_equal(a1, a2)
        assert b1 == b2
        assert p1 == p2


def test_training_deterministic_under_seed():
    rng = np.random.default_rng(52)
    x = rng.normal(size=(40, 3))
    y = np.where(rng.random(40) < 0.5, -1.0, 1.0)
    y[:2] = [-1.0, 1.0]
    m1 = train_binary(x, y, seed=9)
    m2 = train_binary(x, y, seed=9)
    assert np.array_equal(m1.dual_coeffs, m2.dual_coeffs)
    assert m1.bias == m2.bias


def test_prediction_invariant_to_example_order():
    rng = np.random.default_rng(53)
    x = np.vstack([rng.normal(size=(20, 2)) - 2.0, rng.normal(size=(20, 2)) + 2.0])
    y = np.r_[np.full(20, -1.0), np.full(20, 1.0)]
    probe = rng.normal(size=(100, 2)) * 2.0
    m1 = train_binary(x, y, kernel=KernelSpec("rbf", gamma=0.5), c=5.0, seed=1)
    perm = rng.permutation(40)
    m2 = train_binary(x[perm], y[perm], kernel=KernelSpec("rbf", gamma=0.5), c=5.0,
                      seed=1)
    p1 = np.sign(decision_many(m1, probe))
    p2 = np.sign(decision_many(m2, probe))
    assert np.array_equal(p1, p2)


# --- multiclass ---------------------------------------------------------------

def _blobs(rng, centers, n, sigma=0.1):
    xs, ys = [], []
    for label, center in centers.items():
        xs.append(rng.normal(size=(n, len(center))) * sigma + np.asarray(center))
        ys += [label] * n
    return np.vstack(xs), ys


def test_three_blob_training_accuracy():
    rng = np.random.default_rng(60)
    x, labels = _blobs(rng, {"a": (0.0, 0.0), "b": (5.0, 0.0), "c": (0.0, 5.0)}, 30)
    model = train_multiclass(x, labels, class_order=("a", "b", "c"), c=10.0, seed=2)
    preds = [predict_multiclass(model, v) for v in x]
    assert preds == labels
    for sub in model.models:
        assert_kkt(sub)
    # blob centers classify to their own class
    assert predict_multiclass(model, np.array([5.0, 0.0])) == "b"


def test_two_class_ovr_agrees_with_binary_sign():
    rng = np.random.default_rng(61)
    x, labels = _blobs(rng, {"neg": (-2.0, 0.0), "pos": (2.0, 0.0)}, 25, sigma=0.4)
    y = np.array([1.0 if l == "pos" else -1.0 for l in labels])
    ovr = train_multiclass(x, labels, class_order=("neg", "pos"),
                           kernel=KernelSpec("rbf", gamma=0.5), c=5.0, seed=7)
    binary = train_binary(x, y, kernel=KernelSpec("rbf", gamma=0.5), c=5.0, seed=7)
    # probes follow the data distribution (the classifiers only coincide up to
    # the SMO tolerance near the decision boundary)
    probe, _ = _blobs(rng, {"neg": (-2.0, 0.0), "pos": (2.0, 0.0)}, 50, sigma=0.4)
    ovr_pred = [predict_multiclass(ovr, v) for v in probe]
    bin_pred = ["pos" if decision(binary, v) >= 0 else "neg" for v in probe]
    agree = sum(a == b for a, b in zip(ovr_pred, bin_pred))
    assert agree == 100


def test_tie_breaks_to_earliest_class():
    sv = np.array([[1.0]])
    spec = KernelSpec("linear")
    m_a = SvmModel(sv, np.array([1.0]), 0.0, spec, 1.0, ("not:a", "a"))
    m_b = SvmModel(sv, np.array([1.0]), 0.0, spec, 1.0, ("not:b", "b"))
    model = MulticlassSvmModel((m_a, m_b), ("a", "b"))
    assert predict_multiclass(model, np.array([0.5])) == "a"
    assert predict_multiclass(model, np.array([0.5])) == "a"  # deterministic


def test_multiclass_errors():
    rng = np.random.default_rng(62)
    x, labels = _blobs(rng, {"a": (0.0, 0.0), "b": (5.0, 0.0)}, 10)
    with pytest.raises(errors.InsufficientClasses):
        train_multiclass(x[:10], labels[:10], seed=1)
    with pytest.raises(errors.InsufficientClasses):
        train_multiclass(x, labels, class_order=("a", "b", "ghost"), seed=1)
    with pytest.raises(errors.InvalidConfig):
        train_multiclass(x, labels, class_order=("a",), seed=1)


def test_model_dict_round_trip():
    model = train_binary(SEPARABLE_X, SEPARABLE_Y, kernel=KernelSpec("linear"),
                         c=10.0, seed=3)
    back = SvmModel.from_dict(model.to_dict())
    probe = np.random.default_rng(1).normal(size=(20, 2))
    assert np.allclose(decision_many(model, probe), decision_many(back, probe),
                       rtol=0, atol=0)
    with pytest.raises(errors.SchemaError):
        SvmModel.from_dict({"bias": 0.0})
