import numpy as np
import pytest

from ladies.errors import DivergenceError
from ladies.graph import build_graph, normalized_laplacian
from ladies.model import (AdamState, GcnModel, adam_step, cross_entropy, forward_exact,
                          forward_sampled, init_weights, load_model, loss_and_grad, save_model)
from ladies.samplers import SamplerConfig, full_batch_plan

from oracles import dense_laplacian, finite_difference, loop_forward, random_edges


def test_identity_network():
    p = normalized_laplacian(build_graph([], 4))
    x = np.abs(np.random.default_rng(0).normal(size=(4, 3)))
    model = GcnModel([np.eye(3), np.eye(3)])
    np.testing.assert_array_equal(forward_exact(model, p, x), x)


def test_two_node_forward():
    p = normalized_laplacian(build_graph([(0, 1)], 2))
    z = forward_exact(GcnModel([np.eye(2)]), p, np.eye(2))
    np.testing.assert_array_equal(z, np.full((2, 2), 0.5))


def test_forward_shape_error():
    p = normalized_laplacian(build_graph([(0, 1)], 2))
    with pytest.raises(ValueError):
        forward_exact(GcnModel([np.eye(2)]), p, np.eye(3))


def test_forward_matches_loop_oracle():
    rng = np.random.default_rng(0)
    edges = random_edges(8, 0.3, rng)
    p = normalized_laplacian(build_graph(edges, 8))
    model = init_weights([5, 4, 6, 3], rng)
    x = rng.normal(size=(8, 5))
    want = loop_forward(dense_laplacian(8, edges), x, model.weights)
    np.testing.assert_allclose(forward_exact(model, p, x), want, rtol=0, atol=1e-12)


def test_permutation_equivariance():
    rng = np.random.default_rng(1)
    edges = random_edges(10, 0.3, rng)
    perm = rng.permutation(10)
    p1 = normalized_laplacian(build_graph(edges, 10))
    p2 = normalized_laplacian(build_graph([(perm[u], perm[v]) for u, v in edges], 10))
    model = init_weights([4, 5, 3], rng)
    x = rng.normal(size=(10, 4))
    x2 = np.empty_like(x)
    x2[perm] = x
    out1 = forward_exact(model, p1, x)
    out2 = forward_exact(model, p2, x2)
    np.testing.assert_allclose(out2[perm], out1, atol=1e-12)


def test_full_batch_plan_equals_exact(er100, rng):
    ds, p = er100
    model = init_weights([ds.num_features, 6, 6, 3], rng)
    batch = np.arange(0, 100, 3)
    logits, trace = forward_sampled(model, full_batch_plan(p, 3, batch), ds.features)
    np.testing.assert_allclose(logits, forward_exact(model, p, ds.features)[batch], rtol=0,
                               atol=1e-12)
    assert len(trace.preacts) == 3


def test_linear_ladies_unbiased(er100):
    ds, p = er100
    rng = np.random.default_rng(5)
    model = init_weights([ds.num_features, 3], rng)
    batch = np.array([2, 40, 77])
    exact = forward_exact(model, p, ds.features)[batch]
    cfg = SamplerConfig("ladies", s_layer=100, normalize=False, keep_upper=False)
    trials = 10_000
    out = np.empty((trials,) + exact.shape)
    for t in range(trials):
        logits, _ = forward_sampled(model, cfg.plan(p, ds.graph, batch, 1, rng), ds.features)
        out[t] = logits
    se = out.std(axis=0, ddof=1) / np.sqrt(trials)
    assert np.all(np.abs(out.mean(axis=0) - exact) <= 4 * se + 1e-12)


@pytest.mark.parametrize("kind", ["ladies", "fastgcn", "neighbor"])
def test_output_rows(er100, rng, kind):
    ds, p = er100
    model = init_weights([ds.num_features, 4, 3], rng)
    batch = np.arange(10)
    plan = SamplerConfig(kind, s_layer=8).plan(p, ds.graph, batch, 2, rng)
    logits, _ = forward_sampled(model, plan, ds.features)
    assert logits.shape == (10, 3)


def test_nan_detected(er100, rng):
    ds, p = er100
    model = init_weights([ds.num_features, 3], rng)
    model.weights[0][0, 0] = np.nan
    with pytest.raises(DivergenceError):
        forward_sampled(model, full_batch_plan(p, 1), ds.features)


def test_loss_uniform_logits():
    assert abs(cross_entropy(np.zeros((4, 7)), [0, 1, 2, 6]) - np.log(7)) < 1e-15


def test_loss_goes_to_zero_with_margin():
    losses = [cross_entropy(np.array([[m, 0.0, 0.0]]), [0]) for m in (0, 1, 5, 20, 50)]
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-20
    assert min(losses) >= 0


def test_bad_label(er100, rng):
    ds, p = er100
    model = init_weights([ds.num_features, 3], rng)
    logits, trace = forward_sampled(model, full_batch_plan(p, 1, [0, 1]), ds.features)
    with pytest.raises(ValueError):
        loss_and_grad(model, trace, logits, [0, 3])


def _fd_instance(seed, num_layers, kind="full"):
    rng = np.random.default_rng(seed)
    n = 6 if num_layers == 2 else int(rng.integers(5, 11))
    edges = random_edges(n, 0.4, rng)
    g = build_graph(edges, n)
    p = normalized_laplacian(g)
    dims = [3] + [4] * (num_layers - 1) + [3]
    model = init_weights(dims, rng)
    x = rng.normal(size=(n, 3))
    labels = rng.integers(0, 3, size=n)
    batch = np.sort(rng.choice(n, size=min(n, 4), replace=False))
    plan = SamplerConfig(kind, s_layer=4, s_node=2).plan(p, g, batch, num_layers, rng)
    return model, plan, x, labels[batch]


def gradient_check(model, plan, x, labels):
    """Relative error of analytic vs central differences, or None near a kink."""
    logits, trace = forward_sampled(model, plan, x)
    if any(np.min(np.abs(z)) < 1e-7 for z in trace.preacts[:-1]):
        return None
    _, grads = loss_and_grad(model, trace, logits, labels)

    def f():
        return cross_entropy(forward_sampled(model, plan, x)[0], labels)

    numeric = finite_difference(f, model.weights)
    worst = 0.0
    for a, b in zip(grads, numeric):
        scale = np.maximum(np.abs(a), np.abs(b))
        ok = scale > 1e-9
        worst = max(worst, float(np.max(np.abs(a - b)[ok] / scale[ok], initial=0.0)))
    return worst


@pytest.mark.parametrize("num_layers", [1, 2, 3])
@pytest.mark.parametrize("kind", ["full", "ladies", "neighbor"])
def test_gradients_match_finite_differences(num_layers, kind):
    checked = 0
    for seed in range(40):
        err = gradient_check(*_fd_instance(seed, num_layers, kind))
        if err is None:
            continue
        assert err < 1e-5, (seed, err)
        checked += 1
        if checked == 5:
            break
    assert checked == 5


def test_adam_zero_gradient(rng):
    model = init_weights([3, 2], rng)
    before = model.copy()
    adam = AdamState.for_model(model)
    adam_step(model, adam, [np.zeros((3, 2))])
    np.testing.assert_array_equal(model.weights[0], before.weights[0])


def test_adam_first_step_sign(rng):
    model = init_weights([3, 2], rng)
    before = model.weights[0].copy()
    g = rng.normal(size=(3, 2))
    adam_step(model, AdamState.for_model(model, lr=0.01), [g])
    np.testing.assert_allclose(before - model.weights[0], 0.01 * np.sign(g), rtol=1e-6)


def test_adam_rejects_nonfinite(rng):
    model = init_weights([2, 2], rng)
    with pytest.raises(DivergenceError):
        adam_step(model, AdamState.for_model(model), [np.full((2, 2), np.inf)])


def test_adam_convex_quadratic():
    rng = np.random.default_rng(3)
    target = rng.normal(size=(4, 2))
    model = GcnModel([np.zeros((4, 2))])
    adam = AdamState.for_model(model, lr=0.05)
    losses = []
    for _ in range(100):
        diff = model.weights[0] - target
        losses.append(0.5 * np.sum(diff ** 2))
        adam_step(model, adam, [diff])
    burn = 5
    assert all(a >= b for a, b in zip(losses[burn:60], losses[burn + 1:61]))
    assert losses[-1] < 0.05 * losses[0]


def test_init_weights(rng):
    a = init_weights([50, 40, 7], np.random.default_rng(9))
    b = init_weights([50, 40, 7], np.random.default_rng(9))
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_array_equal(wa, wb)
    bound = np.sqrt(6 / 90)
    assert np.abs(a.weights[0]).max() <= bound
    big = init_weights([400, 600], rng).weights[0]
    assert abs(big.var() / (2 / 1000) - 1) < 0.03
    with pytest.raises(ValueError):
        init_weights([3], rng)


def test_checkpoint_roundtrip(tmp_path, rng):
    model = init_weights([5, 4, 3], rng)
    path = tmp_path / "m.bin"
    save_model(model, path)
    raw = path.read_bytes()
    assert raw[:4] == b"GCNW"
    assert len(raw) == 4 + 4 * 4 + 8 * (20 + 12)
    back = load_model(path)
    for a, b in zip(model.weights, back.weights):
        np.testing.assert_array_equal(a, b)
    path.write_bytes(raw + b"x")
    with pytest.raises(ValueError):
        load_model(path)
