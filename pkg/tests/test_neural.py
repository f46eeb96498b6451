"""Tests for the dense-network engine."""

import numpy as np
import pytest

from uavalloc.core.errors import (
    ArtifactError,
    InvalidArgumentError,
    ShapeError,
    TrainingDivergenceError,
)
from uavalloc.learning.neural import (
    AdamState,
    Gradients,
    Optimizer,
    ParamSet,
    adam_step,
    backward,
    forward,
    input_gradient,
    layer_activations,
    load_params,
    mlp_init,
    save_params,
    sgd_step,
    soft_update,
)


def _same(a: ParamSet, b: ParamSet) -> bool:
    return (
        a.activations == b.activations
        and all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
        and all(np.array_equal(x, y) for x, y in zip(a.biases, b.biases))
    )


def _with_value(net: ParamSet, kind: str, layer: int, index, value: float):
    arrays = [a.copy() for a in getattr(net, kind)]
    arrays[layer][index] = value
    if kind == "weights":
        return ParamSet(tuple(arrays), net.biases, net.activations)
    return ParamSet(net.weights, tuple(arrays), net.activations)


def _loss(net, x, up):
    return float(np.sum(up * forward(net, x)))


def _close(a: float, b: float) -> bool:
    return abs(a - b) < 1e-7 or abs(a - b) / (abs(a) + abs(b)) < 1e-4


def test_mlp_init_shapes_and_determinism():
    net = mlp_init([4, 8, 2], layer_activations(2, "relu", "linear"), rng_seed=1)
    assert net.layer_sizes == (4, 8, 2)
    assert net.n_inputs == 4
    assert net.n_outputs == 2
    assert net.activations == ("relu", "linear")
    assert all(np.all(b == 0) for b in net.biases)
    assert _same(net, mlp_init([4, 8, 2], ("relu", "linear"), rng_seed=1))
    assert not _same(net, mlp_init([4, 8, 2], ("relu", "linear"), rng_seed=2))


def test_mlp_init_rejects_bad_layout():
    with pytest.raises(InvalidArgumentError):
        mlp_init([4], "relu", rng_seed=0)
    with pytest.raises(InvalidArgumentError):
        mlp_init([4, 3, 2], ("relu",), rng_seed=0)
    with pytest.raises(InvalidArgumentError):
        mlp_init([4, 2], "sigmoid", rng_seed=0)


def test_forward_single_and_batch():
    net = mlp_init([3, 5, 2], ("tanh", "linear"), rng_seed=0)
    x = np.array([[0.1, -0.2, 0.3], [1.0, 0.0, -1.0]])
    batch = forward(net, x)
    assert batch.shape == (2, 2)
    single = forward(net, x[1])
    assert single.shape == (2,)
    assert np.allclose(single, batch[1])

    with pytest.raises(ShapeError):
        forward(net, np.zeros(4))


def test_forward_matches_manual():
    w1 = np.array([[1.0, -1.0], [0.5, 2.0]])
    w2 = np.array([[1.0, 1.0]])
    biases = (np.array([0.0, -1.0]), np.array([0.5]))
    net = ParamSet((w1, w2), biases, ("relu", "linear"))
    x = np.array([2.0, 1.0])
    hidden = np.maximum(w1 @ x + np.array([0.0, -1.0]), 0.0)
    assert forward(net, x)[0] == pytest.approx(hidden.sum() + 0.5)


@pytest.mark.parametrize("seed", range(20))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    sizes = [int(rng.integers(lo, hi)) for lo, hi in ((1, 5), (2, 6), (1, 4))]
    net = mlp_init(sizes, ("tanh", "linear"), rng_seed=seed)
    net = ParamSet(
        net.weights,
        tuple(rng.normal(0, 0.1, b.shape) for b in net.biases),
        net.activations,
    )
    x = rng.normal(size=(3, sizes[0]))
    up = rng.normal(size=(3, sizes[-1]))
    grads = backward(net, x, up)
    h = 1e-6
    for kind in ("weights", "biases"):
        for layer, analytic in enumerate(getattr(grads, kind)):
            for index in np.ndindex(analytic.shape):
                value = getattr(net, kind)[layer][index]
                plus = _loss(_with_value(net, kind, layer, index, value + h), x, up)
                minus = _loss(_with_value(net, kind, layer, index, value - h), x, up)
                numeric = (plus - minus) / (2 * h)
                assert _close(analytic[index], numeric)


def test_input_gradient_matches_finite_differences(rng):
    net = mlp_init([3, 6, 2], ("tanh", "tanh"), rng_seed=4)
    x = rng.normal(size=3)
    up = np.array([1.0, -0.5])
    analytic = input_gradient(net, x, up)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        numeric = (_loss(net, x + e, up) - _loss(net, x - e, up)) / (2 * h)
        assert _close(analytic[i], numeric)


def test_backward_rejects_mismatched_upstream():
    net = mlp_init([2, 3, 1], ("relu", "linear"), rng_seed=0)
    with pytest.raises(ShapeError):
        backward(net, np.zeros((4, 2)), np.zeros((4, 2)))


def test_adam_moves_only_with_gradient():
    net = mlp_init([2, 3, 1], ("relu", "linear"), rng_seed=0)
    state = AdamState.zeros(net)
    zero = Gradients(
        tuple(np.zeros_like(w) for w in net.weights),
        tuple(np.zeros_like(b) for b in net.biases),
    )
    assert zero.is_zero()
    same, state1 = adam_step(net, zero, state, lr=1e-3)
    assert _same(same, net)
    assert state1.step == 1

    grads = backward(net, np.array([1.0, 2.0]), np.array([1.0]))
    moved, _ = adam_step(net, grads, state, lr=1e-3)
    assert not _same(moved, net)
    # First bias-corrected Adam step moves each parameter by about lr
    delta = np.abs(moved.biases[-1] - net.biases[-1])
    assert delta == pytest.approx(1e-3, rel=1e-3)


def test_adam_rejects_non_finite_gradient():
    net = mlp_init([2, 1], "linear", rng_seed=0)
    bad = Gradients((np.array([[np.nan, 0.0]]),), (np.zeros(1),))
    assert not bad.is_finite()
    with pytest.raises(TrainingDivergenceError):
        adam_step(net, bad, AdamState.zeros(net), lr=1e-3)
    with pytest.raises(TrainingDivergenceError):
        sgd_step(net, bad, lr=1e-3)


def test_sgd_step():
    net = mlp_init([2, 1], "linear", rng_seed=0)
    grads = Gradients((np.ones((1, 2)),), (np.ones(1),))
    stepped = sgd_step(net, grads, lr=0.1)
    assert np.allclose(stepped.weights[0], net.weights[0] - 0.1)
    assert np.allclose(stepped.biases[0], net.biases[0] - 0.1)


def test_optimizer_selects_rule():
    net = mlp_init([2, 1], "linear", rng_seed=0)
    grads = Gradients((np.ones((1, 2)),), (np.ones(1),))
    sgd = Optimizer("sgd", 0.1, net)
    assert np.allclose(sgd.step(net, grads).biases[0], -0.1)
    adam = Optimizer("adam", 0.1, net)
    adam.step(net, grads)
    assert adam.state.step == 1
    with pytest.raises(InvalidArgumentError):
        Optimizer("rmsprop", 0.1, net)


def test_soft_update():
    target = mlp_init([2, 3, 1], ("relu", "linear"), rng_seed=0)
    online = mlp_init([2, 3, 1], ("relu", "linear"), rng_seed=1)
    assert _same(soft_update(target, online, 1.0), online)
    blended = soft_update(target, online, 0.005)
    expected = 0.005 * online.weights[0] + 0.995 * target.weights[0]
    assert np.allclose(blended.weights[0], expected)

    with pytest.raises(InvalidArgumentError):
        soft_update(target, online, 0.0)
    with pytest.raises(InvalidArgumentError):
        soft_update(target, online, 1.5)
    with pytest.raises(ShapeError):
        soft_update(target, mlp_init([2, 4, 1], ("relu", "linear"), 0), 0.5)


def test_save_and_load(tmp_path):
    net = mlp_init([4, 8, 8, 2], ("relu", "relu", "tanh"), rng_seed=3)
    path = save_params(net, tmp_path / "models" / "net.uavmlp")
    assert path.read_bytes().startswith(b"UAVMLP")
    loaded = load_params(path)
    assert _same(loaded, net)
    x = np.linspace(-1, 1, 4)
    assert np.array_equal(forward(loaded, x), forward(net, x))


def test_load_rejects_bad_files(tmp_path):
    net = mlp_init([2, 3, 1], ("relu", "linear"), rng_seed=0)
    good = save_params(net, tmp_path / "good.uavmlp").read_bytes()

    bad_magic = tmp_path / "magic.uavmlp"
    bad_magic.write_bytes(b"NOTMLP" + good[6:])
    with pytest.raises(ArtifactError, match="not a uavalloc model"):
        load_params(bad_magic)

    bad_version = tmp_path / "version.uavmlp"
    bad_version.write_bytes(good[:6] + b"\x09\x00" + good[8:])
    with pytest.raises(ArtifactError, match="unsupported"):
        load_params(bad_version)

    truncated = tmp_path / "short.uavmlp"
    truncated.write_bytes(good[:-8])
    with pytest.raises(ArtifactError, match="truncated"):
        load_params(truncated)

    with pytest.raises(ArtifactError):
        load_params(tmp_path / "absent.uavmlp")


def test_paramset_validation():
    with pytest.raises(ShapeError):
        ParamSet((np.zeros((2, 3)),), (np.zeros(3),), ("linear",))
    with pytest.raises(ShapeError):
        ParamSet(
            (np.zeros((2, 3)), np.zeros((1, 4))),
            (np.zeros(2), np.zeros(1)),
            ("relu", "linear"),
        )
