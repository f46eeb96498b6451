"""Minimal dense-network engine.

Fully connected layers with relu/tanh/linear activations, reverse-mode
gradients for parameters and inputs, Adam and SGD updates, soft target
updates and a versioned binary save format. Everything is float64 numpy;
a ``ParamSet`` is immutable and every update returns a new one.
"""

import json
import struct
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from ..core.errors import (
    ArtifactError,
    InvalidArgumentError,
    ShapeError,
    TrainingDivergenceError,
)

ACTIVATIONS = ("relu", "tanh", "linear")

MAGIC = b"UAVMLP"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<HI")


@dataclass(frozen=True, eq=False)
class ParamSet:
    """Weights ``[out x in]``, biases ``[out]`` and one activation per layer."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activations: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.weights:
            raise InvalidArgumentError("A network needs at least one layer")
        if not len(self.weights) == len(self.biases) == len(self.activations):
            raise ShapeError("weights, biases and activations differ in length")
        for i, (w, b, act) in enumerate(
            zip(self.weights, self.biases, self.activations)
        ):
            if act not in ACTIVATIONS:
                raise InvalidArgumentError(f"Unknown activation {act!r}")
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"Layer {i}: weight {w.shape} vs bias {b.shape}")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(
                    f"Layer {i} expects {w.shape[1]} inputs, "
                    f"previous layer emits {self.weights[i - 1].shape[0]}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidArgumentError(f"Layer {i} holds non-finite values")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def n_inputs(self) -> int:
        return int(self.weights[0].shape[1])

    @property
    def n_outputs(self) -> int:
        return int(self.weights[-1].shape[0])


@dataclass(frozen=True, eq=False)
class Gradients:
    """Parameter gradients, shape-congruent with a ``ParamSet``."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.weights + self.biases)

    def is_zero(self) -> bool:
        return not any(np.any(a) for a in self.weights + self.biases)


def layer_activations(n_layers: int, hidden: str, output: str) -> tuple[str, ...]:
    """Activation spec with ``hidden`` everywhere except the output layer."""
    return (hidden,) * (n_layers - 1) + (output,)


def mlp_init(
    layer_sizes: Sequence[int],
    activations: Union[str, Sequence[str]],
    rng_seed: int,
) -> ParamSet:
    """Initialise a multilayer perceptron with fan-in scaled uniform weights.

    Relu layers draw from U(-sqrt(6/fan_in), sqrt(6/fan_in)), the others from
    U(-sqrt(3/fan_in), sqrt(3/fan_in)). Biases start at zero.

    Args:
        layer_sizes: Input width followed by every layer's width
        activations: One tag per layer, or a single tag for all layers
        rng_seed: Seed of the initialisation stream

    Returns:
        The new parameter set

    Raises:
        InvalidArgumentError: If fewer than two sizes are given
    """
    sizes = [int(n) for n in layer_sizes]
    if len(sizes) < 2 or any(n < 1 for n in sizes):
        raise InvalidArgumentError("Need at least two positive layer sizes")
    n_layers = len(sizes) - 1
    acts = (
        (activations,) * n_layers
        if isinstance(activations, str)
        else tuple(activations)
    )
    if len(acts) != n_layers:
        raise InvalidArgumentError(
            f"{len(acts)} activations given for {n_layers} layers"
        )
    rng = np.random.default_rng(rng_seed)
    weights = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], acts):
        limit = np.sqrt((6.0 if act == "relu" else 3.0) / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
    biases = tuple(np.zeros(n) for n in sizes[1:])
    return ParamSet(tuple(weights), biases, acts)


def _activate(z: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return (z > 0).astype(np.float64)
    if act == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def _as_batch(net: ParamSet, inputs: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != net.n_inputs:
        raise ShapeError(f"Network expects {net.n_inputs} inputs, got {x.shape}")
    return x2, single


def _forward_trace(
    net: ParamSet, x: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    trace = []
    a = x
    for w, b, act in zip(net.weights, net.biases, net.activations):
        z = a @ w.T + b
        a = _activate(z, act)
        trace.append((z, a))
    return trace


def forward(net: ParamSet, inputs: np.ndarray) -> np.ndarray:
    """Evaluate the network on one input vector or a ``[batch x in]`` matrix."""
    x, single = _as_batch(net, inputs)
    out = _forward_trace(net, x)[-1][1]
    return out[0] if single else out


def _backprop(
    net: ParamSet, inputs: np.ndarray, upstream: np.ndarray
) -> tuple[Gradients, np.ndarray]:
    x, single = _as_batch(net, inputs)
    up = np.asarray(upstream, dtype=np.float64)
    up = up[None, :] if up.ndim == 1 else up
    if up.shape != (x.shape[0], net.n_outputs):
        raise ShapeError(
            f"Upstream gradient {up.shape} does not match output "
            f"{(x.shape[0], net.n_outputs)}"
        )
    trace = _forward_trace(net, x)
    grad_w: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    delta = up
    for i in reversed(range(len(net.weights))):
        z, a = trace[i]
        delta = delta * _activation_grad(z, a, net.activations[i])
        prev = trace[i - 1][1] if i else x
        grad_w[i] = delta.T @ prev
        grad_b[i] = delta.sum(axis=0)
        delta = delta @ net.weights[i]
    input_grad = delta[0] if single else delta
    return Gradients(tuple(grad_w), tuple(grad_b)), input_grad


def backward(net: ParamSet, inputs: np.ndarray, upstream: np.ndarray) -> Gradients:
    """Parameter gradients of ``sum(upstream * forward(net, inputs))``.

    Gradients are summed over the batch; scale ``upstream`` for a mean loss.
    """
    return _backprop(net, inputs, upstream)[0]


def input_gradient(
    net: ParamSet, inputs: np.ndarray, upstream: np.ndarray
) -> np.ndarray:
    """Gradient of ``sum(upstream * forward(net, inputs))`` w.r.t. the inputs."""
    return _backprop(net, inputs, upstream)[1]


@dataclass(frozen=True, eq=False)
class AdamState:
    """First and second moment estimates plus the step counter."""

    m_w: tuple[np.ndarray, ...]
    m_b: tuple[np.ndarray, ...]
    v_w: tuple[np.ndarray, ...]
    v_b: tuple[np.ndarray, ...]
    step: int = 0

    @classmethod
    def zeros(cls, net: ParamSet) -> "AdamState":
        zw = tuple(np.zeros_like(w) for w in net.weights)
        zb = tuple(np.zeros_like(b) for b in net.biases)
        return cls(zw, zb, zw, zb, 0)


def _check_congruent(net: ParamSet, grads: Gradients) -> None:
    shapes = [w.shape for w in net.weights] + [b.shape for b in net.biases]
    got = [w.shape for w in grads.weights] + [b.shape for b in grads.biases]
    if shapes != got:
        raise ShapeError("Gradients are not congruent with the network")


def adam_step(
    net: ParamSet,
    grads: Gradients,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[ParamSet, AdamState]:
    """Apply one bias-corrected Adam update.

    Raises:
        TrainingDivergenceError: If a gradient or an updated weight is not
            finite
    """
    _check_congruent(net, grads)
    if not grads.is_finite():
        raise TrainingDivergenceError(
            f"Non-finite gradient at optimizer step {state.step + 1}"
        )
    t = state.step + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t

    def moments(
        params: tuple[np.ndarray, ...],
        g: tuple[np.ndarray, ...],
        m: tuple[np.ndarray, ...],
        v: tuple[np.ndarray, ...],
    ) -> tuple[list[np.ndarray], list[np.ndarray], list[np.ndarray]]:
        new_p, new_m, new_v = [], [], []
        for p_i, g_i, m_i, v_i in zip(params, g, m, v):
            m_i = beta1 * m_i + (1.0 - beta1) * g_i
            v_i = beta2 * v_i + (1.0 - beta2) * g_i * g_i
            new_p.append(p_i - lr * (m_i / c1) / (np.sqrt(v_i / c2) + eps))
            new_m.append(m_i)
            new_v.append(v_i)
        return new_p, new_m, new_v

    w, m_w, v_w = moments(net.weights, grads.weights, state.m_w, state.v_w)
    b, m_b, v_b = moments(net.biases, grads.biases, state.m_b, state.v_b)
    for arr in w + b:
        if not np.all(np.isfinite(arr)):
            raise TrainingDivergenceError(
                f"Adam step {t} produced non-finite weights"
            )
    new_state = AdamState(tuple(m_w), tuple(m_b), tuple(v_w), tuple(v_b), t)
    return ParamSet(tuple(w), tuple(b), net.activations), new_state


def sgd_step(net: ParamSet, grads: Gradients, lr: float) -> ParamSet:
    """Plain gradient descent step."""
    _check_congruent(net, grads)
    if not grads.is_finite():
        raise TrainingDivergenceError("Non-finite gradient in SGD step")
    w = tuple(p - lr * g for p, g in zip(net.weights, grads.weights))
    b = tuple(p - lr * g for p, g in zip(net.biases, grads.biases))
    for arr in w + b:
        if not np.all(np.isfinite(arr)):
            raise TrainingDivergenceError("SGD step produced non-finite weights")
    return ParamSet(w, b, net.activations)


class Optimizer:
    """Stateful wrapper selecting Adam or SGD by name."""

    def __init__(self, kind: str, lr: float, net: ParamSet):
        if kind not in ("adam", "sgd"):
            raise InvalidArgumentError(f"Unknown optimizer {kind!r}")
        self.kind = kind
        self.lr = lr
        self.state = AdamState.zeros(net)

    def step(self, net: ParamSet, grads: Gradients) -> ParamSet:
        if self.kind == "sgd":
            return sgd_step(net, grads, self.lr)
        net, self.state = adam_step(net, grads, self.state, self.lr)
        return net


def soft_update(target: ParamSet, online: ParamSet, tau: float) -> ParamSet:
    """Blend ``tau * online + (1 - tau) * target``; ``tau = 1`` copies online."""
    if not 0.0 < tau <= 1.0:
        raise InvalidArgumentError(f"tau must lie in (0, 1], got {tau}")
    if target.layer_sizes != online.layer_sizes:
        raise ShapeError(
            f"Cannot blend {target.layer_sizes} with {online.layer_sizes}"
        )
    if tau == 1.0:
        return ParamSet(
            tuple(w.copy() for w in online.weights),
            tuple(b.copy() for b in online.biases),
            online.activations,
        )
    w = tuple(
        tau * o + (1.0 - tau) * t for t, o in zip(target.weights, online.weights)
    )
    b = tuple(
        tau * o + (1.0 - tau) * t for t, o in zip(target.biases, online.biases)
    )
    return ParamSet(w, b, online.activations)


def save_params(net: ParamSet, path: Union[str, Path]) -> Path:
    """Write ``net`` in the versioned ``UAVMLP`` binary format.

    Layout: magic, uint16 version, uint32 header length, UTF-8 JSON header
    with layer sizes and activation tags, then each layer's weights
    (row-major) followed by its biases as little-endian float64.
    """
    header = json.dumps(
        {"layer_sizes": list(net.layer_sizes), "activations": list(net.activations)},
        sort_keys=True,
    ).encode("utf-8")
    body = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes()
        for w, b in zip(net.weights, net.biases)
        for a in (w, b)
    )
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(
            MAGIC + _PREFIX.pack(FORMAT_VERSION, len(header)) + header + body
        )
    except OSError as e:
        raise ArtifactError(f"Failed to write model {target}: {e}") from e
    return target


def load_params(path: Union[str, Path]) -> ParamSet:
    """Read a network written by ``save_params``.

    Raises:
        ArtifactError: On a missing file, bad magic, unknown version or a
            truncated body
    """
    source = Path(path)
    try:
        data = source.read_bytes()
    except OSError as e:
        raise ArtifactError(f"Failed to read model {source}: {e}") from e
    if not data.startswith(MAGIC):
        raise ArtifactError(f"{source} is not a uavalloc model file")
    offset = len(MAGIC)
    try:
        version, header_len = _PREFIX.unpack_from(data, offset)
    except struct.error as e:
        raise ArtifactError(f"{source}: truncated header") from e
    if version != FORMAT_VERSION:
        raise ArtifactError(f"{source}: unsupported model format {version}")
    offset += _PREFIX.size
    header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    sizes = header["layer_sizes"]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        for shape in ((fan_out, fan_in), (fan_out,)):
            count = int(np.prod(shape))
            end = offset + 8 * count
            if end > len(data):
                raise ArtifactError(f"{source}: truncated weights")
            arr = np.frombuffer(data[offset:end], dtype="<f8").astype(np.float64)
            (weights if len(shape) == 2 else biases).append(arr.reshape(shape))
            offset = end
    if offset != len(data):
        raise ArtifactError(f"{source}: trailing bytes after weights")
    return ParamSet(tuple(weights), tuple(biases), tuple(header["activations"]))
