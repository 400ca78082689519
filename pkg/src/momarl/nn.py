"""Minimal dense networks with analytic gradients, Adam, and Polyak averaging.

All parameters and activations are float64. Functions are pure: they take
parameter/optimizer-state value objects and return new ones, which keeps
seeded runs bitwise reproducible and makes gradient checks exact.

Parameters live in one flat vector per network (ordering W0, b0, W1, b1,
... with row-major matrices); the per-layer weight matrices and bias
vectors are views into it, so whole-network updates are single vector
operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HIDDEN_ACTIVATIONS = ("relu", "tanh")
OUTPUT_ACTIVATIONS = ("identity", "tanh")


@dataclass(frozen=True)
class MlpSpec:
    """Shape and activations of a fully connected network.

    ``layer_widths`` runs input first, output last; one affine layer per
    consecutive pair of widths.
    """

    layer_widths: tuple[int, ...]
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ValueError("need at least two layer widths (input and output)")
        if any(w < 1 for w in widths):
            raise ValueError(f"all layer widths must be >= 1, got {widths}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"hidden_activation must be one of {HIDDEN_ACTIVATIONS}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"output_activation must be one of {OUTPUT_ACTIVATIONS}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_widths[0]

    @property
    def output_dim(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_params(self) -> int:
        return sum(
            i * o + o for i, o in zip(self.layer_widths[:-1], self.layer_widths[1:])
        )


class MlpParams:
    """Per-layer weight matrices (fan_in, fan_out) and bias vectors.

    ``weights`` and ``biases`` are views into ``flat``, the single backing
    vector used by checkpoints and optimizers.
    """

    __slots__ = ("spec", "flat", "weights", "biases")

    def __init__(self, spec: MlpSpec, weights, biases):
        if len(weights) != spec.n_layers or len(biases) != spec.n_layers:
            raise ValueError("need one weight matrix and one bias vector per layer")
        flat = np.empty(spec.n_params)
        self.spec = spec
        self.flat = flat
        self.weights, self.biases = self._build_views()
        for view, value in zip(self.weights, weights):
            view[...] = value
        for view, value in zip(self.biases, biases):
            view[...] = value

    @classmethod
    def from_flat(cls, spec: MlpSpec, flat: np.ndarray) -> "MlpParams":
        out = object.__new__(cls)
        out.spec = spec
        out.flat = flat
        out.weights, out.biases = out._build_views()
        return out

    def _build_views(self):
        weights = []
        biases = []
        pos = 0
        for fan_in, fan_out in zip(self.spec.layer_widths[:-1], self.spec.layer_widths[1:]):
            weights.append(self.flat[pos: pos + fan_in * fan_out].reshape(fan_in, fan_out))
            pos += fan_in * fan_out
            biases.append(self.flat[pos: pos + fan_out])
            pos += fan_out
        return weights, biases

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "MlpParams":
        return MlpParams.from_flat(self.spec, self.flat.copy())

    def all_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flat)))


@dataclass
class ForwardCache:
    """Activation record produced by :func:`forward`, consumed by :func:`backward`."""

    inputs: list[np.ndarray]   # layer inputs a_0 .. a_{L-1}, each (batch, width)
    pre: list[np.ndarray]      # pre-activations z_1 .. z_L
    output: np.ndarray         # (batch, output_dim)
    squeeze: bool              # True when the original input was a 1-d vector


def init_params(spec: MlpSpec, seed: int) -> MlpParams:
    """Seeded init: weights uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero."""
    return init_params_rng(spec, np.random.default_rng(seed))


def init_params_rng(spec: MlpSpec, rng: np.random.Generator) -> MlpParams:
    """Like :func:`init_params` but drawing from a caller-owned generator."""
    params = MlpParams.from_flat(spec, np.zeros(spec.n_params))
    for w in params.weights:
        bound = 1.0 / np.sqrt(w.shape[0])
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    return params


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z  # identity


def _chain_activation(name: str, g: np.ndarray, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """g * d(activation)/dz without materializing the identity case."""
    if name == "relu":
        return g * (z > 0.0)
    if name == "tanh":
        return g * (1.0 - a * a)
    return g


def forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network on a vector (in_dim,) or batch (batch, in_dim)."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    spec = params.spec
    if x.shape[1] != spec.input_dim:
        raise ValueError(f"input width {x.shape[1]} does not match spec input {spec.input_dim}")

    inputs = [x]
    pre = []
    h = x
    last = spec.n_layers - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        pre.append(z)
        act = spec.output_activation if layer == last else spec.hidden_activation
        h = _activate(act, z)
        if layer != last:
            inputs.append(h)
    cache = ForwardCache(inputs=inputs, pre=pre, output=h, squeeze=squeeze)
    out = h[0] if squeeze else h
    return out, cache


def backward(
    params: MlpParams, cache: ForwardCache, output_grad: np.ndarray
) -> tuple[MlpParams, np.ndarray]:
    """Exact reverse-mode gradients of (output . output_grad).

    Returns (parameter gradients shaped like ``params``, gradient w.r.t. the
    input). ``cache`` must come from :func:`forward` on the same parameters.
    """
    spec = params.spec
    g = np.asarray(output_grad, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape != cache.output.shape:
        raise ValueError(
            f"output_grad shape {g.shape} does not match cached output {cache.output.shape}"
        )
    if len(cache.pre) != spec.n_layers or cache.inputs[0].shape[1] != spec.input_dim:
        raise ValueError("stale cache: shapes do not match these parameters")

    grads = MlpParams.from_flat(spec, np.empty(spec.n_params))
    last = spec.n_layers - 1
    for layer in range(last, -1, -1):
        act = spec.output_activation if layer == last else spec.hidden_activation
        a = cache.output if layer == last else cache.inputs[layer + 1]
        dz = _chain_activation(act, g, cache.pre[layer], a)
        np.matmul(cache.inputs[layer].T, dz, out=grads.weights[layer])
        dz.sum(axis=0, out=grads.biases[layer])
        g = dz @ params.weights[layer].T
    input_grad = g[0] if cache.squeeze else g
    return grads, input_grad


def zeros_like_params(params: MlpParams) -> MlpParams:
    return MlpParams.from_flat(params.spec, np.zeros(params.spec.n_params))


def add_params(a: MlpParams, b: MlpParams) -> MlpParams:
    """Element-wise sum; used to accumulate gradients from several passes."""
    return MlpParams.from_flat(a.spec, a.flat + b.flat)


@dataclass
class AdamState:
    """First/second moment accumulators plus the hyperparameters of one optimizer."""

    m: np.ndarray
    v: np.ndarray
    step: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: MlpParams, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    n = params.spec.n_params
    return AdamState(m=np.zeros(n), v=np.zeros(n), step=0, lr=lr,
                     beta1=beta1, beta2=beta2, eps=eps)


def adam_step(
    params: MlpParams, grads: MlpParams, state: AdamState
) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam update; increments the step counter by exactly 1."""
    g = grads.flat
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite gradient passed to adam_step")
    if grads.spec != params.spec:
        raise ValueError("gradient shapes do not match parameters")

    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * (g * g)
    update = state.lr * (m / (1.0 - b1 ** t)) / (np.sqrt(v / (1.0 - b2 ** t)) + state.eps)
    out = MlpParams.from_flat(params.spec, params.flat - update)
    return out, AdamState(m, v, t, state.lr, b1, b2, state.eps)


def soft_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """Polyak averaging: new_target = tau * online + (1 - tau) * target."""
    if target.spec != online.spec:
        raise ValueError("soft_update requires matching specs")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    return MlpParams.from_flat(target.spec, tau * online.flat + (1.0 - tau) * target.flat)


def clone_params(params: MlpParams) -> MlpParams:
    return params.copy()


# --- checkpoint format -------------------------------------------------------
#
# A single file: an ASCII key-value manifest terminated by "header_end", then
# the parameter payload as raw little-endian float64 in flat ordering
# (W0, b0, W1, b1, ... row-major). Round-trips are bit-exact.

_CHECKPOINT_MAGIC = "mlp-params-v1"


def save_params(path, params: MlpParams) -> None:
    spec = params.spec
    arrays = [np.ascontiguousarray(a, dtype="<f8") for a in params.arrays()]
    offsets = []
    pos = 0
    for a in arrays:
        offsets.append(pos)
        pos += a.nbytes
    lines = [
        f"format {_CHECKPOINT_MAGIC}",
        "layer_widths " + ",".join(str(w) for w in spec.layer_widths),
        f"hidden_activation {spec.hidden_activation}",
        f"output_activation {spec.output_activation}",
        f"layer_count {spec.n_layers}",
        "offsets " + ",".join(str(o) for o in offsets),
        f"payload_bytes {pos}",
        "header_end",
    ]
    header = ("\n".join(lines) + "\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        for a in arrays:
            fh.write(a.tobytes())


def load_params(path) -> MlpParams:
    with open(path, "rb") as fh:
        raw = fh.read()
    marker = b"header_end\n"
    cut = raw.find(marker)
    if cut < 0:
        raise ValueError(f"{path}: missing checkpoint header terminator")
    fields = {}
    for line in raw[:cut].decode("ascii").splitlines():
        key, _, value = line.partition(" ")
        fields[key] = value
    if fields.get("format") != _CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: unknown checkpoint format {fields.get('format')!r}")
    widths = tuple(int(w) for w in fields["layer_widths"].split(","))
    spec = MlpSpec(widths, fields["hidden_activation"], fields["output_activation"])
    payload = raw[cut + len(marker):]
    if len(payload) != int(fields["payload_bytes"]):
        raise ValueError(f"{path}: payload size mismatch")
    offsets = [int(o) for o in fields["offsets"].split(",")]

    params = MlpParams.from_flat(spec, np.empty(spec.n_params))
    k = 0
    for w, b in zip(params.weights, params.biases):
        w[...] = np.frombuffer(payload, dtype="<f8", count=w.size,
                               offset=offsets[k]).reshape(w.shape)
        b[...] = np.frombuffer(payload, dtype="<f8", count=b.size, offset=offsets[k + 1])
        k += 2
    return params
