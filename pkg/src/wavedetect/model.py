"""The multiscale autoencoder.

One branch per scale: the raw signal is scale 0 and each wavelet detail
level l in 1..L is its own scale with C channels and T/2**l samples. A
branch runs a strided conv stack (every kernel spans all input channels,
so channel correlations are mixed from the first layer), then an LSTM
encoder whose final hidden state is that branch's slice of the global
code. Decoding mirrors this: a dense layer re-initializes the decoder
hidden state from the global code, an LSTM walks the sequence in reverse
order (teacher-forced during training, feeding back its own step outputs
during inference), a dense step head maps hidden states back to
conv-activation space, and a transposed-conv stack restores the signal or
detail array. The last deconv layer is linear; every other conv/deconv
layer uses ReLU.

Strided layers use even kernels with padding (kernel - stride) / 2, which
keeps every layer free of stride remainders on dyadic lengths; encode and
decode are then exact shape inverses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, clamp, col, concat, matmul, relu, sigmoid, stack_cols
from .errors import CapabilityError, ConfigError, ContractError, ShapeError
from .nn import LSTMParams, add, conv1d, deconv1d, lstm_cell, mse_loss
from .wavelet import get_family


@dataclass(frozen=True)
class ConvLayer:
    features: int
    kernel: int
    stride: int


DEFAULT_CONV = (ConvLayer(32, 8, 2), ConvLayer(64, 4, 2))


@dataclass
class ModelConfig:
    channels: int
    fragment_length: int = 512
    levels: int = 3
    conv: tuple = DEFAULT_CONV
    hidden: int = 32
    classifier: bool = False
    wavelet: str = "haar"
    seed: int = 0

    def __post_init__(self):
        self.conv = tuple(
            layer if isinstance(layer, ConvLayer) else ConvLayer(*layer) for layer in self.conv
        )
        self.validate()

    def validate(self):
        if self.channels < 1:
            raise ConfigError(f"channels must be >= 1, got {self.channels}")
        if self.hidden < 1:
            raise ConfigError(f"hidden size must be >= 1, got {self.hidden}")
        if self.levels < 0:
            raise ConfigError(f"levels must be >= 0, got {self.levels}")
        if self.fragment_length < 1:
            raise ConfigError("fragment_length must be positive")
        if self.levels and self.fragment_length % (1 << self.levels) != 0:
            raise ConfigError(
                f"fragment_length {self.fragment_length} is not divisible by 2**{self.levels}"
            )
        family = get_family(self.wavelet)
        if self.levels and self.fragment_length >> (self.levels - 1) < len(family):
            raise ConfigError(
                f"{self.levels} levels leave a stage shorter than the {self.wavelet} filter"
            )
        if not self.conv:
            raise ConfigError("at least one conv layer is required")
        for i, layer in enumerate(self.conv):
            if layer.features < 1 or layer.kernel < 1 or layer.stride < 1:
                raise ConfigError(f"conv layer {i} has a non-positive dimension: {layer}")
            if layer.kernel < layer.stride or (layer.kernel - layer.stride) % 2 != 0:
                raise ConfigError(
                    f"conv layer {i}: kernel {layer.kernel} and stride {layer.stride} must "
                    "differ by a non-negative even amount so strided shapes invert exactly"
                )
        for scale in range(self.levels + 1):
            self.conv_lengths(scale)

    def conv_lengths(self, scale: int) -> list:
        """Sequence lengths entering each conv layer of a scale, plus the output."""
        n = self.fragment_length >> scale
        lengths = [n]
        for i, layer in enumerate(self.conv):
            if n % layer.stride != 0:
                raise ConfigError(
                    f"scale {scale}, conv layer {i}: stride {layer.stride} does not divide "
                    f"the incoming length {n}"
                )
            n //= layer.stride
            lengths.append(n)
        return lengths

    @property
    def code_length(self) -> int:
        return (self.levels + 1) * self.hidden

    @property
    def conv_features(self) -> int:
        return self.conv[-1].features


def padding_for(layer: ConvLayer) -> int:
    return (layer.kernel - layer.stride) // 2


def config_to_dict(config: ModelConfig) -> dict:
    return {
        "channels": config.channels,
        "fragment_length": config.fragment_length,
        "levels": config.levels,
        "conv": [[l.features, l.kernel, l.stride] for l in config.conv],
        "hidden": config.hidden,
        "classifier": config.classifier,
        "wavelet": config.wavelet,
        "seed": config.seed,
    }


def config_from_dict(data: dict) -> ModelConfig:
    kwargs = dict(data)
    kwargs["conv"] = tuple(ConvLayer(*layer) for layer in kwargs.get("conv", []))
    return ModelConfig(**kwargs)


@dataclass
class ScaleBranch:
    conv: list = field(default_factory=list)      # [(kernels, bias), ...]
    encoder: LSTMParams = None
    dec_init_w: Tensor = None
    dec_init_b: Tensor = None
    decoder: LSTMParams = None
    step_w: Tensor = None
    step_b: Tensor = None
    deconv: list = field(default_factory=list)    # deepest layer first


def _uniform(rng, fan_in, shape) -> Tensor:
    bound = np.sqrt(1.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, shape), requires_grad=True)


class WaveletAutoencoder:
    """All learnable parameters plus the encode/decode/classify passes."""

    def __init__(self, config: ModelConfig):
        config.validate()
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.branches: list[ScaleBranch] = []
        self._named: list[tuple[str, Tensor]] = []
        for scale in range(config.levels + 1):
            self.branches.append(self._build_branch(scale, rng))
        self.classifier_w = None
        self.classifier_b = None
        if config.classifier:
            self.classifier_w = _uniform(rng, config.code_length, (1, config.code_length))
            self.classifier_b = _uniform(rng, config.code_length, 1)
            self._named.append(("classifier.weight", self.classifier_w))
            self._named.append(("classifier.bias", self.classifier_b))

    def _build_branch(self, scale: int, rng) -> ScaleBranch:
        cfg = self.config
        branch = ScaleBranch()
        name = f"scale{scale}"
        feats = cfg.channels
        for i, layer in enumerate(cfg.conv):
            kernels = _uniform(rng, feats * layer.kernel, (layer.features, feats, layer.kernel))
            bias = _uniform(rng, feats * layer.kernel, layer.features)
            branch.conv.append((kernels, bias))
            self._named.append((f"{name}.conv{i}.kernel", kernels))
            self._named.append((f"{name}.conv{i}.bias", bias))
            feats = layer.features

        branch.encoder = LSTMParams.init(feats, cfg.hidden, rng)
        for pname, tensor in branch.encoder.named():
            self._named.append((f"{name}.enc.{pname}", tensor))

        branch.dec_init_w = _uniform(rng, cfg.code_length, (cfg.hidden, cfg.code_length))
        branch.dec_init_b = _uniform(rng, cfg.code_length, cfg.hidden)
        self._named.append((f"{name}.dec_init.weight", branch.dec_init_w))
        self._named.append((f"{name}.dec_init.bias", branch.dec_init_b))

        branch.decoder = LSTMParams.init(feats, cfg.hidden, rng)
        for pname, tensor in branch.decoder.named():
            self._named.append((f"{name}.dec.{pname}", tensor))

        branch.step_w = _uniform(rng, cfg.hidden, (feats, cfg.hidden))
        branch.step_b = _uniform(rng, cfg.hidden, feats)
        self._named.append((f"{name}.step.weight", branch.step_w))
        self._named.append((f"{name}.step.bias", branch.step_b))

        in_feats = [cfg.channels] + [layer.features for layer in cfg.conv[:-1]]
        for i in range(len(cfg.conv) - 1, -1, -1):
            layer = cfg.conv[i]
            kernels = _uniform(rng, layer.features * layer.kernel, (layer.features, in_feats[i], layer.kernel))
            bias = _uniform(rng, layer.features * layer.kernel, in_feats[i])
            branch.deconv.append((kernels, bias))
            self._named.append((f"{name}.deconv{i}.kernel", kernels))
            self._named.append((f"{name}.deconv{i}.bias", bias))
        return branch

    def named_parameters(self):
        return list(self._named)

    def parameters(self):
        return [t for _, t in self._named]

    # -- forward passes ---------------------------------------------------

    def _scale_inputs(self, fragment, decomp):
        cfg = self.config
        values = np.asarray(getattr(fragment, "values", fragment), dtype=np.float64)
        if values.shape != (cfg.channels, cfg.fragment_length):
            raise ShapeError(
                f"fragment shape {values.shape} does not match "
                f"({cfg.channels}, {cfg.fragment_length})"
            )
        inputs = [values]
        if cfg.levels == 0:
            if decomp is not None and getattr(decomp, "levels", 0):
                raise ContractError("a zero-level model takes no decomposition")
            return inputs
        if decomp is None or decomp.levels != cfg.levels:
            got = None if decomp is None else decomp.levels
            raise ContractError(f"expected a {cfg.levels}-level decomposition, got {got}")
        for l, det in enumerate(decomp.details, start=1):
            want = (cfg.channels, cfg.fragment_length >> l)
            if det.shape != want:
                raise ShapeError(f"detail level {l} has shape {det.shape}, expected {want}")
            inputs.append(det)
        return inputs

    def _encode_scale(self, scale: int, values: np.ndarray):
        cfg = self.config
        branch = self.branches[scale]
        acts = Tensor(values)
        for (kernels, bias), layer in zip(branch.conv, cfg.conv):
            acts = relu(conv1d(acts, kernels, bias, layer.stride, padding_for(layer)))
        h = Tensor(np.zeros(cfg.hidden))
        c = Tensor(np.zeros(cfg.hidden))
        for t in range(acts.data.shape[1]):
            h, c = lstm_cell(col(acts, t), h, c, branch.encoder)
        return h, acts

    def encode(self, fragment, decomp=None):
        """Run every scale branch; returns (code, per-scale conv activations).

        The code concatenates the final encoder hidden states in scale order
        0..L, which is the fixed layout the decoder and classifier rely on.
        """
        inputs = self._scale_inputs(fragment, decomp)
        finals, activations = [], []
        for scale, values in enumerate(inputs):
            h, acts = self._encode_scale(scale, values)
            finals.append(h)
            activations.append(acts)
        return concat(finals), activations

    def decode(self, code, teacher_activations=None):
        """Reconstruct the signal and every detail array from the code.

        With ``teacher_activations`` (the encoder's conv activations) the
        LSTM decoder consumes ground-truth step inputs; without them it
        feeds back its own step outputs.
        """
        cfg = self.config
        code_data = code.data if isinstance(code, Tensor) else np.asarray(code)
        if code_data.shape != (cfg.code_length,):
            raise ShapeError(f"code shape {code_data.shape} does not match ({cfg.code_length},)")
        if not isinstance(code, Tensor):
            code = Tensor(code_data)
        teacher = None
        if teacher_activations is not None:
            if len(teacher_activations) != cfg.levels + 1:
                raise ContractError(
                    f"expected {cfg.levels + 1} teacher activation sequences, "
                    f"got {len(teacher_activations)}"
                )
            teacher = list(teacher_activations)

        outputs = []
        for scale, branch in enumerate(self.branches):
            steps = cfg.conv_lengths(scale)[-1]
            feats = cfg.conv_features
            taught = None
            if teacher is not None:
                taught = teacher[scale]
                tdata = taught.data if isinstance(taught, Tensor) else np.asarray(taught)
                if tdata.shape != (feats, steps):
                    raise ContractError(
                        f"teacher activations for scale {scale} have shape {tdata.shape}, "
                        f"expected {(feats, steps)}"
                    )
                if not isinstance(taught, Tensor):
                    taught = Tensor(tdata)

            h = add(matmul(branch.dec_init_w, code), branch.dec_init_b)
            c = Tensor(np.zeros(cfg.hidden))
            step_in = Tensor(np.zeros(feats))
            slots = [None] * steps
            for t in range(steps - 1, -1, -1):
                h, c = lstm_cell(step_in, h, c, branch.decoder)
                out_t = add(matmul(branch.step_w, h), branch.step_b)
                slots[t] = out_t
                step_in = col(taught, t) if taught is not None else out_t

            acts = stack_cols(slots)
            for i, (kernels, bias) in enumerate(branch.deconv):
                layer = cfg.conv[len(cfg.conv) - 1 - i]
                acts = deconv1d(acts, kernels, bias, layer.stride, padding_for(layer))
                if i < len(branch.deconv) - 1:
                    acts = relu(acts)
            outputs.append(acts)
        return outputs

    _CLASSIFY_EPS = 1e-7

    def classify(self, code):
        """Anomaly probability from the code, clamped inside (0, 1)."""
        if self.classifier_w is None:
            raise CapabilityError("model was built without a classifier head")
        code = code if isinstance(code, Tensor) else Tensor(code)
        logit = add(matmul(self.classifier_w, code), self.classifier_b)
        return clamp(sigmoid(logit), self._CLASSIFY_EPS, 1.0 - self._CLASSIFY_EPS)


def reconstruction_loss(targets, reconstructions) -> Tensor:
    """Sum of per-scale mean-squared errors: signal term plus one term per
    detail level."""
    if len(targets) != len(reconstructions):
        raise ShapeError(
            f"{len(targets)} targets vs {len(reconstructions)} reconstructions"
        )
    total = None
    for target, recon in zip(targets, reconstructions):
        term = mse_loss(recon, target)
        total = term if total is None else add(total, term)
    return total
