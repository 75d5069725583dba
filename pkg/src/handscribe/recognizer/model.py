"""Recognizer model: an 8-block convolution stack feeding per-column
dense layers, a four-direction multidimensional LSTM over the pre-collapse
feature grid, and a linear projection to per-timestep class logits.

The default configuration maps a 128x32 input to 32 timesteps of 512
features and 32x80 logits (79 characters + CTC blank). All sizes are
configurable so tests can run scaled-down instances of the same code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import sgm
from ..errors import ShapeMismatchError, ValidationError
from . import layers, mdlstm

DEFAULT_KERNELS = (7, 5, 5, 3, 3, 3, 3, 3)
DEFAULT_CHANNELS = (16, 32, 64, 64, 64, 64, 64, 64)
DEFAULT_POOLS = (0, 1)


@dataclass(frozen=True)
class ModelConfig:
    input_width: int = 128
    input_height: int = 32
    conv_kernels: tuple[int, ...] = DEFAULT_KERNELS
    conv_channels: tuple[int, ...] = DEFAULT_CHANNELS
    pool_after: tuple[int, ...] = DEFAULT_POOLS
    hidden_size: int = 256
    num_chars: int = 79
    noise_sigma: float = 0.1

    def __post_init__(self):
        if len(self.conv_kernels) != len(self.conv_channels):
            raise ValidationError("conv_kernels and conv_channels must align")
        if any(k % 2 == 0 or k < 1 for k in self.conv_kernels):
            raise ValidationError("conv kernels must be odd")
        shrink = 2 ** len(self.pool_after)
        if self.input_width % shrink or self.input_height % shrink:
            raise ValidationError("input dims must be divisible by the pooling shrink factor")
        if self.hidden_size < 1 or self.num_chars < 1:
            raise ValidationError("hidden_size and num_chars must be >= 1")

    @property
    def timesteps(self) -> int:
        return self.input_width // 2 ** len(self.pool_after)

    @property
    def grid_height(self) -> int:
        return self.input_height // 2 ** len(self.pool_after)

    @property
    def grid_channels(self) -> int:
        return self.conv_channels[-1]

    @property
    def feature_size(self) -> int:
        return self.grid_height * self.grid_channels

    @property
    def num_classes(self) -> int:
        return self.num_chars + 1


def _glorot(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    fan_in = int(np.prod(shape[:-1]))
    fan_out = int(shape[-1])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_params(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases, forget-gate biases at 1."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    cin = 1
    for idx, (k, cout) in enumerate(zip(cfg.conv_kernels, cfg.conv_channels)):
        params[f"conv{idx}/w"] = _glorot(rng, (k, k, cin, cout), dtype)
        params[f"conv{idx}/b"] = np.zeros(cout, dtype=dtype)
        cin = cout
    feat = cfg.feature_size
    for idx in range(2):
        params[f"fc{idx}/w"] = _glorot(rng, (feat, feat), dtype)
        params[f"fc{idx}/b"] = np.zeros(feat, dtype=dtype)
    hid = cfg.hidden_size
    for d in range(4):
        params[f"lstm{d}/wx"] = _glorot(rng, (cfg.grid_channels, 5 * hid), dtype)
        params[f"lstm{d}/wh"] = _glorot(rng, (hid, 5 * hid), dtype)
        params[f"lstm{d}/wv"] = _glorot(rng, (hid, 5 * hid), dtype)
        bias = np.zeros(5 * hid, dtype=dtype)
        bias[hid:3 * hid] = 1.0  # forget gates start open
        params[f"lstm{d}/b"] = bias
    # The projection sees the sum of 4 directions x grid_height hidden
    # vectors, so its effective fan-in is that summand count; using the
    # raw hidden size here puts the initial logits at +/-15 and stalls
    # training in the all-blank optimum.
    fan_in = hid * 4 * cfg.grid_height
    limit = np.sqrt(6.0 / (fan_in + cfg.num_classes))
    params["proj/w"] = rng.uniform(-limit, limit, size=(hid, cfg.num_classes)).astype(dtype)
    params["proj/b"] = np.zeros(cfg.num_classes, dtype=dtype)
    return params


def check_params(cfg: ModelConfig, params: dict[str, np.ndarray]) -> None:
    reference = init_params(cfg, seed=0, dtype=np.float32)
    for name, ref in reference.items():
        if name not in params:
            raise ShapeMismatchError(f"missing parameter {name}")
        if tuple(params[name].shape) != tuple(ref.shape):
            raise ShapeMismatchError(
                f"parameter {name} has shape {params[name].shape}, expected {ref.shape}"
            )
        if not np.isfinite(params[name]).all():
            raise ShapeMismatchError(f"parameter {name} contains non-finite values")


@dataclass
class Model:
    cfg: ModelConfig
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.params:
            self.params = init_params(self.cfg)

    # -- forward ---------------------------------------------------------

    def cnn_forward_batch(self, x: np.ndarray, train: bool = False,
                          rng: Optional[np.random.Generator] = None,
                          noise_sigma: Optional[float] = None):
        """(B, W, H) inputs -> (B, T, F) per-column features plus caches."""
        cfg = self.cfg
        if x.ndim != 3 or x.shape[1] != cfg.input_width or x.shape[2] != cfg.input_height:
            raise ShapeMismatchError(
                f"expected (B, {cfg.input_width}, {cfg.input_height}) input, got {x.shape}"
            )
        caches = []
        act = x[..., None].astype(self.params["conv0/w"].dtype)
        for idx in range(len(cfg.conv_kernels)):
            w = self.params[f"conv{idx}/w"]
            b = self.params[f"conv{idx}/b"]
            if w.shape[2] != act.shape[3]:
                raise ShapeMismatchError(f"conv{idx} expects {w.shape[2]} channels, got {act.shape[3]}")
            act, conv_cache = layers.conv2d_forward(act, w, b)
            act, relu_mask = layers.relu_forward(act)
            pool_cache = None
            if idx in cfg.pool_after:
                act, pool_cache = layers.maxpool2_forward(act)
            caches.append((conv_cache, relu_mask, pool_cache))

        if train:
            sigma = cfg.noise_sigma if noise_sigma is None else noise_sigma
            act = layers.gaussian_noise(act, sigma, rng or np.random.default_rng())

        batch = act.shape[0]
        grid_shape = act.shape
        flat = act.reshape(batch, cfg.timesteps, cfg.feature_size)
        fc0, fc0_cache = layers.dense_forward(flat, self.params["fc0/w"], self.params["fc0/b"])
        fc0_act, fc0_mask = layers.relu_forward(fc0)
        feat, fc1_cache = layers.dense_forward(fc0_act, self.params["fc1/w"], self.params["fc1/b"])
        return feat, (caches, grid_shape, fc0_cache, fc0_mask, fc1_cache)

    def cnn_backward_batch(self, dfeat: np.ndarray, cache):
        caches, grid_shape, fc0_cache, fc0_mask, fc1_cache = cache
        grads: dict[str, np.ndarray] = {}
        dfc0_act, grads["fc1/w"], grads["fc1/b"] = layers.dense_backward(
            dfeat, self.params["fc1/w"], fc1_cache)
        dfc0 = layers.relu_backward(dfc0_act, fc0_mask)
        dflat, grads["fc0/w"], grads["fc0/b"] = layers.dense_backward(
            dfc0, self.params["fc0/w"], fc0_cache)
        dact = dflat.reshape(grid_shape)
        for idx in range(len(self.cfg.conv_kernels) - 1, -1, -1):
            conv_cache, relu_mask, pool_cache = caches[idx]
            if pool_cache is not None:
                dact = layers.maxpool2_backward(dact, pool_cache)
            dact = layers.relu_backward(dact, relu_mask)
            dact, grads[f"conv{idx}/w"], grads[f"conv{idx}/b"] = layers.conv2d_backward(
                dact, self.params[f"conv{idx}/w"], self.params[f"conv{idx}/b"], conv_cache)
        dx = dact[..., 0]
        return dx, grads

    def grid_view(self, feat: np.ndarray) -> np.ndarray:
        """(B, T, F) features as the pre-collapse (B, T, Yg, C) grid."""
        cfg = self.cfg
        return feat.reshape(feat.shape[0], cfg.timesteps, cfg.grid_height, cfg.grid_channels)

    def mdlstm_forward_batch(self, grid: np.ndarray):
        """(B, T, Yg, C) grid -> (B, T, num_classes) raw logits."""
        cfg = self.cfg
        expected = (cfg.timesteps, cfg.grid_height, cfg.grid_channels)
        if grid.ndim != 4 or tuple(grid.shape[1:]) != expected:
            raise ShapeMismatchError(f"expected (B,)+{expected} grid, got {grid.shape}")
        h_sum, scan_caches = mdlstm.forward(grid, self.params)
        collapsed = h_sum.sum(axis=2)
        logits, proj_cache = layers.dense_forward(
            collapsed, self.params["proj/w"], self.params["proj/b"])
        return logits, (scan_caches, grid.shape, proj_cache)

    def mdlstm_backward_batch(self, dlogits: np.ndarray, cache):
        scan_caches, grid_shape, proj_cache = cache
        dcollapsed, dproj_w, dproj_b = layers.dense_backward(
            dlogits, self.params["proj/w"], proj_cache)
        dh = np.broadcast_to(dcollapsed[:, :, None, :], grid_shape[:3] + (self.cfg.hidden_size,))
        dgrid, grads = mdlstm.backward(np.ascontiguousarray(dh), self.params, scan_caches)
        grads["proj/w"] = dproj_w
        grads["proj/b"] = dproj_b
        return dgrid, grads

    def forward_batch(self, x: np.ndarray, train: bool = False,
                      rng: Optional[np.random.Generator] = None,
                      noise_sigma: Optional[float] = None):
        feat, cnn_cache = self.cnn_forward_batch(x, train=train, rng=rng, noise_sigma=noise_sigma)
        logits, lstm_cache = self.mdlstm_forward_batch(self.grid_view(feat))
        return logits, (cnn_cache, lstm_cache, feat.shape)

    def backward_batch(self, dlogits: np.ndarray, cache):
        cnn_cache, lstm_cache, feat_shape = cache
        dgrid, grads = self.mdlstm_backward_batch(dlogits, lstm_cache)
        dx, cnn_grads = self.cnn_backward_batch(dgrid.reshape(feat_shape), cnn_cache)
        grads.update(cnn_grads)
        return dx, grads

    def logits(self, image: np.ndarray) -> np.ndarray:
        """Inference logits for one normalized (W, H) image."""
        out, _ = self.forward_batch(image[None], train=False)
        return out[0]


# -- spec-surface single-image wrappers -----------------------------------


def cnn_forward(image: np.ndarray, model: Model, training: bool = False,
                rng: Optional[np.random.Generator] = None):
    """(W, H) normalized image -> (T, F) feature map (and the cache when
    training, for backpropagation)."""
    if image.ndim != 2:
        raise ShapeMismatchError(f"expected a (W, H) image, got {image.shape}")
    feat, cache = model.cnn_forward_batch(image[None], train=training, rng=rng)
    return (feat[0], cache) if training else feat[0]


def mdlstm_forward(features: np.ndarray, model: Model) -> np.ndarray:
    """(T, Yg, C) feature grid (or its (T, F) collapsed view) -> (T,
    num_classes) logits."""
    cfg = model.cfg
    if features.ndim == 2:
        features = features.reshape(cfg.timesteps, cfg.grid_height, cfg.grid_channels)
    if features.ndim != 3:
        raise ShapeMismatchError(f"expected a (T, Yg, C) grid, got {features.shape}")
    logits, _ = model.mdlstm_forward_batch(features[None])
    return logits[0]


# -- persistence -----------------------------------------------------------


def save_model(model: Model, path) -> None:
    """Write config plus every named parameter to the tensor archive; the
    archive's name table doubles as the layer manifest."""
    cfg = model.cfg
    tensors: dict[str, np.ndarray] = {
        "meta/format": np.array([1.0], dtype=np.float32),
        "meta/input": np.array([cfg.input_width, cfg.input_height], dtype=np.float32),
        "meta/kernels": np.array(cfg.conv_kernels, dtype=np.float32),
        "meta/channels": np.array(cfg.conv_channels, dtype=np.float32),
        "meta/pool_after": np.array(cfg.pool_after, dtype=np.float32),
        "meta/hidden": np.array([cfg.hidden_size], dtype=np.float32),
        "meta/num_chars": np.array([cfg.num_chars], dtype=np.float32),
        "meta/noise_sigma": np.array([cfg.noise_sigma], dtype=np.float32),
    }
    for name in sorted(model.params):
        tensors[f"param/{name}"] = model.params[name]
    sgm.write_tensors(path, tensors)


def load_model(path, dtype=np.float32) -> Model:
    tensors = sgm.read_tensors(path)
    try:
        cfg = ModelConfig(
            input_width=int(tensors["meta/input"][0]),
            input_height=int(tensors["meta/input"][1]),
            conv_kernels=tuple(int(v) for v in tensors["meta/kernels"]),
            conv_channels=tuple(int(v) for v in tensors["meta/channels"]),
            pool_after=tuple(int(v) for v in tensors["meta/pool_after"]),
            hidden_size=int(tensors["meta/hidden"][0]),
            num_chars=int(tensors["meta/num_chars"][0]),
            noise_sigma=float(tensors["meta/noise_sigma"][0]),
        )
    except KeyError as exc:
        raise ShapeMismatchError(f"model archive lacks {exc}") from exc
    params = {
        name[len("param/"):]: arr.astype(dtype)
        for name, arr in tensors.items() if name.startswith("param/")
    }
    check_params(cfg, params)
    return Model(cfg=cfg, params=params)
