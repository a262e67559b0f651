"""Dense-embedding fusion arithmetic at desk scale.

Tensors are ``float64`` arrays shaped (C, H, W). The fusion chain is

    EM  = DC1(cat(E_box, E_boundary))          2C -> C
    OBB = cat(CBR(EM), EM)                     C  -> 2C
    ODE = DC2(cat(HF, OBB))                    C_hf + 2C -> C_out

where DC is a pointwise (1x1) convolution and CBR is 3x3 conv, inference-mode
batch norm and ReLU.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeError

# dense prompt embedding shape of the frozen backbone, (C, H, W)
REFERENCE_SHAPE = (256, 64, 64)
DEFAULT_SEED = 0


def _as_tensor(t, stage=None) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"expected a (C, H, W) tensor, got shape {arr.shape}", stage)
    return arr


@dataclass(frozen=True)
class PointwiseConv:
    weight: np.ndarray  # (Cout, Cin)
    bias: np.ndarray  # (Cout,)

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ShapeError(f"pointwise conv needs (Cout, Cin) weight and (Cout,) bias, got {w.shape}, {b.shape}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True)
class CbrBlock:
    conv_weight: np.ndarray  # (Cout, Cin, 3, 3)
    conv_bias: np.ndarray  # (Cout,)
    bn_weight: np.ndarray  # gamma
    bn_bias: np.ndarray  # beta
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        for name in ("conv_weight", "conv_bias", "bn_weight", "bn_bias", "running_mean", "running_var"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        cout = self.conv_weight.shape[0]
        if self.conv_weight.ndim != 4 or self.conv_weight.shape[2:] != (3, 3):
            raise ShapeError(f"CBR conv weight must be (Cout, Cin, 3, 3), got {self.conv_weight.shape}")
        for name in ("conv_bias", "bn_weight", "bn_bias", "running_mean", "running_var"):
            if getattr(self, name).shape != (cout,):
                raise ShapeError(f"CBR {name} must have shape ({cout},)")
        if np.any(self.running_var + self.eps <= 0):
            raise ValueError("running_var + eps must be positive")

    @property
    def in_channels(self) -> int:
        return self.conv_weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.conv_weight.shape[0]


def concat_channels(a, b, stage=None) -> np.ndarray:
    a = _as_tensor(a, stage)
    b = _as_tensor(b, stage)
    if a.shape[1:] != b.shape[1:]:
        raise ShapeError(f"spatial mismatch in concat: {a.shape[1:]} vs {b.shape[1:]}", stage)
    return np.concatenate([a, b], axis=0)


def pointwise_conv(t, pc: PointwiseConv, stage=None) -> np.ndarray:
    t = _as_tensor(t, stage)
    if t.shape[0] != pc.in_channels:
        raise ShapeError(f"pointwise conv expects {pc.in_channels} channels, got {t.shape[0]}", stage)
    c, h, w = t.shape
    out = pc.weight @ t.reshape(c, h * w) + pc.bias[:, None]
    return out.reshape(pc.out_channels, h, w)


def conv3x3(t, weight, bias) -> np.ndarray:
    """3x3 cross-correlation with zero padding of 1."""
    c, h, w = t.shape
    padded = np.pad(t, ((0, 0), (1, 1), (1, 1)))
    out = np.broadcast_to(bias[:, None, None], (weight.shape[0], h, w)).copy()
    for dy in range(3):
        for dx in range(3):
            window = padded[:, dy : dy + h, dx : dx + w].reshape(c, h * w)
            out += (weight[:, :, dy, dx] @ window).reshape(-1, h, w)
    return out


def cbr(t, blk: CbrBlock, stage=None) -> np.ndarray:
    t = _as_tensor(t, stage)
    if t.shape[0] != blk.in_channels:
        raise ShapeError(f"CBR expects {blk.in_channels} channels, got {t.shape[0]}", stage)
    y = conv3x3(t, blk.conv_weight, blk.conv_bias)
    scale = blk.bn_weight / np.sqrt(blk.running_var + blk.eps)
    y = (y - blk.running_mean[:, None, None]) * scale[:, None, None] + blk.bn_bias[:, None, None]
    return np.maximum(y, 0.0)


def bbmg_forward(e_box, e_boundary, dc1: PointwiseConv, blk: CbrBlock) -> np.ndarray:
    """Box/boundary fusion: returns OBB with twice the embedding channels."""
    e_box = _as_tensor(e_box, "bbmg.input")
    e_boundary = _as_tensor(e_boundary, "bbmg.input")
    if e_box.shape != e_boundary.shape:
        raise ShapeError(f"box {e_box.shape} and boundary {e_boundary.shape} embeddings differ", "bbmg.input")
    c = e_box.shape[0]
    if dc1.in_channels != 2 * c or dc1.out_channels != c:
        raise ShapeError(f"dc1 must map {2 * c}->{c}, got {dc1.in_channels}->{dc1.out_channels}", "bbmg.dc1")
    if blk.in_channels != c or blk.out_channels != c:
        raise ShapeError(f"CBR must map {c}->{c}, got {blk.in_channels}->{blk.out_channels}", "bbmg.cbr")
    em = pointwise_conv(concat_channels(e_box, e_boundary, "bbmg.concat"), dc1, "bbmg.dc1")
    return concat_channels(cbr(em, blk, "bbmg.cbr"), em, "bbmg.residual")


def ode_forward(hf, obb, dc2: PointwiseConv) -> np.ndarray:
    joined = concat_channels(hf, obb, "ode.concat")
    return pointwise_conv(joined, dc2, "ode.dc2")


# --------------------------------------------------------------------------
# weight bundles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FusionWeights:
    dc1: PointwiseConv
    cbr: CbrBlock
    dc2: PointwiseConv

    @property
    def channels(self) -> int:
        return self.dc1.out_channels

    @property
    def hf_channels(self) -> int:
        return self.dc2.in_channels - 2 * self.channels

    def named_arrays(self) -> dict[str, np.ndarray]:
        return {
            "dc1.weight": self.dc1.weight,
            "dc1.bias": self.dc1.bias,
            "cbr.conv.weight": self.cbr.conv_weight,
            "cbr.conv.bias": self.cbr.conv_bias,
            "cbr.bn.weight": self.cbr.bn_weight,
            "cbr.bn.bias": self.cbr.bn_bias,
            "cbr.bn.running_mean": self.cbr.running_mean,
            "cbr.bn.running_var": self.cbr.running_var,
            "cbr.bn.eps": np.asarray(self.cbr.eps, dtype=np.float64),
            "dc2.weight": self.dc2.weight,
            "dc2.bias": self.dc2.bias,
        }

    @classmethod
    def from_arrays(cls, arrays: dict) -> "FusionWeights":
        return cls(
            dc1=PointwiseConv(arrays["dc1.weight"], arrays["dc1.bias"]),
            cbr=CbrBlock(
                arrays["cbr.conv.weight"],
                arrays["cbr.conv.bias"],
                arrays["cbr.bn.weight"],
                arrays["cbr.bn.bias"],
                arrays["cbr.bn.running_mean"],
                arrays["cbr.bn.running_var"],
                float(arrays["cbr.bn.eps"]),
            ),
            dc2=PointwiseConv(arrays["dc2.weight"], arrays["dc2.bias"]),
        )


def random_weights(channels: int, hf_channels: int | None = None, out_channels: int | None = None,
                   seed: int = DEFAULT_SEED) -> FusionWeights:
    """Seeded weights for smoke runs and tests (fan-in scaled normals)."""
    c = channels
    c_hf = c if hf_channels is None else hf_channels
    c_out = c if out_channels is None else out_channels
    rng = np.random.default_rng(seed)

    def normal(shape, fan_in):
        return rng.standard_normal(shape) / np.sqrt(fan_in)

    return FusionWeights(
        dc1=PointwiseConv(normal((c, 2 * c), 2 * c), normal((c,), 2 * c)),
        cbr=CbrBlock(
            conv_weight=normal((c, c, 3, 3), 9 * c),
            conv_bias=normal((c,), 9 * c),
            bn_weight=1.0 + 0.1 * rng.standard_normal(c),
            bn_bias=0.1 * rng.standard_normal(c),
            running_mean=0.1 * rng.standard_normal(c),
            running_var=1.0 + 0.1 * rng.random(c),
        ),
        dc2=PointwiseConv(normal((c_out, c_hf + 2 * c), c_hf + 2 * c), normal((c_out,), c_hf + 2 * c)),
    )


def save_weights(weights: FusionWeights, directory) -> Path:
    from .cache import write_array

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, arr in weights.named_arrays().items():
        write_array(arr, directory / f"{name}.npy")
    return directory


def load_weights(directory) -> FusionWeights:
    from .cache import read_array

    directory = Path(directory)
    arrays = {}
    for path in sorted(directory.glob("*.npy")):
        arrays[path.name[: -len(".npy")]] = read_array(path)
    return FusionWeights.from_arrays(arrays)
