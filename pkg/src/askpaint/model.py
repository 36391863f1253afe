"""Encoder-decoder colorizer with a question head.

Each forward pass consumes the concatenation of the grayscale/outline
input, the previous question map, the hint image, and the previous
prediction, and emits K bounded color channels plus one sigmoid question
channel.

Reference topology (see README for the parameter-count closed form):
``depth`` 2x downsamplings, two 3x3 conv + ReLU blocks per level, channel
width doubling per level from ``base_width``, max-pool down, nearest
upsample + skip concatenation back up, 1x1 output head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .errors import ConfigurationError, ValidationError


@dataclass
class ModelConfig:
    image_size: tuple[int, int] = (32, 32)
    color_channels: int = 2
    input_image_channels: int = 1
    depth: int = 3
    base_width: int = 16
    seed: int = 0

    def __post_init__(self):
        self.image_size = tuple(self.image_size)
        h, w = self.image_size
        if self.color_channels not in (2, 3):
            raise ConfigurationError(
                f"color_channels must be 2 (Lab a*b*) or 3 (RGB), got {self.color_channels}"
            )
        if self.input_image_channels != 1:
            raise ConfigurationError("input_image_channels must be 1 (grayscale or outline)")
        if self.depth < 1 or self.base_width < 1:
            raise ConfigurationError("depth and base_width must be positive")
        if h % (1 << self.depth) or w % (1 << self.depth):
            raise ConfigurationError(
                f"image size {self.image_size} must be divisible by 2^depth = {1 << self.depth}"
            )

    @property
    def input_channels(self) -> int:
        # input image + question + hint + previous prediction
        return self.input_image_channels + 1 + 2 * self.color_channels

    def to_dict(self) -> dict:
        return {
            "image_size": list(self.image_size),
            "color_channels": self.color_channels,
            "input_image_channels": self.input_image_channels,
            "depth": self.depth,
            "base_width": self.base_width,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            image_size=tuple(d["image_size"]),
            color_channels=d["color_channels"],
            input_image_channels=d.get("input_image_channels", 1),
            depth=d["depth"],
            base_width=d["base_width"],
            seed=d.get("seed", 0),
        )


class _ConvBlock(nn.Module):
    def __init__(self, cin: int, cout: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(cin, cout, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(cout, cout, 3, padding=1),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.body(x)


class ColorizerNet(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        widths = [config.base_width << level for level in range(config.depth + 1)]
        self.encoders = nn.ModuleList()
        cin = config.input_channels
        for level in range(config.depth):
            self.encoders.append(_ConvBlock(cin, widths[level]))
            cin = widths[level]
        self.bottleneck = _ConvBlock(widths[config.depth - 1], widths[config.depth])
        self.decoders = nn.ModuleList(
            _ConvBlock(widths[level + 1] + widths[level], widths[level])
            for level in reversed(range(config.depth))
        )
        self.head = nn.Conv2d(config.base_width, config.color_channels + 1, 1)
        self.pool = nn.MaxPool2d(2)
        self.up = nn.Upsample(scale_factor=2, mode="nearest")

    def forward(self, net_input: torch.Tensor) -> torch.Tensor:
        skips = []
        x = net_input
        for enc in self.encoders:
            x = enc(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for dec, skip in zip(self.decoders, reversed(skips)):
            x = self.up(x)
            x = dec(torch.cat([x, skip], dim=1))
        return self.head(x)

    def step(
        self,
        x: torch.Tensor,
        question: torch.Tensor,
        hint: torch.Tensor,
        prediction: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """One refinement pass.

        Accepts either unbatched ((Kx,H,W), (H,W), (K,H,W), (K,H,W)) or
        batched tensors with a leading batch dim. Returns the new prediction
        in (-1, 1) and the new question map in (0, 1), matching the input
        batching.
        """
        cfg = self.config
        unbatched = x.dim() == 3
        if unbatched:
            x, question, hint, prediction = (
                x.unsqueeze(0),
                question.unsqueeze(0),
                hint.unsqueeze(0),
                prediction.unsqueeze(0),
            )
        k = cfg.color_channels
        if (
            x.shape[1] != cfg.input_image_channels
            or hint.shape[1] != k
            or prediction.shape[1] != k
        ):
            raise ConfigurationError(
                f"channel mismatch: expected x={cfg.input_image_channels}, hint/prediction={k}; "
                f"got x={x.shape[1]}, hint={hint.shape[1]}, prediction={prediction.shape[1]}"
            )
        if x.shape[-2:] != torch.Size(cfg.image_size):
            raise ConfigurationError(
                f"spatial size {tuple(x.shape[-2:])} does not match configured {cfg.image_size}"
            )
        net_input = torch.cat([x, question.unsqueeze(1), hint, prediction], dim=1)
        if not torch.isfinite(net_input).all():
            raise ValidationError("non-finite values in forward-pass input")
        out = self.forward(net_input)
        new_prediction = torch.tanh(out[:, :k])
        new_question = torch.sigmoid(out[:, k])
        if unbatched:
            return new_prediction.squeeze(0), new_question.squeeze(0)
        return new_prediction, new_question


def build_model(config: ModelConfig) -> ColorizerNet:
    """Construct the network with weights seeded from ``config.seed``.

    Two builds from the same config are parameter-identical regardless of
    global RNG state.
    """
    model = ColorizerNet(config)
    gen = torch.Generator().manual_seed(config.seed)
    with torch.no_grad():
        for module in model.modules():
            if isinstance(module, nn.Conv2d):
                fan_in = module.in_channels * module.kernel_size[0] * module.kernel_size[1]
                bound = math.sqrt(6.0 / fan_in)
                module.weight.uniform_(-bound, bound, generator=gen)
                module.bias.uniform_(-1.0 / math.sqrt(fan_in), 1.0 / math.sqrt(fan_in), generator=gen)
    return model
