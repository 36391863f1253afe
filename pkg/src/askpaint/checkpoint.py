"""Versioned checkpoint container.

File layout (documented contract, stable across releases):

  line 1   UTF-8 JSON object terminated by ``\\n`` with keys
           ``magic`` ("askpaint-checkpoint"), ``format_version`` (int),
           ``model_config`` (ModelConfig fields), ``train_config``
           (opaque snapshot dict), ``step_count`` (int) and ``arrays``
           (ordered list of ``{"name", "shape", "dtype"}``).
  then     for each entry of ``arrays`` in order, the raw little-endian
           float32 buffer of that parameter, C-contiguous, no padding.

Loading is all-or-nothing: any parse, version, length, or shape problem
raises before a model is constructed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import (
    CheckpointCorruptError,
    CheckpointShapeError,
    CheckpointVersionError,
)
from .model import ColorizerNet, ModelConfig, build_model

MAGIC = "askpaint-checkpoint"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    model_config: ModelConfig
    named_parameter_arrays: dict[str, np.ndarray]
    train_config_snapshot: dict = field(default_factory=dict)
    step_count: int = 0
    format_version: int = FORMAT_VERSION

    @classmethod
    def from_model(
        cls,
        model: ColorizerNet,
        train_config: dict | None = None,
        step_count: int = 0,
    ) -> "Checkpoint":
        arrays = {
            name: np.ascontiguousarray(p.detach().cpu().numpy(), dtype="<f4")
            for name, p in model.named_parameters()
        }
        return cls(
            model_config=model.config,
            named_parameter_arrays=arrays,
            train_config_snapshot=dict(train_config or {}),
            step_count=step_count,
        )

    def to_model(self) -> ColorizerNet:
        model = build_model(self.model_config)
        expected = dict(model.named_parameters())
        for name, arr in self.named_parameter_arrays.items():
            if name not in expected:
                raise CheckpointShapeError(f"unknown parameter array '{name}'")
            if tuple(expected[name].shape) != arr.shape:
                raise CheckpointShapeError(
                    f"array '{name}' has shape {arr.shape}, model expects "
                    f"{tuple(expected[name].shape)}"
                )
        missing = set(expected) - set(self.named_parameter_arrays)
        if missing:
            raise CheckpointCorruptError(f"missing parameter arrays: {sorted(missing)}")
        with torch.no_grad():
            for name, arr in self.named_parameter_arrays.items():
                expected[name].copy_(torch.from_numpy(arr.copy()))
        return model

    def save(self, path: str | os.PathLike) -> None:
        header = {
            "magic": MAGIC,
            "format_version": self.format_version,
            "model_config": self.model_config.to_dict(),
            "train_config": self.train_config_snapshot,
            "step_count": self.step_count,
            "arrays": [
                {"name": name, "shape": list(arr.shape), "dtype": "float32"}
                for name, arr in self.named_parameter_arrays.items()
            ],
        }
        tmp = f"{path}.tmp"
        with open(tmp, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
            fh.write(b"\n")
            for arr in self.named_parameter_arrays.values():
                fh.write(arr.tobytes())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Checkpoint":
        with open(path, "rb") as fh:
            header_line = fh.readline()
            try:
                header = json.loads(header_line.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise CheckpointCorruptError(f"unreadable checkpoint header: {exc}") from exc
            if not isinstance(header, dict) or header.get("magic") != MAGIC:
                raise CheckpointCorruptError("not an askpaint checkpoint")
            version = header.get("format_version")
            if version != FORMAT_VERSION:
                raise CheckpointVersionError(
                    f"unsupported checkpoint format_version {version!r}, "
                    f"this build reads {FORMAT_VERSION}"
                )
            try:
                model_config = ModelConfig.from_dict(header["model_config"])
                entries = header["arrays"]
            except (KeyError, TypeError) as exc:
                raise CheckpointCorruptError(f"malformed checkpoint header: {exc}") from exc
            arrays: dict[str, np.ndarray] = {}
            for entry in entries:
                shape = tuple(entry["shape"])
                nbytes = int(np.prod(shape)) * 4
                buf = fh.read(nbytes)
                if len(buf) != nbytes:
                    raise CheckpointCorruptError(
                        f"truncated checkpoint: array '{entry['name']}' needs {nbytes} bytes, "
                        f"got {len(buf)}"
                    )
                arrays[entry["name"]] = np.frombuffer(buf, dtype="<f4").reshape(shape)
            trailing = fh.read(1)
            if trailing:
                raise CheckpointCorruptError("trailing bytes after final array")
        for name, arr in arrays.items():
            if not np.isfinite(arr).all():
                raise CheckpointCorruptError(f"non-finite values in array '{name}'")
        return cls(
            model_config=model_config,
            named_parameter_arrays=arrays,
            train_config_snapshot=header.get("train_config", {}),
            step_count=header.get("step_count", 0),
        )


def save_checkpoint(
    model: ColorizerNet,
    path: str | os.PathLike,
    train_config: dict | None = None,
    step_count: int = 0,
) -> None:
    Checkpoint.from_model(model, train_config=train_config, step_count=step_count).save(path)


def load_checkpoint(
    path: str | os.PathLike,
    expect_config: ModelConfig | None = None,
) -> ColorizerNet:
    """Rebuild the model stored at ``path``.

    When ``expect_config`` is given, the embedded configuration must agree
    on every shape-determining field; a stored K=2 model refused by a K=3
    expectation names the first offending parameter array.
    """
    ckpt = Checkpoint.load(path)
    if expect_config is not None:
        probe = build_model(expect_config)
        for name, param in probe.named_parameters():
            stored = ckpt.named_parameter_arrays.get(name)
            if stored is None or tuple(param.shape) != stored.shape:
                stored_shape = None if stored is None else stored.shape
                raise CheckpointShapeError(
                    f"checkpoint config {ckpt.model_config.to_dict()} is incompatible with the "
                    f"expected config: array '{name}' is {stored_shape}, expected "
                    f"{tuple(param.shape)}"
                )
    return ckpt.to_model()
