"""Command line entry point.

Subcommands: train, eval, rollout, synth, serve. Settings come from an
optional JSON config file; every field can be overridden by a flag.
Each run writes the fully resolved configuration to the output directory
so any artifact can be reproduced from its snapshot alone.

Exit status: 0 success, 1 invalid invocation or configuration, 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .checkpoint import Checkpoint, load_checkpoint
from .colorspace import ColorSpaceSpec
from .data import ImageFolderDataset, write_synthetic_dataset, _center_crop_resize
from .errors import AskpaintError, ConfigurationError, ValidationError
from .episode import rollout
from .evaluation import evaluate_checkpoint
from .model import ModelConfig
from .oracle import OracleConfig
from .service import ServiceConfig, create_app
from .synth import SyntheticSceneSpec
from .training import TrainConfig, train_loop, write_loss_csv
from .viz import save_montage


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _write_snapshot(out_dir: Path, resolved: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "resolved_config.json", "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _apply_train_overrides(cfg: TrainConfig, args) -> TrainConfig:
    mapping = {
        "seed": "seed",
        "steps": "steps",
        "lambda_seg": "lambda_seg",
        "batch_size": "batch_size",
        "learning_rate": "learning_rate",
        "max_answers_t": "max_answers_t",
        "checkpoint_interval": "checkpoint_interval",
        "color_space": "color_space",
    }
    for arg_name, field in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(cfg, field, value)
    if getattr(args, "noise_sigma", None) is not None:
        cfg.noise.sigma = args.noise_sigma
        cfg.noise.enabled = args.noise_sigma > 0
    if getattr(args, "noise_enabled", None) is not None:
        cfg.noise.enabled = args.noise_enabled == "true"
    return cfg


def _cmd_train(args) -> int:
    raw = _load_config_file(args.config)
    train_cfg = TrainConfig.from_dict(raw.get("train", {}))
    train_cfg = _apply_train_overrides(train_cfg, args)
    model_raw = dict(raw.get("model", {}))
    model_raw.setdefault("color_channels", ColorSpaceSpec(train_cfg.color_space).color_channels)
    model_cfg = ModelConfig.from_dict({
        "image_size": model_raw.get("image_size", [32, 32]),
        "color_channels": model_raw["color_channels"],
        "depth": model_raw.get("depth", 3),
        "base_width": model_raw.get("base_width", 16),
        "seed": model_raw.get("seed", train_cfg.seed),
    })
    out = Path(args.out)
    if args.dataset is not None:
        source = ImageFolderDataset(
            args.dataset, ColorSpaceSpec(train_cfg.color_space), image_size=model_cfg.image_size
        )
        source_desc = {"dataset": str(args.dataset)}
    else:
        scene_spec = SyntheticSceneSpec.from_dict(raw.get("scenes", {}))
        if args.seed is not None:
            scene_spec.seed = args.seed
        source = scene_spec
        source_desc = {"scenes": scene_spec.to_dict()}
    _write_snapshot(out, {
        "command": "train",
        "train": train_cfg.to_dict(),
        "model": model_cfg.to_dict(),
        **source_desc,
    })
    result = train_loop(train_cfg, model_cfg, source, out_dir=out)
    write_loss_csv(result.loss_log, out / "loss_log.csv")
    print(f"trained {train_cfg.steps} steps -> {result.checkpoint_path}")
    return 0


def _cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    snapshot = Checkpoint.load(args.checkpoint).train_config_snapshot
    mode = snapshot.get("color_space", "lab_ab" if model.config.color_channels == 2 else "rgb")
    color_space = ColorSpaceSpec(mode)
    out = Path(args.out)
    if args.dataset is not None:
        dataset = ImageFolderDataset(args.dataset, color_space, image_size=model.config.image_size)
        items = [dataset[i] for i in range(len(dataset))]
        source_desc = {"dataset": str(args.dataset)}
    else:
        from .data import synthetic_eval_items
        from .synth import default_spec_for_size

        spec = default_spec_for_size(model.config.image_size)
        seed = args.seed if args.seed is not None else 1234
        items = synthetic_eval_items(spec, args.synthetic_count, np.random.default_rng(seed))
        source_desc = {"synthetic_count": args.synthetic_count, "seed": seed}
    _write_snapshot(out, {
        "command": "eval",
        "checkpoint": str(args.checkpoint),
        "max_steps": args.max_steps,
        **source_desc,
    })
    report = evaluate_checkpoint(
        model,
        items,
        color_space,
        max_steps=args.max_steps,
        metadata={"checkpoint": str(args.checkpoint), **source_desc},
    )
    report.save(out / "eval_report.json")
    if args.dump_images:
        img_dir = out / "images"
        img_dir.mkdir(exist_ok=True)
        cfg = OracleConfig()
        for i, item in enumerate(items[: args.dump_images]):
            with torch.no_grad():
                _, state = rollout(item.input_x, item.target_y, args.max_steps, model, cfg)
            save_montage(state, color_space, img_dir / f"episode_{i:04d}.png")
    means = {n: round(s["mean"], 2) for n, s in report.psnr_by_steps.items()}
    print(f"eval report -> {out / 'eval_report.json'} (mean PSNR by answers: {means})")
    return 0


def _cmd_rollout(args) -> int:
    model = load_checkpoint(args.checkpoint)
    snapshot = Checkpoint.load(args.checkpoint).train_config_snapshot
    mode = snapshot.get("color_space", "lab_ab" if model.config.color_channels == 2 else "rgb")
    color_space = ColorSpaceSpec(mode)
    img = Image.open(args.image).convert("RGB")
    if img.size != (model.config.image_size[1], model.config.image_size[0]):
        img = _center_crop_resize(img, model.config.image_size)
    arr = np.asarray(img, dtype=np.uint8)
    input_x, target_y = color_space.to_model_space(arr)
    out = Path(args.out)
    _write_snapshot(out, {
        "command": "rollout",
        "checkpoint": str(args.checkpoint),
        "image": str(args.image),
        "answers": args.answers,
    })
    with torch.no_grad():
        _, state = rollout(input_x, target_y, args.answers, model, OracleConfig())
    montage_path = out / "montage.png"
    save_montage(state, color_space, montage_path)
    print(f"rollout with {args.answers} answers -> {montage_path}")
    return 0


def _cmd_synth(args) -> int:
    raw = _load_config_file(args.config)
    spec = SyntheticSceneSpec.from_dict(raw.get("scenes", {}))
    if args.seed is not None:
        spec.seed = args.seed
    out = Path(args.out)
    _write_snapshot(out, {"command": "synth", "scenes": spec.to_dict(), "count": args.count})
    rng = np.random.default_rng(spec.seed)
    paths = write_synthetic_dataset(out, spec, args.count, rng)
    print(f"wrote {len(paths)} scenes under {out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    config = ServiceConfig.load(args.config)
    if args.port is not None:
        config.port = args.port
    if args.checkpoint_dir is not None:
        config.checkpoint_dir = Path(args.checkpoint_dir)
    if args.out is not None:
        _write_snapshot(Path(args.out), {
            "command": "serve",
            "checkpoint_dir": str(config.checkpoint_dir),
            "port": config.port,
            "session_ttl_seconds": config.session_ttl_seconds,
        })
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="askpaint", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a colorizer")
    p_train.add_argument("--config", help="JSON config file (train/model/scenes keys)")
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.add_argument("--dataset", help="train on a PNG folder instead of synthetic scenes")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--steps", type=int)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--learning-rate", dest="learning_rate", type=float)
    p_train.add_argument("--lambda-seg", dest="lambda_seg", type=float)
    p_train.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p_train.add_argument("--noise-enabled", dest="noise_enabled", choices=["true", "false"])
    p_train.add_argument("--max-answers-t", dest="max_answers_t", type=int)
    p_train.add_argument("--checkpoint-interval", dest="checkpoint_interval", type=int)
    p_train.add_argument("--color-space", dest="color_space", choices=["lab_ab", "rgb"])
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--dataset", help="PNG folder with optional seg/ sidecars")
    p_eval.add_argument("--synthetic-count", dest="synthetic_count", type=int, default=200)
    p_eval.add_argument("--max-steps", dest="max_steps", type=int, default=3)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--dump-images", dest="dump_images", type=int, default=0)
    p_eval.set_defaults(func=_cmd_eval)

    p_roll = sub.add_parser("rollout", help="run one episode and save the montage strip")
    p_roll.add_argument("--checkpoint", required=True)
    p_roll.add_argument("--image", required=True, help="PNG; its colors serve as ground truth")
    p_roll.add_argument("--answers", type=int, default=3)
    p_roll.add_argument("--out", required=True)
    p_roll.set_defaults(func=_cmd_rollout)

    p_synth = sub.add_parser("synth", help="write a synthetic dataset directory")
    p_synth.add_argument("--config", help="JSON config file (scenes key)")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--count", type=int, default=200)
    p_synth.add_argument("--seed", type=int)
    p_synth.set_defaults(func=_cmd_synth)

    p_serve = sub.add_parser("serve", help="run the steering service")
    p_serve.add_argument("--config", help="service JSON config")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--checkpoint-dir", dest="checkpoint_dir")
    p_serve.add_argument("--out")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ConfigurationError) as exc:
        print(f"askpaint: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"askpaint: missing file: {exc}", file=sys.stderr)
        return 1
    except AskpaintError as exc:
        print(f"askpaint: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"askpaint: unexpected failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
