"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure during training (1 for anything else).
"""

import argparse
import json
import os
import sys

from .errors import ConfigError, DynatexError


def _load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path)
    except json.JSONDecodeError as e:
        raise ConfigError("config file %s is not valid JSON: %s" % (path, e))


def _cmd_synth(args):
    from .errors import SchemaError
    from .scene import SceneConfig, generate_sequence, write_dataset

    doc = _load_json(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    try:
        cfg = SceneConfig.from_dict(doc)
    except SchemaError as e:
        raise ConfigError("scene config %s: %s" % (args.config, e))
    seq = generate_sequence(cfg)
    write_dataset(seq, args.out)
    print("wrote %d frames (%dx%d, %d parts) to %s"
          % (seq.frames.shape[0], cfg.image_size[1], cfg.image_size[0],
             cfg.n_parts, args.out))
    return 0


def _cmd_pretrain_uv(args):
    from .pipeline.config import PretrainConfig, load_config
    from .pipeline.train import pretrain_uv

    overrides = {"seed": args.seed} if args.seed is not None else None
    config = load_config(args.config, cls=PretrainConfig, overrides=overrides)
    final = pretrain_uv(config, args.out, resume=args.checkpoint)
    print("pretraining finished: %s" % final)
    return 0


def _cmd_train(args):
    from .pipeline.config import load_config
    from .pipeline.train import train

    overrides = {"seed": args.seed} if args.seed is not None else None
    config = load_config(args.config, overrides=overrides)
    final = train(config, args.out, resume=args.checkpoint)
    print("training finished: %s" % final)
    return 0


def _pose_source(value):
    if value is None:
        return None
    if os.path.isdir(value):
        return value
    raise ConfigError("pose source %s is not a dataset directory" % value)


def _cmd_infer(args):
    from .pipeline.infer import infer

    result = infer(args.checkpoint, args.out,
                   pose_source=_pose_source(args.config),
                   background_png=args.background,
                   limit=args.frames)
    print("rendered %d frames to %s (video: %s)"
          % (result["n_frames"], args.out, result["video"]))
    return 0


def _cmd_eval(args):
    from .pipeline.evaluate import evaluate

    report = evaluate(args.checkpoint, out_dir=args.out,
                      dataset_root=_pose_source(args.config))
    print(report.to_json())
    return 0


def _cmd_export_texture(args):
    import numpy as np
    import torch

    from .pipeline.infer import load_render_model
    from .texture import export_previews, save_texture

    model, _, _ = load_render_model(args.checkpoint)
    os.makedirs(args.out, exist_ok=True)
    save_texture(model.texture, os.path.join(args.out, "texture.bin"))
    paths = export_previews(model.texture, args.out)
    print("wrote texture.bin and %d part previews to %s" % (len(paths), args.out))
    return 0


def _cmd_replace_bg(args):
    from .pipeline.checkpoint import load_checkpoint, save_checkpoint
    from .pipeline.config import TrainConfig
    from .pipeline.infer import load_background_image

    manifest, tensors = load_checkpoint(args.checkpoint)
    config = TrainConfig.from_dict(manifest["config"])
    bg = load_background_image(args.background, config.image_size)
    tensors["background/values"] = bg.transpose(2, 0, 1)
    save_checkpoint(args.out, config, tensors, step=manifest["step"],
                    epoch=manifest["epoch"], kind=manifest["kind"])
    print("wrote checkpoint with replaced background: %s" % args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dynatex",
        description="Synthetic puppet video rendering: dataset synthesis, "
                    "training, inference, evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext, **flags):
        p = sub.add_parser(name, help=helptext)
        if flags.get("config"):
            p.add_argument("--config", required=flags["config"] == "required",
                           help="JSON config file (or dataset directory for infer/eval)")
        if flags.get("seed"):
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if flags.get("out"):
            p.add_argument("--out", required=True, help="output path")
        if flags.get("checkpoint"):
            p.add_argument("--checkpoint", required=flags["checkpoint"] == "required",
                           default=None, help="checkpoint file")
        if flags.get("frames"):
            p.add_argument("--frames", type=int, default=None, help="limit rendered frame count")
        if flags.get("background"):
            p.add_argument("--background", required=flags["background"] == "required",
                           default=None, help="replacement background PNG")
        p.set_defaults(fn=fn)
        return p

    add("synth", _cmd_synth, "generate a synthetic dataset from a scene JSON",
        config="required", seed=True, out=True)
    add("pretrain-uv", _cmd_pretrain_uv, "pretrain the UV generator on several scenes",
        config="required", seed=True, out=True, checkpoint="optional")
    add("train", _cmd_train, "train a subject model",
        config="required", seed=True, out=True, checkpoint="optional")
    add("infer", _cmd_infer, "render poses with a trained model",
        config="optional", out=True, checkpoint="required", frames=True,
        background="optional")
    add("eval", _cmd_eval, "evaluate a trained model on its validation split",
        config="optional", out=True, checkpoint="required")
    add("export-texture", _cmd_export_texture, "export the learned texture atlas",
        out=True, checkpoint="required")
    add("replace-bg", _cmd_replace_bg, "write a checkpoint with a replaced background",
        out=True, checkpoint="required", background="required")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DynatexError as e:
        print("error: %s" % e, file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
