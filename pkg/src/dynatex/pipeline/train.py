"""UV pretraining and joint adversarial training.

Every joint step consumes one consecutive frame pair: the discriminator
updates first on both frames (fakes detached), then the generator step
backpropagates the full two-frame objective through the UV generator,
detail net, texture atlas, and background jointly. The background is
clamped to [0, 1] after each step; nothing else is clamped.
"""

import csv
import json
import os

import numpy as np
import torch

from ..background import init_background
from ..errors import NumericalError, VersionError
from ..losses import FeatureExtractor, PatchDiscriminator, discriminator_loss, total_objective
from ..texture import initialize_from_video
from ..uvgen import UVGenerator, predict_uv, uv_pretrain_loss
from .checkpoint import load_checkpoint, save_checkpoint
from .data import TrainData
from .model import (RenderModel, load_module_tensors, load_optimizer_tensors,
                    module_tensors, optimizer_tensors, parameter_names)


def model_tensors(model, disc=None):
    out = module_tensors(model.uvgen, "uvgen")
    if model.d2g is not None:
        out.update(module_tensors(model.d2g, "d2g"))
    out["texture/values"] = model.texture.values.detach().cpu().numpy().astype("<f4")
    out["background/values"] = model.background.detach().cpu().numpy().astype("<f4")
    if disc is not None:
        out.update(module_tensors(disc, "disc"))
    return out


def load_model_tensors(model, tensors, disc=None):
    load_module_tensors(model.uvgen, tensors, "uvgen")
    if model.d2g is not None:
        load_module_tensors(model.d2g, tensors, "d2g")
    with torch.no_grad():
        model.texture.values.copy_(torch.from_numpy(np.ascontiguousarray(tensors["texture/values"])))
        model.background.copy_(torch.from_numpy(np.ascontiguousarray(tensors["background/values"])))
    if disc is not None:
        load_module_tensors(disc, tensors, "disc")


def generator_param_names(model):
    names = parameter_names(model.uvgen, "uvgen")
    if model.d2g is not None:
        names += parameter_names(model.d2g, "d2g")
    names += ["texture/values", "background/values"]
    return names


def uv_part_accuracy(uvgen, datas, indices_per_data):
    """Foreground pixel accuracy of the part argmax against ground truth."""
    correct = 0
    total = 0
    with torch.no_grad():
        for data, indices in zip(datas, indices_per_data):
            for t in indices:
                probs, _ = predict_uv(uvgen, data.poses[t])
                pred = probs.argmax(dim=0)
                fg = data.part_id[t] > 0
                correct += int((pred[fg] == data.part_id[t][fg]).sum())
                total += int(fg.sum())
    return correct / total if total else float("nan")


def _append_csv(path, header, rows):
    fresh = not os.path.exists(path)
    with open(path, "a", newline="") as f:
        w = csv.writer(f)
        if fresh:
            w.writerow(header)
        w.writerows(rows)


def pretrain_uv(config, out_dir, resume=None):
    """Train the UV generator alone across several scenes.

    Returns the final checkpoint path. Resuming restarts at the epoch
    boundary recorded in the checkpoint and replays the identical frame
    schedule, so the loss trajectory continues as if uninterrupted.
    """
    os.makedirs(out_dir, exist_ok=True)
    torch.manual_seed(config.seed)
    uvgen = UVGenerator(config.n_parts, **config.uvgen)
    opt = torch.optim.Adam(uvgen.parameters(), lr=config.learning_rate, betas=config.betas)
    datas = [TrainData(root, config.n_parts, config.image_size, config.val_fraction, config.seed)
             for root in config.datasets]
    names = parameter_names(uvgen, "uvgen")
    start_epoch = 0
    if resume is not None:
        manifest, tensors = load_checkpoint(resume, expect_config=config)
        load_module_tensors(uvgen, tensors, "uvgen")
        load_optimizer_tensors(opt, names, tensors, "optim")
        start_epoch = manifest["epoch"]

    def save(epoch, step, path):
        tensors = module_tensors(uvgen, "uvgen")
        tensors.update(optimizer_tensors(opt, names, "optim"))
        save_checkpoint(path, config, tensors, step=step, epoch=epoch, kind="pretrain")

    frames_per_epoch = sum(len(d.train_indices) for d in datas)
    step = start_epoch * frames_per_epoch
    for epoch in range(start_epoch, config.epochs):
        rng = np.random.default_rng(config.seed * 1000003 + epoch)
        schedule = [(si, t) for si, d in enumerate(datas) for t in d.train_indices]
        schedule = [schedule[i] for i in rng.permutation(len(schedule))]
        rows = []
        for si, t in schedule:
            d = datas[si]
            probs, coords = predict_uv(uvgen, d.poses[t])
            loss = uv_pretrain_loss(probs, coords, d.part_id[t], d.uv[t])
            if not torch.isfinite(loss):
                raise NumericalError("non-finite pretraining loss at step %d" % step)
            opt.zero_grad()
            loss.backward()
            opt.step()
            rows.append([step, epoch, float(loss.detach())])
            step += 1
        _append_csv(os.path.join(out_dir, "pretrain_losses.csv"),
                    ["step", "epoch", "loss"], rows)
        done = epoch + 1
        if config.checkpoint_every and done % config.checkpoint_every == 0:
            save(done, step, os.path.join(out_dir, "uv_epoch_%03d.bin" % done))
    final = os.path.join(out_dir, "uv_final.bin")
    save(config.epochs, step, final)
    return final


def _load_pretrained_uvgen(model, path, config):
    manifest, tensors = load_checkpoint(path)
    if manifest.get("kind") != "pretrain":
        raise VersionError("%s is not a UV pretraining checkpoint" % path)
    pre_cfg = manifest["config"]
    if pre_cfg["n_parts"] != config.n_parts or pre_cfg["uvgen"] != config.uvgen:
        raise VersionError("pretrained UV generator at %s has an incompatible architecture" % path)
    load_module_tensors(model.uvgen, tensors, "uvgen")


def _subject_pretrain(model, data, config, out_dir, log_name="pretrain_losses.csv"):
    """Per-subject warmup of the UV generator before joint training."""
    opt = torch.optim.Adam(model.uvgen.parameters(),
                           lr=config.weights.learning_rate, betas=config.betas)
    step = 0
    for epoch in range(config.pretrain_epochs):
        rows = []
        for t in data.epoch_frame_order(epoch):
            probs, coords = predict_uv(model.uvgen, data.poses[t])
            loss = uv_pretrain_loss(probs, coords, data.part_id[t], data.uv[t])
            if not torch.isfinite(loss):
                raise NumericalError("non-finite pretraining loss at step %d" % step)
            opt.zero_grad()
            loss.backward()
            opt.step()
            rows.append([step, epoch, float(loss.detach())])
            step += 1
        _append_csv(os.path.join(out_dir, log_name), ["step", "epoch", "loss"], rows)


def _dump_diagnostic(out_dir, step, epoch, terms, model):
    path = os.path.join(out_dir, "diagnostic.json")
    norms = {}
    for name, p in model.named_parameters():
        norms[name] = float(p.detach().norm())
    with open(path, "w") as f:
        json.dump({"step": step, "epoch": epoch, "terms": terms, "param_norms": norms},
                  f, indent=1, sort_keys=True, default=str)
    return path


def train(config, out_dir, resume=None):
    """Full training: texture/background init, UV warmup, joint loop.

    Returns the final checkpoint path. out_dir collects losses.csv,
    epoch checkpoints, and the final one.
    """
    os.makedirs(out_dir, exist_ok=True)
    torch.manual_seed(config.seed)
    data = TrainData(config.dataset, config.n_parts, config.image_size,
                     config.val_fraction, config.seed)
    model = RenderModel(config)
    extractor = FeatureExtractor()
    disc = PatchDiscriminator(**config.disc) if config.use_gan else None

    ds = data.dataset
    train_idx = data.train_indices
    tex, _ = initialize_from_video(ds.frames[train_idx], ds.part_id[train_idx],
                                   ds.uv[train_idx], config.n_parts,
                                   config.texture_resolution)
    bg, _ = init_background(ds.frames[train_idx], ds.part_id[train_idx] > 0,
                            dilation=config.bg_mask_dilation)
    with torch.no_grad():
        model.texture.values.copy_(tex.values)
        model.background.copy_(torch.from_numpy(
            bg.transpose(2, 0, 1).astype(np.float32)))
    np.save(os.path.join(out_dir, "background_init.npy"), bg)

    g_names = generator_param_names(model)
    opt_g = torch.optim.Adam(
        [{"params": g["params"]} for g in model.generator_parameters()],
        lr=config.weights.learning_rate, betas=config.betas)
    opt_d = (torch.optim.Adam(disc.parameters(), lr=config.weights.learning_rate,
                              betas=config.betas) if disc is not None else None)
    d_names = parameter_names(disc, "disc") if disc is not None else []

    start_epoch = 0
    if resume is not None:
        manifest, tensors = load_checkpoint(resume, expect_config=config)
        load_model_tensors(model, tensors, disc)
        load_optimizer_tensors(opt_g, g_names, tensors, "optim_g")
        if opt_d is not None:
            load_optimizer_tensors(opt_d, d_names, tensors, "optim_d")
        start_epoch = manifest["epoch"]
    else:
        if config.pretrained_uvgen:
            _load_pretrained_uvgen(model, config.pretrained_uvgen, config)
        if config.pretrain_epochs > 0:
            _subject_pretrain(model, data, config, out_dir)

    def save(epoch, step, path):
        tensors = model_tensors(model, disc)
        tensors.update(optimizer_tensors(opt_g, g_names, "optim_g"))
        if opt_d is not None:
            tensors.update(optimizer_tensors(opt_d, d_names, "optim_d"))
        save_checkpoint(path, config, tensors, step=step, epoch=epoch, kind="train")

    pairs_per_epoch = len(data.train_pairs)
    step = start_epoch * pairs_per_epoch
    header = ["step", "epoch", "g_total", "d_total", "gan_g", "gan_d",
              "sup", "sup_static", "temporal"]
    for epoch in range(start_epoch, config.epochs):
        rows = []
        for t0, t1 in data.epoch_pair_order(epoch):
            outs = []
            for t in (t0, t1):
                o = model.forward_frame(data.poses[t], with_static=config.regular_loss)
                o["pose"] = data.poses[t]
                o["real"] = data.frames[t]
                outs.append(o)
            flow = data.flow[t0]
            conf = data.conf[t0]

            d_value = 0.0
            if disc is not None:
                for _ in range(config.disc_steps):
                    d_loss = sum(
                        discriminator_loss(disc, o["pose"].unsqueeze(0),
                                           o["real"].unsqueeze(0),
                                           o["syn"].unsqueeze(0))
                        for o in outs)
                    if not torch.isfinite(d_loss):
                        path = _dump_diagnostic(out_dir, step, epoch, {}, model)
                        raise NumericalError(
                            "non-finite discriminator loss at step %d; see %s" % (step, path))
                    opt_d.zero_grad()
                    d_loss.backward()
                    opt_d.step()
                    d_value = float(d_loss.detach())

            g_total, _, terms = total_objective(outs, config.weights, extractor,
                                                disc=disc, flow=flow, conf=conf)
            terms["gan_d"] = d_value
            if not torch.isfinite(g_total):
                path = _dump_diagnostic(out_dir, step, epoch, terms, model)
                raise NumericalError(
                    "non-finite generator loss at step %d; see %s" % (step, path))
            opt_g.zero_grad()
            g_total.backward()
            opt_g.step()
            with torch.no_grad():
                model.background.clamp_(0.0, 1.0)

            rows.append([step, epoch, float(g_total.detach()), d_value,
                         terms["gan_g"], terms["gan_d"], terms["sup"],
                         terms["sup_static"], terms["temporal"]])
            step += 1
        _append_csv(os.path.join(out_dir, "losses.csv"), header, rows)
        done = epoch + 1
        if config.checkpoint_every and done % config.checkpoint_every == 0:
            save(done, step, os.path.join(out_dir, "ckpt_epoch_%03d.bin" % done))
    final = os.path.join(out_dir, "ckpt_final.bin")
    save(config.epochs, step, final)
    return final
