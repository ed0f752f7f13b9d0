"""Full renderer state: UV generator, detail net, texture, background.

forward_frame runs the inference expression once per frame: predict UV,
sample and blend the atlas, optionally decode details, composite over the
learnable background. It never touches flow; warping exists only inside
the temporal loss term.
"""

import numpy as np
import torch

from ..background import composite
from ..d2g import D2G, render_details
from ..errors import FormatError
from ..mapping import blend_parts, sample_all_parts, static_component
from ..texture import N_CHANNELS, HybridTexture
from ..uvgen import UVGenerator, predict_uv


class RenderModel(torch.nn.Module):
    def __init__(self, config):
        super().__init__()
        h, w = config.image_size
        self.config = config
        self.uvgen = UVGenerator(config.n_parts, **config.uvgen)
        self.d2g = D2G(**config.d2g) if config.use_d2g else None
        self.texture = HybridTexture(config.n_parts, config.texture_resolution)
        self.background = torch.nn.Parameter(torch.full((3, h, w), 0.5))

    def forward_frame(self, pose, with_static=True):
        """pose (6, H, W) -> dict of probs, coords, feature, syn, syn_static."""
        probs, coords = predict_uv(self.uvgen, pose)
        samples = sample_all_parts(self.texture.values, coords)
        feature = blend_parts(probs, samples)
        if self.d2g is not None:
            fg = render_details(self.d2g, feature, pose)
        else:
            fg = static_component(feature).clamp(0.0, 1.0)
        syn = composite(fg, self.background, probs[0])
        out = {"probs": probs, "coords": coords, "feature": feature,
               "fg": fg, "syn": syn, "syn_static": None}
        if with_static:
            static = static_component(feature).clamp(0.0, 1.0)
            out["syn_static"] = composite(static, self.background, probs[0])
        return out

    def generator_parameters(self):
        """Parameter groups jointly updated by the generator step."""
        groups = [
            {"name": "uvgen", "params": list(self.uvgen.parameters())},
            {"name": "texture", "params": [self.texture.values]},
            {"name": "background", "params": [self.background]},
        ]
        if self.d2g is not None:
            groups.insert(1, {"name": "d2g", "params": list(self.d2g.parameters())})
        return groups


def module_tensors(module, prefix):
    """state_dict as {prefix/name: float32 numpy} for checkpointing."""
    out = {}
    for name, value in module.state_dict().items():
        out["%s/%s" % (prefix, name)] = value.detach().cpu().numpy().astype("<f4")
    return out


def load_module_tensors(module, tensors, prefix):
    state = {}
    for name, value in module.state_dict().items():
        key = "%s/%s" % (prefix, name)
        if key not in tensors:
            raise FormatError("checkpoint is missing tensor %r" % key)
        state[name] = torch.from_numpy(np.ascontiguousarray(tensors[key]))
    module.load_state_dict(state)


def optimizer_tensors(optimizer, param_names, prefix):
    """Adam moments and step counters, keyed by qualified parameter name.

    param_names must align one-to-one with the optimizer's parameters in
    group order. Parameters that have not been stepped yet carry no state
    and are simply absent.
    """
    out = {}
    i = 0
    for group in optimizer.param_groups:
        for p in group["params"]:
            name = param_names[i]
            i += 1
            state = optimizer.state.get(p)
            if not state:
                continue
            out["%s/%s/step" % (prefix, name)] = np.asarray(
                float(state["step"]), dtype="<f4")
            out["%s/%s/exp_avg" % (prefix, name)] = (
                state["exp_avg"].detach().cpu().numpy().astype("<f4"))
            out["%s/%s/exp_avg_sq" % (prefix, name)] = (
                state["exp_avg_sq"].detach().cpu().numpy().astype("<f4"))
    if i != len(param_names):
        raise ValueError("optimizer has %d parameters, %d names given" % (i, len(param_names)))
    return out


def load_optimizer_tensors(optimizer, param_names, tensors, prefix):
    i = 0
    for group in optimizer.param_groups:
        for p in group["params"]:
            name = param_names[i]
            i += 1
            key = "%s/%s/step" % (prefix, name)
            if key not in tensors:
                continue
            optimizer.state[p] = {
                "step": torch.tensor(float(tensors[key])),
                "exp_avg": torch.from_numpy(
                    np.ascontiguousarray(tensors["%s/%s/exp_avg" % (prefix, name)])),
                "exp_avg_sq": torch.from_numpy(
                    np.ascontiguousarray(tensors["%s/%s/exp_avg_sq" % (prefix, name)])),
            }


def parameter_names(module, prefix):
    return ["%s/%s" % (prefix, name) for name, _ in module.named_parameters()]
