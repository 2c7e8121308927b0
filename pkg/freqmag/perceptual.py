"""
The MIT License (MIT)

Copyright (c) 2024-present freqmag contributors

Permission is hereby granted, free of charge, to any person obtaining a
copy of this software and associated documentation files (the "Software"),
to deal in the Software without restriction, including without limitation
the rights to use, copy, modify, merge, publish, distribute, sublicense,
and/or sell copies of the Software, and to permit persons to whom the
Software is furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS
OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
DEALINGS IN THE SOFTWARE.
"""

from __future__ import annotations

import math
import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import torch
import torch.nn as nn
import torch.nn.functional as F

from .const import IMAGENET_MEAN, IMAGENET_STD
from .enums import BackendKind
from .errors import BackendNotInitialized, ShapeMismatch
from .utils import as_batch, pad2d

_log = logging.getLogger(__name__)

__all__ = (
    'PerceptualBackend',
    'FilterBankBackend',
    'VGGBackend',
    'ModuleBackend',
    'get_backend',
    'feature_distance',
)

# torchvision vgg19 ``features`` indices
VGG19_LAYERS: Dict[str, int] = {
    'conv1_1': 0, 'conv1_2': 2,
    'conv2_1': 5, 'conv2_2': 7,
    'conv3_1': 10, 'conv3_2': 12, 'conv3_3': 14, 'conv3_4': 16,
    'conv4_1': 19, 'conv4_2': 21, 'conv4_3': 23, 'conv4_4': 25,
}

class PerceptualBackend(nn.Module):
    """A fixed feature extractor ``Lambda`` for perceptual distances.

    Subclasses return a list of (N, C, H, W) feature maps from :meth:`features`.
    """

    kind: BackendKind
    name: str

    def features(self, frames: torch.Tensor) -> List[torch.Tensor]:
        raise NotImplementedError

    def forward(self, frames: torch.Tensor) -> List[torch.Tensor]:
        batch, _ = as_batch(frames)
        return self.features(batch)

    @property
    def provenance(self) -> Dict[str, str]:
        """Which feature space produced a number; stored next to every reported score."""
        return {'kind': self.kind.value, 'name': self.name}

    def __repr__(self) -> str:
        return f'<{type(self).__name__} name={self.name!r}>'

def _gaussian_kernels(sigma: float) -> torch.Tensor:
    radius = max(1, math.ceil(3 * sigma))
    x = torch.arange(-radius, radius + 1, dtype=torch.float64)
    g = torch.exp(-x ** 2 / (2 * sigma ** 2))
    g = g / g.sum()
    gx = -x / sigma ** 2 * g
    gxx = (x ** 2 / sigma ** 4 - 1 / sigma ** 2) * g
    smooth = torch.outer(g, g)
    dx = torch.outer(g, gx)
    dy = torch.outer(gx, g)
    laplace = torch.outer(gxx, g) + torch.outer(g, gxx)
    return torch.stack([smooth, dx, dy, laplace])

class FilterBankBackend(PerceptualBackend):
    """A deterministic linear feature space needing no downloaded weights.

    Each scale applies a Gaussian, its two first derivatives and its
    Laplacian to every colour channel, giving 12 maps per scale.

    Parameters
    ----------
    sigmas: Sequence[:class:`float`]
        Gaussian scales, one feature map per scale.
    """

    kind = BackendKind.filterbank

    def __init__(self, sigmas: Sequence[float] = (1.0, 2.0, 4.0)) -> None:
        super().__init__()
        self.sigmas = tuple(float(s) for s in sigmas)
        self.name = 'filterbank(' + ','.join(f'{s:g}' for s in self.sigmas) + ')'
        for i, sigma in enumerate(self.sigmas):
            bank = _gaussian_kernels(sigma)
            # (4, k, k) -> (12, 1, k, k), grouped per colour channel
            weight = bank.unsqueeze(1).repeat(3, 1, 1, 1)
            self.register_buffer(f'bank{i}', weight, persistent=False)

    def features(self, frames: torch.Tensor) -> List[torch.Tensor]:
        out = []
        for i in range(len(self.sigmas)):
            weight = getattr(self, f'bank{i}').to(frames.dtype)
            pad = weight.shape[-1] // 2
            out.append(F.conv2d(pad2d(frames, pad), weight, groups=frames.shape[1]))
        return out

class VGGBackend(PerceptualBackend):
    """Frozen ImageNet VGG-19 activations up to ``layer``.

    Needs :mod:`torchvision` (the ``vgg`` extra) and, for pretrained
    weights, network access on first use.
    """

    kind = BackendKind.vgg19

    def __init__(self, layer: str = 'conv3_2', pretrained: bool = True) -> None:
        super().__init__()
        if layer not in VGG19_LAYERS:
            raise BackendNotInitialized(f'unknown VGG-19 layer {layer!r}')
        try:
            from torchvision.models import vgg19, VGG19_Weights
        except ImportError as exc:
            raise BackendNotInitialized(f'torchvision is not installed ({exc})') from None

        try:
            model = vgg19(weights=VGG19_Weights.DEFAULT if pretrained else None)
        except Exception as exc:
            raise BackendNotInitialized(f'could not load VGG-19 weights: {exc}') from exc

        self.layer = layer
        self.name = f'vgg19:{layer}' + ('' if pretrained else ':random')
        self.net = model.features[:VGG19_LAYERS[layer] + 1].eval()
        for p in self.net.parameters():
            p.requires_grad_(False)
        self.register_buffer('mean', torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1), persistent=False)
        self.register_buffer('std', torch.tensor(IMAGENET_STD).view(1, 3, 1, 1), persistent=False)
        _log.info(f'Loaded perceptual backend {self.name}')

    def train(self, mode: bool = True) -> 'VGGBackend':
        # the extractor stays frozen in eval mode
        super().train(mode)
        self.net.eval()
        return self

    def features(self, frames: torch.Tensor) -> List[torch.Tensor]:
        param = self.mean
        x = (frames.to(param.dtype) - self.mean) / self.std
        return [self.net(x).to(frames.dtype)]

class ModuleBackend(PerceptualBackend):
    """Adapter turning any module that maps frames to a tensor or a list of tensors into a backend."""

    kind = BackendKind.module

    def __init__(self, module: nn.Module, name: Optional[str] = None) -> None:
        super().__init__()
        self.module = module
        self.name = name or type(module).__name__

    def features(self, frames: torch.Tensor) -> List[torch.Tensor]:
        out = self.module(frames)
        if isinstance(out, torch.Tensor):
            return [out]
        return list(out)

def get_backend(kind: Union[BackendKind, str] = BackendKind.filterbank, **options: Any) -> PerceptualBackend:
    """
    Build a perceptual backend.

    Parameters
    ----------
    kind: Union[:class:`BackendKind`, :class:`str`]
    **options
        Forwarded to the backend; :attr:`BackendKind.module` requires ``module``.

    Raises
    ------
    :class:`BackendNotInitialized`
        The kind is unknown or the backend cannot be built.
    """
    try:
        kind = BackendKind(kind)
    except ValueError:
        raise BackendNotInitialized(f'unknown backend {kind!r}') from None

    if kind is BackendKind.filterbank:
        backend: PerceptualBackend = FilterBankBackend(**options)
    elif kind is BackendKind.vgg19:
        backend = VGGBackend(**options)
    else:
        if 'module' not in options:
            raise BackendNotInitialized('the module backend needs a module')
        backend = ModuleBackend(**options)
    _log.debug(f'Using perceptual backend {backend.name}')
    return backend

def feature_distance(a: List[torch.Tensor], b: List[torch.Tensor]) -> torch.Tensor:
    """Per-sample sum over feature maps of the mean squared difference, shape (N,)."""
    if len(a) != len(b):
        raise ShapeMismatch((len(a),), (len(b),), 'feature lists')
    total: Optional[torch.Tensor] = None
    for fa, fb in zip(a, b):
        if fa.shape != fb.shape:
            raise ShapeMismatch(fa.shape, fb.shape, 'feature maps')
        d = (fa - fb).pow(2).flatten(1).mean(dim=1)
        total = d if total is None else total + d
    if total is None:
        raise BackendNotInitialized('backend produced no feature maps')
    return total
