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

import logging
from typing import Optional

import torch
import torch.nn.functional as F

from .config import LossConfig
from .const import CHARBONNIER_EPS
from .enums import EdgeOperator, Regularizer
from .errors import BackendNotInitialized, ShapeMismatch
from .models import LossBreakdown
from .perceptual import PerceptualBackend, feature_distance
from .utils import as_batch, pad2d

_log = logging.getLogger(__name__)

__all__ = (
    'charbonnier',
    'log_kernel',
    'log_edge_map',
    'sobel_edge_map',
    'edge_map',
    'edge_loss',
    'contrastive_regularization',
    'perceptual_loss',
    'total_loss',
)

def _check(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(a.shape, b.shape, what)

def charbonnier(a: torch.Tensor, b: torch.Tensor, epsilon: float = CHARBONNIER_EPS) -> torch.Tensor:
    """``sqrt(mean((a - b)**2) + eps**2)`` per sample, averaged over the batch."""
    _check(a, b, 'charbonnier inputs')
    if a.dim() <= 3:
        a, b = a.unsqueeze(0), b.unsqueeze(0)
    mse = (a - b).pow(2).flatten(1).mean(dim=1)
    return torch.sqrt(mse + epsilon ** 2).mean()

def log_kernel(size: int = 7, sigma: float = 1.0, dtype: torch.dtype = torch.float64) -> torch.Tensor:
    """
    A (size, size) Laplacian-of-Gaussian kernel with its mean removed.

    Removing the mean makes the truncated kernel sum to zero, so flat
    regions give no response.
    """
    radius = size // 2
    x = torch.arange(-radius, radius + 1, dtype=torch.float64)
    yy, xx = torch.meshgrid(x, x, indexing='ij')
    r2 = (xx ** 2 + yy ** 2) / (2 * sigma ** 2)
    kernel = -1.0 / (torch.pi * sigma ** 4) * (1 - r2) * torch.exp(-r2)
    return (kernel - kernel.mean()).to(dtype)

def _depthwise(img: torch.Tensor, kernels: torch.Tensor) -> torch.Tensor:
    # kernels: (k, s, s) applied to every channel -> (N, C * k, H, W)
    batch, single = as_batch(img)
    channels = batch.shape[1]
    weight = kernels.to(batch.dtype).to(batch.device).unsqueeze(1).repeat(channels, 1, 1, 1)
    out = F.conv2d(pad2d(batch, kernels.shape[-1] // 2), weight, groups=channels)
    return out[0] if single else out

def log_edge_map(img: torch.Tensor, size: int = 7, sigma: float = 1.0) -> torch.Tensor:
    """Per-channel LoG response with reflect padding, same shape as ``img``."""
    return _depthwise(img, log_kernel(size, sigma).unsqueeze(0))

def sobel_edge_map(img: torch.Tensor) -> torch.Tensor:
    """Per-channel horizontal and vertical Sobel gradients, twice the channels of ``img``."""
    gx = torch.tensor([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]], dtype=torch.float64)
    return _depthwise(img, torch.stack([gx, gx.T]))

def edge_map(img: torch.Tensor, config: Optional[LossConfig] = None) -> torch.Tensor:
    config = config or LossConfig()
    if config.edge is EdgeOperator.sobel:
        return sobel_edge_map(img)
    return log_edge_map(img, config.log_kernel, config.log_sigma)

def edge_loss(pred: torch.Tensor, gt: torch.Tensor, config: Optional[LossConfig] = None) -> torch.Tensor:
    """Charbonnier distance between the edge maps of ``pred`` and ``gt``; zero for :attr:`EdgeOperator.none`."""
    config = config or LossConfig()
    _check(pred, gt, 'edge loss inputs')
    if config.edge is EdgeOperator.none:
        return pred.new_zeros(())
    return charbonnier(edge_map(pred, config), edge_map(gt, config), config.epsilon)

def contrastive_regularization(
    anchor: torch.Tensor,
    positive: torch.Tensor,
    negative: torch.Tensor,
    backend: Optional[PerceptualBackend],
    epsilon: float = CHARBONNIER_EPS,
) -> torch.Tensor:
    """
    Pull ``anchor`` towards ``positive`` and away from ``negative`` in the backend's feature space.

    Per sample ``sqrt((d(a, p) + eps**2) / (d(a, n) + eps**2))``, summed over the batch.
    Identical inputs give exactly 1 per sample.
    """
    if backend is None:
        raise BackendNotInitialized()
    _check(anchor, positive, 'anchor and positive')
    _check(anchor, negative, 'anchor and negative')
    fa = backend(anchor)
    with torch.no_grad():
        fp = backend(positive)
        fn = backend(negative)
    eps2 = epsilon ** 2
    ratio = (feature_distance(fa, fp) + eps2) / (feature_distance(fa, fn) + eps2)
    return torch.sqrt(ratio).sum()

def perceptual_loss(pred: torch.Tensor, gt: torch.Tensor, backend: Optional[PerceptualBackend]) -> torch.Tensor:
    """Mean feature distance of ``pred`` to ``gt``."""
    if backend is None:
        raise BackendNotInitialized()
    _check(pred, gt, 'perceptual inputs')
    with torch.no_grad():
        fg = backend(gt)
    return feature_distance(backend(pred), fg).mean()

def total_loss(
    pred: torch.Tensor,
    gt: torch.Tensor,
    query: torch.Tensor,
    backend: Optional[PerceptualBackend],
    config: Optional[LossConfig] = None,
) -> LossBreakdown:
    """
    The training objective ``mag + edge + weight * regularizer``.

    Parameters
    ----------
    pred: :class:`torch.Tensor`
        Network output.
    gt: :class:`torch.Tensor`
        Magnified ground truth, the contrastive positive.
    query: :class:`torch.Tensor`
        Unmagnified query frame, the contrastive negative.
    backend: Optional[:class:`PerceptualBackend`]
        Needed unless the regulariser is :attr:`Regularizer.none`.
    config: Optional[:class:`LossConfig`]
    """
    config = config or LossConfig()
    _check(pred, gt, 'prediction and ground truth')
    _check(pred, query, 'prediction and query')

    mag = charbonnier(pred, gt, config.epsilon)
    edge = edge_loss(pred, gt, config)
    if config.regularizer is Regularizer.contrastive:
        reg = contrastive_regularization(pred, gt, query, backend, config.epsilon)
    elif config.regularizer is Regularizer.perceptual:
        reg = perceptual_loss(pred, gt, backend)
    else:
        reg = pred.new_zeros(())

    total = mag + edge + config.weight * reg
    return LossBreakdown(total=total, mag=mag, edge=edge, regularizer=reg, weight=config.weight)
