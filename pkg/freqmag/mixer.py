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

import torch
import torch.nn as nn

from .encoder import AFDE
from .enums import AttentionKind
from .errors import ShapeMismatch
from .filters import ChannelAttention, ConvFFN
from .layers import Conv2d, LayerNorm2d
from .utils import as_batch

_log = logging.getLogger(__name__)

__all__ = ('MixerBlock', 'FrequencyMixer')

class MixerBlock(ChannelAttention):
    """Frequency-aware cross attention on a single map.

    The normalised input is split again by a depth-wise decoupling
    convolution: queries come from its low band, keys and values from its
    high band, so the low-frequency structure picks which high-frequency
    channels to pull back in.
    """

    def __init__(
        self,
        dim: int,
        heads: int,
        dilation: int = 2,
        attention: AttentionKind = AttentionKind.sparse,
        expansion: int = 2,
    ) -> None:
        super().__init__(dim, heads, attention)
        self.norm = LayerNorm2d(dim)
        self.afde = AFDE(dim, dilation, depthwise=True)
        self.q = Conv2d(dim, dim, 1)
        self.q_dwconv = Conv2d(dim, dim, 3, groups=dim)
        self.kv = Conv2d(dim, dim * 2, 1)
        self.kv_dwconv = Conv2d(dim * 2, dim * 2, 3, groups=dim * 2)
        self.ffn = ConvFFN(dim, expansion)

    def project(self, x: torch.Tensor):
        high, low = self.afde(self.norm(x))
        q = self.q_dwconv(self.q(low))
        k, v = self.kv_dwconv(self.kv(high)).chunk(2, dim=1)
        return q, k, v

    def attention_map(self, x: torch.Tensor) -> torch.Tensor:
        batch, _ = as_batch(x)
        q, k, _ = self.project(batch)
        return self.scores(q, k)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        q, k, v = self.project(x)
        return self.ffn(x + self.attend(q, k, v))

class FrequencyMixer(nn.Module):
    """Recouples a low-frequency map with the filtered high band of the same level.

    The two maps are concatenated and compressed back to ``dim`` channels by
    a 1x1 convolution, then refined by ``layers`` :class:`MixerBlock`.

    Parameters
    ----------
    dim: :class:`int`
    layers: :class:`int`
        Zero keeps only the concat-compress convolution.
    heads: :class:`int`
    dilation: :class:`int`
    attention: :class:`AttentionKind`
    expansion: :class:`int`
    """

    def __init__(
        self,
        dim: int,
        layers: int,
        heads: int,
        dilation: int = 2,
        attention: AttentionKind = AttentionKind.sparse,
        expansion: int = 2,
    ) -> None:
        super().__init__()
        self.dim = dim
        self.compress = Conv2d(dim * 2, dim, 1)
        self.blocks = nn.Sequential(*(MixerBlock(dim, heads, dilation, attention, expansion) for _ in range(layers)))

    @property
    def depth(self) -> int:
        return len(self.blocks)

    def forward(self, low: torch.Tensor, high: torch.Tensor) -> torch.Tensor:
        if low.shape != high.shape:
            raise ShapeMismatch(low.shape, high.shape, 'mixer inputs')
        low, single = as_batch(low)
        high, _ = as_batch(high)
        if low.shape[1] != self.dim:
            raise ShapeMismatch((self.dim,), (low.shape[1],), 'mixer channels')
        out = self.blocks(self.compress(torch.cat([low, high], dim=1)))
        return out[0] if single else out
