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
from typing import Tuple, Union

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange

from .enums import AttentionKind, Level, PoolMode
from .errors import ShapeMismatch
from .layers import Conv2d, LayerNorm2d
from .utils import as_batch, pad2d

_log = logging.getLogger(__name__)

__all__ = (
    'ChannelAttention',
    'SparseChannelAttention',
    'ConvFFN',
    'SparseFilterBlock',
    'SparseFilter',
    'LowPassFilter',
    'HighPassFilter',
)

def _inverse_softplus(x: float) -> float:
    return x + math.log(-math.expm1(-x))

class ChannelAttention(nn.Module):
    """Multi-head attention across channels.

    Queries and keys are L2-normalised over the spatial axis, so the
    ``C' x C'`` score matrix of each head stays bounded whatever the map
    size. Scores are divided by a learnable per-head temperature, kept
    positive by a softplus and initialised to ``sqrt(C')``, then passed
    through a ReLU (sparse) or a softmax.

    With unit-norm queries and keys every logit starts inside
    ``[-1/sqrt(C'), 1/sqrt(C')]``, so attention begins close to uniform
    (softmax) or weak (ReLU) and sharpens only as training lowers the
    temperature.
    """

    def __init__(self, dim: int, heads: int, attention: AttentionKind = AttentionKind.sparse) -> None:
        super().__init__()
        if dim % heads:
            raise ShapeMismatch((heads,), (dim,), 'attention width (multiple of heads)')
        self.dim = dim
        self.heads = heads
        self.attention = AttentionKind(attention)
        init = _inverse_softplus(math.sqrt(dim // heads))
        self.temperature_raw = nn.Parameter(torch.full((heads, 1, 1), init))
        self.project_out = Conv2d(dim, dim, 1)

    @property
    def temperature(self) -> torch.Tensor:
        return F.softplus(self.temperature_raw)

    def scores(self, q: torch.Tensor, k: torch.Tensor) -> torch.Tensor:
        """The (N, heads, C', C') attention matrix of (N, C, H, W) queries and keys."""
        q = rearrange(q, 'b (head c) h w -> b head c (h w)', head=self.heads)
        k = rearrange(k, 'b (head c) h w -> b head c (h w)', head=self.heads)
        q = F.normalize(q, dim=-1)
        k = F.normalize(k, dim=-1)
        logits = (q @ k.transpose(-2, -1)) / self.temperature
        if self.attention is AttentionKind.softmax:
            return logits.softmax(dim=-1)
        return F.relu(logits)

    def attend(self, q: torch.Tensor, k: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
        h, w = v.shape[-2:]
        attn = self.scores(q, k)
        v = rearrange(v, 'b (head c) h w -> b head c (h w)', head=self.heads)
        out = attn @ v
        out = rearrange(out, 'b head c (h w) -> b (head c) h w', head=self.heads, h=h, w=w)
        return self.project_out(out)

class SparseChannelAttention(ChannelAttention):
    """Channel attention whose queries are pooled before scoring.

    Average pooling keeps the smooth part of the query (low-pass), max
    pooling its peaks (high-pass). A learnable per-channel scale and shift,
    initially the identity, follows the pooling.

    Parameters
    ----------
    dim: :class:`int`
    heads: :class:`int`
    pool: :class:`PoolMode`
    attention: :class:`AttentionKind`
    """

    def __init__(
        self,
        dim: int,
        heads: int,
        pool: PoolMode = PoolMode.low,
        attention: AttentionKind = AttentionKind.sparse,
    ) -> None:
        super().__init__(dim, heads, attention)
        self.pool = PoolMode(pool)
        self.norm = LayerNorm2d(dim)
        self.qkv = Conv2d(dim, dim * 3, 1)
        self.qkv_dwconv = Conv2d(dim * 3, dim * 3, 3, groups=dim * 3)
        self.pool_weight = nn.Parameter(torch.ones(1, dim, 1, 1))
        self.pool_bias = nn.Parameter(torch.zeros(1, dim, 1, 1))

    def pool_query(self, q: torch.Tensor) -> torch.Tensor:
        q = pad2d(q, 1)
        if self.pool is PoolMode.low:
            q = F.avg_pool2d(q, 3, stride=1)
        else:
            q = F.max_pool2d(q, 3, stride=1)
        return q * self.pool_weight + self.pool_bias

    def project(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        q, k, v = self.qkv_dwconv(self.qkv(self.norm(x))).chunk(3, dim=1)
        return self.pool_query(q), k, v

    def attention_map(self, x: torch.Tensor) -> torch.Tensor:
        """The attention matrix this block applies to ``x``."""
        batch, _ = as_batch(x)
        q, k, _ = self.project(batch)
        return self.scores(q, k)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        q, k, v = self.project(x)
        return x + self.attend(q, k, v)

class ConvFFN(nn.Module):
    """Pre-normalised convolutional feed-forward network with a residual connection.

    ``x + W_out GELU(DW(W_in LN(x)))``
    """

    def __init__(self, dim: int, expansion: int = 2) -> None:
        super().__init__()
        hidden = dim * expansion
        self.norm = LayerNorm2d(dim)
        self.project_in = Conv2d(dim, hidden, 1)
        self.dwconv = Conv2d(hidden, hidden, 3, groups=hidden)
        self.project_out = Conv2d(hidden, dim, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.project_out(F.gelu(self.dwconv(self.project_in(self.norm(x)))))

class SparseFilterBlock(nn.Module):
    """One sparse self-attention layer followed by a feed-forward layer."""

    def __init__(
        self,
        dim: int,
        heads: int,
        pool: PoolMode = PoolMode.low,
        attention: AttentionKind = AttentionKind.sparse,
        expansion: int = 2,
    ) -> None:
        super().__init__()
        self.attn = SparseChannelAttention(dim, heads, pool, attention)
        self.ffn = ConvFFN(dim, expansion)

    def attention_map(self, x: torch.Tensor) -> torch.Tensor:
        return self.attn.attention_map(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.ffn(self.attn(x))

class SparseFilter(nn.Module):
    """A stack of :class:`SparseFilterBlock`; zero layers is the identity.

    Parameters
    ----------
    dim: :class:`int`
        Channel width of the filtered map.
    layers: :class:`int`
    heads: :class:`int`
    pool: :class:`PoolMode`
    attention: :class:`AttentionKind`
    expansion: :class:`int`
    """

    def __init__(
        self,
        dim: int,
        layers: int,
        heads: int,
        pool: PoolMode,
        attention: AttentionKind = AttentionKind.sparse,
        expansion: int = 2,
    ) -> None:
        super().__init__()
        self.dim = dim
        self.blocks = nn.Sequential(*(SparseFilterBlock(dim, heads, pool, attention, expansion) for _ in range(layers)))

    @property
    def depth(self) -> int:
        return len(self.blocks)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, single = as_batch(x)
        if batch.shape[1] != self.dim:
            raise ShapeMismatch((self.dim,), (batch.shape[1],), 'filter channels')
        out = self.blocks(batch)
        return out[0] if single else out

class LowPassFilter(SparseFilter):
    """Sparse filter with average-pooled queries, applied to the motion field."""

    def __init__(self, dim: int, layers: int, heads: int, attention: AttentionKind = AttentionKind.sparse, expansion: int = 2) -> None:
        super().__init__(dim, layers, heads, PoolMode.low, attention, expansion)

class HighPassFilter(SparseFilter):
    """Sparse filter with max-pooled queries, applied to a high-frequency band."""

    def __init__(
        self,
        level: Union[Level, str, int],
        dim: int,
        layers: int,
        heads: int,
        attention: AttentionKind = AttentionKind.sparse,
        expansion: int = 2,
    ) -> None:
        super().__init__(dim, layers, heads, PoolMode.high, attention, expansion)
        self.level = Level.coerce(level)
