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
from typing import List, Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from .layers import Conv2d
from .config import ModelConfig
from .errors import ShapeMismatch
from .utils import as_batch, validate_frames
from .models import FrequencyPyramid, MotionField

_log = logging.getLogger(__name__)

__all__ = ('AFDE', 'Encoder', 'motion_field')

class AFDE(nn.Module):
    """Adaptive frequency decoupling.

    A dilated convolution ``W`` smooths the input into its low band and the
    residual against that smoothing is the high band::

        low  = GELU(W x)
        high = GELU(x - W x)

    Both branches use the same convolution output.

    Parameters
    ----------
    channels: :class:`int`
    dilation: :class:`int`
    depthwise: :class:`bool`
        Use a per-channel smoothing kernel instead of a dense one.
    """

    def __init__(self, channels: int, dilation: int = 2, depthwise: bool = False) -> None:
        super().__init__()
        self.channels = channels
        self.smooth = Conv2d(channels, channels, 3, dilation=dilation, groups=channels if depthwise else 1)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        if x.shape[-3] != self.channels:
            raise ShapeMismatch((self.channels,), (x.shape[-3],), 'decoupling channels')
        smooth = self.smooth(x)
        return F.gelu(x - smooth), F.gelu(smooth)

class Encoder(nn.Module):
    """The multi-level isomorphic frequency decoupling encoder.

    A stride-2 stem maps a frame to ``C`` channels at half resolution; each
    level then splits its input into high and low bands, and the low band is
    downsampled (stride-2 convolution, channels doubled) into the next level.
    Reference and query frames share this encoder.

    Parameters
    ----------
    config: :class:`ModelConfig`
    """

    def __init__(self, config: Optional[ModelConfig] = None) -> None:
        super().__init__()
        self.config = config = config or ModelConfig()
        widths = config.widths
        self.stem_conv = Conv2d(3, widths[0], 3, stride=2)
        self.afde = nn.ModuleList(AFDE(w, config.dilation) for w in widths)
        self.down = nn.ModuleList(Conv2d(w, 2 * w, 3, stride=2) for w in widths[:-1])

    def stem(self, frame: torch.Tensor) -> torch.Tensor:
        """Map a (3, H, W) or (N, 3, H, W) frame to its (C, H/2, W/2) initial feature."""
        validate_frames(frame, self.config.multiple)
        batch, single = as_batch(frame)
        out = self.stem_conv(batch)
        return out[0] if single else out

    def split(self, level: int, feature: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """Decouple ``feature`` at ``level`` into (high, low)."""
        batch, single = as_batch(feature)
        high, low = self.afde[level](batch)
        if single:
            return high[0], low[0]
        return high, low

    def build_pyramid(self, frame: torch.Tensor) -> FrequencyPyramid:
        batch, single = as_batch(frame)
        x = self.stem(batch)
        highs: List[torch.Tensor] = []
        low = x
        for level, afde in enumerate(self.afde):
            high, low = afde(x)
            highs.append(high)
            if level < len(self.down):
                x = self.down[level](low)
        if single:
            return FrequencyPyramid(highs=tuple(h[0] for h in highs), low=low[0])
        return FrequencyPyramid(highs=tuple(highs), low=low)

    def forward(self, frame: torch.Tensor) -> FrequencyPyramid:
        return self.build_pyramid(frame)

def motion_field(reference: FrequencyPyramid, query: FrequencyPyramid) -> MotionField:
    """The motion field ``query.l_deep - reference.l_deep``."""
    if reference.shapes != query.shapes:
        raise ShapeMismatch(reference.low.shape, query.low.shape, 'pyramids')
    return MotionField(delta=query.low - reference.low)
