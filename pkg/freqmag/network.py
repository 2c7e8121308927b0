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
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ModelConfig
from .encoder import Encoder, motion_field
from .enums import Level, Mode
from .errors import InvalidAlpha, InvalidFrame, ShapeMismatch, UnknownLevel
from .filters import HighPassFilter, LowPassFilter
from .layers import Conv2d
from .mixer import FrequencyMixer
from .models import FrequencyPyramid, MagnifyRequest, MotionField
from .utils import as_batch, count_flops, count_parameters, pad_to_multiple, time_forward, to_numpy, to_tensor, validate_frames

_log = logging.getLogger(__name__)

Alpha = Union[float, Sequence[float], torch.Tensor]

__all__ = (
    'Magnifier',
    'SubPixelUpsample',
    'MagnificationNetwork',
    'subpixel_shuffle',
    'forward_magnify',
    'magnify_sequence',
)

def _alpha_tensor(alpha: Alpha, batch: int, like: torch.Tensor) -> torch.Tensor:
    if isinstance(alpha, torch.Tensor):
        a = alpha.to(dtype=like.dtype, device=like.device)
    else:
        try:
            a = torch.as_tensor(alpha, dtype=like.dtype, device=like.device)
        except (TypeError, ValueError):
            raise InvalidAlpha(alpha) from None
    values = a.detach()
    if not torch.isfinite(values).all() or (values < 0).any():
        raise InvalidAlpha(values.tolist())
    a = a.reshape(-1, 1, 1, 1)
    if a.shape[0] not in (1, batch):
        raise ShapeMismatch((batch,), (a.shape[0],), 'alpha')
    return a

def subpixel_shuffle(x: torch.Tensor) -> torch.Tensor:
    """Rearrange (N, 4C, H, W) into (N, C, 2H, 2W)."""
    if x.shape[-3] % 4:
        raise ShapeMismatch((4,), (x.shape[-3],), 'sub-pixel channels (multiple of 4)')
    return F.pixel_shuffle(x, 2)

class Magnifier(nn.Module):
    """Scales the filtered motion field and adds it to the query's deep low band.

    ``L' = L_q + GELU(W_2 (alpha * GELU(W_1 delta)))``
    """

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.channels = channels
        self.inner = Conv2d(channels, channels, 1)
        self.outer = Conv2d(channels, channels, 1)

    def forward(self, low: torch.Tensor, delta: torch.Tensor, alpha: Alpha) -> torch.Tensor:
        if low.shape != delta.shape:
            raise ShapeMismatch(low.shape, delta.shape, 'magnifier inputs')
        low, single = as_batch(low)
        delta, _ = as_batch(delta)
        a = _alpha_tensor(alpha, low.shape[0], low)
        out = low + F.gelu(self.outer(a * F.gelu(self.inner(delta))))
        return out[0] if single else out

class SubPixelUpsample(nn.Module):
    """1x1 convolution to ``4 * out`` channels followed by a 2x sub-pixel shuffle."""

    def __init__(self, in_channels: int, out_channels: int) -> None:
        super().__init__()
        self.conv = Conv2d(in_channels, out_channels * 4, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return subpixel_shuffle(self.conv(x))

class MagnificationNetwork(nn.Module):
    """Frequency-decoupled motion magnification.

    Both frames go through the shared :class:`Encoder`. The difference of
    their deepest low bands is low-pass filtered, scaled by ``alpha`` and
    added back to the query's low band; the decoder then climbs the pyramid,
    mixing in each level's high-pass filtered details before upsampling.

    Parameters
    ----------
    config: Optional[:class:`ModelConfig`]
        Defaults to the three-band model.
    """

    def __init__(self, config: Optional[ModelConfig] = None) -> None:
        super().__init__()
        self.config = config = config or ModelConfig()
        widths = config.widths
        heads = config.heads
        self.levels = Level.ladder(config.bands)

        self.encoder = Encoder(config)
        self.low_pass = LowPassFilter(
            widths[-1],
            config.low_pass_layers if config.use_low_pass else 0,
            config.low_pass_heads,
            config.attention,
            config.ffn_expansion,
        )
        self.high_pass = nn.ModuleList(
            HighPassFilter(
                level,
                widths[i],
                config.high_pass_layers[i] if config.use_high_pass else 0,
                heads[i],
                config.attention,
                config.ffn_expansion,
            )
            for i, level in enumerate(self.levels)
        )
        self.magnifier = Magnifier(widths[-1])
        self.mixers = nn.ModuleList(
            FrequencyMixer(
                widths[i],
                config.mixer_layers[i] if config.use_mixer else 0,
                heads[i],
                config.dilation,
                config.attention,
                config.ffn_expansion,
            )
            for i in range(config.bands)
        )
        # upsamplers[i] takes level i + 1 to level i
        self.upsamplers = nn.ModuleList(SubPixelUpsample(widths[i + 1], widths[i]) for i in range(config.bands - 1))
        self.final_upsample = SubPixelUpsample(widths[0], widths[0])
        self.head = Conv2d(widths[0], 3, 3)

        _log.debug(f'Built {config.bands}-band network with {count_parameters(self)} parameters')

    def encode(self, frame: torch.Tensor) -> FrequencyPyramid:
        return self.encoder(frame)

    def filter_motion(self, field: MotionField) -> MotionField:
        return MotionField(delta=self.low_pass(field.delta))

    def filter_details(self, level: Union[Level, str, int], band: torch.Tensor) -> torch.Tensor:
        """Apply the high-pass filter of ``level`` to its high-frequency ``band``."""
        level = Level.coerce(level)
        if level not in self.levels:
            raise UnknownLevel(level.value)
        return self.high_pass[level.index](band)

    def decode(self, low: torch.Tensor, pyramid: FrequencyPyramid) -> torch.Tensor:
        """Rebuild a frame from a (magnified) deep low band and the query's pyramid."""
        x = low
        for i in reversed(range(self.config.bands)):
            x = self.mixers[i](x, self.filter_details(i, pyramid.highs[i]))
            x = self.upsamplers[i - 1](x) if i else self.final_upsample(x)
        return self.head(x)

    def forward(self, reference: torch.Tensor, query: torch.Tensor, alpha: Alpha) -> torch.Tensor:
        """
        Magnify the motion from ``reference`` to ``query``.

        Parameters
        ----------
        reference: :class:`torch.Tensor`
            (3, H, W) or (N, 3, H, W) frame.
        query: :class:`torch.Tensor`
            Same shape as ``reference``.
        alpha: Union[:class:`float`, Sequence[:class:`float`], :class:`torch.Tensor`]
            One factor, or one per batch entry.

        Returns
        -------
        :class:`torch.Tensor`
            The unclamped magnified frame, shaped like ``query``.
        """
        if reference.shape != query.shape:
            raise ShapeMismatch(reference.shape, query.shape, 'reference and query')
        validate_frames(query, self.config.multiple)
        reference, single = as_batch(reference)
        query, _ = as_batch(query)

        ref_pyramid = self.encode(reference)
        query_pyramid = self.encode(query)
        field = self.filter_motion(motion_field(ref_pyramid, query_pyramid))
        low = self.magnifier(query_pyramid.low, field.delta, alpha)
        out = self.decode(low, query_pyramid)
        return out[0] if single else out

    def summary(self, height: int = 640, width: int = 640, *, runs: int = 0, warmup: int = 2) -> Dict[str, Any]:
        """
        Parameter and FLOP counts of this network at a (height, width) input.

        With ``runs`` above zero the mean forward time in milliseconds is
        added as ``time_ms``, measured after ``warmup`` untimed passes.
        """
        info = {
            'config': self.config.to_dict(),
            'parameters': count_parameters(self),
            'resolution': [height, width],
            'flops': count_flops(self, height, width),
        }
        if runs:
            info['time_ms'] = time_forward(self, height, width, runs=runs, warmup=warmup)
            info['runs'] = runs
        return info

def forward_magnify(
    reference: torch.Tensor,
    query: torch.Tensor,
    alpha: Alpha,
    network: MagnificationNetwork,
) -> torch.Tensor:
    """Inference-time magnification: the network output clamped to [0, 1], without gradients."""
    validate_frames(reference, network.config.multiple, check_values=True)
    validate_frames(query, network.config.multiple, check_values=True)
    with torch.no_grad():
        return network(reference, query, alpha).clamp(0.0, 1.0)

def magnify_sequence(
    frames: np.ndarray,
    request: MagnifyRequest,
    network: MagnificationNetwork,
    *,
    batch_size: int = 8,
) -> np.ndarray:
    """
    Magnify every frame of a (T, 3, H, W) sequence.

    Frames whose sides do not divide by the network's multiple are reflect
    padded and the output is cropped back. Frame 0 is copied through.

    Returns
    -------
    :class:`numpy.ndarray`
        (T, 3, H, W) float32 frames in [0, 1].
    """
    frames = np.asarray(frames, dtype=np.float32)
    if frames.ndim != 4 or frames.shape[1] != 3 or len(frames) == 0:
        raise InvalidFrame(frames.shape, 'expected (T, 3, H, W) with T >= 1')
    if not np.isfinite(frames).all() or frames.min() < 0 or frames.max() > 1:
        raise InvalidFrame(frames.shape, 'values must be finite and within [0, 1]')

    padded, (h, w) = pad_to_multiple(frames, network.config.multiple)
    if padded.shape != frames.shape:
        _log.warning(
            f'Resolution {h}x{w} is not divisible by {network.config.multiple}; '
            f'padding to {padded.shape[-2]}x{padded.shape[-1]} and cropping the output'
        )

    param = next(network.parameters())
    out = np.empty_like(frames)
    out[0] = frames[0]
    count = len(frames)
    for start in range(1, count, batch_size):
        index = np.arange(start, min(count, start + batch_size))
        ref_index = np.zeros_like(index) if request.mode is Mode.static else index - 1
        reference = to_tensor(padded[ref_index], device=param.device, dtype=param.dtype)
        query = to_tensor(padded[index], device=param.device, dtype=param.dtype)
        pred = forward_magnify(reference, query, request.alpha, network)
        out[index] = to_numpy(pred)[..., :h, :w]
        _log.debug(f'Magnified frames {index[0]}..{index[-1]} of {count}')
    return out
