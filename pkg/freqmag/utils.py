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

import time
import logging
from typing import Tuple, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import InvalidConfig, InvalidFrame

_log = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, torch.Tensor]

def validate_frames(frames: torch.Tensor, multiple: int = 8, *, check_values: bool = False) -> None:
    """Raise :class:`InvalidFrame` unless ``frames`` is (3, H, W) or (N, 3, H, W) with H, W divisible by ``multiple``."""
    shape = tuple(frames.shape)
    if frames.dim() not in (3, 4) or shape[-3] != 3:
        raise InvalidFrame(shape, 'expected (3, H, W) or (N, 3, H, W)')
    h, w = shape[-2:]
    if h % multiple or w % multiple or h == 0 or w == 0:
        raise InvalidFrame(shape, f'dimension not divisible by {multiple}')
    if check_values:
        if not torch.isfinite(frames).all():
            raise InvalidFrame(shape, 'values must be finite')
        if frames.min() < 0 or frames.max() > 1:
            raise InvalidFrame(shape, 'values must lie within [0, 1]')

def as_batch(x: torch.Tensor) -> Tuple[torch.Tensor, bool]:
    """Add a batch axis to a single (C, H, W) tensor; the flag says whether one was added."""
    if x.dim() == 3:
        return x.unsqueeze(0), True
    return x, False

def pad2d(x: torch.Tensor, pad: int) -> torch.Tensor:
    """Reflect-pad the two spatial axes, replicating where the map is too small to reflect."""
    if pad == 0:
        return x
    mode = 'reflect' if min(x.shape[-2:]) > pad else 'replicate'
    return F.pad(x, (pad, pad, pad, pad), mode=mode)

def pad_to_multiple(frames: np.ndarray, multiple: int) -> Tuple[np.ndarray, Tuple[int, int]]:
    """
    Reflect-pad (..., H, W) frames at the bottom and right so both sides divide by ``multiple``.

    Returns
    -------
    Tuple[:class:`numpy.ndarray`, Tuple[:class:`int`, :class:`int`]]
        The padded frames and the original (H, W) to crop back to.
    """
    h, w = frames.shape[-2:]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return frames, (h, w)
    widths = [(0, 0)] * (frames.ndim - 2) + [(0, ph), (0, pw)]
    mode = 'reflect' if ph < h and pw < w else 'symmetric'
    return np.pad(frames, widths, mode=mode), (h, w)

def count_parameters(module: nn.Module, trainable_only: bool = True) -> int:
    """Total number of (trainable) parameter entries of ``module``."""
    return sum(p.numel() for p in module.parameters() if p.requires_grad or not trainable_only)

def count_flops(module: nn.Module, height: int, width: int, alpha: float = 10.0) -> int:
    """
    Floating point operations of one forward pass of a magnification network on a
    (height, width) frame pair, as counted by :class:`torch.utils.flop_counter.FlopCounterMode`.

    Only convolutions and matrix products are counted.
    """
    from torch.utils.flop_counter import FlopCounterMode

    param = next(module.parameters())
    frame = torch.zeros(1, 3, height, width, dtype=param.dtype, device=param.device)
    counter = FlopCounterMode(display=False)
    with torch.no_grad(), counter:
        module(frame, frame, alpha)
    flops = counter.get_total_flops()
    _log.debug(f'{type(module).__name__} at {height}x{width}: {flops} FLOPs')
    return flops

def time_forward(module: nn.Module, height: int, width: int, *, runs: int = 10, warmup: int = 2, alpha: float = 10.0) -> float:
    """
    Mean wall-clock milliseconds of one no-grad forward pass on a (height, width) frame pair.

    ``warmup`` untimed passes run first. CUDA work is synchronized before reading the clock.
    """
    if runs < 1 or warmup < 0:
        raise InvalidConfig('runs', f'need runs >= 1 and warmup >= 0, got {runs} and {warmup}')
    param = next(module.parameters())
    frame = torch.zeros(1, 3, height, width, dtype=param.dtype, device=param.device)
    sync = torch.cuda.synchronize if param.device.type == 'cuda' else (lambda: None)

    was_training = module.training
    module.eval()
    try:
        with torch.no_grad():
            for _ in range(warmup):
                module(frame, frame, alpha)
            sync()
            start = time.perf_counter()
            for _ in range(runs):
                module(frame, frame, alpha)
            sync()
            elapsed = time.perf_counter() - start
    finally:
        module.train(was_training)
    ms = elapsed * 1000.0 / runs
    _log.debug(f'{type(module).__name__} at {height}x{width}: {ms:.2f} ms over {runs} runs')
    return ms

def to_tensor(frames: ArrayLike, device: Union[str, torch.device] = 'cpu', dtype: torch.dtype = torch.float32) -> torch.Tensor:
    if isinstance(frames, torch.Tensor):
        return frames.to(device=device, dtype=dtype)
    return torch.from_numpy(np.ascontiguousarray(frames)).to(device=device, dtype=dtype)

def to_numpy(frames: ArrayLike) -> np.ndarray:
    if isinstance(frames, torch.Tensor):
        return frames.detach().cpu().numpy()
    return np.asarray(frames)
