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
import itertools
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from .const import LUMA_WEIGHTS, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW
from .errors import BackendNotInitialized, InvalidFrame, NoCorrelationPeak, ShapeMismatch
from .models import MetricReport
from .perceptual import PerceptualBackend, feature_distance
from .utils import ArrayLike, to_numpy, to_tensor

_log = logging.getLogger(__name__)

__all__ = (
    'ssim',
    'ssim_terms',
    'perceptual_distance',
    'estimate_displacement',
    'displacement_errors',
    'evaluate_sequence',
)

def _pair(a: ArrayLike, b: ArrayLike) -> Tuple[torch.Tensor, torch.Tensor]:
    x = to_tensor(a, dtype=torch.float64)
    y = to_tensor(b, dtype=torch.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(x.shape, y.shape, 'compared frames')
    if x.dim() == 3:
        x, y = x.unsqueeze(0), y.unsqueeze(0)
    if x.dim() != 4:
        raise InvalidFrame(x.shape, 'expected (C, H, W) or (N, C, H, W)')
    return x, y

def _window(channels: int) -> torch.Tensor:
    x = torch.arange(SSIM_WINDOW, dtype=torch.float64) - (SSIM_WINDOW - 1) / 2
    g = torch.exp(-x ** 2 / (2 * SSIM_SIGMA ** 2))
    g = g / g.sum()
    return torch.outer(g, g).expand(channels, 1, SSIM_WINDOW, SSIM_WINDOW).contiguous()

def _ssim_maps(a: ArrayLike, b: ArrayLike) -> Tuple[torch.Tensor, torch.Tensor]:
    x, y = _pair(a, b)
    if min(x.shape[-2:]) < SSIM_WINDOW:
        raise InvalidFrame(x.shape, f'sides must be at least {SSIM_WINDOW} for SSIM')
    channels = x.shape[1]
    win = _window(channels).to(x.device)

    def blur(z: torch.Tensor) -> torch.Tensor:
        # 'valid' positions only
        return F.conv2d(z, win, groups=channels)

    mu_x, mu_y = blur(x), blur(y)
    sigma_x = blur(x * x) - mu_x ** 2
    sigma_y = blur(y * y) - mu_y ** 2
    sigma_xy = blur(x * y) - mu_x * mu_y
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    luminance = (2 * mu_x * mu_y + c1) / (mu_x ** 2 + mu_y ** 2 + c1)
    contrast_structure = (2 * sigma_xy + c2) / (sigma_x + sigma_y + c2)
    return luminance, contrast_structure

def ssim(a: ArrayLike, b: ArrayLike) -> float:
    """
    Mean SSIM of two frames in [0, 1].

    An 11x11 Gaussian window (std 1.5) over valid positions only, with
    ``C1 = 0.01**2`` and ``C2 = 0.03**2``, averaged over channels and positions.
    Batched inputs are averaged over the batch too.

    Raises
    ------
    :class:`InvalidFrame`
        Either side is under 11 pixels, the window size. An 8x8 frame is
        valid for the network but too small to score.
    """
    luminance, contrast_structure = _ssim_maps(a, b)
    return float((luminance * contrast_structure).mean())

def ssim_terms(a: ArrayLike, b: ArrayLike) -> Tuple[float, float]:
    """The mean luminance term and the mean contrast-structure term of SSIM."""
    luminance, contrast_structure = _ssim_maps(a, b)
    return float(luminance.mean()), float(contrast_structure.mean())

def perceptual_distance(a: ArrayLike, b: ArrayLike, backend: Optional[PerceptualBackend]) -> float:
    """Sum over the backend's feature maps of the mean squared difference."""
    if backend is None:
        raise BackendNotInitialized()
    x, y = _pair(a, b)
    param = next(itertools.chain(backend.parameters(), backend.buffers()), None)
    dtype = param.dtype if param is not None and param.is_floating_point() else torch.float64
    with torch.no_grad():
        d = feature_distance(backend(x.to(dtype)), backend(y.to(dtype)))
    return float(d.mean())

def _luma(frame: ArrayLike) -> np.ndarray:
    array = to_numpy(frame).astype(np.float64)
    if array.ndim == 2:
        return array
    if array.ndim != 3 or array.shape[0] != 3:
        raise InvalidFrame(array.shape, 'expected (3, H, W) or (H, W)')
    return np.tensordot(LUMA_WEIGHTS, array, axes=1)

def _refine(left: float, centre: float, right: float) -> float:
    # vertex of a parabola through the log values; a Gaussian peak fits exactly
    if left > 0 and centre > 0 and right > 0:
        left, centre, right = math.log(left), math.log(centre), math.log(right)
    denom = left - 2 * centre + right
    if denom >= 0:
        return 0.0
    return 0.5 * (left - right) / denom

def estimate_displacement(f0: ArrayLike, ft: ArrayLike, peak_width: float = 1.5) -> Tuple[float, float]:
    """
    Estimate the global (dy, dx) translation from ``f0`` to ``ft`` by phase correlation.

    The normalised cross-power spectrum is weighted by a Gaussian, which
    turns the correlation peak into a Gaussian of std ``peak_width`` pixels
    whose sub-pixel centre is recovered by a log-parabolic fit per axis.
    Positive values mean ``ft`` is ``f0`` moved down or right.

    Raises
    ------
    :class:`NoCorrelationPeak`
        Either image is flat.
    """
    a = _luma(f0)
    b = _luma(ft)
    if a.shape != b.shape:
        raise ShapeMismatch(a.shape, b.shape, 'displacement frames')
    a = a - a.mean()
    b = b - b.mean()
    if np.abs(a).max() < 1e-9 or np.abs(b).max() < 1e-9:
        raise NoCorrelationPeak()

    h, w = a.shape
    spectrum = np.fft.fft2(b) * np.conj(np.fft.fft2(a))
    spectrum /= np.maximum(np.abs(spectrum), 1e-12)
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    spectrum *= np.exp(-2 * (math.pi * peak_width) ** 2 * (fy ** 2 + fx ** 2))
    corr = np.real(np.fft.ifft2(spectrum))

    py, px = np.unravel_index(int(np.argmax(corr)), corr.shape)
    if corr[py, px] <= 0:
        raise NoCorrelationPeak()
    dy = py + _refine(corr[(py - 1) % h, px], corr[py, px], corr[(py + 1) % h, px])
    dx = px + _refine(corr[py, (px - 1) % w], corr[py, px], corr[py, (px + 1) % w])
    if dy > h / 2:
        dy -= h
    if dx > w / 2:
        dx -= w
    return float(dy), float(dx)

def displacement_errors(
    frames: np.ndarray,
    expected: Sequence[Tuple[float, float]],
    reference: Optional[np.ndarray] = None,
) -> List[float]:
    """Euclidean error of the estimated displacement of every frame against ``reference`` (frame 0 by default)."""
    if len(frames) != len(expected):
        raise ShapeMismatch((len(frames),), (len(expected),), 'frames and expected displacements')
    reference = frames[0] if reference is None else reference
    errors = []
    for frame, (ey, ex) in zip(frames, expected):
        dy, dx = estimate_displacement(reference, frame)
        errors.append(math.hypot(dy - ey, dx - ex))
    return errors

def evaluate_sequence(
    pred: np.ndarray,
    gt: np.ndarray,
    backend: Optional[PerceptualBackend],
    *,
    batch_size: int = 8,
) -> MetricReport:
    """Per-frame SSIM and perceptual distance of (T, 3, H, W) ``pred`` against ``gt``."""
    if pred.shape != gt.shape:
        raise ShapeMismatch(gt.shape, pred.shape, 'predicted and ground-truth sequences')
    if backend is None:
        raise BackendNotInitialized()

    ssims = [ssim(p, g) for p, g in zip(pred, gt)]
    perceptual: List[float] = []
    with torch.no_grad():
        for start in range(0, len(pred), batch_size):
            x = to_tensor(pred[start:start + batch_size])
            y = to_tensor(gt[start:start + batch_size])
            perceptual.extend(feature_distance(backend(x), backend(y)).tolist())
    _log.debug(f'Evaluated {len(pred)} frames: mean SSIM {np.mean(ssims) if ssims else float("nan"):.4f}')
    return MetricReport.from_scores(ssims, perceptual, backend.provenance)
