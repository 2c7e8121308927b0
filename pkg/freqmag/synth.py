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

import json
import math
import logging
from pathlib import Path
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .assets import load_background, load_foreground
from .config import SynthSpec, load_json
from .const import SPEC_NAME
from .enums import Trajectory
from .errors import ForegroundOutOfBounds, InvalidConfig, MissingGroundTruth
from .frames import read_frames, write_frames
from .http import AssetHTTP
from .models import SamplePair

_log = logging.getLogger(__name__)

Displacement = Union[float, Tuple[float, float]]

__all__ = (
    'Scene',
    'motion_profile',
    'displacement_at',
    'load_scene',
    'composite_frame',
    'add_noise',
    'synthesize_sequence',
    'save_dataset',
    'load_dataset',
)

def motion_profile(t: float, amplitude: float, period: float) -> float:
    """``amplitude * sin(2 pi t / period)`` pixels."""
    if period <= 0:
        raise InvalidConfig('period', 'must be > 0')
    return amplitude * math.sin(2 * math.pi * t / period)

@dataclass
class Scene:
    """A foreground layer over a static background.

    Attributes
    ----------
    foreground: :class:`numpy.ndarray`
        (4, h, w) straight RGBA in [0, 1].
    background: :class:`numpy.ndarray`
        (3, H, W) RGB in [0, 1].
    position: Tuple[:class:`int`, :class:`int`]
        Top-left (row, col) of the foreground at zero displacement.
    """

    __slots__ = ('foreground', 'background', 'position')

    foreground: np.ndarray
    background: np.ndarray
    position: Tuple[int, int]

    @property
    def canvas(self) -> Tuple[int, int]:
        return self.background.shape[1], self.background.shape[2]

    def margin(self) -> Tuple[int, int]:
        """Largest displacement in pixels that keeps the foreground inside the canvas, per axis."""
        (h, w), (fh, fw) = self.canvas, self.foreground.shape[1:]
        y0, x0 = self.position
        return min(y0, h - fh - y0), min(x0, w - fw - x0)

def load_scene(spec: SynthSpec, *, http: Optional[AssetHTTP] = None) -> Scene:
    """Load or generate the assets of ``spec``."""
    foreground = load_foreground(spec.foreground, spec.foreground_size, spec.seed, http=http)
    background = load_background(spec.background, spec.resolution, spec.seed, http=http)
    h, w = spec.resolution
    fh, fw = foreground.shape[1:]
    if spec.position is None:
        position = ((h - fh) // 2, (w - fw) // 2)
    else:
        position = (int(spec.position[0]), int(spec.position[1]))
    if position[0] < 0 or position[1] < 0 or position[0] + fh > h or position[1] + fw > w:
        raise ForegroundOutOfBounds((0.0, 0.0), (h, w))
    return Scene(foreground=foreground, background=background, position=position)

def displacement_at(spec: SynthSpec, t: float, magnified: bool = False, alpha: Optional[float] = None) -> Tuple[float, float]:
    """The (dy, dx) foreground displacement of frame ``t``; ``magnified`` scales the amplitude by alpha."""
    amplitude = spec.amplitude
    if magnified:
        amplitude *= spec.alpha if alpha is None else alpha
    d = motion_profile(t, amplitude, spec.period)
    if spec.trajectory is Trajectory.planar:
        return d, d
    return d, 0.0

def _taps(d: float) -> List[Tuple[int, float]]:
    base = math.floor(d)
    frac = d - base
    taps = [(base, 1.0 - frac)]
    if frac > 0:
        taps.append((base + 1, frac))
    return taps

def composite_frame(scene: Scene, displacement: Displacement) -> np.ndarray:
    """
    Composite the foreground over the background, shifted by ``displacement``.

    Sub-pixel shifts blend the premultiplied layer bilinearly between the
    neighbouring integer positions.

    Parameters
    ----------
    scene: :class:`Scene`
    displacement: Union[:class:`float`, Tuple[:class:`float`, :class:`float`]]
        Vertical shift, or (dy, dx), in pixels; positive moves down/right.

    Returns
    -------
    :class:`numpy.ndarray`
        (3, H, W) float64 in [0, 1].

    Raises
    ------
    :class:`ForegroundOutOfBounds`
    """
    if isinstance(displacement, tuple):
        dy, dx = float(displacement[0]), float(displacement[1])
    else:
        dy, dx = float(displacement), 0.0

    h, w = scene.canvas
    fg = scene.foreground
    fh, fw = fg.shape[1:]
    y0, x0 = scene.position
    alpha = fg[3:4]
    layer = np.concatenate([fg[:3] * alpha, alpha], axis=0)

    ys, xs = _taps(dy), _taps(dx)
    if y0 + ys[0][0] < 0 or y0 + ys[-1][0] + fh > h or x0 + xs[0][0] < 0 or x0 + xs[-1][0] + fw > w:
        raise ForegroundOutOfBounds((dy, dx), (h, w))

    shifted = np.zeros((4, h, w))
    for oy, wy in ys:
        for ox, wx in xs:
            top, left = y0 + oy, x0 + ox
            shifted[:, top:top + fh, left:left + fw] += (wy * wx) * layer

    out = shifted[:3] + (1.0 - shifted[3:4]) * scene.background
    return np.clip(out, 0.0, 1.0)

def add_noise(frames: np.ndarray, sigma: float, seed: int = 0) -> np.ndarray:
    """
    Add i.i.d. Gaussian noise to (T, 3, H, W) frames and clip to [0, 1].

    Frame ``t`` draws from its own ``(seed, t)`` stream, so any subset of
    frames can be regenerated independently.
    """
    if sigma < 0:
        raise InvalidConfig('noise_sigma', 'must be >= 0')
    if sigma == 0:
        return frames
    out = np.empty_like(frames)
    for t, frame in enumerate(frames):
        rng = np.random.default_rng([seed, t])
        noise = rng.normal(0.0, sigma, size=frame.shape)
        out[t] = np.clip(frame.astype(np.float64) + noise, 0.0, 1.0)
    return out

def synthesize_sequence(spec: SynthSpec, scene: Optional[Scene] = None, *, http: Optional[AssetHTTP] = None) -> SamplePair:
    """
    Render the input and magnified ground-truth sequences of ``spec``.

    Input frames move with ``spec.amplitude`` and ground-truth frames with
    ``spec.amplitude * spec.alpha``; noise only touches the input.
    """
    scene = scene or load_scene(spec, http=http)
    h, w = scene.canvas
    inputs = np.empty((spec.frame_count, 3, h, w), dtype=np.float32)
    gts = np.empty_like(inputs)
    for t in range(spec.frame_count):
        inputs[t] = composite_frame(scene, displacement_at(spec, t))
        gts[t] = composite_frame(scene, displacement_at(spec, t, magnified=True))
    if spec.noise_sigma > 0:
        inputs = add_noise(inputs, spec.noise_sigma, spec.seed)
    _log.info(f'Synthesised {spec.frame_count} frames at {h}x{w} (alpha={spec.alpha}, sigma={spec.noise_sigma})')
    return SamplePair(input_frames=inputs, gt_frames=gts, spec=spec)

def save_dataset(pair: SamplePair, directory: Union[str, Path]) -> Path:
    """Write ``input/``, ``gt/`` and ``spec.json`` under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_frames(pair.input_frames, directory / 'input', fps=pair.spec.fps)
    write_frames(pair.gt_frames, directory / 'gt', fps=pair.spec.fps)
    with open(directory / SPEC_NAME, 'w', encoding='utf-8') as f:
        json.dump(pair.spec.to_dict(), f, indent=2, sort_keys=True)
    _log.info(f'Wrote dataset {directory}')
    return directory

def load_dataset(directory: Union[str, Path]) -> SamplePair:
    """Read a directory written by :func:`save_dataset`."""
    directory = Path(directory)
    if not (directory / 'gt').is_dir():
        raise MissingGroundTruth(directory)
    if not (directory / SPEC_NAME).is_file():
        raise InvalidConfig(str(directory / SPEC_NAME), 'missing dataset spec')
    spec = SynthSpec.from_dict(load_json(directory / SPEC_NAME))
    inputs, _ = read_frames(directory / 'input')
    gts, _ = read_frames(directory / 'gt')
    return SamplePair(input_frames=inputs, gt_frames=gts, spec=spec)
