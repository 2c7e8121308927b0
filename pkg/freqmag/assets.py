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

import io
import logging
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from PIL import Image

from .const import BUILTIN_PREFIX, URL_RE
from .errors import InvalidConfig
from .http import AssetHTTP

_log = logging.getLogger(__name__)

__all__ = (
    'FOREGROUNDS',
    'BACKGROUNDS',
    'builtin_foreground',
    'builtin_background',
    'load_image',
    'load_foreground',
    'load_background',
)

def _texture(shape: Tuple[int, int], rng: np.random.Generator, waves: int = 6, contrast: float = 0.35) -> np.ndarray:
    # a sum of random plane waves per channel, broadband enough for phase correlation
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    out = np.empty((3, h, w))
    for c in range(3):
        acc = np.zeros((h, w))
        for _ in range(waves):
            fy, fx = rng.uniform(-0.25, 0.25, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            acc += np.sin(2 * np.pi * (fy * yy + fx * xx) + phase)
        out[c] = 0.5 + contrast * acc / waves
    return np.clip(out, 0.0, 1.0)

def _soft_mask(distance: np.ndarray) -> np.ndarray:
    # signed distance to the shape edge in pixels, inside < 0
    return np.clip(0.5 - distance, 0.0, 1.0)

def _disk(size: int) -> np.ndarray:
    c = (size - 1) / 2
    yy, xx = np.mgrid[0:size, 0:size]
    r = np.hypot(yy - c, xx - c)
    return _soft_mask(r - (size / 2 - 1))

def _square(size: int) -> np.ndarray:
    c = (size - 1) / 2
    yy, xx = np.mgrid[0:size, 0:size]
    d = np.maximum(np.abs(yy - c), np.abs(xx - c))
    return _soft_mask(d - (size / 2 - 1.5))

def _ring(size: int) -> np.ndarray:
    c = (size - 1) / 2
    yy, xx = np.mgrid[0:size, 0:size]
    r = np.hypot(yy - c, xx - c)
    outer = size / 2 - 1
    return _soft_mask(np.abs(r - 0.7 * outer) - 0.3 * outer)

FOREGROUNDS: Dict[str, Callable[[int], np.ndarray]] = {
    'disk': _disk,
    'square': _square,
    'ring': _ring,
}

BACKGROUNDS = ('flat', 'checker', 'gradient', 'texture')

def builtin_foreground(name: str, size: int, seed: int = 0) -> np.ndarray:
    """
    A procedurally textured RGBA foreground.

    Returns
    -------
    :class:`numpy.ndarray`
        (4, size, size) float64 in [0, 1]; channel 3 is the straight alpha matte.
    """
    if name not in FOREGROUNDS:
        raise InvalidConfig('foreground', f'unknown built-in {name!r}, expected one of: {", ".join(FOREGROUNDS)}')
    rng = np.random.default_rng([seed, 1])
    rgb = _texture((size, size), rng, contrast=0.45)
    alpha = FOREGROUNDS[name](size)
    return np.concatenate([rgb, alpha[None]], axis=0)

def builtin_background(name: str, shape: Tuple[int, int], seed: int = 0) -> np.ndarray:
    """A (3, H, W) float64 background in [0, 1]."""
    h, w = shape
    if name == 'flat':
        return np.full((3, h, w), 0.5)
    if name == 'checker':
        yy, xx = np.mgrid[0:h, 0:w]
        cells = ((yy // 8) + (xx // 8)) % 2
        return np.broadcast_to(0.3 + 0.4 * cells, (3, h, w)).astype(np.float64)
    if name == 'gradient':
        ramp = np.linspace(0.2, 0.8, w)
        return np.broadcast_to(ramp, (3, h, w)).astype(np.float64)
    if name == 'texture':
        return _texture((h, w), np.random.default_rng([seed, 2]), contrast=0.15)
    raise InvalidConfig('background', f'unknown built-in {name!r}, expected one of: {", ".join(BACKGROUNDS)}')

def load_image(
    ref: Union[str, Path],
    mode: str = 'RGB',
    *,
    http: Optional[AssetHTTP] = None,
    size: Optional[Tuple[int, int]] = None,
) -> np.ndarray:
    """
    Read a local file or an http(s) URL into a (C, H, W) float64 array in [0, 1].

    Parameters
    ----------
    ref: Union[:class:`str`, :class:`pathlib.Path`]
    mode: :class:`str`
        Pillow mode to convert to, ``RGB`` or ``RGBA``.
    http: Optional[:class:`AssetHTTP`]
        Client for URLs; a temporary one is used when omitted.
    size: Optional[Tuple[:class:`int`, :class:`int`]]
        (height, width) to resize to.
    """
    ref = str(ref)
    if URL_RE.match(ref):
        if http is None:
            with AssetHTTP() as client:
                data = client.fetch(ref)
        else:
            data = http.fetch(ref)
        image = Image.open(io.BytesIO(data))
    else:
        if not Path(ref).is_file():
            raise InvalidConfig('asset', f'{ref!r} does not exist')
        image = Image.open(ref)

    with image:
        image = image.convert(mode)
        if size is not None and (image.height, image.width) != tuple(size):
            image = image.resize((size[1], size[0]), Image.BILINEAR)
        array = np.asarray(image, dtype=np.float64) / 255.0
    _log.debug(f'Loaded {mode} asset {ref} with shape {array.shape}')
    return np.ascontiguousarray(array.transpose(2, 0, 1))

def load_foreground(ref: str, size: int, seed: int = 0, *, http: Optional[AssetHTTP] = None) -> np.ndarray:
    """A (4, h, w) RGBA foreground from ``builtin:<name>``, a path, or a URL."""
    if ref.startswith(BUILTIN_PREFIX):
        return builtin_foreground(ref[len(BUILTIN_PREFIX):], size, seed)
    return load_image(ref, 'RGBA', http=http)

def load_background(ref: str, shape: Tuple[int, int], seed: int = 0, *, http: Optional[AssetHTTP] = None) -> np.ndarray:
    """A (3, H, W) RGB background from ``builtin:<name>``, a path, or a URL, resized to ``shape``."""
    if ref.startswith(BUILTIN_PREFIX):
        return builtin_background(ref[len(BUILTIN_PREFIX):], shape, seed)
    return load_image(ref, 'RGB', http=http, size=shape)
