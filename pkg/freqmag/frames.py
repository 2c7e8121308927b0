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
import logging
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
from PIL import Image

from .const import FRAME_NAME, FRAME_RE, MANIFEST_NAME
from .enums import Axis
from .errors import IndexOutOfRange, InvalidFrame, InvalidSequence

_log = logging.getLogger(__name__)

PathLike = Union[str, Path]

__all__ = (
    'to_uint8',
    'write_image',
    'read_image',
    'write_frames',
    'read_frames',
    'read_manifest',
    'spatiotemporal_slice',
)

def to_uint8(image: np.ndarray) -> np.ndarray:
    """Quantise a (3, H, W) float image in [0, 1] to (H, W, 3) 8-bit."""
    if image.ndim == 3 and image.shape[0] == 3:
        image = image.transpose(1, 2, 0)
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)

def write_image(image: np.ndarray, path: PathLike) -> None:
    """Write a (3, H, W), (H, W, 3) or (H, W) float image in [0, 1] as an 8-bit PNG."""
    Image.fromarray(to_uint8(image)).save(path, format='PNG')

def read_image(path: PathLike) -> np.ndarray:
    """Read a PNG as (3, H, W) float32 in [0, 1]."""
    with Image.open(path) as im:
        array = np.asarray(im.convert('RGB'), dtype=np.float32) / 255.0
    return np.ascontiguousarray(array.transpose(2, 0, 1))

def write_frames(frames: np.ndarray, directory: PathLike, *, fps: int = 30) -> Path:
    """
    Write (T, 3, H, W) frames as ``000000.png`` onwards plus a ``frames.json`` manifest.

    Frames left over from a longer earlier sequence are removed.
    """
    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[1] != 3:
        raise InvalidFrame(frames.shape, 'expected (T, 3, H, W)')
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    for t, frame in enumerate(frames):
        write_image(frame, directory / FRAME_NAME.format(t))
    for stale in directory.iterdir():
        match = FRAME_RE.match(stale.name)
        if match and int(match['index']) >= len(frames):
            stale.unlink()

    manifest = {'count': int(len(frames)), 'fps': int(fps), 'height': int(frames.shape[2]), 'width': int(frames.shape[3])}
    with open(directory / MANIFEST_NAME, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    _log.debug(f'Wrote {len(frames)} frames to {directory}')
    return directory

def read_manifest(directory: PathLike) -> Dict[str, Any]:
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        return {}
    with open(path, encoding='utf-8') as f:
        return json.load(f)

def read_frames(directory: PathLike) -> Tuple[np.ndarray, int]:
    """
    Read a frame directory.

    Returns
    -------
    Tuple[:class:`numpy.ndarray`, :class:`int`]
        (T, 3, H, W) float32 frames in [0, 1] and the frame rate (30 without a manifest).

    Raises
    ------
    :class:`InvalidSequence`
        Missing directory, no frames, gaps in the numbering or mixed resolutions.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidSequence(directory, 'not a directory')

    indexed = {}
    for path in directory.iterdir():
        match = FRAME_RE.match(path.name)
        if match:
            indexed[int(match['index'])] = path
    if not indexed:
        raise InvalidSequence(directory, 'no frames found')
    if sorted(indexed) != list(range(len(indexed))):
        raise InvalidSequence(directory, 'frame indices are not contiguous from 0')

    frames = [read_image(indexed[t]) for t in range(len(indexed))]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise InvalidSequence(directory, f'mixed resolutions {sorted(shapes)}')

    manifest = read_manifest(directory)
    if manifest and manifest.get('count') != len(frames):
        _log.warning(f'{directory}: manifest lists {manifest.get("count")} frames but {len(frames)} were found')
    return np.stack(frames), int(manifest.get('fps', 30))

def spatiotemporal_slice(frames: np.ndarray, axis: Union[Axis, str], index: int) -> np.ndarray:
    """
    Stack one pixel row or column of every frame over time.

    Parameters
    ----------
    frames: :class:`numpy.ndarray`
        (T, 3, H, W) frames.
    axis: Union[:class:`Axis`, :class:`str`]
    index: :class:`int`
        The row (or column) to take.

    Returns
    -------
    :class:`numpy.ndarray`
        (3, T, W) for a row, (3, H, T) for a column.
    """
    axis = Axis(axis)
    if frames.ndim != 4 or frames.shape[1] != 3:
        raise InvalidFrame(frames.shape, 'expected (T, 3, H, W)')
    size = frames.shape[2] if axis is Axis.row else frames.shape[3]
    if not 0 <= index < size:
        raise IndexOutOfRange(index, size, axis.value)
    if axis is Axis.row:
        return np.ascontiguousarray(frames[:, :, index, :].transpose(1, 0, 2))
    return np.ascontiguousarray(frames[:, :, :, index].transpose(1, 2, 0))
