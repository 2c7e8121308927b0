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

from typing import Any, Optional, Sequence, Tuple

import requests

__all__ = (
    'FreqmagError',
    'InvalidFrame',
    'ShapeMismatch',
    'InvalidAlpha',
    'InvalidConfig',
    'UnknownLevel',
    'ForegroundOutOfBounds',
    'NoCorrelationPeak',
    'BackendNotInitialized',
    'NonFiniteLoss',
    'CheckpointError',
    'MissingGroundTruth',
    'IndexOutOfRange',
    'InvalidSequence',
    'HTTPException',
)

class FreqmagError(Exception):
    """Base class for all freqmag errors."""
    pass

class InvalidFrame(FreqmagError):
    """Exception raised when a frame violates the frame contract.

    Attributes
    ----------
    shape: Tuple[:class:`int`, ...]
        The shape of the rejected frame.
    reason: :class:`str`
        Why the frame was rejected.
    """
    def __init__(self, shape: Sequence[int], reason: str):
        self.shape: Tuple[int, ...] = tuple(shape)
        self.reason: str = reason
        super().__init__(f'Invalid frame of shape {self.shape}: {reason}')

class ShapeMismatch(FreqmagError):
    """Exception raised when two arrays that must agree in shape do not.

    Attributes
    ----------
    expected: Tuple[:class:`int`, ...]
    got: Tuple[:class:`int`, ...]
    """
    def __init__(self, expected: Sequence[int], got: Sequence[int], what: str = 'input'):
        self.expected: Tuple[int, ...] = tuple(expected)
        self.got: Tuple[int, ...] = tuple(got)
        super().__init__(f'Shape mismatch for {what}: expected {self.expected}, got {self.got}')

class InvalidAlpha(FreqmagError):
    """Exception raised when a magnification factor is negative or not finite.

    Attributes
    ----------
    alpha: Any
        The rejected magnification factor.
    """
    def __init__(self, alpha: Any):
        self.alpha: Any = alpha
        super().__init__(f'Magnification factor must be finite and >= 0, got {alpha!r}')

class InvalidConfig(FreqmagError):
    """Exception raised when a configuration or spec field is invalid.

    Attributes
    ----------
    field: :class:`str`
        The dotted path of the offending field, e.g. ``spec.period``.
    reason: :class:`str`
        What is wrong with it.
    """
    def __init__(self, field: str, reason: str):
        self.field: str = field
        self.reason: str = reason
        super().__init__(f'{field}: {reason}')

class UnknownLevel(FreqmagError):
    """Exception raised when a pyramid level is not built by the model."""
    def __init__(self, level: Any):
        self.level: Any = level
        super().__init__(f'Unknown pyramid level {level!r}')

class ForegroundOutOfBounds(FreqmagError):
    """Exception raised when a displaced foreground leaves the canvas.

    Attributes
    ----------
    displacement: Tuple[:class:`float`, :class:`float`]
        The (dy, dx) displacement that pushed the foreground out.
    """
    def __init__(self, displacement: Tuple[float, float], canvas: Tuple[int, int]):
        self.displacement: Tuple[float, float] = displacement
        self.canvas: Tuple[int, int] = canvas
        super().__init__(
            f'Foreground displaced by {displacement} does not fit in a {canvas[0]}x{canvas[1]} canvas'
        )

class NoCorrelationPeak(FreqmagError):
    """Exception raised when phase correlation has nothing to lock on to."""
    def __init__(self):
        super().__init__('no correlation peak: images are flat')

class BackendNotInitialized(FreqmagError):
    """Exception raised when a perceptual backend is missing or cannot be built."""
    def __init__(self, detail: str = 'no perceptual backend was given'):
        super().__init__(f'Perceptual backend not initialized: {detail}')

class NonFiniteLoss(FreqmagError):
    """Exception raised when a training step produces a non-finite loss.

    Attributes
    ----------
    step: :class:`int`
        The training step that failed.
    dump_path: Optional[:class:`str`]
        Where the offending batch was written, if it could be written.
    """
    def __init__(self, step: int, terms: dict, dump_path: Optional[str]):
        self.step: int = step
        self.terms: dict = terms
        self.dump_path: Optional[str] = dump_path
        super().__init__(f'Non-finite loss at step {step} ({terms}); batch dumped to {dump_path}')

class CheckpointError(FreqmagError):
    """Exception raised when a checkpoint cannot be read."""
    def __init__(self, path: Any, reason: str):
        self.path: Any = path
        super().__init__(f'Cannot load checkpoint {path}: {reason}')

class MissingGroundTruth(FreqmagError):
    """Exception raised when a dataset directory has no ``gt`` frames."""
    def __init__(self, path: Any):
        self.path: Any = path
        super().__init__(f'Dataset {path} has no ground-truth frames')

class IndexOutOfRange(FreqmagError):
    """Exception raised when a slice index lies outside the frame."""
    def __init__(self, index: int, size: int, axis: str):
        self.index: int = index
        self.size: int = size
        super().__init__(f'{axis} index {index} is out of range for size {size}')

class InvalidSequence(FreqmagError):
    """Exception raised when a frame directory is not a readable sequence."""
    def __init__(self, path: Any, reason: str):
        self.path: Any = path
        self.reason: str = reason
        super().__init__(f'Invalid frame sequence {path}: {reason}')

class HTTPException(FreqmagError):
    """Exception raised when fetching a remote asset fails.

    Attributes
    ----------
    response: :class:`requests.Response`
        The response of the failed HTTP request.
    status: :class:`int`
        The status code of the HTTP request.
    """

    def __init__(self, response: requests.Response):
        self.response: requests.Response = response
        self.status: int = response.status_code
        super().__init__(f'{self.status} (Error: {response.reason}) for {response.url}')
