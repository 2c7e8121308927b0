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

from enum import Enum
from typing import List, Union

from .errors import UnknownLevel

__all__ = (
    'Level',
    'PoolMode',
    'Mode',
    'AttentionKind',
    'EdgeOperator',
    'Regularizer',
    'BackendKind',
    'Axis',
    'Trajectory',
)

class Level(Enum):
    """An enum representing the pyramid levels, shallow to deep."""

    shallow = "shallow"
    middle = "middle"
    deep = "deep"
    extra = "extra"

    @classmethod
    def ladder(cls, bands: int) -> List["Level"]:
        """
        The levels built by a model with ``bands`` levels, shallow first.

        Parameters
        ----------
        bands: :py:class:`int`
            The number of frequency bands, 1 to 4.

        Returns
        -------
        List[:py:class:`Level`]
        """
        members = list(cls)
        if not 1 <= bands <= len(members):
            raise UnknownLevel(bands)
        return members[:bands]

    @classmethod
    def coerce(cls, value: Union[str, int, "Level"]) -> "Level":
        """Accept a :class:`Level`, its name, or its index in the ladder."""
        if isinstance(value, Level):
            return value
        if isinstance(value, int):
            members = list(cls)
            if 0 <= value < len(members):
                return members[value]
            raise UnknownLevel(value)
        try:
            return cls(value)
        except ValueError:
            raise UnknownLevel(value) from None

    @property
    def index(self) -> int:
        return list(Level).index(self)

class PoolMode(Enum):
    """Query pooling of a sparse filter: average (low-pass) or max (high-pass)."""

    low = "low"
    high = "high"

class Mode(Enum):
    """Inference pairing: (frame 0, frame t) or (frame t-1, frame t)."""

    static = "static"
    dynamic = "dynamic"

class AttentionKind(Enum):
    """Normalisation of the channel attention matrix."""

    sparse = "sparse"
    softmax = "softmax"

class EdgeOperator(Enum):
    """Edge map used by the edge loss."""

    log = "log"
    sobel = "sobel"
    none = "none"

class Regularizer(Enum):
    """The weighted regularisation term of the total loss."""

    contrastive = "contrastive"
    perceptual = "perceptual"
    none = "none"

class BackendKind(Enum):
    """An enum representing the available perceptual backends."""

    filterbank = "filterbank"
    vgg19 = "vgg19"
    module = "module"

class Axis(Enum):
    """Spatiotemporal slice orientation."""

    row = "row"
    col = "col"

class Trajectory(Enum):
    """Synthetic foreground trajectory."""

    vertical = "vertical"
    planar = "planar"
