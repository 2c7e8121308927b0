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
from pathlib import Path
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import torch

from .enums import Level, Mode
from .errors import InvalidAlpha, UnknownLevel
from .config import SynthSpec

__all__ = (
    'FrequencyPyramid',
    'MagnifyRequest',
    'MotionField',
    'SamplePair',
    'LossBreakdown',
    'MetricReport',
    'EvaluationCell',
    'EvaluationGrid',
)

@dataclass
class FrequencyPyramid:
    """The decoupled features of one frame.

    Attributes
    ----------
    highs: Tuple[:class:`torch.Tensor`, ...]
        High-frequency details per level, shallow first. Level ``i`` has
        ``C * 2**i`` channels at ``1 / 2**(i + 1)`` of the frame size.
    low: :class:`torch.Tensor`
        Low-frequency structure of the deepest level.
    """

    __slots__ = ('highs', 'low')

    highs: Tuple[torch.Tensor, ...]
    low: torch.Tensor

    def high(self, level: Union[Level, str, int]) -> torch.Tensor:
        level = Level.coerce(level)
        if level.index >= len(self.highs):
            raise UnknownLevel(level.value)
        return self.highs[level.index]

    @property
    def h_shallow(self) -> torch.Tensor:
        return self.high(Level.shallow)

    @property
    def h_middle(self) -> torch.Tensor:
        return self.high(Level.middle)

    @property
    def h_deep(self) -> torch.Tensor:
        return self.high(Level.deep)

    @property
    def l_deep(self) -> torch.Tensor:
        return self.low

    @property
    def shapes(self) -> List[Tuple[int, ...]]:
        return [tuple(h.shape) for h in self.highs] + [tuple(self.low.shape)]

@dataclass
class MotionField:
    """The deep low-frequency difference between a query and its reference.

    Attributes
    ----------
    delta: :class:`torch.Tensor`
    """

    __slots__ = ('delta',)

    delta: torch.Tensor

    def __neg__(self) -> 'MotionField':
        return MotionField(delta=-self.delta)

@dataclass
class SamplePair:
    """A synthesised input sequence with its magnified ground truth.

    Attributes
    ----------
    input_frames: :class:`numpy.ndarray`
        (T, 3, H, W) float32 frames in [0, 1], noisy when ``SynthSpec.noise_sigma`` is set.
    gt_frames: :class:`numpy.ndarray`
        (T, 3, H, W) float32 noiseless ground-truth frames.
    spec: :class:`SynthSpec`
    """

    __slots__ = ('input_frames', 'gt_frames', 'spec')

    input_frames: np.ndarray
    gt_frames: np.ndarray
    spec: SynthSpec

    def __len__(self) -> int:
        return len(self.input_frames)

@dataclass
class LossBreakdown:
    """The terms of one total loss evaluation.

    Attributes
    ----------
    total: :class:`torch.Tensor`
        ``mag + edge + weight * regularizer``.
    mag: :class:`torch.Tensor`
    edge: :class:`torch.Tensor`
    regularizer: :class:`torch.Tensor`
    weight: :class:`float`
    """

    __slots__ = ('total', 'mag', 'edge', 'regularizer', 'weight')

    total: torch.Tensor
    mag: torch.Tensor
    edge: torch.Tensor
    regularizer: torch.Tensor
    weight: float

    def as_floats(self) -> Dict[str, float]:
        return {
            'total': float(self.total),
            'mag': float(self.mag),
            'edge': float(self.edge),
            'regularizer': float(self.regularizer),
        }

    def is_finite(self) -> bool:
        return all(bool(torch.isfinite(t).all()) for t in (self.total, self.mag, self.edge, self.regularizer))

@dataclass
class MetricReport:
    """Full-reference scores of a magnified sequence against its ground truth.

    Attributes
    ----------
    ssim: List[:class:`float`]
        Per-frame SSIM.
    mean_ssim: :class:`float`
    perceptual: List[:class:`float`]
        Per-frame perceptual distance.
    mean_perceptual: :class:`float`
    backend: Dict[:class:`str`, :class:`str`]
        Provenance of the perceptual numbers.
    displacement_errors: Optional[List[:class:`float`]]
        Per-frame error of the estimated displacement, when measured.
    external_scores: Dict[:class:`str`, :class:`float`]
        Scores computed outside this package, e.g. a no-reference assessor.
    """

    __slots__ = (
        'ssim', 'mean_ssim', 'perceptual', 'mean_perceptual',
        'backend', 'displacement_errors', 'external_scores',
    )

    ssim: List[float]
    mean_ssim: float
    perceptual: List[float]
    mean_perceptual: float
    backend: Dict[str, str]
    displacement_errors: Optional[List[float]]
    external_scores: Dict[str, float]

    @classmethod
    def from_scores(
        cls,
        ssim: List[float],
        perceptual: List[float],
        backend: Dict[str, str],
        displacement_errors: Optional[List[float]] = None,
    ) -> 'MetricReport':
        return cls(
            ssim=list(ssim),
            mean_ssim=float(np.mean(ssim)) if ssim else float('nan'),
            perceptual=list(perceptual),
            mean_perceptual=float(np.mean(perceptual)) if perceptual else float('nan'),
            backend=dict(backend),
            displacement_errors=displacement_errors,
            external_scores={},
        )

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.__slots__}

@dataclass
class EvaluationCell:
    """One (sequence, alpha, sigma) cell of an evaluation grid.

    ``status`` is ``ok``, or why the cell could not be rendered (its scores are then empty).
    """

    __slots__ = ('sequence', 'alpha', 'sigma', 'report', 'status')

    sequence: str
    alpha: float
    sigma: float
    report: MetricReport
    status: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sequence': self.sequence,
            'alpha': self.alpha,
            'sigma': self.sigma,
            'status': self.status,
            **self.report.to_dict(),
        }

@dataclass
class EvaluationGrid:
    """Scores over the alpha x sigma grid for every evaluated sequence.

    Attributes
    ----------
    alphas: List[:class:`float`]
    sigmas: List[:class:`float`]
        Always starts with the clean ``0.0`` column.
    cells: List[:class:`EvaluationCell`]
    backend: Dict[:class:`str`, :class:`str`]
    checkpoint: Optional[:class:`str`]
    """

    __slots__ = ('alphas', 'sigmas', 'cells', 'backend', 'checkpoint')

    alphas: List[float]
    sigmas: List[float]
    cells: List[EvaluationCell]
    backend: Dict[str, str]
    checkpoint: Optional[str]

    def cell(self, sequence: str, alpha: float, sigma: float) -> EvaluationCell:
        for c in self.cells:
            if c.sequence == sequence and c.alpha == alpha and c.sigma == sigma:
                return c
        raise KeyError((sequence, alpha, sigma))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alphas': self.alphas,
            'sigmas': self.sigmas,
            'backend': self.backend,
            'checkpoint': self.checkpoint,
            'cells': [c.to_dict() for c in self.cells],
        }

    def save(self, path: Union[str, Path]) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2)

@dataclass
class MagnifyRequest:
    """How to magnify a sequence.

    Attributes
    ----------
    alpha: :class:`float`
        Magnification factor, finite and >= 0.
    mode: :class:`Mode`
        Static pairs every frame with frame 0, dynamic with its predecessor.
    """

    __slots__ = ('alpha', 'mode')

    alpha: float
    mode: Mode

    def __post_init__(self) -> None:
        try:
            alpha = float(self.alpha)
        except (TypeError, ValueError):
            raise InvalidAlpha(self.alpha) from None
        if not math.isfinite(alpha) or alpha < 0:
            raise InvalidAlpha(self.alpha)
        self.alpha = alpha
        self.mode = Mode(self.mode)
