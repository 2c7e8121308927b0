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
import dataclasses
from enum import Enum
from pathlib import Path
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple, Type, TypeVar, Union

from .errors import InvalidConfig
from .const import CHARBONNIER_EPS, CONTRASTIVE_WEIGHT
from .enums import AttentionKind, BackendKind, EdgeOperator, Regularizer, Trajectory

_log = logging.getLogger(__name__)

T = TypeVar('T')
E = TypeVar('E', bound=Enum)

__all__ = (
    'ModelConfig',
    'LossConfig',
    'TrainConfig',
    'SynthSpec',
    'load_json',
)

def _fail(name: str, reason: str) -> None:
    raise InvalidConfig(name, reason)

def _coerce(value: Any, annotation: Any) -> Any:
    # Field annotations are strings under ``from __future__ import annotations``.
    if isinstance(annotation, str) and annotation.startswith(('Tuple', 'Optional[Tuple')) and isinstance(value, list):
        return tuple(value)
    return value

def _enum(name: str, enum_type: Type[E], value: Any) -> E:
    try:
        return enum_type(value)
    except ValueError:
        choices = ', '.join(m.value for m in enum_type)  # type: ignore
        raise InvalidConfig(name, f'{value!r} is not one of: {choices}') from None

def _from_dict(cls: Type[T], data: Mapping[str, Any], path: str, nested: Optional[Dict[str, Type[Any]]] = None) -> T:
    if not isinstance(data, Mapping):
        raise InvalidConfig(path, f'expected an object, got {type(data).__name__}')

    nested = nested or {}
    fields = {f.name: f for f in dataclasses.fields(cls) if f.init}  # type: ignore
    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        if key not in fields:
            raise InvalidConfig(f'{path}.{key}', 'unknown field')
        if key in nested:
            kwargs[key] = nested[key].from_dict(value, path=f'{path}.{key}')  # type: ignore
            continue
        kwargs[key] = _coerce(value, fields[key].type)

    try:
        return cls(**kwargs)
    except InvalidConfig as exc:
        raise InvalidConfig(f'{path}.{exc.field}', exc.reason) from None
    except TypeError as exc:
        raise InvalidConfig(path, str(exc)) from None

def _to_dict(obj: Any) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for f in dataclasses.fields(obj):
        if not f.init:
            continue
        value = getattr(obj, f.name)
        if dataclasses.is_dataclass(value):
            value = _to_dict(value)
        elif isinstance(value, Enum):
            value = value.value
        elif isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out

def load_json(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a UTF-8 JSON object from ``path``."""
    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(str(path), f'not valid JSON ({exc.msg} at line {exc.lineno})') from exc
    except OSError as exc:
        raise InvalidConfig(str(path), f'cannot be read ({exc.strerror or exc})') from exc
    if not isinstance(data, dict):
        raise InvalidConfig(str(path), 'top level must be a JSON object')
    _log.debug(f'Loaded config {path}: {sorted(data)}')
    return data

@dataclass
class ModelConfig:
    """Architectural hyperparameters of the magnification network.

    Attributes
    ----------
    base_channels: :class:`int`
        Channel width ``C`` of the shallow level; level ``i`` has ``C * 2**i``.
    dilation: :class:`int`
        Dilation rate of the frequency decoupling convolution.
    bands: :class:`int`
        Number of pyramid levels, 1 to 4.
    high_pass_layers: Tuple[:class:`int`, ...]
        Sparse high-pass filter depth per level, shallow to deep.
    heads: Tuple[:class:`int`, ...]
        Attention heads per level, shared by the high-pass filters and the mixers.
    mixer_layers: Tuple[:class:`int`, ...]
        Frequency mixer depth per level, shallow to deep.
    low_pass_layers: :class:`int`
        Sparse low-pass filter depth on the motion field.
    low_pass_heads: :class:`int`
        Attention heads of the low-pass filter.
    ffn_expansion: :class:`int`
        Hidden width ratio of the convolutional feed-forward network.
    attention: :class:`AttentionKind`
        ReLU-sparse or softmax attention.
    use_low_pass: :class:`bool`
    use_high_pass: :class:`bool`
    use_mixer: :class:`bool`
        Component switches; a disabled filter is the identity and a disabled
        mixer keeps only its concat-compress convolution.
    """

    base_channels: int = 24
    dilation: int = 2
    bands: int = 3
    high_pass_layers: Tuple[int, ...] = (2, 4, 4)
    heads: Tuple[int, ...] = (4, 4, 8)
    mixer_layers: Tuple[int, ...] = (6, 4, 4)
    low_pass_layers: int = 4
    low_pass_heads: int = 8
    ffn_expansion: int = 2
    attention: AttentionKind = AttentionKind.sparse
    use_low_pass: bool = True
    use_high_pass: bool = True
    use_mixer: bool = True

    def __post_init__(self) -> None:
        if self.base_channels <= 0:
            _fail('base_channels', 'must be > 0')
        if self.dilation < 1:
            _fail('dilation', 'must be >= 1')
        if not 1 <= self.bands <= 4:
            _fail('bands', 'must be between 1 and 4')
        if self.ffn_expansion < 1:
            _fail('ffn_expansion', 'must be >= 1')
        for name in ('high_pass_layers', 'heads', 'mixer_layers'):
            values = tuple(getattr(self, name))
            setattr(self, name, values)
            if len(values) != self.bands:
                _fail(name, f'needs one entry per band ({self.bands}), got {len(values)}')
            if any(v < 0 for v in values):
                _fail(name, 'entries must be >= 0')
        if any(h < 1 for h in self.heads):
            _fail('heads', 'entries must be >= 1')
        for i, (width, h) in enumerate(zip(self.widths, self.heads)):
            if width % h:
                _fail('heads', f'level {i} width {width} is not divisible by {h} heads')
        if self.low_pass_layers < 0:
            _fail('low_pass_layers', 'must be >= 0')
        if self.low_pass_heads < 1 or self.widths[-1] % self.low_pass_heads:
            _fail('low_pass_heads', f'deep width {self.widths[-1]} is not divisible by {self.low_pass_heads} heads')
        self.attention = _enum('attention', AttentionKind, self.attention)

    @property
    def widths(self) -> Tuple[int, ...]:
        return tuple(self.base_channels * 2 ** i for i in range(self.bands))

    @property
    def multiple(self) -> int:
        """Frame height and width must be divisible by this."""
        return max(8, 2 ** self.bands)

    def with_bands(self, bands: int) -> 'ModelConfig':
        """A copy with ``bands`` levels; per-level tuples are truncated or extended with their last entry."""

        def fit(values: Tuple[int, ...]) -> Tuple[int, ...]:
            if bands <= len(values):
                return tuple(values[:bands])
            return tuple(values) + (values[-1],) * (bands - len(values))

        heads = fit(self.heads)
        return dataclasses.replace(
            self,
            bands=bands,
            high_pass_layers=fit(self.high_pass_layers),
            heads=heads,
            mixer_layers=fit(self.mixer_layers),
            low_pass_heads=heads[-1],
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, path: str = 'model') -> 'ModelConfig':
        return _from_dict(cls, data, path)

    def to_dict(self) -> Dict[str, Any]:
        return _to_dict(self)

@dataclass
class LossConfig:
    """Loss weights and operators.

    Attributes
    ----------
    epsilon: :class:`float`
        Charbonnier constant.
    weight: :class:`float`
        Weight of the regularisation term.
    log_sigma: :class:`float`
        Gaussian standard deviation of the LoG kernel.
    log_kernel: :class:`int`
        Odd LoG kernel size.
    edge: :class:`EdgeOperator`
    regularizer: :class:`Regularizer`
    backend: :class:`BackendKind`
        Perceptual feature space of the regulariser.
    """

    epsilon: float = CHARBONNIER_EPS
    weight: float = CONTRASTIVE_WEIGHT
    log_sigma: float = 1.0
    log_kernel: int = 7
    edge: EdgeOperator = EdgeOperator.log
    regularizer: Regularizer = Regularizer.contrastive
    backend: BackendKind = BackendKind.filterbank

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            _fail('epsilon', 'must be > 0')
        if not self.weight >= 0:
            _fail('weight', 'must be >= 0')
        if not self.log_sigma > 0:
            _fail('log_sigma', 'must be > 0')
        if self.log_kernel < 3 or self.log_kernel % 2 == 0:
            _fail('log_kernel', 'must be an odd integer >= 3')
        self.edge = _enum('edge', EdgeOperator, self.edge)
        self.regularizer = _enum('regularizer', Regularizer, self.regularizer)
        self.backend = _enum('backend', BackendKind, self.backend)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, path: str = 'loss') -> 'LossConfig':
        return _from_dict(cls, data, path)

    def to_dict(self) -> Dict[str, Any]:
        return _to_dict(self)

@dataclass
class TrainConfig:
    """Optimisation settings.

    Attributes
    ----------
    learning_rate: :class:`float`
    betas: Tuple[:class:`float`, :class:`float`]
        Adam moment decay rates.
    steps: :class:`int`
    batch_size: :class:`int`
    crop: :class:`int`
        Square crop size; must be divisible by 8.
    alpha_range: Tuple[:class:`int`, :class:`int`]
        Inclusive integer range the per-sample magnification factor is drawn from.
    noise_sigma: :class:`float`
        Gaussian noise added to the reference and query frames of each sample.
    seed: :class:`int`
    log_every: :class:`int`
    checkpoint_every: :class:`int`
        Save a checkpoint every this many steps, 0 to disable.
    device: :class:`str`
    loss: :class:`LossConfig`
    """

    learning_rate: float = 1e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    steps: int = 2000
    batch_size: int = 4
    crop: int = 64
    alpha_range: Tuple[int, int] = (1, 20)
    noise_sigma: float = 0.0
    seed: int = 0
    log_every: int = 50
    checkpoint_every: int = 0
    device: str = 'cpu'
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            _fail('learning_rate', 'must be > 0')
        self.betas = tuple(self.betas)  # type: ignore
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            _fail('betas', 'must be two values in [0, 1)')
        if self.steps < 0:
            _fail('steps', 'must be >= 0')
        if self.batch_size < 1:
            _fail('batch_size', 'must be >= 1')
        if self.crop <= 0 or self.crop % 8:
            _fail('crop', 'must be a positive multiple of 8')
        self.alpha_range = tuple(self.alpha_range)  # type: ignore
        if len(self.alpha_range) != 2 or not 0 <= self.alpha_range[0] <= self.alpha_range[1]:
            _fail('alpha_range', 'must be [low, high] with 0 <= low <= high')
        if not self.noise_sigma >= 0:
            _fail('noise_sigma', 'must be >= 0')
        if self.log_every < 1:
            _fail('log_every', 'must be >= 1')
        if self.checkpoint_every < 0:
            _fail('checkpoint_every', 'must be >= 0')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, path: str = 'train') -> 'TrainConfig':
        return _from_dict(cls, data, path, nested={'loss': LossConfig})

    def to_dict(self) -> Dict[str, Any]:
        return _to_dict(self)

@dataclass
class SynthSpec:
    """A synthetic sequence recipe.

    The foreground moves along ``amplitude * sin(2 pi t / period)`` pixels in
    the input sequence and ``alpha`` times that in the ground truth.

    Attributes
    ----------
    foreground: :class:`str`
        ``builtin:<name>``, a path to an RGBA image, or an http(s) URL.
    background: :class:`str`
        ``builtin:<name>``, a path to an RGB image, or an http(s) URL.
    resolution: Tuple[:class:`int`, :class:`int`]
        Output (height, width).
    foreground_size: :class:`int`
        Edge length of built-in foregrounds.
    position: Optional[Tuple[:class:`int`, :class:`int`]]
        Top-left corner of the foreground at zero displacement; centred when omitted.
    period: :class:`int`
        Harmonic period in frames.
    frame_count: :class:`int`
    fps: :class:`int`
    alpha: :class:`float`
        Magnification factor of the ground truth.
    amplitude: :class:`float`
        Input motion amplitude in pixels.
    noise_sigma: :class:`float`
        Gaussian noise standard deviation of the input frames.
    seed: :class:`int`
    trajectory: :class:`Trajectory`
        Vertical motion only, or the same profile on both axes.
    """

    foreground: str = 'builtin:disk'
    background: str = 'builtin:texture'
    resolution: Tuple[int, int] = (128, 128)
    foreground_size: int = 32
    position: Optional[Tuple[int, int]] = None
    period: int = 60
    frame_count: int = 60
    fps: int = 30
    alpha: float = 10.0
    amplitude: float = 2.0
    noise_sigma: float = 0.0
    seed: int = 0
    trajectory: Trajectory = Trajectory.vertical

    def __post_init__(self) -> None:
        self.resolution = tuple(self.resolution)  # type: ignore
        if len(self.resolution) != 2 or min(self.resolution) <= 0:
            _fail('resolution', 'must be two positive integers')
        if self.position is not None:
            self.position = tuple(self.position)  # type: ignore
            if len(self.position) != 2:  # type: ignore
                _fail('position', 'must be [row, col]')
        if self.foreground_size <= 0:
            _fail('foreground_size', 'must be > 0')
        if self.period <= 0:
            _fail('period', 'must be > 0')
        if self.frame_count < 2:
            _fail('frame_count', 'must be >= 2')
        if self.fps <= 0:
            _fail('fps', 'must be > 0')
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            _fail('alpha', 'must be finite and >= 0')
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            _fail('amplitude', 'must be finite and >= 0')
        if not self.noise_sigma >= 0:
            _fail('noise_sigma', 'must be >= 0')
        self.trajectory = _enum('trajectory', Trajectory, self.trajectory)

    def replace(self, **changes: Any) -> 'SynthSpec':
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, path: str = 'spec') -> 'SynthSpec':
        return _from_dict(cls, data, path)

    def to_dict(self) -> Dict[str, Any]:
        return _to_dict(self)
