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
import json
import struct
import logging
from pathlib import Path
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch

from .config import ModelConfig, TrainConfig
from .const import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from .errors import CheckpointError, FreqmagError
from .network import MagnificationNetwork

_log = logging.getLogger(__name__)

__all__ = ('Checkpoint',)

# magic, format version, header length
_PREAMBLE = struct.Struct('<8sII')

_DTYPES: Dict[str, torch.dtype] = {
    'float16': torch.float16,
    'float32': torch.float32,
    'float64': torch.float64,
    'int32': torch.int32,
    'int64': torch.int64,
    'uint8': torch.uint8,
    'bool': torch.bool,
}

@dataclass
class Checkpoint:
    """A saved network with everything needed to resume training.

    The file is an 8-byte magic, the format version and the header length
    (little-endian u32), a UTF-8 JSON header, then the raw tensor payloads
    the header indexes, then an optional extras blob holding the optimiser
    and RNG state.

    Attributes
    ----------
    model_config: :class:`ModelConfig`
    state_dict: Dict[:class:`str`, :class:`torch.Tensor`]
    step: :class:`int`
        Number of completed training steps.
    train_config: Optional[:class:`TrainConfig`]
    optimizer_state: Optional[Dict[:class:`str`, Any]]
    rng_state: Optional[Dict[:class:`str`, Any]]
        The data sampler's :class:`numpy.random.Generator` bit generator state.
    history: List[Dict[:class:`str`, :class:`float`]]
        Per-step loss breakdowns so far.
    format_version: :class:`int`
    """

    model_config: ModelConfig
    state_dict: Dict[str, torch.Tensor]
    step: int = 0
    train_config: Optional[TrainConfig] = None
    optimizer_state: Optional[Dict[str, Any]] = None
    rng_state: Optional[Dict[str, Any]] = None
    history: List[Dict[str, float]] = field(default_factory=list)
    format_version: int = CHECKPOINT_VERSION

    @classmethod
    def from_network(cls, network: MagnificationNetwork, **kwargs: Any) -> 'Checkpoint':
        state = {k: v.detach().cpu().clone() for k, v in network.state_dict().items()}
        return cls(model_config=network.config, state_dict=state, **kwargs)

    def build_network(self, device: Union[str, torch.device] = 'cpu') -> MagnificationNetwork:
        """A network with this checkpoint's configuration and weights, in eval mode."""
        network = MagnificationNetwork(self.model_config)
        try:
            network.load_state_dict(self.state_dict)
        except RuntimeError as exc:
            raise CheckpointError('<memory>', f'weights do not fit the configuration: {exc}') from None
        return network.to(device).eval()

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        tensors = []
        payload = io.BytesIO()
        for name, tensor in self.state_dict.items():
            array = tensor.detach().cpu().contiguous().numpy()
            data = array.tobytes()
            tensors.append({
                'name': name,
                'dtype': str(array.dtype),
                'shape': list(array.shape),
                'offset': payload.tell(),
                'nbytes': len(data),
            })
            payload.write(data)

        extras = b''
        if self.optimizer_state is not None:
            buf = io.BytesIO()
            torch.save({'optimizer': self.optimizer_state}, buf)
            extras = buf.getvalue()

        header = {
            'format_version': self.format_version,
            'step': self.step,
            'model': self.model_config.to_dict(),
            'train': self.train_config.to_dict() if self.train_config is not None else None,
            'rng': self.rng_state,
            'history': self.history,
            'tensors': tensors,
            'payload_nbytes': payload.tell(),
            'extras_nbytes': len(extras),
        }
        raw_header = json.dumps(header, sort_keys=True).encode('utf-8')

        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + '.tmp')
        with open(tmp, 'wb') as f:
            f.write(_PREAMBLE.pack(CHECKPOINT_MAGIC, self.format_version, len(raw_header)))
            f.write(raw_header)
            f.write(payload.getvalue())
            f.write(extras)
        tmp.replace(path)
        _log.info(f'Saved checkpoint at step {self.step} to {path}')
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'Checkpoint':
        path = Path(path)
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise CheckpointError(path, str(exc)) from None

        if len(blob) < _PREAMBLE.size:
            raise CheckpointError(path, 'file is truncated')
        magic, version, header_len = _PREAMBLE.unpack_from(blob)
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(path, 'not a freqmag checkpoint')
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(path, f'format version {version} is not supported (expected {CHECKPOINT_VERSION})')

        start = _PREAMBLE.size
        try:
            header = json.loads(blob[start:start + header_len].decode('utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(path, f'corrupt header: {exc}') from None

        payload_start = start + header_len
        extras_start = payload_start + header['payload_nbytes']
        if len(blob) < extras_start + header['extras_nbytes']:
            raise CheckpointError(path, 'file is truncated')

        state: Dict[str, torch.Tensor] = {}
        for entry in header['tensors']:
            if entry['dtype'] not in _DTYPES:
                raise CheckpointError(path, f'unsupported dtype {entry["dtype"]}')
            begin = payload_start + entry['offset']
            array = np.frombuffer(blob, dtype=np.dtype(entry['dtype']), count=int(np.prod(entry['shape'], dtype=np.int64)), offset=begin)
            state[entry['name']] = torch.from_numpy(array.reshape(entry['shape']).copy())

        optimizer_state = None
        if header['extras_nbytes']:
            extras = torch.load(io.BytesIO(blob[extras_start:extras_start + header['extras_nbytes']]), map_location='cpu', weights_only=True)
            optimizer_state = extras.get('optimizer')

        try:
            model_config = ModelConfig.from_dict(header['model'])
            train_config = TrainConfig.from_dict(header['train']) if header.get('train') else None
        except FreqmagError as exc:
            raise CheckpointError(path, f'invalid configuration: {exc}') from None

        _log.debug(f'Loaded checkpoint {path} at step {header["step"]} with {len(state)} tensors')
        return cls(
            model_config=model_config,
            state_dict=state,
            step=int(header['step']),
            train_config=train_config,
            optimizer_state=optimizer_state,
            rng_state=header.get('rng'),
            history=list(header.get('history') or []),
            format_version=version,
        )
