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

import sys
import json
import logging
import argparse
import platform
import importlib.metadata
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import torch

import freqmag
from .checkpoint import Checkpoint
from .config import ModelConfig, SynthSpec, TrainConfig, load_json
from .const import DEFAULT_ALPHAS, DEFAULT_SIGMAS, SPEC_NAME
from .enums import Axis, BackendKind, Mode
from .errors import FreqmagError, InvalidConfig, MissingGroundTruth
from .frames import read_frames, spatiotemporal_slice, write_frames, write_image
from .models import MagnifyRequest
from .network import MagnificationNetwork, magnify_sequence
from .utils import count_parameters
from .perceptual import get_backend
from .synth import save_dataset, synthesize_sequence
from .training import Trainer, evaluate_run

_log = logging.getLogger(__name__)

__all__ = ('build_parser', 'main')

# run-config keys read by ``eval``
EVAL_KEYS = ('alpha', 'sigma', 'backend', 'displacement')

def merge_flags(section: str, values: Dict[str, Any], flags: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Overlay command-line ``flags`` on config-file ``values``.

    A flag left unset (``None``) is ignored. Where a flag and the file
    disagree, the file wins and a warning names the field.
    """
    merged = dict(values)
    for key, flag in flags.items():
        if flag is None:
            continue
        if key in values and values[key] != flag:
            _log.warning(f'{section}.{key}: config file value {values[key]!r} overrides flag value {flag!r}')
            continue
        merged[key] = flag
    return merged

def _dataset_spec(path: Path) -> SynthSpec:
    # a dataset directory or a bare spec file
    if path.is_dir():
        if not (path / SPEC_NAME).is_file():
            raise InvalidConfig(str(path / SPEC_NAME), 'missing dataset spec')
        return SynthSpec.from_dict(load_json(path / SPEC_NAME))
    return SynthSpec.from_dict(load_json(path))

def show_version() -> None:
    entries = []

    entries.append('- Python v{0.major}.{0.minor}.{0.micro}-{0.releaselevel}'.format(sys.version_info))
    version_info = freqmag.version_info
    entries.append('- freqmag v{0.major}.{0.minor}.{0.micro}-{0.releaselevel}'.format(version_info))
    if version_info.releaselevel != 'final':
        try:
            entries.append(f'    - freqmag metadata: v{importlib.metadata.version("freqmag")}')
        except importlib.metadata.PackageNotFoundError:
            pass

    entries.append(f'- torch v{torch.__version__}')
    entries.append(f'- numpy v{np.__version__}')
    uname = platform.uname()
    entries.append('- system info: {0.system} {0.release} {0.version}'.format(uname))
    print('\n'.join(entries))

def cmd_synth(args: argparse.Namespace) -> int:
    values = load_json(args.spec)
    values = merge_flags('spec', values, {'alpha': args.alpha, 'noise_sigma': args.sigma, 'seed': args.seed})
    spec = SynthSpec.from_dict(values)
    pair = synthesize_sequence(spec)
    out = save_dataset(pair, args.output)
    print(out)
    return 0

def cmd_train(args: argparse.Namespace) -> int:
    values = load_json(args.config) if args.config else {}
    unknown = set(values) - {'model', 'loss', 'train', 'seed', 'checkpoint'}
    if unknown:
        raise InvalidConfig(sorted(unknown)[0], 'unknown key, expected model, loss, train, seed or checkpoint')

    train_section = dict(values.get('train', {}))
    if 'loss' in values:
        if 'loss' in train_section:
            raise InvalidConfig('loss', 'given both at top level and in the train section')
        train_section['loss'] = values['loss']
    if 'seed' in values:
        train_section.setdefault('seed', values['seed'])
    resume = merge_flags('run', {'checkpoint': values['checkpoint']} if 'checkpoint' in values else {}, {'checkpoint': args.checkpoint})

    train_values = merge_flags('train', train_section, {
        'steps': args.steps,
        'seed': args.seed,
        'learning_rate': args.lr,
        'batch_size': args.batch_size,
        'crop': args.crop,
        'device': args.device,
    })
    train_config = TrainConfig.from_dict(train_values)
    dataset = [_dataset_spec(Path(p)) for p in args.dataset]

    if resume.get('checkpoint'):
        trainer = Trainer.resume(Checkpoint.load(resume['checkpoint']), train_config, checkpoint_dir=args.checkpoint_dir)
    else:
        model_config = ModelConfig.from_dict(values.get('model', {}))
        trainer = Trainer(model_config, train_config, checkpoint_dir=args.checkpoint_dir)

    ckpt = trainer.fit(dataset)
    ckpt.save(args.output)
    print(args.output)
    return 0

def cmd_magnify(args: argparse.Namespace) -> int:
    values = load_json(args.config) if args.config else {}
    values = merge_flags('magnify', values, {'alpha': args.alpha, 'mode': args.mode})
    if 'alpha' not in values:
        raise InvalidConfig('magnify.alpha', 'is required')
    request = MagnifyRequest(alpha=values['alpha'], mode=values.get('mode', Mode.static.value))

    network = Checkpoint.load(args.checkpoint).build_network(args.device)
    frames, fps = read_frames(args.frames)
    out = magnify_sequence(frames, request, network, batch_size=args.batch_size)
    write_frames(out, args.output, fps=fps)
    print(args.output)
    return 0

def _as_list(key: str, value: Any) -> List[float]:
    values = value if isinstance(value, (list, tuple)) else [value]
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise InvalidConfig(f'eval.{key}', f'expected a number or a list of numbers, got {value!r}') from None

def cmd_eval(args: argparse.Namespace) -> int:
    values = load_json(args.config) if args.config else {}
    unknown = set(values) - set(EVAL_KEYS)
    if unknown:
        raise InvalidConfig(f'eval.{sorted(unknown)[0]}', f'unknown key, expected one of: {", ".join(EVAL_KEYS)}')
    values = merge_flags('eval', values, {
        'alpha': args.alpha,
        'sigma': args.sigma,
        'backend': args.backend,
        'displacement': args.displacement,
    })

    sequences: Dict[str, SynthSpec] = {}
    for directory in map(Path, args.dataset):
        if not (directory / 'gt').is_dir():
            raise MissingGroundTruth(directory)
        sequences[directory.name] = _dataset_spec(directory)

    checkpoint = Checkpoint.load(args.checkpoint)
    backend = get_backend(values.get('backend', BackendKind.filterbank.value))
    grid = evaluate_run(
        checkpoint,
        sequences,
        alphas=_as_list('alpha', values['alpha']) if values.get('alpha') else DEFAULT_ALPHAS,
        sigmas=_as_list('sigma', values['sigma']) if 'sigma' in values else DEFAULT_SIGMAS,
        backend=backend,
        device=args.device,
        batch_size=args.batch_size,
        measure_displacement=bool(values.get('displacement', False)),
        checkpoint_path=str(args.checkpoint),
    )
    grid.save(args.output)
    print(args.output)
    return 0

def cmd_slice(args: argparse.Namespace) -> int:
    frames, _ = read_frames(args.frames)
    image = spatiotemporal_slice(frames, args.axis, args.index)
    write_image(image, args.output)
    print(args.output)
    return 0

def cmd_info(args: argparse.Namespace) -> int:
    if args.checkpoint:
        config = Checkpoint.load(args.checkpoint).model_config
    elif args.config:
        config = ModelConfig.from_dict(load_json(args.config).get('model', {}))
    else:
        config = ModelConfig()
    network = MagnificationNetwork(config)
    if args.flops or args.runs:
        info = network.summary(args.height, args.width, runs=args.runs, warmup=args.warmup)
    else:
        info = {'config': config.to_dict(), 'parameters': count_parameters(network)}
    print(json.dumps(info, indent=2))
    return 0

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='freqmag', description='Frequency-decoupled video motion magnification.')
    parser.add_argument('--version', help='Show freqmag version info.', action='store_true')
    parser.add_argument('-v', '--verbose', help='Log debug messages.', action='store_true')
    sub = parser.add_subparsers(dest='command', metavar='command')

    synth = sub.add_parser('synth', help='Render a synthetic dataset from a spec file')
    synth.add_argument('spec', help='SynthSpec JSON file')
    synth.add_argument('-o', '--output', required=True, help='Dataset directory to write')
    synth.add_argument('--alpha', type=float, help='Ground-truth magnification factor')
    synth.add_argument('--sigma', type=float, help='Input noise standard deviation')
    synth.add_argument('--seed', type=int)
    synth.set_defaults(func=cmd_synth)

    train = sub.add_parser('train', help='Train on synthetic datasets or spec files')
    train.add_argument('dataset', nargs='+', help='Dataset directories or SynthSpec JSON files')
    train.add_argument('-o', '--output', required=True, help='Final checkpoint path')
    train.add_argument('--config', help='JSON file with "model" and "train" sections')
    train.add_argument('--checkpoint', help='Resume from this checkpoint')
    train.add_argument('--checkpoint-dir', help='Directory for periodic checkpoints')
    train.add_argument('--steps', type=int)
    train.add_argument('--seed', type=int)
    train.add_argument('--lr', type=float)
    train.add_argument('--batch-size', type=int)
    train.add_argument('--crop', type=int)
    train.add_argument('--device')
    train.set_defaults(func=cmd_train)

    magnify = sub.add_parser('magnify', help='Magnify a frame directory')
    magnify.add_argument('frames', help='Directory of %%06d.png frames')
    magnify.add_argument('-o', '--output', required=True, help='Directory for magnified frames')
    magnify.add_argument('--checkpoint', required=True)
    magnify.add_argument('--alpha', type=float)
    magnify.add_argument('--mode', choices=[m.value for m in Mode])
    magnify.add_argument('--config', help='JSON file with "alpha" and "mode"')
    magnify.add_argument('--batch-size', type=int, default=8)
    magnify.add_argument('--device', default='cpu')
    magnify.set_defaults(func=cmd_magnify)

    evaluate = sub.add_parser('eval', help='Score a checkpoint over an alpha x sigma grid')
    evaluate.add_argument('dataset', nargs='+', help='Dataset directories with gt/ frames')
    evaluate.add_argument('-o', '--output', required=True, help='Report JSON path')
    evaluate.add_argument('--checkpoint', required=True)
    evaluate.add_argument('--alpha', type=float, nargs='+')
    evaluate.add_argument('--sigma', type=float, nargs='*')
    evaluate.add_argument('--backend', choices=[BackendKind.filterbank.value, BackendKind.vgg19.value], help='Feature space, filterbank by default')
    evaluate.add_argument('--displacement', action='store_true', default=None, help='Also measure displacement errors')
    evaluate.add_argument('--config', help='JSON file with "alpha", "sigma", "backend" and "displacement"')
    evaluate.add_argument('--batch-size', type=int, default=8)
    evaluate.add_argument('--device', default='cpu')
    evaluate.set_defaults(func=cmd_eval)

    slice_ = sub.add_parser('slice', help='Write a spatiotemporal slice of a frame directory')
    slice_.add_argument('frames')
    slice_.add_argument('-o', '--output', required=True, help='PNG path')
    slice_.add_argument('--axis', choices=[a.value for a in Axis], default=Axis.row.value)
    slice_.add_argument('--index', type=int, required=True)
    slice_.set_defaults(func=cmd_slice)

    info = sub.add_parser('info', help='Print parameter, FLOP and timing figures of a model')
    info.add_argument('--config')
    info.add_argument('--checkpoint')
    info.add_argument('--flops', action='store_true')
    info.add_argument('--height', type=int, default=640)
    info.add_argument('--width', type=int, default=640)
    info.add_argument('--runs', type=int, default=0, help='Also report the mean forward time over this many passes')
    info.add_argument('--warmup', type=int, default=2, help='Untimed passes before --runs')
    info.set_defaults(func=cmd_info)

    return parser

def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    if args.version:
        show_version()
        return 0
    if args.command is None:
        parser.print_help()
        return 1

    try:
        return args.func(args)
    except FreqmagError as exc:
        print(json.dumps({'error': type(exc).__name__, 'message': str(exc)}), file=sys.stderr)
        return 2
