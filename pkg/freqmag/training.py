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

import copy
import math
import logging
from pathlib import Path
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from .checkpoint import Checkpoint
from .config import LossConfig, ModelConfig, SynthSpec, TrainConfig
from .const import DEFAULT_ALPHAS, DEFAULT_SIGMAS
from .enums import BackendKind, Mode, Regularizer, Trajectory
from .errors import ForegroundOutOfBounds, InvalidConfig, NoCorrelationPeak, NonFiniteLoss
from .http import AssetHTTP
from .losses import total_loss
from .metrics import displacement_errors, evaluate_sequence
from .models import EvaluationCell, EvaluationGrid, LossBreakdown, MagnifyRequest, MetricReport
from .network import MagnificationNetwork, magnify_sequence
from .perceptual import PerceptualBackend, get_backend
from .synth import Scene, composite_frame, displacement_at, load_scene, synthesize_sequence

_log = logging.getLogger(__name__)

__all__ = (
    'Batch',
    'SyntheticSampler',
    'train_step',
    'Trainer',
    'fit',
    'evaluate_run',
)

class Batch(NamedTuple):
    """One training batch; ``alpha`` holds the factor each ``target`` was rendered with."""
    reference: torch.Tensor
    query: torch.Tensor
    target: torch.Tensor
    alpha: torch.Tensor

    def to(self, device: Union[str, torch.device]) -> 'Batch':
        return Batch(*(t.to(device) for t in self))

class SyntheticSampler:
    """Draws random (reference, query, magnified target, alpha) crops from synthetic scenes.

    Every sample picks a scene, a frame ``t >= 1`` and an integer alpha from
    ``config.alpha_range``, renders frame 0, frame ``t`` and frame ``t``
    magnified by that alpha, and takes the same crop from all three. All
    randomness comes from ``rng``.

    Raises
    ------
    :class:`InvalidConfig`
        The dataset is empty, the crop is larger than a scene, or the largest
        alpha would push a foreground off its canvas.
    """

    def __init__(
        self,
        specs: Sequence[SynthSpec],
        config: TrainConfig,
        rng: np.random.Generator,
        *,
        http: Optional[AssetHTTP] = None,
    ) -> None:
        if not specs:
            raise InvalidConfig('dataset', 'must contain at least one sequence')
        self.config = config
        self.rng = rng
        self.scenes: List[Tuple[SynthSpec, Scene, np.ndarray]] = []
        high = config.alpha_range[1]
        for i, spec in enumerate(specs):
            scene = load_scene(spec, http=http)
            h, w = scene.canvas
            if config.crop > min(h, w):
                raise InvalidConfig('train.crop', f'{config.crop} exceeds the {h}x{w} frames of sequence {i}')
            margin_y, margin_x = scene.margin()
            margin = min(margin_y, margin_x) if spec.trajectory is Trajectory.planar else margin_y
            if math.ceil(spec.amplitude * high) + 1 > margin:
                raise InvalidConfig(
                    'train.alpha_range',
                    f'alpha {high} moves the foreground of sequence {i} by {spec.amplitude * high:g} px '
                    f'but only {margin} px fit',
                )
            base = composite_frame(scene, 0.0)
            self.scenes.append((spec, scene, base))

    def _crop_origin(self, scene: Scene, size: int) -> Tuple[int, int]:
        # keep the crop around the foreground, jittered by up to a quarter crop
        h, w = scene.canvas
        fh, fw = scene.foreground.shape[1:]
        cy = scene.position[0] + fh // 2
        cx = scene.position[1] + fw // 2
        jitter = size // 4
        top = cy - size // 2 + int(self.rng.integers(-jitter, jitter + 1))
        left = cx - size // 2 + int(self.rng.integers(-jitter, jitter + 1))
        return int(np.clip(top, 0, h - size)), int(np.clip(left, 0, w - size))

    def sample(self, batch_size: int) -> Batch:
        size = self.config.crop
        low, high = self.config.alpha_range
        sigma = self.config.noise_sigma
        refs, queries, targets, alphas = [], [], [], []
        for _ in range(batch_size):
            spec, scene, base = self.scenes[int(self.rng.integers(len(self.scenes)))]
            t = int(self.rng.integers(1, spec.frame_count))
            alpha = int(self.rng.integers(low, high + 1))
            query = composite_frame(scene, displacement_at(spec, t))
            target = composite_frame(scene, displacement_at(spec, t, magnified=True, alpha=alpha))
            ref = base
            if sigma > 0:
                ref = np.clip(ref + self.rng.normal(0.0, sigma, ref.shape), 0.0, 1.0)
                query = np.clip(query + self.rng.normal(0.0, sigma, query.shape), 0.0, 1.0)
            top, left = self._crop_origin(scene, size)
            window = (slice(None), slice(top, top + size), slice(left, left + size))
            refs.append(ref[window])
            queries.append(query[window])
            targets.append(target[window])
            alphas.append(alpha)

        def stack(frames: List[np.ndarray]) -> torch.Tensor:
            return torch.from_numpy(np.stack(frames).astype(np.float32))

        return Batch(stack(refs), stack(queries), stack(targets), torch.tensor(alphas, dtype=torch.float32))

def _dump_batch(batch: Batch, step: int, directory: Optional[Path]) -> Optional[str]:
    path = (directory or Path.cwd()) / f'nonfinite_step_{step:06d}.pt'
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save({name: tensor.detach().cpu() for name, tensor in batch._asdict().items()}, path)
    except OSError as exc:
        _log.error(f'Could not dump the offending batch to {path}: {exc}')
        return None
    return str(path)

def train_step(
    network: MagnificationNetwork,
    optimizer: torch.optim.Optimizer,
    batch: Batch,
    loss_config: LossConfig,
    backend: Optional[PerceptualBackend],
    *,
    step: int = 0,
    dump_dir: Optional[Path] = None,
) -> LossBreakdown:
    """
    One optimiser update on the total loss of ``batch``.

    Raises
    ------
    :class:`NonFiniteLoss`
        Any loss term is NaN or infinite; the batch is saved first and no
        update is applied.
    """
    network.train()
    optimizer.zero_grad(set_to_none=True)
    pred = network(batch.reference, batch.query, batch.alpha)
    breakdown = total_loss(pred, batch.target, batch.query, backend, loss_config)
    if not breakdown.is_finite():
        terms = breakdown.as_floats()
        dump_path = _dump_batch(batch, step, dump_dir)
        _log.error(f'Non-finite loss at step {step}: {terms}')
        raise NonFiniteLoss(step, terms, dump_path)
    breakdown.total.backward()
    optimizer.step()
    return breakdown

class Trainer:
    """Owns a network, its Adam optimiser and the data RNG for one training run.

    Parameters
    ----------
    model_config: :class:`ModelConfig`
    train_config: :class:`TrainConfig`
    backend: Optional[:class:`PerceptualBackend`]
        Feature space of the regulariser; built from ``train_config.loss.backend`` when omitted.
    checkpoint_dir: Optional[Union[:class:`str`, :class:`pathlib.Path`]]
        Where periodic checkpoints and non-finite batch dumps go.
    http: Optional[:class:`AssetHTTP`]
        Client for URL assets.
    """

    def __init__(
        self,
        model_config: ModelConfig,
        train_config: TrainConfig,
        *,
        backend: Optional[PerceptualBackend] = None,
        checkpoint_dir: Optional[Union[str, Path]] = None,
        http: Optional[AssetHTTP] = None,
    ) -> None:
        self.model_config = model_config
        self.config = train_config
        self.device = torch.device(train_config.device)
        self.checkpoint_dir: Optional[Path] = Path(checkpoint_dir) if checkpoint_dir else None
        self.http = http

        torch.manual_seed(train_config.seed)
        self.network = MagnificationNetwork(model_config).to(self.device)
        self.optimizer = torch.optim.Adam(
            self.network.parameters(), lr=train_config.learning_rate, betas=train_config.betas
        )
        self.rng = np.random.default_rng(train_config.seed)
        if backend is None and train_config.loss.regularizer is not Regularizer.none:
            backend = get_backend(train_config.loss.backend)
        self.backend = backend.to(self.device) if backend is not None else None
        self.step = 0
        self.history: List[Dict[str, float]] = []

    @classmethod
    def resume(
        cls,
        checkpoint: Checkpoint,
        train_config: Optional[TrainConfig] = None,
        **kwargs,
    ) -> 'Trainer':
        """Continue a run; the data RNG, optimiser state and step counter are restored."""
        config = train_config or checkpoint.train_config or TrainConfig()
        trainer = cls(checkpoint.model_config, config, **kwargs)
        trainer.network.load_state_dict(checkpoint.state_dict)
        if checkpoint.optimizer_state is not None:
            trainer.optimizer.load_state_dict(checkpoint.optimizer_state)
        if checkpoint.rng_state is not None:
            trainer.rng.bit_generator.state = checkpoint.rng_state
        trainer.step = checkpoint.step
        trainer.history = list(checkpoint.history)
        _log.info(f'Resuming at step {trainer.step}')
        return trainer

    def checkpoint(self) -> Checkpoint:
        return Checkpoint.from_network(
            self.network,
            step=self.step,
            train_config=self.config,
            optimizer_state=copy.deepcopy(self.optimizer.state_dict()),
            rng_state=copy.deepcopy(self.rng.bit_generator.state),
            history=list(self.history),
        )

    def _save(self) -> None:
        if self.checkpoint_dir is None:
            return
        ckpt = self.checkpoint()
        ckpt.save(self.checkpoint_dir / f'step_{self.step:06d}.fqmg')
        ckpt.save(self.checkpoint_dir / 'latest.fqmg')

    def fit(self, dataset: Sequence[SynthSpec], *, until: Optional[int] = None) -> Checkpoint:
        """
        Train until ``until`` steps (``config.steps`` by default) have been completed.

        Returns
        -------
        :class:`Checkpoint`
            The state after the last step.
        """
        until = self.config.steps if until is None else until
        if self.config.crop % self.model_config.multiple:
            raise InvalidConfig('train.crop', f'must be divisible by {self.model_config.multiple} for {self.model_config.bands} bands')
        sampler = SyntheticSampler(dataset, self.config, self.rng, http=self.http)
        cfg = self.config
        if self.step >= until:
            _log.info(f'Nothing to do: already at step {self.step}')

        while self.step < until:
            batch = sampler.sample(cfg.batch_size).to(self.device)
            breakdown = train_step(
                self.network, self.optimizer, batch, cfg.loss, self.backend,
                step=self.step, dump_dir=self.checkpoint_dir,
            )
            self.step += 1
            self.history.append(breakdown.as_floats())
            if self.step % cfg.log_every == 0 or self.step == until:
                window = self.history[-cfg.log_every:]
                mean = sum(h['total'] for h in window) / len(window)
                _log.info(f'step {self.step}/{until}: loss {mean:.5f} ({breakdown.as_floats()})')
            if cfg.checkpoint_every and self.step % cfg.checkpoint_every == 0:
                self._save()

        ckpt = self.checkpoint()
        if self.checkpoint_dir is not None:
            ckpt.save(self.checkpoint_dir / 'latest.fqmg')
        return ckpt

def fit(
    model_config: ModelConfig,
    train_config: TrainConfig,
    dataset: Sequence[SynthSpec],
    **kwargs,
) -> Checkpoint:
    """Train a fresh network on ``dataset``; see :class:`Trainer`."""
    return Trainer(model_config, train_config, **kwargs).fit(dataset)

def evaluate_run(
    checkpoint: Checkpoint,
    sequences: Union[Sequence[SynthSpec], Mapping[str, SynthSpec]],
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    sigmas: Sequence[float] = DEFAULT_SIGMAS,
    *,
    backend: Optional[PerceptualBackend] = None,
    device: Union[str, torch.device] = 'cpu',
    batch_size: int = 8,
    measure_displacement: bool = False,
    checkpoint_path: Optional[str] = None,
    http: Optional[AssetHTTP] = None,
) -> EvaluationGrid:
    """
    Score static-mode magnification over an alpha x sigma grid.

    Every sequence is re-rendered at each alpha and noise level, magnified
    by the checkpoint and compared with its clean ground truth, frame 0
    excluded. The clean ``sigma = 0`` column is always evaluated. Cells whose
    ground truth would leave the canvas are kept with an explanatory status
    and no scores.
    """
    network = checkpoint.build_network(device)
    backend = backend or get_backend(BackendKind.filterbank)
    backend = backend.to(device)
    sigma_axis = [0.0] + [float(s) for s in sigmas if float(s) != 0.0]
    alpha_axis = [float(a) for a in alphas]
    if isinstance(sequences, Mapping):
        named = list(sequences.items())
    else:
        named = [(f'seq{i:03d}', spec) for i, spec in enumerate(sequences)]

    cells: List[EvaluationCell] = []
    for name, spec in named:
        scene = load_scene(spec, http=http)
        for alpha in alpha_axis:
            for sigma in sigma_axis:
                cell_spec = spec.replace(alpha=alpha, noise_sigma=sigma)
                try:
                    pair = synthesize_sequence(cell_spec, scene)
                except ForegroundOutOfBounds as exc:
                    _log.warning(f'{name} alpha={alpha:g} sigma={sigma:g} skipped: {exc}')
                    empty = MetricReport.from_scores([], [], backend.provenance)
                    cells.append(EvaluationCell(name, alpha, sigma, empty, str(exc)))
                    continue

                out = magnify_sequence(pair.input_frames, MagnifyRequest(alpha, Mode.static), network, batch_size=batch_size)
                report = evaluate_sequence(out[1:], pair.gt_frames[1:], backend, batch_size=batch_size)
                if measure_displacement:
                    expected = [displacement_at(cell_spec, t, magnified=True) for t in range(1, len(out))]
                    try:
                        report.displacement_errors = displacement_errors(out[1:], expected, reference=out[0])
                    except NoCorrelationPeak:
                        _log.warning(f'{name}: frames are flat, no displacement measured')
                cells.append(EvaluationCell(name, alpha, sigma, report, 'ok'))
                _log.info(f'{name} alpha={alpha:g} sigma={sigma:g}: SSIM {report.mean_ssim:.4f}, perceptual {report.mean_perceptual:.5f}')

    return EvaluationGrid(
        alphas=alpha_axis,
        sigmas=sigma_axis,
        cells=cells,
        backend=backend.provenance,
        checkpoint=checkpoint_path,
    )
