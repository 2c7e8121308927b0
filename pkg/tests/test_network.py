import logging

import numpy as np
import pytest
import torch
import torch.nn as nn

from freqmag import (
    AttentionKind,
    InvalidAlpha,
    InvalidConfig,
    InvalidFrame,
    Level,
    LossConfig,
    MagnificationNetwork,
    MagnifyRequest,
    ModelConfig,
    ShapeMismatch,
    UnknownLevel,
    forward_magnify,
    magnify_sequence,
)
from freqmag.losses import total_loss
from freqmag.network import Magnifier, subpixel_shuffle
from freqmag.perceptual import FilterBankBackend
from freqmag.utils import count_parameters, time_forward

def test_default_parameter_budget():
    assert 1_100_000 <= count_parameters(MagnificationNetwork()) <= 1_840_000

@pytest.mark.parametrize("bands", [1, 2, 3, 4])
def test_band_counts_run(bands):
    network = MagnificationNetwork(ModelConfig(base_channels=4).with_bands(bands))
    assert network.levels == Level.ladder(bands)
    out = network(torch.rand(2, 3, 32, 32), torch.rand(2, 3, 32, 32), 10.0)
    assert out.shape == (2, 3, 32, 32)

def test_single_frame_forward(tiny_config):
    network = MagnificationNetwork(tiny_config)
    assert network(torch.rand(3, 16, 16), torch.rand(3, 16, 16), 2.0).shape == (3, 16, 16)

def test_per_sample_alpha(tiny_config):
    network = MagnificationNetwork(tiny_config)
    ref = torch.rand(2, 3, 16, 16)
    query = torch.rand(2, 3, 16, 16)
    both = network(ref, query, [1.0, 20.0])
    assert torch.allclose(both[1], network(ref[1:], query[1:], 20.0)[0], atol=1e-5)
    with pytest.raises(ShapeMismatch):
        network(ref, query, [1.0, 2.0, 3.0])

@pytest.mark.parametrize("alpha", [-1.0, float('nan'), float('inf')])
def test_rejects_alpha(tiny_config, alpha):
    network = MagnificationNetwork(tiny_config)
    with pytest.raises(InvalidAlpha):
        network(torch.rand(1, 3, 16, 16), torch.rand(1, 3, 16, 16), alpha)

def test_rejects_mismatched_frames(tiny_config):
    network = MagnificationNetwork(tiny_config)
    with pytest.raises(ShapeMismatch):
        network(torch.rand(1, 3, 16, 16), torch.rand(1, 3, 24, 16), 1.0)

def test_zero_magnifier_passes_low_band():
    magnifier = Magnifier(8)
    with torch.no_grad():
        magnifier.inner.weight.zero_()
        magnifier.outer.weight.zero_()
    low = torch.randn(2, 8, 4, 4)
    assert torch.equal(magnifier(low, torch.randn(2, 8, 4, 4), 50.0), low)

def test_magnifier_ignores_alpha_without_motion_branch():
    magnifier = Magnifier(8)
    with torch.no_grad():
        magnifier.inner.weight.zero_()
        magnifier.inner.bias.zero_()
        magnifier.outer.bias.fill_(0.3)
    low = torch.randn(2, 8, 4, 4)
    delta = torch.randn(2, 8, 4, 4)
    alpha = torch.tensor([3.0, 40.0], requires_grad=True)
    out = magnifier(low, delta, alpha)
    out.sum().backward()
    assert torch.count_nonzero(alpha.grad) == 0
    assert torch.equal(out.detach(), magnifier(low, delta, 1.0).detach())

def test_magnifier_skip_is_exact():
    magnifier = Magnifier(8)
    low = torch.randn(2, 8, 4, 4)
    # zero motion leaves the low band untouched whatever alpha is
    for alpha in (0.0, 1.0, 25.0):
        assert torch.equal(magnifier(low, torch.zeros_like(low), alpha), low)
    with torch.no_grad():
        magnifier.outer.weight.zero_()
    assert torch.equal(magnifier(low, torch.randn_like(low), 25.0), low)

@pytest.mark.parametrize("shape", [(1, 4, 2, 2), (2, 8, 3, 5), (3, 12, 7, 4)])
def test_subpixel_shuffle_keeps_elements(shape):
    x = torch.randn(*shape)
    out = subpixel_shuffle(x)
    assert out.shape == (shape[0], shape[1] // 4, shape[2] * 2, shape[3] * 2)
    assert torch.equal(out.flatten().sort().values, x.flatten().sort().values)

def test_subpixel_shuffle():
    x = torch.arange(16.0).view(1, 4, 2, 2)
    out = subpixel_shuffle(x)
    assert out.shape == (1, 1, 4, 4)
    assert out[0, 0, 0, :2].tolist() == [0.0, 4.0]
    with pytest.raises(ShapeMismatch):
        subpixel_shuffle(torch.zeros(1, 6, 2, 2))

def test_filter_details_rejects_unbuilt_level(tiny_config):
    network = MagnificationNetwork(tiny_config)
    with pytest.raises(UnknownLevel):
        network.filter_details(Level.extra, torch.zeros(1, 32, 1, 1))

@pytest.mark.parametrize("switch", ['use_low_pass', 'use_high_pass', 'use_mixer'])
def test_component_switches(tiny_config, switch):
    full = MagnificationNetwork(tiny_config)
    config = ModelConfig(**{**tiny_config.to_dict(), switch: False})
    ablated = MagnificationNetwork(config)
    assert count_parameters(ablated) < count_parameters(full)
    if switch == 'use_low_pass':
        assert ablated.low_pass.depth == 0
    elif switch == 'use_high_pass':
        assert all(f.depth == 0 for f in ablated.high_pass)
    else:
        assert all(m.depth == 0 for m in ablated.mixers)
    assert ablated(torch.rand(1, 3, 16, 16), torch.rand(1, 3, 16, 16), 5.0).shape == (1, 3, 16, 16)

def test_softmax_network_runs(tiny_config):
    config = ModelConfig(**{**tiny_config.to_dict(), 'attention': AttentionKind.softmax})
    network = MagnificationNetwork(config)
    assert network(torch.rand(1, 3, 16, 16), torch.rand(1, 3, 16, 16), 5.0).shape == (1, 3, 16, 16)

def test_forward_magnify_clamps(tiny_config):
    network = MagnificationNetwork(tiny_config)
    out = forward_magnify(torch.rand(1, 3, 16, 16), torch.rand(1, 3, 16, 16), 100.0, network)
    assert out.min() >= 0 and out.max() <= 1
    assert not out.requires_grad
    with pytest.raises(InvalidFrame):
        forward_magnify(torch.rand(1, 3, 16, 16) + 1, torch.rand(1, 3, 16, 16), 1.0, network)

def test_summary_counts_flops(tiny_config):
    info = MagnificationNetwork(tiny_config).summary(16, 16)
    assert info['parameters'] > 0
    assert info['flops'] > 0
    assert info['resolution'] == [16, 16]
    assert 'time_ms' not in info

def test_summary_times_forward_passes(tiny_config):
    network = MagnificationNetwork(tiny_config)
    network.train()
    info = network.summary(16, 16, runs=3, warmup=1)
    assert info['time_ms'] > 0
    assert info['runs'] == 3
    assert network.training

@pytest.mark.parametrize("runs, warmup", [(0, 1), (-2, 1), (2, -1)])
def test_time_forward_rejects_counts(tiny_config, runs, warmup):
    with pytest.raises(InvalidConfig):
        time_forward(MagnificationNetwork(tiny_config), 16, 16, runs=runs, warmup=warmup)

def test_total_loss_gradients_match_finite_differences(tiny_config):
    torch.manual_seed(7)
    network = MagnificationNetwork(tiny_config).double()
    backend = FilterBankBackend()
    ref = torch.rand(1, 3, 16, 16, dtype=torch.float64)
    query = torch.rand(1, 3, 16, 16, dtype=torch.float64)
    gt = torch.rand(1, 3, 16, 16, dtype=torch.float64)
    loss_config = LossConfig()

    def loss() -> torch.Tensor:
        return total_loss(network(ref, query, 5.0), gt, query, backend, loss_config).total

    network.zero_grad()
    loss().backward()

    step = 1e-6
    generator = torch.Generator().manual_seed(0)
    worst = 0.0
    for name, param in network.named_parameters():
        index = int(torch.randint(param.numel(), (1,), generator=generator))
        analytic = param.grad.reshape(-1)[index].item()
        with torch.no_grad():
            flat = param.view(-1)
            original = flat[index].item()
            flat[index] = original + step
            up = loss().item()
            flat[index] = original - step
            down = loss().item()
            flat[index] = original
        numeric = (up - down) / (2 * step)
        error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-5)
        worst = max(worst, error)
        assert error < 1e-3, name
    assert worst < 1e-3

class _Recorder(nn.Module):
    # hands the reference frame back, so the output shows the pairing
    def __init__(self) -> None:
        super().__init__()
        self.config = ModelConfig(base_channels=4)
        self.anchor = nn.Parameter(torch.zeros(()))

    def forward(self, reference, query, alpha):
        return reference + 0 * self.anchor

def _sequence(count=5, h=16, w=16):
    rng = np.random.default_rng(3)
    return rng.uniform(0, 1, size=(count, 3, h, w)).astype(np.float32)

def test_static_mode_pairs_with_first_frame():
    frames = _sequence()
    out = magnify_sequence(frames, MagnifyRequest(10, 'static'), _Recorder(), batch_size=2)
    for t in range(len(frames)):
        assert np.array_equal(out[t], frames[0])

def test_dynamic_mode_pairs_with_previous_frame():
    frames = _sequence()
    out = magnify_sequence(frames, MagnifyRequest(10, 'dynamic'), _Recorder(), batch_size=3)
    assert np.array_equal(out[0], frames[0])
    for t in range(1, len(frames)):
        assert np.array_equal(out[t], frames[t - 1])

def test_sequence_pads_and_crops(tiny_config, caplog):
    frames = _sequence(3, 20, 18)
    network = MagnificationNetwork(tiny_config).eval()
    with caplog.at_level(logging.WARNING, logger='freqmag.network'):
        out = magnify_sequence(frames, MagnifyRequest(5, 'static'), network)
    assert out.shape == frames.shape
    assert out.dtype == np.float32
    assert np.array_equal(out[0], frames[0])
    assert 'not divisible by 8' in caplog.text

@pytest.mark.parametrize("frames", [np.zeros((0, 3, 16, 16)), np.zeros((2, 16, 16)), np.full((2, 3, 16, 16), 2.0)])
def test_sequence_rejects(tiny_config, frames):
    with pytest.raises(InvalidFrame):
        magnify_sequence(frames, MagnifyRequest(5, 'static'), MagnificationNetwork(tiny_config))

@pytest.mark.parametrize("alpha", [-0.5, float('nan'), 'ten'])
def test_request_rejects_alpha(alpha):
    with pytest.raises(InvalidAlpha):
        MagnifyRequest(alpha, 'static')
