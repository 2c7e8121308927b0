import pytest
import torch

from freqmag import ModelConfig, SynthSpec, TrainConfig

@pytest.fixture
def tiny_config():
    return ModelConfig(
        base_channels=4,
        high_pass_layers=(1, 1, 1),
        mixer_layers=(1, 1, 1),
        low_pass_layers=1,
    )

@pytest.fixture
def small_spec():
    return SynthSpec(
        background='builtin:flat',
        resolution=(64, 64),
        foreground_size=16,
        frame_count=8,
        period=8,
        alpha=4.0,
        amplitude=1.0,
    )

@pytest.fixture
def quick_train():
    return TrainConfig(steps=3, batch_size=2, crop=32, alpha_range=(1, 5), log_every=1)

@pytest.fixture(autouse=True)
def _seed():
    torch.manual_seed(0)
