import pytest
import torch

from freqmag import BackendNotInitialized, LossConfig, ShapeMismatch, SynthSpec, synthesize_sequence
from freqmag.enums import EdgeOperator, Regularizer
from freqmag.losses import (
    charbonnier,
    contrastive_regularization,
    edge_loss,
    log_edge_map,
    log_kernel,
    perceptual_loss,
    sobel_edge_map,
    total_loss,
)
from freqmag.perceptual import FilterBankBackend

def test_charbonnier_of_identical_inputs_is_epsilon():
    x = torch.rand(2, 3, 8, 8, dtype=torch.float64)
    assert charbonnier(x, x).item() == pytest.approx(1e-3, rel=1e-12)

def test_charbonnier_is_mean_of_per_sample_values():
    a = torch.zeros(2, 3, 4, 4, dtype=torch.float64)
    b = torch.zeros_like(a)
    b[1] = 0.5
    expected = (1e-3 + (0.25 + 1e-6) ** 0.5) / 2
    assert charbonnier(a, b).item() == pytest.approx(expected, rel=1e-12)

def test_charbonnier_checks_shapes():
    with pytest.raises(ShapeMismatch):
        charbonnier(torch.zeros(3, 4, 4), torch.zeros(3, 4, 5))

def test_log_kernel_is_zero_sum_and_symmetric():
    kernel = log_kernel(7, 1.0)
    assert kernel.shape == (7, 7)
    assert abs(kernel.sum().item()) < 1e-12
    assert torch.allclose(kernel, kernel.flip(0))
    assert torch.allclose(kernel, kernel.T)
    assert kernel[3, 3] < 0

def test_log_impulse_response_is_kernel():
    img = torch.zeros(1, 1, 15, 15, dtype=torch.float64)
    img[..., 7, 7] = 1.0
    response = log_edge_map(img)
    assert torch.allclose(response[0, 0, 4:11, 4:11], log_kernel(7, 1.0))

def test_log_step_edge_crosses_zero():
    img = torch.zeros(1, 1, 16, 16, dtype=torch.float64)
    img[..., 8:] = 1.0
    row = log_edge_map(img)[0, 0, 8]
    assert torch.allclose(row[7], -row[8])
    assert row[7] * row[8] < 0
    assert torch.allclose(row[:3], torch.zeros(3, dtype=torch.float64), atol=1e-12)

def test_sobel_doubles_channels():
    img = torch.rand(2, 3, 8, 8)
    assert sobel_edge_map(img).shape == (2, 6, 8, 8)

@pytest.mark.parametrize("edge", [EdgeOperator.log, EdgeOperator.sobel])
def test_edge_loss_ignores_constant_offset(edge):
    config = LossConfig(edge=edge)
    pred = torch.rand(2, 3, 16, 16, dtype=torch.float64)
    gt = torch.rand(2, 3, 16, 16, dtype=torch.float64)
    shifted = edge_loss(pred + 0.25, gt + 0.25, config)
    assert abs(shifted.item() - edge_loss(pred, gt, config).item()) < 1e-6

def test_edge_loss_none_is_zero():
    loss = edge_loss(torch.rand(1, 3, 8, 8), torch.rand(1, 3, 8, 8), LossConfig(edge='none'))
    assert loss.item() == 0.0

def test_contrastive_identity_is_one_per_sample():
    backend = FilterBankBackend()
    x = torch.rand(3, 3, 16, 16, dtype=torch.float64)
    assert contrastive_regularization(x, x, x, backend).item() == pytest.approx(3.0)

@pytest.mark.parametrize("alpha", [5.0, 10.0])
def test_contrastive_prefers_ground_truth(alpha):
    spec = SynthSpec(resolution=(64, 64), foreground_size=16, frame_count=16, period=16, alpha=alpha, amplitude=1.0)
    pair = synthesize_sequence(spec)
    gt = torch.from_numpy(pair.gt_frames[4:5]).double()
    query = torch.from_numpy(pair.input_frames[4:5]).double()
    backend = FilterBankBackend()
    at_gt = contrastive_regularization(gt, gt, query, backend)
    at_query = contrastive_regularization(query, gt, query, backend)
    assert at_gt < at_query

def test_contrastive_gradient_flows_to_anchor_only():
    backend = FilterBankBackend()
    anchor = torch.rand(1, 3, 16, 16, dtype=torch.float64, requires_grad=True)
    positive = torch.rand(1, 3, 16, 16, dtype=torch.float64, requires_grad=True)
    negative = torch.rand(1, 3, 16, 16, dtype=torch.float64, requires_grad=True)
    contrastive_regularization(anchor, positive, negative, backend).backward()
    assert anchor.grad is not None
    assert positive.grad is None and negative.grad is None

def test_regularizers_need_backend():
    x = torch.rand(1, 3, 8, 8)
    with pytest.raises(BackendNotInitialized):
        contrastive_regularization(x, x, x, None)
    with pytest.raises(BackendNotInitialized):
        perceptual_loss(x, x, None)

@pytest.mark.parametrize(
    "edge, regularizer",
    [
        (EdgeOperator.none, Regularizer.none),
        (EdgeOperator.log, Regularizer.none),
        (EdgeOperator.log, Regularizer.perceptual),
        (EdgeOperator.log, Regularizer.contrastive),
        (EdgeOperator.sobel, Regularizer.contrastive),
    ]
)
def test_total_loss_terms(edge, regularizer):
    config = LossConfig(edge=edge, regularizer=regularizer)
    pred = torch.rand(2, 3, 16, 16, dtype=torch.float64)
    gt = torch.rand(2, 3, 16, 16, dtype=torch.float64)
    query = torch.rand(2, 3, 16, 16, dtype=torch.float64)
    breakdown = total_loss(pred, gt, query, FilterBankBackend(), config)
    assert breakdown.is_finite()
    expected = breakdown.mag + breakdown.edge + config.weight * breakdown.regularizer
    assert torch.allclose(breakdown.total, expected)
    if edge is EdgeOperator.none:
        assert breakdown.edge.item() == 0.0
    if regularizer is Regularizer.none:
        assert breakdown.regularizer.item() == 0.0
    assert set(breakdown.as_floats()) == {'total', 'mag', 'edge', 'regularizer'}

def test_total_loss_without_backend_when_unregularized():
    x = torch.rand(1, 3, 8, 8)
    breakdown = total_loss(x, x, x, None, LossConfig(regularizer='none'))
    assert breakdown.total.item() == pytest.approx(2e-3, rel=1e-5)

def _charbonnier_loop(a, b, eps=1e-3):
    values = []
    for x, y in zip(a, b):
        flat_x = x.flatten().tolist()
        flat_y = y.flatten().tolist()
        mse = sum((p - q) ** 2 for p, q in zip(flat_x, flat_y)) / len(flat_x)
        values.append((mse + eps ** 2) ** 0.5)
    return sum(values) / len(values)

def test_charbonnier_matches_scalar_loop():
    gen = torch.Generator().manual_seed(3)
    for _ in range(5):
        a = torch.rand(3, 3, 5, 4, dtype=torch.float64, generator=gen)
        b = torch.rand(3, 3, 5, 4, dtype=torch.float64, generator=gen)
        assert charbonnier(a, b).item() == pytest.approx(_charbonnier_loop(a, b), rel=1e-12)

def test_charbonnier_is_symmetric():
    a = torch.rand(2, 3, 8, 8, dtype=torch.float64)
    b = torch.rand(2, 3, 8, 8, dtype=torch.float64)
    assert torch.equal(charbonnier(a, b), charbonnier(b, a))

def test_contrastive_falls_along_path_to_positive():
    backend = FilterBankBackend()
    positive = torch.rand(1, 3, 16, 16, dtype=torch.float64)
    negative = torch.rand(1, 3, 16, 16, dtype=torch.float64)
    values = [
        contrastive_regularization((1 - t) * negative + t * positive, positive, negative, backend).item()
        for t in (0.0, 0.25, 0.5, 0.75, 1.0)
    ]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))

def test_contrastive_adds_over_the_batch():
    backend = FilterBankBackend()
    anchor, positive, negative = (torch.rand(3, 3, 16, 16, dtype=torch.float64) for _ in range(3))
    whole = contrastive_regularization(anchor, positive, negative, backend).item()
    parts = sum(
        contrastive_regularization(anchor[i:i + 1], positive[i:i + 1], negative[i:i + 1], backend).item()
        for i in range(3)
    )
    assert whole == pytest.approx(parts, rel=1e-10)
    assert whole != pytest.approx(3.0)

@pytest.mark.parametrize("regularizer", [Regularizer.contrastive, Regularizer.perceptual])
def test_zero_weight_drops_regularizer_exactly(regularizer):
    config = LossConfig(weight=0.0, regularizer=regularizer)
    pred, gt, query = (torch.rand(2, 3, 16, 16, dtype=torch.float64) for _ in range(3))
    breakdown = total_loss(pred, gt, query, FilterBankBackend(), config)
    assert breakdown.regularizer.item() > 0
    assert torch.equal(breakdown.total, breakdown.mag + breakdown.edge)
