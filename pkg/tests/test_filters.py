import math

import pytest
import torch

from freqmag import AttentionKind, Level, PoolMode, ShapeMismatch
from freqmag.filters import (
    ChannelAttention,
    ConvFFN,
    HighPassFilter,
    LowPassFilter,
    SparseChannelAttention,
    SparseFilter,
)

def test_temperature_starts_at_sqrt_head_width():
    attn = ChannelAttention(24, 4)
    assert torch.allclose(attn.temperature, torch.full((4, 1, 1), math.sqrt(6)), atol=1e-5)

def test_heads_must_divide_width():
    with pytest.raises(ShapeMismatch):
        ChannelAttention(10, 4)

@pytest.mark.parametrize("pool", [PoolMode.low, PoolMode.high])
def test_sparse_attention_is_nonnegative_with_zeros(pool):
    torch.manual_seed(1234)
    attn = SparseChannelAttention(24, 4, pool)
    zeros = []
    with torch.no_grad():
        for _ in range(100):
            scores = attn.attention_map(torch.randn(1, 24, 16, 16))
            assert scores.shape == (1, 4, 6, 6)
            assert (scores >= 0).all()
            zeros.append((scores == 0).double().mean().item())
    assert sum(zeros) / len(zeros) >= 0.10

def test_softmax_rows_sum_to_one():
    torch.manual_seed(1234)
    attn = SparseChannelAttention(24, 4, attention=AttentionKind.softmax)
    with torch.no_grad():
        for _ in range(100):
            scores = attn.attention_map(torch.randn(1, 24, 16, 16)).double()
            assert torch.allclose(scores.sum(-1), torch.ones(1, 4, 6), atol=1e-6)

def test_scores_do_not_scale_with_map_size():
    attn = ChannelAttention(8, 2)
    q = torch.randn(1, 8, 4, 4)
    k = torch.randn(1, 8, 4, 4)
    tiled = attn.scores(q.repeat(1, 1, 4, 4), k.repeat(1, 1, 4, 4))
    assert torch.allclose(attn.scores(q, k), tiled, atol=1e-5)

def test_pool_query_modes():
    x = torch.zeros(1, 4, 5, 5)
    x[..., 2, 2] = 9.0
    low = SparseChannelAttention(4, 2, PoolMode.low).pool_query(x)
    high = SparseChannelAttention(4, 2, PoolMode.high).pool_query(x)
    assert low.shape == high.shape == x.shape
    assert torch.allclose(low[..., 1:4, 1:4], torch.ones(1, 4, 3, 3))
    assert torch.equal(high[..., 1:4, 1:4], torch.full((1, 4, 3, 3), 9.0))

def test_ffn_keeps_shape():
    assert ConvFFN(8, 2)(torch.randn(2, 8, 6, 6)).shape == (2, 8, 6, 6)

def test_zero_layers_is_identity():
    block = SparseFilter(8, 0, 2, PoolMode.low)
    x = torch.randn(1, 8, 4, 4)
    assert block.depth == 0
    assert block
    assert torch.equal(block(x), x)

@pytest.mark.parametrize("layers", [1, 2, 4])
def test_filter_shapes(layers):
    filt = LowPassFilter(16, layers, 8)
    assert filt.depth == layers
    assert filt(torch.randn(2, 16, 4, 4)).shape == (2, 16, 4, 4)
    assert filt(torch.randn(16, 4, 4)).shape == (16, 4, 4)

def test_filter_checks_channels():
    with pytest.raises(ShapeMismatch):
        LowPassFilter(16, 1, 8)(torch.randn(1, 8, 4, 4))

def test_high_pass_level_and_pooling():
    filt = HighPassFilter('middle', 8, 2, 4)
    assert filt.level is Level.middle
    assert all(block.attn.pool is PoolMode.high for block in filt.blocks)
    assert all(block.attn.pool is PoolMode.low for block in LowPassFilter(8, 2, 4).blocks)

def test_initial_logits_bounded_by_temperature():
    attn = ChannelAttention(24, 4)
    q = torch.randn(2, 24, 8, 8) * 50
    k = torch.randn(2, 24, 8, 8) * 50
    bound = 1 / math.sqrt(6) + 1e-6
    with torch.no_grad():
        assert attn.scores(q, k).max().item() <= bound
        assert attn.scores(q, -k).max().item() <= bound
        assert attn.scores(q, q).max().item() == pytest.approx(1 / math.sqrt(6), rel=1e-4)

@pytest.mark.parametrize("pool", [PoolMode.low, PoolMode.high])
def test_zero_query_key_projection_leaves_residual(pool):
    attn = SparseChannelAttention(8, 2, pool)
    with torch.no_grad():
        attn.qkv.weight[:16].zero_()
        attn.qkv.bias[:16].zero_()
    x = torch.randn(2, 8, 6, 6)
    assert torch.count_nonzero(attn.attention_map(x)) == 0
    assert torch.equal(attn(x), x)

def test_ffn_with_zero_output_projection_is_identity():
    ffn = ConvFFN(8, 2)
    with torch.no_grad():
        ffn.project_out.weight.zero_()
    x = torch.randn(2, 8, 5, 5)
    assert torch.equal(ffn(x), x)

def test_ffn_gradients_match_finite_differences():
    ffn = ConvFFN(4, 2).double()
    with torch.no_grad():
        for p in ffn.parameters():
            p.add_(0.1 * torch.randn_like(p))
    x = torch.randn(1, 4, 5, 5, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(ffn, (x,), eps=1e-6, atol=1e-5, rtol=1e-3)
