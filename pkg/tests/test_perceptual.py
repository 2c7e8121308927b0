import pytest
import torch
import torch.nn as nn

from freqmag import BackendKind, BackendNotInitialized, ShapeMismatch, get_backend
from freqmag.perceptual import FilterBankBackend, ModuleBackend, VGGBackend, feature_distance

def test_filterbank_feature_shapes():
    backend = get_backend('filterbank')
    features = backend(torch.rand(2, 3, 16, 16))
    assert len(features) == 3
    assert all(f.shape == (2, 12, 16, 16) for f in features)
    assert backend.provenance == {'kind': 'filterbank', 'name': 'filterbank(1,2,4)'}

def test_filterbank_has_no_state():
    backend = FilterBankBackend((1.0,))
    assert list(backend.parameters()) == []
    assert backend.state_dict() == {}

def test_filterbank_smoothing_keeps_constants():
    backend = FilterBankBackend((1.0, 2.0))
    features = backend(torch.full((1, 3, 16, 16), 0.3, dtype=torch.float64))
    for f in features:
        smooth = f[:, 0::4]
        assert torch.allclose(smooth, torch.full_like(smooth, 0.3))
        assert torch.allclose(f[:, 1::4], torch.zeros_like(smooth), atol=1e-12)

def test_feature_distance_is_per_sample():
    a = [torch.zeros(2, 1, 2, 2), torch.zeros(2, 3, 1, 1)]
    b = [torch.ones(2, 1, 2, 2), torch.zeros(2, 3, 1, 1)]
    b[0][1] = 0.0
    assert feature_distance(a, b).tolist() == [1.0, 0.0]

def test_feature_distance_checks_lists():
    with pytest.raises(ShapeMismatch):
        feature_distance([torch.zeros(1, 1, 2, 2)], [])
    with pytest.raises(ShapeMismatch):
        feature_distance([torch.zeros(1, 1, 2, 2)], [torch.zeros(1, 2, 2, 2)])

def test_module_backend_wraps_any_module():
    backend = get_backend(BackendKind.module, module=nn.Conv2d(3, 2, 1), name='pointwise')
    features = backend(torch.rand(3, 8, 8))
    assert len(features) == 1 and features[0].shape == (1, 2, 8, 8)
    assert backend.provenance == {'kind': 'module', 'name': 'pointwise'}

@pytest.mark.parametrize("kind, options", [('lpips', {}), ('module', {})])
def test_get_backend_rejects(kind, options):
    with pytest.raises(BackendNotInitialized):
        get_backend(kind, **options)

def test_vgg_rejects_unknown_layer():
    with pytest.raises(BackendNotInitialized):
        VGGBackend(layer='conv9_9')

def test_vgg_features_stay_frozen():
    pytest.importorskip('torchvision')
    backend = VGGBackend('conv2_1', pretrained=False)
    backend.train()
    assert not backend.net.training
    assert all(not p.requires_grad for p in backend.parameters())
    features = backend(torch.rand(1, 3, 32, 32))
    assert features[0].shape == (1, 128, 16, 16)
    assert backend.provenance['name'] == 'vgg19:conv2_1:random'
