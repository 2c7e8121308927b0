import io

import numpy as np
import pytest
import requests
from PIL import Image

from freqmag import HTTPException, InvalidConfig, SynthSpec, synthesize_sequence
from freqmag.assets import load_image
from freqmag.http import AssetHTTP, ProxyAuth

def _png(rgb=(255, 0, 0), size=(6, 4)):
    buf = io.BytesIO()
    Image.new('RGB', size, rgb).save(buf, format='PNG')
    return buf.getvalue()

class FakeSession(requests.Session):
    def __init__(self, routes):
        super().__init__()
        self.routes = routes
        self.calls = []
        self.closed = False

    def get(self, url, **kwargs):
        self.calls.append((url, kwargs))
        response = requests.Response()
        response.url = url
        if url in self.routes:
            response.status_code = 200
            response.reason = 'OK'
            response._content = self.routes[url]
        else:
            response.status_code = 404
            response.reason = 'Not Found'
            response._content = b''
        return response

    def close(self):
        self.closed = True

def test_fetch_sends_user_agent_and_timeout():
    session = FakeSession({'https://assets.example/bg.png': b'abc'})
    http = AssetHTTP(session, timeout=5)
    assert http.fetch('https://assets.example/bg.png') == b'abc'
    url, kwargs = session.calls[0]
    assert kwargs['headers']['User-Agent'].startswith('freqmag (')
    assert kwargs['timeout'] == 5
    assert kwargs['proxies'] is None and kwargs['auth'] is None

def test_fetch_raises_on_error_status():
    http = AssetHTTP(FakeSession({}))
    with pytest.raises(HTTPException) as info:
        http.fetch('https://assets.example/missing.png')
    assert info.value.status == 404

@pytest.mark.parametrize("url", ['ftp://assets.example/a.png', 'file:///tmp/a.png', 'mailto:assets@example.com'])
def test_fetch_rejects_non_http(url):
    with pytest.raises(InvalidConfig):
        AssetHTTP(FakeSession({})).fetch(url)

def test_proxy_auth_only_with_proxy():
    session = FakeSession({'http://assets.example/a': b'x'})
    AssetHTTP(session, proxy_auth=ProxyAuth('u', 'p')).fetch('http://assets.example/a')
    assert session.calls[-1][1]['auth'] is None
    AssetHTTP(session, proxy='http://proxy.example:3128', proxy_auth=ProxyAuth('u', 'p')).fetch('http://assets.example/a')
    assert session.calls[-1][1]['auth'] == ('u', 'p')
    assert session.calls[-1][1]['proxies'] == {'http': 'http://proxy.example:3128'}

def test_rejects_foreign_session():
    with pytest.raises(RuntimeError):
        AssetHTTP(session=object())

def test_context_manager_closes():
    session = FakeSession({})
    with AssetHTTP(session):
        pass
    assert session.closed

def test_download(tmp_path):
    http = AssetHTTP(FakeSession({'https://assets.example/a.bin': b'12345'}))
    assert http.download('https://assets.example/a.bin', tmp_path / 'a.bin') == 5
    assert (tmp_path / 'a.bin').read_bytes() == b'12345'

def test_load_image_from_url():
    http = AssetHTTP(FakeSession({'https://assets.example/red.png': _png()}))
    image = load_image('https://assets.example/red.png', http=http, size=(8, 12))
    assert image.shape == (3, 8, 12)
    assert np.allclose(image[0], 1.0) and np.allclose(image[1:], 0.0)

def test_synthesis_with_remote_background():
    http = AssetHTTP(FakeSession({'https://assets.example/grey.png': _png((128, 128, 128), (20, 20))}))
    spec = SynthSpec(background='https://assets.example/grey.png', resolution=(32, 32), foreground_size=8, frame_count=2, alpha=2.0)
    pair = synthesize_sequence(spec, http=http)
    assert pair.input_frames.shape == (2, 3, 32, 32)
    assert pair.input_frames[0, :, 0, 0] == pytest.approx([128 / 255] * 3, abs=1e-6)
