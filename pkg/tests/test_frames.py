import json
import logging

import numpy as np
import pytest

from freqmag import IndexOutOfRange, InvalidFrame, InvalidSequence
from freqmag.frames import read_frames, read_image, read_manifest, spatiotemporal_slice, to_uint8, write_frames, write_image

def _frames(count=4, h=8, w=10):
    return np.random.default_rng(0).uniform(0, 1, size=(count, 3, h, w)).astype(np.float32)

def test_to_uint8_rounds_and_clips():
    image = np.array([[[0.0, 0.5, 1.2, -0.1]]] * 3)
    assert to_uint8(image)[0].tolist() == [[0, 0, 0], [128, 128, 128], [255, 255, 255], [0, 0, 0]]

def test_image_roundtrip(tmp_path):
    image = _frames(1)[0]
    write_image(image, tmp_path / 'a.png')
    back = read_image(tmp_path / 'a.png')
    assert back.shape == (3, 8, 10)
    assert np.abs(back - image).max() <= 0.5 / 255 + 1e-6

def test_write_and_read_frames(tmp_path):
    frames = _frames()
    write_frames(frames, tmp_path, fps=24)
    assert sorted(p.name for p in tmp_path.glob('*.png')) == ['000000.png', '000001.png', '000002.png', '000003.png']
    assert read_manifest(tmp_path) == {'count': 4, 'fps': 24, 'height': 8, 'width': 10}
    back, fps = read_frames(tmp_path)
    assert fps == 24
    assert back.shape == frames.shape and back.dtype == np.float32

def test_rewrite_removes_stale_frames(tmp_path):
    write_frames(_frames(5), tmp_path)
    write_frames(_frames(2), tmp_path)
    back, _ = read_frames(tmp_path)
    assert len(back) == 2

def test_read_without_manifest_defaults_to_30(tmp_path):
    write_frames(_frames(2), tmp_path)
    (tmp_path / 'frames.json').unlink()
    assert read_frames(tmp_path)[1] == 30

def test_manifest_mismatch_warns(tmp_path, caplog):
    write_frames(_frames(2), tmp_path)
    (tmp_path / 'frames.json').write_text(json.dumps({'count': 5, 'fps': 30}), encoding='utf-8')
    with caplog.at_level(logging.WARNING, logger='freqmag.frames'):
        read_frames(tmp_path)
    assert 'manifest lists 5 frames' in caplog.text

def test_read_rejects(tmp_path):
    with pytest.raises(InvalidSequence):
        read_frames(tmp_path / 'missing')
    with pytest.raises(InvalidSequence):
        read_frames(tmp_path)
    write_frames(_frames(3), tmp_path)
    (tmp_path / '000001.png').unlink()
    with pytest.raises(InvalidSequence) as info:
        read_frames(tmp_path)
    assert 'contiguous' in info.value.reason

def test_read_rejects_mixed_sizes(tmp_path):
    write_frames(_frames(2), tmp_path)
    write_image(_frames(1, 16, 16)[0], tmp_path / '000002.png')
    with pytest.raises(InvalidSequence):
        read_frames(tmp_path)

def test_write_rejects_bad_shape(tmp_path):
    with pytest.raises(InvalidFrame):
        write_frames(np.zeros((2, 8, 8)), tmp_path)

def test_row_and_column_slices():
    frames = _frames(5, 8, 10)
    row = spatiotemporal_slice(frames, 'row', 3)
    col = spatiotemporal_slice(frames, 'col', 7)
    assert row.shape == (3, 5, 10)
    assert col.shape == (3, 8, 5)
    assert np.array_equal(row[:, 2, :], frames[2, :, 3, :])
    assert np.array_equal(col[:, :, 4], frames[4, :, :, 7])

@pytest.mark.parametrize("axis, index", [('row', 8), ('col', 10), ('row', -1)])
def test_slice_out_of_range(axis, index):
    with pytest.raises(IndexOutOfRange):
        spatiotemporal_slice(_frames(2, 8, 10), axis, index)
