import json
import logging

import pytest

from freqmag import Checkpoint, MagnificationNetwork, ModelConfig
from freqmag.cli import main, merge_flags
from freqmag.frames import read_frames

SPEC = {
    'background': 'builtin:flat',
    'resolution': [32, 32],
    'foreground_size': 8,
    'frame_count': 4,
    'period': 4,
    'alpha': 3.0,
    'amplitude': 1.0,
}

TINY = {
    'base_channels': 4,
    'high_pass_layers': [1, 1, 1],
    'mixer_layers': [1, 1, 1],
    'low_pass_layers': 1,
}

def _write(path, data):
    path.write_text(json.dumps(data), encoding='utf-8')
    return str(path)

def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])

def test_merge_flags_prefers_file(caplog):
    with caplog.at_level(logging.WARNING, logger='freqmag.cli'):
        merged = merge_flags('spec', {'alpha': 5.0}, {'alpha': 7.0, 'seed': 3, 'noise_sigma': None})
    assert merged == {'alpha': 5.0, 'seed': 3}
    assert 'spec.alpha' in caplog.text

def test_no_command_prints_help(capsys):
    assert main([]) == 1
    assert 'usage' in capsys.readouterr().out

def test_version(capsys):
    assert main(['--version']) == 0
    out = capsys.readouterr().out
    assert '- freqmag v' in out and '- torch v' in out

def test_synth_writes_dataset(tmp_path, capsys):
    spec = _write(tmp_path / 'spec.json', SPEC)
    assert main(['synth', spec, '-o', str(tmp_path / 'data'), '--sigma', '0.01']) == 0
    frames, fps = read_frames(tmp_path / 'data' / 'input')
    assert frames.shape == (4, 3, 32, 32)
    written = json.loads((tmp_path / 'data' / 'spec.json').read_text(encoding='utf-8'))
    assert written['noise_sigma'] == 0.01

def test_synth_reports_config_errors(tmp_path, capsys):
    spec = _write(tmp_path / 'spec.json', {**SPEC, 'peroid': 4})
    assert main(['synth', spec, '-o', str(tmp_path / 'data')]) == 2
    assert _error(capsys) == {'error': 'InvalidConfig', 'message': 'spec.peroid: unknown field'}

def test_train_magnify_eval_slice(tmp_path, capsys):
    data = tmp_path / 'data'
    spec = _write(tmp_path / 'spec.json', {**SPEC, 'resolution': [64, 64], 'foreground_size': 16})
    assert main(['synth', spec, '-o', str(data)]) == 0

    config = _write(tmp_path / 'run.json', {
        'model': TINY,
        'train': {'batch_size': 1, 'crop': 32, 'alpha_range': [1, 3]},
        'loss': {'edge': 'sobel'},
    })
    model = tmp_path / 'model.fqmg'
    assert main(['train', str(data), '-o', str(model), '--config', config, '--steps', '2']) == 0
    ckpt = Checkpoint.load(model)
    assert ckpt.step == 2
    assert ckpt.train_config.loss.edge.value == 'sobel'

    out = tmp_path / 'out'
    assert main(['magnify', str(data / 'input'), '-o', str(out), '--checkpoint', str(model), '--alpha', '3', '--mode', 'dynamic']) == 0
    frames, _ = read_frames(out)
    assert frames.shape == (4, 3, 64, 64)

    report = tmp_path / 'report.json'
    assert main(['eval', str(data), '-o', str(report), '--checkpoint', str(model), '--alpha', '2', '--sigma']) == 0
    grid = json.loads(report.read_text(encoding='utf-8'))
    assert grid['sigmas'] == [0.0]
    assert grid['cells'][0]['sequence'] == 'data'
    assert len(grid['cells'][0]['ssim']) == 3

    image = tmp_path / 'slice.png'
    assert main(['slice', str(out), '-o', str(image), '--axis', 'col', '--index', '10']) == 0
    assert image.is_file()

def test_train_resume_from_config(tmp_path, capsys):
    data = tmp_path / 'data'
    spec = _write(tmp_path / 'spec.json', {**SPEC, 'resolution': [64, 64], 'foreground_size': 16})
    main(['synth', spec, '-o', str(data)])
    train = {'batch_size': 1, 'crop': 32, 'alpha_range': [1, 3]}
    first = tmp_path / 'first.fqmg'
    assert main(['train', str(data), '-o', str(first), '--config', _write(tmp_path / 'a.json', {'model': TINY, 'train': train}), '--steps', '1']) == 0
    resume = _write(tmp_path / 'b.json', {'train': {**train, 'steps': 2}, 'checkpoint': str(first)})
    second = tmp_path / 'second.fqmg'
    assert main(['train', str(data), '-o', str(second), '--config', resume]) == 0
    assert Checkpoint.load(second).step == 2

def test_magnify_requires_alpha(tmp_path, capsys):
    model = tmp_path / 'model.fqmg'
    Checkpoint.from_network(MagnificationNetwork()).save(model)
    assert main(['magnify', str(tmp_path), '-o', str(tmp_path / 'out'), '--checkpoint', str(model)]) == 2
    assert _error(capsys)['error'] == 'InvalidConfig'

def test_eval_requires_ground_truth(tmp_path, capsys):
    (tmp_path / 'data').mkdir()
    assert main(['eval', str(tmp_path / 'data'), '-o', str(tmp_path / 'r.json'), '--checkpoint', 'x.fqmg']) == 2
    assert _error(capsys)['error'] == 'MissingGroundTruth'

def test_slice_out_of_range(tmp_path, capsys):
    spec = _write(tmp_path / 'spec.json', SPEC)
    main(['synth', spec, '-o', str(tmp_path / 'data')])
    assert main(['slice', str(tmp_path / 'data' / 'input'), '-o', str(tmp_path / 's.png'), '--index', '32']) == 2
    assert _error(capsys)['error'] == 'IndexOutOfRange'

def test_info_counts_parameters(tmp_path, capsys):
    config = _write(tmp_path / 'model.json', {'model': TINY})
    assert main(['info', '--config', config]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info['parameters'] > 0
    assert info['config']['base_channels'] == 4

def test_usage_errors_keep_argparse_status():
    with pytest.raises(SystemExit) as info:
        main(['magnify'])
    assert info.value.code == 2

def test_missing_config_file_is_reported(tmp_path, capsys):
    assert main(['synth', str(tmp_path / 'nope.json'), '-o', str(tmp_path / 'data')]) == 2
    error = _error(capsys)
    assert error['error'] == 'InvalidConfig'
    assert 'nope.json: cannot be read' in error['message']

def test_malformed_config_file_is_reported(tmp_path, capsys):
    broken = tmp_path / 'broken.json'
    broken.write_text('{not json', encoding='utf-8')
    assert main(['synth', str(broken), '-o', str(tmp_path / 'data')]) == 2
    assert 'not valid JSON' in _error(capsys)['message']
    assert main(['info', '--config', str(broken)]) == 2
    assert _error(capsys)['error'] == 'InvalidConfig'

def test_synth_rerun_is_byte_identical(tmp_path, capsys):
    spec = _write(tmp_path / 'spec.json', {**SPEC, 'noise_sigma': 0.05, 'background': 'builtin:texture'})
    assert main(['synth', spec, '-o', str(tmp_path / 'a')]) == 0
    assert main(['synth', spec, '-o', str(tmp_path / 'b')]) == 0
    first = sorted(p.relative_to(tmp_path / 'a') for p in (tmp_path / 'a').rglob('*') if p.is_file())
    second = sorted(p.relative_to(tmp_path / 'b') for p in (tmp_path / 'b').rglob('*') if p.is_file())
    assert first == second
    assert any(p.suffix == '.png' for p in first)
    for rel in first:
        assert (tmp_path / 'a' / rel).read_bytes() == (tmp_path / 'b' / rel).read_bytes()

def _eval_fixture(tmp_path):
    data = tmp_path / 'data'
    spec = _write(tmp_path / 'spec.json', {**SPEC, 'resolution': [64, 64], 'foreground_size': 16})
    assert main(['synth', spec, '-o', str(data)]) == 0
    model = tmp_path / 'model.fqmg'
    Checkpoint.from_network(MagnificationNetwork(ModelConfig.from_dict(TINY))).save(model)
    return data, model

def test_eval_config_wins_over_flags(tmp_path, capsys, caplog):
    data, model = _eval_fixture(tmp_path)
    config = _write(tmp_path / 'eval.json', {'alpha': [2], 'sigma': [], 'backend': 'filterbank'})
    report = tmp_path / 'report.json'
    with caplog.at_level(logging.WARNING, logger='freqmag.cli'):
        code = main(['eval', str(data), '-o', str(report), '--checkpoint', str(model), '--config', config, '--alpha', '3'])
    assert code == 0
    assert 'eval.alpha' in caplog.text
    grid = json.loads(report.read_text(encoding='utf-8'))
    assert grid['alphas'] == [2.0]
    assert grid['sigmas'] == [0.0]
    assert grid['backend']['kind'] == 'filterbank'

def test_eval_config_rejects_unknown_keys(tmp_path, capsys):
    data, model = _eval_fixture(tmp_path)
    config = _write(tmp_path / 'eval.json', {'alphas': [2]})
    assert main(['eval', str(data), '-o', str(tmp_path / 'r.json'), '--checkpoint', str(model), '--config', config]) == 2
    error = _error(capsys)
    assert error['error'] == 'InvalidConfig'
    assert error['message'].startswith('eval.alphas')

def test_info_reports_timing(tmp_path, capsys):
    config = _write(tmp_path / 'model.json', {'model': TINY})
    assert main(['info', '--config', config, '--height', '16', '--width', '16', '--runs', '2', '--warmup', '1']) == 0
    info = json.loads(capsys.readouterr().out)
    assert info['time_ms'] > 0
    assert info['runs'] == 2
    assert info['flops'] > 0
