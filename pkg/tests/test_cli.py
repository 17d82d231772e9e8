"""
测试命令行: 退出码、错误行和端到端流水线
"""

import os
from pathlib import Path

import numpy as np
import pytest

from src.cli.main import build_parser, run

SMALL_CONFIG = """\
seed: 7
simulator:
  n_recordings: 4
  duration: 60
  classes: [alarm, bird, car]
  event_rate: 0.05
  mean_duration: 8.0
  n_annotators: 8
  annotators_per_window: 3
competence:
  iterations: 10
  restarts: 2
features:
  sample_rate: 8000
  n_fft: 256
  n_mels: 16
  f_max: 3800.0
  hop_seconds: 0.05
training:
  hidden: [8, 8]
  epochs: 3
  batch_size: 32
"""


@pytest.fixture
def small_run(tmp_path, monkeypatch):
    """在 tmp_path 下写出小配置并切换工作目录"""
    def prepare(name='a'):
        directory = tmp_path / name
        directory.mkdir()
        (directory / 'config.yaml').write_text(SMALL_CONFIG, encoding='utf-8')
        monkeypatch.chdir(directory)
        return directory
    return prepare


def _cli(*args):
    return run(['--quiet', '--config', 'config.yaml', '--work-dir', 'run', *args])


def test_parser_reads_global_flags_and_setups():
    parser = build_parser()
    args = parser.parse_args(['--seed', '3', 'train', '--setups', 's_mse_lin,H_BCE_SIG'])
    assert args.seed == 3
    assert [s.value for s in args.setups] == ['S_MSE_LIN', 'H_BCE_SIG']


def test_usage_error_exit_code_and_line(capsys):
    assert run(['--quiet', 'frobnicate']) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err.startswith("error\tcode=2\tstage=cli\tmessage=")


def test_exclusive_threshold_flags():
    assert run(['--quiet', 'binarize', '--threshold', '0.5', '--class-thresholds', 't.tsv']) == 2


def test_missing_directory_is_a_data_error(tmp_path, capsys):
    code = run(['--quiet', '--work-dir', str(tmp_path), 'aggregate', '--annotations', str(tmp_path / 'nope')])
    assert code == 3
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err.startswith("error\tcode=3\tstage=aggregate\tmessage=annotation directory not found")


def test_binarize_writes_hard_label_files(tmp_path):
    soft = tmp_path / 'soft'
    soft.mkdir()
    (soft / 'rec.txt').write_text("0\t1\tcar\t0.7\n1\t2\tcar\t0.4\n2\t3\tcar\t0.9\n", encoding='utf-8')
    out = tmp_path / 'hard'
    assert run(['--quiet', '--work-dir', str(tmp_path), 'binarize', '--threshold', '0.5',
                '--input', str(soft), '--output', str(out)]) == 0
    lines = (out / 'rec.txt').read_text(encoding='utf-8').splitlines()
    assert lines[0].startswith('# softsed config=')
    assert 'kind=hard-labels' in lines[0]
    assert lines[1:] == ["0\t1\tcar", "2\t3\tcar"]


def test_invalid_threshold_is_a_usage_error(tmp_path, capsys):
    soft = tmp_path / 'soft'
    soft.mkdir()
    (soft / 'rec.txt').write_text("0\t1\tcar\t0.7\n", encoding='utf-8')
    assert run(['--quiet', '--work-dir', str(tmp_path), 'binarize', '--threshold', '1.5', '--input', str(soft)]) == 2
    assert "stage=binarize" in capsys.readouterr().err


def test_undecodable_label_file_is_a_data_error(tmp_path, capsys):
    """非 UTF-8 的软标签文件给出退出码 3 和单行错误，而不是 traceback"""
    soft = tmp_path / 'soft'
    soft.mkdir()
    (soft / 'rec.txt').write_bytes(b"0\t1\tcar\t0.5\n\xff\xfe\n")
    code = run(['--quiet', '--work-dir', str(tmp_path), 'binarize', '--threshold', '0.5', '--input', str(soft)])
    assert code == 3
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err.startswith("error\tcode=3\tstage=binarize\tmessage=")
    assert 'UTF-8' in err


def test_unexpected_exception_becomes_exit_code_one(tmp_path, monkeypatch, capsys):
    """未预期的异常也只输出一行错误，退出码为 1"""
    from src.runner.stages import PipelineStages

    def boom(self, **kwargs):
        raise RuntimeError('boom')

    monkeypatch.setattr(PipelineStages, 'binarize', boom)
    code = run(['--quiet', '--work-dir', str(tmp_path), 'binarize', '--threshold', '0.5'])
    assert code == 1
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err == "error\tcode=1\tstage=binarize\tmessage=RuntimeError: boom"


def test_evaluate_identical_files(tmp_path):
    labels = tmp_path / 'labels'
    labels.mkdir()
    (labels / 'a.txt').write_text("0\t4\tcar\n2\t6\tfootsteps\n", encoding='utf-8')
    (labels / 'b.txt').write_text("# softsed duration=10\n1\t3\tpeople talking\n", encoding='utf-8')
    assert run(['--quiet', '--work-dir', str(tmp_path), 'evaluate',
                '--reference', str(labels), '--system', str(labels)]) == 0
    lines = (tmp_path / 'reports' / 'evaluation.tsv').read_text(encoding='utf-8').splitlines()
    assert "ER\tmicro\t0.000000" in lines
    assert "F1\tmicro\t1.000000" in lines


def test_evaluate_needs_both_directories(tmp_path):
    assert run(['--quiet', '--work-dir', str(tmp_path), 'evaluate', '--reference', str(tmp_path)]) == 2


def test_stage_by_stage_run_and_numeric_failure(small_run, capsys):
    work = small_run() / 'run'
    assert _cli('simulate') == 0
    assert len(list((work / 'annotations').glob('*.tsv'))) == 4
    assert len(list((work / 'features').glob('*.feat.prov'))) == 4
    assert _cli('estimate-competence', '--iterations', '5') == 0
    assert (work / 'competence.tsv').read_text(encoding='utf-8').startswith('# softsed config=')
    assert _cli('aggregate') == 0
    assert len(list((work / 'soft').glob('*.txt'))) == 4

    with np.errstate(all='ignore'):
        code = _cli('train', '--setups', 'S_MSE_LIN', '--learning-rate', '1e200')
    assert code == 4
    assert "error\tcode=4\tstage=train" in capsys.readouterr().err


def test_pipeline_is_deterministic(small_run):
    reports = []
    for name in ('a', 'b'):
        work = small_run(name) / 'run'
        assert _cli('pipeline') == 0
        reports.append((work / 'reports' / 'report.txt').read_bytes())
        assert (work / 'models' / 'S_MSE_LIN.params.prov').exists()
        assert (work / 'thresholds.tsv').exists()
        assert len(list((work / 'hard').glob('*.txt'))) == 4
    assert reports[0] == reports[1]

    metrics = (Path('run') / 'reports' / 'metrics.tsv').read_text(encoding='utf-8')
    for row in ('H_BCE_SIG@0.5', 'S_BCE_SIG@0.5', 'S_MSE_LIN@0.5', 'S_MSE_LIN@class-dependent',
                'H_BCE_SIG@class-dependent'):
        assert f"{row}:ER\tmicro\t" in metrics
    assert "S_MSE_LIN@0.5:KLD\tmicro\t" in metrics
    assert "S_MSE_LIN@class-dependent:KLD" not in metrics


@pytest.mark.skipif('SOFTSED_MAESTRO_DIR' not in os.environ, reason='public dataset not available')
def test_released_hard_labels_match_published_statistics(tmp_path):
    """SOFTSED_MAESTRO_DIR 指向按场景分子目录存放的公开硬标签文件"""
    assert run(['--quiet', '--work-dir', str(tmp_path), 'stats', os.environ['SOFTSED_MAESTRO_DIR']]) == 0
    lines = (tmp_path / 'reports' / 'stats.tsv').read_text(encoding='utf-8').splitlines()
    assert "files\ttotal\t75" in lines
    assert "instances\ttotal|people talking\t307" in lines
    assert "instances\ttotal|footsteps\t237" in lines
