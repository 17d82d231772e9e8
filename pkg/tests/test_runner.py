"""
测试产物仓库、阶段运行管理器和录音划分
"""

import pytest

from src.core.errors import DataError
from src.core.setups import RunStatus
from src.runner import RunManager, resolve_vocabulary, split_recordings
from src.schemas.config_schemas import PipelineConfig
from src.storage.artifact_repo import ArtifactRepository


def test_text_artifacts_start_with_provenance(tmp_path):
    repo = ArtifactRepository('abcd1234abcd1234', 42)
    path = repo.write_text(tmp_path / 'deep' / 'x.txt', 'soft-labels', "0\t1\tcar\t0.5\n",
                           {'duration': 3, 'scene': None})
    lines = path.read_text(encoding='utf-8').splitlines()
    assert lines[0] == "# softsed config=abcd1234abcd1234 seed=42 kind=soft-labels duration=3"
    assert lines[1] == "0\t1\tcar\t0.5"


def test_binary_artifacts_get_a_sidecar(tmp_path):
    repo = ArtifactRepository('ff', 1)
    path = repo.write_binary(tmp_path / 'm.params', 'model', lambda p: p.write_bytes(b'\x00\x01'), {'setup': 'S_MSE_LIN'})
    assert path.read_bytes() == b'\x00\x01'
    sidecar = tmp_path / 'm.params.prov'
    assert sidecar.read_text(encoding='utf-8') == "# softsed config=ff seed=1 kind=model setup=S_MSE_LIN\n"


def test_listing_and_requirements(tmp_path):
    for name in ('b.txt', 'a.txt', 'c.tsv'):
        (tmp_path / name).write_text('', encoding='utf-8')
    assert [p.name for p in ArtifactRepository.list(tmp_path, '.txt')] == ['a.txt', 'b.txt']
    assert ArtifactRepository.recordings(tmp_path, '.txt') == ['a', 'b']
    assert ArtifactRepository.list(tmp_path / 'missing', '.txt') == []
    with pytest.raises(DataError, match='soft label directory not found'):
        ArtifactRepository.require_dir(tmp_path / 'missing', 'soft label')
    with pytest.raises(DataError, match='model file not found'):
        ArtifactRepository.require_file(tmp_path / 'x.params', 'model')


def test_stage_lifecycle():
    manager = RunManager()
    assert manager.status('train') is RunStatus.PENDING
    result = manager.run_stage('train', lambda: ['models/a.params'])
    assert result.status is RunStatus.COMPLETED
    assert result.artifacts == ['models/a.params']

    def broken():
        raise DataError("no soft label files")

    with pytest.raises(DataError):
        manager.run_stage('aggregate', broken)
    assert manager.status('aggregate') is RunStatus.FAILED
    assert [r.stage for r in manager.results()] == ['train', 'aggregate']
    assert manager.results()[1].message == "no soft label files"


def test_map_keeps_input_order_across_threads():
    def work(i):
        return i * i

    assert RunManager(workers=4).map(work, list(range(50))) == [i * i for i in range(50)]
    assert RunManager(workers=1).map(work, [3]) == [9]


def test_split_by_recording():
    names = [f"rec_{i}" for i in range(10)]
    train, test = split_recordings(names, 0.2, seed=5)
    assert len(test) == 2 and len(train) == 8
    assert not set(train) & set(test)
    assert train == sorted(train)
    assert split_recordings(list(reversed(names)), 0.2, seed=5) == (train, test)


@pytest.mark.parametrize('count, fraction, n_test', [(1, 0.2, 0), (2, 0.2, 1), (5, 0.0, 0), (5, 0.9, 4)])
def test_split_sizes(count, fraction, n_test):
    _, test = split_recordings([f"r{i}" for i in range(count)], fraction, seed=0)
    assert len(test) == n_test


def test_vocabulary_resolution(tmp_path):
    assert resolve_vocabulary(PipelineConfig()).scene == 'residential_area'
    custom = PipelineConfig(simulator={'classes': ['x', 'y']})
    assert resolve_vocabulary(custom).classes == ('x', 'y')
    path = tmp_path / 'vocab.yaml'
    path.write_text("scenes:\n  cafe: [cups, chairs]\n", encoding='utf-8')
    from_file = PipelineConfig(paths={'vocabulary_file': str(path)}, simulator={'scene': 'cafe'})
    assert resolve_vocabulary(from_file).classes == ('cups', 'chairs')
