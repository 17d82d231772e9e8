"""
Vocabulary - 场景类别词表与数据集统计

默认词表为 5 个声学场景，每个场景 6 个类别。DATASET_STATISTICS 记录了公开
数据集硬标签中的事件实例数、文件数和总时长（分钟），用于核对解析结果。
"""

import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, Mapping, Union

import yaml

from ..core.errors import DataError
from ..core.label_models import ClassVocabulary, HardLabelEvents

logger = logging.getLogger(__name__)


DEFAULT_VOCABULARIES: Dict[str, ClassVocabulary] = {
    vocab.scene: vocab for vocab in (
        ClassVocabulary('cafe_restaurant', (
            'children voices', 'coffee machine', 'cutlery/dishes',
            'footsteps', 'furniture dragging', 'people talking',
        )),
        ClassVocabulary('city_center', (
            'brakes squeaking', 'car', 'children voices',
            'footsteps', 'large vehicle', 'people talking',
        )),
        ClassVocabulary('grocery_store', (
            'announcement', 'cash register', 'children voices',
            'footsteps', 'people talking', 'shopping cart',
        )),
        ClassVocabulary('metro_station', (
            'children voices', 'door opens/closes', 'footsteps',
            'metro approaching', 'metro leaving', 'people talking',
        )),
        ClassVocabulary('residential_area', (
            'birds singing', 'car', 'children voices',
            'footsteps', 'people talking', 'wind blowing',
        )),
    )
}


# 每个场景: 类别 -> 硬标签事件实例数, 以及文件数和总时长（分钟）
DATASET_STATISTICS: Dict[str, Dict[str, object]] = {
    'cafe_restaurant': {
        'instances': {'children voices': 27, 'coffee machine': 8, 'cutlery/dishes': 71,
                      'footsteps': 6, 'furniture dragging': 3, 'people talking': 48},
        'files': 15, 'minutes': 56.91,
    },
    'city_center': {
        'instances': {'brakes squeaking': 37, 'car': 92, 'children voices': 4,
                      'footsteps': 62, 'large vehicle': 117, 'people talking': 49},
        'files': 15, 'minutes': 61.47,
    },
    'grocery_store': {
        'instances': {'announcement': 0, 'cash register': 0, 'children voices': 6,
                      'footsteps': 27, 'people talking': 61, 'shopping cart': 5},
        'files': 14, 'minutes': 49.53,
    },
    'metro_station': {
        'instances': {'children voices': 9, 'door opens/closes': 4, 'footsteps': 116,
                      'metro approaching': 92, 'metro leaving': 99, 'people talking': 129},
        'files': 14, 'minutes': 59.21,
    },
    'residential_area': {
        'instances': {'birds singing': 60, 'car': 76, 'children voices': 10,
                      'footsteps': 26, 'people talking': 20, 'wind blowing': 38},
        'files': 17, 'minutes': 59.82,
    },
}


def get_vocabulary(scene: str, vocabularies: Mapping[str, ClassVocabulary] = None) -> ClassVocabulary:
    """按场景获取词表"""
    vocabularies = vocabularies if vocabularies is not None else DEFAULT_VOCABULARIES
    try:
        return vocabularies[scene]
    except KeyError:
        raise DataError(f"unknown scene '{scene}'; known scenes: {sorted(vocabularies)}") from None


def load_vocabularies(path: Union[str, Path]) -> Dict[str, ClassVocabulary]:
    """
    从 YAML 文件加载词表

    文件格式:
        scenes:
          residential_area: [birds singing, car, ...]
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
    except (OSError, UnicodeDecodeError, yaml.YAMLError) as e:
        raise DataError(f"cannot read vocabulary file {path}: {e}") from e
    scenes = data.get('scenes') if isinstance(data, dict) else None
    if not isinstance(scenes, dict) or not scenes:
        raise DataError(f"vocabulary file {path} must define a non-empty 'scenes' mapping")
    vocabularies = {}
    for scene, classes in scenes.items():
        if not isinstance(classes, list):
            raise DataError(f"classes of scene '{scene}' must be a list")
        vocabularies[str(scene)] = ClassVocabulary(str(scene), tuple(str(c) for c in classes))
    return vocabularies


def merged_vocabulary(vocabularies: Iterable[ClassVocabulary], scene: str = 'all') -> ClassVocabulary:
    """多个场景词表的并集（保持首次出现的顺序）"""
    classes = []
    for vocab in vocabularies:
        for name in vocab.classes:
            if name not in classes:
                classes.append(name)
    return ClassVocabulary(scene, tuple(classes))


def count_instances(
    events_by_recording: Mapping[str, HardLabelEvents],
    scene_of: Mapping[str, str],
) -> Dict[str, Dict[str, object]]:
    """
    统计每个场景的事件实例数和文件数

    Args:
        events_by_recording: 录音 ID -> 硬标签事件
        scene_of: 录音 ID -> 场景

    Returns:
        与 DATASET_STATISTICS 相同结构（不含时长）
    """
    stats: Dict[str, Dict[str, object]] = {}
    for recording, events in events_by_recording.items():
        scene = scene_of[recording]
        entry = stats.setdefault(scene, {'instances': Counter(), 'files': 0})
        entry['files'] += 1
        entry['instances'].update(events.labels())
    for entry in stats.values():
        entry['instances'] = dict(entry['instances'])
    return stats


def total_instances(stats: Mapping[str, Mapping[str, object]]) -> Dict[str, int]:
    """跨场景按类别汇总实例数"""
    totals: Counter = Counter()
    for entry in stats.values():
        totals.update(entry['instances'])
    return dict(totals)
