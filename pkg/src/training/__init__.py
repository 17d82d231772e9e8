"""
Training - 前馈多标签分类器及其训练
"""

from .network import (
    Layer,
    ModelParams,
    init_params,
    forward,
    loss,
    gradients,
    fold_standardization,
)
from .optimizer import Adam
from .trainer import (
    SegmentDataset,
    TrainRun,
    ScoreTrack,
    build_dataset,
    targets_for_setup,
    train,
    predict,
    serialize_scores,
    parse_scores,
)
from .gradcheck import finite_difference_gradients, max_relative_error, check_gradients
from .param_io import save_params, load_params, encode_params, decode_params

__all__ = [
    'Layer',
    'ModelParams',
    'init_params',
    'forward',
    'loss',
    'gradients',
    'fold_standardization',
    'Adam',
    'SegmentDataset',
    'TrainRun',
    'ScoreTrack',
    'build_dataset',
    'targets_for_setup',
    'train',
    'predict',
    'serialize_scores',
    'parse_scores',
    'finite_difference_gradients',
    'max_relative_error',
    'check_gradients',
    'save_params',
    'load_params',
    'encode_params',
    'decode_params',
]
