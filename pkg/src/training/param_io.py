"""
Param IO - 模型参数二进制文件

格式（小端）:
    magic(4s) | head(uint8) | 保留(3x) | n_layers(uint32) | dims(uint32 × (n_layers + 1))
    之后为 float64，按声明顺序: W_1（行优先）, b_1, W_2, b_2, ...
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..core.errors import DataError
from ..core.setups import Head
from .network import Layer, ModelParams

PARAMS_MAGIC = b'SSNN'
_HEAD_TAGS = {Head.SIGMOID: 0, Head.LINEAR: 1}
_PREFIX = struct.Struct('<4sB3xI')


def encode_params(params: ModelParams) -> bytes:
    dims = params.dims
    header = _PREFIX.pack(PARAMS_MAGIC, _HEAD_TAGS[params.head], len(params.layers))
    header += struct.pack(f'<{len(dims)}I', *dims)
    body = b''.join(np.ascontiguousarray(a, dtype='<f8').tobytes() for a in params.arrays())
    return header + body


def decode_params(blob: bytes, source: str = '<bytes>') -> ModelParams:
    """
    Raises:
        DataError: magic、输出层标记或数据长度不正确
    """
    if len(blob) < _PREFIX.size:
        raise DataError(f"{source}: truncated parameter header")
    magic, head_tag, n_layers = _PREFIX.unpack_from(blob)
    if magic != PARAMS_MAGIC:
        raise DataError(f"{source}: bad parameter file magic {magic!r}")
    heads = {tag: head for head, tag in _HEAD_TAGS.items()}
    if head_tag not in heads:
        raise DataError(f"{source}: unknown head tag {head_tag}")
    offset = _PREFIX.size
    dims_format = f'<{n_layers + 1}I'
    if len(blob) < offset + struct.calcsize(dims_format):
        raise DataError(f"{source}: truncated layer dimensions")
    dims = struct.unpack_from(dims_format, blob, offset)
    offset += struct.calcsize(dims_format)

    expected = sum(i * o + o for i, o in zip(dims[:-1], dims[1:])) * 8
    if len(blob) - offset != expected:
        raise DataError(f"{source}: expected {expected} bytes of parameters, got {len(blob) - offset}")
    values = np.frombuffer(blob, dtype='<f8', offset=offset).astype(np.float64)
    layers, position = [], 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights = values[position:position + fan_in * fan_out].reshape(fan_in, fan_out)
        position += fan_in * fan_out
        bias = values[position:position + fan_out]
        position += fan_out
        layers.append(Layer(weights.copy(), bias.copy()))
    return ModelParams(layers, heads[head_tag])


def save_params(path: Union[str, Path], params: ModelParams) -> None:
    Path(path).write_bytes(encode_params(params))


def load_params(path: Union[str, Path]) -> ModelParams:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read model file {path}: {e.strerror or e}") from e
    return decode_params(blob, source=str(path))
