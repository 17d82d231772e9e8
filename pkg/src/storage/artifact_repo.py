"""
Artifact Repository - 流水线产物的读写

每个文本产物以一行来源注释开头:
    # softsed config=<hash> seed=<seed> kind=<kind> [key=value ...]
二进制产物（特征、模型参数）无法内嵌注释，改为写一个同名的 .prov 旁注文件。
"""

import logging
from pathlib import Path
from typing import Callable, List, Mapping, Optional, Union

from ..core.errors import DataError

logger = logging.getLogger(__name__)

PROVENANCE_SUFFIX = '.prov'


class ArtifactRepository:
    """产物仓库"""

    def __init__(self, config_hash: str, seed: int):
        self.config_hash = config_hash
        self.seed = seed

    def header(self, kind: str, extra: Optional[Mapping[str, object]] = None) -> str:
        """来源注释行（含换行符）"""
        fields = [f"config={self.config_hash}", f"seed={self.seed}", f"kind={kind}"]
        fields.extend(f"{key}={value}" for key, value in (extra or {}).items() if value is not None)
        return f"# softsed {' '.join(fields)}\n"

    def write_text(
        self,
        path: Union[str, Path],
        kind: str,
        content: str,
        extra: Optional[Mapping[str, object]] = None,
    ) -> Path:
        """写出带来源注释的文本产物"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(self.header(kind, extra))
            f.write(content)
        logger.debug(f"Wrote {kind} artifact {path}")
        return path

    def write_binary(
        self,
        path: Union[str, Path],
        kind: str,
        writer: Callable[[Path], None],
        extra: Optional[Mapping[str, object]] = None,
    ) -> Path:
        """调用 writer 写出二进制产物，并写出 .prov 旁注文件"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(path)
        provenance = path.with_name(path.name + PROVENANCE_SUFFIX)
        provenance.write_text(self.header(kind, extra), encoding='utf-8')
        logger.debug(f"Wrote {kind} artifact {path}")
        return path

    @staticmethod
    def require_dir(path: Union[str, Path], what: str) -> Path:
        """
        Raises:
            DataError: 目录不存在
        """
        path = Path(path)
        if not path.is_dir():
            raise DataError(f"{what} directory not found: {path}")
        return path

    @staticmethod
    def require_file(path: Union[str, Path], what: str) -> Path:
        """
        Raises:
            DataError: 文件不存在
        """
        path = Path(path)
        if not path.is_file():
            raise DataError(f"{what} file not found: {path}")
        return path

    @staticmethod
    def list(directory: Union[str, Path], suffix: str) -> List[Path]:
        """按文件名排序列出目录中指定后缀的文件"""
        directory = Path(directory)
        if not directory.is_dir():
            return []
        return sorted(p for p in directory.iterdir() if p.is_file() and p.name.endswith(suffix))

    @staticmethod
    def recordings(directory: Union[str, Path], suffix: str) -> List[str]:
        """目录中的录音 ID（去掉后缀的文件名）"""
        return [p.name[:-len(suffix)] for p in ArtifactRepository.list(directory, suffix)]
