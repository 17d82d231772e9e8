"""
Storage - 产物文件仓库
"""

from .artifact_repo import ArtifactRepository, PROVENANCE_SUFFIX

__all__ = ['ArtifactRepository', 'PROVENANCE_SUFFIX']
