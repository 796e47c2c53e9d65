"""cli package"""
from .commands import build_parser, corpus_stats, gradcheck_model, main, staged_dir
from .manifest import CONFIG_NAME, MANIFEST_NAME, RunManifest, sha256_file

__all__ = [
    "main", "build_parser", "corpus_stats", "gradcheck_model", "staged_dir",
    "RunManifest", "sha256_file", "MANIFEST_NAME", "CONFIG_NAME",
]
