"""Experiment orchestration: configuration, commands, manifests and acceptance checks."""

from .config import ConfigError, load_config
from .manifest import RunManifest, load_manifest, verify_manifest

__all__ = ["ConfigError", "RunManifest", "load_config", "load_manifest", "verify_manifest"]
