"""Run manifests: config hash, seeds, timings and checksums of every artifact."""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

MANIFEST_NAME = "manifest.json"


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    tool_version: str
    wall_time: float
    seeds: dict
    outputs: dict
    config: dict = field(default_factory=dict)
    criteria: dict = field(default_factory=dict)
    status: str = "ok"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(**d)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


@contextmanager
def staging(out_dir):
    """Directory for a run's files; on success every file is moved into ``out_dir`` by rename.

    Readers never see a half-written artifact: files appear only once complete.
    On failure the staging directory is removed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(dir=out_dir, prefix=".staging-"))
    try:
        yield stage
        for p in sorted(stage.rglob("*")):
            if p.is_file():
                dest = out_dir / p.relative_to(stage)
                dest.parent.mkdir(parents=True, exist_ok=True)
                os.replace(p, dest)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def inventory(out_dir, names) -> dict:
    out_dir = Path(out_dir)
    return {n: sha256_file(out_dir / n) for n in sorted(names)}


def write_manifest(manifest: RunManifest, out_dir) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    atomic_write_text(path, json.dumps(manifest.to_dict(), indent=2, default=float))
    return path


def load_manifest(path) -> RunManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    return RunManifest.from_dict(json.loads(path.read_text()))


@dataclass
class VerifyResult:
    ok: bool
    missing: list
    mismatched: list

    def __bool__(self):
        return self.ok


def verify_manifest(manifest, out_dir=None) -> VerifyResult:
    """Recompute every listed checksum; reports missing and changed files by name."""
    if not isinstance(manifest, RunManifest):
        path = Path(manifest)
        out_dir = out_dir or (path if path.is_dir() else path.parent)
        manifest = load_manifest(path)
    out_dir = Path(out_dir)
    missing, bad = [], []
    for name, digest in manifest.outputs.items():
        p = out_dir / name
        if not p.exists():
            missing.append(name)
        elif sha256_file(p) != digest:
            bad.append(name)
    return VerifyResult(not missing and not bad, missing, bad)
