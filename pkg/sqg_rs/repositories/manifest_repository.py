"""运行清单：配置哈希、种子、依赖版本与产物校验和"""

import asyncio
import hashlib
import json
import platform
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import scipy
import sympy

from ..api import ManifestMismatch, logger

MANIFEST_NAME = "manifest.json"


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for block in iter(lambda: file.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def runtime_versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sympy": sympy.__version__,
    }


def _flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in data.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            flat.update(_flatten(value, name))
        else:
            flat[name] = value
    return flat


class ManifestRepository:
    """输出目录中的 manifest.json"""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self._lock = asyncio.Lock()

    @property
    def manifest_file(self) -> Path:
        return self.out_dir / MANIFEST_NAME

    async def write(self, command: str, config: Dict[str, Any], config_hash: str, seed: int,
                    artifacts: List[str]) -> Dict[str, Any]:
        async with self._lock:
            checksums = {}
            for name in sorted(set(artifacts)):
                checksums[name] = await asyncio.to_thread(file_digest, self.out_dir / name)
            payload = {
                "command": command,
                "config": config,
                "config_hash": config_hash,
                "seed": int(seed),
                "versions": runtime_versions(),
                "artifacts": checksums,
            }
            await asyncio.to_thread(self._write_file, payload)
        logger.info(f"已写入清单：{len(checksums)} 个产物")
        return payload

    def _write_file(self, payload: Dict[str, Any]):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(self.manifest_file, "w", encoding="utf-8") as file:
            json.dump(payload, file, ensure_ascii=False, indent=2, sort_keys=True)

    def load(self) -> Dict[str, Any]:
        if not self.manifest_file.exists():
            raise ManifestMismatch(f"清单不存在：{self.manifest_file}")
        try:
            with open(self.manifest_file, "r", encoding="utf-8") as file:
                return json.load(file)
        except json.JSONDecodeError as e:
            raise ManifestMismatch(f"清单无法解析：{e}") from e

    def verify(self, manifest: Optional[Dict[str, Any]] = None) -> Dict[str, List[str]]:
        """逐个比对产物校验和，返回缺失与损坏的产物名"""
        manifest = manifest or self.load()
        missing, corrupt = [], []
        for name, expected in manifest.get("artifacts", {}).items():
            path = self.out_dir / name
            if not path.exists():
                missing.append(name)
            elif file_digest(path) != expected:
                corrupt.append(name)
        if missing or corrupt:
            logger.warning(f"清单校验失败：缺失 {missing}，损坏 {corrupt}")
        return {"missing": missing, "corrupt": corrupt}

    def compare(self, other: "ManifestRepository") -> Dict[str, Any]:
        """与另一次运行比较：种子、配置的键级差异与同名产物校验和"""
        mine, theirs = self.load(), other.load()
        left, right = _flatten(mine.get("config", {})), _flatten(theirs.get("config", {}))
        config_diff = {
            key: [left.get(key), right.get(key)]
            for key in sorted(set(left) | set(right))
            if left.get(key) != right.get(key)
        }
        shared = sorted(set(mine.get("artifacts", {})) & set(theirs.get("artifacts", {})))
        differing = [name for name in shared if mine["artifacts"][name] != theirs["artifacts"][name]]
        return {
            "seed_mismatch": mine.get("seed") != theirs.get("seed"),
            "config_diff": config_diff,
            "artifact_diff": differing,
            "identical": not config_diff and not differing and mine.get("seed") == theirs.get("seed"),
        }
