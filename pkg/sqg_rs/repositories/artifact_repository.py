"""实验产物仓储：JSON / CSV / KRN1 二进制（并发安全）"""

import asyncio
import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..api import logger

KRN1_MAGIC = "KRN1"

CSV_HEADERS: Dict[str, Tuple[str, ...]] = {
    "moments": ("lambda", "mean_sq", "stderr", "n"),
    "convergence": ("eps", "diff_norm", "alpha", "t_star"),
}


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, "to_dict"):
        return _to_jsonable(value.to_dict())
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def krn1_bytes(values: np.ndarray, mu: float) -> bytes:
    """`KRN1 <nt> <nx> <ny> <mu>` 头行 + 小端 float64 行优先数据"""
    array = np.asarray(values, dtype=float)
    if array.ndim == 2:
        array = array[None]
    if array.ndim != 3:
        raise ValueError(f"KRN1 只接受二维或三维数组，收到形状 {array.shape}")
    nt, nx, ny = array.shape
    header = f"{KRN1_MAGIC} {nt} {nx} {ny} {mu!r}\n".encode("ascii")
    return header + np.ascontiguousarray(array, dtype="<f8").tobytes(order="C")


def read_krn1(path: Path) -> Tuple[np.ndarray, float]:
    with open(path, "rb") as file:
        header = file.readline().decode("ascii").split()
        payload = file.read()
    if len(header) != 5 or header[0] != KRN1_MAGIC:
        raise ValueError(f"不是 KRN1 文件：{path}")
    nt, nx, ny = (int(v) for v in header[1:4])
    values = np.frombuffer(payload, dtype="<f8")
    if values.size != nt * nx * ny:
        raise ValueError(f"KRN1 数据长度 {values.size} 与头部 {nt}×{nx}×{ny} 不符")
    return values.reshape(nt, nx, ny), float(header[4])


class ArtifactRepository:
    """输出目录下的产物写入；所有路径限制在目录内"""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._lock = asyncio.Lock()
        self._written: List[str] = []

    @property
    def written(self) -> List[str]:
        return list(self._written)

    def resolve(self, name: str) -> Path:
        path = (self.out_dir / name).resolve()
        root = self.out_dir.resolve()
        if root != path and root not in path.parents:
            raise ValueError(f"产物路径越出输出目录：{name}")
        return path

    async def write_json(self, name: str, payload: Any) -> Path:
        text = json.dumps(_to_jsonable(payload), ensure_ascii=False, indent=2, sort_keys=True)
        return await self._store(name, text.encode("utf-8"))

    async def write_csv(self, name: str, kind: str, rows: Sequence[Sequence[Any]]) -> Path:
        if kind not in CSV_HEADERS:
            raise ValueError(f"未知 CSV 类型：{kind}，可选 {sorted(CSV_HEADERS)}")
        header = CSV_HEADERS[kind]
        lines = [",".join(header)]
        for row in rows:
            values = [row[h] for h in header] if isinstance(row, dict) else list(row)
            if len(values) != len(header):
                raise ValueError(f"CSV 行长度 {len(values)} 与表头 {header} 不符")
            lines.append(",".join(str(v) for v in values))
        return await self._store(name, ("\n".join(lines) + "\n").encode("utf-8"))

    async def write_krn1(self, name: str, values: np.ndarray, mu: float) -> Path:
        return await self._store(name, krn1_bytes(values, mu))

    async def _store(self, name: str, data: bytes) -> Path:
        path = self.resolve(name)
        async with self._lock:
            await asyncio.to_thread(self._write_file, path, data)
            if name not in self._written:
                self._written.append(name)
        logger.debug(f"已写入产物 {name}（{len(data)} 字节）")
        return path

    def _write_file(self, path: Path, data: bytes):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as file:
            file.write(data)

    def read_json(self, name: str) -> Any:
        with open(self.resolve(name), "r", encoding="utf-8") as file:
            return json.load(file)

    def read_csv(self, name: str) -> List[Dict[str, str]]:
        with open(self.resolve(name), "r", encoding="utf-8", newline="") as file:
            return list(csv.DictReader(file))
