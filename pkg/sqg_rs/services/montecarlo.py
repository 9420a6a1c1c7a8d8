"""并发 Monte Carlo 执行器（按块切分、按块序归约）"""

import asyncio
from typing import Callable, List, Sequence, Tuple

import numpy as np

from ..api import logger
from ..models.records import MomentRow

ChunkFn = Callable[[np.random.Generator, int], np.ndarray]
BlockFn = Callable[[int, int], np.ndarray]


def make_generator(seed: int, *key: int) -> np.random.Generator:
    """由 (seed, key...) 派生的 Philox 计数器型生成器"""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


class MonteCarloRunner:
    """把 n 个独立实现切成块并发计算

    第 i 块使用 spawn_key = (*stream, i) 的独立随机流，结果按块序拼接，
    因此统计量与调度顺序和并发度无关。
    """

    def __init__(self, seed: int, chunk_size: int = 256, max_workers: int = 4):
        if chunk_size < 1:
            raise ValueError(f"块大小必须为正，收到 {chunk_size}")
        if max_workers < 1:
            raise ValueError(f"并发数必须为正，收到 {max_workers}")
        self.seed = int(seed)
        self.chunk_size = int(chunk_size)
        self.max_workers = int(max_workers)

    def chunks(self, n_samples: int) -> List[Tuple[int, int]]:
        bounds = []
        start = 0
        index = 0
        while start < n_samples:
            count = min(self.chunk_size, n_samples - start)
            bounds.append((index, count))
            start += count
            index += 1
        return bounds

    def _run_chunk(self, fn: ChunkFn, stream: Sequence[int], index: int, count: int) -> np.ndarray:
        rng = make_generator(self.seed, *stream, index)
        return np.asarray(fn(rng, count))

    def _run_block(self, fn: BlockFn, index: int, count: int) -> np.ndarray:
        return np.asarray(fn(index * self.chunk_size, count))

    async def _gather(self, call: Callable[[int, int], np.ndarray], n_samples: int) -> np.ndarray:
        if n_samples < 1:
            raise ValueError(f"样本数必须为正，收到 {n_samples}")
        semaphore = asyncio.Semaphore(self.max_workers)

        async def worker(index: int, count: int) -> np.ndarray:
            async with semaphore:
                return await asyncio.to_thread(call, index, count)

        parts = await asyncio.gather(*(worker(index, count) for index, count in self.chunks(n_samples)))
        logger.debug(f"Monte Carlo 完成：{n_samples} 个样本，{len(parts)} 块")
        return np.concatenate(parts, axis=0)

    def _gather_sync(self, call: Callable[[int, int], np.ndarray], n_samples: int) -> np.ndarray:
        """已在事件循环线程内时顺序执行各块（结果相同）"""
        try:
            asyncio.get_running_loop()
        except RuntimeError:
            return asyncio.run(self._gather(call, n_samples))
        if n_samples < 1:
            raise ValueError(f"样本数必须为正，收到 {n_samples}")
        return np.concatenate([call(index, count) for index, count in self.chunks(n_samples)], axis=0)

    async def run(self, fn: ChunkFn, n_samples: int, stream: Sequence[int] = ()) -> np.ndarray:
        return await self._gather(lambda index, count: self._run_chunk(fn, stream, index, count), n_samples)

    def run_sync(self, fn: ChunkFn, n_samples: int, stream: Sequence[int] = ()) -> np.ndarray:
        return self._gather_sync(lambda index, count: self._run_chunk(fn, stream, index, count), n_samples)

    def run_blocks(self, fn: BlockFn, n_samples: int) -> np.ndarray:
        """按实现编号切块：fn(起始编号, 数量) 自行由编号派生随机流，例如 sample(seed, grid, r)"""
        return self._gather_sync(lambda index, count: self._run_block(fn, index, count), n_samples)


def moment_row(scale: float, samples: np.ndarray) -> MomentRow:
    """由样本计算二阶矩及其标准误"""
    samples = np.asarray(samples, dtype=float)
    squares = samples ** 2
    n = squares.size
    stderr = float(np.std(squares, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return MomentRow(scale=float(scale), mean_sq=float(np.mean(squares)), stderr=stderr, n=int(n),
                     mean=float(np.mean(samples)))


def power_warnings(rows: Sequence[MomentRow], threshold: float = 0.2, label: str = "") -> List[str]:
    """标准误超过均值一定比例时给出统计功效告警"""
    warnings: List[str] = []
    for row in rows:
        if row.mean_sq > 0 and row.stderr > threshold * row.mean_sq:
            message = f"{label} λ={row.scale:.4g} 处标准误 {row.stderr:.3g} 超过均值的 {threshold:.0%}"
            logger.warning(message)
            warnings.append(message)
    return warnings

