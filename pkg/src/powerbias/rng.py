"""Counter-based random streams and reproducible chunked sampling.

A stream is a Philox-4x64 generator keyed by ``(seed, stream_id)``; distinct
keys give independent streams and no generator state is ever shared between
threads. :func:`parallel_sample` assigns stream ``i`` to chunk ``i``, so its
output depends on ``(dist, seed, n, chunks)`` but never on the worker count.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


def _check_u64(name: str, value: int) -> int:
    value = int(value)
    if not 0 <= value <= _MASK64:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


@dataclass
class RngStream:
    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.seed = _check_u64("seed", self.seed)
        self.stream_id = _check_u64("stream_id", self.stream_id)
        self.generator = np.random.Generator(np.random.Philox(key=[self.seed, self.stream_id]))

    @property
    def counter(self) -> int:
        """Philox block counter (number of 4x64-bit blocks consumed)."""
        words = self.generator.bit_generator.state["state"]["counter"]
        return sum(int(w) << (64 * i) for i, w in enumerate(words))

    def uniform(self, n: int) -> np.ndarray:
        return self.generator.random(n)


def stream(seed: int, stream_id: int = 0) -> RngStream:
    """Fresh stream with its counter at zero."""
    return RngStream(seed, stream_id)


def derive_seed(seed: int, *labels: object) -> int:
    """Stable 64-bit sub-seed for a labelled purpose (platform independent)."""
    text = ":".join([str(int(seed)), *map(str, labels)])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass(eq=False)
class SampleBatch:
    dist: object
    seed: int
    stream_id: int
    values: np.ndarray
    chunks: int = 1

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def chunk_sizes(n: int, chunks: int) -> list[int]:
    base, extra = divmod(n, chunks)
    return [base + (i < extra) for i in range(chunks)]


def parallel_sample(d, seed: int, n: int, chunks: int, workers: int | None = None) -> SampleBatch:
    """Draw ``n`` values of ``d`` as ``chunks`` independent substreams.

    Chunk ``i`` uses ``stream(seed, i)``; results are concatenated in chunk
    order. ``workers`` only sets the thread pool size.
    """
    from powerbias.dist import SamplingError, sample

    if chunks < 1:
        raise ValueError(f"chunks must be >= 1, got {chunks}")
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    sizes = chunk_sizes(n, chunks)

    def run(i: int) -> np.ndarray:
        if sizes[i] == 0:
            return np.empty(0)
        try:
            return sample(d, stream(seed, i), sizes[i]).values
        except Exception as exc:
            raise SamplingError(f"chunk {i} of {chunks} failed: {exc}") from exc

    workers = workers or min(chunks, os.cpu_count() or 1)
    if workers == 1:
        parts = [run(i) for i in range(chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(chunks)))
    return SampleBatch(dist=d, seed=seed, stream_id=0, values=np.concatenate(parts), chunks=chunks)
