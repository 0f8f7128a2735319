"""Micro-benchmark: naive windowed counting against the integral-image
path, with output checksums compared before any timing is reported."""

import json
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import accel
from .errors import DomainError, InputError
from .labelgen import DirectionOffsets, gen_surrounding_maps, surrounding_maps_bruteforce


@dataclass
class BenchCase:
    size: int
    mu: int
    naive_ms: float
    fast_ms: float
    speedup: float
    checksum: int


@dataclass
class BenchReport:
    backend: str
    repetitions: int
    seed: int
    cases: list = field(default_factory=list)
    parallel: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "backend": self.backend,
                "repetitions": self.repetitions,
                "seed": self.seed,
                "cases": [vars(c) for c in self.cases],
                "parallel": self.parallel,
            },
            indent=1,
        )


def _median_ms(fn, repetitions: int) -> float:
    fn()  # one discarded warm-up run
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return float(np.median(times))


def run_bench(sizes, mus, repetitions: int = 5, seed: int = 0, parallel_workers: int = 0) -> BenchReport:
    """Time naive vs integral-image surrounding-map generation.

    Checksums of both outputs must agree on every case before the timing is
    trusted; a mismatch is a hard failure.
    """
    if repetitions < 3:
        raise DomainError(f"repetitions must be >= 3, got {repetitions}")
    rng = np.random.default_rng(seed)
    report = BenchReport(backend=accel.backend_name(), repetitions=repetitions, seed=seed)
    for size in sizes:
        for mu in mus:
            if mu < 1 or mu % 2 == 0:
                raise DomainError(f"mu must be odd and >= 1, got {mu}")
            mask = (rng.random((size, size)) < 0.2).astype(np.uint8)
            offs = DirectionOffsets.for_window(mu)
            fast = gen_surrounding_maps(mask, mu, offs)
            naive = surrounding_maps_bruteforce(mask, mu, offs)
            fast_sum = zlib.crc32(np.ascontiguousarray(fast).tobytes())
            naive_sum = zlib.crc32(np.ascontiguousarray(naive).tobytes())
            if fast_sum != naive_sum:
                raise InputError(
                    f"checksum mismatch at size={size} mu={mu}: fast and naive outputs differ"
                )
            naive_ms = _median_ms(lambda: surrounding_maps_bruteforce(mask, mu, offs), repetitions)
            fast_ms = _median_ms(lambda: gen_surrounding_maps(mask, mu, offs), repetitions)
            report.cases.append(
                BenchCase(
                    size=size,
                    mu=mu,
                    naive_ms=naive_ms,
                    fast_ms=fast_ms,
                    speedup=naive_ms / fast_ms if fast_ms > 0 else float("inf"),
                    checksum=int(fast_sum),
                )
            )
    if parallel_workers > 0:
        report.parallel = _parallel_bench(sizes, mus, repetitions, seed, parallel_workers)
    return report


def _parallel_bench(sizes, mus, repetitions, seed, workers) -> dict:
    """Fast-path throughput with images processed across a thread pool."""
    rng = np.random.default_rng(seed)
    size, mu = max(sizes), max(mus)
    batch = [(rng.random((size, size)) < 0.2).astype(np.uint8) for _ in range(workers * 4)]
    offs = DirectionOffsets.for_window(mu)

    def run_all():
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda m: gen_surrounding_maps(m, mu, offs), batch))

    total_ms = _median_ms(run_all, repetitions)
    return {
        "workers": workers,
        "images": len(batch),
        "size": size,
        "mu": mu,
        "ms_per_image": total_ms / len(batch),
    }
