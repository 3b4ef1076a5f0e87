"""Rayleigh block-fading BPSK channel, min-sum decoding and Monte Carlo BLER.

SNR convention: ``gamma = Es/N0`` per transmitted BPSK symbol with
``E|h|^2 = 1``.  Bit ``i`` in block ``m`` sees ``y = h_m s_i + n`` with
``n ~ CN(0, N0)`` and gets the coherent LLR ``4 Re(conj(h_m) y) / N0``.

Every batch of codewords draws from its own stream keyed by
``(seed, point_index, batch_index)``, and batches are reduced in index order,
so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .mapping import BlockMapping
from .qclift import NOT_TRANSMITTED, LiftedCode, expand_mapping

LLR_CLIP = 1.0e6  # saturation magnitude for all decoder messages


@dataclass(frozen=True)
class ChannelConfig:
    num_blocks: int
    snr_db: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if self.num_blocks < 1:
            raise ValueError("num_blocks must be >= 1")
        if not self.snr_db:
            raise ValueError("SNR grid is empty")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("SNR grid must be strictly increasing")


@dataclass(frozen=True)
class DecoderConfig:
    max_iters: int = 50
    early_stop: bool = True
    scaling: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.scaling <= 1:
            raise ValueError("scaling must be in (0, 1]")


@dataclass
class PointResult:
    snr_db: float
    trials: int
    block_errors: int
    info_bit_errors: int
    seed: int
    wall_time: float = 0.0
    info_bits: int = 0

    @property
    def bler(self) -> float:
        return self.block_errors / self.trials if self.trials else float("nan")

    @property
    def ber(self) -> float:
        return self.info_bit_errors / self.info_bits if self.info_bits else float("nan")

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        """Normal-approximation 95% interval for the BLER."""
        p = self.bler
        half = z * math.sqrt(max(p * (1 - p), 0.0) / self.trials)
        return max(0.0, p - half), min(1.0, p + half)


@dataclass
class SimResult:
    points: list[PointResult] = field(default_factory=list)

    CSV_HEADER = "snr_db,trials,block_errors,bler,ci_low,ci_high,seed"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for p in self.points:
            lo, hi = p.interval()
            lines.append(f"{p.snr_db:g},{p.trials},{p.block_errors},{p.bler:.6e},{lo:.6e},{hi:.6e},{p.seed}")
        return "\n".join(lines) + "\n"

    @property
    def bler(self) -> list[float]:
        return [p.bler for p in self.points]


# ---------------------------------------------------------------------------
# channel

def draw_fading(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def transmit(codeword, block_of_bit, snr_db: float, rng: np.random.Generator, num_blocks: int,
             fading: np.ndarray | None = None) -> np.ndarray:
    """Channel LLRs for one codeword or a batch (leading axis).

    ``fading`` overrides the drawn coefficients (shape ``(..., num_blocks)``).
    Punctured bits (``block_of_bit == NOT_TRANSMITTED``) get LLR 0.
    """
    c = np.asarray(codeword, dtype=np.uint8)
    blocks = np.asarray(block_of_bit)
    batch_shape = c.shape[:-1]
    n0 = 10.0 ** (-snr_db / 10.0)
    h = draw_fading(rng, batch_shape + (num_blocks,))
    if fading is not None:
        h = np.broadcast_to(np.asarray(fading, dtype=complex), h.shape)
    noise = (rng.standard_normal(c.shape) + 1j * rng.standard_normal(c.shape)) * math.sqrt(n0 / 2.0)
    tx = blocks != NOT_TRANSMITTED
    hb = h[..., np.where(tx, blocks, 0)]
    s = 1.0 - 2.0 * c
    y = hb * s + noise
    llr = 4.0 * np.real(np.conj(hb) * y) / n0
    return np.where(tx, llr, 0.0)


# ---------------------------------------------------------------------------
# decoder

def min_sum_decode_batch(code: LiftedCode, llr: np.ndarray, dcfg: DecoderConfig = DecoderConfig(), backend=None):
    kern = backend or _backend.kernels
    llr = np.ascontiguousarray(np.atleast_2d(llr), dtype=np.float64)
    B = llr.shape[0]
    hard = np.zeros((B, code.n_cols), dtype=np.uint8)
    iters = np.zeros(B, dtype=np.int32)
    conv = np.zeros(B, dtype=np.uint8)
    kern.min_sum_decode_batch(code.row_ptr, code.edge_col, llr, dcfg.max_iters, dcfg.early_stop,
                              dcfg.scaling, LLR_CLIP, hard, iters, conv)
    return hard, iters, conv.astype(bool)


def min_sum_decode(code: LiftedCode, llr, dcfg: DecoderConfig = DecoderConfig(), backend=None):
    """Decode one LLR vector; returns ``(hard_bits, iterations_used, converged)``."""
    hard, iters, conv = min_sum_decode_batch(code, np.asarray(llr, dtype=np.float64)[None, :], dcfg, backend)
    return hard[0], int(iters[0]), bool(conv[0])


# ---------------------------------------------------------------------------
# Monte Carlo

def batch_rng(seed: int, point: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(point, batch))))


def _simulate_batch(code, blocks, ccfg, dcfg, snr_db, n, rng, random_data, fading, backend):
    if random_data:
        info = rng.integers(0, 2, size=(n, code.K), dtype=np.uint8)
        words = code.encode(info)
    else:
        words = np.zeros((n, code.n_cols), dtype=np.uint8)
    llr = transmit(words, blocks, snr_db, rng, ccfg.num_blocks, fading)
    hard, _, _ = min_sum_decode_batch(code, llr, dcfg, backend)
    wrong = hard[:, : code.K] != words[:, : code.K]
    bit_err = wrong.sum(axis=1)
    return int((bit_err > 0).sum()), int(bit_err.sum())


def run_bler(code: LiftedCode, mapping: BlockMapping, ccfg: ChannelConfig, dcfg: DecoderConfig = DecoderConfig(),
             trials_per_point: int = 10_000, seed: int = 0, stop_at_errors: int | None = None, *,
             batch_size: int = 500, workers: int = 1, random_data: bool = False,
             fading: Sequence[complex] | None = None, backend=None, progress=None) -> SimResult:
    """BLER/BER per SNR point.

    A block error is any wrong information bit.  Simulation at a point stops
    after ``trials_per_point`` codewords or, at batch granularity, once
    ``stop_at_errors`` block errors have been seen.
    """
    if trials_per_point < 1:
        raise ValueError("trials_per_point must be >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    blocks = expand_mapping(mapping, code.Z)
    if len(blocks) != code.n_cols:
        raise ValueError("mapping does not match the lifted code")
    n_batches = -(-trials_per_point // batch_size)
    result = SimResult()
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for p_idx, snr in enumerate(ccfg.snr_db):
            t0 = time.perf_counter()
            trials = errors = bit_errors = 0
            b = 0
            done = False
            while b < n_batches and not done:
                wave = range(b, min(n_batches, b + max(1, workers)))
                jobs = []
                for bi in wave:
                    n = min(batch_size, trials_per_point - bi * batch_size)
                    args = (code, blocks, ccfg, dcfg, snr, n, batch_rng(seed, p_idx, bi), random_data, fading, backend)
                    jobs.append((n, pool.submit(_simulate_batch, *args) if pool else args))
                for n, job in jobs:
                    be, bits = job.result() if pool else _simulate_batch(*job)
                    trials += n
                    errors += be
                    bit_errors += bits
                    b += 1
                    if stop_at_errors is not None and errors >= stop_at_errors:
                        done = True
                        break
            point = PointResult(snr, trials, errors, bit_errors, seed, time.perf_counter() - t0, trials * code.K)
            result.points.append(point)
            if progress:
                progress(point)
    finally:
        if pool:
            pool.shutdown()
    return result


def estimate_diversity_slope(points: SimResult | Sequence[PointResult], min_errors: int = 100) -> float:
    """Least-squares slope of ``-log10(BLER)`` against ``log10(gamma)``."""
    pts = list(points.points if isinstance(points, SimResult) else points)
    if len(pts) < 2:
        raise ValueError("need at least two SNR points")
    short = [p.snr_db for p in pts if p.block_errors < min_errors]
    if short:
        raise ValueError(f"fewer than {min_errors} block errors at SNR {short}")
    x = np.array([p.snr_db / 10.0 for p in pts])
    y = -np.log10([p.bler for p in pts])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
