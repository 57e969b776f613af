"""Reproducible Gaussian noise addressed by (seed, label, sample).

Every (seed, label, sample) triple owns an independent Philox stream, keyed
through numpy's SeedSequence.  Within a stream, step m and mode k always
occupy the same position (draws are consumed K complex numbers per step, in
step order), so a draw is determined by (seed, label, sample, step, mode)
and never by how samples are distributed over workers.

Labels 0..LEVEL_LABEL_MAX are the noise slices of the levels; the named
labels below cover the remainder slice and auxiliary independent fields.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

LEVEL_LABEL_MAX = 9_999
REMAINDER_LABEL = 10_000
DIRECT_LABEL = 10_001
AUX_LABEL = 20_000          # AUX_LABEL + j for auxiliary fields

_DEFAULT_CHUNK = 256


def _check_u64(value, name):
    value = int(value)
    if not 0 <= value < 2 ** 64:
        raise ConfigurationError(f"{name} must fit in an unsigned 64-bit integer")
    return value


class NoiseStream:
    """Standard complex Gaussians (E|xi|^2 = 1) for one (seed, label, sample)."""

    def __init__(self, seed: int, label: int, sample: int = 0):
        self.seed = _check_u64(seed, "seed")
        self.label = int(label)
        self.sample = int(sample)
        if self.label < 0 or self.sample < 0:
            raise ConfigurationError("labels and sample indices are nonnegative")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.label, self.sample))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self.steps_drawn = 0

    @property
    def stream_id(self):
        return (self.label, self.sample, self.steps_drawn)

    def draw(self, n_steps: int, K: int) -> np.ndarray:
        """The next n_steps x K complex normals.

        Drawing in one call or step by step gives identical numbers.
        """
        raw = self._gen.standard_normal((n_steps, K, 2))
        self.steps_drawn += n_steps
        return (raw[..., 0] + 1j * raw[..., 1]) * np.sqrt(0.5)


class NoiseBank:
    """Batched access: one NoiseStream per sample, buffered in chunks of steps.

    `refine = r` returns, per call, the exact combination of r consecutive
    fine-step Ornstein-Uhlenbeck increments (fine step dt / r) normalized to a
    standard normal for the coarse step.  Runs at dt, dt/2, dt/4 built on
    banks with refine 4, 2, 1 therefore see the same underlying noise path.
    """

    def __init__(self, seed, label, samples, K: int, dt: float | None = None,
                 refine: int = 1, chunk: int | None = None):
        self.streams = [NoiseStream(seed, label, s) for s in samples]
        self.K = int(K)
        self.refine = int(refine)
        if self.refine < 1:
            raise ConfigurationError("refine must be a positive integer")
        if self.refine > 1:
            if dt is None:
                raise ConfigurationError("refined noise needs the coarse step dt")
            k2 = np.arange(1, K + 1, dtype=float) ** 2
            h = dt / self.refine
            decay = np.exp(-k2 * h)
            fine_sd = np.sqrt(-np.expm1(-2 * k2 * h) / (2 * k2))
            coarse_sd = np.sqrt(-np.expm1(-2 * k2 * dt) / (2 * k2))
            # weight of fine increment j (0-based) inside one coarse step
            self._weights = np.array([decay ** (self.refine - 1 - j) * fine_sd / coarse_sd
                                      for j in range(self.refine)])
        if chunk is None:
            # keep the buffer around a few tens of MB whatever the batch shape
            chunk = min(_DEFAULT_CHUNK, max(1, 2_000_000 // max(1, len(self.streams) * self.K)))
        self.chunk = max(int(chunk) // self.refine, 1) * self.refine
        self._buf = None
        self._pos = 0

    def __len__(self):
        return len(self.streams)

    def _fill(self):
        self._buf = np.stack([s.draw(self.chunk, self.K) for s in self.streams], axis=1)
        self._pos = 0

    def next(self) -> np.ndarray:
        """Standard complex normals for the next step, shape (samples, K)."""
        if self._buf is None or self._pos >= self._buf.shape[0]:
            self._fill()
        r = self.refine
        block = self._buf[self._pos:self._pos + r]
        self._pos += r
        if r == 1:
            return block[0]
        return np.einsum("jbk,jk->bk", block, self._weights)
