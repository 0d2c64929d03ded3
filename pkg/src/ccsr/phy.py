"""Modulation, maximal-ratio (Chase) combining and bit LLRs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ModulationSpec, NoiseSpec, QPSK


class DegenerateChannelError(ValueError):
    """A symbol's stacked channel has zero norm; it is erased (zero LLRs)."""


def modulate(bits, mod: ModulationSpec = QPSK) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = mod.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} is not a multiple of {k}")
    idx = bits.reshape(-1, k) @ (1 << np.arange(k - 1, -1, -1))
    return mod.points[idx]


def nearest_points(z: np.ndarray, mod: ModulationSpec = QPSK) -> np.ndarray:
    """Index of the closest constellation point (brute force over all M)."""
    z = np.asarray(z)
    return np.argmin(np.abs(z[..., None] - mod.points) ** 2, axis=-1)


def demodulate_hard(z, mod: ModulationSpec = QPSK) -> np.ndarray:
    return mod.labels[nearest_points(z, mod)].ravel()


def maxlog_llrs(z: np.ndarray, noise_var: np.ndarray, mod: ModulationSpec = QPSK) -> np.ndarray:
    """Per-bit ``log P(b=0)/P(b=1)`` under the max-log metric; shape (N, log2 M).

    For Gray 4-QAM the two hypotheses of each bit differ in one dimension
    only, so max-log coincides with the exact LLR ``2*sqrt(2)*Re/Im(z)/noise_var``.
    """
    z = np.atleast_1d(np.asarray(z))
    noise_var = np.broadcast_to(np.asarray(noise_var, dtype=float), z.shape)
    d = np.abs(z[:, None] - mod.points[None, :]) ** 2
    k = mod.bits_per_symbol
    out = np.empty((z.size, k))
    for b in range(k):
        one = mod.labels[:, b].astype(bool)
        out[:, b] = d[:, one].min(axis=1) - d[:, ~one].min(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = out / noise_var[:, None]
    out[~np.isfinite(noise_var)] = 0.0
    return out


@dataclass(frozen=True)
class SoftSymbol:
    """Combined estimate(s), effective noise variance ``n0/||H||^2`` and bit LLRs."""

    estimate: np.ndarray
    noise_var: np.ndarray
    llrs: np.ndarray


def soft_from_sums(num: np.ndarray, den: np.ndarray, n0: float, mod: ModulationSpec = QPSK) -> SoftSymbol:
    """MRC from accumulated ``sum(conj(H) y)`` and ``sum(|H|^2)`` per symbol.

    Symbols with zero channel norm are erased: estimate 0, infinite noise, zero LLRs.
    """
    num = np.atleast_1d(num)
    den = np.atleast_1d(np.asarray(den, dtype=float))
    ok = den > 0
    est = np.zeros_like(num, dtype=complex)
    est[ok] = num[ok] / den[ok]
    var = np.full(den.shape, np.inf)
    var[ok] = n0 / den[ok]
    return SoftSymbol(est, var, maxlog_llrs(est, var, mod))


def combine(y_stack, h_stack, noise: NoiseSpec, mod: ModulationSpec = QPSK, strict: bool = False) -> SoftSymbol:
    """Joint detection of one symbol from its stacked observations.

    ``s_hat = H^H y / ||H||^2``; a single observation is plain equalisation.
    With ``strict=True`` a zero-norm stack raises :class:`DegenerateChannelError`
    instead of returning an erasure.
    """
    y = np.atleast_1d(np.asarray(y_stack, dtype=complex))
    h = np.atleast_1d(np.asarray(h_stack, dtype=complex))
    if y.shape != h.shape or y.size == 0:
        raise ValueError("observation and gain stacks must be non-empty and equally long")
    den = float(np.sum(np.abs(h) ** 2))
    if den == 0 and strict:
        raise DegenerateChannelError("zero channel norm")
    return soft_from_sums(np.sum(np.conj(h) * y), den, noise.n0, mod)


def hard_decide(soft: SoftSymbol) -> np.ndarray:
    """Bit 0 where the LLR is non-negative, else 1 (positive LLR favours 0)."""
    return (np.asarray(soft.llrs) < 0).astype(np.int8).ravel()


@dataclass
class ObservationBuffer:
    """Per-subcarrier stacks of observations and gains across rounds.

    Each transmission event is stored as ``(indices, gains, observations)``;
    running MRC sums are kept alongside so combining is O(N_s).
    """

    n_subcarriers: int
    events: list = field(default_factory=list)

    def __post_init__(self):
        self._num = np.zeros(self.n_subcarriers, dtype=complex)
        self._den = np.zeros(self.n_subcarriers)

    def add(self, indices, gains, obs):
        indices = np.asarray(indices, dtype=np.intp)
        gains = np.asarray(gains)
        obs = np.asarray(obs)
        if not (len(indices) == len(gains) == len(obs)):
            raise ValueError("indices, gains and observations differ in length")
        if len(np.unique(indices)) != len(indices):
            raise ValueError("an event may carry each subcarrier at most once")
        self.events.append((indices, gains, obs))
        self._num[indices] += np.conj(gains) * obs
        self._den[indices] += np.abs(gains) ** 2

    def add_full(self, gains, obs):
        self.add(np.arange(self.n_subcarriers), gains, obs)

    @property
    def count(self) -> int:
        return sum(len(e[0]) for e in self.events)

    def stack(self, l: int) -> tuple[np.ndarray, np.ndarray]:
        """(observations, gains) stacked for subcarrier ``l`` in arrival order."""
        ys, hs = [], []
        for idx, h, y in self.events:
            hit = np.flatnonzero(idx == l)
            if hit.size:
                ys.append(y[hit[0]])
                hs.append(h[hit[0]])
        return np.array(ys, dtype=complex), np.array(hs, dtype=complex)

    def depth(self) -> np.ndarray:
        d = np.zeros(self.n_subcarriers, dtype=np.int64)
        for idx, _, _ in self.events:
            d[idx] += 1
        return d

    def channel_norms(self) -> np.ndarray:
        return self._den.copy()

    def soft(self, noise: NoiseSpec, mod: ModulationSpec = QPSK) -> SoftSymbol:
        return soft_from_sums(self._num, self._den, noise.n0, mod)

    def clear(self):
        self.events.clear()
        self._num[:] = 0
        self._den[:] = 0

    def __len__(self):
        return self.count
