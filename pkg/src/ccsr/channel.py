"""Rayleigh block-fading channel realisations in the subcarrier domain."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NoiseSpec, ProtocolConfig


@dataclass(frozen=True)
class TapChannel:
    taps: np.ndarray

    @property
    def n_taps(self) -> int:
        return len(self.taps)


@dataclass(frozen=True)
class SubcarrierChannel:
    """Gains ``H`` of one transmission event; ``event`` is e.g. ``(round, 'full')``."""

    gains: np.ndarray
    event: tuple = ()

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.gains) ** 2

    def __len__(self):
        return len(self.gains)


def crandn(rng: np.random.Generator, n: int, var: float = 1.0) -> np.ndarray:
    """``n`` circular complex Gaussians with total variance ``var``."""
    z = rng.standard_normal((n, 2)) * np.sqrt(var / 2.0)
    return z[:, 0] + 1j * z[:, 1]


def draw_taps(n_taps: int, rng: np.random.Generator) -> TapChannel:
    """Uniform power-delay profile, total expected power 1."""
    return TapChannel(crandn(rng, n_taps, 1.0 / n_taps))


def taps_to_gains(taps: TapChannel, n_subcarriers: int) -> np.ndarray:
    # unnormalised DFT of the zero-padded taps: sum of L terms of variance 1/L
    return np.fft.fft(taps.taps, n_subcarriers)


def draw_channel(cfg: ProtocolConfig, rng: np.random.Generator, event: tuple = ()) -> SubcarrierChannel:
    """Fresh channel for one OFDM symbol; every H(l) is marginally CN(0, 1).

    ``cfg.channel_mode == 'taps'`` builds the gains from ``cfg.n_taps`` taps,
    so they are correlated across subcarriers; ``'iid'`` draws independent gains.
    """
    if cfg.channel_mode == "iid":
        gains = crandn(rng, cfg.n_subcarriers)
    else:
        gains = taps_to_gains(draw_taps(cfg.n_taps, rng), cfg.n_subcarriers)
    return SubcarrierChannel(gains, event)


def apply_channel(H, s: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """``y = H * s + w`` with ``w ~ CN(0, n0)`` elementwise."""
    gains = H.gains if isinstance(H, SubcarrierChannel) else np.asarray(H)
    s = np.asarray(s)
    if gains.shape != s.shape:
        raise ValueError(f"channel length {gains.shape} does not match symbols {s.shape}")
    return gains * s + crandn(rng, s.size, noise.n0).reshape(s.shape)
