"""Shared configuration, modulation constants and random-stream derivation.

Noise convention
----------------
Symbols have unit average energy and every channel coefficient has unit
variance, so one symbol carries ``E_s = code_rate * log2(M) * E_b``.  For a
requested ``E_b/N_0`` the per-symbol noise power is therefore::

    n0 = 1 / (code_rate * log2(M) * 10**(snr_db / 10))

The analytical bounds express the same noise relative to the bit energy
(``n0 / E_b = 10**(-snr_db / 10)``), which is the normalisation their
``c`` and ``g`` constants assume.  Both numbers come from :func:`snr_to_n0`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration values."""


def _gray_pam(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gray-labelled 2**k-PAM levels, ordered from most positive to most negative."""
    n = 1 << k
    pos = np.arange(n)
    labels = pos ^ (pos >> 1)
    levels = (n - 1 - 2 * pos).astype(float)
    return labels, levels


@dataclass(frozen=True)
class ModulationSpec:
    """Square Gray-mapped M-QAM with unit average energy.

    ``c`` and ``g`` are the nearest-neighbour BER constants in
    ``P_b ~ c * Q(sqrt(g * |H|^2 * E_b / N_0))``; for 4-QAM c = 1, g = 2.
    Bit labels put the in-phase bits first (MSB first), then the quadrature bits.
    """

    M: int = 4

    def __post_init__(self):
        k = int(round(math.log2(self.M))) if self.M > 1 else 0
        if self.M < 4 or (1 << k) != self.M or k % 2:
            raise ConfigError(f"M must be a power of 4, got {self.M}")

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.M)))

    @property
    def c(self) -> float:
        return 4.0 / self.bits_per_symbol * (1.0 - 1.0 / math.sqrt(self.M))

    @property
    def g(self) -> float:
        return 3.0 * self.bits_per_symbol / (self.M - 1)

    @cached_property
    def points(self) -> np.ndarray:
        """Constellation points indexed by integer label."""
        half = self.bits_per_symbol // 2
        labels, levels = _gray_pam(half)
        amp = np.empty(1 << half)
        amp[labels] = levels
        idx = np.arange(self.M)
        i_lab, q_lab = idx >> half, idx & ((1 << half) - 1)
        pts = amp[i_lab] + 1j * amp[q_lab]
        return pts / math.sqrt(2.0 * (self.M - 1) / 3.0)

    @cached_property
    def labels(self) -> np.ndarray:
        """(M, bits_per_symbol) bit matrix; row i holds the bits of point i."""
        k = self.bits_per_symbol
        return ((np.arange(self.M)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.int8)


QPSK = ModulationSpec(4)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-symbol noise power plus the per-dimension channel variance."""

    n0: float
    sigma_sq: float = 0.5
    n0_per_bit: float = float("nan")

    def __post_init__(self):
        if not (np.isfinite(self.n0) and self.n0 > 0):
            raise ConfigError(f"n0 must be positive and finite, got {self.n0}")


def snr_to_n0(snr_db: float, mod: ModulationSpec = QPSK, code_rate: float = 1.0) -> NoiseSpec:
    """Convert ``E_b/N_0`` in dB to a :class:`NoiseSpec` (see module docstring)."""
    if not np.isfinite(snr_db):
        raise ConfigError(f"snr_db must be finite, got {snr_db}")
    if not 0 < code_rate <= 1:
        raise ConfigError(f"code_rate must lie in (0, 1], got {code_rate}")
    ebn0 = 10.0 ** (snr_db / 10.0)
    return NoiseSpec(n0=1.0 / (code_rate * mod.bits_per_symbol * ebn0), n0_per_bit=1.0 / ebn0)


def make_rng(seed: int, stream_id=0) -> np.random.Generator:
    """Deterministic generator for ``(seed, stream_id)``.

    ``stream_id`` may be an int or a tuple of ints (e.g. ``(point, frame)``);
    the stream depends only on these values, never on scheduling.
    """
    ids = tuple(stream_id) if isinstance(stream_id, (tuple, list)) else (stream_id,)
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(i) & 0xFFFFFFFFFFFFFFFF for i in ids]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


CHANNEL_MODES = ("taps", "iid")
CRC_MODES = ("genie", "crc24")


@dataclass(frozen=True)
class ProtocolConfig:
    """Link and protocol parameters for one simulation point.

    ``tau`` is the resolved scalar threshold; per-SNR tables are resolved
    by :func:`ccsr.optimizer.resolve_tau` before a config is built.
    In FEC mode one frame is one (648, 324) codeword, so ``n_subcarriers``
    must be 648 / log2(M).
    """

    mu: int = 1
    tau: float = 0.0
    n_subcarriers: int = 512
    n_taps: int = 10
    M: int = 4
    snr_db: float = 10.0
    fec_enabled: bool = False
    frame_bits: int | None = None
    seed: int = 0
    channel_mode: str = "taps"
    crc_mode: str = "genie"
    max_rounds: int = 1_000_000

    def __post_init__(self):
        if self.mu < 1:
            raise ConfigError("mu must be >= 1")
        if not 1 <= self.n_taps <= self.n_subcarriers:
            raise ConfigError("need 1 <= n_taps <= n_subcarriers")
        if not (self.tau >= 0):
            raise ConfigError("tau must be >= 0")
        if not np.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite")
        if self.channel_mode not in CHANNEL_MODES:
            raise ConfigError(f"channel_mode must be one of {CHANNEL_MODES}")
        if self.crc_mode not in CRC_MODES:
            raise ConfigError(f"crc_mode must be one of {CRC_MODES}")
        mod = ModulationSpec(self.M)
        coded = self.n_subcarriers * mod.bits_per_symbol
        if self.fec_enabled and coded != 648:
            raise ConfigError(f"FEC mode needs n_subcarriers * log2(M) = 648, got {coded}")
        if self.frame_bits is None:
            object.__setattr__(self, "frame_bits", self.payload_bits)
        elif self.frame_bits != self.payload_bits:
            raise ConfigError(
                f"frame_bits must equal one frame's payload ({self.payload_bits}), got {self.frame_bits}")

    @property
    def mod(self) -> ModulationSpec:
        return ModulationSpec(self.M)

    @property
    def code_rate(self) -> float:
        return 0.5 if self.fec_enabled else 1.0

    @property
    def coded_bits(self) -> int:
        return self.n_subcarriers * self.mod.bits_per_symbol

    @property
    def payload_bits(self) -> int:
        """Information bits per frame, before any CRC is carved out."""
        return self.coded_bits // 2 if self.fec_enabled else self.coded_bits

    @property
    def noise(self) -> NoiseSpec:
        return snr_to_n0(self.snr_db, self.mod, self.code_rate)

    def replace(self, **changes) -> "ProtocolConfig":
        if "n_subcarriers" in changes or "fec_enabled" in changes or "M" in changes:
            changes.setdefault("frame_bits", None)
        return replace(self, **changes)


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments allowed) into ProtocolConfig kwargs."""
    types = {f.name: f.type for f in fields(ProtocolConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        t = str(types[key])
        try:
            if "bool" in t:
                out[key] = _BOOL[value.lower()]
            elif key == "frame_bits":
                out[key] = None if value.lower() in ("", "none") else int(value)
            elif "int" in t:
                out[key] = int(value)
            elif "float" in t:
                out[key] = float(value)
            else:
                out[key] = value
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return out


def load_config(path: str | Path, **overrides) -> ProtocolConfig:
    kwargs = parse_config_text(Path(path).read_text())
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ProtocolConfig(**kwargs)


def dump_config(cfg: ProtocolConfig) -> str:
    lines = []
    for f in fields(ProtocolConfig):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"
