"""CCSR and Chase-combining state machines.

One *cycle* is up to ``mu`` MAC rounds on a single buffer.  Each round sends
the full frame on a fresh channel; under CCSR the symbols whose full-transmission
gain satisfies ``|H_J(l)|^2 < tau`` are sent once more on another fresh
channel before joint detection.  After a CRC pass, or after ``mu`` failed
rounds, the buffer is discarded; a failed cycle is restarted by the
(non-truncated) ARQ layer with the same payload.

Feedback is instantaneous, error free and costs no bits.

Trace lines, when a stream is passed, are tab separated::

    cycle  round  beta  observations  crc(pass|fail)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .channel import apply_channel, draw_channel
from .config import ProtocolConfig
from .phy import ObservationBuffer, hard_decide, modulate

CRC24_POLY = 0x864CFB  # CRC-24A (3GPP TS 36.212): x^24+x^23+x^18+x^17+x^14+x^11+x^10+x^7+x^6+x^5+x^4+x^3+x+1
CRC_LEN = 24


class RoundCapExceeded(RuntimeError):
    """The hard cap on MAC rounds per packet was hit."""


def crc24(bits) -> np.ndarray:
    reg = 0
    for b in np.asarray(bits, dtype=np.int64).ravel():
        top = ((reg >> 23) & 1) ^ int(b)
        reg = (reg << 1) & 0xFFFFFF
        if top:
            reg ^= CRC24_POLY
    return ((reg >> np.arange(23, -1, -1)) & 1).astype(np.int8)


def crc_attach(data) -> np.ndarray:
    data = np.asarray(data, dtype=np.int8).ravel()
    return np.concatenate([data, crc24(data)])


def crc_check(decided, truth=None, mode: str = "genie") -> bool:
    """``genie``: exact match with ``truth``.  ``crc24``: trailing 24 bits match the CRC of the rest."""
    decided = np.asarray(decided).ravel()
    if mode == "genie":
        truth = np.asarray(truth).ravel()
        if truth.shape != decided.shape:
            raise ValueError("decided and truth lengths differ")
        return bool(np.array_equal(decided, truth))
    if mode == "crc24":
        return bool(np.array_equal(crc24(decided[:-CRC_LEN]), decided[-CRC_LEN:]))
    raise ValueError(f"unknown CRC mode {mode!r}")


def select_retx(H, tau: float) -> np.ndarray:
    """Indices whose squared gain is strictly below ``tau``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    gains = getattr(H, "gains", H)
    return np.flatnonzero(np.abs(np.asarray(gains)) ** 2 < tau)


def make_payload(cfg: ProtocolConfig, rng: np.random.Generator) -> np.ndarray:
    """Random frame of ``cfg.payload_bits`` bits, CRC attached in crc24 mode."""
    if cfg.crc_mode == "crc24":
        return crc_attach(rng.integers(0, 2, cfg.payload_bits - CRC_LEN, dtype=np.int8))
    return rng.integers(0, 2, cfg.payload_bits, dtype=np.int8)


def data_bits(cfg: ProtocolConfig) -> int:
    """Information bits delivered per frame (payload minus any CRC)."""
    return cfg.payload_bits - (CRC_LEN if cfg.crc_mode == "crc24" else 0)


@dataclass
class RoundState:
    J: int
    buffer: ObservationBuffer
    pending_selective: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))
    beta_history: list = field(default_factory=list)


@dataclass
class CycleResult:
    """Outcome of one HARQ cycle (at most ``mu`` rounds on one buffer)."""

    delivered_round: int            # 0 if every executed round failed the CRC
    round_errors: np.ndarray        # per-round bit errors after detection/decoding; -1 if not run
    betas: list
    bits_transmitted: int           # channel bits up to delivery (or all mu rounds on failure)
    rounds_used: int

    @property
    def delivered(self) -> bool:
        return self.delivered_round > 0


@dataclass
class PacketOutcome:
    delivered: bool
    rounds_used: int
    bits_transmitted: int
    bit_errors_at_decision: int
    cycles: int = 1
    betas: list = field(default_factory=list)


def run_cycle(cfg: ProtocolConfig, frame, rng: np.random.Generator, selective: bool = True,
              probe: bool = False, code=None, trace: TextIO | None = None,
              cycle_index: int = 0) -> CycleResult:
    """Run one HARQ cycle for ``frame``.

    With ``probe=True`` all ``mu`` rounds are executed even after a CRC pass so
    that ``round_errors`` holds the unconditional per-round detection errors;
    the throughput accounting still stops at the first delivery.
    """
    mod, noise = cfg.mod, cfg.noise
    frame = np.asarray(frame, dtype=np.int8).ravel()
    if frame.size != cfg.payload_bits:
        raise ValueError(f"frame must hold {cfg.payload_bits} bits, got {frame.size}")
    if cfg.fec_enabled:
        if code is None:
            from .fec import default_code
            code = default_code()
        tx_bits = code.encode(frame)
    else:
        tx_bits = frame
    s = modulate(tx_bits, mod)
    ns, bps = cfg.n_subcarriers, mod.bits_per_symbol

    state = RoundState(J=0, buffer=ObservationBuffer(ns))
    errors = np.full(cfg.mu, -1, dtype=np.int64)
    delivered = 0
    bits_tx = 0
    for J in range(1, cfg.mu + 1):
        state.J = J
        H = draw_channel(cfg, rng, (J, "full"))
        state.buffer.add_full(H.gains, apply_channel(H, s, noise, rng))
        beta = 0
        if selective and cfg.tau > 0:
            state.pending_selective = select_retx(H, cfg.tau)
            beta = len(state.pending_selective)
            if beta:
                idx = state.pending_selective
                Hs = draw_channel(cfg, rng, (J, "selective")).gains[idx]
                state.buffer.add(idx, Hs, apply_channel(Hs, s[idx], noise, rng))
        state.beta_history.append(beta)
        expected = J * ns + sum(state.beta_history)
        if state.buffer.count != expected:
            raise AssertionError(f"observation ledger broken: {state.buffer.count} != {expected}")

        soft = state.buffer.soft(noise, mod)
        if cfg.fec_enabled:
            decided = code.decode(soft.llrs.ravel()).bits
        else:
            decided = hard_decide(soft)
        errors[J - 1] = int(np.count_nonzero(decided != frame))
        ok = crc_check(decided, frame, cfg.crc_mode)
        if not delivered:
            bits_tx += (ns + beta) * bps
        if trace is not None:
            trace.write(f"{cycle_index}\t{J}\t{beta}\t{state.buffer.count}\t{'pass' if ok else 'fail'}\n")
        if ok and not delivered:
            delivered = J
            if not probe:
                break
    rounds = delivered or cfg.mu
    state.buffer.clear()
    return CycleResult(delivered, errors, state.beta_history[:rounds], bits_tx, rounds)


def _run_packet(cfg, payload, rng, selective, code, trace) -> PacketOutcome:
    bits_tx = rounds = cycles = 0
    betas = []
    while True:
        res = run_cycle(cfg, payload, rng, selective=selective, code=code, trace=trace,
                        cycle_index=cycles)
        cycles += 1
        rounds += res.rounds_used
        bits_tx += res.bits_transmitted
        betas.extend(res.betas)
        if res.delivered:
            return PacketOutcome(True, rounds, bits_tx, int(res.round_errors[res.delivered_round - 1]),
                                 cycles, betas)
        if rounds >= cfg.max_rounds:
            raise RoundCapExceeded(f"packet not delivered after {rounds} MAC rounds "
                                   f"({cycles} ARQ cycles, snr={cfg.snr_db} dB, tau={cfg.tau})")


def run_packet_ccsr(cfg: ProtocolConfig, payload, rng, code=None, trace=None) -> PacketOutcome:
    """Deliver one payload with CCSR under non-truncated ARQ."""
    return _run_packet(cfg, payload, rng, True, code, trace)


def run_packet_cc(cfg: ProtocolConfig, payload, rng, code=None, trace=None) -> PacketOutcome:
    """Deliver one payload with plain Chase combining under non-truncated ARQ."""
    return _run_packet(cfg, payload, rng, False, code, trace)
