"""Offline grid search for the throughput-maximising threshold."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import eta_analytic
from .config import ModulationSpec, QPSK

TABLE_HEADER = ("snr_db", "mu", "tau_o", "eta")
DEFAULT_GRID = (0.0, 4.0, 0.001)


def tau_grid(start: float = 0.0, stop: float = 4.0, step: float = 0.001) -> np.ndarray:
    """Inclusive grid ``start, start+step, ..., <= stop``; a zero step gives ``[start]``."""
    if step < 0:
        raise ValueError("grid step must not be negative")
    if stop < start:
        raise ValueError("grid stop must not precede start")
    n = 1 if stop == start or step == 0 else int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def optimize_tau(snr_db: float, mu: int, mod: ModulationSpec = QPSK, frame_bits: int = 1024,
                 grid=None) -> tuple[float, float]:
    """``argmax_tau eta``; ties go to the smallest threshold."""
    taus = tau_grid(*DEFAULT_GRID) if grid is None else np.asarray(grid, dtype=float)
    if taus.size == 0:
        raise ValueError("empty tau grid")
    eta = np.atleast_1d(eta_analytic(snr_db, taus, mu, frame_bits, mod))
    i = int(np.argmax(eta))
    return float(taus[i]), float(eta[i])


@dataclass
class TauTable:
    rows: list = field(default_factory=list)  # (snr_db, mu, tau_o, eta)

    def add(self, snr_db, mu, tau_o, eta):
        self.rows.append((float(snr_db), int(mu), float(tau_o), float(eta)))

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: (r[0], r[1]))

    def lookup(self, snr_db: float, mu: int) -> float:
        for s, m, t, _ in self.rows:
            if m == mu and math.isclose(s, snr_db, abs_tol=1e-9):
                return t
        raise KeyError(f"no tau_o for snr={snr_db} dB, mu={mu}")

    def column(self, mu: int):
        rows = sorted((r for r in self.rows if r[1] == mu), key=lambda r: r[0])
        return np.array([r[0] for r in rows]), np.array([r[2] for r in rows])

    def check_trend(self):
        """Warn where tau_o grows with SNR for a fixed mu."""
        for mu in sorted({r[1] for r in self.rows}):
            snr, tau = self.column(mu)
            bad = np.flatnonzero(np.diff(tau) > 0)
            if bad.size:
                warnings.warn(f"tau_o increases with SNR for mu={mu} at "
                              f"{', '.join(f'{snr[i + 1]:g} dB' for i in bad)}", stacklevel=2)

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        return isinstance(other, TauTable) and self.sorted_rows() == other.sorted_rows()


def build_table(snrs, mus, mod: ModulationSpec = QPSK, frame_bits: int = 1024, grid=None) -> TauTable:
    tt = TauTable()
    for mu in mus:
        for snr in snrs:
            tt.add(snr, mu, *optimize_tau(snr, mu, mod, frame_bits, grid))
    return tt


def emit_table(tt: TauTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for s, m, t, e in tt.sorted_rows():
        w.writerow((repr(s), m, repr(t), repr(e)))
    return buf.getvalue()


def parse_table(text: str) -> TauTable:
    rows = list(csv.reader(line for line in io.StringIO(text) if not line.startswith("#")))
    if not rows or tuple(rows[0]) != TABLE_HEADER:
        raise ValueError(f"tau table must start with header {','.join(TABLE_HEADER)}")
    tt = TauTable()
    for r in rows[1:]:
        if r:
            tt.add(float(r[0]), int(r[1]), float(r[2]), float(r[3]))
    return tt


def load_table(path) -> TauTable:
    return parse_table(Path(path).read_text())


def resolve_tau(policy, snr_db: float, mu: int) -> float:
    """A scalar policy is returned as is; a :class:`TauTable` is looked up."""
    if isinstance(policy, TauTable):
        return policy.lookup(snr_db, mu)
    return float(policy)
