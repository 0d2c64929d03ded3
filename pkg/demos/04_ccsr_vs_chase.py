"""
Selective retransmission against plain Chase combining
======================================================

Both schemes see the same channel and noise draws (frames share random
streams by SNR and round count), so the throughput gap is the effect of
the threshold alone.  The physical 10-tap channel is used here.
"""

from ccsr.optimizer import build_table
from ccsr.sim import SweepSpec, run_sweep

snrs = (0.0, 4.0, 8.0, 12.0, 16.0)
mus = (1, 2)
table = build_table(snrs, mus)
spec = dict(snrs=snrs, mus=mus, frames=1500)
cc = run_sweep(SweepSpec(schemes=("cc",), **spec))
ccsr = run_sweep(SweepSpec(schemes=("ccsr",), tau_policy=table, **spec))

print(" mu  snr   eta CC   eta CCSR   tau")
for a, b in zip(cc, ccsr):
    print(f"{a.mu:3d} {a.snr_db:4.0f}   {a.eta:6.4f}   {b.eta:6.4f}   {b.tau:.3f}")
