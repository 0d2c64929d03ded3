"""
LDPC-coded HARQ
===============

One (648, 324) codeword per frame on 324 subcarriers.  There is no closed
form for the coded threshold, so it is picked by a short simulated search
on one seed and then evaluated on another.
"""

from ccsr.sim import SweepSpec, run_point, tune_tau_mc

GRID = (0.0, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0)

for snr in (-4.0, 0.0, 4.0):
    tau, _ = tune_tau_mc(SweepSpec(fec=True, base_seed=1), snr, 1, GRID, frames=40)
    cfg = SweepSpec(fec=True, base_seed=2).config(snr, 1, "ccsr").replace(tau=tau)
    s = run_point(cfg, "ccsr", 150)
    c = run_point(cfg.replace(tau=0.0), "cc", 150)
    print(f"{snr:5.1f} dB  tau {tau:3.1f}  eta CCSR {s.eta:.3f}  eta CC {c.eta:.3f}  "
          f"BER CCSR {s.ber:.2e}  BER CC {c.ber:.2e}")
