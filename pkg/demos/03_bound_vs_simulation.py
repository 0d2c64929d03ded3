"""
Bound against Monte Carlo
=========================

With independent subcarrier gains the simulated link matches the
assumptions behind the closed forms, so simulated BER should sit a little
below the bound and simulated throughput a little above the lower bound.
"""

from ccsr.analysis import ber_analytic
from ccsr.config import ProtocolConfig
from ccsr.optimizer import optimize_tau
from ccsr.sim import run_point

FRAMES = 2000

print(" mu  snr   tau_o    BER_m      BER_a     eta_m   eta_a")
for mu in (1, 2):
    for snr in (4.0, 8.0, 12.0):
        tau, eta_a = optimize_tau(snr, mu)
        cfg = ProtocolConfig(mu=mu, tau=tau, snr_db=snr, channel_mode="iid")
        r = run_point(cfg, "ccsr", FRAMES)
        print(f"{mu:3d} {snr:4.0f}  {tau:6.3f}  {r.ber:9.2e}  {ber_analytic(snr, tau, mu):9.2e}"
              f"  {r.eta:6.4f}  {eta_a:6.4f}")
