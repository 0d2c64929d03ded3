import warnings

import numpy as np
import pytest

from ccsr.analysis import eta_analytic
from ccsr.optimizer import (TauTable, build_table, emit_table, optimize_tau, parse_table, resolve_tau,
                            tau_grid)


def test_grid_shapes():
    g = tau_grid(0, 1, 0.25)
    assert list(g) == [0, 0.25, 0.5, 0.75, 1.0]
    assert list(tau_grid(0, 1, 0)) == [0.0]
    assert tau_grid(0, 4, 0.001).size == 4001
    assert tau_grid(0, 4, 0.001)[699] == 0.699
    with pytest.raises(ValueError):
        tau_grid(1, 0, 0.1)
    with pytest.raises(ValueError):
        tau_grid(0, 1, -0.1)


def test_argmax_on_grid():
    grid = tau_grid(0, 2, 0.01)
    tau, eta = optimize_tau(10.0, 2, grid=grid)
    assert eta == pytest.approx(np.max(eta_analytic(10.0, grid, 2, 1024)))
    assert eta >= eta_analytic(10.0, 0.0, 2, 1024)
    assert tau in grid


def test_single_point_grid():
    assert optimize_tau(8.0, 1, grid=[0.0])[0] == 0.0


def test_ties_go_to_smallest():
    # far below any useful SNR every threshold gives zero throughput
    assert optimize_tau(-60.0, 1, grid=tau_grid(0, 1, 0.5))[0] == 0.0


def test_mu1_threshold_shrinks_with_snr():
    snr = np.arange(2.0, 22.0, 2.0)
    tau = [optimize_tau(s, 1)[0] for s in snr]
    assert np.all(np.diff(tau) <= 0)


def test_table_round_trip_and_lookup():
    tt = build_table([4.0, 8.0], [1, 2], grid=tau_grid(0, 2, 0.01))
    back = parse_table("# generated\n" + emit_table(tt))
    assert back == tt
    assert resolve_tau(back, 8.0, 2) == tt.lookup(8.0, 2)
    assert resolve_tau(0.3, 8.0, 2) == 0.3
    with pytest.raises(KeyError):
        tt.lookup(5.0, 1)


def test_parse_rejects_bad_header():
    with pytest.raises(ValueError):
        parse_table("a,b\n1,2\n")


def test_trend_warning():
    tt = TauTable()
    tt.add(4, 1, 0.5, 0.1)
    tt.add(6, 1, 0.7, 0.2)
    with pytest.warns(UserWarning, match="6 dB"):
        tt.check_trend()
    ok = TauTable()
    ok.add(4, 1, 0.5, 0.1)
    ok.add(6, 1, 0.4, 0.2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ok.check_trend()
