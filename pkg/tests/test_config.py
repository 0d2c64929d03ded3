import itertools

import numpy as np
import pytest

from ccsr.config import (ConfigError, ModulationSpec, ProtocolConfig, QPSK, dump_config, load_config,
                         make_rng, parse_config_text, snr_to_n0)


@pytest.mark.parametrize("snr, rate, n0", [(0, 1.0, 0.5), (10, 1.0, 0.05), (0, 0.5, 1.0)])
def test_snr_to_n0_examples(snr, rate, n0):
    assert snr_to_n0(snr, QPSK, rate).n0 == pytest.approx(n0, rel=1e-12)


def test_snr_to_n0_rejects_nonfinite():
    with pytest.raises(ConfigError):
        snr_to_n0(float("nan"))
    with pytest.raises(ConfigError):
        snr_to_n0(3.0, QPSK, 0.0)


def test_qpsk_constants():
    assert (QPSK.bits_per_symbol, QPSK.g, QPSK.c) == (2, 2.0, 1.0)


def test_16qam_constants():
    m = ModulationSpec(16)
    assert m.bits_per_symbol == 4
    assert m.g == pytest.approx(0.8)
    assert m.c == pytest.approx(0.75)


@pytest.mark.parametrize("M", [4, 16, 64])
def test_unit_energy(M):
    assert abs(np.mean(np.abs(ModulationSpec(M).points) ** 2) - 1) < 1e-12


@pytest.mark.parametrize("M", [4, 16])
def test_gray_neighbours_differ_in_one_bit(M):
    mod = ModulationSpec(M)
    pts, lab = mod.points, mod.labels
    dmin = min(abs(a - b) for a, b in itertools.combinations(pts, 2))
    for i, j in itertools.combinations(range(M), 2):
        if abs(abs(pts[i] - pts[j]) - dmin) < 1e-9:
            assert np.sum(lab[i] != lab[j]) == 1


def test_qpsk_zero_label_is_first_quadrant():
    assert QPSK.points[0] == pytest.approx((1 + 1j) / np.sqrt(2))
    assert list(QPSK.labels[0]) == [0, 0]


@pytest.mark.parametrize("M", [2, 8, 32])
def test_non_square_qam_rejected(M):
    with pytest.raises(ConfigError):
        ModulationSpec(M)


def test_make_rng_streams():
    a = make_rng(7, 0).random(100)
    assert np.array_equal(a, make_rng(7, 0).random(100))
    assert not np.array_equal(a, make_rng(7, 1).random(100))
    assert np.array_equal(make_rng(7, (3, 4)).random(5), make_rng(7, (3, 4)).random(5))


def test_protocol_config_validation():
    with pytest.raises(ConfigError):
        ProtocolConfig(mu=0)
    with pytest.raises(ConfigError):
        ProtocolConfig(tau=-1)
    with pytest.raises(ConfigError):
        ProtocolConfig(n_taps=600)
    with pytest.raises(ConfigError):
        ProtocolConfig(fec_enabled=True)          # 512 subcarriers is not one codeword
    with pytest.raises(ConfigError):
        ProtocolConfig(frame_bits=1000)
    with pytest.raises(ConfigError):
        ProtocolConfig(channel_mode="awgn")


def test_payload_sizes():
    assert ProtocolConfig().payload_bits == 1024
    fec = ProtocolConfig(fec_enabled=True, n_subcarriers=324)
    assert (fec.coded_bits, fec.payload_bits, fec.code_rate) == (648, 324, 0.5)


def test_config_file_round_trip(tmp_path):
    cfg = ProtocolConfig(mu=3, tau=0.25, snr_db=7.5, channel_mode="iid", seed=11)
    path = tmp_path / "c.cfg"
    path.write_text("# comment\n" + dump_config(cfg))
    assert load_config(path) == cfg
    assert load_config(path, mu=2).mu == 2


def test_config_file_errors():
    with pytest.raises(ConfigError):
        parse_config_text("bogus = 1")
    with pytest.raises(ConfigError):
        parse_config_text("mu 3")
    with pytest.raises(ConfigError):
        parse_config_text("mu = three")
