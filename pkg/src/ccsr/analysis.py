"""Closed-form BER upper bounds and the throughput lower bound for CCSR.

All bounds use the two-exponential Q-function surrogate
``Q(x) ~ exp(-x^2/2)/12 + exp(-2x^2/3)/4`` averaged over chi-square(2)
subcarrier powers, and are vectorised over ``tau``.  Setting ``tau = 0``
gives plain Chase combining.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .config import ModulationSpec, QPSK


class DivergenceError(ValueError):
    """Zero probability of ever delivering a frame."""


def q_chiani_terms(x):
    """The two exponentials whose sum approximates Q(x).

    Not an upper bound near zero: at x = 0 the sum is 1/3 while Q(0) = 1/2.
    """
    x = np.asarray(x, dtype=float)
    return np.exp(-x ** 2 / 2) / 12.0, np.exp(-2.0 * x ** 2 / 3.0) / 4.0


def q_chiani(x):
    a, b = q_chiani_terms(x)
    return a + b


@dataclass(frozen=True)
class BoundParams:
    """Bound constants for one SNR point.

    ``n0`` is the noise density relative to the bit energy, i.e.
    ``10**(-snr_db/10)``.
    """

    n0: float
    c: float = 1.0
    g: float = 2.0
    sigma_sq: float = 0.5

    @classmethod
    def from_snr(cls, snr_db: float, mod: ModulationSpec = QPSK) -> "BoundParams":
        return cls(n0=10.0 ** (-snr_db / 10.0), c=mod.c, g=mod.g)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    @property
    def g1(self) -> float:
        return 4.0 * self.g / 3.0

    @property
    def rho(self) -> float:
        return math.sqrt(self.sigma_sq * self.n0 / (self.g * self.sigma_sq + self.n0))

    @property
    def rho1(self) -> float:
        return math.sqrt(self.sigma_sq * self.n0 / (self.g1 * self.sigma_sq + self.n0))

    def ratios(self):
        """``(rho/sigma)^2`` and ``(rho1/sigma)^2``."""
        return self.rho ** 2 / self.sigma_sq, self.rho1 ** 2 / self.sigma_sq

    def tails(self, tau):
        """``exp(-tau / 2 rho^2)`` and ``exp(-tau / 2 rho1^2)``."""
        tau = np.asarray(tau, dtype=float)
        return np.exp(-tau / (2 * self.rho ** 2)), np.exp(-tau / (2 * self.rho1 ** 2))


def ber_bound_round1(bp: BoundParams, tau):
    r, r1 = bp.ratios()
    e, e1 = bp.tails(tau)
    c = bp.c
    return (c / 12 * r * e + c / 4 * r1 * e1
            + c / 12 * r ** 2 * (1 - e) + c / 4 * r1 ** 2 * (1 - e1))


def ber_bound_round2(bp: BoundParams, tau):
    r, r1 = bp.ratios()
    e, e1 = bp.tails(tau)
    c = bp.c
    return (c / 12 * r ** 2 * e ** 2 + c / 4 * r1 ** 2 * e1 ** 2
            + c / 6 * r ** 3 * e * (1 - e) + c / 2 * r1 ** 3 * e1 * (1 - e1)
            + c / 12 * r ** 4 * (1 - e) ** 2 + c / 4 * r1 ** 4 * (1 - e1) ** 2)


def ber_bound_general(J: int, bp: BoundParams, tau, _ratio_override=None):
    """BER bound for joint detection after ``J`` CCSR rounds.

    Event ``i`` (i of the J full transmissions marked) carries ``C(J, i)`` stackings
    of ``J + i`` chi-square(2) branches.  ``_ratio_override`` replaces the two
    ``(rho/sigma)^2`` ratios; it exists only to test the binomial weights.
    """
    if int(J) != J or J < 1:
        raise ValueError(f"J must be a positive integer, got {J}")
    J = int(J)
    r, r1 = bp.ratios() if _ratio_override is None else _ratio_override
    e, e1 = bp.tails(tau)
    c = bp.c
    total = 0.0
    for i in range(J + 1):
        w = comb(J, i, exact=True)
        total = total + w * (c / 12 * r ** (J + i) * e ** (J - i) * (1 - e) ** i
                             + c / 4 * r1 ** (J + i) * e1 ** (J - i) * (1 - e1) ** i)
    return total


def marking_probability(tau):
    """P(|H|^2 < tau) for a unit-variance Rayleigh gain."""
    return -np.expm1(-np.asarray(tau, dtype=float))


@dataclass(frozen=True)
class ThroughputTerms:
    """Per-round frame statistics; arrays have the round index on axis 0."""

    ber: np.ndarray
    log_pc: np.ndarray
    m: np.ndarray
    frame_bits: int

    @property
    def p_c(self):
        return np.exp(self.log_pc)

    @property
    def p_eps(self):
        return -np.expm1(self.log_pc)

    @property
    def mu(self) -> int:
        return self.log_pc.shape[0]

    @property
    def one_minus_alpha(self):
        return -np.expm1(np.sum(log1mexp(self.log_pc), axis=0))

    @property
    def alpha(self):
        return 1.0 - self.one_minus_alpha


def log1mexp(x):
    """``log(1 - exp(x))`` for ``x <= 0``, accurate at both ends."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > -math.log(2), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def frame_probs(P_e, L_f: int, m=0.0) -> ThroughputTerms:
    """Frame success ``(1 - P_e)^L_f`` per round, bits treated as independent."""
    P = np.asarray(P_e, dtype=float)
    if np.any((P < 0) | (P > 1)):
        raise ValueError("bit-error probabilities must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        log_pc = L_f * np.log1p(-P)
    return ThroughputTerms(P, log_pc, np.asarray(m, dtype=float), int(L_f))


def _cycle_weights(terms: ThroughputTerms, mu: int):
    if mu != terms.mu:
        raise ValueError(f"terms hold {terms.mu} rounds but mu={mu}")
    p_c, p_eps = terms.p_c, terms.p_eps
    one_m_a = terms.one_minus_alpha
    if np.any(one_m_a <= 0):
        raise DivergenceError("every round fails with probability one (alpha = 1)")
    alpha = 1.0 - one_m_a
    reach = 1.0
    s = 0.0
    for J in range(1, mu + 1):
        s = s + reach * p_c[J - 1] * (J + (mu - J) * alpha)
        reach = reach * p_eps[J - 1]
    return s, one_m_a


def expected_bits_n_mu(terms: ThroughputTerms, mu: int):
    """Expected transmitted bits per delivered information bit (closed form)."""
    s, one_m_a = _cycle_weights(terms, mu)
    return (1 + terms.m) * s / one_m_a ** 2


def throughput_eta(terms: ThroughputTerms, mu: int):
    """Throughput under ``mu`` MAC rounds and non-truncated ARQ."""
    s, one_m_a = _cycle_weights(terms, mu)
    return one_m_a ** 2 / ((1 + terms.m) * s)


def round_bounds(snr_db: float, tau, mu: int, mod: ModulationSpec = QPSK):
    """Stacked BER bounds for rounds 1..mu, shape (mu,) + shape(tau)."""
    bp = BoundParams.from_snr(snr_db, mod)
    return np.stack([np.broadcast_to(ber_bound_general(J, bp, tau), np.shape(tau)).astype(float)
                     for J in range(1, mu + 1)])


def ber_analytic(snr_db: float, tau, mu: int, mod: ModulationSpec = QPSK):
    """BER bound of the final (mu-th) round."""
    return ber_bound_general(mu, BoundParams.from_snr(snr_db, mod), tau)


def throughput_terms(snr_db: float, tau, mu: int, frame_bits: int, mod: ModulationSpec = QPSK,
                     selective: bool = True) -> ThroughputTerms:
    """Frame terms fed by the BER bounds, each clamped to 0.5."""
    tau = np.asarray(tau, dtype=float) if selective else np.zeros_like(np.asarray(tau, dtype=float))
    P = np.minimum(round_bounds(snr_db, tau, mu, mod), 0.5)
    return frame_probs(P, frame_bits, marking_probability(tau))


def eta_analytic(snr_db: float, tau, mu: int, frame_bits: int, mod: ModulationSpec = QPSK,
                 selective: bool = True):
    """Throughput lower bound for CCSR (or CC with ``selective=False``); 0 where it diverges."""
    terms = throughput_terms(snr_db, tau, mu, frame_bits, mod, selective)
    try:
        return throughput_eta(terms, mu)
    except DivergenceError:
        ok = terms.one_minus_alpha > 0
        if np.ndim(ok) == 0:
            return 0.0
        out = np.zeros(ok.shape)
        if np.any(ok):
            sub = ThroughputTerms(terms.ber[:, ok], terms.log_pc[:, ok],
                                  np.broadcast_to(terms.m, ok.shape)[ok], terms.frame_bits)
            out[ok] = throughput_eta(sub, mu)
        return out if out.ndim else float(out)
