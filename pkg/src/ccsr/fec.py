"""Half-rate (648, 324) LDPC code and normalised min-sum decoding.

The code is the IEEE 802.11n rate-1/2 quasi-cyclic code with lifting size 27.
Its parity-check matrix ships as ``data/ldpc_648_324.alist``; :func:`wifi_648_parity_check`
rebuilds it from the prototype below.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

LIFT = 27

# -1 marks an all-zero block, p >= 0 an identity cyclically shifted right by p.
PROTOTYPE_R12_Z27 = np.array([
    [0, -1, -1, -1, 0, 0, -1, -1, 0, -1, -1, 0, 1, 0, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1],
    [22, 0, -1, -1, 17, -1, 0, 0, 12, -1, -1, -1, -1, 0, 0, -1, -1, -1, -1, -1, -1, -1, -1, -1],
    [6, -1, 0, -1, 10, -1, -1, -1, 24, -1, 0, -1, -1, -1, 0, 0, -1, -1, -1, -1, -1, -1, -1, -1],
    [2, -1, -1, 0, 20, -1, -1, -1, 25, 0, -1, -1, -1, -1, -1, 0, 0, -1, -1, -1, -1, -1, -1, -1],
    [23, -1, -1, -1, 3, -1, -1, -1, 0, -1, 9, 11, -1, -1, -1, -1, 0, 0, -1, -1, -1, -1, -1, -1],
    [24, -1, 23, 1, 17, -1, 3, -1, 10, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0, -1, -1, -1, -1, -1],
    [25, -1, -1, -1, 8, -1, -1, -1, 7, 18, -1, -1, 0, -1, -1, -1, -1, -1, 0, 0, -1, -1, -1, -1],
    [13, 24, -1, -1, 0, -1, 8, -1, 6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0, -1, -1, -1],
    [7, 20, -1, 16, 22, 10, -1, -1, 23, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0, -1, -1],
    [11, -1, -1, -1, 19, -1, -1, -1, 13, -1, 3, 17, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0, -1],
    [25, -1, 8, -1, 23, 18, -1, 14, 9, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0],
    [3, -1, -1, -1, 16, -1, -1, 2, 25, 5, -1, -1, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0],
])


def expand_prototype(proto: np.ndarray, z: int) -> np.ndarray:
    rows, cols = proto.shape
    H = np.zeros((rows * z, cols * z), dtype=np.uint8)
    eye = np.arange(z)
    for i in range(rows):
        for j in range(cols):
            p = proto[i, j]
            if p >= 0:
                H[i * z + eye, j * z + (eye + p) % z] = 1
    return H


def wifi_648_parity_check() -> np.ndarray:
    return expand_prototype(PROTOTYPE_R12_Z27, LIFT)


# -- alist I/O -------------------------------------------------------------

def write_alist(H: np.ndarray, path: str | Path):
    H = np.asarray(H, dtype=np.uint8)
    m, n = H.shape
    cols = [np.flatnonzero(H[:, j]) + 1 for j in range(n)]
    rows = [np.flatnonzero(H[i]) + 1 for i in range(m)]
    col_w = [len(c) for c in cols]
    row_w = [len(r) for r in rows]
    lines = [f"{n} {m}", f"{max(col_w)} {max(row_w)}",
             " ".join(map(str, col_w)), " ".join(map(str, row_w))]
    lines += [" ".join(map(str, list(c) + [0] * (max(col_w) - len(c)))) for c in cols]
    lines += [" ".join(map(str, list(r) + [0] * (max(row_w) - len(r)))) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path: str | Path) -> np.ndarray:
    """Parse an alist file (column-major block only; the row block is cross-checked)."""
    tok = Path(path).read_text().split()
    vals = list(map(int, tok))
    n, m, max_c, max_r = vals[:4]
    pos = 4
    col_w = vals[pos:pos + n]; pos += n
    row_w = vals[pos:pos + m]; pos += m
    H = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        entries = vals[pos:pos + max_c]; pos += max_c
        for r in entries[:col_w[j]]:
            H[r - 1, j] = 1
    for i in range(m):
        entries = vals[pos:pos + max_r]; pos += max_r
        if sorted(e - 1 for e in entries[:row_w[i]]) != list(np.flatnonzero(H[i])):
            raise ValueError(f"alist row block disagrees with column block at row {i + 1}")
    return H


def default_alist_path() -> Path:
    return Path(str(resources.files("ccsr") / "data" / "ldpc_648_324.alist"))


# -- GF(2) helpers -----------------------------------------------------------

def gf2_rank(A: np.ndarray) -> int:
    A = np.array(A, dtype=bool)
    rank = 0
    rows, cols = A.shape
    for c in range(cols):
        piv = np.flatnonzero(A[rank:, c])
        if piv.size == 0:
            continue
        p = rank + piv[0]
        A[[rank, p]] = A[[p, rank]]
        hit = np.flatnonzero(A[:, c])
        hit = hit[hit != rank]
        A[hit] ^= A[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def gf2_inv(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    M = np.concatenate([np.array(A, dtype=bool), np.eye(n, dtype=bool)], axis=1)
    for c in range(n):
        piv = np.flatnonzero(M[c:, c])
        if piv.size == 0:
            raise np.linalg.LinAlgError("matrix is singular over GF(2)")
        p = c + piv[0]
        M[[c, p]] = M[[p, c]]
        hit = np.flatnonzero(M[:, c])
        hit = hit[hit != c]
        M[hit] ^= M[c]
    return M[:, n:].astype(np.uint8)


@dataclass(frozen=True)
class DecodeResult:
    bits: np.ndarray
    converged: bool
    iterations: int


class LdpcCode:
    """Systematic LDPC code: codeword = [info bits | parity bits].

    Requires the trailing m x m block of ``H`` to be invertible over GF(2),
    which holds for the 802.11n dual-diagonal parity structure.
    """

    def __init__(self, H: np.ndarray | None = None, max_iterations: int = 50, scale: float = 0.75):
        if H is None:
            H = read_alist(default_alist_path())
        self.H = np.asarray(H, dtype=np.uint8)
        self.m, self.n = self.H.shape
        self.k = self.n - self.m
        self.max_iterations = max_iterations
        self.scale = scale

        checks, varnodes = np.nonzero(self.H)  # row-major: edges grouped by check
        self._edge_var = varnodes
        self._edge_check = checks
        deg = np.bincount(checks, minlength=self.m)
        self._dmax = int(deg.max())
        start = np.concatenate([[0], np.cumsum(deg)[:-1]])
        slot = np.arange(len(checks)) - start[checks]
        self._slot = slot
        self._pad_mask = np.ones((self.m, self._dmax), dtype=bool)
        self._pad_mask[checks, slot] = False

    @cached_property
    def _parity_map(self) -> np.ndarray:
        Hs, Hp = self.H[:, :self.k], self.H[:, self.k:]
        return (gf2_inv(Hp).astype(np.int64) @ Hs.astype(np.int64)) % 2

    def encode(self, info_bits) -> np.ndarray:
        u = np.asarray(info_bits, dtype=np.int64).ravel()
        if u.size != self.k:
            raise ValueError(f"expected {self.k} info bits, got {u.size}")
        p = (self._parity_map @ u) % 2
        return np.concatenate([u, p]).astype(np.int8)

    def syndrome(self, codeword) -> np.ndarray:
        return (self.H.astype(np.int64) @ np.asarray(codeword, dtype=np.int64)) % 2

    def is_codeword(self, codeword) -> bool:
        return not self.syndrome(codeword).any()

    def decode(self, llrs) -> DecodeResult:
        """Flooding normalised min-sum; positive LLR favours bit 0.

        A posterior of exactly zero is undecided and blocks convergence, so an
        all-zero input runs to ``max_iterations`` and reports failure.
        """
        L = np.asarray(llrs, dtype=float).ravel()
        if L.size != self.n:
            raise ValueError(f"expected {self.n} LLRs, got {L.size}")
        if not np.all(np.isfinite(L)):
            raise ValueError("LLRs must be finite")
        ev, ec, slot = self._edge_var, self._edge_check, self._slot
        c2v = np.zeros(len(ev))
        total = L.copy()
        rows = np.arange(self.m)
        hard = (total < 0).astype(np.int8)
        for it in range(1, self.max_iterations + 1):
            v2c = total[ev] - c2v
            mag = np.full((self.m, self._dmax), np.inf)
            sgn = np.ones((self.m, self._dmax))
            mag[ec, slot] = np.abs(v2c)
            sgn[ec, slot] = np.where(v2c < 0, -1.0, 1.0)
            prod = np.prod(sgn, axis=1)
            order = np.argsort(mag, axis=1)
            i1 = order[:, 0]
            m1 = mag[rows, i1]
            m2 = mag[rows, order[:, 1]]
            emag = np.where(slot == i1[ec], m2[ec], m1[ec])
            c2v = self.scale * prod[ec] * sgn[ec, slot] * emag
            total = L + np.bincount(ev, weights=c2v, minlength=self.n)
            hard = (total < 0).astype(np.int8)
            par = np.zeros((self.m, self._dmax), dtype=np.int8)
            par[ec, slot] = hard[ev]
            if not (par.sum(axis=1) % 2).any() and np.all(total != 0):
                return DecodeResult(hard[:self.k], True, it)
        return DecodeResult(hard[:self.k], False, self.max_iterations)


_DEFAULT: LdpcCode | None = None


def default_code() -> LdpcCode:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = LdpcCode()
    return _DEFAULT
