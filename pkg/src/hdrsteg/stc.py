"""Binary syndrome-trellis codes.

The parity-check matrix H (m x n) is built by placing the h-row submatrix
along the diagonal: message bit i owns a block of roughly n/m consecutive
columns, and column j of block i has ones in rows i..i+h-1 (clipped at m)
according to its submatrix pattern.  Encoding runs Viterbi over the 2**h
partial-syndrome states; wet bits carry infinite cost, which prunes every
transition that would flip them.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import PayloadError, SaturationError

DEFAULT_HEIGHT = 10

_local = threading.local()


@dataclass(frozen=True)
class StcCode:
    h: int
    columns: tuple[int, ...]  # h-bit patterns; bit t touches row i + t

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("constraint height must be at least 1")
        if not self.columns:
            raise ValueError("submatrix needs at least one column")
        top = 1 << (self.h - 1)
        for c in self.columns:
            if not 0 < c < (1 << self.h):
                raise ValueError(f"column pattern {c} outside 1..2**h-1")
            if not c & 1:
                raise ValueError("every column must touch its own message row (bit 0 set)")
        if not any(c & top for c in self.columns):
            raise ValueError("at least one column must reach row h-1")

    @property
    def width(self) -> int:
        return len(self.columns)

    @classmethod
    def generate(cls, h: int, width: int, seed) -> StcCode:
        """Pseudo-random submatrix with first and last row set in every column.

        Columns are distinct while the 2**(h-2) free patterns last; repeated
        columns in a block waste trellis states and cost a lot of efficiency.
        """
        rng = np.random.default_rng(seed)
        free = 1 << max(h - 2, 0)
        mid = rng.choice(free, size=width, replace=width > free)
        cols = (mid << 1) | 1 | (1 << (h - 1))
        return cls(h, tuple(int(c) for c in cols))


def code_for(n: int, m: int, h: int, seed) -> StcCode:
    """Code wide enough for an n-bit cover carrying m message bits."""
    return StcCode.generate(h, max(1, -(-n // max(m, 1))), seed)


def _layout(n, m, code):
    if m > n:
        raise PayloadError(f"message of {m} bits exceeds cover of {n} bits")
    starts = (np.arange(m + 1, dtype=np.int64) * n) // m
    widths = np.diff(starts)
    if widths.max() > code.width:
        raise ValueError(f"code width {code.width} too narrow for {n} cover / {m} message bits")
    blk = np.repeat(np.arange(m, dtype=np.int64), widths)
    offset = np.arange(n, dtype=np.int64) - starts[blk]
    cols = np.asarray(code.columns, dtype=np.int64)[offset]
    return cols, starts[1:].copy(), blk


def parity_check_matrix(code: StcCode, n: int, m: int) -> np.ndarray:
    cols, _, blk = _layout(n, m, code)
    H = np.zeros((m, n), dtype=np.uint8)
    for t in range(code.h):
        touch = ((cols >> t) & 1).astype(bool) & (blk + t < m)
        H[blk[touch] + t, np.nonzero(touch)[0]] = 1
    return H


def _block_xor_copy(low):
    # perm[s] = cost[s ^ col] for col & 7 == low, copied in 8-state blocks;
    # a constant low part lets the compiler emit a fixed shuffle
    @njit(cache=True, nogil=True, inline="always")
    def copy(cost, perm, high, nblocks):
        for b in range(nblocks):
            src = (b ^ high) << 3
            dst = b << 3
            for q in range(8):
                perm[dst + q] = cost[src + (q ^ low)]
    return copy


_X0, _X1, _X2, _X3, _X4, _X5, _X6, _X7 = [_block_xor_copy(low) for low in range(8)]


@njit(cache=True, nogil=True)
def _xor_permute(cost, perm, col, ns):
    if ns < 8:
        for s in range(ns):
            perm[s] = cost[s ^ col]
        return
    low = col & 7
    high = col >> 3
    nb = ns >> 3
    if low == 0:
        _X0(cost, perm, high, nb)
    elif low == 1:
        _X1(cost, perm, high, nb)
    elif low == 2:
        _X2(cost, perm, high, nb)
    elif low == 3:
        _X3(cost, perm, high, nb)
    elif low == 4:
        _X4(cost, perm, high, nb)
    elif low == 5:
        _X5(cost, perm, high, nb)
    elif low == 6:
        _X6(cost, perm, high, nb)
    else:
        _X7(cost, perm, high, nb)


@njit(cache=True, nogil=True)
def _forward(x, rho, cols, tops, blk_end, msg, h, path):
    ns = 1 << h
    n = x.shape[0]
    cost = np.full(ns, np.inf)
    cost[0] = 0.0
    new = np.empty(ns)
    perm = np.empty(ns)
    i = 0
    for j in range(n):
        col = cols[j]
        hb = tops[j]
        r = rho[j]
        if x[j]:
            c0 = r
            c1 = 0.0
        else:
            c0 = 0.0
            c1 = r
        _xor_permute(cost, perm, col, ns)
        p = path[j]
        for s in range(ns):
            u0 = cost[s] + c0
            u1 = perm[s] + c1
            # equal costs: the lower-indexed predecessor wins; s ^ col < s
            # exactly when s has col's top bit set
            t = (u1 < u0) | ((u1 == u0) & (((s >> hb) & 1) == 1))
            new[s] = u1 if t else u0
            p[s] = np.uint8(t)
        cost, new = new, cost
        if j + 1 == blk_end[i]:
            mb = msg[i]
            half = ns >> 1
            for s in range(half):
                new[s] = cost[2 * s + mb]
            for s in range(half, ns):
                new[s] = np.inf
            cost, new = new, cost
            i += 1
    return cost


@njit(cache=True, nogil=True)
def _backtrack(path, cols, blk_end, msg, state):
    n = path.shape[0]
    y = np.empty(n, dtype=np.uint8)
    i = msg.shape[0] - 1
    s = state
    for j in range(n - 1, -1, -1):
        if i >= 0 and j + 1 == blk_end[i]:
            s = (s << 1) | msg[i]
            i -= 1
        bit = path[j, s]
        y[j] = bit
        if bit:
            s ^= cols[j]
    return y


def _path_buffer(n, ns):
    buf = getattr(_local, "path", None)
    if buf is None or buf.shape[0] < n or buf.shape[1] != ns:
        buf = np.empty((n, ns), dtype=np.uint8)
        _local.path = buf
    return buf[:n]


def release_buffers() -> None:
    """Drop the per-thread trellis path buffer."""
    _local.path = None


def stc_encode(cover_bits, costs, message, code: StcCode) -> np.ndarray:
    """Minimum-cost stego bits y with H y = message (mod 2)."""
    x = np.ascontiguousarray(cover_bits, dtype=np.uint8).ravel()
    rho = np.ascontiguousarray(costs, dtype=np.float64).ravel()
    msg = np.ascontiguousarray(message, dtype=np.uint8).ravel()
    if rho.shape != x.shape:
        raise ValueError("costs must align with cover bits")
    if np.isnan(rho).any() or (rho < 0).any():
        raise ValueError("costs must be non-negative")
    if msg.size == 0:
        return x.copy()
    cols, blk_end, _ = _layout(x.size, msg.size, code)
    path = _path_buffer(x.size, 1 << code.h)
    tops = np.frexp(cols.astype(np.float64))[1].astype(np.int64) - 1  # index of each column's top bit
    final = _forward(x, rho, cols, tops, blk_end, msg, code.h, path)
    best = int(np.argmin(final))
    if not np.isfinite(final[best]):
        raise SaturationError("wet bits block every trellis path for this message")
    return _backtrack(path, cols, blk_end, msg, best)


def stc_decode(stego_bits, code: StcCode, m: int) -> np.ndarray:
    """Syndrome H y (mod 2) of length m."""
    y = np.ascontiguousarray(stego_bits, dtype=np.uint8).ravel()
    if m == 0:
        return np.zeros(0, dtype=np.uint8)
    cols, _, blk = _layout(y.size, m, code)
    return _syndrome(y, cols, blk, m, code.h)


@njit(cache=True, nogil=True)
def _syndrome(y, cols, blk, m, h):
    out = np.zeros(m, dtype=np.uint8)
    for j in range(y.shape[0]):
        if y[j]:
            c = cols[j]
            i = blk[j]
            for t in range(h):
                if (c >> t) & 1 and i + t < m:
                    out[i + t] ^= 1
    return out
