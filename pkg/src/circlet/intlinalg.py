"""Exact integer and mod-2 linear algebra.

Smith normal form with full transform tracking, integer and GF(2) linear
solvers, and the twisted boundary matrices of a nerve.  All results are
arbitrary-precision: the reduction runs on machine integers while it can
prove no overflow is possible and transparently restarts on Python ints
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cochains import Cochain, check_sign_cocycle
from .nerve import Nerve

_INT64_SAFE = 1 << 62


class _NeedsExact(Exception):
    # internal: machine-int path cannot bound the next update
    pass


@dataclass
class SNFResult:
    """Smith normal form S = L @ D @ R with unimodular transforms.

    All matrices have dtype=object (Python ints), so downstream
    arithmetic stays exact.  ``Linv`` and ``Rinv`` are the tracked
    inverses of the transforms.
    """

    L: np.ndarray
    S: np.ndarray
    R: np.ndarray
    Linv: np.ndarray
    Rinv: np.ndarray

    @property
    def diagonal(self) -> list[int]:
        m, n = self.S.shape
        return [int(self.S[i, i]) for i in range(min(m, n))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def smith_normal_form(D) -> SNFResult:
    """Diagonalize an integer matrix by unimodular row/column operations.

    The diagonal is nonnegative with each entry dividing the next.
    """
    A = np.asarray(D)
    if A.ndim != 2:
        raise ValueError("need a 2-d matrix")
    try:
        work = A.astype(np.int64)
        if not np.array_equal(work.astype(object), A.astype(object)):
            raise _NeedsExact
        return _snf(work, exact=False)
    except (_NeedsExact, OverflowError):
        return _snf(A.astype(object), exact=True)


def _snf(A: np.ndarray, exact: bool) -> SNFResult:
    m, n = A.shape
    dtype = object if exact else np.int64
    S = A.copy()
    L = np.eye(m, dtype=dtype)
    Linv = np.eye(m, dtype=dtype)
    R = np.eye(n, dtype=dtype)
    Rinv = np.eye(n, dtype=dtype)

    def guard(*mats):
        # conservative overflow bound for the next multiply-subtract
        if exact:
            return
        worst = 1
        for M in mats:
            if M.size:
                worst = max(worst, int(np.max(np.abs(M))))
        if worst * worst * max(m, n) >= _INT64_SAFE:
            raise _NeedsExact

    def swap_rows(i, j):
        if i != j:
            S[[i, j], :] = S[[j, i], :]
            L[[i, j], :] = L[[j, i], :]
            Linv[:, [i, j]] = Linv[:, [j, i]]

    def swap_cols(i, j):
        if i != j:
            S[:, [i, j]] = S[:, [j, i]]
            R[:, [i, j]] = R[:, [j, i]]
            Rinv[[i, j], :] = Rinv[[j, i], :]

    def negate_row(i):
        S[i, :] = -S[i, :]
        L[i, :] = -L[i, :]
        Linv[:, i] = -Linv[:, i]

    t = 0
    while t < min(m, n):
        sub = S[t:, t:]
        nz = np.nonzero(sub)
        if len(nz[0]) == 0:
            break
        flat = np.abs(sub[nz])
        pick = int(np.argmin(flat))
        swap_rows(t, t + int(nz[0][pick]))
        swap_cols(t, t + int(nz[1][pick]))
        while True:
            # clear the pivot column, then the pivot row, retrying with a
            # smaller pivot whenever a remainder survives
            col = S[t + 1:, t]
            if np.any(col):
                guard(S, L, Linv)
                q = col // S[t, t]
                S[t + 1:, :] -= q[:, None] * S[t, :]
                L[t + 1:, :] -= q[:, None] * L[t, :]
                Linv[:, t] += Linv[:, t + 1:] @ q
                col = S[t + 1:, t]
                if np.any(col):
                    live = np.nonzero(col)[0]
                    smallest = live[int(np.argmin(np.abs(col[live])))]
                    swap_rows(t, t + 1 + int(smallest))
                    continue
            row = S[t, t + 1:]
            if np.any(row):
                guard(S, R, Rinv)
                q = row // S[t, t]
                S[:, t + 1:] -= S[:, t][:, None] * q[None, :]
                R[:, t + 1:] -= R[:, t][:, None] * q[None, :]
                Rinv[t, :] += q @ Rinv[t + 1:, :]
                row = S[t, t + 1:]
                if np.any(row):
                    live = np.nonzero(row)[0]
                    smallest = live[int(np.argmin(np.abs(row[live])))]
                    swap_cols(t, t + 1 + int(smallest))
                    continue
                continue  # the column may have been refilled
            break
        if S[t, t] < 0:
            negate_row(t)
        # divisibility: fold in any remaining entry the pivot misses
        rest = S[t + 1:, t + 1:]
        if rest.size:
            bad = np.nonzero(rest % S[t, t])
            if len(bad[0]):
                i = t + 1 + int(bad[0][0])
                guard(S, L, Linv)
                S[t, :] += S[i, :]
                L[t, :] += L[i, :]
                Linv[:, i] -= Linv[:, t]
                continue
        t += 1
    for i in range(min(m, n)):
        if S[i, i] < 0:
            negate_row(i)
    return SNFResult(
        L=L.astype(object),
        S=S.astype(object),
        R=R.astype(object),
        Linv=Linv.astype(object),
        Rinv=Rinv.astype(object),
    )


def obj_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Exact matrix product over Python ints."""
    A = np.asarray(A, dtype=object)
    B = np.asarray(B, dtype=object)
    return np.dot(A, B)


def solve_integer(A, b):
    """Some integer solution of A x = b, or None when none exists.

    Diagonalizes A and divides through: a solution exists exactly when
    the transformed right side is divisible by the diagonal and vanishes
    beyond the rank.
    """
    A = np.asarray(A, dtype=object)
    b = np.asarray(b, dtype=object).reshape(-1)
    m, n = A.shape
    if b.size != m:
        raise ValueError("right-hand side does not match the matrix")
    snf = smith_normal_form(A)
    c = obj_matmul(snf.L, b.reshape(-1, 1)).reshape(-1)
    y = np.zeros(n, dtype=object)
    r = min(m, n)
    for i in range(r):
        d = int(snf.S[i, i])
        ci = int(c[i])
        if d == 0:
            if ci != 0:
                return None
        else:
            if ci % d != 0:
                return None
            y[i] = ci // d
    if any(int(c[i]) != 0 for i in range(r, m)):
        return None
    return obj_matmul(snf.R, y.reshape(-1, 1)).reshape(-1)


def solve_gf2(A, b):
    """Some solution of A x = b over GF(2), or None when none exists."""
    A = (np.asarray(A) % 2).astype(np.uint8)
    b = (np.asarray(b) % 2).astype(np.uint8).reshape(-1)
    m, n = A.shape
    if b.size != m:
        raise ValueError("right-hand side does not match the matrix")
    aug = np.concatenate([A, b[:, None]], axis=1)
    pivots = []
    r = 0
    for c in range(n):
        hit = np.nonzero(aug[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + int(hit[0])
        if p != r:
            aug[[r, p], :] = aug[[p, r], :]
        mask = np.nonzero(aug[:, c])[0]
        mask = mask[mask != r]
        aug[mask, :] ^= aug[r, :]
        pivots.append(c)
        r += 1
        if r == m:
            break
    if np.any(aug[r:, n]):
        return None
    x = np.zeros(n, dtype=np.uint8)
    for i, c in enumerate(pivots):
        x[c] = aug[i, n]
    return x


@dataclass
class BoundaryMatrix:
    """Twisted boundary matrix with its labeled row/column simplices."""

    matrix: np.ndarray  # dtype=object, rows x cols
    rows: list[tuple]  # (p-1)-simplices, in filtration (or lex) order
    cols: list[tuple]  # p-simplices, same order


def twisted_boundary_matrix(nerve: Nerve, omega: Cochain, p: int) -> BoundaryMatrix:
    """Boundary matrix from p-chains to (p-1)-chains, twisted by a sign cocycle.

    The face dropping the leading vertex carries the sign of the leading
    edge; the remaining faces alternate -1, +1, ...  Rows and columns
    follow the nerve's filtration order when present, lex order otherwise.
    """
    if p not in (1, 2, 3):
        raise ValueError("boundary matrices are built for chain dimensions 1..3")
    check_sign_cocycle(omega)
    rows = ordered_simplices(nerve, p - 1)
    cols = ordered_simplices(nerve, p)
    row_pos = {s: i for i, s in enumerate(rows)}
    D = np.zeros((len(rows), len(cols)), dtype=object)
    for jcol, s in enumerate(cols):
        for drop in range(p + 1):
            face = s[:drop] + s[drop + 1:]
            if drop == 0:
                coef = omega.values[(s[0], s[1])]
            else:
                coef = -1 if drop % 2 == 1 else 1
            D[row_pos[face], jcol] = coef
    return BoundaryMatrix(matrix=D, rows=rows, cols=cols)


def ordered_simplices(nerve: Nerve, p: int) -> list[tuple]:
    """The p-simplices in filtration order, or lex order without one."""
    simps = list(nerve.simplices.get(p, []))
    if nerve.order is not None and nerve.index is not None:
        simps.sort(key=lambda s: nerve.index[s])
    return simps
