"""Optimal polynomial approximants ``P_n`` minimizing ``||P F - I||_2^2``.

The objective splits over the rows of ``P``: row ``i`` of ``P F`` should
approximate row ``i`` of the identity, and every row problem uses the same
matrix of right multiplication by ``F``.  All ``k`` rows are solved against
one pivoted QR factorization.
"""

from __future__ import annotations

import io
import time
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .fockops import DEFAULT_CAPACITY, basis_size, check_capacity, right_mult_matrix
from .freealg import FreePoly, norm_sq, mul, words_up_to

RANK_RTOL = 1e-12


@dataclass
class OpaResult:
    n: int
    P: FreePoly
    c_n: float
    diagnostics: dict = field(default_factory=dict)


def lstsq_qr(A: np.ndarray, B: np.ndarray, rtol: float = RANK_RTOL) -> tuple[np.ndarray, dict]:
    """Least squares by column-pivoted QR; minimum-norm solution when rank deficient."""
    nrows, ncols = A.shape
    B2 = B.reshape(nrows, -1)
    # Q^H B without forming Q: (B^H Q)^H
    BhQ, R, piv = sla.qr_multiply(A, B2.conj().T, mode="right", pivoting=True)
    QhB = BhQ.conj().T
    diag = np.abs(np.diag(R))
    r = int(np.sum(diag > rtol * diag[0])) if diag.size and diag[0] > 0 else 0
    X = np.zeros((ncols, B2.shape[1]), dtype=np.result_type(A, B2))
    info = {"rank": r, "rank_deficient": r < ncols,
            "condition_estimate": float(diag[0] / diag[r - 1]) if r else float("inf")}
    if r == 0:
        return X.reshape((ncols,) + B.shape[1:]), info
    if r == ncols:
        Y = sla.solve_triangular(R[:ncols, :ncols], QhB[:ncols])
    else:
        # complete orthogonal decomposition: R[:r] = T^H Z^H with Z orthonormal
        Z, T = np.linalg.qr(R[:r, :].conj().T)
        Y = Z @ sla.solve_triangular(T.conj().T, QhB[:r], lower=True)
    X[piv] = Y
    return X.reshape((ncols,) + B.shape[1:]), info


def solve_opa(F: FreePoly, n: int, capacity: int = DEFAULT_CAPACITY) -> OpaResult:
    """Degree-``n`` optimal polynomial approximant of a square matrix polynomial."""
    if F.rows != F.cols:
        raise ValueError("solve_opa needs a square matrix polynomial")
    if F.is_zero:
        raise ValueError("F must be nonzero")
    if n < 0:
        raise ValueError("n must be nonnegative")
    check_capacity(F.d, n, capacity)
    k = F.rows
    Ff = F.to_float()
    M = right_mult_matrix(Ff, n, capacity)
    # row i targets e_i on the empty word, which occupies the first k rows
    B = np.zeros((M.shape[0], k), dtype=M.dtype)
    B[:k, :k] = np.eye(k)
    X, info = lstsq_qr(M, B)
    words = words_up_to(F.d, n)
    # X[(word, a), i] is entry (i, a) of P_word
    P = FreePoly({w: X[t * k:(t + 1) * k, :].T for t, w in enumerate(words)}, (k, k), F.d)
    resid_vec = M @ X - B
    normal = float(np.max(np.abs(M.conj().T @ resid_vec), initial=0.0))
    c_n = norm_sq(mul(P, Ff) - FreePoly.identity(k, F.d))
    info.update({"normal_equation_residual": normal, "solver_residual": float(np.sum(np.abs(resid_vec) ** 2)),
                 "basis_size": basis_size(F.d, n)})
    return OpaResult(n=n, P=P, c_n=c_n, diagnostics=info)


def fit_slope(ns, cs, window: tuple[int, int]) -> float:
    """Least-squares slope of ``log c_n`` against ``log n`` over the window."""
    lo, hi = window
    pts = [(n, c) for n, c in zip(ns, cs) if lo <= n <= hi and c > 0]
    if len(pts) < 2:
        return float("nan")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(y) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def default_window(n_max: int) -> tuple[int, int]:
    """Upper part of the range, where pre-asymptotic curvature matters least."""
    return max(2, round(0.4 * n_max)), n_max


def theorem_exponent(ell: int | None) -> float | None:
    """Decay exponent ``1 / 3^(ell - 1)`` guaranteed for ``ell`` atomic factors."""
    if ell is None or ell < 1:
        return None
    return 1.0 / 3 ** (ell - 1)


class MonotonicityError(RuntimeError):
    pass


@dataclass
class DecayTable:
    descriptor: str
    rows: list[tuple[int, float, int, float]]
    window: tuple[int, int]
    slope: float
    ell: int | None = None
    p: float | None = None
    results: list[OpaResult] = field(default_factory=list, repr=False)

    @property
    def ns(self) -> list[int]:
        return [r[0] for r in self.rows]

    @property
    def cs(self) -> list[float]:
        return [r[1] for r in self.rows]

    def to_csv(self, timing: bool = False) -> str:
        """``n,c_n,degree_basis_size,time_ms``; the time column is left empty unless ``timing``."""
        buf = io.StringIO()
        buf.write("n,c_n,degree_basis_size,time_ms\n")
        for n, c, size, ms in self.rows:
            t = f"{ms:.17g}" if timing else ""
            buf.write(f"{n},{c:.17g},{size},{t}\n")
        return buf.getvalue()


def decay_table(F: FreePoly, n_max: int, window: tuple[int, int] | None = None,
                capacity: int = DEFAULT_CAPACITY, ell: int | None = None,
                descriptor: str = "", mono_tol: float = 1e-12) -> DecayTable:
    """``c_n`` for ``n = 0..n_max`` and the fitted log-log slope over ``window``."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    window = window or default_window(n_max)
    if not (2 <= window[0] <= window[1] <= n_max):
        raise ValueError(f"window {window} must lie inside [2, {n_max}]")
    check_capacity(F.d, n_max, capacity)
    rows, results = [], []
    for n in range(n_max + 1):
        t0 = time.perf_counter()
        res = solve_opa(F, n, capacity)
        ms = (time.perf_counter() - t0) * 1e3
        rows.append((n, res.c_n, basis_size(F.d, n), ms))
        results.append(res)
    cs = [r[1] for r in rows]
    for a, b in zip(cs, cs[1:]):
        if b > a + mono_tol:
            raise MonotonicityError(f"c_n increased from {a!r} to {b!r}")
    slope = fit_slope([r[0] for r in rows], cs, window)
    return DecayTable(descriptor, rows, tuple(window), slope, ell, theorem_exponent(ell), results)


def _exact_inverse(C: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse of a matrix of Fractions."""
    k = C.shape[0]
    aug = [list(C[i]) + [Fraction(int(i == j)) for j in range(k)] for i in range(k)]
    for col in range(k):
        piv = next(r for r in range(col, k) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return np.array([row[k:] for row in aug], dtype=object)


def normalize_constant(F: FreePoly) -> FreePoly | None:
    """``F(0)^{-1} F`` with an exactly-identity constant term, or ``None`` if ``F(0)`` is singular."""
    C = np.asarray(F.constant_term(), dtype=complex)
    scale = max(1.0, float(np.max(np.abs(C), initial=0.0)))
    if abs(np.linalg.det(C)) <= 1e-12 * scale ** F.rows:
        return None
    k = F.rows
    if F.exact:
        return mul(FreePoly.constant(_exact_inverse(F.constant_term()), F.d, exact=True), F)
    Cinv = np.linalg.inv(C) if F.is_complex else np.linalg.inv(C.real)
    G = mul(FreePoly.constant(Cinv, F.d), F)
    terms = G.terms
    terms[()] = np.eye(k)
    return FreePoly(terms, G.shape, G.d)


def cyclicity_verdict(F: FreePoly, n_max: int, threshold: float = 0.1,
                      capacity: int = DEFAULT_CAPACITY, seed: int = 0,
                      known: dict[int, float] | None = None) -> dict:
    """Compare the pencil radius test with the numerical decay of ``c_n``.

    Numerically ``c_n`` counts as tending to zero when ``c_{n_max}`` is below
    ``threshold`` and still falling between ``n_max // 2`` and ``n_max``.
    ``known`` maps degrees to already computed ``c_n``.
    """
    from .linearize import linearize
    from .specrad import outer_spectral_radius

    known = dict(known or {})
    for n in (n_max, n_max // 2):
        if n not in known:
            known[n] = solve_opa(F, n, capacity).c_n
    c_max, half = known[n_max], known[n_max // 2]
    decreasing = half - c_max > 1e-6 * half
    small = c_max < threshold and decreasing
    Fn = normalize_constant(F)
    if Fn is None:
        rho = float("inf")
        nonsingular = False
        reason = "singular at 0"
    else:
        pencil, _ = linearize(Fn)
        rho = outer_spectral_radius(pencil.A)
        nonsingular = rho <= 1 + 1e-10
        reason = ("nonsingular in the row ball" if nonsingular
                  else f"singular in the row ball (outer spectral radius {rho:.6g} > 1)")
    verdict = "cyclic" if nonsingular else f"not cyclic: {reason}"
    return {
        "rho": rho,
        "nonsingular_in_row_ball": nonsingular,
        "c_n_max": c_max,
        "n_max": n_max,
        "c_n_half": half,
        "still_decreasing": decreasing,
        "below_threshold": small,
        "consistent": small == nonsingular,
        "verdict": verdict,
    }
