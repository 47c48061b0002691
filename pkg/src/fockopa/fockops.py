"""Operators on truncated Fock space.

Matrix-valued elements of Fock space are handled through their coefficient
vectors in the tensor basis ``word (x) matrix unit``, words in graded-lex
order and matrix entries row-major inside each word block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .freealg import FreePoly, MatrixTuple, Word, words_up_to

#: Largest word basis materialized densely.
DEFAULT_CAPACITY = 5000


class CapacityError(RuntimeError):
    """Raised instead of silently approximating an oversized truncation."""


def basis_size(d: int, n: int) -> int:
    if n < 0:
        return 0
    if d == 1:
        return n + 1
    return (d ** (n + 1) - 1) // (d - 1)


def check_capacity(d: int, n: int, capacity: int = DEFAULT_CAPACITY) -> int:
    size = basis_size(d, n)
    if size > capacity:
        raise CapacityError(
            f"word basis for d={d}, n={n} has {size} words, above capacity {capacity}"
        )
    return size


@dataclass(frozen=True)
class TruncatedBasis:
    """Words of length at most ``n`` in ``d`` letters; index 0 is the empty word."""

    d: int
    n: int

    @cached_property
    def words(self) -> list[Word]:
        return words_up_to(self.d, self.n)

    @cached_property
    def index(self) -> dict[Word, int]:
        return {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return basis_size(self.d, self.n)


def _dtype(*polys: FreePoly):
    return complex if any(p.to_float().is_complex for p in polys) else float


def coeff_vector(P: FreePoly, n: int) -> np.ndarray:
    """Coefficients of ``P`` on words of length <= n, in the tensor basis."""
    basis = TruncatedBasis(P.d, n)
    k = P.rows * P.cols
    out = np.zeros(len(basis) * k, dtype=_dtype(P))
    for w, c in P.to_float().items():
        if len(w) > n:
            raise ValueError(f"polynomial has degree above {n}")
        i = basis.index[w]
        out[i * k:(i + 1) * k] = np.ravel(c)
    return out


def from_coeff_vector(v: np.ndarray, shape: tuple[int, int], d: int, n: int) -> FreePoly:
    k = shape[0] * shape[1]
    words = words_up_to(d, n)
    return FreePoly({w: v[i * k:(i + 1) * k].reshape(shape) for i, w in enumerate(words)},
                    shape, d)


def left_mult_matrix(F: FreePoly, n: int, capacity: int = DEFAULT_CAPACITY) -> np.ndarray:
    """Matrix of ``P -> F P`` from words <= n to words <= n + deg F.

    ``P`` ranges over ``k' x k'`` matrix polynomials when ``F`` is ``k x k'``.
    Columns and rows follow :func:`coeff_vector`.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    check_capacity(F.d, n, capacity)
    F = F.to_float()
    degF = max(int(F.degree), 0) if not F.is_zero else 0
    dom = TruncatedBasis(F.d, n)
    cod = TruncatedBasis(F.d, n + degF)
    k, kp = F.shape
    bc, br = kp * kp, k * kp
    out = np.zeros((len(cod) * br, len(dom) * bc), dtype=_dtype(F))
    eye = np.eye(kp)
    blocks = {w: np.kron(c, eye) for w, c in F.items()}
    for j, v in enumerate(dom.words):
        for w, B in blocks.items():
            i = cod.index[w + v]
            out[i * br:(i + 1) * br, j * bc:(j + 1) * bc] += B
    return out


def right_mult_matrix(F: FreePoly, n: int, capacity: int = DEFAULT_CAPACITY) -> np.ndarray:
    """Matrix of ``p -> p F`` for ``1 x k`` row polynomials ``p`` of degree <= n.

    Columns index ``(word, entry)`` of ``p``; rows index ``(word, entry)`` of
    ``p F`` on words <= n + deg F.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    check_capacity(F.d, n, capacity)
    F = F.to_float()
    degF = max(int(F.degree), 0) if not F.is_zero else 0
    dom = TruncatedBasis(F.d, n)
    cod = TruncatedBasis(F.d, n + degF)
    k, kp = F.shape
    out = np.zeros((len(cod) * kp, len(dom) * k), dtype=_dtype(F))
    blocks = {w: c.T for w, c in F.items()}
    for j, v in enumerate(dom.words):
        for w, B in blocks.items():
            i = cod.index[v + w]
            out[i * kp:(i + 1) * kp, j * k:(j + 1) * k] += B
    return out


def _top_eig(G: np.ndarray) -> float:
    return max(float(np.max(np.linalg.eigvalsh(G))), 0.0)


def row_norm(X: MatrixTuple) -> float:
    """``|| X_1 X_1^* + ... + X_d X_d^* ||^{1/2}``."""
    G = sum(M @ M.conj().T for M in X.mats)
    return float(np.sqrt(_top_eig(G)))


def col_norm(X: MatrixTuple) -> float:
    """``|| X_1^* X_1 + ... + X_d^* X_d ||^{1/2}``."""
    G = sum(M.conj().T @ M for M in X.mats)
    return float(np.sqrt(_top_eig(G)))


def pencil_mult_norm(A: MatrixTuple) -> float:
    """Multiplier norm of ``A_1 x_1 + ... + A_d x_d`` acting by left multiplication.

    The left multiplier is ``sum_j A_j (x) L_j`` and the shifts have orthogonal
    ranges, so its norm is exactly the column norm of ``A``.
    """
    return col_norm(A)


@dataclass(frozen=True, eq=False)
class CpMapMatrix:
    """The map ``T -> sum_j X_j T X_j^*`` on ``m x m`` matrices, column-stacking vec."""

    source: MatrixTuple
    matrix: np.ndarray

    def apply(self, T: np.ndarray) -> np.ndarray:
        m = self.source.m
        return (self.matrix @ np.ravel(T, order="F")).reshape((m, m), order="F")

    def power_apply(self, T: np.ndarray, k: int) -> np.ndarray:
        for _ in range(k):
            T = self.apply(T)
        return T


def cp_map(X: MatrixTuple) -> CpMapMatrix:
    # vec(X T X^*) = (conj(X) kron X) vec(T) under column stacking
    mat = sum(np.kron(M.conj(), M) for M in X.mats)
    return CpMapMatrix(X, mat)


def structural_power_norm_sq(M: MatrixTuple, k: int) -> float:
    """``||(Mx)^k||_2^2`` without expanding words: ``tr Phi^k(I)``, ``Phi(T) = sum M_j^* T M_j``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    T = np.eye(M.shape[1], dtype=M.mats.dtype)
    for _ in range(k):
        T = sum(Mj.conj().T @ T @ Mj for Mj in M.mats)
    return float(np.real(np.trace(T)))


def structural_power_norms(M: MatrixTuple, kmax: int) -> np.ndarray:
    """``[||(Mx)^k||_2^2 for k = 0..kmax]`` in one sweep."""
    out = np.empty(kmax + 1)
    T = np.eye(M.shape[1], dtype=M.mats.dtype)
    out[0] = float(np.real(np.trace(T)))
    for k in range(1, kmax + 1):
        T = sum(Mj.conj().T @ T @ Mj for Mj in M.mats)
        out[k] = float(np.real(np.trace(T)))
    return out


def multiplier_norm_lower_bound(P: FreePoly, n: int, capacity: int = DEFAULT_CAPACITY) -> float:
    """Largest singular value of the truncated left multiplication matrix.

    Nondecreasing in ``n`` and never above the true multiplier norm.
    """
    L = left_mult_matrix(P, n, capacity)
    if L.size == 0:
        return 0.0
    # operator norm from the Gram matrix on the smaller side
    G = L.conj().T @ L if L.shape[1] <= L.shape[0] else L @ L.conj().T
    return float(np.sqrt(_top_eig(G)))


def multiplier_norm_upper_bound(P: FreePoly) -> float:
    """Certified bound ``sum_w ||P_w||_op``; each ``L^w`` is an isometry."""
    return float(sum(np.linalg.norm(np.asarray(c, dtype=complex), 2) for _, c in P.to_float().items()))


def to_csv(M: np.ndarray) -> str:
    """Dense matrix dump for debugging."""
    rows = []
    for row in np.atleast_2d(M):
        rows.append(",".join(repr(complex(z)) if np.iscomplexobj(M) else repr(float(z)) for z in row))
    return "\n".join(rows) + "\n"
