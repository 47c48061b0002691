"""Outer spectral radius and block triangularization of matrix tuples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .fockops import col_norm, cp_map
from .freealg import MatrixTuple

#: Dense eigensolve of the m^2 x m^2 CP matrix up to this level.
DENSE_LEVEL = 60
#: Up to this size the radius is computed block by block.
BLOCK_LEVEL = 16
RANK_TOL = 1e-9
PF_MULTIPLICITY_TOL = 1e-8


class SpecradError(RuntimeError):
    pass


class ReducibleError(SpecradError):
    pass


class InfeasibleError(SpecradError):
    """Outer spectral radius above 1; no contractive similarity exists."""


class DegeneracyError(SpecradError):
    """Numerical data too close to a boundary case to decide."""

    def __init__(self, message: str, values=()):
        self.values = list(values)
        super().__init__(message if not self.values else f"{message}: {self.values}")


def _as_tuple(X) -> MatrixTuple:
    return X if isinstance(X, MatrixTuple) else MatrixTuple(np.asarray(X))


def _scale(X: MatrixTuple) -> float:
    return float(sum(np.sum(np.abs(M) ** 2) for M in X.mats))


def is_jointly_nilpotent(A, tol: float = 1e-10) -> bool:
    """True iff every word of length ``m`` in ``A`` vanishes, i.e. ``Psi_A^m(I) = 0``."""
    A = _as_tuple(A)
    m = A.m
    s = _scale(A)
    if s == 0:
        return True
    # normalize so roundoff is judged relative to the tuple's size
    B = A.scaled(1 / np.sqrt(s))
    T = np.eye(m, dtype=B.mats.dtype)
    for _ in range(m):
        T = sum(M @ T @ M.conj().T for M in B.mats)
    return float(np.max(np.abs(T))) <= tol


def _dense_radius(X: MatrixTuple) -> float:
    ev = np.linalg.eigvals(cp_map(X).matrix)
    return float(np.sqrt(np.max(np.abs(ev))))


def outer_spectral_radius(X, power_iters: int = 2000) -> float:
    """Square root of the spectral radius of ``T -> sum_j X_j T X_j^*``."""
    X = _as_tuple(X)
    if is_jointly_nilpotent(X):
        return 0.0
    if X.m <= BLOCK_LEVEL:
        # rho is the max over irreducible diagonal blocks, where the top eigenvalue is simple;
        # on the whole tuple Jordan blocks of the CP map would cost half the digits or more
        try:
            Q, sizes = _unitary_blocks(X, 0, RANK_TOL)
        except DegeneracyError:
            sizes = [X.m]
        if len(sizes) > 1:
            C = X.conjugate_by(Q)
            off = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
            return max(_dense_radius(MatrixTuple(C.mats[:, a:b, a:b])) for a, b in zip(off, off[1:]))
    if X.m <= DENSE_LEVEL:
        return _dense_radius(X)
    # the CP map is positive, so its spectral radius is read off Psi^k(I)
    T = np.eye(X.m, dtype=X.mats.dtype)
    prev = None
    for _ in range(power_iters):
        T = sum(M @ T @ M.conj().T for M in X.mats)
        nrm = float(np.linalg.norm(T, 2))
        if nrm == 0:
            return 0.0
        T = T / nrm
        est = np.sqrt(nrm)
        if prev is not None and abs(est - prev) <= 1e-12 * max(est, 1):
            return float(est)
        prev = est
    return float(prev)


def _orth(vectors: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis for the column span, rank cut relative to the top singular value."""
    if vectors.size == 0:
        return vectors
    U, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    r = int(np.sum(s > tol * s[0]))
    return U[:, :r]


def algebra_basis(A, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns of vec'd matrices) of the unital algebra generated by ``A``."""
    A = _as_tuple(A)
    m = A.m
    dtype = complex
    basis = np.eye(m, dtype=dtype).reshape(m * m, 1) / np.sqrt(m)
    frontier = [np.eye(m, dtype=dtype)]
    while frontier:
        new = []
        for W in frontier:
            for M in A.mats:
                P = M @ W
                v = P.reshape(-1)
                resid = v - basis @ (basis.conj().T @ v)
                nv = np.linalg.norm(v)
                if nv > 0 and np.linalg.norm(resid) > tol * max(nv, 1.0):
                    basis = np.column_stack([basis, resid / np.linalg.norm(resid)])
                    new.append(P / nv)
                    if basis.shape[1] == m * m:
                        return basis
        frontier = new
    return basis


def is_irreducible(A, tol: float = RANK_TOL) -> bool:
    """True iff ``A`` generates the full matrix algebra (Burnside)."""
    A = _as_tuple(A)
    return algebra_basis(A, tol).shape[1] == A.m * A.m


def spin(A: MatrixTuple, vectors: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the smallest ``A``-invariant subspace containing ``vectors``."""
    Q = _orth(vectors, tol)
    while True:
        grown = _orth(np.column_stack([Q] + [M @ Q for M in A.mats]), tol)
        if grown.shape[1] == Q.shape[1]:
            return grown
        Q = grown


def _eigen_candidates(B: np.ndarray, cluster_tol: float = 1e-4) -> list:
    """Eigenvalues of ``B`` plus the mean of each cluster of nearby ones.

    A Jordan block of size ``j`` splits its eigenvalue by about ``eps^(1/j)``
    while the cluster mean stays accurate to roundoff.
    """
    ev = np.linalg.eigvals(B)
    scale = max(1.0, float(np.max(np.abs(ev), initial=0.0)))
    out = list(ev)
    seen = np.zeros(len(ev), dtype=bool)
    for i in range(len(ev)):
        if seen[i]:
            continue
        near = np.abs(ev - ev[i]) <= cluster_tol * scale
        seen |= near
        if near.sum() > 1:
            out.insert(0, ev[near].mean())
    return out


def find_invariant_subspace(A, seed: int = 0, tol: float = RANK_TOL, attempts: int = 8):
    """Orthonormal basis of a proper nonzero common invariant subspace, or ``None`` if irreducible.

    Kernel vectors of a random algebra element are spun under ``A``; the
    same is done for ``A^*``, whose invariant subspaces have ``A``-invariant
    orthogonal complements.
    """
    A = _as_tuple(A)
    m = A.m
    if m == 1:
        return None
    alg = algebra_basis(A, tol)
    if alg.shape[1] == m * m:
        return None
    rng = np.random.default_rng(seed)
    Astar = A.adjoint()
    borderline = []
    for _ in range(attempts):
        coeffs = rng.standard_normal(alg.shape[1]) + 1j * rng.standard_normal(alg.shape[1])
        B = (alg @ coeffs).reshape(m, m)
        for lam in _eigen_candidates(B):
            Bl = B - lam * np.eye(m)
            for op, gens, complement in ((Bl, A, False), (Bl.conj().T, Astar, True)):
                _, s, Vh = np.linalg.svd(op)
                null = Vh[s <= max(1e-8 * s[0], 1e-12)].conj().T if s[0] > 0 else np.eye(m)
                if null.shape[1] == 0:
                    borderline.extend(s[-2:].tolist())
                    continue
                for j in range(null.shape[1]):
                    V = spin(gens, null[:, j:j + 1], tol)
                    if 0 < V.shape[1] < m:
                        if complement:
                            return sla.null_space(V.conj().T)
                        return V
    raise DegeneracyError("invariant subspace detection unstable; borderline singular values",
                          sorted(borderline)[:6])


def similarity_to_column_contraction(A, check: bool = True) -> np.ndarray:
    """Invertible ``S`` with ``col_norm(S^{-1} A S) <= 1``.

    ``W`` is the Perron eigenvector of ``T -> sum_j A_j^* T A_j``; then
    ``S = W^{-1/2}`` gives ``sum_j (S^{-1}A_jS)^*(S^{-1}A_jS) = S Psi(W) S = rho^2 I``.
    """
    A = _as_tuple(A)
    m = A.m
    if check and not is_irreducible(A):
        raise ReducibleError("similarity_to_column_contraction needs an irreducible tuple")
    Phi = cp_map(A.adjoint()).matrix
    ev, vecs = np.linalg.eig(Phi)
    rho2 = float(np.max(np.abs(ev)))
    if np.sqrt(rho2) > 1 + 1e-10:
        raise InfeasibleError(f"outer spectral radius {np.sqrt(rho2):.6g} exceeds 1")
    if m == 1:
        return np.eye(1)
    near = np.abs(ev - rho2) <= PF_MULTIPLICITY_TOL * max(rho2, 1.0)
    if int(np.sum(near)) != 1:
        raise DegeneracyError("Perron eigenvalue is not simple", np.sort_complex(ev[near]))
    W = vecs[:, int(np.argmax(near))].reshape((m, m), order="F")
    tr = np.trace(W)
    W = W * (abs(tr) / tr)
    W = (W + W.conj().T) / 2
    w_eig, U = np.linalg.eigh(W)
    if w_eig[0] <= 0:
        if w_eig[0] > -1e-10 * w_eig[-1]:
            W = W + 1e-12 * w_eig[-1] * np.eye(m)
            w_eig, U = np.linalg.eigh(W)
        else:
            raise DegeneracyError("Perron eigenvector is not positive definite", w_eig[:2])
    S = (U * (1 / np.sqrt(w_eig))) @ U.conj().T
    return S.real if np.allclose(S.imag, 0) and not np.iscomplexobj(A.mats) else S


@dataclass
class TriangularPencilForm:
    """Block upper triangular form ``S^{-1} A S`` with contractive diagonal tuples."""

    original: MatrixTuple
    S: np.ndarray
    sizes: list[int]
    diagonal: list[MatrixTuple]
    zero_flags: list[bool]
    offdiag: dict[tuple[int, int], MatrixTuple] = field(default_factory=dict)
    blocked: MatrixTuple | None = None

    @property
    def ell(self) -> int:
        return len(self.sizes)

    @property
    def offsets(self) -> list[int]:
        return [int(x) for x in np.concatenate([[0], np.cumsum(self.sizes)])]

    @property
    def conjugated(self) -> MatrixTuple:
        """``S^{-1} A S`` with roundoff below the diagonal blocks removed."""
        if self.blocked is not None:
            return self.blocked
        return self.original.conjugate_by(self.S)

    @property
    def atom_count(self) -> int:
        return sum(1 for z in self.zero_flags if not z)

    def leading(self, k: int) -> MatrixTuple:
        """Tuple of the first ``k`` diagonal blocks with their couplings."""
        end = self.offsets[k]
        return MatrixTuple(self.conjugated.mats[:, :end, :end])

    def column_coupling(self, k: int) -> MatrixTuple:
        """Coefficients above diagonal block ``k`` (0-based), stacked over blocks ``< k``."""
        off = self.offsets
        return MatrixTuple(self.conjugated.mats[:, :off[k], off[k]:off[k + 1]])

    def residual_error(self) -> float:
        """Deviation of the stored blocks from the conjugated tuple."""
        C = self.original.conjugate_by(self.S).mats
        off = self.offsets
        err = 0.0
        for i in range(self.ell):
            sl_i = slice(off[i], off[i + 1])
            err = max(err, float(np.max(np.abs(C[:, sl_i, sl_i] - self.diagonal[i].mats))))
            for j in range(i):
                sl_j = slice(off[j], off[j + 1])
                err = max(err, float(np.max(np.abs(C[:, sl_i, sl_j]), initial=0.0)))
            for j in range(i + 1, self.ell):
                sl_j = slice(off[j], off[j + 1])
                err = max(err, float(np.max(np.abs(C[:, sl_i, sl_j] - self.offdiag[(i, j)].mats),
                                            initial=0.0)))
        return err


def _unitary_blocks(A: MatrixTuple, seed: int, tol: float) -> tuple[np.ndarray, list[int]]:
    """Unitary ``Q`` and block sizes with ``Q^* A Q`` block upper triangular, irreducible diagonal."""
    m = A.m
    V = find_invariant_subspace(A, seed=seed, tol=tol)
    if V is None:
        return np.eye(m, dtype=complex), [m]
    r = V.shape[1]
    Q = np.column_stack([V, sla.null_space(V.conj().T)])
    B = MatrixTuple(np.stack([Q.conj().T @ M @ Q for M in A.mats]))
    Q1, s1 = _unitary_blocks(MatrixTuple(B.mats[:, :r, :r]), seed + 1, tol)
    Q2, s2 = _unitary_blocks(MatrixTuple(B.mats[:, r:, r:]), seed + 2, tol)
    return Q @ sla.block_diag(Q1, Q2), s1 + s2


def burnside_triangularize(A, seed: int = 0, tol: float = RANK_TOL,
                           zero_tol: float = 1e-12) -> TriangularPencilForm:
    """Similarity to block upper triangular form with zero or column-contractive diagonal blocks."""
    A = _as_tuple(A)
    rho = outer_spectral_radius(A)
    if rho > 1 + 1e-10:
        raise InfeasibleError(f"outer spectral radius {rho:.6g} exceeds 1")
    Q, sizes = _unitary_blocks(A, seed, tol)
    B = np.stack([Q.conj().T @ M @ Q for M in A.mats])
    off = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    scale = max(float(np.max(np.abs(A.mats), initial=0.0)), 1.0)
    diag_S = []
    zero_flags = []
    for i, mi in enumerate(sizes):
        blk = MatrixTuple(B[:, off[i]:off[i + 1], off[i]:off[i + 1]])
        if float(np.max(np.abs(blk.mats))) <= zero_tol * scale:
            zero_flags.append(True)
            diag_S.append(np.eye(mi))
        else:
            zero_flags.append(False)
            diag_S.append(similarity_to_column_contraction(blk, check=False))
    S = Q @ sla.block_diag(*diag_S)
    if not np.iscomplexobj(A.mats) and np.allclose(S.imag, 0, atol=1e-14):
        S = S.real
    C = np.array(A.conjugate_by(S).mats)
    # roundoff-level entries from the similarity are set to zero
    C[np.abs(C) <= 1e-14 * scale] = 0
    diagonal, offdiag = [], {}
    for i in range(len(sizes)):
        si = slice(off[i], off[i + 1])
        blk = C[:, si, si]
        if zero_flags[i]:
            blk = np.zeros_like(blk)
        diagonal.append(MatrixTuple(blk))
        for j in range(i + 1, len(sizes)):
            offdiag[(i, j)] = MatrixTuple(C[:, si, off[j]:off[j + 1]])
    for i in range(len(sizes)):
        si = slice(off[i], off[i + 1])
        C[:, si, si] = diagonal[i].mats
        C[:, off[i + 1]:, si] = 0
    form = TriangularPencilForm(A, S, [int(s) for s in sizes], diagonal, zero_flags, offdiag,
                                MatrixTuple(C))
    for i, blk in enumerate(diagonal):
        if not zero_flags[i] and col_norm(blk) > 1 + 1e-8:
            raise DegeneracyError(f"diagonal block {i} not contractive", [col_norm(blk)])
    return form
