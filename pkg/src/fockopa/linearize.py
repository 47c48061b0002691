"""Linearization of matrix free polynomials to monic pencils by bordering.

Each step removes one monomial ``c x^w`` of degree >= 2 from an entry
``(i, j)`` and borders the matrix by one row and column::

    [[F', a e_i], [b e_j^T, 1]],   a = -c x_{w_1},  b = x^{w_2 ... w_k}

where ``F' = F - c x^w E_ij``.  Since ``F' - a b E_ij = F`` the bordered
matrix ``H`` satisfies ``L^{-1} (F (+) 1) R^{-1} = H`` with elementary
``L = [[I, -a e_i], [0, 1]]`` and ``R = [[I, 0], [-b e_j^T, 1]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fockops import multiplier_norm_upper_bound
from .freealg import FreePoly, MatrixTuple, evaluate, mul, word_key


class NormalizationError(ValueError):
    """Input does not have identity constant term."""


@dataclass(frozen=True)
class MonicPencil:
    """The pencil ``I - A_1 x_1 - ... - A_d x_d``."""

    A: MatrixTuple
    #: exact form kept when built from exact coefficients
    exact_poly: FreePoly | None = field(default=None, compare=False, repr=False)

    @property
    def size(self) -> int:
        return self.A.m

    @property
    def d(self) -> int:
        return self.A.d

    def as_poly(self, exact: bool = False) -> FreePoly:
        if exact and self.exact_poly is not None:
            return self.exact_poly
        mats = [-M for M in self.A.mats]
        if exact:
            mats = [np.real(M) for M in mats]
        return FreePoly.linear(mats, const=np.eye(self.size), exact=exact)

    def evaluate(self, X: MatrixTuple) -> np.ndarray:
        m = X.m
        return np.eye(self.size * m) - sum(np.kron(Aj, Xj) for Aj, Xj in zip(self.A.mats, X.mats))

    @classmethod
    def from_poly(cls, G: FreePoly) -> MonicPencil:
        if G.rows != G.cols:
            raise ValueError("pencil must be square")
        if G.degree > 1:
            raise ValueError("not a linear pencil")
        if not np.array_equal(np.asarray(G.constant_term(), dtype=complex), np.eye(G.rows)):
            raise NormalizationError("pencil constant term is not the identity")
        A = np.stack([-np.asarray(G.coeff((j,)), dtype=complex if G.is_complex else float)
                      for j in range(1, G.d + 1)])
        return cls(MatrixTuple(A), G if G.exact else None)


@dataclass
class StableAssocWitness:
    """``P (F (+) I_pad_F) Q = G (+) I_pad_G`` with polynomial inverses."""

    P: FreePoly
    Q: FreePoly
    P_inv: FreePoly
    Q_inv: FreePoly
    pad_F: int
    pad_G: int = 0
    negated_border: bool = True
    steps: list[dict] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.P.rows

    @property
    def D1(self) -> int:
        return int(max(self.P.degree, 0) + max(self.Q.degree, 0))

    @property
    def D2(self) -> int:
        return int(max(self.P_inv.degree, 0) + max(self.Q_inv.degree, 0))

    @classmethod
    def trivial(cls, k: int, d: int, exact: bool = True) -> StableAssocWitness:
        eye = FreePoly.identity(k, d, exact)
        return cls(eye, eye, eye, eye, 0, 0)

    def compose(self, other: StableAssocWitness) -> StableAssocWitness:
        """Witness for ``F ~ H`` from ``self: F ~ G`` and ``other: G ~ H``.

        Both witnesses are padded by identities to a common size first.
        """
        # self: P1 (F+I_a) Q1 = G + I_b ; other: P2 (G + I_c) Q2 = H + I_e
        a, b, c, e = self.pad_F, self.pad_G, other.pad_F, other.pad_G
        extra1 = max(c - b, 0)
        extra2 = max(b - c, 0)
        P1, Q1, P1i, Q1i = (M.pad(extra1) for M in (self.P, self.Q, self.P_inv, self.Q_inv))
        P2, Q2, P2i, Q2i = (M.pad(extra2) for M in (other.P, other.Q, other.P_inv, other.Q_inv))
        return StableAssocWitness(
            P=mul(P2, P1), Q=mul(Q1, Q2), P_inv=mul(P1i, P2i), Q_inv=mul(Q2i, Q1i),
            pad_F=a + extra1, pad_G=e + extra2,
            steps=self.steps + other.steps,
        )


@dataclass
class Verification:
    ok: bool
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _first_difference(lhs: FreePoly, rhs: FreePoly, tol: float) -> str | None:
    if lhs.shape != rhs.shape:
        return f"shape {lhs.shape} != {rhs.shape}"
    diff = lhs - rhs
    for w, c in diff.items():
        if lhs.exact and rhs.exact:
            return f"word {w or '()'} differs: {c.tolist()}"
        if float(np.max(np.abs(np.asarray(c, dtype=complex)))) > tol:
            return f"word {w or '()'} differs by {float(np.max(np.abs(np.asarray(c, dtype=complex)))):.3g}"
    return None


def verify_stable_assoc(F: FreePoly, G: FreePoly, witness: StableAssocWitness,
                        tol: float = 1e-12) -> Verification:
    """Check both padding identities and both inverse identities.

    Equality is exact when every polynomial involved is exact; otherwise up
    to ``tol`` per coefficient.
    """
    W = witness
    checks = [
        ("P P_inv = I", mul(W.P, W.P_inv), FreePoly.identity(W.N, F.d, W.P.exact)),
        ("P_inv P = I", mul(W.P_inv, W.P), FreePoly.identity(W.N, F.d, W.P.exact)),
        ("Q Q_inv = I", mul(W.Q, W.Q_inv), FreePoly.identity(W.N, F.d, W.P.exact)),
        ("Q_inv Q = I", mul(W.Q_inv, W.Q), FreePoly.identity(W.N, F.d, W.P.exact)),
    ]
    if F.rows + W.pad_F != W.N or G.rows + W.pad_G != W.N:
        return Verification(False, f"padding sizes inconsistent with N={W.N}")
    checks.append(("P (F+I) Q = G+I", mul(mul(W.P, F.pad(W.pad_F)), W.Q), G.pad(W.pad_G)))
    for name, lhs, rhs in checks:
        where = _first_difference(lhs, rhs, tol)
        if where is not None:
            return Verification(False, f"{name} fails: {where}")
    return Verification(True, "all identities hold")


def _elementary(N: int, i: int, j: int, entry: FreePoly) -> FreePoly:
    """``I_N + entry * E_ij``."""
    grid = [[None] * N for _ in range(N)]
    one = FreePoly.identity(1, entry.d, entry.exact)
    for k in range(N):
        grid[k][k] = one
    grid[i][j] = entry
    return FreePoly.from_entries(grid, d=entry.d)


def _pick_term(F: FreePoly):
    """Graded-lex largest term of degree >= 2, ties broken by smallest entry index."""
    best = None
    for w, c in F.items():
        if len(w) < 2:
            continue
        for (i, j), val in np.ndenumerate(c):
            if val != 0:
                key = (word_key(w), (-i, -j))
                if best is None or key > best[0]:
                    best = (key, w, i, j, val)
    return best


def linearize(F: FreePoly) -> tuple[MonicPencil, StableAssocWitness]:
    """Monic pencil stably associated to ``F`` (with ``F(0) = I``) and its witness."""
    if F.rows != F.cols:
        raise ValueError("linearize needs a square matrix polynomial")
    k, d, exact = F.rows, F.d, F.exact
    const = F.constant_term()
    if not all(const[i, j] == (1 if i == j else 0) for i in range(k) for j in range(k)):
        raise NormalizationError("F(0) must be the identity; pre-multiply by F(0)^{-1}")
    H = F
    W = StableAssocWitness.trivial(k, d, exact)
    while True:
        pick = _pick_term(H)
        if pick is None:
            break
        _, w, i, j, c = pick
        N = H.rows
        a = FreePoly.monomial((w[0],), d, -c, exact)
        b = FreePoly.monomial(w[1:], d, 1, exact)
        terms = H.terms
        reduced = dict(terms)
        coeff = np.array(reduced[w], dtype=object if exact else None)
        coeff[i, j] = 0
        reduced[w] = coeff
        Fp = FreePoly(reduced, H.shape, d, exact)
        # H' = L^{-1} (H (+) 1) R^{-1}
        Linv = _elementary(N + 1, i, N, a)
        L = _elementary(N + 1, i, N, -a)
        Rinv = _elementary(N + 1, N, j, b)
        R = _elementary(N + 1, N, j, -b)
        Hn = _border(Fp, a, b, i, j)
        step = W.compose(StableAssocWitness(P=Linv, Q=Rinv, P_inv=L, Q_inv=R, pad_F=1, pad_G=0))
        step.steps.append({"word": w, "entry": (i, j), "coeff": c, "size": N + 1})
        W, H = step, Hn
    return MonicPencil.from_poly(H.to_float() if not exact else H), W


def _one(d, exact):
    return FreePoly.identity(1, d, exact)


def _border(Fp: FreePoly, a: FreePoly, b: FreePoly, i: int, j: int) -> FreePoly:
    N = Fp.rows
    d, exact = Fp.d, Fp.exact
    zero = FreePoly.zero((1, 1), d, exact)
    col = [[a if r == i else zero] for r in range(N)]
    row = [[b if s == j else zero for s in range(N)]]
    return FreePoly.from_blocks([
        [Fp, FreePoly.from_blocks(col)],
        [FreePoly.from_blocks(row), _one(d, exact)],
    ])


def zero_locus_report(F: FreePoly, G: FreePoly, samples: int = 200, seed: int = 0,
                      planted=(), levels=(1, 2, 3), tol: float = 1e-9,
                      row_ball: bool = True) -> dict:
    """Compare ``|det F(X)|`` and ``|det G(X)|`` on random and planted tuples.

    Random samples are strict row contractions at the given levels.  A point
    counts as a zero when the determinant magnitude is at most ``tol``.
    """
    rng = np.random.default_rng(seed)
    d = max(F.d, G.d)
    points = [MatrixTuple(np.asarray(X.mats)) for X in planted]
    for s in range(samples):
        m = levels[s % len(levels)]
        points.append(random_row_contraction(rng, d, m) if row_ball
                      else MatrixTuple(rng.standard_normal((d, m, m))))
    rows = []
    agree = True
    for X in points:
        dF = abs(np.linalg.det(evaluate(F.with_d(d) if F.d != d else F, X)))
        dG = abs(np.linalg.det(evaluate(G.with_d(d) if G.d != d else G, X)))
        zF, zG = dF <= tol, dG <= tol
        agree &= zF == zG
        rows.append({"level": X.m, "det_F": float(dF), "det_G": float(dG),
                     "zero_F": bool(zF), "zero_G": bool(zG)})
    return {"agree": bool(agree), "points": rows,
            "zeros_F": sum(r["zero_F"] for r in rows), "zeros_G": sum(r["zero_G"] for r in rows)}


zero_locus_agreement = zero_locus_report


def random_row_contraction(rng: np.random.Generator, d: int, m: int,
                           complex_: bool = True) -> MatrixTuple:
    """Random tuple with row norm uniform in ``(0, 1)``."""
    Z = rng.standard_normal((d, m, m))
    if complex_:
        Z = Z + 1j * rng.standard_normal((d, m, m))
    G = sum(M @ M.conj().T for M in Z)
    r = float(np.sqrt(np.max(np.linalg.eigvalsh(G))))
    t = rng.uniform(0.0, 1.0)
    while t >= 1.0 or t == 0.0:
        t = rng.uniform(0.0, 1.0)
    return MatrixTuple(Z * (t / r))


@dataclass
class SandwichConstants:
    """Constants for comparing OPA decay across a stable association.

    With ``P (F (+) I) Q = G (+) I``:

    * ``c^F_n <= C1 * c^G_{n - D1}`` through the candidate ``Q (Q_n (+) I) P``;
    * ``c^G_n <= C2 * c^F_{n - D2}`` through ``Q^{-1} (P_n (+) I) P^{-1}``.

    ``C1`` and ``C2`` bound squared norms and are certified upper bounds
    built from ``sum_w ||coeff_w||`` multiplier estimates.
    """

    C1: float
    C2: float
    D1: int
    D2: int

    def as_tuple(self):
        return self.C1, self.C2, self.D1, self.D2


def decay_sandwich_constants(witness: StableAssocWitness) -> SandwichConstants:
    W = witness
    # H -> Q H Q^{-1} and H -> Q^{-1} H Q: left and right multipliers each bounded by sum ||coeff||
    c = multiplier_norm_upper_bound(W.Q) * multiplier_norm_upper_bound(W.Q_inv)
    return SandwichConstants(C1=c ** 2, C2=c ** 2, D1=W.D1, D2=W.D2)
