"""Explicit approximants for block triangular contractive pencils.

For ``f = 1 - z`` the one-variable optimal approximants are
``pi_n(z) = sum_k (n + 1 - k)/(n + 2) z^k`` and

    pi_n(z)(1 - z) - 1 = -(1/(n+2)) * sum_{k=0}^{n+1} z^k.

Substituting a column contraction ``Mx`` for ``z`` gives approximants for
``I - Mx``.  For a pencil with ``ell`` diagonal blocks the recursion

    sigma_{ell+1} = [[sigma_ell, r], [0, q]],
    q = pi_n(M x),  r = -sigma_ell (Y x) pi_N(M x),  N = n^(3^ell)

keeps the residual of order ``1/n``.  Degrees grow like ``n^(3^(ell-1))``,
so the objects here are expression trees that are expanded into
:class:`~fockopa.freealg.FreePoly` only when small enough.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fockops import DEFAULT_CAPACITY, CapacityError, basis_size, col_norm, structural_power_norms
from .freealg import FreePoly, MatrixTuple, mul, norm_sq
from .specrad import TriangularPencilForm

CONTRACTION_TOL = 1e-10
#: Above this many pencil powers the residual sum is replaced by its closed-form bound.
EXACT_SUM_LIMIT = 200_000


class ContractionError(ValueError):
    pass


def _check_contraction(M: MatrixTuple) -> float:
    c = col_norm(M)
    if c > 1 + CONTRACTION_TOL:
        raise ContractionError(f"column norm {c:.12g} exceeds 1")
    return c


# ---------------------------------------------------------------------------
# expression trees
# ---------------------------------------------------------------------------


class StructuredPoly:
    """Lazily expanded matrix polynomial."""

    shape: tuple[int, int]
    d: int

    @property
    def degree(self) -> int:
        raise NotImplementedError

    def _expand(self) -> FreePoly:
        raise NotImplementedError

    def expand(self, capacity: int = DEFAULT_CAPACITY) -> FreePoly:
        size = basis_size(self.d, self.degree)
        if size > capacity:
            raise CapacityError(f"expansion needs {size} words, above capacity {capacity}")
        return self._expand()


class Const(StructuredPoly):
    def __init__(self, C: np.ndarray, d: int):
        self.C = np.atleast_2d(np.asarray(C))
        self.shape = self.C.shape
        self.d = d

    @property
    def degree(self) -> int:
        return 0

    def _expand(self) -> FreePoly:
        return FreePoly.constant(self.C, self.d)


class PencilPower(StructuredPoly):
    """``(Mx)^k``; ``M`` may be rectangular when ``k = 1``."""

    def __init__(self, M: MatrixTuple, k: int):
        if k > 1 and M.shape[0] != M.shape[1]:
            raise ValueError("powers need a square tuple")
        self.M, self.k = M, k
        self.shape = M.shape if k > 0 else (M.shape[0], M.shape[0])
        self.d = M.d

    @property
    def degree(self) -> int:
        return self.k

    def norm_sq(self) -> float:
        return float(structural_power_norms(self.M, self.k)[-1]) if self.k else float(self.shape[0])

    def _expand(self) -> FreePoly:
        lin = FreePoly.linear(list(self.M.mats))
        out = FreePoly.identity(self.shape[0], self.d) if self.k == 0 else lin
        for _ in range(self.k - 1):
            out = mul(out, lin)
        return out


class PencilSeries(StructuredPoly):
    """``sum_k a_k (Mx)^k`` for a square contraction tuple ``M``."""

    def __init__(self, M: MatrixTuple, coeffs, mult_bound: float | None = None):
        self.M = M
        self.coeffs = list(coeffs)
        self.shape = (M.m, M.m)
        self.d = M.d
        self.mult_bound = mult_bound

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def norm_sq(self) -> float:
        """Homogeneous pieces are orthogonal, so norms add up by degree."""
        norms = structural_power_norms(self.M, self.degree)
        return float(sum(abs(a) ** 2 * t for a, t in zip(self.coeffs, norms)))

    def _expand(self) -> FreePoly:
        lin = FreePoly.linear(list(self.M.mats))
        power = FreePoly.identity(self.M.m, self.d)
        out = FreePoly.zero(self.shape, self.d)
        for k, a in enumerate(self.coeffs):
            if k:
                power = mul(power, lin)
            out = out + power * float(a)
        return out


class Scaled(StructuredPoly):
    def __init__(self, c: float, node: StructuredPoly):
        self.c, self.node = c, node
        self.shape, self.d = node.shape, node.d

    @property
    def degree(self) -> int:
        return self.node.degree

    def _expand(self) -> FreePoly:
        return self.node._expand() * self.c


class Product(StructuredPoly):
    def __init__(self, *factors: StructuredPoly):
        self.factors = factors
        self.shape = (factors[0].shape[0], factors[-1].shape[1])
        self.d = factors[0].d

    @property
    def degree(self) -> int:
        return sum(f.degree for f in self.factors)

    def _expand(self) -> FreePoly:
        out = self.factors[0]._expand()
        for f in self.factors[1:]:
            out = mul(out, f._expand())
        return out


class Block(StructuredPoly):
    """2x2 block upper triangular ``[[a, b], [0, c]]``."""

    def __init__(self, a: StructuredPoly, b: StructuredPoly, c: StructuredPoly):
        self.a, self.b, self.c = a, b, c
        self.shape = (a.shape[0] + c.shape[0], a.shape[1] + c.shape[1])
        self.d = a.d

    @property
    def degree(self) -> int:
        return max(self.a.degree, self.b.degree, self.c.degree)

    def _expand(self) -> FreePoly:
        return FreePoly.from_blocks([[self.a._expand(), self.b._expand()],
                                     [None, self.c._expand()]])


# ---------------------------------------------------------------------------
# one-variable approximants
# ---------------------------------------------------------------------------


def pi_coeffs(n: int, exact: bool = False) -> list:
    """Coefficients ``(n + 1 - k)/(n + 2)``, ``k = 0..n``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if exact:
        return [Fraction(n + 1 - k, n + 2) for k in range(n + 1)]
    return [(n + 1 - k) / (n + 2) for k in range(n + 1)]


def pi_sup_norm(n: int) -> Fraction:
    """``sup_{|z|<1} |pi_n(z)| = pi_n(1) = (n + 1)/2``."""
    return sum(pi_coeffs(n, exact=True), Fraction(0))


def pi_of_pencil(M: MatrixTuple, n: int) -> PencilSeries:
    """``pi_n(Mx)`` with multiplier bound ``(n + 1)/2`` from von Neumann's inequality."""
    _check_contraction(M)
    return PencilSeries(M, pi_coeffs(n), mult_bound=(n + 1) / 2)


def pi_residual_norm_sq(M: MatrixTuple, n: int) -> float:
    """``||pi_n(Mx)(I - Mx) - I||_2^2 = (n+2)^{-2} sum_{k=0}^{n+1} ||(Mx)^k||_2^2``."""
    _check_contraction(M)
    return float(np.sum(structural_power_norms(M, n + 1))) / (n + 2) ** 2


def pi_residual_bound(M: MatrixTuple, n: int) -> float:
    """``(m + c^2 (n + 1))/(n + 2)^2`` with ``c^2 = ||Mx||_2^2``; each ``||(Mx)^k||^2 <= c^2``."""
    _check_contraction(M)
    m = M.m
    c2 = float(sum(np.sum(np.abs(Mj) ** 2) for Mj in M.mats))
    return (m + c2 * (n + 1)) / (n + 2) ** 2


def _pi_residual(M: MatrixTuple, n: int) -> tuple[float, str]:
    if n + 1 <= EXACT_SUM_LIMIT:
        return pi_residual_norm_sq(M, n), "closed-form"
    return pi_residual_bound(M, n), "bound"


# ---------------------------------------------------------------------------
# the recursive construction
# ---------------------------------------------------------------------------


def nominal_degree_bound(n: int, ell: int) -> int:
    """``(ell - 1) + n + n^3 + ... + n^(3^(ell-1))``."""
    return (ell - 1) + sum(n ** (3 ** i) for i in range(ell))


def mult_exponent(ell: int) -> int:
    """``1 + 3 + ... + 3^(ell-1)``."""
    return (3 ** ell - 1) // 2


@dataclass
class LevelLedger:
    level: int
    N: int | None
    zero_block: bool
    degree: int
    degree_bound: int
    nominal_degree_bound: int
    mult_bound: float
    mult_const: float
    coupling_norm: float = 0.0
    K: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Sigma:
    """Built approximant with its per-level ledger."""

    poly: StructuredPoly
    n: int
    form: TriangularPencilForm
    levels: list[LevelLedger]
    parts: list[dict] = field(default_factory=list, repr=False)

    @property
    def degree(self) -> int:
        return self.poly.degree

    @property
    def degree_bound(self) -> int:
        return self.levels[-1].degree_bound

    @property
    def nominal_degree_bound(self) -> int:
        return self.levels[-1].nominal_degree_bound

    @property
    def mult_bound(self) -> float:
        return self.levels[-1].mult_bound


def coupling(form: TriangularPencilForm, k: int) -> MatrixTuple:
    """``Y`` with the pencil entry above block ``k`` equal to ``Y x``."""
    return form.column_coupling(k).scaled(-1.0)


def sigma_build(form: TriangularPencilForm, n: int, N_override: int | None = None) -> Sigma:
    """Approximant ``sigma_{n, ell}`` for ``I - (S^{-1} A S) x`` in triangular form.

    Zero diagonal blocks are already ``I`` in the pencil and use ``q = I`` and
    ``r = -sigma (Y x)``, which leaves no residual in those blocks.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    d = form.original.d
    for i, M in enumerate(form.diagonal):
        if not form.zero_flags[i]:
            _check_contraction(M)
    M1 = form.diagonal[0]
    if form.zero_flags[0]:
        sigma: StructuredPoly = Const(np.eye(form.sizes[0]), d)
        mult = 1.0
    else:
        sigma = pi_of_pencil(M1, n)
        mult = (n + 1) / 2
    levels = [LevelLedger(1, None, form.zero_flags[0], sigma.degree, sigma.degree,
                          nominal_degree_bound(n, 1), mult, 1.0)]
    parts = [{"sigma": sigma}]
    const = 1.0
    bound_deg = sigma.degree
    for k in range(1, form.ell):
        ell = k + 1
        M = form.diagonal[k]
        Y = coupling(form, k)
        cY = col_norm(Y)
        zero = form.zero_flags[k]
        N = N_override if N_override is not None else n ** (3 ** k)
        YX = PencilPower(Y, 1)
        if zero:
            q: StructuredPoly = Const(np.eye(form.sizes[k]), d)
            r: StructuredPoly = Scaled(-1.0, Product(sigma, YX))
            q_mult, r_mult = 1.0, mult * cY
            K = 0.0
            bound_deg = bound_deg + 1
        else:
            q = pi_of_pencil(M, n)
            piN = pi_of_pencil(M, N)
            r = Scaled(-1.0, Product(sigma, YX, piN))
            q_mult, r_mult = (n + 1) / 2, mult * cY * (N + 1) / 2
            c2 = float(sum(np.sum(np.abs(Mj) ** 2) for Mj in M.mats))
            K = const ** 2 * cY ** 2 * (M.m + c2)
            bound_deg = bound_deg + 1 + N
        parts.append({"sigma_prev": sigma, "q": q, "r": r, "M": M, "Y": Y, "N": N,
                      "mult_prev": mult, "zero": zero})
        sigma = Block(sigma, r, q)
        mult = float(np.sqrt(mult ** 2 + r_mult ** 2 + q_mult ** 2))
        const = float(np.sqrt(const ** 2 + (const * cY) ** 2 + 1.0))
        levels.append(LevelLedger(ell, N, zero, sigma.degree, max(bound_deg, n),
                                  nominal_degree_bound(n, ell), mult, const, cY, K))
    return Sigma(sigma, n, form, levels, parts)


def pencil_poly(form: TriangularPencilForm, k: int | None = None) -> FreePoly:
    """``I - Ax`` for the conjugated tuple, or its leading ``k`` blocks."""
    T = form.conjugated if k is None else form.leading(k)
    return FreePoly.linear([-M for M in T.mats], const=np.eye(T.m))


@dataclass
class ResidualReport:
    value: float
    mode: str
    certified: bool
    blocks: list[dict] = field(default_factory=list)


def sigma_residual_norm_sq(form: TriangularPencilForm, sigma: Sigma, mode: str = "exact",
                           capacity: int = DEFAULT_CAPACITY) -> ResidualReport:
    """``||sigma (I - Ax) - I||_2^2``.

    ``exact`` expands everything.  ``structural`` evaluates diagonal blocks
    in closed form and expands only off-diagonal blocks.  ``blockwise``
    replaces each off-diagonal block by the bound
    ``mult(sigma)^2 * col_norm(Y)^2 * ||pi_N(Mx)(I - Mx) - I||^2``.
    """
    if mode == "exact":
        S = sigma.poly.expand(capacity)
        L = pencil_poly(form)
        val = norm_sq(mul(S, L) - FreePoly.identity(L.rows, L.d))
        return ResidualReport(val, "exact", False)
    if mode not in ("structural", "blockwise"):
        raise ValueError(f"unknown mode {mode!r}")
    blocks = []
    n = sigma.n
    if form.zero_flags[0]:
        blocks.append({"block": (0, 0), "value": 0.0, "how": "zero block"})
    else:
        blocks.append({"block": (0, 0), "value": pi_residual_norm_sq(form.diagonal[0], n),
                       "how": "closed-form"})
    for k, part in enumerate(sigma.parts[1:], start=1):
        if part["zero"]:
            blocks.append({"block": (k, k), "value": 0.0, "how": "zero block"})
            blocks.append({"block": ("<", k), "value": 0.0, "how": "exact cancellation"})
            continue
        blocks.append({"block": (k, k), "value": pi_residual_norm_sq(part["M"], n),
                       "how": "closed-form"})
        if mode == "structural":
            # off-diagonal entry: sigma (Yx) + r (I - Mx)
            sig = part["sigma_prev"].expand(capacity)
            Yx = FreePoly.linear(list(part["Y"].mats))
            r = part["r"].expand(capacity)
            Lk = FreePoly.linear([-Mj for Mj in part["M"].mats], const=np.eye(part["M"].m))
            val = norm_sq(mul(sig, Yx) + mul(r, Lk))
            blocks.append({"block": ("<", k), "value": val, "how": "expanded"})
        else:
            res, how = _pi_residual(part["M"], part["N"])
            cY = col_norm(part["Y"])
            val = part["mult_prev"] ** 2 * cY ** 2 * res
            blocks.append({"block": ("<", k), "value": val, "how": f"mult bound x {how}",
                           "mult_sigma": part["mult_prev"], "col_norm_Y": cY, "pi_N_residual": res,
                           "K": sigma.levels[k].K})
    total = float(sum(b["value"] for b in blocks))
    return ResidualReport(total, mode, mode == "blockwise", blocks)


def ledger(sigma: Sigma, reports: list[ResidualReport] = ()) -> dict:
    """Serializable summary: per-level degree, multiplier and residual bounds."""
    out = {"n": sigma.n, "ell": sigma.form.ell, "levels": [lv.as_dict() for lv in sigma.levels],
           "residuals": []}
    for rep in reports:
        out["residuals"].append({"mode": rep.mode, "value": rep.value, "certified": rep.certified,
                                 "blocks": [{k: (list(v) if isinstance(v, tuple) else v)
                                             for k, v in b.items()} for b in rep.blocks]})
    return out
