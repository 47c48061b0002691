"""Free algebra arithmetic with scalar or matrix coefficients.

A :class:`FreePoly` is a finitely supported map from words (tuples of letter
indices ``1..d``) to ``rows x cols`` coefficient matrices.  Two coefficient
modes exist: floating point (complex or real double) and exact, where the
coefficient arrays hold :class:`fractions.Fraction` objects.

The text format understood by :func:`parse` is::

    poly   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor (['*'|'/'] factor)*
    factor := atom ['^' integer]
    atom   := real | real 'i' | 'x' integer | '(' poly ')'

which contains the plain ``coeff monomial`` grammar as a special case.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Iterable, Mapping

import numpy as np

Word = tuple[int, ...]

#: Degree of the zero polynomial.
ZERO_DEGREE = -math.inf

#: Float coefficient matrices with every entry at or below this are dropped.
PRUNE_TOL = 1e-14


def word_key(w: Word) -> tuple[int, Word]:
    """Graded lexicographic sort key."""
    return (len(w), w)


def words_up_to(d: int, n: int) -> list[Word]:
    """All words in ``d`` letters of length at most ``n``, graded-lex order."""
    out: list[Word] = [()]
    layer: list[Word] = [()]
    for _ in range(n):
        layer = [w + (i,) for w in layer for i in range(1, d + 1)]
        out.extend(layer)
    return out


class ShapeError(ValueError):
    pass


class ParseError(ValueError):
    """Syntax error in polynomial text; ``offset`` is a UTF-8 byte offset."""

    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.offset = len(text[:pos].encode("utf-8"))
        super().__init__(f"{message} (at byte {self.offset})")


def _is_zero(a: np.ndarray, exact: bool) -> bool:
    if exact:
        return all(x == 0 for x in a.flat)
    return not a.size or float(np.max(np.abs(a))) <= PRUNE_TOL


def _to_exact_array(a) -> np.ndarray:
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        if np.any(np.imag(arr) != 0):
            raise TypeError("exact mode supports real rational coefficients only")
        arr = np.real(arr)
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        out[idx] = x if isinstance(x, Fraction) else Fraction(x)
    return out


def _to_float_array(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype == object:
        if any(isinstance(x, complex) for x in arr.flat):
            return arr.astype(complex)
        return arr.astype(float)
    if np.iscomplexobj(arr):
        return arr.astype(complex)
    return arr.astype(float)


class FreePoly:
    """Immutable free polynomial with ``rows x cols`` matrix coefficients.

    Terms are kept in canonical form: graded-lex word order and no zero
    coefficient matrices.
    """

    __slots__ = ("_terms", "shape", "d", "exact")

    def __init__(
        self,
        terms: Mapping[Word, object] | None = None,
        shape: tuple[int, int] = (1, 1),
        d: int = 1,
        exact: bool = False,
    ):
        if d < 1:
            raise ValueError("letter count d must be positive")
        self.shape = (int(shape[0]), int(shape[1]))
        self.d = int(d)
        self.exact = bool(exact)
        conv = _to_exact_array if exact else _to_float_array
        clean: dict[Word, np.ndarray] = {}
        for w in sorted((terms or {}).keys(), key=word_key):
            w = tuple(int(i) for i in w)
            if any(i < 1 or i > d for i in w):
                raise ValueError(f"letter index out of range in word {w} (d={d})")
            c = conv(terms[w])
            if c.ndim == 0:
                if self.shape != (1, 1):
                    raise ShapeError("scalar coefficient for a non-scalar polynomial")
                c = c.reshape(1, 1)
            if c.shape != self.shape:
                raise ShapeError(f"coefficient of shape {c.shape}, expected {self.shape}")
            if _is_zero(c, exact):
                continue
            c.setflags(write=False)
            clean[w] = c
        self._terms = clean

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, shape=(1, 1), d=1, exact=False) -> FreePoly:
        return cls({}, shape, d, exact)

    @classmethod
    def constant(cls, c, d=1, exact=False) -> FreePoly:
        c = np.atleast_2d(np.asarray(c, dtype=object if exact else None))
        return cls({(): c}, c.shape, d, exact)

    @classmethod
    def identity(cls, k: int, d=1, exact=False) -> FreePoly:
        one = Fraction(1) if exact else 1.0
        return cls.constant(np.eye(k, dtype=object if exact else float) * one, d, exact)

    @classmethod
    def monomial(cls, word: Iterable[int], d: int, coeff=1, exact=False) -> FreePoly:
        c = np.atleast_2d(np.asarray(coeff, dtype=object if exact else None))
        return cls({tuple(word): c}, c.shape, d, exact)

    @classmethod
    def linear(cls, mats, const=None, exact=False) -> FreePoly:
        """``const + sum_j mats[j] x_j`` for a stack of ``d`` matrices."""
        mats = list(mats)
        shape = np.shape(mats[0])
        terms = {(j + 1,): m for j, m in enumerate(mats)}
        if const is not None:
            terms[()] = const
        return cls(terms, shape, len(mats), exact)

    @classmethod
    def from_entries(cls, grid, d: int | None = None) -> FreePoly:
        """Assemble a matrix polynomial from a 2-D grid of scalar polynomials.

        ``None`` or ``0`` in the grid denotes a zero entry.
        """
        rows, cols = len(grid), len(grid[0])
        polys = [p for row in grid for p in row if isinstance(p, FreePoly)]
        exact = bool(polys) and all(p.exact for p in polys)
        if d is None:
            d = max([p.d for p in polys] + [1])
        dtype = object if exact else (complex if any(p.is_complex for p in polys) else float)
        zero = Fraction(0) if exact else 0.0
        terms: dict[Word, np.ndarray] = {}
        for i, row in enumerate(grid):
            for j, p in enumerate(row):
                if not isinstance(p, FreePoly):
                    continue
                if p.shape != (1, 1):
                    raise ShapeError("grid entries must be scalar polynomials")
                for w, c in p.items():
                    if w not in terms:
                        terms[w] = np.full((rows, cols), zero, dtype=dtype)
                    terms[w][i, j] = c[0, 0]
        return cls(terms, (rows, cols), d, exact)

    @classmethod
    def from_blocks(cls, blocks) -> FreePoly:
        """Assemble from a 2-D grid of matrix polynomials (``None`` = zero block)."""
        row_h = [next(b.shape[0] for b in row if b is not None) for row in blocks]
        col_w = [next(blocks[i][j].shape[1] for i in range(len(blocks)) if blocks[i][j] is not None)
                 for j in range(len(blocks[0]))]
        polys = [b for row in blocks for b in row if b is not None]
        exact = all(p.exact for p in polys)
        d = max(p.d for p in polys)
        dtype = object if exact else (complex if any(p.is_complex for p in polys) else float)
        zero = Fraction(0) if exact else 0.0
        R, C = sum(row_h), sum(col_w)
        terms: dict[Word, np.ndarray] = {}
        r0 = 0
        for i, row in enumerate(blocks):
            c0 = 0
            for j, b in enumerate(row):
                if b is not None:
                    if b.shape != (row_h[i], col_w[j]):
                        raise ShapeError("inconsistent block sizes")
                    for w, c in b.items():
                        if w not in terms:
                            terms[w] = np.full((R, C), zero, dtype=dtype)
                        terms[w][r0:r0 + row_h[i], c0:c0 + col_w[j]] = c
                c0 += col_w[j]
            r0 += row_h[i]
        return cls(terms, (R, C), d, exact)

    # -- accessors --------------------------------------------------------

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    @property
    def terms(self) -> dict[Word, np.ndarray]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def words(self) -> list[Word]:
        return list(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_complex(self) -> bool:
        return not self.exact and any(np.iscomplexobj(c) for c in self._terms.values())

    @property
    def degree(self) -> float | int:
        if not self._terms:
            return ZERO_DEGREE
        return max(len(w) for w in self._terms)

    def coeff(self, word: Iterable[int]) -> np.ndarray:
        w = tuple(word)
        if w in self._terms:
            return self._terms[w]
        return np.zeros(self.shape, dtype=object) * Fraction(0) if self.exact else np.zeros(self.shape)

    def constant_term(self) -> np.ndarray:
        return self.coeff(())

    def entry(self, i: int, j: int) -> FreePoly:
        return FreePoly({w: c[i, j] for w, c in self._terms.items()}, (1, 1), self.d, self.exact)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> FreePoly:
        return FreePoly({w: c[r0:r1, c0:c1] for w, c in self._terms.items()},
                        (r1 - r0, c1 - c0), self.d, self.exact)

    def scalar(self) -> complex:
        """Constant value of a 1x1 polynomial of degree <= 0."""
        if self.shape != (1, 1) or (self._terms and self.degree > 0):
            raise ShapeError("not a scalar constant")
        return self.constant_term()[0, 0]

    # -- conversions ------------------------------------------------------

    def to_float(self) -> FreePoly:
        if not self.exact:
            return self
        return FreePoly(self._terms, self.shape, self.d, exact=False)

    def to_exact(self) -> FreePoly:
        """Exact copy; float coefficients are converted without rounding."""
        if self.exact:
            return self
        return FreePoly(self._terms, self.shape, self.d, exact=True)

    def with_d(self, d: int) -> FreePoly:
        return FreePoly(self._terms, self.shape, d, self.exact)

    def transpose(self) -> FreePoly:
        return FreePoly({w: c.T for w, c in self._terms.items()},
                        (self.cols, self.rows), self.d, self.exact)

    def direct_sum(self, other: FreePoly) -> FreePoly:
        return FreePoly.from_blocks([[self, None], [None, other]])

    def pad(self, n: int) -> FreePoly:
        """``self (+) I_n``."""
        if n == 0:
            return self
        return self.direct_sum(FreePoly.identity(n, self.d, self.exact))

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other: FreePoly) -> tuple[FreePoly, FreePoly]:
        if self.d != other.d:
            d = max(self.d, other.d)
            return self._coerce_mode(other, d)
        return self._coerce_mode(other, self.d)

    def _coerce_mode(self, other, d):
        a, b = self, other
        if a.exact != b.exact:
            a, b = a.to_float(), b.to_float()
        if a.d != d:
            a = a.with_d(d)
        if b.d != d:
            b = b.with_d(d)
        return a, b

    def __add__(self, other):
        if isinstance(other, Number):
            other = FreePoly.identity(self.rows, self.d, self.exact) * other
        elif isinstance(other, np.ndarray):
            other = FreePoly.constant(other, self.d, self.exact)
        if not isinstance(other, FreePoly):
            return NotImplemented
        a, b = self._coerce(other)
        if a.shape != b.shape:
            raise ShapeError(f"cannot add shapes {a.shape} and {b.shape}")
        terms = dict(a._terms)
        for w, c in b._terms.items():
            terms[w] = terms[w] + c if w in terms else c
        return FreePoly(terms, a.shape, a.d, a.exact)

    __radd__ = __add__

    def __neg__(self):
        return FreePoly({w: -c for w, c in self._terms.items()}, self.shape, self.d, self.exact)

    def __sub__(self, other):
        if isinstance(other, (Number, np.ndarray)):
            return self + (-np.asarray(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, FreePoly):
            return mul(self, other)
        if isinstance(other, Number):
            if self.exact and not isinstance(other, (int, Fraction)):
                return self.to_float() * other
            return FreePoly({w: c * other for w, c in self._terms.items()},
                            self.shape, self.d, self.exact)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = FreePoly.identity(self.rows, self.d, self.exact)
        for _ in range(k):
            out = mul(out, self)
        return out

    def __eq__(self, other):
        if not isinstance(other, FreePoly):
            return NotImplemented
        if self.shape != other.shape or self._terms.keys() != other._terms.keys():
            return False
        return all(np.array_equal(c, other._terms[w]) for w, c in self._terms.items())

    def __hash__(self):
        return hash((self.shape, tuple(self._terms)))

    def allclose(self, other: FreePoly, atol: float = 1e-12) -> bool:
        diff = (self.to_float() - other.to_float())
        return all(float(np.max(np.abs(c))) <= atol for _, c in diff.items())

    def __repr__(self):
        if self.shape == (1, 1):
            return f"FreePoly({format_poly(self)!r}, d={self.d})"
        return f"FreePoly(shape={self.shape}, d={self.d}, terms={len(self)}, degree={self.degree})"


def mul(p: FreePoly, q: FreePoly) -> FreePoly:
    """Product in the free algebra; the coefficient of ``u`` sums ``p_w q_v`` over ``u = wv``."""
    if p.cols != q.rows:
        raise ShapeError(f"cannot multiply shapes {p.shape} and {q.shape}")
    p, q = p._coerce(q)
    out: dict[Word, np.ndarray] = {}
    for w, a in p._terms.items():
        for v, b in q._terms.items():
            u = w + v
            c = a @ b
            if u in out:
                out[u] = out[u] + c
            else:
                out[u] = c
    return FreePoly(out, (p.rows, q.cols), p.d, p.exact)


def inner(p: FreePoly, q: FreePoly):
    """``sum_w tr(q_w^* p_w)``."""
    if p.shape != q.shape:
        raise ShapeError("inner product needs equal shapes")
    total = Fraction(0) if (p.exact and q.exact) else 0.0
    for w, a in p._terms.items():
        b = q._terms.get(w)
        if b is not None:
            total += np.sum(np.conj(b) * a)
    return total


def norm_sq(p: FreePoly) -> float:
    """Squared Fock-space norm (sum of squared Frobenius norms of coefficients)."""
    if p.exact:
        return sum((x * x for c in p._terms.values() for x in c.flat), Fraction(0))
    return float(sum(np.sum(np.abs(c) ** 2) for c in p._terms.values()))


def truncate(p: FreePoly, n: int) -> FreePoly:
    """Orthogonal projection onto words of length at most ``n``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return FreePoly({w: c for w, c in p._terms.items() if len(w) <= n}, p.shape, p.d, p.exact)


# ---------------------------------------------------------------------------
# matrix tuples and evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixTuple:
    """A d-tuple of equally sized matrices, stored as an array of shape (d, r, c)."""

    mats: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mats)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        if arr.ndim != 3:
            raise ShapeError("a matrix tuple needs shape (d, r, c)")
        arr = np.array(arr, dtype=complex if np.iscomplexobj(arr) else float)
        arr.setflags(write=False)
        object.__setattr__(self, "mats", arr)

    @classmethod
    def of(cls, *mats) -> MatrixTuple:
        return cls(np.stack([np.asarray(m) for m in mats]))

    @property
    def d(self) -> int:
        return self.mats.shape[0]

    @property
    def m(self) -> int:
        if self.mats.shape[1] != self.mats.shape[2]:
            raise ShapeError("tuple is not square")
        return self.mats.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.mats.shape[1], self.mats.shape[2]

    def __getitem__(self, j: int) -> np.ndarray:
        return self.mats[j]

    def __iter__(self):
        return iter(self.mats)

    def __len__(self):
        return self.d

    def adjoint(self) -> MatrixTuple:
        return MatrixTuple(np.conj(np.transpose(self.mats, (0, 2, 1))))

    def conjugate_by(self, S: np.ndarray) -> MatrixTuple:
        """The tuple ``S^{-1} X_j S``."""
        Sinv = np.linalg.inv(S)
        return MatrixTuple(np.stack([Sinv @ X @ S for X in self.mats]))

    def scaled(self, t: float) -> MatrixTuple:
        return MatrixTuple(self.mats * t)

    def word(self, w: Word) -> np.ndarray:
        out = np.eye(self.m, dtype=self.mats.dtype)
        for i in w:
            out = out @ self.mats[i - 1]
        return out

    def in_row_ball(self) -> bool:
        G = sum(X @ X.conj().T for X in self.mats)
        return float(np.max(np.linalg.eigvalsh(G))) < 1.0

    def direct_sum(self, other: MatrixTuple) -> MatrixTuple:
        from scipy.linalg import block_diag

        return MatrixTuple(np.stack([block_diag(a, b) for a, b in zip(self.mats, other.mats)]))


def evaluate(F: FreePoly, X: MatrixTuple) -> np.ndarray:
    """``F(X) = sum_w A_w (x) X^w``, a ``(k m) x (k' m)`` matrix."""
    if F.d != X.d:
        raise ShapeError(f"polynomial has d={F.d} but tuple has d={X.d}")
    m = X.m
    cache: dict[Word, np.ndarray] = {(): np.eye(m, dtype=X.mats.dtype)}

    def power(w: Word) -> np.ndarray:
        if w not in cache:
            cache[w] = power(w[:-1]) @ X.mats[w[-1] - 1]
        return cache[w]

    out = np.zeros((F.rows * m, F.cols * m), dtype=complex)
    for w, A in F.items():
        out += np.kron(_to_float_array(A), power(w))
    if not np.any(np.imag(out)):
        return out.real
    return out


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![\w]))?"
    r"|(?P<letter>x(?P<idx>\d+))"
    r"|(?P<i>i(?![\w]))"
    r"|(?P<op>[-+*/^()])"
    r")"
)


class _Parser:
    # intermediate scalar polynomials are plain dicts Word -> number

    def __init__(self, text: str, exact: bool):
        self.text = text
        self.exact = exact
        self.toks: list[tuple[str, object, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            mt = _TOKEN.match(text, pos)
            if not mt or mt.end() == pos:
                raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", text,
                                 pos + len(text[pos:]) - len(text[pos:].lstrip()))
            start = mt.start() + len(mt.group(0)) - len(mt.group(0).lstrip())
            if mt.group("num") is not None:
                val = Fraction(mt.group("num")) if exact else float(mt.group("num"))
                if mt.group("imag"):
                    if exact:
                        raise ParseError("imaginary coefficients are not allowed in exact mode", text, start)
                    self.toks.append(("num", complex(0, val), start))
                else:
                    self.toks.append(("num", val, start))
            elif mt.group("letter") is not None:
                idx = int(mt.group("idx"))
                if idx < 1:
                    raise ParseError("letter indices start at 1", text, start)
                self.toks.append(("letter", idx, start))
            elif mt.group("i") is not None:
                if exact:
                    raise ParseError("imaginary coefficients are not allowed in exact mode", text, start)
                self.toks.append(("num", 1j, start))
            else:
                self.toks.append((mt.group("op"), None, start))
            pos = mt.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", None, len(self.text))

    def take(self, kind=None):
        tok = self.peek()
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[0]!r}", self.text, tok[2])
        self.i += 1
        return tok

    def run(self) -> dict[Word, object]:
        if not self.toks:
            raise ParseError("empty polynomial", self.text, 0)
        out = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError(f"unexpected {tok[0]!r}", self.text, tok[2])
        return out

    def expr(self):
        sign = 1
        if self.peek()[0] in "+-":
            sign = -1 if self.take()[0] == "-" else 1
        acc = _scale(self.term(), sign)
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            acc = _add(acc, _scale(self.term(), -1 if op == "-" else 1))
        return acc

    def term(self):
        acc = self.factor()
        while True:
            kind = self.peek()[0]
            if kind == "*":
                self.take()
                acc = _mul(acc, self.factor())
            elif kind == "/":
                tok = self.take()
                den = self.factor()
                if set(den) - {()} or not den:
                    raise ParseError("division only by nonzero constants", self.text, tok[2])
                acc = _scale(acc, 1 / den[()])
            elif kind in ("num", "letter", "("):
                acc = _mul(acc, self.factor())
            else:
                return acc

    def factor(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            tok = self.take("num")
            k = tok[1]
            if not (isinstance(k, (int, float, Fraction)) and float(k).is_integer() and k >= 0):
                raise ParseError("exponent must be a nonnegative integer", self.text, tok[2])
            out = {(): Fraction(1) if self.exact else 1.0}
            for _ in range(int(k)):
                out = _mul(out, base)
            return out
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return {(): val}
        if kind == "letter":
            return {(val,): Fraction(1) if self.exact else 1.0}
        if kind == "(":
            inner_ = self.expr()
            self.take(")")
            return inner_
        raise ParseError(f"unexpected {kind!r}", self.text, pos)


def _add(a, b):
    out = dict(a)
    for w, c in b.items():
        out[w] = out.get(w, 0) + c
    return out


def _scale(a, s):
    return {w: c * s for w, c in a.items()}


def _mul(a, b):
    out: dict = {}
    for w, c in a.items():
        for v, e in b.items():
            out[w + v] = out.get(w + v, 0) + c * e
    return out


def parse(text: str, d: int | None = None, exact: bool = False) -> FreePoly:
    """Parse a scalar polynomial; ``d`` defaults to the largest letter index used."""
    terms = _Parser(text, exact).run()
    top = max((max(w) for w in terms if w), default=1)
    if d is None:
        d = top
    elif top > d:
        raise ParseError(f"letter index x{top} out of range for d={d}", text, 0)
    return FreePoly(terms, (1, 1), d, exact)


def _fmt_real(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    x = float(x)
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _fmt_coeff(c) -> tuple[int, str]:
    """Sign and magnitude text for a coefficient; complex values carry sign +1."""
    if isinstance(c, (complex, np.complexfloating)) and c.imag != 0:
        re_, im = float(c.real), float(c.imag)
        sep = "-" if im < 0 else "+"
        return 1, f"({_fmt_real(re_)}{sep}{_fmt_real(abs(im))}i)"
    if isinstance(c, (complex, np.complexfloating)):
        c = float(c.real)
    return (-1 if c < 0 else 1), _fmt_real(abs(c))


def format_poly(p: FreePoly) -> str:
    """Canonical text of a scalar polynomial; ``parse`` inverts it."""
    if p.shape != (1, 1):
        raise ShapeError("format_poly handles scalar polynomials; use to_json for matrices")
    parts: list[str] = []
    for w, c in p.items():
        sign, mag = _fmt_coeff(c[0, 0])
        mono = "*".join(f"x{i}" for i in w)
        if not mono:
            body = mag
        elif mag == "1":
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not parts:
            parts.append(("-" if sign < 0 else "") + body)
        else:
            parts.append(("- " if sign < 0 else "+ ") + body)
    return " ".join(parts) if parts else "0"


def to_json(p: FreePoly) -> dict:
    """Matrix polynomial document with fields rows, cols, d, entries."""
    entries = []
    for i in range(p.rows):
        for j in range(p.cols):
            e = p.entry(i, j)
            if not e.is_zero:
                entries.append({"i": i, "j": j, "poly": format_poly(e)})
    doc = {"rows": p.rows, "cols": p.cols, "d": p.d, "entries": entries}
    if p.exact:
        doc["exact"] = True
    return doc


def from_json(doc: dict | str, exact: bool | None = None) -> FreePoly:
    if isinstance(doc, str):
        doc = json.loads(doc)
    for key in ("rows", "cols", "d", "entries"):
        if key not in doc:
            raise ValueError(f"matrix polynomial document lacks field {key!r}")
    rows, cols, d = int(doc["rows"]), int(doc["cols"]), int(doc["d"])
    if exact is None:
        exact = bool(doc.get("exact", False))
    grid = [[None] * cols for _ in range(rows)]
    for e in doc["entries"]:
        i, j = int(e["i"]), int(e["j"])
        if not (0 <= i < rows and 0 <= j < cols):
            raise ValueError(f"entry ({i}, {j}) outside a {rows}x{cols} matrix")
        grid[i][j] = parse(e["poly"], d=d, exact=exact)
    if all(g is None for row in grid for g in row):
        return FreePoly.zero((rows, cols), d, exact)
    return FreePoly.from_entries(grid, d=d)


def tuple_to_json(X: MatrixTuple) -> dict:
    def enc(M):
        if np.iscomplexobj(M):
            return [[[float(z.real), float(z.imag)] for z in row] for row in M]
        return M.tolist()

    return {"d": X.d, "complex": bool(np.iscomplexobj(X.mats)), "mats": [enc(M) for M in X.mats]}


def tuple_from_json(doc: dict | str) -> MatrixTuple:
    """Read a tuple document ``{"mats": [...]}``; complex entries are ``[re, im]`` pairs."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    mats = []
    for M in doc["mats"]:
        arr = np.asarray(M, dtype=float)
        if arr.ndim == 3:
            arr = arr[..., 0] + 1j * arr[..., 1]
        mats.append(arr)
    return MatrixTuple(np.stack(mats))
