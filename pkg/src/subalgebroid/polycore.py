"""Exact multivariate polynomials over Q and the dense linear algebra behind them.

Polynomials are immutable maps from exponent tuples to nonzero
:class:`fractions.Fraction` coefficients.  Term order is graded
lexicographic; printing lists the largest term first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]


def grlex_key(exp: Exponent) -> tuple[int, Exponent]:
    return (sum(exp), exp)


def monomials_upto(nvars: int, degree: int) -> list[Exponent]:
    """All exponent vectors of total degree <= `degree`, ascending in grlex."""
    out: list[Exponent] = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            exp = [0] * nvars
            for v in combo:
                exp[v] += 1
            out.append(tuple(exp))
    out.sort(key=grlex_key)
    return out


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("float coefficients are not allowed in exact polynomials")
    return Fraction(value)


class Polynomial:
    """Multivariate polynomial with rational coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, object] | None = None):
        self.nvars = int(nvars)
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for {self.nvars} variables")
            c = _as_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
        self._terms = {e: c for e, c in clean.items() if c}
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> Polynomial:
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value) -> Polynomial:
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, nvars: int, index: int) -> Polynomial:
        if not 0 <= index < nvars:
            raise IndexError(f"variable x{index} out of range for nvars={nvars}")
        exp = [0] * nvars
        exp[index] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def parse(cls, text: str, nvars: int) -> Polynomial:
        return poly_parse(text, nvars)

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self):
        """Terms in ascending grlex order."""
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]))

    def coefficient(self, exp: Exponent) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self._terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other) -> Polynomial:
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> Polynomial:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> Polynomial:
        return self._coerce(other) - self

    def __mul__(self, other) -> Polynomial:
        if not isinstance(other, Polynomial):
            c = _as_fraction(other)
            return Polynomial(self.nvars, {e: c * v for e, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Polynomial:
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, tuple(self.items())))
        return self._hash

    def diff(self, var: int) -> Polynomial:
        return poly_diff(self, var)

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple, np.ndarray)):
            point = point[0]
        return poly_eval(self, point)

    def __str__(self) -> str:
        return poly_print(self)

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {poly_print(self)!r})"


# ---------------------------------------------------------------------------
# printing


def _format_monomial(exp: Exponent) -> str:
    parts = []
    for i, e in enumerate(exp):
        if e == 1:
            parts.append(f"x{i}")
        elif e > 1:
            parts.append(f"x{i}^{e}")
    return "*".join(parts)


def _format_fraction(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def poly_print(p: Polynomial) -> str:
    """Canonical text: largest grlex term first, explicit ``*`` and ``^``."""
    if p.is_zero():
        return "0"
    chunks = []
    for k, (exp, c) in enumerate(reversed(p.items())):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        mono = _format_monomial(exp)
        if not mono:
            body = _format_fraction(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_format_fraction(mag)}*{mono}"
        if k == 0:
            chunks.append(body if sign == "+" else f"-{body}")
        else:
            chunks.append(f" {sign} {body}")
    return "".join(chunks)


# ---------------------------------------------------------------------------
# parsing


class PolynomialSyntaxError(ValueError):
    """Raised by :func:`poly_parse`; ``offset`` is a byte offset into the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


def _tokenize(text: str):
    data = text.encode("utf-8")
    i = 0
    tokens = []
    while i < len(data):
        ch = chr(data[i]) if data[i] < 128 else None
        if ch is None:
            raise PolynomialSyntaxError("non-ASCII character", i)
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(data) and chr(data[j]).isdigit():
                j += 1
            tokens.append(("int", int(data[i:j]), i))
            i = j
        elif ch == "x":
            j = i + 1
            while j < len(data) and chr(data[j]).isdigit():
                j += 1
            if j == i + 1:
                raise PolynomialSyntaxError("variable needs an index", i)
            tokens.append(("var", int(data[i + 1 : j]), i))
            i = j
        elif ch in "+-*/^()":
            tokens.append((ch, ch, i))
            i += 1
        else:
            raise PolynomialSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", None, len(data)))
    return tokens


class _Parser:
    def __init__(self, text: str, nvars: int):
        self.toks = _tokenize(text)
        self.pos = 0
        self.nvars = nvars

    def peek(self):
        return self.toks[self.pos]

    def take(self, kind=None):
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            raise PolynomialSyntaxError(f"expected {kind!r}, found {tok[0]!r}", tok[2])
        self.pos += 1
        return tok

    def expr(self) -> Polynomial:
        result = self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Polynomial:
        result = self.unary()
        while self.peek()[0] == "*":
            self.take()
            result = result * self.unary()
        return result

    def unary(self) -> Polynomial:
        kind = self.peek()[0]
        if kind == "-":
            self.take()
            return -self.unary()
        if kind == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            exp = self.take("int")[1]
            base = base**exp
        return base

    def atom(self) -> Polynomial:
        kind, value, offset = self.peek()
        if kind == "int":
            self.take()
            num = Fraction(value)
            if self.peek()[0] == "/":
                self.take()
                den_tok = self.take("int")
                if den_tok[1] == 0:
                    raise PolynomialSyntaxError("zero denominator", den_tok[2])
                num = num / den_tok[1]
            return Polynomial.constant(self.nvars, num)
        if kind == "var":
            self.take()
            if value >= self.nvars:
                raise PolynomialSyntaxError(
                    f"variable x{value} out of range for nvars={self.nvars}", offset
                )
            return Polynomial.var(self.nvars, value)
        if kind == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        raise PolynomialSyntaxError(f"unexpected token {kind!r}", offset)


def poly_parse(text: str, nvars: int) -> Polynomial:
    """Parse ``text`` in variables ``x0 .. x{nvars-1}``.

    >>> str(poly_parse("(x0+x1)*(x0-x1)", 2))
    'x0^2 - x1^2'
    """
    parser = _Parser(text, nvars)
    result = parser.expr()
    tok = parser.peek()
    if tok[0] != "end":
        raise PolynomialSyntaxError(f"trailing input {tok[0]!r}", tok[2])
    return result


# ---------------------------------------------------------------------------
# evaluation and calculus


def poly_eval(p: Polynomial, point: Sequence):
    """Exact value at a rational point, float value if any coordinate is a float."""
    if len(point) != p.nvars:
        raise ValueError(f"point has {len(point)} coordinates, polynomial has {p.nvars}")
    exact = all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in point)
    if exact:
        pt = [Fraction(v) for v in point]
        total = Fraction(0)
        for exp, c in p._terms.items():
            term = c
            for v, e in zip(pt, exp):
                if e:
                    term *= v**e
            total += term
        return total
    pt = [float(v) for v in point]
    total = 0.0
    for exp, c in p.items():
        term = float(c)
        for v, e in zip(pt, exp):
            if e:
                term *= v**e
        total += term
    return total


def poly_diff(p: Polynomial, var: int) -> Polynomial:
    if not 0 <= var < p.nvars:
        raise IndexError(f"variable x{var} out of range for nvars={p.nvars}")
    out = {}
    for exp, c in p._terms.items():
        e = exp[var]
        if e:
            new = list(exp)
            new[var] = e - 1
            out[tuple(new)] = c * e
    return Polynomial(p.nvars, out)


def _poly_source(p: Polynomial, names: Sequence[str]) -> str:
    if p.is_zero():
        return "0.0"
    chunks = []
    for exp, c in p.items():
        factors = [repr(float(c))]
        for name, e in zip(names, exp):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}**{e}")
        chunks.append("*".join(factors))
    return " + ".join(chunks)


def compile_polys(
    polys: Sequence[Polynomial], nvars: int, as_tuple: bool = False
) -> Callable[[Sequence[float]], np.ndarray]:
    """Float evaluator ``x -> array([p(x) for p in polys])`` built from generated source.

    With ``as_tuple`` the evaluator returns a plain tuple of floats, which is
    cheaper inside tight scalar loops.
    """
    names = [f"x{i}" for i in range(nvars)]
    unpack = f"    {', '.join(names)}, = x\n" if nvars else ""
    exprs = [_poly_source(p, names) for p in polys]
    if as_tuple:
        exprs = [f"float({e})" for e in exprs]
    values = f"({', '.join(exprs)}{',' if len(polys) == 1 else ''})"
    result = values if as_tuple else f"_array({values}, dtype=float)"
    src = f"def _f(x):\n{unpack}    return {result}\n"
    scope = {"_array": np.array}
    exec(compile(src, "<compiled polynomials>", "exec"), scope)
    return scope["_f"]


# ---------------------------------------------------------------------------
# vectors of polynomials


class PolyVector:
    """Fixed-length tuple of polynomials over a common set of variables."""

    __slots__ = ("entries", "nvars")

    def __init__(self, entries: Iterable[Polynomial], nvars: int | None = None):
        entries = tuple(entries)
        if nvars is None:
            if not entries:
                raise ValueError("empty PolyVector needs explicit nvars")
            nvars = entries[0].nvars
        if any(e.nvars != nvars for e in entries):
            raise ValueError("all entries must share nvars")
        self.entries = entries
        self.nvars = nvars

    @classmethod
    def zero(cls, length: int, nvars: int) -> PolyVector:
        return cls([Polynomial.zero(nvars)] * length, nvars)

    @classmethod
    def parse(cls, texts: Sequence[str], nvars: int) -> PolyVector:
        return cls([poly_parse(t, nvars) for t in texts], nvars)

    @classmethod
    def unit(cls, length: int, index: int, nvars: int) -> PolyVector:
        return cls(
            [Polynomial.constant(nvars, 1 if i == index else 0) for i in range(length)], nvars
        )

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i) -> Polynomial:
        return self.entries[i]

    def _check(self, other: PolyVector) -> None:
        if len(other) != len(self) or other.nvars != self.nvars:
            raise ValueError("PolyVector shape mismatch")

    def __add__(self, other: PolyVector) -> PolyVector:
        self._check(other)
        return PolyVector([a + b for a, b in zip(self.entries, other.entries)], self.nvars)

    def __sub__(self, other: PolyVector) -> PolyVector:
        self._check(other)
        return PolyVector([a - b for a, b in zip(self.entries, other.entries)], self.nvars)

    def __neg__(self) -> PolyVector:
        return PolyVector([-a for a in self.entries], self.nvars)

    def scale(self, f) -> PolyVector:
        """Multiply every entry by a polynomial or rational scalar."""
        return PolyVector([a * f for a in self.entries], self.nvars)

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    @property
    def degree(self) -> int:
        return max((e.degree for e in self.entries), default=-1)

    def evaluate(self, point: Sequence) -> list:
        return [poly_eval(e, point) for e in self.entries]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolyVector)
            and self.nvars == other.nvars
            and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash((self.nvars, self.entries))

    def to_strings(self) -> list[str]:
        return [poly_print(e) for e in self.entries]

    def __repr__(self) -> str:
        return f"PolyVector({self.to_strings()})"


# ---------------------------------------------------------------------------
# exact linear algebra


@dataclass(frozen=True)
class QMatrix:
    """Dense rational matrix, row-major."""

    rows: int
    cols: int
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entries length must equal rows*cols")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int | None = None) -> QMatrix:
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), cols, tuple(Fraction(v) for r in rows for v in r))

    @classmethod
    def identity(cls, n: int) -> QMatrix:
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def sparse_rows(self) -> list[dict[int, Fraction]]:
        return [{j: v for j, v in enumerate(self.row(i)) if v} for i in range(self.rows)]

    def matvec(self, v: Sequence) -> list[Fraction]:
        if len(v) != self.cols:
            raise ValueError("dimension mismatch")
        return [sum((a * Fraction(b) for a, b in zip(self.row(i), v)), Fraction(0)) for i in range(self.rows)]


def rref(rows: Sequence[Mapping[int, Fraction]], ncols: int) -> tuple[list[dict[int, Fraction]], list[int]]:
    """Reduced row echelon form of sparse rows; returns (nonzero rows, pivot columns)."""
    work = [dict(r) for r in rows if r]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(work):
            break
        piv = next((i for i in range(r, len(work)) if work[i].get(c)), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        inv = 1 / work[r][c]
        prow = {k: v * inv for k, v in work[r].items()}
        work[r] = prow
        for i, row in enumerate(work):
            if i != r and c in row:
                f = row[c]
                for k, v in prow.items():
                    nv = row.get(k, Fraction(0)) - f * v
                    if nv:
                        row[k] = nv
                    else:
                        row.pop(k, None)
        pivots.append(c)
        r += 1
    return work[:r], pivots


def rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a list of rational row vectors."""
    if not rows:
        return 0
    ncols = len(rows[0])
    sparse = [{j: Fraction(v) for j, v in enumerate(row) if v} for row in rows]
    return len(rref(sparse, ncols)[1])


def _sparse_nullspace(rows: Sequence[Mapping[int, Fraction]], ncols: int) -> list[list[Fraction]]:
    reduced, pivots = rref(rows, ncols)
    pivot_set = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            if f in row:
                v[p] = -row[f]
        basis.append(v)
    if not basis:
        return []
    # present the basis itself in reduced echelon form
    ech, _ = rref([{j: x for j, x in enumerate(v) if x} for v in basis], ncols)
    return [[row.get(j, Fraction(0)) for j in range(ncols)] for row in ech]


def nullspace(m: QMatrix) -> list[list[Fraction]]:
    """Exact right-nullspace basis, rows in reduced echelon form."""
    return _sparse_nullspace(m.sparse_rows(), m.cols)


def _sparse_solve(rows: Sequence[Mapping[int, Fraction]], rhs: Sequence, ncols: int) -> list[Fraction] | None:
    aug = []
    for row, b in zip(rows, rhs):
        r = dict(row)
        b = Fraction(b)
        if b:
            r[ncols] = b
        aug.append(r)
    reduced, pivots = rref(aug, ncols + 1)
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for row, p in zip(reduced, pivots):
        x[p] = row.get(ncols, Fraction(0))
    return x


def solve_affine(m: QMatrix, rhs: Sequence) -> list[Fraction] | None:
    """One exact solution of ``m x = rhs`` (free variables set to zero), or None."""
    if len(rhs) != m.rows:
        raise ValueError(f"rhs has length {len(rhs)}, matrix has {m.rows} rows")
    return _sparse_solve(m.sparse_rows(), rhs, m.cols)
