"""Trivialized Lie algebroids and singular subalgebroids given by polynomial generators.

A presentation fixes a global frame ``e_1 .. e_r`` of ``A -> M`` over a box
``M`` in ``R^n``.  Sections are coefficient vectors in that frame; the anchor is
an ``n x r`` polynomial matrix and the bracket is determined by structure
polynomials ``[e_i, e_j] = sum_k c_ij^k e_k`` together with the Leibniz rule.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .polycore import (
    Polynomial,
    PolyVector,
    _sparse_nullspace,
    _sparse_solve,
    compile_polys,
    grlex_key,
    monomials_upto,
    poly_print,
    rank,
    rref,
)

DEFAULT_DEGREE_BOUND = 4
DEFAULT_PATCH_HALFWIDTH = 3
WITNESS_SAMPLES = 64


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# presentations


@dataclass(frozen=True, eq=False)
class Section:
    """A section of A, as polynomial coefficients in the frame."""

    coeffs: PolyVector

    @classmethod
    def parse(cls, texts: Sequence[str], nvars: int) -> Section:
        return cls(PolyVector.parse(texts, nvars))

    @classmethod
    def zero(cls, rank_: int, nvars: int) -> Section:
        return cls(PolyVector.zero(rank_, nvars))

    @classmethod
    def frame(cls, rank_: int, index: int, nvars: int) -> Section:
        return cls(PolyVector.unit(rank_, index, nvars))

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    @property
    def nvars(self) -> int:
        return self.coeffs.nvars

    @property
    def degree(self) -> int:
        return self.coeffs.degree

    def __add__(self, other: Section) -> Section:
        return Section(self.coeffs + other.coeffs)

    def __sub__(self, other: Section) -> Section:
        return Section(self.coeffs - other.coeffs)

    def __neg__(self) -> Section:
        return Section(-self.coeffs)

    def scale(self, f) -> Section:
        return Section(self.coeffs.scale(f))

    def is_zero(self) -> bool:
        return self.coeffs.is_zero()

    def is_constant(self) -> bool:
        return all(p.is_constant() for p in self.coeffs)

    def evaluate(self, point):
        return self.coeffs.evaluate(point)

    def to_strings(self) -> list[str]:
        return self.coeffs.to_strings()

    def __eq__(self, other) -> bool:
        return isinstance(other, Section) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Section({self.to_strings()})"


@dataclass(frozen=True, eq=False)
class AlgebroidPresentation:
    """Frame data of a Lie algebroid over a coordinate patch.

    ``anchor[a][i]`` is the a-th component of the vector field ``rho(e_i)``;
    ``structure[(i, j)]`` (only ``i < j`` stored) holds the coefficients of
    ``[e_i, e_j]``.
    """

    base_dim: int
    rank: int
    anchor: tuple[tuple[Polynomial, ...], ...]
    structure: Mapping[tuple[int, int], PolyVector] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        n, r = self.base_dim, self.rank
        if len(self.anchor) != n or any(len(row) != r for row in self.anchor):
            raise DimensionError(f"anchor must be {n}x{r}")
        for row in self.anchor:
            for p in row:
                if p.nvars != n:
                    raise DimensionError("anchor entries must have nvars = base_dim")
        clean = {}
        for (i, j), v in self.structure.items():
            if not (0 <= i < r and 0 <= j < r) or i == j:
                raise DimensionError(f"bad structure index {(i, j)}")
            if len(v) != r or v.nvars != n:
                raise DimensionError(f"structure vector {(i, j)} has wrong shape")
            if i > j:
                i, j, v = j, i, -v
            if not v.is_zero():
                clean[(i, j)] = v
        object.__setattr__(self, "structure", clean)

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_strings(
        cls,
        base_dim: int,
        rank_: int,
        anchor: Sequence[Sequence[str]],
        structure: Mapping[tuple[int, int], Sequence[str]] | None = None,
        name: str = "",
    ) -> AlgebroidPresentation:
        if len(anchor) != base_dim:
            raise DimensionError(f"anchor has {len(anchor)} rows, expected base_dim={base_dim}")
        rows = []
        for a, row in enumerate(anchor):
            if len(row) != rank_:
                raise DimensionError(f"anchor row {a} has {len(row)} entries, expected rank={rank_}")
            rows.append(tuple(Polynomial.parse(t, base_dim) for t in row))
        struct = {
            tuple(k): PolyVector.parse(v, base_dim) for k, v in (structure or {}).items()
        }
        return cls(base_dim, rank_, tuple(rows), struct, name)

    @classmethod
    def tangent(cls, n: int) -> AlgebroidPresentation:
        """TM with the coordinate frame."""
        rows = tuple(
            tuple(Polynomial.constant(n, 1 if a == i else 0) for i in range(n)) for a in range(n)
        )
        return cls(n, n, rows, {}, name=f"T R^{n}")

    @classmethod
    def from_lie_algebra(
        cls, basis: Sequence[np.ndarray], base_dim: int = 0, linear_action: bool = False, name: str = ""
    ) -> AlgebroidPresentation:
        """Action algebroid of a matrix Lie algebra (or the algebra itself when ``base_dim == 0``).

        Right-invariant conventions: ``[e_a, e_b] = -[E_a, E_b]`` and, for a
        linear action, ``rho(e_a)(y) = E_a y``.
        """
        r = len(basis)
        n = base_dim
        mats = [np.asarray(b) for b in basis]
        structure = {}
        flat = np.array([m.ravel() for m in mats], dtype=object).T
        for i, j in itertools.combinations(range(r), 2):
            comm = -(mats[i] @ mats[j] - mats[j] @ mats[i])
            coeffs = _express_in_basis(flat, comm.ravel())
            structure[(i, j)] = PolyVector([Polynomial.constant(n, c) for c in coeffs], n)
        if linear_action:
            k = mats[0].shape[0]
            if k != n:
                raise DimensionError("linear action needs matrices of size base_dim")
            rows = []
            for a in range(n):
                row = []
                for m in mats:
                    p = Polynomial.zero(n)
                    for b in range(n):
                        if m[a, b]:
                            p = p + Polynomial.var(n, b) * Fraction(m[a, b])
                    row.append(p)
                rows.append(tuple(row))
            anchor = tuple(rows)
        else:
            anchor = tuple(tuple(Polynomial.zero(n) for _ in range(r)) for _ in range(n))
        return cls(n, r, anchor, structure, name)

    # -- helpers ----------------------------------------------------------
    def structure_vector(self, i: int, j: int) -> PolyVector:
        if i == j:
            return PolyVector.zero(self.rank, self.base_dim)
        if i < j:
            return self.structure.get((i, j), PolyVector.zero(self.rank, self.base_dim))
        return -self.structure.get((j, i), PolyVector.zero(self.rank, self.base_dim))

    def check_section(self, s: Section) -> None:
        if s.rank != self.rank or s.nvars != self.base_dim:
            raise DimensionError(
                f"section of shape (r={s.rank}, n={s.nvars}) does not fit presentation "
                f"(r={self.rank}, n={self.base_dim})"
            )

    def anchor_of(self, s: Section) -> PolyVector:
        """The vector field rho(s), as n polynomial components."""
        self.check_section(s)
        n = self.base_dim
        comps = []
        for a in range(n):
            total = Polynomial.zero(n)
            for i in range(self.rank):
                if self.anchor[a][i] and s.coeffs[i]:
                    total = total + self.anchor[a][i] * s.coeffs[i]
            comps.append(total)
        return PolyVector(comps, n)

    def anchor_strings(self) -> list[list[str]]:
        return [[poly_print(p) for p in row] for row in self.anchor]

    def structure_strings(self) -> dict[str, list[str]]:
        return {f"{i},{j}": v.to_strings() for (i, j), v in sorted(self.structure.items())}


def _express_in_basis(flat_basis: np.ndarray, target: np.ndarray) -> list[Fraction]:
    """Exact coordinates of ``target`` in the columns of ``flat_basis`` (integer/rational matrices)."""
    nrows, ncols = flat_basis.shape
    rows = [
        {j: Fraction(flat_basis[i, j]) for j in range(ncols) if flat_basis[i, j]} for i in range(nrows)
    ]
    sol = _sparse_solve(rows, [Fraction(t) for t in target], ncols)
    if sol is None:
        raise ValueError("matrix basis is not closed under the commutator")
    return sol


def derivation(field_: PolyVector, f: Polynomial) -> Polynomial:
    """Apply the vector field ``field_`` to the function ``f``."""
    total = Polynomial.zero(f.nvars)
    for a, comp in enumerate(field_):
        if comp:
            d = f.diff(a)
            if d:
                total = total + comp * d
    return total


def vector_field_bracket(x: PolyVector, y: PolyVector) -> PolyVector:
    return PolyVector(
        [derivation(x, yc) - derivation(y, xc) for xc, yc in zip(x, y)], x.nvars
    )


def bracket(p: AlgebroidPresentation, s1: Section, s2: Section) -> Section:
    """Bracket of two sections via structure polynomials and the Leibniz rule."""
    p.check_section(s1)
    p.check_section(s2)
    n, r = p.base_dim, p.rank
    out = [Polynomial.zero(n) for _ in range(r)]
    f, g = s1.coeffs, s2.coeffs
    for i in range(r):
        if not f[i]:
            continue
        for j in range(r):
            if not g[j] or i == j:
                continue
            c = p.structure_vector(i, j)
            if c.is_zero():
                continue
            fg = f[i] * g[j]
            for k in range(r):
                if c[k]:
                    out[k] = out[k] + fg * c[k]
    v1 = p.anchor_of(s1)
    v2 = p.anchor_of(s2)
    for j in range(r):
        out[j] = out[j] + derivation(v1, g[j]) - derivation(v2, f[j])
    return Section(PolyVector(out, n))


@dataclass
class PresentationReport:
    jacobi: dict[tuple[int, int, int], PolyVector]
    anchor: dict[tuple[int, int], PolyVector]
    leibniz: dict[tuple[int, int, int, int], PolyVector]

    @property
    def valid(self) -> bool:
        return not (self.jacobi or self.anchor or self.leibniz)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "jacobi_defects": {",".join(map(str, k)): v.to_strings() for k, v in sorted(self.jacobi.items())},
            "anchor_defects": {",".join(map(str, k)): v.to_strings() for k, v in sorted(self.anchor.items())},
            "leibniz_defects": {",".join(map(str, k)): v.to_strings() for k, v in sorted(self.leibniz.items())},
        }


def _jacobiator(p: AlgebroidPresentation, a: Section, b: Section, c: Section) -> Section:
    return (
        bracket(p, bracket(p, a, b), c)
        + bracket(p, bracket(p, b, c), a)
        + bracket(p, bracket(p, c, a), b)
    )


def verify_presentation(p: AlgebroidPresentation, check_degree: int = 1) -> PresentationReport:
    """Collect every nonzero defect of the Lie algebroid axioms on frame data.

    Jacobi is checked on frame triples, anchor compatibility on frame pairs,
    and tensoriality of the Jacobiator (the Leibniz-level defect) against
    monomials of degree 1..check_degree.
    """
    n, r = p.base_dim, p.rank
    frame = [Section.frame(r, i, n) for i in range(r)]
    jac = {}
    for i, j, k in itertools.combinations(range(r), 3):
        d = _jacobiator(p, frame[i], frame[j], frame[k])
        if not d.is_zero():
            jac[(i, j, k)] = d.coeffs
    anc = {}
    for i, j in itertools.combinations(range(r), 2):
        d = p.anchor_of(bracket(p, frame[i], frame[j])).__sub__(
            vector_field_bracket(p.anchor_of(frame[i]), p.anchor_of(frame[j]))
        )
        if not d.is_zero():
            anc[(i, j)] = d
    leib = {}
    monos = [m for m in monomials_upto(n, check_degree) if sum(m) > 0]
    for i, j in itertools.combinations(range(r), 2):
        for k in range(r):
            base = _jacobiator(p, frame[i], frame[j], frame[k])
            for m_idx, mono in enumerate(monos):
                f = Polynomial(n, {mono: 1})
                d = _jacobiator(p, frame[i], frame[j], frame[k].scale(f)) - base.scale(f)
                if not d.is_zero():
                    leib[(i, j, k, m_idx)] = d.coeffs
    return PresentationReport(jac, anc, leib)


# ---------------------------------------------------------------------------
# singular subalgebroids


def default_patch(n: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    return (
        tuple(Fraction(-DEFAULT_PATCH_HALFWIDTH) for _ in range(n)),
        tuple(Fraction(DEFAULT_PATCH_HALFWIDTH) for _ in range(n)),
    )


@dataclass(frozen=True, eq=False)
class SingularSubalgebroid:
    """Submodule of sections generated by finitely many polynomial sections."""

    presentation: AlgebroidPresentation
    generators: tuple[Section, ...]
    degree_bound: int = DEFAULT_DEGREE_BOUND
    patch: tuple[tuple[Fraction, ...], tuple[Fraction, ...]] | None = None
    name: str = ""

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValueError("a subalgebroid needs at least one generator (use the zero section)")
        for g in gens:
            self.presentation.check_section(g)
        object.__setattr__(self, "generators", gens)
        maxdeg = max(g.degree for g in gens)
        if self.degree_bound < maxdeg:
            raise ValueError(f"degree bound {self.degree_bound} below generator degree {maxdeg}")
        if self.patch is None:
            object.__setattr__(self, "patch", default_patch(self.presentation.base_dim))
        else:
            lo, hi = self.patch
            object.__setattr__(
                self, "patch", (tuple(Fraction(v) for v in lo), tuple(Fraction(v) for v in hi))
            )

    @classmethod
    def from_strings(
        cls,
        presentation: AlgebroidPresentation,
        generators: Sequence[Sequence[str]],
        degree_bound: int = DEFAULT_DEGREE_BOUND,
        **kw,
    ) -> SingularSubalgebroid:
        gens = tuple(Section.parse(g, presentation.base_dim) for g in generators)
        for g in gens:
            presentation.check_section(g)
        return cls(presentation, gens, degree_bound, **kw)

    @property
    def size(self) -> int:
        return len(self.generators)

    def anchored_generators(self) -> list[PolyVector]:
        return [self.presentation.anchor_of(g) for g in self.generators]

    def contains_point(self, x) -> bool:
        lo, hi = self.patch
        return all(float(a) <= float(v) <= float(b) for a, v, b in zip(lo, x, hi))


# ---------------------------------------------------------------------------
# membership and syzygy linear systems


def _column(vec: PolyVector, mono) -> dict[tuple[int, tuple], Fraction]:
    col = {}
    for c, p in enumerate(vec):
        for exp, coef in p.items():
            key = (c, tuple(a + b for a, b in zip(exp, mono)))
            col[key] = coef
    return col


def _assemble(columns: list[dict], extra: dict | None = None):
    """Turn column dicts keyed by (component, monomial) into sparse rows."""
    keys = set()
    for col in columns:
        keys.update(col)
    if extra:
        keys.update(extra)
    order = sorted(keys, key=lambda k: (k[0], grlex_key(k[1])))
    index = {k: i for i, k in enumerate(order)}
    rows = [dict() for _ in order]
    for j, col in enumerate(columns):
        for k, v in col.items():
            rows[index[k]][j] = v
    rhs = [Fraction(0)] * len(order)
    for k, v in (extra or {}).items():
        rhs[index[k]] = v
    return rows, rhs


def solve_membership(
    target: PolyVector, generators: Sequence[PolyVector], degree_bound: int
) -> list[Polynomial] | None:
    """Polynomials ``f_k`` of degree <= bound with ``target = sum f_k g_k``, or None.

    Degrees are tried in increasing order so the lowest-degree solution wins.
    """
    n = target.nvars
    m = len(generators)
    if target.is_zero():
        return [Polynomial.zero(n) for _ in range(m)]
    tcol = _column(target, (0,) * n)
    for d in range(degree_bound + 1):
        monos = monomials_upto(n, d)
        columns, labels = [], []
        for k, g in enumerate(generators):
            for mono in monos:
                columns.append(_column(g, mono))
                labels.append((k, mono))
        rows, rhs = _assemble(columns, tcol)
        sol = _sparse_solve(rows, rhs, len(columns))
        if sol is not None:
            coeffs = [dict() for _ in range(m)]
            for (k, mono), v in zip(labels, sol):
                if v:
                    coeffs[k][mono] = v
            return [Polynomial(n, c) for c in coeffs]
    return None


@dataclass
class InvolutivityCertificate:
    """Outcome of :func:`involutivity_certificate`.

    ``verdict`` is ``"Certified"``, ``"NotInvolutive"`` or ``"UndeterminedUpTo"``.
    """

    verdict: str
    degree_bound: int
    coefficients: dict[tuple[int, int], list[Polynomial]] = field(default_factory=dict)
    witness: dict | None = None
    unresolved: list[tuple[int, int]] = field(default_factory=list)

    def reverify(self, B: SingularSubalgebroid) -> bool:
        """Expand every certified identity symbolically and check it is exactly zero."""
        if self.verdict != "Certified":
            return False
        p = B.presentation
        for (i, j), fs in self.coefficients.items():
            lhs = bracket(p, B.generators[i], B.generators[j])
            rhs = Section.zero(p.rank, p.base_dim)
            for f, g in zip(fs, B.generators):
                rhs = rhs + g.scale(f)
            if not (lhs - rhs).is_zero():
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "degree_bound": self.degree_bound,
            "coefficients": {
                f"{i},{j}": [poly_print(f) for f in fs] for (i, j), fs in sorted(self.coefficients.items())
            },
            "witness": self.witness,
            "unresolved_pairs": [list(p) for p in self.unresolved],
        }


# Korobov-style generating vector for the witness lattice.
_LATTICE_GEN = (1, 19, 27, 41, 11, 53, 29, 7)


def witness_points(
    patch: tuple[Sequence[Fraction], Sequence[Fraction]], count: int = WITNESS_SAMPLES
) -> list[tuple[Fraction, ...]]:
    """Deterministic rational lattice in the patch; the first point is the center."""
    lo, hi = patch
    n = len(lo)
    pts = []
    for k in range(count):
        pt = []
        for d in range(n):
            u = Fraction((k * _LATTICE_GEN[d % len(_LATTICE_GEN)] + d // len(_LATTICE_GEN)) % count, count)
            if u >= Fraction(1, 2):
                u -= 1
            center = (Fraction(lo[d]) + Fraction(hi[d])) / 2
            pt.append(center + (Fraction(hi[d]) - Fraction(lo[d])) * u)
        pts.append(tuple(pt))
    return pts


def _in_span_at(point, vectors: Sequence[PolyVector], target: PolyVector) -> bool:
    rows = [v.evaluate(point) for v in vectors]
    base = rank(rows) if rows else 0
    return rank(rows + [target.evaluate(point)]) == base


def involutivity_certificate(
    B: SingularSubalgebroid, degree_bound: int | None = None
) -> InvolutivityCertificate:
    D = B.degree_bound if degree_bound is None else degree_bound
    p = B.presentation
    gens = [g.coeffs for g in B.generators]
    coeffs, failed = {}, []
    brackets = {}
    for i, j in itertools.combinations(range(len(gens)), 2):
        br = bracket(p, B.generators[i], B.generators[j])
        brackets[(i, j)] = br
        sol = solve_membership(br.coeffs, gens, D)
        if sol is None:
            failed.append((i, j))
        else:
            coeffs[(i, j)] = sol
    if not failed:
        return InvolutivityCertificate("Certified", D, coeffs)
    for x in witness_points(B.patch):
        for i, j in failed:
            if not _in_span_at(x, gens, brackets[(i, j)].coeffs):
                witness = {
                    "point": [str(v) for v in x],
                    "pair": [i, j],
                    "bracket_value": [str(v) for v in brackets[(i, j)].evaluate(x)],
                }
                return InvolutivityCertificate("NotInvolutive", D, coeffs, witness, failed)
    return InvolutivityCertificate("UndeterminedUpTo", D, coeffs, None, failed)


@dataclass
class SyzygyBasis:
    """Generators of the degree-bounded relation module among the generators."""

    relations: list[PolyVector]
    degree_bound: int
    generators: tuple[Section, ...] = ()

    def annihilates(self) -> bool:
        for rel in self.relations:
            total = None
            for s, g in zip(rel, self.generators):
                term = g.coeffs.scale(s)
                total = term if total is None else total + term
            if total is not None and not total.is_zero():
                return False
        return True

    def to_dict(self) -> dict:
        return {"degree_bound": self.degree_bound, "relations": [r.to_strings() for r in self.relations]}


def _relation_system(gens: Sequence[PolyVector], monos):
    columns, labels = [], []
    for k, g in enumerate(gens):
        for mono in monos:
            columns.append(_column(g, mono))
            labels.append((k, mono))
    rows, _ = _assemble(columns)
    return rows, labels


def _vector_from_solution(v, labels, m: int, n: int) -> PolyVector:
    coeffs = [dict() for _ in range(m)]
    for (k, mono), c in zip(labels, v):
        if c:
            coeffs[k][mono] = c
    return PolyVector([Polynomial(n, c) for c in coeffs], n)


def _flatten(vec: PolyVector, col_index: Mapping) -> dict[int, Fraction]:
    out = {}
    for k, p in enumerate(vec):
        for exp, c in p.items():
            out[col_index[(k, exp)]] = c
    return out


def syzygy_basis_upto(B: SingularSubalgebroid, D: int | None = None) -> SyzygyBasis:
    """Relations ``sum s_i alpha_i = 0`` with ``deg s_i <= D``.

    The returned relations generate (as a module, within the degree bound)
    the full solution space: degree by degree, an echelon basis of the
    solutions is scanned and only vectors outside the span of monomial
    multiples of already chosen relations are kept.
    """
    D = B.degree_bound if D is None else D
    n = B.presentation.base_dim
    gens = [g.coeffs for g in B.generators]
    m = len(gens)
    chosen: list[PolyVector] = []
    for d in range(D + 1):
        monos = monomials_upto(n, d)
        rows, labels = _relation_system(gens, monos)
        col_index = {lab: i for i, lab in enumerate(labels)}
        ncols = len(labels)
        space = _sparse_nullspace(rows, ncols) if ncols else []
        if not space:
            continue
        span_rows = []
        for rel in chosen:
            for mono in monos:
                if rel.degree + sum(mono) <= d:
                    span_rows.append(_flatten(rel.scale(Polynomial(n, {mono: 1})), col_index))
        current = len(rref(span_rows, ncols)[1]) if span_rows else 0
        # highest-degree-first order would favour multiples; scan echelon rows from the end
        # so that low-degree vectors (pivots in late columns are high degree) come first
        ordered = sorted(space, key=lambda v: _vector_from_solution(v, labels, m, n).degree)
        for v in ordered:
            row = {j: c for j, c in enumerate(v) if c}
            new_rank = len(rref(span_rows + [row], ncols)[1])
            if new_rank > current:
                vec = _normalize_relation(_vector_from_solution(v, labels, m, n))
                chosen.append(vec)
                for mono in monos:
                    if vec.degree + sum(mono) <= d:
                        span_rows.append(_flatten(vec.scale(Polynomial(n, {mono: 1})), col_index))
                current = len(rref(span_rows, ncols)[1])
    return SyzygyBasis(chosen, D, B.generators)


def _normalize_relation(vec: PolyVector) -> PolyVector:
    """Scale so the leading term of the first nonzero entry is 1."""
    for p in vec:
        if p:
            lead = p.items()[-1][1]
            return vec.scale(1 / lead)
    return vec


@dataclass(frozen=True)
class FiberDim:
    dim: int
    degree_bound: int
    upper_bound: bool = True

    def __int__(self) -> int:
        return self.dim


@functools.lru_cache(maxsize=64)
def _cached_syzygies(B: SingularSubalgebroid, D: int) -> SyzygyBasis:
    return syzygy_basis_upto(B, D)


def fiber_dim_at(B: SingularSubalgebroid, x, D: int | None = None) -> FiberDim:
    """``m - rank`` of the evaluated degree-D syzygies; an upper bound on dim B/I_x B."""
    D = B.degree_bound if D is None else D
    x = tuple(Fraction(v) for v in x)
    rels = [rel.evaluate(x) for rel in _cached_syzygies(B, D).relations]
    return FiberDim(B.size - (rank(rels) if rels else 0), D)


def minimal_generators_at(B: SingularSubalgebroid, x, D: int | None = None) -> list[int]:
    """Lex-smallest generator indices whose classes form a basis of R^m / evaluated syzygies."""
    D = B.degree_bound if D is None else D
    x = tuple(Fraction(v) for v in x)
    m = B.size
    rows = [rel.evaluate(x) for rel in _cached_syzygies(B, D).relations]
    current = rank(rows) if rows else 0
    chosen = []
    for i in range(m):
        e = [Fraction(1 if j == i else 0) for j in range(m)]
        r = rank(rows + [e])
        if r > current:
            chosen.append(i)
            rows.append(e)
            current = r
    return chosen


def evaluation_ranks(B: SingularSubalgebroid, x) -> tuple[int, int]:
    """(rank of the generator values in R^r, rank of their anchors in R^n)."""
    vals = [g.evaluate(x) for g in B.generators]
    anchors = [a.evaluate(x) for a in B.anchored_generators()]
    exact = all(isinstance(v, (int, Fraction)) for v in x)
    if exact:
        return rank(vals), rank(anchors)
    fr = np.linalg.matrix_rank(np.array(vals, dtype=float)) if vals else 0
    ar = np.linalg.matrix_rank(np.array(anchors, dtype=float)) if anchors and anchors[0] else 0
    return int(fr), int(ar)


def pushforward_generators(
    B: SingularSubalgebroid, F: Sequence[Sequence[Polynomial]], target: AlgebroidPresentation
) -> SingularSubalgebroid:
    """Image of the generators under a bundle map ``F`` (an ``r2 x r1`` polynomial matrix)."""
    r1, r2 = B.presentation.rank, target.rank
    n = B.presentation.base_dim
    if target.base_dim != n:
        raise DimensionError("morphism must cover the identity of the same base")
    if len(F) != r2 or any(len(row) != r1 for row in F):
        raise DimensionError(f"morphism matrix must be {r2}x{r1}")
    images = []
    for g in B.generators:
        comps = []
        for row in F:
            total = Polynomial.zero(n)
            for fij, gj in zip(row, g.coeffs):
                if fij and gj:
                    total = total + fij * gj
            comps.append(total)
        images.append(Section(PolyVector(comps, n)))
    D = max([B.degree_bound] + [s.degree for s in images])
    return SingularSubalgebroid(target, tuple(images), D, B.patch, name=f"F_*({B.name})")


def anchor_matrix(p: AlgebroidPresentation) -> list[list[Polynomial]]:
    return [list(row) for row in p.anchor]


# ---------------------------------------------------------------------------
# leaves of the induced foliation


class PatchExit(RuntimeError):
    def __init__(self, message: str, sample):
        super().__init__(message)
        self.sample = sample


@functools.lru_cache(maxsize=256)
def compiled_anchor(B: SingularSubalgebroid, index: int, as_tuple: bool = False):
    return compile_polys(list(B.anchored_generators()[index]), B.presentation.base_dim, as_tuple)


def _rk4_path(f, x0, t: float, step: float, lo, hi):
    """Fixed-step RK4 on plain floats; stops after the first sample outside ``[lo, hi]``."""
    n_steps = max(1, int(round(abs(t) / step)))
    h = t / n_steps
    h2, h6 = 0.5 * h, h / 6.0
    lo, hi = [float(v) for v in lo], [float(v) for v in hi]
    x = [float(v) for v in x0]
    out = [x]
    for _ in range(n_steps):
        k1 = f(x)
        k2 = f([a + h2 * b for a, b in zip(x, k1)])
        k3 = f([a + h2 * b for a, b in zip(x, k2)])
        k4 = f([a + h * b for a, b in zip(x, k3)])
        x = [a + h6 * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(x, k1, k2, k3, k4)]
        out.append(x)
        if any(v < l or v > u for v, l, u in zip(x, lo, hi)):
            return np.array(out), True
    return np.array(out), False


@dataclass
class LeafTrace:
    seed: tuple[float, ...]
    samples: np.ndarray
    drift: dict[str, float]
    exited: bool
    exit_sample: tuple[float, ...] | None

    def to_dict(self, with_samples: bool = False) -> dict:
        d = {
            "seed": list(self.seed),
            "n_samples": int(len(self.samples)),
            "drift": self.drift,
            "exited": self.exited,
            "exit_sample": list(self.exit_sample) if self.exit_sample is not None else None,
        }
        if with_samples:
            d["samples"] = self.samples.tolist()
        return d


def _parse_direction(d) -> tuple[int, float]:
    if isinstance(d, str):
        d = d.strip()
        sign = -1.0 if d.startswith("-") else 1.0
        return int(d.lstrip("+-")), sign
    idx, sign = d
    return int(idx), float(np.sign(sign) or 1.0)


def leaf_trace(
    B: SingularSubalgebroid,
    x0: Sequence[float],
    time_budget: float,
    step: float = 1e-3,
    directions: Sequence = ("+0",),
    invariants: Sequence[Polynomial] = (),
) -> LeafTrace:
    """Concatenated RK4 flows of +/- rho(alpha_i), one leg per direction entry.

    Each leg runs for ``time_budget`` from where the previous leg ended.  The
    trace stops at the first sample outside the patch.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    lo = np.array([float(v) for v in B.patch[0]])
    hi = np.array([float(v) for v in B.patch[1]])
    x = np.array(x0, dtype=float)
    pieces = [x[None, :]]
    exited, exit_sample = False, None
    for d in directions:
        idx, sign = _parse_direction(d)
        f = compiled_anchor(B, idx, True)
        if not any(f(x)):
            continue  # a zero of the field: the leg is the point itself
        path, exited = _rk4_path(f, x, sign * time_budget, step, lo, hi)
        pieces.append(path[1:])
        x = path[-1]
        if exited:
            exit_sample = tuple(float(v) for v in x)
            break
    samples = np.vstack(pieces)
    drift = {}
    for inv in invariants:
        fn = compile_polys([inv], B.presentation.base_dim)
        vals = np.array([fn(s)[0] for s in samples])
        drift[poly_print(inv)] = float(np.max(np.abs(vals - vals[0])))
    return LeafTrace(tuple(float(v) for v in x0), samples, drift, exited, exit_sample)


def _segment_distance(p: np.ndarray, samples: np.ndarray) -> float:
    if len(samples) == 1:
        return float(np.linalg.norm(samples[0] - p))
    a, b = samples[:-1], samples[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.where(denom > 0, np.einsum("ij,ij->i", p - a, ab) / np.where(denom > 0, denom, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return float(np.min(np.linalg.norm(proj - p, axis=1)))


def classify_leaves(
    B: SingularSubalgebroid,
    seeds: Sequence[Sequence[float]],
    time_budget: float = 10.0,
    step: float = 1e-3,
    invariants: Sequence[Polynomial] = (),
    match_tol: float = 1e-4,
    invariant_tol: float = 1e-6,
) -> tuple[list[int], list[LeafTrace]]:
    """Assign leaf labels to seeds by tracing each generator flow both ways.

    Seeds where every anchored generator vanishes are singleton leaves.  Two
    other seeds share a label when one lies on the traced orbit of the other
    and all invariants agree.
    """
    n = B.presentation.base_dim
    traces: list[list[LeafTrace]] = []
    fixed = []
    inv_fns = [compile_polys([q], n) for q in invariants]
    for s in seeds:
        xs = np.array(s, dtype=float)
        speeds = [np.linalg.norm(compiled_anchor(B, i)(xs)) for i in range(B.size)]
        fixed.append(max(speeds, default=0.0) == 0.0)
        legs = []
        for i in range(B.size):
            for sign in ("+", "-"):
                legs.append(leaf_trace(B, s, time_budget, step, [f"{sign}{i}"], invariants))
        traces.append(legs)
    parent = list(range(len(seeds)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, si in enumerate(seeds):
        if fixed[i]:
            continue
        for j, sj in enumerate(seeds):
            if i == j or fixed[j]:
                continue
            pj = np.array(sj, dtype=float)
            if any(abs(fn(pj)[0] - fn(np.array(si, dtype=float))[0]) > invariant_tol for fn in inv_fns):
                continue
            if any(_segment_distance(pj, leg.samples) <= match_tol for leg in traces[i]):
                parent[find(j)] = find(i)
    roots, labels = {}, []
    for i in range(len(seeds)):
        r = find(i)
        labels.append(roots.setdefault(r, len(roots)))
    flat = [leg for legs in traces for leg in legs]
    return labels, flat
