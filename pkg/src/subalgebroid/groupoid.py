"""Concrete Lie groupoid models, right-invariant flows and covering lifts.

Four models are supported: the pair groupoid of a box or of a torus, matrix
groups (SO, GL, translations, tori) and transformation groupoids of such a
group acting linearly or by translations.  Arrows are float arrays; the
source point is always carried exactly, never integrated.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .algebroid import AlgebroidPresentation, Section
from .polycore import Polynomial, PolyVector, compile_polys

COMPOSABILITY_TOL = 1e-7


class GroupoidError(ValueError):
    pass


class NotComposable(GroupoidError):
    pass


class DomainExit(GroupoidError):
    """A flow or chart evaluation left the declared domain."""

    def __init__(self, message: str, sample=None):
        super().__init__(message)
        self.sample = None if sample is None else np.asarray(sample, dtype=float)


@dataclass(frozen=True)
class RKParams:
    step: float = 1e-3
    tol: float = 1e-10
    max_steps: int = 2**14


DEFAULT_RK = RKParams()


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def wrap01(x: np.ndarray) -> np.ndarray:
    y = np.mod(x, 1.0)
    return np.where(y >= 1.0, 0.0, y)


def torus_diff(a, b) -> np.ndarray:
    """Representative of a - b in [-1/2, 1/2)."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return d - np.floor(d + 0.5)


def fmt17(values) -> str:
    return "(" + ", ".join(format(float(v), ".17g") for v in np.ravel(values)) + ")"


@dataclass(frozen=True, eq=False)
class GroupoidElement:
    """An arrow.  For pair models ``first``/``second`` are target/source points;
    for matrix groups ``first`` is the matrix; for transformation groupoids
    ``first`` is the group matrix and ``second`` the source point."""

    spec: "GroupoidSpec"
    first: np.ndarray
    second: np.ndarray

    @property
    def source(self) -> np.ndarray:
        return self.spec.source(self)

    @property
    def target(self) -> np.ndarray:
        return self.spec.target(self)

    def __str__(self) -> str:
        return self.spec.format(self)

    __repr__ = __str__

    def to_dict(self) -> dict:
        return {
            "model": self.spec.tag,
            "first": [float(v) for v in np.ravel(self.first)],
            "second": [float(v) for v in np.ravel(self.second)],
        }


# ---------------------------------------------------------------------------
# flow fields built from sections


@functools.lru_cache(maxsize=1024)
def _compiled_section(presentation: AlgebroidPresentation, section: Section):
    n = presentation.base_dim
    coeffs = compile_polys(list(section.coeffs), n)
    anchor_pv = presentation.anchor_of(section)
    anchor = compile_polys(list(anchor_pv), n)
    return coeffs, anchor, anchor_pv


def _affine_parts(pv: PolyVector) -> tuple[np.ndarray, np.ndarray] | None:
    n = pv.nvars
    if pv.degree > 1:
        return None
    A = np.zeros((len(pv), n))
    b = np.zeros(len(pv))
    for a, p in enumerate(pv):
        for exp, c in p.items():
            if sum(exp) == 0:
                b[a] = float(c)
            else:
                A[a, exp.index(1)] = float(c)
    return A, b


class FlowField:
    """A real linear combination ``sum w_i alpha_i`` of polynomial sections."""

    def __init__(self, presentation: AlgebroidPresentation, terms: Sequence[tuple[float, Section]]):
        self.presentation = presentation
        self.terms = [(float(w), s) for w, s in terms if float(w) != 0.0 and not s.is_zero()]
        for _, s in self.terms:
            presentation.check_section(s)
        self._compiled = [(w, _compiled_section(presentation, s)) for w, s in self.terms]

    @classmethod
    def of(cls, presentation, alpha) -> FlowField:
        if isinstance(alpha, FlowField):
            return alpha
        if isinstance(alpha, Section):
            return cls(presentation, [(1.0, alpha)])
        return cls(presentation, alpha)

    def scaled(self, t: float) -> FlowField:
        return FlowField(self.presentation, [(w * t, s) for w, s in self.terms])

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def values(self, y) -> np.ndarray:
        out = np.zeros(self.presentation.rank)
        for w, (cf, _, _) in self._compiled:
            out += w * cf(y)
        return out

    def anchor_values(self, y) -> np.ndarray:
        out = np.zeros(self.presentation.base_dim)
        for w, (_, af, _) in self._compiled:
            out += w * af(y)
        return out

    def constant_value(self) -> np.ndarray | None:
        if not all(s.is_constant() for _, s in self.terms):
            return None
        y = np.zeros(self.presentation.base_dim)
        return self.values(y)

    def anchor_affine(self) -> tuple[np.ndarray, np.ndarray] | None:
        n = self.presentation.base_dim
        A, b = np.zeros((n, n)), np.zeros(n)
        for w, (_, _, pv) in self._compiled:
            parts = _affine_parts(pv)
            if parts is None:
                return None
            A += w * parts[0]
            b += w * parts[1]
        return A, b


# ---------------------------------------------------------------------------
# integrators


def _rk4(f, x0: np.ndarray, t: float, n_steps: int, inside=None) -> np.ndarray:
    h = t / n_steps
    x = np.array(x0, dtype=float)
    for _ in range(n_steps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if inside is not None and not inside(x):
            raise DomainExit("trajectory left the domain", x)
    return x


def integrate(f, x0, t: float, rk: RKParams = DEFAULT_RK, inside=None) -> np.ndarray:
    """Fixed-step RK4, doubling the step count until two runs agree within ``rk.tol``."""
    x0 = np.asarray(x0, dtype=float)
    if t == 0.0:
        return x0.copy()
    n = max(1, math.ceil(abs(t) / rk.step))
    prev = _rk4(f, x0, t, n, inside)
    while 2 * n <= rk.max_steps:
        n *= 2
        cur = _rk4(f, x0, t, n, inside)
        if np.max(np.abs(cur - prev)) <= rk.tol:
            return cur
        prev = cur
    return prev


def _affine_flow(A: np.ndarray, b: np.ndarray, x: np.ndarray, t: float, inside=None, checkpoints: int = 16):
    n = len(x)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = b
    y = np.append(np.asarray(x, dtype=float), 1.0)
    if inside is None:
        return (expm(t * M) @ y)[:n]
    step = expm((t / checkpoints) * M)
    for _ in range(checkpoints):
        y = step @ y
        if not inside(y[:n]):
            raise DomainExit("trajectory left the domain", y[:n])
    return (expm(t * M) @ np.append(np.asarray(x, dtype=float), 1.0))[:n]


# ---------------------------------------------------------------------------
# models


class GroupoidSpec:
    tag = "abstract"
    base_dim = 0
    periodic_base = False

    @functools.cached_property
    def presentation(self) -> AlgebroidPresentation:
        return self._presentation()

    # subclasses implement these
    def unit(self, x) -> GroupoidElement: ...
    def source(self, g) -> np.ndarray: ...
    def target(self, g) -> np.ndarray: ...
    def _multiply(self, g, h) -> GroupoidElement: ...
    def invert(self, g) -> GroupoidElement: ...
    def residual(self, g, h) -> np.ndarray: ...
    def flow(self, alpha: FlowField, g0, t: float, rk: RKParams = DEFAULT_RK) -> GroupoidElement: ...

    def base_diff(self, x, y) -> np.ndarray:
        if self.periodic_base:
            return torus_diff(x, y)
        return np.asarray(x, dtype=float) - np.asarray(y, dtype=float)

    def base_distance(self, x, y) -> float:
        d = self.base_diff(x, y)
        return float(np.linalg.norm(d)) if d.size else 0.0

    def normalize_base(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.base_dim)
        return wrap01(x) if self.periodic_base else x

    def check_base(self, x) -> np.ndarray:
        x = self.normalize_base(x)
        if not self.base_inside(x):
            raise DomainExit(f"base point {fmt17(x)} outside the domain", x)
        return x

    def base_inside(self, x) -> bool:
        return True

    def multiply(self, g, h, tol: float = COMPOSABILITY_TOL) -> GroupoidElement:
        if g.spec is not self or h.spec is not self:
            raise GroupoidError("elements belong to different groupoids")
        gap = self.base_distance(self.source(g), self.target(h))
        if gap > tol:
            raise NotComposable(f"s(g) and t(h) differ by {gap:.3e} > {tol:.1e}")
        return self._multiply(g, h)

    def distance(self, g, h) -> float:
        r = self.residual(g, h)
        return float(np.max(np.abs(r))) if r.size else 0.0

    def anchor_flow(self, alpha: FlowField, x, t: float, rk: RKParams = DEFAULT_RK) -> np.ndarray:
        """Time-t flow of rho(alpha) on the base."""
        alpha = FlowField.of(self.presentation, alpha)
        x = self.check_base(x)
        if alpha.is_zero or self.base_dim == 0:
            return x
        aff = alpha.anchor_affine()
        inside = None if self.periodic_base else self.base_inside
        if aff is not None:
            y = _affine_flow(aff[0], aff[1], x, t, inside)
        else:
            if self.periodic_base:
                raise GroupoidError("only constant fields are supported on the torus")
            y = integrate(alpha.anchor_values, x, t, rk, inside)
        return self.normalize_base(y)

    def format(self, g) -> str:
        return f"{self.tag}[{fmt17(g.first)}; {fmt17(g.second)}]"

    def element(self, first, second=()) -> GroupoidElement:
        return GroupoidElement(self, _frozen(first), _frozen(second))


@dataclass(frozen=True, eq=False)
class PairBox(GroupoidSpec):
    """Pair groupoid of an axis-aligned box in R^n; arrows are (target, source)."""

    n: int
    box: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    tag = "PairBox"

    def __post_init__(self):
        if self.box is None:
            object.__setattr__(self, "box", ((-3.0,) * self.n, (3.0,) * self.n))

    @property
    def base_dim(self) -> int:
        return self.n

    def _presentation(self):
        return AlgebroidPresentation.tangent(self.n)

    def base_inside(self, x) -> bool:
        lo, hi = self.box
        eps = 1e-12
        return bool(np.all(np.asarray(x) >= np.asarray(lo) - eps) and np.all(np.asarray(x) <= np.asarray(hi) + eps))

    def unit(self, x):
        x = self.check_base(x)
        return self.element(x, x)

    def source(self, g):
        return g.second

    def target(self, g):
        return g.first

    def _multiply(self, g, h):
        return self.element(g.first, h.second)

    def invert(self, g):
        return self.element(g.second, g.first)

    def residual(self, g, h):
        return np.concatenate([self.base_diff(g.first, h.first), self.base_diff(g.second, h.second)])

    def flow(self, alpha, g0, t, rk=DEFAULT_RK):
        alpha = FlowField.of(self.presentation, alpha)
        return self.element(self.anchor_flow(alpha, g0.first, t, rk), g0.second)


@dataclass(frozen=True, eq=False)
class PairTorus(PairBox):
    """Pair groupoid of the torus R^n/Z^n, coordinates in [0, 1)."""

    tag = "PairTorus"
    periodic_base = True

    def __post_init__(self):
        object.__setattr__(self, "box", ((0.0,) * self.n, (1.0,) * self.n))

    def base_inside(self, x) -> bool:
        return True


def _so_basis(k: int) -> list[np.ndarray]:
    if k == 3:
        L1 = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]])
        L2 = np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]])
        L3 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]])
        return [L1, L2, L3]
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            E = np.zeros((k, k), dtype=int)
            E[j, i], E[i, j] = 1, -1
            out.append(E)
    return out


def _gl_basis(k: int) -> list[np.ndarray]:
    out = []
    for i in range(k):
        for j in range(k):
            E = np.zeros((k, k), dtype=int)
            E[i, j] = 1
            out.append(E)
    return out


def _translation_basis(k: int) -> list[np.ndarray]:
    out = []
    for a in range(k):
        E = np.zeros((k + 1, k + 1), dtype=int)
        E[a, k] = 1
        out.append(E)
    return out


def nearest_orthogonal(g: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(g)
    q = u @ vt
    if np.linalg.det(q) < 0:
        u[:, -1] = -u[:, -1]
        q = u @ vt
    return q


@dataclass(frozen=True, eq=False)
class MatrixGroup(GroupoidSpec):
    """A matrix Lie group over a point.

    ``group`` is ``"SO"``, ``"GL"``, ``"translation"`` (R^k as unipotent affine
    matrices) or ``"torus"`` (the same with translations taken mod 1).
    """

    k: int
    group: str = "SO"
    tol: float = 1e-9
    tag = "MatrixGroup"

    def __post_init__(self):
        if self.group not in ("SO", "GL", "translation", "torus"):
            raise GroupoidError(f"unknown group tag {self.group!r}")

    @property
    def base_dim(self) -> int:
        return 0

    @property
    def size(self) -> int:
        return self.k + 1 if self.group in ("translation", "torus") else self.k

    @functools.cached_property
    def basis(self) -> list[np.ndarray]:
        if self.group == "SO":
            return _so_basis(self.k)
        if self.group == "GL":
            return _gl_basis(self.k)
        return _translation_basis(self.k)

    def _presentation(self):
        return AlgebroidPresentation.from_lie_algebra(self.basis, 0, name=f"{self.group}({self.k})")

    def algebra_element(self, coeffs) -> np.ndarray:
        return sum(float(c) * b for c, b in zip(coeffs, self.basis))

    def clean(self, m: np.ndarray) -> np.ndarray:
        m = np.array(m, dtype=float)
        if self.group == "SO":
            return nearest_orthogonal(m)
        if self.group == "torus":
            m[: self.k, self.k] = wrap01(m[: self.k, self.k])
        return m

    def membership_residual(self, m) -> float:
        m = np.asarray(m, dtype=float)
        if self.group == "SO":
            return float(np.linalg.norm(m.T @ m - np.eye(self.k)))
        if self.group == "GL":
            return 0.0 if abs(np.linalg.det(m)) > self.tol else float("inf")
        ref = np.eye(self.k + 1)
        ref[: self.k, self.k] = m[: self.k, self.k]
        return float(np.linalg.norm(m - ref))

    def from_matrix(self, m) -> GroupoidElement:
        m = np.asarray(m, dtype=float)
        if m.shape != (self.size, self.size) or self.membership_residual(m) > max(self.tol, 1e-7):
            raise GroupoidError("matrix is not an element of the group")
        return self.element(self.clean(m), np.zeros(0))

    def from_translation(self, v) -> GroupoidElement:
        m = np.eye(self.k + 1)
        m[: self.k, self.k] = v
        return self.element(self.clean(m), np.zeros(0))

    def translation_part(self, g) -> np.ndarray:
        return np.asarray(g.first)[: self.k, self.k]

    def unit(self, x=()):
        return self.element(np.eye(self.size), np.zeros(0))

    def source(self, g):
        return g.second

    def target(self, g):
        return g.second

    def _multiply(self, g, h):
        return self.element(self.clean(g.first @ h.first), np.zeros(0))

    def invert(self, g):
        return self.element(self.clean(np.linalg.inv(g.first)), np.zeros(0))

    def residual(self, g, h):
        d = np.asarray(g.first) - np.asarray(h.first)
        if self.group == "torus":
            d = d.copy()
            d[: self.k, self.k] = torus_diff(g.first[: self.k, self.k], h.first[: self.k, self.k])
        return d.ravel()

    def flow(self, alpha, g0, t, rk=DEFAULT_RK):
        alpha = FlowField.of(self.presentation, alpha)
        if alpha.is_zero:
            return g0
        a = self.algebra_element(alpha.constant_value())
        return self.element(self.clean(expm(t * a) @ g0.first), np.zeros(0))


@dataclass(frozen=True, eq=False)
class Transformation(GroupoidSpec):
    """Transformation groupoid G x M for a matrix group acting on a box or torus.

    SO/GL groups act linearly (``g.x``); translation groups act by
    ``x + action @ v``.  Arrows are ``(g, x)`` with source ``x``.
    """

    group: MatrixGroup
    n: int
    base: str = "box"
    box: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    action: tuple[tuple[int, ...], ...] | None = None
    tag = "Transformation"

    def __post_init__(self):
        if self.base not in ("box", "torus"):
            raise GroupoidError("base must be 'box' or 'torus'")
        if self.box is None:
            object.__setattr__(self, "box", ((-3.0,) * self.n, (3.0,) * self.n))
        if self.group.group in ("translation", "torus"):
            if self.action is None:
                if self.n != self.group.k:
                    raise GroupoidError("translation action needs an n x k matrix")
                object.__setattr__(
                    self, "action", tuple(tuple(1 if i == j else 0 for j in range(self.n)) for i in range(self.n))
                )
            mat = np.asarray(self.action)
            if mat.shape != (self.n, self.group.k):
                raise GroupoidError("action matrix has the wrong shape")
        elif self.group.k != self.n:
            raise GroupoidError("linear action needs k == n")

    @property
    def base_dim(self) -> int:
        return self.n

    @property
    def periodic_base(self) -> bool:
        return self.base == "torus"

    @property
    def linear(self) -> bool:
        return self.group.group in ("SO", "GL")

    def _presentation(self):
        if self.linear:
            return AlgebroidPresentation.from_lie_algebra(self.group.basis, self.n, linear_action=True,
                                                          name=f"{self.group.group}({self.group.k}) x R^{self.n}")
        n, k = self.n, self.group.k
        anchor = tuple(
            tuple(Polynomial.constant(n, Fraction(self.action[a][i])) for i in range(k)) for a in range(n)
        )
        return AlgebroidPresentation(n, k, anchor, {}, name=f"R^{k} x T^{n}")

    def base_inside(self, x) -> bool:
        if self.periodic_base:
            return True
        lo, hi = self.box
        eps = 1e-12
        return bool(np.all(np.asarray(x) >= np.asarray(lo) - eps) and np.all(np.asarray(x) <= np.asarray(hi) + eps))

    def act(self, g: np.ndarray, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.linear:
            return g @ x
        v = g[: self.group.k, self.group.k]
        return self.normalize_base(x + np.asarray(self.action, dtype=float) @ v)

    def unit(self, x):
        x = self.check_base(x)
        return self.element(np.eye(self.group.size), x)

    def make(self, g, x) -> GroupoidElement:
        if isinstance(g, GroupoidElement):
            g = g.first
        return self.element(self.group.clean(g), self.check_base(x))

    def source(self, g):
        return g.second

    def target(self, g):
        return self.act(g.first, g.second)

    def _multiply(self, g, h):
        return self.element(self.group.clean(g.first @ h.first), h.second)

    def invert(self, g):
        return self.element(self.group.clean(np.linalg.inv(g.first)), self.target(g))

    def residual(self, g, h):
        gm = GroupoidElement(self.group, g.first, np.zeros(0))
        hm = GroupoidElement(self.group, h.first, np.zeros(0))
        return np.concatenate([self.group.residual(gm, hm), self.base_diff(g.second, h.second)])

    def flow(self, alpha, g0, t, rk=DEFAULT_RK):
        alpha = FlowField.of(self.presentation, alpha)
        if alpha.is_zero:
            return g0
        x = np.asarray(g0.second)
        inside = None if self.periodic_base else self.base_inside
        const = alpha.constant_value()
        if const is not None:
            a = self.group.algebra_element(const)
            if inside is not None:
                step = expm((t / 16) * a)
                g = np.array(g0.first)
                for _ in range(16):
                    g = step @ g
                    if not inside(self.act(g, x)):
                        raise DomainExit("trajectory left the domain", self.act(g, x))
            return self.element(self.group.clean(expm(t * a) @ g0.first), x)
        if self.periodic_base:
            raise GroupoidError("only constant sections are supported over the torus")
        size = self.group.size

        def rhs(flat):
            g = flat.reshape(size, size)
            y = self.act(g, x)
            return (self.group.algebra_element(alpha.values(y)) @ g).ravel()

        def inside_flat(flat):
            return self.base_inside(self.act(flat.reshape(size, size), x))

        gt = integrate(rhs, np.asarray(g0.first).ravel(), t, rk, inside_flat).reshape(size, size)
        return self.element(self.group.clean(gt), x)


# ---------------------------------------------------------------------------
# module-level API


def unit(spec: GroupoidSpec, x=()) -> GroupoidElement:
    return spec.unit(x)


def source(g: GroupoidElement) -> np.ndarray:
    return g.spec.source(g)


def target(g: GroupoidElement) -> np.ndarray:
    return g.spec.target(g)


def multiply(g: GroupoidElement, h: GroupoidElement, tol: float = COMPOSABILITY_TOL) -> GroupoidElement:
    return g.spec.multiply(g, h, tol)


def invert(g: GroupoidElement) -> GroupoidElement:
    return g.spec.invert(g)


def distance(g: GroupoidElement, h: GroupoidElement) -> float:
    if g.spec is not h.spec:
        raise GroupoidError("elements belong to different groupoids")
    return g.spec.distance(g, h)


def right_invariant_flow(spec: GroupoidSpec, alpha, g0: GroupoidElement, t: float, rk: RKParams = DEFAULT_RK):
    """Time-t flow of the right-invariant extension of ``alpha`` starting at ``g0``."""
    return spec.flow(FlowField.of(spec.presentation, alpha), g0, float(t), rk)


def anchor_flow(spec: GroupoidSpec, alpha, x, t: float, rk: RKParams = DEFAULT_RK) -> np.ndarray:
    return spec.anchor_flow(FlowField.of(spec.presentation, alpha), x, float(t), rk)


# ---------------------------------------------------------------------------
# morphisms and coverings


class Morphism:
    """Lie groupoid morphism covering the identity of the base."""

    source_spec: GroupoidSpec
    target_spec: GroupoidSpec

    def __call__(self, g: GroupoidElement) -> GroupoidElement:
        raise NotImplementedError

    def algebroid_matrix(self) -> list[list[Polynomial]]:
        """The induced bundle map as an r2 x r1 polynomial matrix."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class IdentityMorphism(Morphism):
    spec: GroupoidSpec

    @property
    def source_spec(self):
        return self.spec

    @property
    def target_spec(self):
        return self.spec

    def __call__(self, g):
        return g

    def algebroid_matrix(self):
        p = self.spec.presentation
        n = p.base_dim
        return [[Polynomial.constant(n, 1 if i == j else 0) for j in range(p.rank)] for i in range(p.rank)]


@dataclass(frozen=True, eq=False)
class AnchorMorphism(Morphism):
    """``(g, x) -> (g.x, x)`` from a transformation groupoid to a pair groupoid."""

    source_spec: Transformation
    target_spec: PairBox

    def __post_init__(self):
        if not isinstance(self.source_spec, Transformation) or not isinstance(self.target_spec, PairBox):
            raise GroupoidError("anchor morphisms go from a transformation groupoid to a pair groupoid")
        if self.source_spec.n != self.target_spec.n:
            raise GroupoidError("base dimensions differ")
        if self.source_spec.periodic_base != self.target_spec.periodic_base:
            raise GroupoidError("base kinds differ")

    def __call__(self, g):
        return self.target_spec.element(
            self.target_spec.normalize_base(self.source_spec.target(g)), g.second
        )

    def algebroid_matrix(self):
        return [list(row) for row in self.source_spec.presentation.anchor]


class Covering(Morphism):
    """Surjective morphism with discrete fibers, with unique path lifting."""

    # half the injectivity radius (1/2) of R -> R/Z
    lift_threshold = 0.25

    def project(self, g):
        return self(g)

    def lift_path(self, path: Sequence[GroupoidElement]) -> GroupoidElement:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class TorusPairCovering(Covering, AnchorMorphism):
    """``R^k x T^k -> T^k x T^k``, ``(v, x) -> (x + v mod 1, x)``."""

    source_spec: Transformation = None
    target_spec: PairTorus = None

    @classmethod
    def build(cls, k: int) -> TorusPairCovering:
        return cls(Transformation(MatrixGroup(k, "translation"), k, base="torus"), PairTorus(k))

    def lift_path(self, path):
        if not path:
            raise GroupoidError("empty path")
        x = np.asarray(path[0].second)
        if self.target_spec.distance(path[0], self.target_spec.unit(x)) > 1e-9:
            raise GroupoidError("path must start at a unit")
        v = np.zeros(self.source_spec.group.k)
        prev = np.asarray(path[0].first)
        for g in path[1:]:
            if self.target_spec.base_distance(g.second, x) > 1e-9:
                raise GroupoidError("path leaves the source fiber")
            jump = torus_diff(g.first, prev)
            if np.max(np.abs(jump)) >= self.lift_threshold:
                raise GroupoidError("sampling too coarse for a unique lift")
            v = v + jump
            prev = np.asarray(g.first)
        return self.source_spec.make(self.source_spec.group.from_translation(v).first, x)


@dataclass(frozen=True, eq=False)
class TorusGroupCovering(Covering):
    """``R^k -> T^k`` as groups, reduction mod 1."""

    k: int = 1

    @functools.cached_property
    def source_spec(self):
        return MatrixGroup(self.k, "translation")

    @functools.cached_property
    def target_spec(self):
        return MatrixGroup(self.k, "torus")

    def __call__(self, g):
        return self.target_spec.from_translation(self.source_spec.translation_part(g))

    def algebroid_matrix(self):
        return IdentityMorphism(self.source_spec).algebroid_matrix()

    def lift_path(self, path):
        if not path:
            raise GroupoidError("empty path")
        if self.target_spec.distance(path[0], self.target_spec.unit()) > 1e-9:
            raise GroupoidError("path must start at a unit")
        v = np.zeros(self.k)
        prev = self.target_spec.translation_part(path[0])
        for g in path[1:]:
            cur = self.target_spec.translation_part(g)
            jump = torus_diff(cur, prev)
            if np.max(np.abs(jump)) >= self.lift_threshold:
                raise GroupoidError("sampling too coarse for a unique lift")
            v = v + jump
            prev = cur
        return self.source_spec.from_translation(v)


def covering_lift_path(cov: Covering, path: Sequence[GroupoidElement]) -> GroupoidElement:
    """Endpoint of the unique lift of ``path`` starting at a unit of the covering groupoid."""
    return cov.lift_path(path)
