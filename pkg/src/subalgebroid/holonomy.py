"""Path-holonomy charts, words of chart points and the numeric equivalence test.

A chart over a groupoid G is the map ``(lam, y) -> exp_y(sum lam_i alpha_i)``
built from sections of a singular subalgebroid.  A :class:`Word` is a
composable string of chart points; it represents an element of the holonomy
groupoid, and :func:`word_phi` sends it to G.  Two words are equivalent when
they carry a common bisection; :func:`equivalent` semi-decides this by
sampling bisections and solving for chart parameters with Gauss-Newton.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .algebroid import Section, SingularSubalgebroid, minimal_generators_at, solve_membership
from .groupoid import (
    COMPOSABILITY_TOL,
    DomainExit,
    FlowField,
    GroupoidElement,
    GroupoidError,
    GroupoidSpec,
    IdentityMorphism,
    AnchorMorphism,
    Covering,
    Morphism,
    TorusGroupCovering,
    fmt17,
)
from .polycore import Polynomial, PolyVector

TOL_PHI = 1e-5
TOL_RESIDUAL = 1e-6
SAMPLE_RADIUS = 0.05
NEWTON_MAX_ITER = 50
FD_STEP = 1e-6
# largest admissible |d lambda| / |d y| along a sampled bisection
MAX_LAMBDA_SLOPE = 4.0
LADDER_DEPTH = 6


class HolonomyError(ValueError):
    pass


class MembershipError(HolonomyError):
    pass


# ---------------------------------------------------------------------------
# charts


def _box(spec, dim: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(spec, (int, float)):
        return -float(spec) * np.ones(dim), float(spec) * np.ones(dim)
    lo, hi = spec
    return np.array(lo, dtype=float).reshape(dim), np.array(hi, dtype=float).reshape(dim)


def _same_presentation(p, q) -> bool:
    return (
        p is q
        or (
            p.base_dim == q.base_dim
            and p.rank == q.rank
            and p.anchor_strings() == q.anchor_strings()
            and p.structure_strings() == q.structure_strings()
        )
    )


@dataclass(frozen=True, eq=False)
class Chart:
    """Path-holonomy chart; ``sections`` are elements of ``subalgebroid``."""

    subalgebroid: SingularSubalgebroid
    groupoid: GroupoidSpec
    sections: tuple[Section, ...]
    lambda_box: tuple[np.ndarray, np.ndarray]
    base_box: tuple[np.ndarray, np.ndarray] | None = None
    gen_idx: tuple[int, ...] | None = None
    minimal_at: tuple | None = None
    name: str = "chart"

    @classmethod
    def build(
        cls,
        B: SingularSubalgebroid,
        groupoid: GroupoidSpec,
        gen_idx: Sequence[int] | None = None,
        lambda_box=8.0,
        base_box=None,
        sections: Sequence[Section] | None = None,
        minimal_at=None,
        name: str = "chart",
    ) -> Chart:
        if not _same_presentation(B.presentation, groupoid.presentation):
            raise HolonomyError(
                f"subalgebroid presentation {B.presentation.name!r} is not the algebroid of {groupoid.tag}"
            )
        if sections is None:
            if gen_idx is None:
                gen_idx = range(B.size)
            gen_idx = tuple(int(i) for i in gen_idx)
            sections = tuple(B.generators[i] for i in gen_idx)
        else:
            sections = tuple(sections)
            gens = [g.coeffs for g in B.generators]
            for s in sections:
                if solve_membership(s.coeffs, gens, B.degree_bound) is None:
                    raise MembershipError(f"{s} is not in the subalgebroid up to degree {B.degree_bound}")
        k = len(sections)
        lam = _box(lambda_box, k)
        if np.any(lam[0] > 0) or np.any(lam[1] < 0):
            raise HolonomyError("lambda box must contain 0")
        n = groupoid.base_dim
        if base_box is None and n and not groupoid.periodic_base:
            base_box = tuple(np.array([float(v) for v in bound]) for bound in B.patch)
        elif base_box is not None:
            base_box = _box(base_box, n)
        return cls(B, groupoid, sections, lam, base_box, gen_idx,
                   None if minimal_at is None else tuple(minimal_at), name)

    @classmethod
    def minimal(cls, B, groupoid, x, **kw) -> Chart:
        """Chart on the lex-smallest minimal generating set at ``x``."""
        idx = minimal_generators_at(B, x)
        return cls.build(B, groupoid, gen_idx=idx, minimal_at=x, **kw)

    @property
    def dim(self) -> int:
        return len(self.sections)

    def field(self, lam) -> FlowField:
        return FlowField(self.subalgebroid.presentation, list(zip(np.ravel(lam), self.sections)))

    def lambda_inside(self, lam, eps: float = 1e-9) -> bool:
        lam = np.asarray(lam, dtype=float)
        return bool(np.all(lam >= self.lambda_box[0] - eps) and np.all(lam <= self.lambda_box[1] + eps))

    def base_inside(self, y, eps: float = 1e-9) -> bool:
        if self.base_box is None:
            return self.groupoid.base_inside(y)
        y = np.asarray(y, dtype=float)
        return bool(np.all(y >= self.base_box[0] - eps) and np.all(y <= self.base_box[1] + eps))

    def __repr__(self) -> str:
        return f"Chart({self.name!r}, k={self.dim}, {self.groupoid.tag})"


def chart_eval(c: Chart, lam, y, check: bool = True) -> GroupoidElement:
    """phi(lam, y): time-1 right-invariant flow of sum lam_i alpha_i from the unit at y."""
    lam = np.asarray(lam, dtype=float).reshape(c.dim)
    spec = c.groupoid
    y = spec.normalize_base(y)
    if check:
        if not c.lambda_inside(lam):
            raise DomainExit(f"lambda {fmt17(lam)} outside the chart box", lam)
        if not c.base_inside(y):
            raise DomainExit(f"base {fmt17(y)} outside the chart box", y)
    return spec.flow(c.field(lam), spec.unit(y), 1.0)


def chart_target(c: Chart, lam, y, check: bool = True) -> np.ndarray:
    return c.groupoid.target(chart_eval(c, lam, y, check))


def _grid(lo: np.ndarray, hi: np.ndarray, density: int, cap: int = 1024) -> np.ndarray:
    dim = len(lo)
    if dim == 0:
        return np.zeros((1, 0))
    if density**dim <= cap:
        axes = [lo[d] + (hi[d] - lo[d]) * (np.arange(density) + 0.5) / density for d in range(dim)]
        return np.array(list(itertools.product(*axes)))
    gen = np.array([1, 379, 665, 181, 513, 295, 887, 71][: dim] + [1] * max(0, dim - 8))
    k = np.arange(cap)[:, None]
    u = ((k * gen[None, :]) % cap + 0.5) / cap
    return lo + (hi - lo) * u


@dataclass
class DomainCheck:
    passed: bool
    n_points: int
    min_singular_value: float
    failure_point: list[float] | None = None
    reason: str = ""
    skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "skipped_outside_domain": self.skipped,
            "passed": self.passed,
            "n_points": self.n_points,
            "min_singular_value": self.min_singular_value,
            "failure_point": self.failure_point,
            "reason": self.reason,
        }


def chart_domain_check(c: Chart, density: int = 5, sv_tol: float = 1e-6, h: float = 1e-6) -> DomainCheck:
    """t o phi must have rank ``base_dim`` at every grid point of lambda_box x base_box."""
    spec = c.groupoid
    n, k = spec.base_dim, c.dim
    if n == 0:
        return DomainCheck(True, 1, float("inf"))
    if c.base_box is not None:
        blo, bhi = c.base_box
    else:
        blo, bhi = np.zeros(n), np.ones(n)
    lo = np.concatenate([c.lambda_box[0], blo])
    hi = np.concatenate([c.lambda_box[1], bhi])
    pts = _grid(lo, hi, density)
    worst = float("inf")

    def tphi(z):
        return chart_target(c, z[:k], z[k:], check=False)

    skipped = 0
    for z in pts:
        try:
            J = np.zeros((n, k + n))
            for j in range(k + n):
                e = np.zeros(k + n)
                e[j] = h
                J[:, j] = spec.base_diff(tphi(z + e), tphi(z - e)) / (2 * h)
        except DomainExit:
            # the flow leaves the groupoid's domain: (lam, y) is not in the chart
            skipped += 1
            continue
        sv = np.linalg.svd(J, compute_uv=False)
        smin = float(sv[n - 1])
        worst = min(worst, smin)
        if smin < sv_tol:
            return DomainCheck(False, len(pts), worst, [float(v) for v in z], "t o phi is not a submersion", skipped)
    if skipped == len(pts):
        return DomainCheck(False, len(pts), worst, None, "no grid point lies in the chart domain", skipped)
    return DomainCheck(True, len(pts), worst, skipped=skipped)


# ---------------------------------------------------------------------------
# words


@dataclass(frozen=True, eq=False)
class ChartPoint:
    chart: Chart
    lam: np.ndarray
    base: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).reshape(self.chart.dim)
        base = self.chart.groupoid.normalize_base(self.base)
        lam.setflags(write=False)
        base.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "base", base)

    def phi(self) -> GroupoidElement:
        return chart_eval(self.chart, self.lam, self.base)

    def to_dict(self) -> dict:
        return {"chart": self.chart.name, "lambda": [float(v) for v in self.lam], "base": [float(v) for v in self.base]}


@dataclass(frozen=True, eq=False)
class Word:
    """Chart points ``u_1 ... u_k`` with ``s(phi(u_i)) = t(phi(u_{i+1}))``.

    ``base`` is the source of the word (the base of the last factor, or the
    identity's point for the empty word).  ``unsnapped`` keeps junction values
    replaced during composition.
    """

    spec: GroupoidSpec
    factors: tuple[ChartPoint, ...]
    base: np.ndarray
    unsnapped: tuple = ()

    def __post_init__(self):
        base = self.spec.normalize_base(self.base)
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "factors", tuple(self.factors))
        for f in self.factors:
            if f.chart.groupoid is not self.spec:
                raise HolonomyError("all charts of a word must live over the same groupoid")

    @classmethod
    def empty(cls, spec: GroupoidSpec, x=()) -> Word:
        return cls(spec, (), spec.check_base(x) if spec.base_dim else np.zeros(0))

    @classmethod
    def build(cls, program: Sequence[tuple[Chart, Sequence[float]]], source, spec: GroupoidSpec | None = None) -> Word:
        """Chain factors right to left starting from ``source``."""
        if spec is None:
            if not program:
                raise HolonomyError("empty program needs an explicit groupoid")
            spec = program[0][0].groupoid
        y = spec.normalize_base(source)
        x = y
        factors = []
        for chart, lam in reversed(list(program)):
            factors.append(ChartPoint(chart, lam, y))
            y = chart_target(chart, lam, y)
        return cls(spec, tuple(reversed(factors)), x)

    def __len__(self) -> int:
        return len(self.factors)

    @property
    def source(self) -> np.ndarray:
        return self.base

    def lambdas(self) -> np.ndarray:
        if not self.factors:
            return np.zeros(0)
        return np.concatenate([f.lam for f in self.factors])

    def validate(self, tol: float = COMPOSABILITY_TOL) -> None:
        if not self.factors:
            return
        if self.spec.base_distance(self.factors[-1].base, self.base) > tol:
            raise HolonomyError("last factor does not start at the word's base point")
        for left, right in zip(self.factors, self.factors[1:]):
            gap = self.spec.base_distance(left.base, chart_target(right.chart, right.lam, right.base))
            if gap > tol:
                raise HolonomyError(f"factors not composable (gap {gap:.3e})")

    def to_dict(self) -> dict:
        return {
            "source": [float(v) for v in self.base],
            "factors": [f.to_dict() for f in self.factors],
        }

    @classmethod
    def from_dict(cls, data: Mapping, charts: Mapping[str, Chart], spec: GroupoidSpec) -> Word:
        factors = tuple(ChartPoint(charts[r["chart"]], r["lambda"], r["base"]) for r in data.get("factors", []))
        return cls(spec, factors, data.get("source", []))


def word_phi(w: Word) -> GroupoidElement:
    """Ordered product of the chart values; the empty word maps to a unit."""
    spec = w.spec
    if not w.factors:
        return spec.unit(w.base)
    g = w.factors[0].phi()
    for f in w.factors[1:]:
        g = spec.multiply(g, f.phi())
    return g


def compose(w1: Word, w2: Word, tol: float = COMPOSABILITY_TOL) -> Word:
    """Concatenate, snapping the junction of ``w1`` onto the target of ``w2``."""
    if w1.spec is not w2.spec:
        raise HolonomyError("words live over different groupoids")
    spec = w1.spec
    t2 = spec.target(word_phi(w2))
    gap = spec.base_distance(w1.base, t2)
    if gap > tol:
        raise GroupoidError(f"words are not composable (gap {gap:.3e})")
    if not w1.factors:
        return Word(spec, w2.factors, w2.base, w2.unsnapped)
    last = w1.factors[-1]
    snapped = ChartPoint(last.chart, last.lam, t2)
    note = ({"junction": len(w1.factors) - 1, "original_base": [float(v) for v in last.base]},)
    return Word(spec, w1.factors[:-1] + (snapped,) + w2.factors, w2.base, w1.unsnapped + note + w2.unsnapped)


def invert(w: Word) -> Word:
    """Reverse the factors and apply ``(lam, y) -> (-lam, t(phi(lam, y)))`` to each."""
    spec = w.spec
    if not w.factors:
        return Word(spec, (), w.base)
    new = []
    for f in reversed(w.factors):
        neg = -f.lam
        if not f.chart.lambda_inside(neg):
            raise DomainExit(f"kappa image {fmt17(neg)} leaves the lambda box of {f.chart.name}", neg)
        t = chart_target(f.chart, f.lam, f.base)
        if not f.chart.base_inside(t):
            raise DomainExit(f"kappa image base {fmt17(t)} leaves the chart", t)
        new.append(ChartPoint(f.chart, neg, t))
    # the rightmost new factor is kappa of the first old factor; its base is t(w)
    return Word(spec, tuple(new), new[-1].base)


# ---------------------------------------------------------------------------
# bisections


class Bisection:
    """A local section ``y -> g`` of the source map."""

    def __init__(self, spec: GroupoidSpec, fn: Callable[[np.ndarray], GroupoidElement], label: str = ""):
        self.spec = spec
        self._fn = fn
        self.label = label

    def __call__(self, y) -> GroupoidElement:
        return self._fn(self.spec.normalize_base(y))

    @classmethod
    def identity(cls, spec: GroupoidSpec) -> Bisection:
        return cls(spec, spec.unit, "identity")

    def __repr__(self) -> str:
        return f"Bisection({self.label or 'anonymous'})"


def _split(lams: np.ndarray, charts: Sequence[Chart]) -> list[np.ndarray]:
    out, i = [], 0
    for c in charts:
        out.append(lams[i : i + c.dim])
        i += c.dim
    return out


def rebased_phi(charts: Sequence[Chart], lams: np.ndarray, y, spec: GroupoidSpec) -> GroupoidElement:
    """Phi of the word with the given factor parameters, rebuilt from source ``y``."""
    y = spec.normalize_base(y)
    if not charts:
        return spec.unit(y)
    parts = _split(np.asarray(lams, dtype=float), charts)
    elems = []
    cur = y
    for c, lam in zip(reversed(charts), reversed(parts)):
        g = chart_eval(c, lam, cur)
        elems.append(g)
        cur = spec.target(g)
    result = elems[-1]
    for g in reversed(elems[:-1]):
        result = spec._multiply(result, g)
    return result


def carried_bisection(w: Word) -> Bisection:
    """Constant-lambda bisection through the word, as a map on base points."""
    charts = [f.chart for f in w.factors]
    lams = w.lambdas()
    return Bisection(w.spec, lambda y: rebased_phi(charts, lams, y, w.spec), label="carried")


# ---------------------------------------------------------------------------
# verdicts and the equivalence semi-decision


@dataclass
class Verdict:
    """``kind`` is ``"Equivalent"``, ``"NotEquivalent"`` or ``"Unknown"``."""

    kind: str
    tolerance: float = TOL_RESIDUAL
    samples_used: int = 0
    witness: dict | None = None
    residuals: list[float] = field(default_factory=list)
    note: str = ""

    @property
    def equivalent(self) -> bool:
        return self.kind == "Equivalent"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "tolerance": self.tolerance,
            "samples_used": self.samples_used,
            "witness": self.witness,
            "residuals": [float(format(r, ".6e")) for r in self.residuals],
            "note": self.note,
        }


def gauss_newton(fun, x0, max_iter: int = NEWTON_MAX_ITER, fd_step: float = FD_STEP, tol: float = 0.0):
    """Damped Gauss-Newton with central-difference Jacobians.

    Returns ``(x, max-abs residual)``.  Evaluation failures count as infinite
    residuals and trigger step halving.
    """

    def safe(x):
        try:
            return np.asarray(fun(x), dtype=float)
        except (DomainExit, GroupoidError):
            return None

    x = np.array(x0, dtype=float)
    r = safe(x)
    if r is None:
        return x, float("inf")
    norm = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if np.max(np.abs(r), initial=0.0) <= tol or x.size == 0:
            break
        J = np.zeros((r.size, x.size))
        for j in range(x.size):
            e = np.zeros(x.size)
            e[j] = fd_step
            rp, rm = safe(x + e), safe(x - e)
            if rp is None or rm is None:
                return x, float(np.max(np.abs(r)))
            J[:, j] = (rp - rm) / (2 * fd_step)
        delta = np.linalg.lstsq(J, -r, rcond=None)[0]
        step, improved = 1.0, False
        for _ in range(30):
            cand = x + step * delta
            rc = safe(cand)
            if rc is not None and np.linalg.norm(rc) < norm:
                x, r, norm, improved = cand, rc, float(np.linalg.norm(rc)), True
                break
            step *= 0.5
        if not improved:
            break
    return x, float(np.max(np.abs(r), initial=0.0))


def bisection_samples(spec: GroupoidSpec, x, radius: float = SAMPLE_RADIUS) -> list[np.ndarray]:
    """The base point followed by 8 (or 2 when n = 1) points at distance ``radius``."""
    x = spec.normalize_base(x)
    n = spec.base_dim
    if n == 0:
        return [x]
    if n == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    elif n == 2:
        dirs = [np.array([math.cos(a), math.sin(a)]) for a in np.arange(8) * math.pi / 4]
    else:
        dirs = []
        for signs in itertools.product((1.0, -1.0), repeat=3):
            d = np.zeros(n)
            d[:3] = signs
            dirs.append(d / np.linalg.norm(d))
    return [x] + [spec.normalize_base(x + radius * d) for d in dirs]


def carries_test(
    w: Word,
    c: Bisection,
    samples: Sequence | None = None,
    tol_phi: float = TOL_PHI,
    tol_residual: float = TOL_RESIDUAL,
    max_slope: float = MAX_LAMBDA_SLOPE,
) -> Verdict:
    """Does some bisection through ``w`` (varying its lambdas) reproduce ``c`` near s(w)?

    At the word's own base point the lambdas are held fixed.  At the other
    samples a Gauss-Newton solve starts from the word's lambdas; a converged
    solution must also stay within ``max_slope * r`` of them on a ladder of
    radii r, r/2, ..., so that jumps to a different branch are rejected.
    """
    spec = w.spec
    x = w.base
    phi = word_phi(w)
    c_x = c(x)
    d0 = spec.distance(phi, c_x)
    if d0 > tol_phi:
        return Verdict("NotEquivalent", tol_phi, 1, {"phi_distance": d0, "sample": [float(v) for v in x]})
    if samples is None:
        samples = bisection_samples(spec, x)
    charts = [f.chart for f in w.factors]
    lam0 = w.lambdas()
    residuals = []

    def solve_at(y):
        cy = c(y)
        fun = lambda lam: spec.residual(rebased_phi(charts, lam, y, spec), cy)  # noqa: E731
        try:
            r0 = float(np.max(np.abs(fun(lam0)), initial=0.0))
        except (DomainExit, GroupoidError):
            r0 = float("inf")
        if r0 <= tol_residual:
            return lam0, r0
        return gauss_newton(fun, lam0, tol=tol_residual * 1e-2)

    for y in samples:
        y = spec.normalize_base(y)
        dist = spec.base_distance(y, x)
        if dist == 0.0:
            try:
                res = spec.distance(rebased_phi(charts, lam0, y, spec), c(y))
            except (DomainExit, GroupoidError):
                res = float("inf")
            residuals.append(res)
            if res > tol_residual:
                return Verdict("Unknown", tol_residual, len(residuals), None, residuals,
                               "base point residual above tolerance")
            continue
        lam, res = solve_at(y)
        residuals.append(res)
        if res > tol_residual:
            return Verdict("Unknown", tol_residual, len(residuals),
                           {"sample": [float(v) for v in y], "residual": res}, residuals, "Newton stalled")
        if np.linalg.norm(lam - lam0) > 1e-9:
            direction = spec.base_diff(y, x)
            for level in range(LADDER_DEPTH + 1):
                rad = dist / 2**level
                yy = spec.normalize_base(x + direction / 2**level)
                lam_l, res_l = (lam, res) if level == 0 else solve_at(yy)
                if res_l > tol_residual or np.linalg.norm(lam_l - lam0) > max_slope * rad + 1e-9:
                    return Verdict("Unknown", tol_residual, len(residuals),
                                   {"sample": [float(v) for v in yy], "lambda_jump": float(np.linalg.norm(lam_l - lam0))},
                                   residuals, "no continuous bisection through the word")
    return Verdict("Equivalent", tol_residual, len(residuals), None, residuals)


def _usable_samples(spec, x, bisections, radius):
    for _ in range(12):
        pts = bisection_samples(spec, x, radius)
        try:
            for b in bisections:
                for y in pts:
                    b(y)
            return pts
        except (DomainExit, GroupoidError):
            radius /= 2
    return [spec.normalize_base(x)]


def equivalent(
    w1: Word,
    w2: Word,
    samples: Sequence | None = None,
    tol_phi: float = TOL_PHI,
    tol_residual: float = TOL_RESIDUAL,
    oracle: Callable[[Word, Word], bool] | None = None,
    radius: float = SAMPLE_RADIUS,
) -> Verdict:
    """Three-valued equivalence of two words.

    NotEquivalent is issued on a Phi mismatch, or when the bisection test
    fails and ``oracle`` confirms the words are distinct.  Equivalent always
    implies the Phi values agree within ``tol_phi``.
    """
    if w1.spec is not w2.spec:
        raise HolonomyError("words live over different groupoids")
    spec = w1.spec
    p1, p2 = word_phi(w1), word_phi(w2)
    d = spec.distance(p1, p2)
    if d > tol_phi:
        return Verdict("NotEquivalent", tol_phi, 0, {"phi_distance": d, "phi1": str(p1), "phi2": str(p2)})
    b1, b2 = carried_bisection(w1), carried_bisection(w2)
    if samples is None:
        samples = _usable_samples(spec, w1.base, (b1, b2), radius)
    v1 = carries_test(w2, b1, samples, tol_phi, tol_residual)
    if v1.equivalent:
        return v1
    v2 = carries_test(w1, b2, samples, tol_phi, tol_residual)
    if v2.equivalent:
        return v2
    report = {"forward": v1.to_dict(), "backward": v2.to_dict()}
    if oracle is not None and not oracle(w1, w2):
        worst = None
        for y in samples:
            gap = spec.distance(b1(y), b2(y))
            if worst is None or gap > worst[1]:
                worst = ([float(v) for v in np.ravel(y)], gap)
        return Verdict("NotEquivalent", tol_residual, len(samples),
                       {"bisection_mismatch_sample": worst[0], "mismatch": worst[1], "oracle": "distinct"},
                       v1.residuals + v2.residuals)
    return Verdict("Unknown", tol_residual, len(samples), report, v1.residuals + v2.residuals)


def identity_test(w: Word, samples=None, **kw) -> Verdict:
    return equivalent(w, Word.empty(w.spec, w.base), samples, **kw)


# ---------------------------------------------------------------------------
# quotient oracles


def oracle_equiv(k1: GroupoidElement, k2: GroupoidElement, membership: Callable[[GroupoidElement], bool],
                 tol: float = 1e-6) -> bool:
    """``k1 ~ k2`` iff ``k1 k2^-1`` lies in the normal subgroupoid given by ``membership``.

    Elements with different endpoints are never equivalent.
    """
    spec = k1.spec
    if k2.spec is not spec:
        raise HolonomyError("elements belong to different groupoids")
    if spec.base_distance(spec.source(k1), spec.source(k2)) > tol or spec.base_distance(
        spec.target(k1), spec.target(k2)
    ) > tol:
        return False
    return bool(membership(spec.multiply(k1, spec.invert(k2), tol=max(tol, COMPOSABILITY_TOL))))


def trivial_membership(tol: float = 1e-6) -> Callable[[GroupoidElement], bool]:
    """I = identities."""

    def member(g: GroupoidElement) -> bool:
        return g.spec.distance(g, g.spec.unit(g.spec.source(g))) <= tol

    return member


def periodic_kernel_membership(period: float = 2 * math.pi, tol: float = 1e-6):
    """For translation groups R^k: I = period * Z^k."""

    def member(g: GroupoidElement) -> bool:
        v = g.spec.translation_part(g) / period
        return bool(np.all(np.abs(v - np.round(v)) * period <= tol))

    return member


class QuotientOracle:
    """Equivalence in a presenting groupoid K modulo a normal subgroupoid I.

    ``lifts`` maps each chart section (over G) to a section of K's algebroid
    whose image is that section; words are lifted factor by factor.
    """

    def __init__(self, presenting: GroupoidSpec, lifts: Mapping[Section, Section], membership):
        self.presenting = presenting
        self.lifts = dict(lifts)
        self.membership = membership

    def lift(self, w: Word) -> GroupoidElement:
        K = self.presenting
        result = K.unit(w.base if K.base_dim else ())
        elems = []
        for f in w.factors:
            try:
                secs = [self.lifts[s] for s in f.chart.sections]
            except KeyError as exc:
                raise HolonomyError(f"no lift for chart section {exc}") from None
            ff = FlowField(K.presentation, list(zip(f.lam, secs)))
            base = f.base if K.base_dim else ()
            elems.append(K.flow(ff, K.unit(base), 1.0))
        for g in reversed(elems):
            result = K.multiply(g, result, tol=1e-6)
        return result

    def __call__(self, w1: Word, w2: Word) -> bool:
        return oracle_equiv(self.lift(w1), self.lift(w2), self.membership)


# ---------------------------------------------------------------------------
# functoriality


def _apply_matrix(F, s: Section, nvars: int) -> Section:
    comps = []
    for row in F:
        total = Polynomial.zero(nvars)
        for fij, gj in zip(row, s.coeffs):
            if fij and gj:
                total = total + fij * gj
        comps.append(total)
    return Section(PolyVector(comps, nvars))


def pushforward_word(w: Word, F: Morphism, B2: SingularSubalgebroid, degree_bound: int | None = None) -> Word:
    """Push a word along a groupoid morphism covering the identity.

    Each chart's sections are mapped by the induced bundle map and must lie
    in ``B2``; the factors keep their lambdas and base points.
    """
    if isinstance(F, IdentityMorphism):
        return w
    if not isinstance(F, (AnchorMorphism, TorusGroupCovering)):
        raise HolonomyError(f"unsupported morphism {type(F).__name__}")
    if F.source_spec is not w.spec:
        raise HolonomyError("morphism source is not the word's groupoid")
    D = B2.degree_bound if degree_bound is None else degree_bound
    matrix = F.algebroid_matrix()
    n = F.target_spec.presentation.base_dim
    gens2 = [g.coeffs for g in B2.generators]
    pushed_charts: dict[int, Chart] = {}
    factors = []
    for f in w.factors:
        c = f.chart
        if id(c) not in pushed_charts:
            secs = []
            for s in c.sections:
                image = _apply_matrix(matrix, s, n)
                if solve_membership(image.coeffs, gens2, D) is None:
                    raise MembershipError(f"pushed section {image} is not in the target subalgebroid")
                secs.append(image)
            pushed_charts[id(c)] = Chart(B2, F.target_spec, tuple(secs), c.lambda_box,
                                         c.base_box if F.target_spec.base_dim else None,
                                         None, None, f"{c.name}>push")
        factors.append(ChartPoint(pushed_charts[id(c)], f.lam, f.base))
    return Word(F.target_spec, tuple(factors), w.base)


def include_word(w: Word, B_big: SingularSubalgebroid) -> Word:
    """Re-express a word over a larger subalgebroid with constant coefficients."""
    new_charts: dict[int, tuple[Chart, np.ndarray]] = {}
    gens = [g.coeffs for g in B_big.generators]
    m = B_big.size
    factors = []
    for f in w.factors:
        c = f.chart
        if id(c) not in new_charts:
            C = np.zeros((c.dim, m))
            for i, s in enumerate(c.sections):
                sol = solve_membership(s.coeffs, gens, 0)
                if sol is None:
                    raise MembershipError(f"{s} is not a constant combination of the larger generators")
                C[i] = [float(p.coefficient((0,) * p.nvars)) for p in sol]
            reach = np.maximum(np.abs(c.lambda_box[0]), np.abs(c.lambda_box[1]))
            half = np.maximum(np.abs(C).T @ reach, 1.0)
            chart = Chart.build(B_big, c.groupoid, lambda_box=(-half, half),
                                base_box=c.base_box, name=f"{c.name}>incl")
            new_charts[id(c)] = (chart, C)
        chart, C = new_charts[id(c)]
        factors.append(ChartPoint(chart, C.T @ f.lam, f.base))
    return Word(w.spec, tuple(factors), w.base)


def covering_lift_word(w: Word, cov: Covering, samples: int = 64, max_refine: int = 12):
    """Lift ``t -> Phi(w scaled by t)`` through ``cov``; returns ``(w, lifted element)``."""
    spec = w.spec
    if cov.target_spec is not spec:
        raise HolonomyError("word does not live over the covering's target groupoid")
    if not w.factors:
        x = w.base if spec.base_dim else ()
        return w, cov.source_spec.unit(x)
    charts = [f.chart for f in w.factors]
    lam = w.lambdas()

    def at(t):
        return rebased_phi(charts, t * lam, w.base, spec)

    ts = list(np.linspace(0.0, 1.0, samples + 1))
    pts = [at(t) for t in ts]
    i = 0
    depth = {0: 0}
    while i < len(ts) - 1:
        gap = spec.distance(pts[i], pts[i + 1])
        d = depth.get(i, 0)
        if gap >= cov.lift_threshold / 2 and d < max_refine:
            tm = 0.5 * (ts[i] + ts[i + 1])
            ts.insert(i + 1, tm)
            pts.insert(i + 1, at(tm))
            depth = {k + (1 if k > i else 0): v for k, v in depth.items()}
            depth[i] = d + 1
            depth[i + 1] = d + 1
            continue
        i += 1
    return w, cov.lift_path(pts)


# ---------------------------------------------------------------------------
# left translation by bisections


def translate_chart(c: Chart, b: Bisection, tol: float = 1e-10) -> Callable:
    """Evaluator ``(lam, y) -> b^{-1}(z) . phi(lam, y)`` where ``z = t(phi(lam, y))``.

    ``b^{-1}(z)`` is ``b(y')^{-1}`` with ``t(b(y')) = z``; ``y'`` is found by
    Gauss-Newton starting from ``z``.
    """
    spec = c.groupoid

    def evaluate(lam, y):
        g = chart_eval(c, lam, y)
        z = spec.target(g)
        if spec.base_dim == 0:
            yp = z
        else:
            yp, res = gauss_newton(lambda v: spec.base_diff(spec.target(b(v)), z), z, tol=tol * 1e-2)
            if res > tol:
                raise HolonomyError(f"bisection target map not invertible near {fmt17(z)}")
        return spec.multiply(spec.invert(b(yp)), g)

    return evaluate
