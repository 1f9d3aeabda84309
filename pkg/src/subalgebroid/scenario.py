"""Declarative scenarios: JSON loading, validation and task execution.

A scenario names presentations, subalgebroids, groupoids, charts, morphisms
and an optional quotient oracle, then lists tasks.  Every task returns a
JSON-ready record; a task with an ``expect`` block also records whether its
assertions held.  All randomness is drawn from ``numpy.random.default_rng``
seeded by the scenario (or the ``--seed`` override), so reports are
reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import algebroid as alg
from . import groupoid as gpd
from . import holonomy as hol
from .polycore import Polynomial, PolynomialSyntaxError, poly_parse, poly_print

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Parse or validation failure; ``where`` names the offending block."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class Settings:
    tol_phi: float = hol.TOL_PHI
    tol_residual: float = hol.TOL_RESIDUAL
    degree_bound: int | None = None
    rk_step: float = gpd.DEFAULT_RK.step
    seed: int | None = None

    @property
    def rk(self) -> gpd.RKParams:
        return gpd.RKParams(step=self.rk_step)


@dataclass
class Context:
    """Resolved scenario objects."""

    data: dict
    settings: Settings
    presentations: dict[str, alg.AlgebroidPresentation] = field(default_factory=dict)
    subalgebroids: dict[str, alg.SingularSubalgebroid] = field(default_factory=dict)
    groupoids: dict[str, gpd.GroupoidSpec] = field(default_factory=dict)
    charts: dict[str, hol.Chart] = field(default_factory=dict)
    morphisms: dict[str, gpd.Morphism] = field(default_factory=dict)
    invariants: dict[str, Polynomial] = field(default_factory=dict)
    oracle: Any = None

    @property
    def seed(self) -> int:
        if self.settings.seed is not None:
            return self.settings.seed
        return int(self.data.get("seed", 0))


# ---------------------------------------------------------------------------
# building objects


def _box(raw, n):
    if raw is None:
        return None
    if isinstance(raw, (int, float)):
        return ((-float(raw),) * n, (float(raw),) * n)
    lo, hi = raw
    if len(lo) != n or len(hi) != n:
        raise ValueError(f"box bounds must have {n} entries")
    return (tuple(float(v) for v in lo), tuple(float(v) for v in hi))


def _build_groupoid(name: str, raw: dict) -> gpd.GroupoidSpec:
    model = raw.get("model")
    if model == "PairBox":
        return gpd.PairBox(int(raw["n"]), _box(raw.get("box"), int(raw["n"])))
    if model == "PairTorus":
        return gpd.PairTorus(int(raw["n"]))
    if model == "MatrixGroup":
        return gpd.MatrixGroup(int(raw["k"]), raw.get("group", "SO"), float(raw.get("tol", 1e-9)))
    if model == "Transformation":
        g = raw["group"]
        group = gpd.MatrixGroup(int(g["k"]), g.get("group", "SO"), float(g.get("tol", 1e-9)))
        n = int(raw["n"])
        action = raw.get("action")
        return gpd.Transformation(
            group, n, raw.get("base", "box"), _box(raw.get("box"), n),
            tuple(tuple(int(v) for v in row) for row in action) if action else None,
        )
    raise ValueError(f"unknown groupoid model {model!r}")


def _build_morphism(ctx: Context, raw: dict) -> gpd.Morphism:
    kind = raw.get("kind")
    if kind == "identity":
        return gpd.IdentityMorphism(ctx.groupoids[raw["groupoid"]])
    if kind == "anchor":
        src, tgt = ctx.groupoids[raw["source"]], ctx.groupoids[raw["target"]]
        if isinstance(src, gpd.Transformation) and src.periodic_base and isinstance(tgt, gpd.PairTorus):
            return gpd.TorusPairCovering(src, tgt)
        return gpd.AnchorMorphism(src, tgt)
    if kind == "torus-pair-covering":
        return gpd.TorusPairCovering(ctx.groupoids[raw["source"]], ctx.groupoids[raw["target"]])
    if kind == "torus-group-covering":
        return gpd.TorusGroupCovering(int(raw.get("k", 1)))
    raise ValueError(f"unknown morphism kind {kind!r}")


def _membership(raw: dict):
    rule = raw.get("rule")
    if rule == "trivial":
        return hol.trivial_membership(float(raw.get("tol", 1e-6)))
    if rule == "periodic":
        return hol.periodic_kernel_membership(float(raw.get("period", 2 * math.pi)), float(raw.get("tol", 1e-6)))
    raise ValueError(f"unknown membership rule {rule!r}")


def _resolve_presentation(ctx: Context, ref: str) -> alg.AlgebroidPresentation:
    if ref.startswith("@"):
        return ctx.groupoids[ref[1:]].presentation
    return ctx.presentations[ref]


def build_context(data: dict, settings: Settings | None = None) -> Context:
    """Resolve every block, raising :class:`ScenarioError` with the block name on failure."""
    settings = settings or Settings()
    if not isinstance(data, dict):
        raise ScenarioError("scenario", "top level must be a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioError("schema_version", f"expected {SCHEMA_VERSION}, found {data.get('schema_version')!r}")
    ctx = Context(data, settings)
    for name, raw in data.get("presentations", {}).items():
        where = f"presentations.{name}"
        try:
            structure = {
                tuple(int(v) for v in key.split(",")): vec for key, vec in raw.get("structure", {}).items()
            }
            ctx.presentations[name] = alg.AlgebroidPresentation.from_strings(
                int(raw["base_dim"]), int(raw["rank"]), raw["anchor"], structure, name
            )
        except (KeyError, ValueError, PolynomialSyntaxError) as exc:
            raise ScenarioError(where, str(exc)) from None
    for name, raw in data.get("groupoids", {}).items():
        try:
            ctx.groupoids[name] = _build_groupoid(name, raw)
        except (KeyError, ValueError, TypeError) as exc:
            raise ScenarioError(f"groupoids.{name}", str(exc)) from None
    for name, raw in data.get("subalgebroids", {}).items():
        where = f"subalgebroids.{name}"
        try:
            pres = _resolve_presentation(ctx, raw["presentation"])
            D = settings.degree_bound if settings.degree_bound is not None else int(
                raw.get("degree_bound", alg.DEFAULT_DEGREE_BOUND)
            )
            patch = raw.get("patch")
            kw = {}
            if patch is not None:
                kw["patch"] = (tuple(Fraction(str(v)) for v in patch[0]), tuple(Fraction(str(v)) for v in patch[1]))
            gens = [alg.Section.parse(g, pres.base_dim) for g in raw["generators"]]
            for g in gens:
                pres.check_section(g)
            D = max(D, max(g.degree for g in gens))
            ctx.subalgebroids[name] = alg.SingularSubalgebroid(pres, tuple(gens), D, name=name, **kw)
        except (KeyError, ValueError, PolynomialSyntaxError) as exc:
            raise ScenarioError(where, str(exc)) from None
    for name, raw in data.get("charts", {}).items():
        where = f"charts.{name}"
        try:
            B = ctx.subalgebroids[raw["subalgebroid"]]
            spec = ctx.groupoids[raw["groupoid"]]
            sections = None
            if "sections" in raw:
                sections = [alg.Section.parse(s, B.presentation.base_dim) for s in raw["sections"]]
            ctx.charts[name] = hol.Chart.build(
                B, spec, raw.get("gen_idx"), raw.get("lambda_box", 8.0), raw.get("base_box"),
                sections, raw.get("minimal_at"), name,
            )
        except (KeyError, ValueError) as exc:
            raise ScenarioError(where, str(exc)) from None
    for name, raw in data.get("morphisms", {}).items():
        try:
            ctx.morphisms[name] = _build_morphism(ctx, raw)
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"morphisms.{name}", str(exc)) from None
    for name, text in data.get("invariants", {}).items():
        try:
            n = int(text.get("nvars")) if isinstance(text, dict) else None
            src = text["poly"] if isinstance(text, dict) else text
            if n is None:
                n = max((p.base_dim for p in ctx.presentations.values()), default=0)
            ctx.invariants[name] = poly_parse(src, n)
        except (KeyError, ValueError, PolynomialSyntaxError) as exc:
            raise ScenarioError(f"invariants.{name}", str(exc)) from None
    if "oracle" in data:
        raw = data["oracle"]
        try:
            K = ctx.groupoids[raw["presenting"]]
            lifts = {}
            for pair in raw.get("lifts", []):
                g_sec = alg.Section.parse(pair[0], int(raw.get("base_dim", K.base_dim)))
                k_sec = alg.Section.parse(pair[1], K.presentation.base_dim)
                lifts[g_sec] = k_sec
            ctx.oracle = hol.QuotientOracle(K, lifts, _membership(raw))
        except (KeyError, ValueError) as exc:
            raise ScenarioError("oracle", str(exc)) from None
    for i, task in enumerate(data.get("tasks", [])):
        if task.get("kind") not in TASKS:
            raise ScenarioError(f"tasks[{i}]", f"unknown task kind {task.get('kind')!r}")
    return ctx


def load(path: str | Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None


def validate(data: dict, settings: Settings | None = None, density: int = 5) -> list[str]:
    """Diagnostics only: parse, dimension checks and chart domain checks."""
    try:
        ctx = build_context(data, settings)
    except ScenarioError as exc:
        return [str(exc)]
    problems = []
    for name, chart in ctx.charts.items():
        check = hol.chart_domain_check(chart, density)
        if not check.passed:
            problems.append(f"charts.{name}: {check.reason} at grid point {check.failure_point}")
    return problems


# ---------------------------------------------------------------------------
# helpers for tasks


def _fr_point(p):
    return tuple(Fraction(str(v)) for v in p)


def _word(ctx: Context, raw: dict) -> hol.Word:
    """``{"source": [...], "factors": [[chart, [lam...]], ...]}`` built right to left."""
    factors = raw.get("factors", [])
    if not factors:
        return hol.Word.empty(ctx.groupoids[raw["groupoid"]], raw.get("source", []))
    program = [(ctx.charts[c], lam) for c, lam in factors]
    return hol.Word.build(program, raw.get("source", []))


def random_word(rng: np.random.Generator, charts, source, length: int, scale: float, spec=None) -> hol.Word:
    """Random word; lambdas are shrunk until every factor stays in its domain."""
    picks = [charts[int(rng.integers(len(charts)))] for _ in range(length)]
    lams = [rng.uniform(-scale, scale, size=c.dim) for c in picks]
    for _ in range(30):
        try:
            w = hol.Word.build(list(zip(picks, lams)), source, spec)
            hol.invert(w)
            return w
        except (gpd.DomainExit, gpd.GroupoidError):
            lams = [0.5 * lam for lam in lams]
    raise gpd.DomainExit("could not place a random word inside the chart domains")


def _random_base(rng, spec: gpd.GroupoidSpec, radius: float) -> np.ndarray:
    n = spec.base_dim
    if n == 0:
        return np.zeros(0)
    if spec.periodic_base:
        return rng.uniform(0, 1, size=n)
    return rng.uniform(-radius, radius, size=n)


def _num(x: float) -> float:
    return float(format(float(x), ".12g"))


def _check(expect: dict, actual: dict) -> tuple[bool, list[str]]:
    failures = []
    for key, want in expect.items():
        if key.startswith("max_"):
            got = actual.get(key[4:])
            if got is None or got > want:
                failures.append(f"{key[4:]}={got} exceeds {want}")
        elif key.startswith("min_"):
            got = actual.get(key[4:])
            if got is None or got < want:
                failures.append(f"{key[4:]}={got} below {want}")
        elif actual.get(key) != want:
            failures.append(f"{key}={actual.get(key)!r}, expected {want!r}")
    return not failures, failures


# ---------------------------------------------------------------------------
# task implementations


def task_verify_presentation(ctx, t):
    p = _resolve_presentation(ctx, t["presentation"])
    rep = alg.verify_presentation(p, int(t.get("check_degree", 1)))
    return rep.to_dict()


def task_involutivity(ctx, t):
    B = ctx.subalgebroids[t["subalgebroid"]]
    cert = alg.involutivity_certificate(B, ctx.settings.degree_bound)
    out = cert.to_dict()
    out["reverified"] = cert.reverify(B) if cert.verdict == "Certified" else None
    out["constant_coefficients"] = all(
        f.is_constant() for fs in cert.coefficients.values() for f in fs
    ) if cert.verdict == "Certified" else None
    return out


def task_syzygies(ctx, t):
    B = ctx.subalgebroids[t["subalgebroid"]]
    D = ctx.settings.degree_bound if ctx.settings.degree_bound is not None else int(t.get("degree_bound", B.degree_bound))
    syz = alg.syzygy_basis_upto(B, D)
    out = syz.to_dict()
    out["count"] = len(syz.relations)
    out["annihilate"] = syz.annihilates()
    return out


def task_fiber_dims(ctx, t):
    B = ctx.subalgebroids[t["subalgebroid"]]
    D = ctx.settings.degree_bound if ctx.settings.degree_bound is not None else int(t.get("degree_bound", B.degree_bound))
    points = [_fr_point(p) for p in t.get("points", [])]
    if "random_points" in t:
        rng = np.random.default_rng(ctx.seed)
        lo, hi = B.patch
        for _ in range(int(t["random_points"])):
            pt = tuple(
                Fraction(int(rng.choice([-1, 1]) * rng.integers(1, 31)), int(rng.integers(1, 11))) for _ in lo
            )
            points.append(pt)
    dims = [alg.fiber_dim_at(B, p, D).dim for p in points]
    ranks = [list(alg.evaluation_ranks(B, p)) for p in points]
    return {
        "points": [[str(v) for v in p] for p in points],
        "dims": dims,
        "evaluation_ranks": ranks,
        "degree_bound": D,
        "caveat": f"upper bound from syzygies of degree <= {D}",
        "dims_dominate_ranks": all(d >= r[0] for d, r in zip(dims, ranks)),
    }


def task_minimal_generators(ctx, t):
    B = ctx.subalgebroids[t["subalgebroid"]]
    return {"indices": alg.minimal_generators_at(B, _fr_point(t["point"]), ctx.settings.degree_bound)}


def task_evaluation_ranks(ctx, t):
    B = ctx.subalgebroids[t["subalgebroid"]]
    return {"ranks": [list(alg.evaluation_ranks(B, _fr_point(p))) for p in t["points"]]}


def task_leaf_classify(ctx, t):
    B = ctx.subalgebroids[t["subalgebroid"]]
    invs = [ctx.invariants[name] for name in t.get("invariants", [])]
    seeds = t["seeds"]
    labels, traces = alg.classify_leaves(
        B, seeds, float(t.get("time", 10.0)), float(t.get("step", ctx.settings.rk_step)), invs
    )
    per_seed = len(traces) // max(1, len(seeds))
    max_drift = {}
    for k, s in enumerate(seeds):
        legs = traces[k * per_seed : (k + 1) * per_seed]
        max_drift[str(k)] = {name: _num(max(leg.drift.get(poly_print(inv), 0.0) for leg in legs))
                             for name, inv in zip(t.get("invariants", []), invs)}
    out = {"labels": labels, "distinct_labels": len(set(labels)), "max_drift_per_seed": max_drift}
    level = t.get("level_set")
    if level:
        inv = ctx.invariants[level["invariant"]]
        on = [i for i, s in enumerate(seeds) if float(inv(tuple(Fraction(str(v)) for v in s))) == float(level["value"])]
        off = [i for i in range(len(seeds)) if i not in on]
        out["labels_on_level_set"] = len({labels[i] for i in on})
        out["max_drift_off_level_set"] = _num(max(
            (v for i in off for v in max_drift[str(i)].values()), default=0.0
        ))
    out["_tables"] = {
        "orbit_samples": [
            [k, j, *map(_num, row)] for k in range(len(seeds))
            for j, row in enumerate(traces[k * per_seed].samples[:: max(1, len(traces[k * per_seed].samples) // 50)])
        ]
    }
    return out


def task_chart_domain_check(ctx, t):
    return hol.chart_domain_check(ctx.charts[t["chart"]], int(t.get("density", 5))).to_dict()


def task_word_phi(ctx, t):
    w = _word(ctx, t["word"])
    g = hol.word_phi(w)
    return {"phi": str(g), "source": [_num(v) for v in g.spec.source(g)], "target": [_num(v) for v in g.spec.target(g)]}


def _verdict_kw(ctx):
    return {"tol_phi": ctx.settings.tol_phi, "tol_residual": ctx.settings.tol_residual}


def task_equivalence(ctx, t):
    w1, w2 = _word(ctx, t["w1"]), _word(ctx, t["w2"])
    oracle = ctx.oracle if t.get("use_oracle") else None
    v = hol.equivalent(w1, w2, oracle=oracle, **_verdict_kw(ctx))
    return {"verdict": v.kind, "detail": v.to_dict()}


def task_regroup_battery(ctx, t):
    """Equal-endpoint pairs (several single-generator factors vs one combined
    factor) and perturbed pairs, over charts of constant generators."""
    rng = np.random.default_rng(ctx.seed)
    singles = [ctx.charts[c] for c in t["single_charts"]]
    combined = ctx.charts[t["combined_chart"]]
    spec = combined.groupoid
    rows = []
    counts = {"Equivalent": 0, "NotEquivalent": 0, "Unknown": 0}
    expected_ok = 0
    n_pairs = int(t.get("pairs", 50))
    for i in range(2 * n_pairs):
        x = _random_base(rng, spec, 1.0)
        w1 = random_word(rng, singles, x, int(rng.integers(1, 4)), float(t.get("scale", 0.5)))
        total = np.zeros(combined.dim)
        for f in w1.factors:
            for s, lam in zip(f.chart.sections, f.lam):
                total[combined.sections.index(s)] += lam
        equal = i < n_pairs
        if not equal:
            bump = rng.normal(size=combined.dim)
            total = total + bump / np.linalg.norm(bump) * rng.uniform(0.01, 0.3)
        w2 = hol.Word.build([(combined, total)], x)
        v = hol.equivalent(w1, w2, **_verdict_kw(ctx))
        counts[v.kind] += 1
        want = "Equivalent" if equal else "NotEquivalent"
        expected_ok += v.kind == want
        rows.append([i, int(equal), v.kind, _num(spec.distance(hol.word_phi(w1), hol.word_phi(w2)))])
    return {
        "counts": counts,
        "unknown": counts["Unknown"],
        "mismatches": 2 * n_pairs - expected_ok,
        "_tables": {"verdicts": rows},
    }


def task_kappa_battery(ctx, t):
    rng = np.random.default_rng(ctx.seed)
    charts = [ctx.charts[c] for c in t["charts"]]
    spec = charts[0].groupoid
    worst, counts = 0.0, {"Equivalent": 0, "NotEquivalent": 0, "Unknown": 0}
    for _ in range(int(t.get("count", 20))):
        x = _random_base(rng, spec, float(t.get("radius", 1.0)))
        w = random_word(rng, charts, x, int(rng.integers(1, 4)), float(t.get("scale", 0.8)))
        wi = hol.invert(w)
        prod = spec.multiply(hol.word_phi(w), hol.word_phi(wi))
        worst = max(worst, spec.distance(prod, spec.unit(spec.target(hol.word_phi(w)))))
        v = hol.identity_test(hol.compose(w, wi), **_verdict_kw(ctx))
        counts[v.kind] += 1
    return {"counts": counts, "not_equivalent": counts["NotEquivalent"] + counts["Unknown"],
            "inverse_error": _num(worst)}


def periodic_pairs(rng, count: int, period: float, scale: float = math.pi):
    """(total1, parts2, truth) triples for one-generator words: shifts by whole
    periods and splits are equivalent, shifts by 0.2..2 are not."""
    out = []
    for i in range(count):
        lam = rng.uniform(-scale, scale)
        case = i % 4
        if case == 0:
            out.append((lam, [lam + period * rng.choice([-1, 1])], True))
        elif case == 1:
            out.append((lam, [lam + rng.choice([-1, 1]) * rng.uniform(0.2, 2.0)], False))
        elif case == 2:
            a = rng.uniform(-1, 1)
            out.append((lam, [a, lam - a], True))
        else:
            a = rng.uniform(-1, 1)
            delta = rng.choice([0.0, period, rng.uniform(0.2, 2.0)])
            out.append((lam, [a, lam + delta - a], bool(delta == 0.0 or delta == period)))
    return out


def task_oracle_battery(ctx, t):
    """Numeric verdicts against the quotient oracle on one-generator words.

    With ``push`` the words are built over the presenting groupoid, pushed
    along the morphism and the verdict is computed downstairs; the oracle
    compares the original elements.
    """
    rng = np.random.default_rng(ctx.seed)
    chart = ctx.charts[t["chart"]]
    period = float(t.get("period", 2 * math.pi))
    bases = t.get("base_points", [[]])
    push = t.get("push")
    rows, contradictions, unknown = [], 0, 0
    counts = {"Equivalent": 0, "NotEquivalent": 0, "Unknown": 0}
    member = _membership(t["membership"]) if "membership" in t else None
    for i, (lam, parts, truth) in enumerate(periodic_pairs(rng, int(t.get("pairs", 100)), period)):
        x = bases[i % len(bases)]
        w1 = hol.Word.build([(chart, [lam])], x)
        w2 = hol.Word.build([(chart, [p]) for p in parts], x)
        if push:
            F = ctx.morphisms[push["morphism"]]
            B2 = ctx.subalgebroids[push["subalgebroid"]]
            oracle_truth = hol.oracle_equiv(hol.word_phi(w1), hol.word_phi(w2), member)
            v1, v2 = hol.pushforward_word(w1, F, B2), hol.pushforward_word(w2, F, B2)
            oracle = (lambda a, b, _t=oracle_truth: _t)
        else:
            oracle = ctx.oracle
            oracle_truth = oracle(w1, w2)
            v1, v2 = w1, w2
        v = hol.equivalent(v1, v2, oracle=oracle, **_verdict_kw(ctx))
        counts[v.kind] += 1
        bad = (v.kind == "Equivalent" and not oracle_truth) or (v.kind == "NotEquivalent" and oracle_truth)
        contradictions += bad
        unknown += v.kind == "Unknown"
        rows.append([i, _num(lam), ";".join(str(_num(p)) for p in parts), int(oracle_truth), v.kind])
    n = max(1, len(rows))
    return {
        "counts": counts,
        "contradictions": contradictions,
        "unknown_rate": _num(unknown / n),
        "iff_agreement": contradictions == 0 and unknown == 0,
        "_tables": {"verdicts": rows},
    }


def task_pushforward_battery(ctx, t):
    rng = np.random.default_rng(ctx.seed)
    chart = ctx.charts[t["chart"]]
    F = ctx.morphisms[t["morphism"]]
    B2 = ctx.subalgebroids[t["subalgebroid"]]
    spec = chart.groupoid
    worst, flips = 0.0, 0
    for _ in range(int(t.get("count", 100))):
        x = _random_base(rng, spec, float(t.get("radius", 2.0)))
        w = random_word(rng, [chart], x, int(rng.integers(1, 4)), float(t.get("scale", 2.0)))
        pushed = hol.pushforward_word(w, F, B2)
        worst = max(worst, F.target_spec.distance(F(hol.word_phi(w)), hol.word_phi(pushed)))
        # a regrouped twin: one factor carrying the total parameter
        total = np.sum([f.lam for f in w.factors], axis=0)
        twin = hol.Word.build([(chart, total)], x)
        if hol.equivalent(w, twin, **_verdict_kw(ctx)).kind == "Equivalent":
            pv = hol.equivalent(pushed, hol.pushforward_word(twin, F, B2), **_verdict_kw(ctx))
            flips += pv.kind == "NotEquivalent"
    return {"functoriality_error": _num(worst), "equivalence_flips": flips}


def task_covering_lift(ctx, t):
    cov = ctx.morphisms[t["covering"]]
    chart = ctx.charts[t["chart"]]
    w = hol.Word.build([(chart, t["lambda"])], t.get("source", []))
    _, lifted = hol.covering_lift_word(w, cov)
    err = cov.target_spec.distance(cov(lifted), hol.word_phi(w))
    group = cov.source_spec.group if isinstance(cov, gpd.TorusPairCovering) else cov.source_spec
    comp = group.translation_part(lifted)
    out = {"lifted": lifted.to_dict(), "projection_error": _num(err), "lift_component": [_num(v) for v in comp]}
    if "expected_lift" in t:
        out["lift_error"] = _num(np.max(np.abs(comp - np.asarray(t["expected_lift"], dtype=float))))
    return out


def task_flow_battery(ctx, t):
    rng = np.random.default_rng(ctx.seed)
    spec = ctx.groupoids[t["groupoid"]]
    B = ctx.subalgebroids[t["subalgebroid"]]
    rk = ctx.settings.rk
    semi, trel = 0.0, 0.0
    for _ in range(int(t.get("count", 20))):
        alpha = B.generators[int(rng.integers(B.size))]
        x = _random_base(rng, spec, float(t.get("radius", 0.5)))
        g0 = spec.flow(gpd.FlowField.of(spec.presentation, alpha), spec.unit(x), rng.uniform(-0.3, 0.3), rk)
        a, b = rng.uniform(-0.5, 0.5, size=2)
        one = gpd.right_invariant_flow(spec, alpha, g0, a + b, rk)
        two = gpd.right_invariant_flow(spec, alpha, gpd.right_invariant_flow(spec, alpha, g0, b, rk), a, rk)
        semi = max(semi, spec.distance(one, two))
        y = gpd.anchor_flow(spec, alpha, spec.target(g0), a, rk)
        trel = max(trel, spec.base_distance(spec.target(gpd.right_invariant_flow(spec, alpha, g0, a, rk)), y))
    return {"semigroup_error": _num(semi), "t_relatedness_error": _num(trel)}


def task_pushforward_generators(ctx, t):
    B = ctx.subalgebroids[t["subalgebroid"]]
    F = ctx.morphisms[t["morphism"]]
    image = alg.pushforward_generators(B, F.algebroid_matrix(), F.target_spec.presentation)
    return {"generators": [g.to_strings() for g in image.generators], "degree_bound": image.degree_bound}


TASKS: dict[str, Callable[[Context, dict], dict]] = {
    "verify_presentation": task_verify_presentation,
    "involutivity": task_involutivity,
    "syzygies": task_syzygies,
    "fiber_dims": task_fiber_dims,
    "minimal_generators": task_minimal_generators,
    "evaluation_ranks": task_evaluation_ranks,
    "leaf_classify": task_leaf_classify,
    "chart_domain_check": task_chart_domain_check,
    "word_phi": task_word_phi,
    "equivalence": task_equivalence,
    "regroup_battery": task_regroup_battery,
    "kappa_battery": task_kappa_battery,
    "oracle_battery": task_oracle_battery,
    "pushforward_battery": task_pushforward_battery,
    "pushforward_generators": task_pushforward_generators,
    "covering_lift": task_covering_lift,
    "flow_battery": task_flow_battery,
}


@dataclass
class Report:
    scenario: str
    seed: int
    tasks: list[dict]
    tables: dict[str, list[list]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(t.get("passed", True) for t in self.tasks)

    def to_json(self) -> str:
        doc = {
            "scenario": self.scenario,
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "passed": self.passed,
            "tasks": self.tasks,
        }
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def run(data: dict, settings: Settings | None = None) -> Report:
    """Execute every task in order.  Task exceptions are recorded, not raised."""
    ctx = build_context(data, settings)
    records, tables = [], {}
    for i, task in enumerate(data.get("tasks", [])):
        kind = task["kind"]
        record: dict[str, Any] = {"index": i, "kind": kind, "label": task.get("label", kind)}
        try:
            result = TASKS[kind](ctx, task)
            for tname, rows in result.pop("_tables", {}).items():
                tables[f"task{i:02d}_{tname}"] = rows
            record["result"] = result
            if "expect" in task:
                ok, failures = _check(task["expect"], result)
                record["passed"] = ok
                if failures:
                    record["failures"] = failures
        except Exception as exc:  # noqa: BLE001 - task failures are data
            record["error"] = f"{type(exc).__name__}: {exc}"
            if "expect" in task:
                record["passed"] = False
        records.append(record)
    return Report(data.get("name", ""), ctx.seed, records, tables)
