"""Built-in scenarios.  Each entry is a plain JSON-compatible dict."""

from __future__ import annotations

import copy
import math

from .scenario import SCHEMA_VERSION

TWO_PI = 2 * math.pi


def _full_tangent_pair() -> dict:
    return {
        "name": "full-tangent-pair",
        "description": "Pair groupoid of the plane with the full tangent bundle as subalgebroid.",
        "seed": 11,
        "presentations": {
            "T2": {"base_dim": 2, "rank": 2, "anchor": [["1", "0"], ["0", "1"]], "structure": {}},
        },
        "subalgebroids": {"full": {"presentation": "T2", "generators": [["1", "0"], ["0", "1"]], "degree_bound": 2}},
        "groupoids": {"pair": {"model": "PairBox", "n": 2, "box": 3.0}},
        "charts": {
            "dx": {"subalgebroid": "full", "groupoid": "pair", "gen_idx": [0], "lambda_box": 2.0},
            "dy": {"subalgebroid": "full", "groupoid": "pair", "gen_idx": [1], "lambda_box": 2.0},
            "dxy": {"subalgebroid": "full", "groupoid": "pair", "gen_idx": [0, 1], "lambda_box": 2.0},
        },
        "tasks": [
            {"kind": "verify_presentation", "presentation": "T2", "expect": {"valid": True}},
            {"kind": "involutivity", "subalgebroid": "full", "expect": {"verdict": "Certified"}},
            {"kind": "fiber_dims", "subalgebroid": "full", "points": [[0, 0]], "random_points": 10,
             "expect": {"dims": [2] * 11}},
            {"kind": "chart_domain_check", "chart": "dxy", "expect": {"passed": True}},
            {"kind": "regroup_battery", "label": "equal-endpoint battery", "single_charts": ["dx", "dy"],
             "combined_chart": "dxy", "pairs": 50,
             "expect": {"mismatches": 0, "unknown": 0}},
            {"kind": "kappa_battery", "charts": ["dx", "dy", "dxy"], "count": 20,
             "expect": {"not_equivalent": 0, "max_inverse_error": 1e-8}},
            {"kind": "flow_battery", "groupoid": "pair", "subalgebroid": "full", "count": 10,
             "expect": {"max_semigroup_error": 1e-8, "max_t_relatedness_error": 1e-8}},
        ],
    }


def _dxy_leaves() -> dict:
    seeds = [[1, 0], [-1, 0], [0, 1], [0, -1], [0, 0], [1, 1], [-1, 1], [2, 0.5]]
    return {
        "name": "dxy-leaves",
        "description": "Cotangent algebroid of the plane with bracket dx^dy; the subalgebroid generated by d(xy).",
        "seed": 3,
        "presentations": {
            "cot": {"base_dim": 2, "rank": 2, "anchor": [["0", "-1"], ["1", "0"]], "structure": {}},
        },
        "subalgebroids": {"dxy": {"presentation": "cot", "generators": [["x1", "x0"]], "degree_bound": 2,
                                  "patch": [[-100000, -100000], [100000, 100000]]}},
        "invariants": {"xy": "x0*x1"},
        "tasks": [
            {"kind": "verify_presentation", "presentation": "cot", "expect": {"valid": True}},
            {"kind": "involutivity", "subalgebroid": "dxy", "expect": {"verdict": "Certified"}},
            {"kind": "evaluation_ranks", "subalgebroid": "dxy", "points": [[0, 0], [1, 0], [1, 1]],
             "expect": {"ranks": [[0, 0], [1, 1], [1, 1]]}},
            {"kind": "fiber_dims", "subalgebroid": "dxy", "points": [[0, 0], [1, 1]], "expect": {"dims": [1, 1]}},
            {"kind": "leaf_classify", "subalgebroid": "dxy", "seeds": seeds, "time": 10.0, "step": 1e-3,
             "invariants": ["xy"], "level_set": {"invariant": "xy", "value": 0},
             "expect": {"labels_on_level_set": 5, "max_max_drift_off_level_set": 1e-6}},
        ],
    }


def _rotation_action() -> dict:
    bases = [[0, 0], [1, 0], [0.5, -1], [-1.2, 0.7]]
    return {
        "name": "rotation-action",
        "description": "SO(2) acting on the plane; rotation field in the pair groupoid with a trivial-I oracle.",
        "seed": 5,
        "presentations": {
            "T2": {"base_dim": 2, "rank": 2, "anchor": [["1", "0"], ["0", "1"]], "structure": {}},
        },
        "groupoids": {
            "K": {"model": "Transformation", "group": {"k": 2, "group": "SO"}, "n": 2, "base": "box", "box": 3.0},
            "pair": {"model": "PairBox", "n": 2, "box": 3.0},
        },
        "subalgebroids": {
            "act": {"presentation": "@K", "generators": [["1"]], "degree_bound": 1},
            "rot": {"presentation": "T2", "generators": [["-x1", "x0"]], "degree_bound": 2},
        },
        "charts": {
            "Krot": {"subalgebroid": "act", "groupoid": "K", "lambda_box": 10.0},
            "rot": {"subalgebroid": "rot", "groupoid": "pair", "lambda_box": 10.0},
        },
        "morphisms": {"anchor": {"kind": "anchor", "source": "K", "target": "pair"}},
        "oracle": {"presenting": "K", "lifts": [[["-x1", "x0"], ["1"]]], "rule": "trivial"},
        "tasks": [
            {"kind": "verify_presentation", "presentation": "@K", "expect": {"valid": True}},
            {"kind": "pushforward_generators", "subalgebroid": "act", "morphism": "anchor",
             "expect": {"generators": [["-x1", "x0"]]}},
            {"kind": "equivalence", "label": "full turn at the origin",
             "w1": {"factors": [["rot", [TWO_PI]]], "source": [0, 0]},
             "w2": {"groupoid": "pair", "source": [0, 0]}, "use_oracle": True,
             "expect": {"verdict": "Equivalent"}},
            {"kind": "equivalence", "label": "half turn at the origin",
             "w1": {"factors": [["rot", [math.pi]]], "source": [0, 0]},
             "w2": {"groupoid": "pair", "source": [0, 0]}, "use_oracle": True,
             "expect": {"verdict": "NotEquivalent"}},
            {"kind": "oracle_battery", "label": "pair words against the oracle", "chart": "rot",
             "base_points": bases, "pairs": 40, "expect": {"contradictions": 0, "max_unknown_rate": 0.1}},
            {"kind": "oracle_battery", "label": "pushed words against the oracle", "chart": "Krot",
             "base_points": bases, "pairs": 40, "membership": {"rule": "trivial"},
             "push": {"morphism": "anchor", "subalgebroid": "rot"},
             "expect": {"contradictions": 0, "max_unknown_rate": 0.1}},
            {"kind": "pushforward_battery", "chart": "Krot", "morphism": "anchor", "subalgebroid": "rot",
             "count": 20, "expect": {"max_functoriality_error": 1e-8, "equivalence_flips": 0}},
            {"kind": "kappa_battery", "charts": ["rot"], "count": 10,
             "expect": {"not_equivalent": 0, "max_inverse_error": 1e-8}},
        ],
    }


SO3_FIELDS = [["0", "-x2", "x1"], ["x2", "0", "-x0"], ["-x1", "x0", "0"]]


def _so3_fields() -> dict:
    return {
        "name": "so3-fields",
        "description": "Rotation vector fields of R^3 spanning the so(3) orbits (spheres).",
        "seed": 7,
        "presentations": {
            "T3": {"base_dim": 3, "rank": 3,
                   "anchor": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]], "structure": {}},
        },
        "groupoids": {
            "pair": {"model": "PairBox", "n": 3, "box": 3.0},
            "K": {"model": "Transformation", "group": {"k": 3, "group": "SO"}, "n": 3, "base": "box", "box": 3.0},
        },
        "subalgebroids": {
            "rot": {"presentation": "T3", "generators": SO3_FIELDS, "degree_bound": 2},
            "act": {"presentation": "@K", "generators": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
                    "degree_bound": 1},
        },
        "charts": {
            "rot": {"subalgebroid": "rot", "groupoid": "pair", "lambda_box": 2.0},
            "r0": {"subalgebroid": "rot", "groupoid": "pair", "gen_idx": [0], "lambda_box": 2.0},
            "r2": {"subalgebroid": "rot", "groupoid": "pair", "gen_idx": [2], "lambda_box": 2.0},
        },
        "morphisms": {"anchor": {"kind": "anchor", "source": "K", "target": "pair"}},
        "invariants": {"r2": "x0^2 + x1^2 + x2^2"},
        "tasks": [
            {"kind": "involutivity", "subalgebroid": "rot",
             "expect": {"verdict": "Certified", "constant_coefficients": True, "reverified": True}},
            {"kind": "syzygies", "subalgebroid": "rot", "degree_bound": 1,
             "expect": {"relations": [["x0", "x1", "x2"]], "annihilate": True}},
            {"kind": "fiber_dims", "subalgebroid": "rot", "points": [[0, 0, 0], [1, 0, 0], [1, 2, 3]],
             "expect": {"dims": [3, 2, 2]}},
            {"kind": "minimal_generators", "subalgebroid": "rot", "point": [1, 0, 0], "expect": {"indices": [1, 2]}},
            {"kind": "pushforward_generators", "subalgebroid": "act", "morphism": "anchor",
             "expect": {"generators": SO3_FIELDS}},
            {"kind": "kappa_battery", "charts": ["rot", "r0", "r2"], "count": 10,
             "expect": {"not_equivalent": 0, "max_inverse_error": 1e-8}},
            {"kind": "flow_battery", "groupoid": "pair", "subalgebroid": "rot", "count": 10,
             "expect": {"max_semigroup_error": 1e-8, "max_t_relatedness_error": 1e-8}},
        ],
    }


def _so2_in_so3() -> dict:
    return {
        "name": "so2-in-so3",
        "description": "so(2) inside so(3); words compared against R modulo the 2 pi Z kernel.",
        "seed": 13,
        "groupoids": {
            "G": {"model": "MatrixGroup", "k": 3, "group": "SO"},
            "K": {"model": "MatrixGroup", "k": 1, "group": "translation"},
        },
        "subalgebroids": {"so2": {"presentation": "@G", "generators": [["0", "0", "1"]], "degree_bound": 0}},
        "charts": {"z": {"subalgebroid": "so2", "groupoid": "G", "lambda_box": 10.0}},
        "oracle": {"presenting": "K", "base_dim": 0, "lifts": [[["0", "0", "1"], ["1"]]],
                   "rule": "periodic", "period": TWO_PI},
        "tasks": [
            {"kind": "verify_presentation", "presentation": "@G", "expect": {"valid": True}},
            {"kind": "involutivity", "subalgebroid": "so2", "expect": {"verdict": "Certified"}},
            {"kind": "equivalence", "label": "full turn", "w1": {"factors": [["z", [TWO_PI]]]},
             "w2": {"groupoid": "G"}, "use_oracle": True, "expect": {"verdict": "Equivalent"}},
            {"kind": "oracle_battery", "chart": "z", "pairs": 50, "base_points": [[]],
             "expect": {"contradictions": 0, "iff_agreement": True}},
            {"kind": "flow_battery", "groupoid": "G", "subalgebroid": "so2", "count": 10,
             "expect": {"max_semigroup_error": 1e-8, "max_t_relatedness_error": 1e-8}},
        ],
    }


def _torus_cover() -> dict:
    return {
        "name": "torus-cover",
        "description": "Pair groupoid of the circle, lifted through the covering by R acting on the circle.",
        "seed": 17,
        "groupoids": {
            "P": {"model": "PairTorus", "n": 1},
            "R": {"model": "Transformation", "group": {"k": 1, "group": "translation"}, "n": 1, "base": "torus"},
        },
        "subalgebroids": {"dx": {"presentation": "@P", "generators": [["1"]], "degree_bound": 1}},
        "charts": {"dx": {"subalgebroid": "dx", "groupoid": "P", "lambda_box": 2.0}},
        "morphisms": {"cover": {"kind": "torus-pair-covering", "source": "R", "target": "P"}},
        "tasks": [
            {"kind": "covering_lift", "label": "once-winding word", "covering": "cover", "chart": "dx",
             "lambda": [1.0], "source": [0.3], "expected_lift": [1.0],
             "expect": {"max_lift_error": 1e-6, "max_projection_error": 1e-8}},
            {"kind": "covering_lift", "label": "half-winding word", "covering": "cover", "chart": "dx",
             "lambda": [0.5], "source": [0.3], "expected_lift": [0.5],
             "expect": {"max_lift_error": 1e-6, "max_projection_error": 1e-8}},
            {"kind": "kappa_battery", "charts": ["dx"], "count": 10,
             "expect": {"not_equivalent": 0, "max_inverse_error": 1e-8}},
        ],
    }


def _xy_dz_fibers() -> dict:
    return {
        "name": "xy-dz-fibers",
        "description": "The fields x d/dz and y d/dz; fibers jump from 1 to 2 on the z axis.",
        "seed": 19,
        "presentations": {
            "T3": {"base_dim": 3, "rank": 3,
                   "anchor": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]], "structure": {}},
        },
        "groupoids": {"pair": {"model": "PairBox", "n": 3, "box": 3.0}},
        "subalgebroids": {"B": {"presentation": "T3", "generators": [["0", "0", "x0"], ["0", "0", "x1"]],
                                "degree_bound": 2}},
        "charts": {"B": {"subalgebroid": "B", "groupoid": "pair", "lambda_box": 2.0}},
        "tasks": [
            {"kind": "involutivity", "subalgebroid": "B", "expect": {"verdict": "Certified"}},
            {"kind": "syzygies", "subalgebroid": "B", "degree_bound": 1,
             "expect": {"relations": [["x1", "-x0"]], "annihilate": True}},
            {"kind": "fiber_dims", "subalgebroid": "B", "points": [[0, 0, 0], [0, 0, 5]], "random_points": 20,
             "expect": {"dims": [2, 2] + [1] * 20}},
            {"kind": "minimal_generators", "subalgebroid": "B", "point": [0, 1, 0], "expect": {"indices": [1]}},
            {"kind": "kappa_battery", "charts": ["B"], "count": 10,
             "expect": {"not_equivalent": 0, "max_inverse_error": 1e-8}},
        ],
    }


_BUILDERS = {
    "full-tangent-pair": _full_tangent_pair,
    "dxy-leaves": _dxy_leaves,
    "rotation-action": _rotation_action,
    "so3-fields": _so3_fields,
    "so2-in-so3": _so2_in_so3,
    "torus-cover": _torus_cover,
    "xy-dz-fibers": _xy_dz_fibers,
}

NAMES = tuple(_BUILDERS)


def gallery(name: str) -> dict:
    """The canonical scenario ``name``; raises ``KeyError`` for unknown names."""
    try:
        data = _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown gallery scenario {name!r}; choose from {', '.join(NAMES)}") from None
    data = {"schema_version": SCHEMA_VERSION, **data}
    return copy.deepcopy(data)
