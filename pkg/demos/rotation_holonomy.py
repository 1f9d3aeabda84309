"""Holonomy of the rotation field on the plane.

Words in the rotation chart are compared by the bisection test alone and
then with a quotient oracle built from the action groupoid SO(2) x R^2.
"""

import math

from subalgebroid import (
    AlgebroidPresentation,
    Chart,
    MatrixGroup,
    PairBox,
    QuotientOracle,
    Section,
    SingularSubalgebroid,
    Transformation,
    Word,
    equivalent,
    word_phi,
)
from subalgebroid.holonomy import trivial_membership

T2 = AlgebroidPresentation.tangent(2)
pair = PairBox(2)
B = SingularSubalgebroid.from_strings(T2, [["-x1", "x0"]], 2)
rot = Chart.build(B, pair, lambda_box=10.0)

K = Transformation(MatrixGroup(2), 2)
oracle = QuotientOracle(K, {Section.parse(["-x1", "x0"], 2): Section.parse(["1"], 2)}, trivial_membership())

x = (1.0, 0.0)
quarter = Word.build([(rot, [math.pi / 2])], x)
split = Word.build([(rot, [0.3]), (rot, [math.pi / 2 - 0.3])], x)
print("quarter turn lands at", word_phi(quarter).target.round(12))
print("quarter vs split quarter:", equivalent(quarter, split).kind)

origin = (0.0, 0.0)
empty = Word.empty(pair, origin)
for angle in (math.pi, 2 * math.pi):
    w = Word.build([(rot, [angle])], origin)
    plain = equivalent(w, empty).kind
    with_oracle = equivalent(w, empty, oracle=oracle).kind
    print(f"turn {angle:.4f} at the origin vs unit: plain {plain}, with oracle {with_oracle}")
