"""Lifting circle words through the covering R x S^1 -> S^1 x S^1.

A word of total length lambda on the circle lifts to an arrow whose
translation part records how far it wound, not just where it ended.
"""

from subalgebroid import Chart, SingularSubalgebroid, TorusPairCovering, Word, covering_lift_word, word_phi

cov = TorusPairCovering.build(1)
P = cov.target_spec
B = SingularSubalgebroid.from_strings(P.presentation, [["1"]], 1)
c = Chart.build(B, P, lambda_box=2.0)

for lam in (0.5, 1.0, 1.5):
    w = Word.build([(c, [lam])], (0.3,))
    _, lifted = covering_lift_word(w, cov)
    winding = cov.source_spec.group.translation_part(lifted)[0]
    err = P.distance(cov(lifted), word_phi(w))
    print(f"lambda {lam}: endpoint {word_phi(w).target}, lifted translation {winding:.9f}, projection error {err:.1e}")
