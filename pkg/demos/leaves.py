"""Leaves of the singular foliation spanned by the hamiltonian field of xy.

The axes split into five leaves (four half-axes and the origin) while
every other orbit stays on a hyperbola xy = const.
"""

from subalgebroid import AlgebroidPresentation, SingularSubalgebroid, classify_leaves, poly_parse

cot = AlgebroidPresentation.from_strings(2, 2, [["0", "-1"], ["1", "0"]])
B = SingularSubalgebroid.from_strings(cot, [["x1", "x0"]], 2, patch=((-10**5, -10**5), (10**5, 10**5)))
seeds = [(1, 0), (-1, 0), (0, 1), (0, -1), (0, 0), (1, 1), (-1, 1), (2, 0.5)]
xy = poly_parse("x0*x1", 2)

labels, traces = classify_leaves(B, seeds, 10.0, 1e-3, [xy])
for seed, label in zip(seeds, labels):
    print(f"seed {seed!s:>10}  leaf {label}")
drift = max(leg.drift["x0*x1"] for leg in traces)
print(f"max drift of xy along the traced legs: {drift:.1e}")
