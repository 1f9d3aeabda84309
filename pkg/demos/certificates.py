"""Involutivity certificates and fiber dimensions.

The so(3) rotation fields close with constant coefficients, the pair
{d/dx, x d/dy} does not, and {x d/dz, y d/dz} has a jump in fiber dimension
at the z-axis.
"""

from subalgebroid import AlgebroidPresentation, SingularSubalgebroid, fiber_dim_at, involutivity_certificate, poly_print

T2 = AlgebroidPresentation.tangent(2)
T3 = AlgebroidPresentation.tangent(3)

so3 = SingularSubalgebroid.from_strings(T3, [["0", "-x2", "x1"], ["x2", "0", "-x0"], ["-x1", "x0", "0"]], 2)
cert = involutivity_certificate(so3)
print("so(3) fields:", cert.verdict)
for (i, j), coeffs in sorted(cert.coefficients.items()):
    print(f"  [X{i}, X{j}] = " + " + ".join(f"({poly_print(c)}) X{k}" for k, c in enumerate(coeffs)))

bad = SingularSubalgebroid.from_strings(T2, [["1", "0"], ["0", "x0"]], 2)
c2 = involutivity_certificate(bad)
print("{d/dx, x d/dy}:", c2.verdict, "witness", c2.witness)

B = SingularSubalgebroid.from_strings(T3, [["0", "0", "x0"], ["0", "0", "x1"]], 3)
for p in [(0, 0, 0), (0, 0, 5), (1, 0, 0), (2, -3, 1)]:
    print(f"fiber dim of {{x dz, y dz}} at {p}: {fiber_dim_at(B, p).dim}")
