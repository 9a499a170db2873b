"""Freeze reference values of the Buckley-Leverett flux and its derivatives.

The values are obtained by symbolic differentiation and exact rational
evaluation, then written as a C++ include consumed by the unit tests:

    python3 tests/oracles/flux_oracle.py > tests/oracles/flux_values.inc
"""

import sympy as sp

u = sp.symbols("u", real=True)
f = 4 * u**2 / (4 * u**2 + (1 - u) ** 2)
df = sp.diff(f, u)
d2f = sp.diff(f, u, 2)

points = [sp.Rational(p) for p in
          ["-3", "-1", "-1/2", "-1/10", "0", "1/10", "1/4", "1/3", "1/2",
           "2/3", "3/4", "9/10", "1", "3/2", "2", "3"]]

print("// Generated by flux_oracle.py; do not edit.")
print("// {u, f(u), f'(u), f''(u)}")
for p in points:
    vals = [p, f.subs(u, p), df.subs(u, p), d2f.subs(u, p)]
    print("{" + ", ".join(sp.N(v, 25).__str__() if v != 0 else "0.0" for v in vals) + "},")
