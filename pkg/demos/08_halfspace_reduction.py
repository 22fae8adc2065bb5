"""Half-space cones: the one-dimensional reduction.

For K = {x : a.x > 0} the acute-angle condition cannot hold and the wedge
machinery does not apply.  Projecting onto a.X reduces the problem to a
one-dimensional walk killed at the origin, with tail
V(x) * c1^n * n^(-3/2): the half-line is the p = 1, d = 1 case.
"""

import numpy as np

from conelab import ConeSpec, StepLaw, check_acute_cone_condition, solve_cramer_point
from conelab.analysis import fit_tail
from conelab.dp_oracle import halfspace_1d

law = StepLaw(support=np.array([[1, 0], [-1, 0], [0, 1], [0, -1]]),
              probs=np.array([1 / 8, 3 / 8, 1 / 8, 3 / 8]))

print("the half-space fails the acute-angle condition by construction:")
half = ConeSpec.halfspace(np.array([1.0, 0.0]))
ok, worst = check_acute_cone_condition(half, solve_cramer_point(law).h)
print(f"  ok = {ok}, worst angle = {worst:.6f} (pi/2 = {np.pi / 2:.6f})")
print()

series = halfspace_1d(law, np.array([1.0, 0.0]), x0_height=1, n_max=400)
print("projected one-dimensional law of a.X:")
for z, p in zip(series.law.support, series.law.probs):
    print(f"  step {int(z[0]):+d}  prob {p}")
c1_star = np.sqrt(3.0) / 4.0 + 0.5
print(f"projected survival rate c1 = {series.rescale_by:.12f} "
      f"(closed form {c1_star:.12f})")
print(f"P(tau > 1) from height 1 = {series.survival[1] * series.rescale_by} "
      f"(exactly 5/8)")
print()

fit = fit_tail(series)
print("tail of the killed half-line walk:")
print(f"  fitted exponent  = {fit.exponent_hat:.4f}   (expected 3/2)")
print(f"  fitted rate      = {fit.c_hat:.6f} (c1 = {c1_star:.6f})")
print()
print(" n     b_n * n^(3/2)")
for n in (50, 100, 200, 400):
    print(f"{n:4d}   {series.survival[n] * n ** 1.5:10.6f}")
print("(flattening confirms the polynomial order 3/2)")
