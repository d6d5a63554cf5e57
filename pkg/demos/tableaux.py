"""Which Runge-Kutta tableaux may drive the energy-stable stepper?

A tableau qualifies when its weights are non-negative and the symmetric
matrix M = BA + A^T B - b b^T is positive semi-definite.  This script prints M
for every built-in tableau, then shows explicit Euler failing the test.

    python demos/tableaux.py
"""

import numpy as np

from eqrkdg import ButcherTableau, builtin, certify_algebraically_stable
from eqrkdg.rk import BUILTIN_NAMES

np.set_printoptions(precision=6, suppress=True)

for name in BUILTIN_NAMES:
    tab = builtin(name)
    rep = certify_algebraically_stable(tab)
    print(f"{name:>18}  s={tab.s}  eig(M)={rep.eigenvalues}  -> {'stable' if rep.stable else 'unstable'}")

# Explicit Euler: M = 2*1*0 - 1 = -1 < 0, so energy decay is not guaranteed.
fe = ButcherTableau(np.array([[0.0]]), np.array([1.0]), np.array([0.0]), "forward-euler")
rep = certify_algebraically_stable(fe)
print(f"{'forward-euler':>18}  M={rep.M.ravel()}  -> {'stable' if rep.stable else 'unstable'} ({rep.reason})")

# Tableaux can also be read from text: one row "c_i | a_i1 ... a_is" per
# stage, a line of dashes, then "| b_1 ... b_s".  Entries may be fractions.
from eqrkdg import parse_tableau  # noqa: E402

text = """
1/4 | 1/4  0
3/4 | 1/2  1/4
---
    | 1/2  1/2
"""
custom = parse_tableau(text, name="qz2 from text")
print("parsed text tableau matches qz2:", np.array_equal(custom.A, builtin("qz2").A))
