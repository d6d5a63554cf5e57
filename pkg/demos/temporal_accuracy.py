"""Temporal convergence of the three certified tableaux.

On [-4pi, 4pi]^2 with cubic elements the spatial error is far below the time
error, so halving tau exposes the order of each Runge-Kutta method.  The
second-order tableau runs without correction sweeps (L=0), the higher-order
ones with L=2: the extrapolated stage values alone would cap their order.

    python demos/temporal_accuracy.py           # 32x32 mesh, a few minutes
    python demos/temporal_accuracy.py 64        # the 64x64 mesh, longer
"""

import sys

from eqrkdg.config import PRESETS
from eqrkdg.experiments import accuracy_time

n = int(sys.argv[1]) if len(sys.argv) > 1 else 32
base = PRESETS["accuracy-time"].with_updates(cells=[n, n])

for name, L, p, m_max in (("qz2", 0, 2, 5), ("crouzeix3", 2, 3, 5), ("gl4", 2, 4, 4)):
    taus = [2.0 ** -m for m in range(2, m_max + 1)]
    table = accuracy_time(base.with_updates(tableau=name, L=L), taus)
    print(f"\n{name} (L={L}, nominal order {p}), {n}x{n} cells, k=3, T={base.T}")
    print(table.format())
# gl4 stops at 2^-4: below that its error meets the spatial error floor.
