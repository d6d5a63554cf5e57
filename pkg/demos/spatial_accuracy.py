"""Spatial convergence against a manufactured solution.

The exact field sin(x/2) sin(y/2) exp(-t/4) on [-2pi, 2pi]^2 is driven by a
plug-in source.  The time step is small enough that the time error is
negligible, so halving h should cut the L2 error by about 2^(k+1).

    python demos/spatial_accuracy.py            # k = 1, N = 8..32 (seconds)
    python demos/spatial_accuracy.py 2 64       # k = 2 up to N = 64 (about a minute)
"""

import sys

from eqrkdg.config import PRESETS
from eqrkdg.experiments import accuracy_space

k = int(sys.argv[1]) if len(sys.argv) > 1 else 1
n_max = int(sys.argv[2]) if len(sys.argv) > 2 else 32
tau = 1e-3 if k == 1 else 1e-4

cfg = PRESETS["accuracy-space"].with_updates(degree=k, tau=tau)
cells = [n for n in (8, 16, 32, 64, 128) if n <= n_max]
table = accuracy_space(cfg, cells)
print(f"Q^{k} elements, tau = {tau:g}, T = {cfg.T}")
print(table.format())
print(f"expected order: {k + 1}")
