"""Small Monte Carlo runs: factor loss across panel sizes and the sampling
distribution of the loading estimates.

The full tables use 200 replications per cell (``matrix-di mc``); here a
handful keeps the script quick.

Run with ``python3 demos/03_monte_carlo.py``.
"""

# %%
import numpy as np

from matrix_di import simulate
from matrix_di.simulate import SimConfig

grid = [SimConfig(p=p, q=q, T=2 * p * q, replications=10, seed=3) for p, q in simulate.SIZES]
for row in simulate.run_table1(grid):
    print(f"(p, q)=({row['p']:2d}, {row['q']:2d}) T={row['T']:4d}  factor loss {row['mean']:.4f} (sd {row['sd']:.4f})")

# %% [markdown]
# Sampling distribution of the first coordinate of the loading estimates,
# standardized, for three alpha values.  A QQ correlation near one means
# the standardized draws look normal.

# %%
res = simulate.run_normality(SimConfig(p=10, q=10, k=3, r=2, T=400, seed=7), replications=100)
for est, a in res.columns:
    print(f"{est:8s} alpha={a:+.0f}  QQ correlation {res.qq_correlation(est, a):.4f}")

# %%
theo, z = res.qq("kron_1", 0.0)
print("tail quantiles (normal, sample):", np.round(theo[[0, -1]], 2), np.round(z[[0, -1]], 2))
