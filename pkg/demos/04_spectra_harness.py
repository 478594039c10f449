"""
Laplacian distance at a matched flip budget
===========================================

For several budgets, count how many pairs an optimized sample flips and
flip that many pairs at random (any pair, additions only, removals only).
The optimized views should stay closest to the original Laplacian.
"""

from asgcl.experiments import spectra_comparison

rows = spectra_comparison(budgets=(0.1, 0.2, 0.3), seeds=range(5), n=100)
for r in rows:
    print(f"eps={r['eps']:.1f} {r['method']:>14}: {r['distance_mean']:.3f} +- {r['distance_std']:.3f}")
