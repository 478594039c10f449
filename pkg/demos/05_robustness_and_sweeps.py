"""
Robustness and sensitivity
==========================

Re-embed increasingly damaged graphs with a fixed encoder, then sweep the
flip budget. Small settings keep this under a minute.
"""

from asgcl.data import generate_sbm
from asgcl.experiments import param_sweep, robustness_sweep
from asgcl.trainer import TrainConfig

g = generate_sbm(n=150, blocks=3, p_in=0.15, p_out=0.01, feature_noise=1.0, seed=2)
cfg = TrainConfig(epochs=60, hidden=32, seed=0)

for kind in ("edge", "feature"):
    rows = robustness_sweep(g, cfg, kind=kind, ratios=(0.0, 0.4, 0.8), seeds=range(3))
    print(kind, " ".join(f"{r['ratio']:.1f}:{r['accuracy_mean']:.3f}" for r in rows))

for r in param_sweep(g, cfg, "eps", (0.1, 0.2, 0.4), seeds=range(3)):
    print(f"eps={r['eps']:.1f}: acc {r['accuracy_mean']:.3f} +- {r['accuracy_std']:.3f}")
