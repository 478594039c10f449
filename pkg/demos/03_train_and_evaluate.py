"""
Training an encoder and probing it
==================================

Fit the contrastive encoder on a noisy block model, then compare a linear
probe and k-means on the learned embeddings with the same tools applied
to raw features.
"""

from asgcl.data import generate_sbm
from asgcl.evaluation import evaluate
from asgcl.trainer import TrainConfig, fit

# heavy feature noise so the graph structure has to do the work
g = generate_sbm(n=300, blocks=3, p_in=0.1, p_out=0.01, feature_noise=1.0, seed=0)

cfg = TrainConfig(epochs=150, hidden=64, seed=0)
res = fit(g, cfg, progress=lambda e, br: e % 50 == 0 and print(f"epoch {e}: {br}"))
first, last = res.log[0].total, res.log[-1].total
print(f"total loss {first:.4f} -> {last:.4f}")

seeds = range(3)
for name, w in (("raw features", None), ("learned", res.weights)):
    acc = evaluate(g, w, "classification", seeds).mean()["accuracy"]
    clu = evaluate(g, w, "clustering", seeds).mean()
    print(f"{name:>12}: probe acc {acc:.3f}, NMI {clu['nmi']:.3f}, ARI {clu['ari']:.3f}")

# spectral augmentation switched off for comparison
abl = fit(g, TrainConfig(epochs=150, hidden=64, seed=0, no_spectral=True))
acc = evaluate(g, abl.weights, "classification", seeds).mean()["accuracy"]
print(f" no-spectral: probe acc {acc:.3f}")

