"""
Checking the hand-written gradients
===================================

Everything in the package is trained with manual backward passes. Here
each one is compared against central finite differences.
"""

import numpy as np

from asgcl.augment import project_delta, spectral_loss, spectral_loss_grad
from asgcl.encoder import EncoderWeights, backward_pair, forward_pair
from asgcl.graph import build_graph
from asgcl.losses import LossConfig, sample_negatives, total_loss

rng = np.random.default_rng(5)
n = 10
A = np.triu(rng.random((n, n)) < 0.35, 1)
pairs = np.argwhere(A)
g = build_graph(pairs, rng.normal(size=(n, 4)))

# spectral loss with respect to a symmetric flip-probability matrix
delta = project_delta(rng.random((n, n)), 0.3)
G = spectral_loss_grad(g, delta)
i, j, h = 2, 7, 1e-5
E = np.zeros((n, n))
E[i, j] = E[j, i] = h
fd = (spectral_loss(g, delta + E) - spectral_loss(g, delta - E)) / (4 * h)
print(f"spectral grad at ({i},{j}): analytic {G[i, j]:.8f}, finite diff {fd:.8f}")

# encoder and contrastive loss, chained
w = EncoderWeights.init(4, 6, 2, 1, rng)
anchors = np.arange(n)
negatives = sample_negatives(anchors, rng)
cfg = LossConfig(alpha=1.0, beta=0.3)


def loss_at(W):
    emb = forward_pair(g, g, EncoderWeights(W, w.k))
    return total_loss(emb.H1, emb.H2, anchors, cfg, negatives=negatives)[0]


emb = forward_pair(g, g, w)
br, dH1, dH2 = total_loss(emb.H1, emb.H2, anchors, cfg, negatives=negatives)
print("loss parts:", br)
grads = backward_pair(emb.tape, dH1, dH2)
for layer in range(len(w.W)):
    idx = (1, 2)
    Wp = [x.copy() for x in w.W]
    Wm = [x.copy() for x in w.W]
    Wp[layer][idx] += 1e-6
    Wm[layer][idx] -= 1e-6
    fd = (loss_at(Wp).total - loss_at(Wm).total) / 2e-6
    print(f"layer {layer} weight {idx}: analytic {grads[layer][idx]:.8f}, finite diff {fd:.8f}")
