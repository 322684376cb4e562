"""Bayesian vs MAP prediction.

The MAP variant (nb) reads off sigmoid(mu).  The Bayesian variant (b) averages
the sigmoid over each latent marginal, which pulls probabilities toward 1/2 as
the variance grows.  The variance norm says when the two will disagree.
"""

import numpy as np

from gcrfbc import GenConfig, ModelParams, generate, predict_b, predict_nb

data = generate(GenConfig(n_nodes=4, n_instances=5, seed=1))
inst = data.instance(0)

for alpha, beta in (((22.0, 21.0), (0.1, 0.67)), ((0.2, 0.4), (1.0, 18.0))):
    p = ModelParams(alpha, beta)
    b, nb = predict_b(p, inst), predict_nb(p, inst)
    print(f"alpha={alpha} beta={beta}  variance norm {b.variance_norm:.3g}")
    print("  nb:", np.round(nb.probs, 4))
    print("  b: ", np.round(b.probs, 4))

# With small variance the two agree to four digits.  With large variance b is
# pulled toward 1/2, by an amount that differs per node.
