"""
Why the decoder needs a renormalized sharpening operator
========================================================

A deep, purely linear decoder applies its propagation operator once per
layer. On a bipartite graph the naive sharpening operator has an eigenvalue
of magnitude 3, so activations can grow like 3 per layer; the stable
operator's radius is at most 1. Train both with the same aggressive step
size and compare the largest activation norm seen.

The step size is large enough that the weights themselves grow under either
decoder, so both peaks are big; the operator accounts for the gap between them.
"""

import numpy as np

from gala.data_io import SbmSpec, sbm_generate
from gala.model import ModelConfig, build_specs, init_params
from gala.seeding import substream
from gala.trainer import TrainConfig, train

ds = sbm_generate(SbmSpec(block_sizes=(40, 40), p_in=0.0, p_out=0.3, noise=0.3, seed=0))
tc = TrainConfig(learning_rate=0.3, max_epochs=200, convergence_rel_tol=None, seed=0)

for decoder in ("naive_sharpening", "stable_sharpening"):
    mc = ModelConfig(hidden_dims=(64,) * 4, decoder=decoder, hidden_activation="identity",
                     latent_activation="identity", final_activation="identity")
    specs = build_specs(ds.features.shape[1], mc)
    params = init_params(specs, substream(tc.seed, "init"))
    rep = train(ds.features, ds.affinity, specs, params, tc, raise_on_nonfinite=False)
    peak = np.max(rep.activation_norms)
    print(f"{decoder:<18} epochs {rep.epochs:4d}  stop={rep.stop_reason:<10} peak activation norm {peak:.3g}")
