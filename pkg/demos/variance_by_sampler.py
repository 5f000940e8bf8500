"""
One-layer variance of four samplers
===================================

A two-layer GCN is fit briefly on a sparse random graph, then the second
layer's aggregation ``P H W`` is estimated from sampled blocks. For each
sampler we print the mean squared error per output node and, where one
exists, the closed-form value it should match.
"""
import numpy as np

from ladies import variance as V
from ladies.data import SyntheticSpec, expected_union_size, generate
from ladies.graph import normalized_laplacian
from ladies.samplers import SamplerConfig
from ladies.train import study_activations

rng = np.random.default_rng(1)
ds = generate(SyntheticSpec(kind="er", n=300, p=0.01, feature_dim=16, num_classes=4, seed=1))
p, g = normalized_laplacian(ds.graph), ds.graph
H, W, _ = study_activations(ds, p, hidden=16, steps=50, rng=rng)
b, s, trials = 32, 32, 2000

rows = []
for cfg, closed in [
    (SamplerConfig("ladies", s_layer=s, normalize=False, keep_upper=False),
     V.ladies_exact_form(p, g, H @ W, b, s)),
    (SamplerConfig("fastgcn", s_layer=s, normalize=False), V.fastgcn_variance(p, H, W, b, s)),
    (SamplerConfig("neighbor", s_node=2, normalize=False, replace=True),
     V.graphsage_variance(p, g, H, W, b, 2)),
    (SamplerConfig("ladies", s_layer=s), None),
]:
    rep = V.empirical_variance(cfg, p, g, H, W, b, trials, rng)
    rows.append((cfg.label + ("" if cfg.normalize is False else ", default"), rep, closed))

for label, rep, closed in rows:
    cf = "-" if closed is None else f"{closed:9.4f}"
    print(f"{label:28s} {rep.empirical:9.4f} +- {rep.std_error:.4f}   closed {cf}")

print(f"\nLADIES draws from about {expected_union_size(g, b):.0f} candidates for b={b}; "
      f"FastGCN draws from all {ds.num_nodes}")
