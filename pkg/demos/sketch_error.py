"""
Sampled matrix products
=======================

Approximate ``A @ B`` by drawing ``s`` columns of ``A`` (and the matching
rows of ``B``) with probability proportional to their squared norm, then
rescaling each draw by ``1 / (s p)``. The mean squared Frobenius error has
a closed form; here we watch the Monte-Carlo average converge to it.
"""
import numpy as np

from ladies.variance import lemma1_closed_form, optimal_probs, sketch_errors

rng = np.random.default_rng(0)
A = rng.normal(size=(20, 15))
B = rng.normal(size=(15, 8))
probs = optimal_probs(A)

print(" s   closed form   Monte Carlo (1e5)   z")
for s in (1, 2, 5, 10):
    closed = lemma1_closed_form(A, B, probs, s)
    errs = sketch_errors(A, B, probs, s, 100_000, rng)
    se = errs.std(ddof=1) / np.sqrt(errs.size)
    print(f"{s:2d}   {closed:11.3f}   {errs.mean():11.3f} +- {se:5.3f}   {(errs.mean() - closed) / se:+.2f}")

# uniform column sampling is unbiased too, but noisier
uniform = np.full(15, 1 / 15)
errs_u = sketch_errors(A, B, uniform, 5, 100_000, rng)
print(f"\nuniform law, s=5: {errs_u.mean():.3f}  (norm law: {lemma1_closed_form(A, B, probs, 5):.3f})")
