"""What does the LT model do when there is nothing local to find?

Data come from an ordinary HDP-HMM over 4-bit states: the next state does not
care how similar it is to the current one. The LT model starts with lambda = 1
(a strong preference for near neighbours) and has to learn that the
preference is not there. We print the lambda trace and compare F1 with the
vanilla model, which never had the preference in the first place.

Run:  python3 demos/no_local_structure.py [iterations]
"""

import sys

import numpy as np

from hdphmm_lt import Dataset, HdpHyper, ModelConfig, SynthHdpParams, gen_hdp_hmm, run_chain

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 1000

d = gen_hdp_hmm(SynthHdpParams(J=8, D=4, K=6, T=300, seed=1))
data = Dataset(d.sequences, truth=d.truth, W=d.W)

lt = run_chain(ModelConfig(variant="lt", hyper=HdpHyper(J=20), iterations=iterations,
                           burn_in=iterations // 3, thin=10, chains=1, seed=1), data)
vanilla = run_chain(ModelConfig(variant="vanilla", hyper=HdpHyper(J=20), iterations=iterations,
                                burn_in=iterations // 3, thin=10, chains=1, seed=1), data)

lam = np.array([row["lambda"] for row in lt.trace])
print("lambda, averaged over blocks of 10 recorded sweeps:")
print(np.round(lam[: len(lam) // 10 * 10].reshape(-1, 10).mean(axis=1), 3))

print(f"\npost burn-in lambda {lt.posterior_mean('lambda'):.3f}")
print(f"F1: lt {lt.posterior_mean('f1'):.3f}, vanilla {vanilla.posterior_mean('f1'):.3f}")
# alpha and lambda trade off: sparse rows can come from a small alpha or from
# rescaling a denser row, so the LT fit tends to carry a larger alpha
print(f"alpha: lt {lt.posterior_mean('alpha'):.2f}, vanilla {vanilla.posterior_mean('alpha'):.2f}")
