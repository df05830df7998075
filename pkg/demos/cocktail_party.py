"""Who is speaking? Four transition priors on a small cocktail party.

Six speakers sit in two conversations of three. Within a conversation people
take turns, so at most one of them talks at a time, and the latent state at
each step is a 6-bit vector saying who is on. Eight microphones record a
noisy linear mix of the voices through a known weight matrix W.

Moving from one configuration to the next usually flips a single bit, since
one person stops or starts. The LT models encode that: jumps between states
at Hamming distance d are damped by exp(-lambda * d), and lambda is learned.

Run:  python3 demos/cocktail_party.py [iterations]
"""

import sys

import numpy as np

from hdphmm_lt import CocktailParams, Dataset, HdpHyper, ModelConfig, fit, gen_cocktail
from hdphmm_lt.metrics import f1_binary
from hdphmm_lt.model import averaged_state_matrix

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 600

d = gen_cocktail(CocktailParams(speakers=6, groups=2, steps=400, channels=8, seed=0))
print(f"{d.truth.shape[0]} steps, {d.truth.shape[1]} speakers, "
      f"{len({tuple(r) for r in d.truth})} distinct on/off patterns in the truth")

data = Dataset([d.observations], truth=[d.truth], W=d.W)
for variant in ("vanilla", "sticky", "lt", "sticky-lt"):
    config = ModelConfig(variant=variant, hyper=HdpHyper(J=20), iterations=iterations,
                         burn_in=iterations // 3, thin=10, chains=1, seed=0)
    results = fit(config, data)
    r = results[0]
    avg = np.concatenate(averaged_state_matrix(results))
    line = (f"{variant:>10}: mean F1 {r.posterior_mean('f1'):.3f}, "
            f"averaged-matrix F1 {f1_binary(avg, d.truth):.3f}, "
            f"states used {r.posterior_mean('n_states'):.1f}")
    if config.is_lt:
        line += f", lambda {r.posterior_mean('lambda'):.2f}"
    print(line)

# The averaged state matrix is a per-step probability that each speaker is on.
# Thresholding it at 0.5 gives a point estimate comparable to the truth.
print("\nfirst 60 steps of speaker 0, truth vs sticky-lt estimate:")
print("".join(map(str, d.truth[:60, 0])))
print("".join("1" if p >= 0.5 else "0" for p in avg[:60, 0]))
