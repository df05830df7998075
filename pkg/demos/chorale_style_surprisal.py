"""Held-out surprisal on symbol sequences with a hidden geometry.

Think of chord sequences: each hidden state emits symbols from its own
categorical distribution, and states live at points in the plane, with
transitions favouring nearby points. The locations are never observed and
play no part in emissions; the LT model has to infer them from the
transition pattern alone.

We fit LT and vanilla models to 20 training sequences and score 3 held-out
ones by surprisal (negative log likelihood per symbol, paths integrated
out). Lower is better.

Run:  python3 demos/chorale_style_surprisal.py [iterations]
"""

import sys

from hdphmm_lt import Dataset, HdpHyper, ModelConfig, SynthHdpParams, gen_hdp_hmm, run_chain

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 600

d = gen_hdp_hmm(SynthHdpParams(J=10, V=30, emission="categorical", kernel="gaussian_euclidean",
                               n_sequences=23, T=100, seed=0))
train, test = Dataset(d.sequences[:20]), Dataset(d.sequences[20:])
print(f"{len(train.sequences)} training and "
      f"{len(test.sequences)} test sequences")

for variant in ("vanilla", "lt"):
    config = ModelConfig(variant=variant, emission={"family": "categorical"}, hyper=HdpHyper(J=20),
                         metrics=["train_loglik", "test_surprisal"], iterations=iterations,
                         burn_in=iterations // 3, thin=10, chains=1, seed=0)
    r = run_chain(config, train, test=test)
    extra = f", lambda {r.posterior_mean('lambda'):.2f}" if config.is_lt else ""
    print(f"{variant:>8}: test surprisal {r.posterior_mean('test_surprisal'):.4f} nats/symbol, "
          f"train log-lik {r.posterior_mean('train_loglik'):.1f}, "
          f"states used {r.posterior_mean('n_states'):.1f}{extra}")
