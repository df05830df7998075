"""How do we know the sampler is right?

Two kinds of evidence:

1. Conditional oracles. Each Gibbs step is compared with a brute-force
   answer on a problem small enough to solve exactly: enumeration of all
   paths for FFBS, Stirling numbers for table counts, quadrature for the
   lambda density, finite differences for the HMC gradient.

2. A joint-distribution test. Draw (parameters, data) straight from the
   prior, and separately run a chain that alternates Gibbs sweeps with
   regenerating the data. If every step is correct both produce the same
   joint distribution, so the moments of tracked statistics must agree.

Finally we plant a bug (the pi shape off by one) and watch the test fail.

Run:  python3 demos/checking_the_sampler.py [samples]
"""

import sys

from hdphmm_lt import RandomStream
from hdphmm_lt import validation

samples = int(sys.argv[1]) if len(sys.argv) > 1 else 1500

report = validation.conditional_oracle_suite(RandomStream(0))
print(validation.format_report({"oracles": report.to_dict()}))

config = validation.tiny_config()
good = validation.geweke_test(config, samples, RandomStream(1))
print(f"\ncorrect sampler: max |z| {good.max_abs_z:.2f} over {len(good.statistics)} statistics "
      f"-> {'pass' if good.passed else 'FAIL'}")

with validation.mutation("pi_shape"):
    bad = validation.geweke_test(config, samples, RandomStream(1))
worst = max(bad.statistics, key=lambda s: abs(s.z))
print(f"pi shape + 1:    max |z| {bad.max_abs_z:.2f} (worst: {worst.name}) "
      f"-> {'pass' if bad.passed else 'detected'}")
