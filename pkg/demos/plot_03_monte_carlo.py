"""
Bias and failure rates by simulation
====================================

``monte_carlo`` runs many independently seeded copies of a variant on one
fixed stream and reports the mean, its standard error, and how often the
estimate left the (1 +- epsilon) band.
"""

from cutoffsketch import SizingParams
from cutoffsketch.harness import Experiment, Permuted, Repeated, monte_carlo

stream = Permuted(Repeated(1000, 3), seed=4)

print("fixed s = 50, 2000 trials")
for variant in ("DonD", "DonDPrime", "CVM2", "CVM2Refuse"):
    rep = monte_carlo(Experiment(variant, stream, trials=2000, base_seed=1, s=50, epsilon=0.3))
    print(f"  {variant:11s} mean={rep.mean_estimate:7.1f} +- {rep.standard_error:5.1f}"
          f"  outside 30%: {rep.failure_rate:.3f}")

print("sized for eps=0.5, delta=0.1")
sizing = SizingParams(0.5, 0.1, 3000, variant="CVM2")
rep = monte_carlo(Experiment("CVM2", stream, trials=500, base_seed=2, sizing=sizing))
for key, value in rep.as_dict().items():
    print(f"  {key} = {value}")
