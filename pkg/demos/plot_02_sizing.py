"""
Choosing the bucket limit
=========================

The list size needed for an (epsilon, delta) guarantee depends on the
variant.  Uniform scores need a larger list than geometric ones, and the
variant that refuses instead of aborting pays with a log n term.
"""

from cutoffsketch import SizingParams, bucket_limit

m = 10 ** 6
for eps in (0.5, 0.2, 0.1):
    row = []
    for variant in ("DonD", "DonDPrime", "CVM2Refuse", "Tracking"):
        res = bucket_limit(SizingParams(eps, 0.05, m, n=m, variant=variant))
        row.append(f"{variant}={res.s}")
    print(f"eps={eps}:", "  ".join(row))

# the cutoff the analysis expects the sketch to stay above
res = bucket_limit(SizingParams(0.2, 0.05, m, variant="CVM2"))
for f0 in (10 ** 3, 10 ** 4, 10 ** 5):
    print(f"F0={f0}: s={res.s}, p0=2^-{res.p0_exponent(f0)}")
