"""
Checking transcripts
====================

A traced run records the list and cutoff after every step.  The harness can
verify that membership always matches "latest score below the cutoff", that
the cutoff never rises, and that uniform and bucketed geometric scores drawn
from the same randomness keep their cutoffs within a factor of two.
"""

from cutoffsketch import SketchConfig, run
from cutoffsketch.harness import (
    Permuted, Zipf, check_fair, check_monotone, coupled_dond_pair, generate_stream,
)

stream = generate_stream(Permuted(Zipf(300, 1.1, 2000), seed=2), seed=2)
rep = run(SketchConfig("CVM2", s=30, seed=9, trace=True), stream)
print("fair:", bool(check_fair(rep.transcript, stream)),
      " monotone:", check_monotone(rep.transcript))
print("distinct cutoffs visited:", sorted(set(rep.transcript.cutoffs), reverse=True))

pair = coupled_dond_pair(stream, depth=20, s=30, seed=4)
ratios = [d.cutoff / g.cutoff for d, g in zip(pair.dond.records, pair.dond_prime.records)]
print("coupling holds:", pair.ok, " ratio range:", min(ratios), "-", max(ratios))
