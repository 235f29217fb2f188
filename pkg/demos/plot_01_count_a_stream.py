"""
Counting distinct tokens in a stream
====================================

A cutoff sketch keeps at most ``s`` elements.  Below capacity it is exact;
above it, the kept elements are a sample whose inclusion probability is the
current cutoff, and the estimate divides by that probability.
"""

from cutoffsketch import SketchConfig, run
from cutoffsketch.harness import Permuted, Repeated, generate_stream

# a stream with 5000 distinct ids, each seen four times in shuffled order
stream = generate_stream(Permuted(Repeated(5000, 4), seed=1))
print("stream length:", len(stream), " true F0:", len(set(stream)))

# small enough to be exact
small = run(SketchConfig("CVM2", s=100, seed=0), stream[:60])
print("first 60 tokens ->", small.estimate, "at cutoff", small.final_cutoff)

# each variant on the full stream with a 200-slot list
for variant in ("DonD", "DonDPrime", "CVM1", "CVM2", "CVM2Refuse"):
    rep = run(SketchConfig(variant, s=200, seed=7), stream)
    print(f"{variant:11s} estimate={rep.estimate:8.1f} cutoff={rep.final_cutoff:.6f} "
          f"kept={rep.final_list_size} status={rep.status.value}")
