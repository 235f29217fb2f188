"""
Union size of a stream of ranges
================================

When the stream delivers whole sets, each set is walked by geometric jumps
at the current cutoff instead of element by element.  Only membership, size
and "i-th element" queries are needed, so huge ranges cost little.
"""

import time

from cutoffsketch import CuboidSet, RangeSet, SketchConfig, run_set_stream

sets = [RangeSet(10 ** 6 * k, 10 ** 6 * k + 2 * 10 ** 6 - 1) for k in range(50)]
truth = 10 ** 6 * 49 + 2 * 10 ** 6
start = time.perf_counter()
rep = run_set_stream(SketchConfig("CVM2Refuse", s=400, seed=3), sets)
elapsed = time.perf_counter() - start
print(f"true union {truth}, estimate {rep.estimate:.0f}, {elapsed * 1e3:.1f} ms")

# boxes in the plane: 10 overlapping 300 x 300 squares
boxes = [CuboidSet.of((1 + 100 * k, 300 + 100 * k), (1, 300)) for k in range(10)]
rep = run_set_stream(SketchConfig("CVM2Refuse", s=300, seed=5), boxes)
print("boxes: true", 1200 * 300, "estimate", rep.estimate)
