"""
Splitting a mixed measure and recovering its non-atomic part
============================================================

A structured measure mixes atoms, a block-carried measure, limit atoms off
the blocks and a level-2 part. ``decompose`` separates them. Restricting the
witness stream away from a set that covers the atomic parts gives a stream
for the normalized non-atomic part.
"""
import random
from fractions import Fraction

from seqmeasure.hierarchy import converge_check, nonatomic_target, nonatomic_witness_extract, preset_build, stream_for
from seqmeasure.measure import decompose
from seqmeasure.sampling import random_structured

rng = random.Random(3)
nu, schedule = random_structured(rng)
for w, part in nu.components:
    print(f"{str(w):>6}  {type(part).__name__}")

d = decompose(nu)
print("masses:", d.part0.total(), d.part1.total(), d.part2.total(), "tail bound", d.tail_bound)
print("non-atomic partitions:", [(c["eps"], c["depth"]) for c in d.nonatomic[:4]], "...")

b2 = preset_build(2)
stream = nonatomic_witness_extract(stream_for(nu), nu, schedule)
rep = converge_check(stream, nonatomic_target(nu), b2.generators, Fraction(1, 25), 1000, keep_values=False)
print("extracted stream:", "pass" if rep.passed else "fail", "settle", rep.settle)
