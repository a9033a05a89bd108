"""
The level tower and its witness streams
=======================================

Level 1 is asymptotic density. Level a+1 evaluates a set as the limit of
level-a values of its block traces. Every level has finitely supported witness
streams, which converge on the dyadic generators. This script prints the
generator values and writes a convergence table for plotting.
"""
from fractions import Fraction
from pathlib import Path

from seqmeasure.hierarchy import converge_check, metric_isomorphism_defects, preset_build, witness_next
from seqmeasure.natset import Block, Dyadic, lifted_union

for level in (1, 2, 3):
    b = preset_build(level)
    print(f"level {level}: {len(b.generators)} generators, defects {metric_isomorphism_defects(b)}")

b2 = preset_build(2)
print("mu2(lifted evens) =", b2.measure(lifted_union(Dyadic(1, [0]))))
print("mu2(Block(5)) =", b2.measure(Block(5)))

# the stage-s witness lives inside block s
w = witness_next(b2, 3, 9)
print("witness in block 3:", w.to_finsupp().points[:5], "... mass on Block(3):", w(Block(3)))

for level, horizon, tol in [(1, 2000, Fraction(1, 100)), (2, 1000, Fraction(1, 50)), (3, 1000, Fraction(1, 50))]:
    b = preset_build(level)
    rep = converge_check(b.stream(), b.measure, b.generators, tol, horizon)
    print(f"level {level}: verdict {'pass' if rep.passed else 'fail'}, settle {rep.settle}, "
          f"distance at {horizon}: {rep.distances[-1]}")
    if level == 2:
        out = Path("level2_convergence.csv")
        out.write_text(rep.to_csv())
        print("  table written to", out)
