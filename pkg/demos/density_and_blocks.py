"""
Densities, blocks and the dyadic embedding
==========================================

Sets of naturals are symbolic terms. Dyadic residue classes carry the
interval algebra of [0, 1) into the naturals, and the blocks
B_n = {k : k+1 = 2^n (2i+1)} partition the naturals into infinitely many copies of them.
"""
from fractions import Fraction

from seqmeasure.natset import (
    Block, Dyadic, Finite, Lift, Shrink, Stack,
    block_point, block_trace, cesaro_density, compl, density_report, exact_density, inter, prefix,
)

evens = Dyadic(1, [0])
print("evens:", "".join(str(int(b)) for b in prefix(evens, 16)))
print("block 1:", "".join(str(int(b)) for b in prefix(Block(1), 16)))

# exact densities follow the Lebesgue measure of the dyadic intervals
for t in [evens, Dyadic(3, [1, 6]), Finite([7, 11]), Block(2), compl(Block(0))]:
    print(f"{t!s:40} {exact_density(t)}")

# independent bits multiply
print("evens and bit 1 clear:", exact_density(inter(evens, Dyadic(2, [0, 1]))))

# Cesàro estimates carry a rigorous bound
for N in (10, 1000, 1 << 16):
    print(N, cesaro_density(Dyadic(3, [1, 6]), N))

# a lift copies a set of indices into one block
A = Lift(3, evens)
print("Lift(3, evens) starts:", [block_point(3, i) for i in range(4)], "->", block_trace(A, 3))

# per-block sets whose trace shrinks like 1/(n+1) have no exact density in
# the decidable class, only a bracketed estimate (the true value is ln 2)
harmonic = Stack(Shrink(1, "harmonic", Fraction(1), 1, 1))
print("harmonic stack:", exact_density(harmonic).kind, "|", density_report(harmonic, 1 << 16))
