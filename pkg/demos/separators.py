"""
Separation certificates
=======================

Each construction returns a witness set plus recorded claims. ``verify``
re-evaluates every claim from scratch, including after a JSON round trip.
"""
import json
from fractions import Fraction

from seqmeasure.measure import Diagonal, FinSuppMeasure, LevelMeasure
from seqmeasure.natset import Block, Finite, Lift, Shrink, Stack, block_point, FULL
from seqmeasure.separators import (
    Certificate, claim3_separator, claim4_separator, dyadic_oracle, null_union, separate_finsupp, verify,
)

mu1, mu2 = LevelMeasure(1), LevelMeasure(2)
delta = Fraction(1, 10)

c = separate_finsupp(mu1, FinSuppMeasure.uniform(range(10)), delta)
print("finsupp:", c.witness, verify(c))

# a limit atom carried by sets whose block traces shrink
lam = Diagonal(FinSuppMeasure.dirac(0))
V = Stack(Shrink(1, "harmonic", Fraction(1), 1, 1))
c = claim3_separator(mu2, [(lam, V)], delta)
print("claim3: schedule", c.schedule["n"], "lambda(F1) =", lam(c.witness), verify(c))

# point masses marching through the blocks
stream = [FinSuppMeasure.dirac(block_point(n, 3)) for n in range(1, 7)]
c = claim4_separator(mu2, stream, dyadic_oracle(stream, 1), delta)
print("claim4: selected", c.schedule["k"], "values", [stream[k](c.witness) for k in c.schedule["k"]], verify(c))

c = null_union([Lift(n, FULL) for n in range(6)] + [Finite([0]), Block(9)], mu2)
print("null union: mu2(A) =", mu2(c.witness), verify(c))

# certificates survive serialization; a tampered value does not verify
blob = json.dumps(c.to_json())
back = Certificate.from_json(json.loads(blob))
print("round trip:", verify(back), f"({len(blob)} bytes)")
data = json.loads(blob)
data["claims"][0]["value"] = [1, 2]
print("tampered:", verify(Certificate.from_json(data)))
