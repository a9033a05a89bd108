"""Sets separating a level measure from other measures, with certificates.

Every construction returns a ``Certificate``: the witness set, the schedule
that produced it and a list of claims.  A claim names a measure, a term and
an exact value together with the inequality the value must satisfy.
``verify`` recomputes each claim from scratch and re-checks the structural
conditions of the construction; it never trusts a recorded number.

Claims come in four kinds:

``value``  the measure of the term (or the sum over several terms);
``block``  the block measure ``mu'_n(t ∩ B_n)`` at a single block ``n``;
``tail``   an upper bound for ``mu'_m(t ∩ B_m)`` valid for every ``m >= n``,
           namely the limit of the block values plus the radii of the
           shrinking parts at ``n`` (radii never increase);
``limit``  the limit of the block values ``mu'_n(t ∩ B_n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .errors import (
    CertificateInvalidError,
    DecayUnresolvableError,
    ExhaustedStreamError,
    NonNullInputError,
    OracleFailureError,
    TermParseError,
)
from .measure import FinSuppMeasure, LevelMeasure, Measure, is_empty, measure_from_json, require
from .natset import (
    FULL,
    Block,
    Finite,
    Lift,
    SetTerm,
    Stack,
    block_index,
    block_of,
    block_trace,
    compl,
    diff,
    dyadic_phi,
    eventual,
    inter,
    prefix,
    term_from_json,
    term_to_json,
    union,
)
from .natset.terms import _frac_json, _frac_parse

RELATIONS: dict[str, Callable[[Fraction, Fraction], bool]] = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
}

TAIL_SEARCH_LIMIT = 1 << 20
SHAPE_PREFIX = 256
CLAIM3_EXTRA_BLOCKS = 4


@dataclass(frozen=True)
class Claim:
    measure: str
    kind: str  # "value" | "block" | "tail" | "limit"
    terms: tuple
    value: Fraction
    rel: str
    bound: Fraction
    block: int | None = None
    label: str = ""

    def holds(self) -> bool:
        return RELATIONS[self.rel](self.value, self.bound)

    def to_json(self) -> dict:
        d = {
            "measure": self.measure,
            "kind": self.kind,
            "terms": [term_to_json(t) for t in self.terms],
            "value": _frac_json(self.value),
            "rel": self.rel,
            "bound": _frac_json(self.bound),
        }
        if self.block is not None:
            d["block"] = self.block
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_json(cls, d: dict) -> Claim:
        if d["rel"] not in RELATIONS or d["kind"] not in ("value", "block", "tail", "limit"):
            raise TermParseError(f"bad claim {d!r}")
        return cls(
            d["measure"],
            d["kind"],
            tuple(term_from_json(t) for t in d["terms"]),
            _frac_parse(d["value"]),
            d["rel"],
            _frac_parse(d["bound"]),
            d.get("block"),
            d.get("label", ""),
        )


@dataclass
class Certificate:
    kind: str  # orthogonality | strong-orthogonality | F-membership | null-union
    construction: str  # finsupp | claim3 | claim4 | null_union
    witness: SetTerm
    delta: Fraction | None
    measures: dict
    claims: list
    schedule: dict = field(default_factory=dict)
    truncation: int | None = None
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        sched = {}
        for k, v in self.schedule.items():
            if v and isinstance(v[0], SetTerm):
                sched[k] = [term_to_json(t) for t in v]
            else:
                sched[k] = list(v)
        return {
            "kind": self.kind,
            "construction": self.construction,
            "witness": term_to_json(self.witness),
            "delta": None if self.delta is None else _frac_json(self.delta),
            "measures": {k: m.to_json() for k, m in self.measures.items()},
            "claims": [c.to_json() for c in self.claims],
            "schedule": sched,
            "truncation": self.truncation,
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, d: dict) -> Certificate:
        try:
            sched = {}
            for k, v in d.get("schedule", {}).items():
                sched[k] = [term_from_json(t) if isinstance(t, dict) else int(t) for t in v]
            return cls(
                d["kind"],
                d["construction"],
                term_from_json(d["witness"]),
                None if d.get("delta") is None else _frac_parse(d["delta"]),
                {k: measure_from_json(m) for k, m in d["measures"].items()},
                [Claim.from_json(c) for c in d["claims"]],
                sched,
                d.get("truncation"),
                d.get("notes", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TermParseError(f"malformed certificate: {exc}") from exc


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    diagnostic: str = ""

    def __bool__(self) -> bool:
        return self.ok


# -- evaluation of claims ------------------------------------------------------

def block_set(level: int, n: int) -> SetTerm:
    """The n-th block as seen by a level measure; at level 1 it is {n}."""
    return Finite([n]) if level == 1 else Block(n)


def _as_level(m: Measure, what: str) -> LevelMeasure:
    if not isinstance(m, LevelMeasure):
        raise CertificateInvalidError(f"{what} needs a level measure")
    return m


def tail_bound(m: LevelMeasure, terms: Sequence[SetTerm], n: int) -> tuple[int, Fraction]:
    """(N, bound) with sum_t mu'_k(t ∩ B_k) <= bound for every k >= max(N, n)."""
    N_all, total = 0, Fraction(0)
    for t in terms:
        N, limit, shrinks = m.block_tail(t)
        if limit is None:
            raise DecayUnresolvableError(f"block values of {t} have no resolvable limit")
        N_all = max(N_all, N)
        total += limit + sum((s.radius(max(n, N)) for s in shrinks), Fraction(0))
    return N_all, total


def block_limit(m: LevelMeasure, terms: Sequence[SetTerm]) -> Fraction:
    total = Fraction(0)
    for t in terms:
        limit = m.block_tail(t)[1]
        if limit is None:
            raise DecayUnresolvableError(f"block values of {t} have no resolvable limit")
        total += limit
    return total


def evaluate_claim(c: Claim, measures: dict) -> Fraction:
    m = measures[c.measure]
    if c.kind == "value":
        return sum((require(m.eval(t), "claim value") for t in c.terms), Fraction(0))
    lm = _as_level(m, "block claims")
    if c.kind == "block":
        return sum((require(lm.block_value(t, c.block), "block value") for t in c.terms), Fraction(0))
    if c.kind == "limit":
        return block_limit(lm, c.terms)
    N, bound = tail_bound(lm, c.terms, c.block)
    if c.block < N:
        raise CertificateInvalidError(f"tail claim starts at {c.block}, before the eventual index {N}")
    return bound


def _check_claims(cert: Certificate) -> str:
    for i, c in enumerate(cert.claims):
        if c.measure not in cert.measures:
            return f"claim {i} ({c.label}): unknown measure {c.measure!r}"
        try:
            v = evaluate_claim(c, cert.measures)
        except Exception as exc:  # noqa: BLE001 - every failure is a verdict
            return f"claim {i} ({c.label}): {type(exc).__name__}: {exc}"
        if v != c.value:
            return f"claim {i} ({c.label}): recorded {c.value}, recomputed {v}"
        if not c.holds():
            return f"claim {i} ({c.label}): {c.value} {c.rel} {c.bound} fails"
    return ""


def _labelled(cert: Certificate, prefix_: str) -> list[Claim]:
    return [c for c in cert.claims if c.label.startswith(prefix_)]


def _same_prefix(a: SetTerm, b: SetTerm, n: int = SHAPE_PREFIX) -> bool:
    return bool(np.array_equal(prefix(a, n), prefix(b, n)))


def _strictly_increasing(xs: Sequence[int]) -> bool:
    return all(a < b for a, b in zip(xs, xs[1:]))


# -- structural checks per construction -------------------------------------------

def _check_finsupp(cert: Certificate) -> str:
    tgt = _labelled(cert, "target")
    nu = _labelled(cert, "nu")
    if len(tgt) != 1 or len(nu) != 1:
        return "finsupp certificate needs one target claim and one nu claim"
    if tgt[0].terms != (cert.witness,) or nu[0].terms != (cert.witness,):
        return "finsupp claims must be about the witness set"
    d = cert.delta
    if not (tgt[0].value > 1 - d and nu[0].value < d):
        return "orthogonality inequalities fail"
    return ""


def _claim3_shape(cert: Certificate) -> str:
    ns = cert.schedule.get("n", [])
    Vs = cert.schedule.get("V", [])
    if len(ns) != len(Vs):
        return "schedule and V lists differ in length"
    if not _strictly_increasing(ns):
        return "schedule (n_i) is not strictly increasing"
    if not ns:
        return "" if cert.witness == FULL else "empty stream must give the full set"
    level = cert.measures["mu"].level
    last = ns[-1] + CLAIM3_EXTRA_BLOCKS
    for n in range(last + 1):
        got = block_trace(cert.witness, n)
        if n < ns[0]:
            want = compl(FULL)
        else:
            i = max(j for j, nj in enumerate(ns) if nj <= n)
            want = block_trace(compl(union(*Vs[: i + 1])), n)
        if not _same_prefix(got, want):
            return f"witness differs from the prescribed set on block {n}"
    for k, V in enumerate(Vs):
        # V_k minus the blocks below k must avoid the witness
        rest = diff(V, union(*[block_set(level, b) for b in range(ns[k])]))
        if not _same_prefix(inter(rest, cert.witness), compl(FULL), 1 << 12):
            return f"V_{k} meets the witness beyond block {ns[k]}"
    return ""


def _claim4_shape(cert: Certificate) -> str:
    ks = cert.schedule.get("k", [])
    if not ks:
        return "claim-4 certificate selects no indices"
    if not _strictly_increasing(ks):
        return "selected indices (k_n) are not strictly increasing"
    d = cert.delta
    for j, k in enumerate(ks):
        final = [c for c in _labelled(cert, f"final {j}")]
        if len(final) != 1 or final[0].value > d or final[0].terms != (cert.witness,):
            return f"missing or failing final bound for selected index {k}"
    return ""


def _null_union_shape(cert: Certificate) -> str:
    ns = cert.schedule.get("n", [])
    As = cert.schedule.get("A", [])
    if len(ns) != len(As):
        return "schedule and input lists differ in length"
    if not _strictly_increasing(ns):
        return "schedule (n_i) is not strictly increasing"
    level = cert.measures["mu"].level
    for i, (n, A) in enumerate(zip(ns, As)):
        trimmed = diff(A, union(*[block_set(level, b) for b in range(n)]))
        missing = diff(trimmed, cert.witness)
        e = is_empty(missing)
        if e is False or (e is None and prefix(missing, 1 << 14).any()):
            return f"witness does not cover input {i} beyond block {n}"
    zero = _labelled(cert, "witness null")
    if len(zero) != 1 or zero[0].value != 0 or zero[0].terms != (cert.witness,):
        return "missing null-witness claim"
    return ""


_SHAPE_CHECKS = {
    "finsupp": _check_finsupp,
    "claim3": _claim3_shape,
    "claim4": _claim4_shape,
    "null_union": _null_union_shape,
}


def verify(cert: Certificate) -> VerifyResult:
    """Recompute every claim and the construction's structural conditions."""
    msg = _check_claims(cert)
    if msg:
        return VerifyResult(False, msg)
    check = _SHAPE_CHECKS.get(cert.construction)
    if check is None:
        return VerifyResult(False, f"unknown construction {cert.construction!r}")
    try:
        msg = check(cert)
    except Exception as exc:  # noqa: BLE001
        msg = f"{type(exc).__name__}: {exc}"
    return VerifyResult(not msg, msg)


def _claim(measures: dict, mid: str, kind: str, terms, rel: str, bound, block=None, label="") -> Claim:
    terms = tuple(terms) if isinstance(terms, (list, tuple)) else (terms,)
    c = Claim(mid, kind, terms, Fraction(0), rel, Fraction(bound), block, label)
    v = evaluate_claim(c, measures)
    return Claim(mid, kind, terms, v, rel, Fraction(bound), block, label)


# -- finitely supported measures --------------------------------------------------

def separate_finsupp(target: LevelMeasure, nu: FinSuppMeasure, delta) -> Certificate:
    """F = complement of the support: target(F) = 1 and nu(F) = 0 exactly."""
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    F = compl(Finite(nu.points))
    measures = {"mu": target, "nu": nu}
    claims = [
        _claim(measures, "mu", "value", F, "=", 1, label="target"),
        _claim(measures, "nu", "value", F, "=", 0, label="nu"),
    ]
    cert = Certificate("orthogonality", "finsupp", F, delta, measures, claims,
                       notes={"strength": "exact: target(F) = 1 and nu(F) = 0"})
    return cert


# -- schedules ------------------------------------------------------------------------

def _least_start(m: LevelMeasure, terms: Sequence[SetTerm], bound: Fraction, lower: int) -> tuple[int, int]:
    """Least n >= lower such that the summed block values stay below ``bound``
    from n on, together with the block T from which the tail bound applies."""
    N, _ = tail_bound(m, terms, 0)
    limits = block_limit(m, terms)
    if limits >= bound:
        raise DecayUnresolvableError(f"block values tend to {limits}, not below {bound}")
    T = max(N, lower)
    while tail_bound(m, terms, T)[1] >= bound:
        T = max(T + 1, 2 * T)
        if T > TAIL_SEARCH_LIMIT:
            raise DecayUnresolvableError("block values decay too slowly to schedule")
    # binary search the least T' in [max(N, lower), T] whose tail bound works
    lo, hi = max(N, lower), T
    while lo < hi:
        mid = (lo + hi) // 2
        if tail_bound(m, terms, mid)[1] < bound:
            hi = mid
        else:
            lo = mid + 1
    T = lo
    start = lower
    for n in range(T - 1, lower - 1, -1):
        v = sum((require(m.block_value(t, n), "block value") for t in terms), Fraction(0))
        if v >= bound:
            start = n + 1
            break
    return start, T


# -- Claim 3 ---------------------------------------------------------------------------

def claim3_separator(
    target: LevelMeasure, stream: Sequence[tuple[Measure, SetTerm]], delta
) -> Certificate:
    """F1 in the family of sets with block measures tending to 1, with
    ``lambda_k(F1) < delta`` for every stream entry.

    Each entry is ``(lambda_k, V_k)`` with ``lambda_k(V_k) > lambda_k(full) - delta``
    and block values of ``V_k`` tending to 0.
    """
    delta = Fraction(delta)
    if target.level < 2:
        raise ValueError("block separators need a level of at least 2")
    measures: dict[str, Measure] = {"mu": target}
    claims: list[Claim] = []
    Vs = [V for _, V in stream]
    for k, (lam, V) in enumerate(stream):
        mid = f"lambda{k}"
        measures[mid] = lam
        full = require(lam.total(), f"total mass of lambda_{k}")
        c = _claim(measures, mid, "value", V, ">", full - delta, label=f"V {k}")
        if not c.holds():
            raise CertificateInvalidError(f"lambda_{k}(V_{k}) = {c.value} is not above {full - delta}")
        claims.append(c)
        lim = target.block_tail(V)[1]
        if lim is None:
            raise DecayUnresolvableError(f"block values of V_{k} have no resolvable limit")
        if lim != 0:
            raise CertificateInvalidError(f"block values of V_{k} tend to {lim}, not 0")

    if not stream:
        return Certificate("F-membership", "claim3", FULL, delta, measures, claims,
                           {"n": [], "V": []}, truncation=0)

    ns: list[int] = []
    for i in range(len(stream)):
        bound = Fraction(1, i + 1)
        U = union(*Vs[: i + 1])
        n_i, T = _least_start(target, [U], bound, ns[-1] + 1 if ns else 0)
        ns.append(n_i)
        for n in range(n_i, max(T, n_i)):
            claims.append(_claim(measures, "mu", "block", U, "<", bound, n, f"schedule {i}"))
        claims.append(_claim(measures, "mu", "tail", U, "<", bound, max(T, n_i), f"schedule tail {i}"))

    U_all = compl(union(*Vs))
    N, fam = eventual(U_all)
    start = max(N, ns[-1])
    head = {}
    for n in range(ns[0], start):
        i = max(j for j, nj in enumerate(ns) if nj <= n)
        head[n] = block_trace(compl(union(*Vs[: i + 1])), n)
    F1 = Stack(fam, start, head)

    for n in range(ns[0], ns[-1] + CLAIM3_EXTRA_BLOCKS + 1):
        i = max(j for j, nj in enumerate(ns) if nj <= n)
        claims.append(_claim(measures, "mu", "block", F1, ">", 1 - Fraction(1, i + 1), n, f"member {n}"))
    claims.append(_claim(measures, "mu", "limit", compl(F1), "=", 0, label="member limit"))
    for k in range(len(stream)):
        claims.append(_claim(measures, f"lambda{k}", "value", F1, "<", delta, label=f"separated {k}"))
    return Certificate("F-membership", "claim3", F1, delta, measures, claims,
                       {"n": ns, "V": Vs}, truncation=len(stream))


# -- Claim 4 ---------------------------------------------------------------------------

Oracle = Callable[[int, int, Fraction, Fraction], SetTerm]


def _level_point(i: int, level: int) -> int:
    """Coordinate of index i in the dyadic generators of the given level."""
    for _ in range(level - 1):
        i = block_index(i)
    return i


def dyadic_oracle(stream: Sequence[Measure], base_level: int) -> Oracle:
    """Separate block n from the atoms of ``lambda_k`` by removing the dyadic
    classes (of the block measure's level) that contain them."""

    def oracle(n: int, k: int, eps: Fraction, eps2: Fraction) -> SetTerm:
        atoms = [block_index(p) for p in stream[k].atoms() if block_of(p) == n]
        if not atoms:
            return Block(n)
        d = 0
        while Fraction(len(atoms), 1 << d) >= eps:
            d += 1
        res = {_level_point(i, base_level) % (1 << d) for i in atoms}
        return Lift(n, compl(dyadic_phi(base_level, d, res)))

    return oracle


def support_block_bound(lam: Measure) -> int:
    """Least M such that ``lam`` vanishes on every block >= M."""
    return max((block_of(p) + 1 for p in lam.atoms()), default=0)


def claim4_separator(
    target: LevelMeasure, stream: Sequence[Measure], oracle: Oracle, delta
) -> Certificate:
    """F2 with block measures tending to 1 and ``lambda_{k_n}(F2) <= delta``
    along a selected subsequence of a block-carried stream.

    ``oracle(n, k, eps, eps2)`` returns a set A with ``mu'_n(A) > 1 - eps`` and
    ``lambda_k(A ∩ B_n) < eps2``.  The stream is a finite truncation, so the
    recursion stops when no further index qualifies; every block past the
    stream's support is taken whole.
    """
    delta = Fraction(delta)
    if target.level < 2:
        raise ValueError("block separators need a level of at least 2")
    measures: dict[str, Measure] = {"mu": target}
    for k, lam in enumerate(stream):
        measures[f"lambda{k}"] = lam

    def lam_of(k, t):
        return require(stream[k].eval(t), f"lambda_{k}")

    traces: dict[int, SetTerm] = {0: FULL}  # index sets of A_n inside B_n
    ks: list[int] = []

    def covered(n):
        return union(*[Block(b) for b in range(n + 1)])

    def ask(n: int, selected: list[int]) -> SetTerm:
        if not selected:
            return FULL
        eps = Fraction(1, (n + 1) * len(selected))
        eps2 = delta / (1 << (n + 1))
        parts = []
        for k in selected:
            A = oracle(n, k, eps, eps2)
            a = block_trace(A, n)
            mv = require(target.block_value(Block(n) & A, n), "oracle set")
            if mv <= 1 - eps or lam_of(k, Lift(n, a)) >= eps2:
                raise OracleFailureError(f"oracle failed for block {n}, index {k}")
            parts.append(a)
        return inter(*parts)

    def F_upto(n):
        return union(*[Lift(b, traces[b]) for b in range(n + 1)])

    # k_0: least index with lambda(A_0) < delta/2
    n = 0
    k = next((k for k in range(len(stream)) if lam_of(k, F_upto(0)) < delta / 2), None)
    if k is None:
        raise ExhaustedStreamError("no stream entry gives block 0 mass below delta/2")
    ks.append(k)
    while True:
        n += 1
        traces[n] = ask(n, ks)
        nxt = next(
            (k for k in range(ks[-1] + 1, len(stream)) if lam_of(k, F_upto(n)) < delta / 2), None
        )
        if nxt is None:
            break
        ks.append(nxt)
    R = n  # blocks 0..R-1 carry a selected index; block R was built for all of them
    M = max([R + 1, *(support_block_bound(stream[k]) for k in ks)])
    for b in range(R + 1, M):
        traces[b] = ask(b, ks)
    F2 = Stack(FULL, M, {b: traces[b] for b in range(M)})

    claims: list[Claim] = [_claim(measures, "mu", "limit", compl(F2), "=", 0, label="member limit")]
    for b in range(M + 1):
        claims.append(_claim(measures, "mu", "block", F2, ">", 1 - Fraction(1, b + 1), b, f"member {b}"))
    for j, k in enumerate(ks):
        mid = f"lambda{k}"
        claims.append(_claim(measures, mid, "value", inter(F2, covered(j)), "<", delta / 2, label=f"head {j}"))
        for l in range(j + 1, M):
            claims.append(_claim(measures, mid, "value", inter(F2, Block(l)), "<",
                                 delta / (1 << (l + 1)), label=f"block {j} {l}"))
        claims.append(_claim(measures, mid, "value", diff(F2, covered(M - 1)), "=", 0, label=f"beyond {j}"))
        claims.append(_claim(measures, mid, "value", F2, "<=", delta, label=f"final {j}"))
    return Certificate("F-membership", "claim4", F2, delta, measures, claims,
                       {"k": ks, "blocks": list(range(M))}, truncation=len(stream),
                       notes={"selected": len(ks), "full_from_block": M})


# -- null unions ------------------------------------------------------------------------

def null_union(terms: Sequence[SetTerm], target: LevelMeasure) -> Certificate:
    """A null set containing each input minus finitely many blocks."""
    measures = {"mu": target}
    for i, A in enumerate(terms):
        v = target.eval(A)
        if v is None:
            raise DecayUnresolvableError(f"measure of input {i} is not determined")
        if v != 0:
            raise NonNullInputError(f"input {i} has measure {v}")
    claims: list[Claim] = []
    ns: list[int] = []
    for i in range(len(terms)):
        bound = Fraction(1, i + 1)
        n_i, T = _least_start(target, list(terms[: i + 1]), bound, ns[-1] + 1 if ns else 0)
        ns.append(n_i)
        for n in range(n_i, max(T, n_i)):
            claims.append(_claim(measures, "mu", "block", list(terms[: i + 1]), "<", bound, n, f"schedule {i}"))
        claims.append(_claim(measures, "mu", "tail", list(terms[: i + 1]), "<", bound, max(T, n_i),
                             f"schedule tail {i}"))
    lv = target.level
    A = union(*[diff(t, union(*[block_set(lv, b) for b in range(n)])) for t, n in zip(terms, ns)])
    claims.append(_claim(measures, "mu", "value", A, "=", 0, label="witness null"))
    return Certificate("null-union", "null_union", A, None, measures, claims,
                       {"n": ns, "A": list(terms)}, truncation=len(terms))


def certificate_from_json(d: Any) -> Certificate:
    return Certificate.from_json(d)
