"""Aggregation operators and pointwise checks of the consistency invariants.

``GODEL_MIN`` is the operator the rest of the package uses. ``PRODUCT`` is
a relaxation for independent evidence. ``MEAN`` and ``MAX`` exist as
negative controls: the harness needs operators that demonstrably break
the weakest-link bound.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

from .core import Score, make_score
from .errors import EmptyMultiset

# float slack for operators that round (product, mean)
ROUNDING_SLACK = 1e-12


class OperatorKind(Enum):
    GODEL_MIN = "min"
    PRODUCT = "product"
    MEAN = "mean"
    MAX = "max"

    @property
    def exact(self) -> bool:
        """True when the result is always one of the inputs, bit for bit."""
        return self in (OperatorKind.GODEL_MIN, OperatorKind.MAX)

    @property
    def slack(self) -> float:
        return 0.0 if self.exact else ROUNDING_SLACK


def _product(scores: Sequence[float]) -> float:
    out = 1.0
    for s in scores:
        out *= s
    return out


def _mean(scores: Sequence[float]) -> float:
    # fsum keeps the mean inside [min, max] despite rounding
    m = math.fsum(scores) / len(scores)
    return min(max(m, min(scores)), max(scores))


_IMPL: dict[OperatorKind, Callable[[Sequence[float]], float]] = {
    OperatorKind.GODEL_MIN: min,
    OperatorKind.PRODUCT: _product,
    OperatorKind.MEAN: _mean,
    OperatorKind.MAX: max,
}


def aggregate(op: OperatorKind, scores: Iterable[Score]) -> Score:
    items = [make_score(s) for s in scores]
    if not items:
        raise EmptyMultiset(f"{op.value} needs at least one score")
    return _IMPL[op](items)


def parse_operator(token: str) -> OperatorKind:
    for op in OperatorKind:
        if token.lower() in (op.value, op.name.lower()):
            return op
    raise ValueError(f"unknown operator {token!r}")


# -- pointwise invariant checks ---------------------------------------------


def check_idem(op: OperatorKind, sample: Score) -> bool:
    """Singleton idempotence: a lone premise keeps its reliability."""
    return aggregate(op, [sample]) == sample


def check_comm(op: OperatorKind, a: Score, b: Score) -> bool:
    return abs(aggregate(op, [a, b]) - aggregate(op, [b, a])) <= op.slack


def check_wlnk(op: OperatorKind, scores: Sequence[Score]) -> bool:
    return aggregate(op, scores) <= min(scores) + op.slack


def check_mono(op: OperatorKind, a: Score, a_prime: Score, b: Score) -> bool:
    if a > a_prime:
        raise ValueError("check_mono requires a <= a_prime")
    return aggregate(op, [a, b]) <= aggregate(op, [a_prime, b]) + op.slack


def check_comm_multiset(op: OperatorKind, scores: Sequence[Score], permuted: Sequence[Score]) -> bool:
    return abs(aggregate(op, scores) - aggregate(op, permuted)) <= op.slack


def check_duplicate_insensitive(op: OperatorKind, scores: Sequence[Score], index: int) -> bool:
    """Repeating a premise that is already present must not move the result.

    This is the multiset reading of idempotence: three premises at 0.4
    should count as one premise at 0.4, not as corroboration. Mean fails
    whenever the repeated element differs from the current mean.
    """
    dup = list(scores) + [scores[index]]
    return abs(aggregate(op, scores) - aggregate(op, dup)) <= op.slack


def check_tnorm_idem(op: OperatorKind, x: Score) -> bool:
    """Binary idempotence op(x, x) == x, the property that singles out min among t-norms."""
    return abs(aggregate(op, [x, x]) - x) <= op.slack


# -- randomized compliance report ---------------------------------------------

INVARIANTS = ("IDEM", "COMM", "WLNK", "MONO", "IDEM_MULTISET", "TNORM_IDEM")


@dataclass
class InvariantResult:
    passed: bool = True
    cases_run: int = 0
    counterexample: dict | None = None

    def to_json(self) -> dict:
        out = {"pass": self.passed, "cases_run": self.cases_run}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


@dataclass
class ComplianceReport:
    operator: OperatorKind
    seed: int
    results: dict[str, InvariantResult] = field(default_factory=dict)

    def passed(self, invariant: str) -> bool:
        return self.results[invariant].passed

    def to_json(self) -> dict:
        return {
            "operator": self.operator.value,
            "seed": self.seed,
            "invariants": {name: r.to_json() for name, r in self.results.items()},
        }


_BOUNDARY = (0.0, 1.0, 0.5, 5e-324, 1.0 - 2**-53)


def _draw_score(rng: random.Random) -> float:
    if rng.random() < 0.05:
        return rng.choice(_BOUNDARY)
    return rng.random()


def _draw_multiset(rng: random.Random, max_len: int = 8) -> list[float]:
    return [_draw_score(rng) for _ in range(rng.randint(1, max_len))]


def quintet_report(op: OperatorKind, case_count: int, seed: int = 0) -> ComplianceReport:
    """Run every pointwise invariant ``case_count`` times on random inputs.

    Each invariant keeps running after a failure only up to the first
    counterexample; ``cases_run`` records how many inputs were examined.
    """
    if case_count < 1:
        raise ValueError("case_count must be >= 1")
    report = ComplianceReport(op, seed, {name: InvariantResult() for name in INVARIANTS})
    streams = {name: random.Random(f"{seed}:{op.value}:{name}") for name in INVARIANTS}

    def run(name, draw, check):
        res = report.results[name]
        rng = streams[name]
        for _ in range(case_count):
            args = draw(rng)
            res.cases_run += 1
            if not check(*args):
                res.passed = False
                res.counterexample = _describe(name, op, args)
                return

    run("IDEM", lambda r: (_draw_score(r),), lambda x: check_idem(op, x))

    def comm_args(r):
        s = _draw_multiset(r)
        p = s[:]
        r.shuffle(p)
        return s, p

    run("COMM", comm_args, lambda s, p: check_comm_multiset(op, s, p))
    run("WLNK", lambda r: (_draw_multiset(r),), lambda s: check_wlnk(op, s))

    def mono_args(r):
        a, a2, b = _draw_score(r), _draw_score(r), _draw_score(r)
        return (min(a, a2), max(a, a2), b)

    run("MONO", mono_args, lambda a, a2, b: check_mono(op, a, a2, b))

    def dup_args(r):
        s = _draw_multiset(r)
        return s, r.randrange(len(s))

    run("IDEM_MULTISET", dup_args, lambda s, i: check_duplicate_insensitive(op, s, i))
    run("TNORM_IDEM", lambda r: (_draw_score(r),), lambda x: check_tnorm_idem(op, x))
    return report


def _describe(name: str, op: OperatorKind, args: tuple) -> dict:
    if name in ("IDEM", "TNORM_IDEM"):
        (x,) = args
        inputs = [x] if name == "IDEM" else [x, x]
        return {"inputs": inputs, "result": aggregate(op, inputs), "expected": x}
    if name == "COMM":
        s, p = args
        return {"inputs": s, "permuted": p, "results": [aggregate(op, s), aggregate(op, p)]}
    if name == "WLNK":
        (s,) = args
        return {"inputs": s, "result": aggregate(op, s), "min": min(s)}
    if name == "MONO":
        a, a2, b = args
        return {"a": a, "a_prime": a2, "b": b, "results": [aggregate(op, [a, b]), aggregate(op, [a2, b])]}
    s, i = args
    return {"inputs": s, "repeated": s[i], "results": [aggregate(op, s), aggregate(op, list(s) + [s[i]])]}
