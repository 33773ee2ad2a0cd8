"""A small property engine built around a recorded choice sequence.

Generators never touch an RNG directly; they ask a :class:`Tape` for
bounded integers. A fresh tape records choices from a seeded RNG; a replay
tape feeds back a fixed sequence (zeros past its end). Shrinking works on
that sequence alone, so every generator gets shrinking for free: deleting
choices drops list elements, lowering a choice lowers the value it decodes
to.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Any, Callable

MAX_SHRINK_CALLS = 2000


class Rejected(Exception):
    """Raised by a generator or check to discard an input that does not apply."""


class Tape:
    def __init__(self, rng: random.Random | None = None, prefix: list[int] | None = None, limit: int = 20000):
        self.rng = rng
        self.prefix = prefix
        self.choices: list[int] = []
        self.limit = limit

    def draw(self, n: int) -> int:
        """An integer in ``[0, n)``."""
        if n <= 1:
            return 0
        if len(self.choices) >= self.limit:
            raise Rejected("choice budget exhausted")
        if self.prefix is None:
            v = self.rng.randrange(n)
        elif len(self.choices) < len(self.prefix):
            v = min(self.prefix[len(self.choices)], n - 1)
        else:
            v = 0
        self.choices.append(v)
        return v

    def boolean(self, p_true: float = 0.5) -> bool:
        # 0 decodes to False so shrinking prefers False
        return self.draw(1000) >= 1000 - int(p_true * 1000)

    def integer(self, lo: int, hi: int) -> int:
        return lo + self.draw(hi - lo + 1)

    def choice(self, options):
        options = list(options)
        return options[self.draw(len(options))]

    def many(self, element: Callable[[Tape], Any], min_size: int = 0, max_size: int = 8, p_more: float = 0.7) -> list:
        out = []
        while len(out) < max_size:
            if len(out) >= min_size and not self.boolean(p_more):
                break
            out.append(element(self))
        return out

    def shuffled(self, items) -> list:
        items = list(items)
        for i in range(len(items) - 1, 0, -1):
            j = self.draw(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


@dataclass
class Context:
    """What a property may vary on besides its drawn input."""

    op: Any = None
    cfg: Any = None


@dataclass
class Property:
    name: str
    category: str
    generate: Callable[[Tape], Any]
    check: Callable[[Any, Context], None]
    cost: int = 1  # scale-down factor for expensive properties
    doc: str = ""

    def cases_for(self, requested: int, scaled: bool = True) -> int:
        return max(1, requested // self.cost) if scaled else requested


@dataclass
class PropertyResult:
    name: str
    category: str
    cases_run: int
    rejected: int
    passed: bool
    counterexample: str | None = None
    error: str | None = None
    choices: list[int] | None = None
    seconds: float = 0.0

    def to_json(self) -> dict:
        out = {"name": self.name, "cases_run": self.cases_run, "passed": self.passed}
        if not self.passed:
            out["counterexample"] = self.counterexample
            out["error"] = self.error
        return out


def _outcome(prop: Property, ctx: Context, tape: Tape):
    """(status, value, exception) where status is ok / rejected / failed."""
    try:
        value = prop.generate(tape)
    except Rejected:
        return "rejected", None, None
    try:
        prop.check(value, ctx)
    except Rejected:
        return "rejected", value, None
    except Exception as exc:  # any escape is a failure, crashes included
        return "failed", value, exc
    return "ok", value, None


def _sort_key(choices: list[int]):
    return (len(choices), choices)


def shrink(prop: Property, ctx: Context, choices: list[int], exc_type: type) -> list[int]:
    """Reduce a failing choice sequence until no single move keeps it failing."""
    best = list(choices)
    calls = 0

    def still_fails(candidate: list[int]) -> list[int] | None:
        nonlocal calls
        calls += 1
        tape = Tape(prefix=candidate)
        status, _, exc = _outcome(prop, ctx, tape)
        if status == "failed" and type(exc) is exc_type:
            return tape.choices
        return None

    improved = True
    while improved and calls < MAX_SHRINK_CALLS:
        improved = False
        # delete blocks, larger first
        for size in (8, 4, 3, 2, 1):
            i = len(best) - size
            while i >= 0 and calls < MAX_SHRINK_CALLS:
                cand = best[:i] + best[i + size :]
                got = still_fails(cand)
                if got is not None and _sort_key(got) < _sort_key(best):
                    best = got
                    improved = True
                i -= 1
        # lower individual choices
        for i in range(len(best)):
            if calls >= MAX_SHRINK_CALLS:
                break
            if i >= len(best) or best[i] == 0:
                continue
            cand = best[:i] + [0] + best[i + 1 :]
            got = still_fails(cand)
            if got is not None and _sort_key(got) < _sort_key(best):
                best = got
                improved = True
                continue
            lo, hi = 0, best[i]  # lo passes, hi fails
            while hi - lo > 1 and calls < MAX_SHRINK_CALLS:
                mid = (lo + hi) // 2
                cand = best[:i] + [mid] + best[i + 1 :]
                got = still_fails(cand)
                if got is not None and _sort_key(got) < _sort_key(best):
                    best = got
                    hi = mid
                    improved = True
                    if i >= len(best) or best[i] != mid:
                        break
                else:
                    lo = mid
    return best


def run_property(
    prop: Property,
    cases: int,
    seed: int,
    ctx: Context | None = None,
    scaled: bool = True,
    max_reject_ratio: int = 10,
) -> PropertyResult:
    """Run ``prop`` on fresh inputs until ``cases`` pass or one fails."""
    ctx = ctx or Context()
    rng = random.Random(f"{seed}:{prop.name}")
    target = prop.cases_for(cases, scaled)
    start = time.perf_counter()
    ran = rejected = 0
    while ran < target:
        tape = Tape(rng=rng)
        status, value, exc = _outcome(prop, ctx, tape)
        if status == "rejected":
            rejected += 1
            if rejected > max_reject_ratio * target + 100:
                break
            continue
        ran += 1
        if status == "failed":
            small = shrink(prop, ctx, tape.choices, type(exc))
            replay = Tape(prefix=small)
            _, value, exc = _outcome(prop, ctx, replay)
            return PropertyResult(
                prop.name,
                prop.category,
                ran,
                rejected,
                False,
                counterexample=repr(value),
                error=f"{type(exc).__name__}: {exc}",
                choices=replay.choices,
                seconds=time.perf_counter() - start,
            )
    return PropertyResult(prop.name, prop.category, ran, rejected, True, seconds=time.perf_counter() - start)


@dataclass
class Registry:
    properties: dict[str, Property] = field(default_factory=dict)

    def add(self, category: str, generate: Callable[[Tape], Any], cost: int = 1, name: str | None = None):
        """Decorator registering a check function as a property."""

        def wrap(check):
            pname = name or check.__name__
            if pname in self.properties:
                raise ValueError(f"duplicate property {pname}")
            self.properties[pname] = Property(pname, category, generate, check, cost, (check.__doc__ or "").strip())
            return check

        return wrap

    def in_category(self, category: str) -> list[Property]:
        return [p for p in self.properties.values() if p.category == category]


REGISTRY = Registry()
