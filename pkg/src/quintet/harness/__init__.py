"""Executable property inventory, grouped into six categories.

``run_suite`` is deterministic for a given (category, cases, seed, op):
each property draws from its own RNG stream seeded by ``f"{seed}:{name}"``,
so properties can be run in any order or in parallel with the same result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import DEFAULT_CONFIG, SUITE_CATEGORIES, Config
from ..gamma import OperatorKind
from . import props_fsm, props_fuzz, props_graph, props_reff, props_scope  # noqa: F401  (registration)
from .engine import REGISTRY, Context, Property, PropertyResult, Tape, run_property, shrink
from .props_fuzz import fuzz_targets

NAMING_NOTE = (
    "property names are a reconstruction: only per-category counts are published, "
    "so each category is enumerated from the invariants it covers"
)

__all__ = [
    "CategoryReport",
    "Context",
    "Property",
    "PropertyResult",
    "REGISTRY",
    "SuiteReport",
    "Tape",
    "fuzz_targets",
    "properties",
    "run_property",
    "run_suite",
    "shrink",
]


@dataclass
class CategoryReport:
    name: str
    properties_defined: int
    cases_run: int
    failures: int
    first_counterexample: dict | None = None
    results: list[PropertyResult] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "properties_defined": self.properties_defined,
            "cases_run": self.cases_run,
            "failures": self.failures,
            "properties": [r.to_json() for r in self.results],
        }
        if self.first_counterexample is not None:
            out["first_counterexample"] = self.first_counterexample
        return out


@dataclass
class SuiteReport:
    seed: int
    cases: int | None
    operator: str
    categories: list[CategoryReport]

    @property
    def passed(self) -> bool:
        return all(c.failures == 0 for c in self.categories)

    @property
    def properties_defined(self) -> int:
        return sum(c.properties_defined for c in self.categories)

    def category(self, name: str) -> CategoryReport:
        for c in self.categories:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "header": {
                "naming": NAMING_NOTE,
                "seed": self.seed,
                "cases": self.cases,
                "operator": self.operator,
                "properties_defined": self.properties_defined,
                "passed": self.passed,
            },
            "categories": [c.to_json() for c in self.categories],
        }


def properties(category: str | None = None) -> list[Property]:
    if category is None:
        return list(REGISTRY.properties.values())
    return REGISTRY.in_category(category)


def run_suite(
    category: str = "all",
    cases: int | None = None,
    seed: int = 0,
    op: OperatorKind = OperatorKind.GODEL_MIN,
    cfg: Config = DEFAULT_CONFIG,
) -> SuiteReport:
    """Run one category (or ``"all"``).

    ``cases`` is the per-property case count; expensive properties divide it
    by their cost factor (the report records what actually ran). When
    omitted, each category takes its count from ``cfg``.
    """
    if category != "all" and category not in SUITE_CATEGORIES:
        raise ValueError(f"unknown category {category!r}; expected 'all' or one of {', '.join(SUITE_CATEGORIES)}")
    if cases is not None and cases < 1:
        raise ValueError("cases must be at least 1")
    wanted = SUITE_CATEGORIES if category == "all" else (category,)
    ctx = Context(op=op)
    reports = []
    for cat in wanted:
        n = cases if cases is not None else cfg.cases_for(cat)
        results = [run_property(p, n, seed, ctx) for p in REGISTRY.in_category(cat)]
        failed = [r for r in results if not r.passed]
        first = None
        if failed:
            f = failed[0]
            first = {"property": f.name, "input": f.counterexample, "error": f.error}
        reports.append(CategoryReport(cat, len(results), sum(r.cases_run for r in results), len(failed), first, results))
    return SuiteReport(seed, cases, op.value, reports)
