"""Phase table of the abduction / deduction / induction cycle."""

from __future__ import annotations

from enum import Enum

from .errors import IllegalTransition


class Phase(Enum):
    IDLE = "idle"
    ABDUCTION = "abduction"
    DEDUCTION = "deduction"
    INDUCTION = "induction"
    RATIFIED = "ratified"
    OPERATION = "operation"

    @property
    def terminal(self) -> bool:
        return self is Phase.OPERATION


class Event(Enum):
    START = "start"
    HYPOTHESIZE = "hypothesize"
    VERIFY = "verify"
    VALIDATE = "validate"
    RATIFY = "ratify"
    RESET = "reset"
    DEPLOY = "deploy"


TRANSITIONS: dict[tuple[Phase, Event], Phase] = {
    (Phase.IDLE, Event.START): Phase.ABDUCTION,
    (Phase.ABDUCTION, Event.HYPOTHESIZE): Phase.DEDUCTION,
    (Phase.DEDUCTION, Event.VERIFY): Phase.INDUCTION,
    (Phase.INDUCTION, Event.VALIDATE): Phase.RATIFIED,
    # ratification is how a claim normally leaves induction; validate is the
    # cycle-level alias for the same step
    (Phase.INDUCTION, Event.RATIFY): Phase.RATIFIED,
    (Phase.RATIFIED, Event.DEPLOY): Phase.OPERATION,
}
for _p in Phase:
    if not _p.terminal:
        TRANSITIONS[(_p, Event.RESET)] = Phase.IDLE
del _p


def transition(current: Phase | str, event: Event | str) -> Phase:
    try:
        current = Phase(current)
        event = Event(event)
    except ValueError:
        raise IllegalTransition(current, event) from None
    try:
        return TRANSITIONS[(current, event)]
    except KeyError:
        raise IllegalTransition(current, event) from None


def run_events(current: Phase, *events: Event) -> Phase:
    for ev in events:
        current = transition(current, ev)
    return current
