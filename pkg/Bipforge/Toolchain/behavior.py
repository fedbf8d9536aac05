"""
Behavioral checks of component types.

Every LTS must have exactly one initial state, connected transitions and
declared labels. Unreachable states and nondeterministic ports are
reported as warnings.
"""

import logging
from collections import deque
from typing import List

from Bipforge.Toolchain.models import (
    ComponentType,
    Diagnostic,
    Model,
    Severity,
    TransitionKind,
)

logger = logging.getLogger(__name__)

MESSAGES = {
    'NO_INITIAL': "Component type [{component}] does not have an initial state. Please define an initial state.",
    'MULTIPLE_INITIAL': "Component type [{component}] has more than one initial state. Please keep exactly one initial state.",
    'UNDECLARED_INITIAL': "Initial state [{state}] of component type [{component}] is not declared. Please declare it or pick another initial state.",
    'DANGLING_DEST': "Transition [{label}] with no destination encountered. Please connect or remove it.",
    'DANGLING_SRC': "Transition [{label}] with no source encountered. Please connect or remove it.",
    'UNDECLARED_LABEL': "Transition [{label}] is labeled with an undeclared {what}. Please declare it or relabel the transition.",
    'UNREACHABLE_STATE': "State [{state}] of component type [{component}] is not reachable from the initial state. Please connect or remove it.",
    'NONDET_PORT': "Port [{label}] of component type [{component}] labels more than one transition leaving state [{state}]. Please keep one of them.",
}


def _diagnostic(severity, code, span, node, **values) -> Diagnostic:
    return Diagnostic(severity, code, MESSAGES[code].format(**values), span, node)


def _check_component(ct: ComponentType) -> List[Diagnostic]:
    diagnostics = []
    lts = ct.lts
    node = f"component {ct.name}"
    states = set(lts.states)

    if not lts.initial:
        diagnostics.append(_diagnostic(Severity.ERROR, 'NO_INITIAL', ct.span, node, component=ct.name))
    elif len(lts.initial) > 1:
        diagnostics.append(_diagnostic(Severity.ERROR, 'MULTIPLE_INITIAL', ct.span, node, component=ct.name))
    for state in lts.initial:
        if state not in states:
            diagnostics.append(_diagnostic(
                Severity.ERROR, 'UNDECLARED_INITIAL', ct.span, f"{node}/initial {state}",
                state=state, component=ct.name,
            ))

    for t in lts.transitions:
        tnode = f"{node}/transition {t.source}->{t.destination} [{t.display_label}]"
        span = t.span or ct.span
        if t.destination not in states:
            diagnostics.append(_diagnostic(Severity.ERROR, 'DANGLING_DEST', span, tnode, label=t.display_label))
        if t.source not in states:
            diagnostics.append(_diagnostic(Severity.ERROR, 'DANGLING_SRC', span, tnode, label=t.display_label))
        if t.kind is TransitionKind.ENFORCEABLE and t.label not in ct.ports:
            diagnostics.append(_diagnostic(Severity.ERROR, 'UNDECLARED_LABEL', span, tnode,
                                           label=t.display_label, what='port'))
        elif t.kind is TransitionKind.SPONTANEOUS and t.label not in ct.events:
            diagnostics.append(_diagnostic(Severity.ERROR, 'UNDECLARED_LABEL', span, tnode,
                                           label=t.display_label, what='event'))

    seen = set()
    for t in lts.transitions:
        if t.kind is not TransitionKind.ENFORCEABLE:
            continue
        key = (t.source, t.label)
        if key in seen:
            diagnostics.append(_diagnostic(
                Severity.WARNING, 'NONDET_PORT', t.span or ct.span, f"{node}/state {t.source}",
                label=t.label, component=ct.name, state=t.source,
            ))
        seen.add(key)

    initial = lts.initial_state
    if initial is not None:
        reached = {initial}
        queue = deque([initial])
        while queue:
            state = queue.popleft()
            for t in lts.outgoing(state):
                if t.destination in states and t.destination not in reached:
                    reached.add(t.destination)
                    queue.append(t.destination)
        for state in lts.states:
            if state not in reached:
                diagnostics.append(_diagnostic(
                    Severity.WARNING, 'UNREACHABLE_STATE', lts.state_spans.get(state, ct.span),
                    f"{node}/state {state}", state=state, component=ct.name,
                ))
                reached.add(state)

    return diagnostics


def check_behavior(model: Model) -> List[Diagnostic]:
    """
    Diagnostics for every component type, in declaration order and then
    transition order.
    """
    diagnostics = []
    for ct in model.component_types:
        diagnostics.extend(_check_component(ct))
    logger.info("Behavior check of %s: %d diagnostic(s)", model.file, len(diagnostics))
    return diagnostics
