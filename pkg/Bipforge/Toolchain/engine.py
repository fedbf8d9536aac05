"""
Execution engine.

Each cycle delivers the scheduled spontaneous events, collects the ports
enabled in the current states, picks one executable glue interaction,
fires the transitions of the involved ports and then lets internal
transitions settle. Runs are deterministic for a fixed seed.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from Bipforge.Toolchain.behavior import check_behavior
from Bipforge.Toolchain.diagrams import expand_unique
from Bipforge.Toolchain.dsl import EventSchedule, ScheduledEvent, serialize_model
from Bipforge.Toolchain.errors import BehaviorInvalid, InternalLivelock, MissingCardinality, UnknownEvent
from Bipforge.Toolchain.interactions import interactions_of_configuration
from Bipforge.Toolchain.macros import encode_macros, interactions_from_macros
from Bipforge.Toolchain.models import (
    Interaction,
    InteractionSet,
    Model,
    PortInstance,
    TransitionKind,
    has_errors,
    instance_name,
    sorted_interactions,
)
from Bipforge.Toolchain.utils import Xoshiro256

logger = logging.getLogger(__name__)

POLICIES = ('uniform', 'first')
GLUE_SOURCES = ('diagram', 'macros')

Instance = Tuple[str, int]


@dataclass
class SystemState:
    model: Model
    states: Dict[Instance, str]
    cycle: int = 0
    pending: List[ScheduledEvent] = field(default_factory=list)

    def component(self, instance: Instance):
        return self.model.diagram.component(instance[0])


@dataclass(frozen=True)
class SpontaneousFiring:
    instance: Instance
    event: str
    source: str
    destination: str


@dataclass(frozen=True)
class PortFiring:
    port: PortInstance
    source: str
    destination: str


@dataclass(frozen=True)
class InternalStep:
    instance: Instance
    source: str
    destination: str


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    enabled: Tuple[PortInstance, ...]
    spontaneous: Tuple[SpontaneousFiring, ...]
    interaction: Optional[Interaction]
    fired: Tuple[PortFiring, ...]
    internal: Tuple[InternalStep, ...]
    states: Dict[Instance, str]
    # kept out of the trace document
    dropped: Tuple[ScheduledEvent, ...] = ()

    @property
    def progressed(self) -> bool:
        return bool(self.interaction or self.spontaneous or self.internal)

    def as_dict(self) -> dict:
        return {
            'cycle': self.cycle,
            'enabled': [str(p) for p in self.enabled],
            'spontaneous': [
                {'instance': instance_name(s.instance), 'event': s.event,
                 'source': s.source, 'destination': s.destination}
                for s in self.spontaneous
            ],
            'interaction': sorted(str(p) for p in self.interaction) if self.interaction is not None else None,
            'fired': [
                {'port': str(f.port), 'source': f.source, 'destination': f.destination}
                for f in self.fired
            ],
            'internal': [
                {'instance': instance_name(i.instance), 'source': i.source, 'destination': i.destination}
                for i in self.internal
            ],
            'states': {instance_name(inst): state for inst, state in sorted(self.states.items())},
        }


@dataclass
class Trace:
    header: dict
    records: List[CycleRecord]
    terminal: str

    def as_dict(self) -> dict:
        return {
            'header': self.header,
            'records': [record.as_dict() for record in self.records],
            'terminal': self.terminal,
        }


def model_hash(model: Model) -> str:
    return hashlib.sha256(serialize_model(model).encode('utf-8')).hexdigest()


# ============================================================================
# ENGINE CYCLE
# ============================================================================

def init_system(model: Model, cards: Mapping[str, int]) -> SystemState:
    """Every component instance at its initial state, cycle 0"""
    diagnostics = check_behavior(model)
    if has_errors(diagnostics):
        raise BehaviorInvalid([d for d in diagnostics if d.is_error])
    missing = [ct.name for ct in model.component_types if ct.name not in cards]
    if missing:
        raise MissingCardinality(f"no cardinality given for {', '.join(missing)}")

    states = {}
    for ct in model.component_types:
        for i in range(1, cards[ct.name] + 1):
            states[(ct.name, i)] = ct.lts.initial_state
    logger.info("Initialized %d component instance(s)", len(states))
    return SystemState(model=model, states=states)


def _check_schedule(model: Model, cards: Mapping[str, int], schedule: EventSchedule):
    for event in schedule:
        ct = model.diagram.component(event.component_type)
        where = f"{event.span}: " if event.span is not None else ""
        if ct is None or event.index > cards.get(ct.name, 0):
            raise UnknownEvent(f"{where}no component instance {event.component_type}[{event.index}]")
        if event.event not in ct.events:
            raise UnknownEvent(f"{where}component type {ct.name} declares no event {event.event!r}")


def _first_transition(state: SystemState, instance: Instance, kind: TransitionKind, label: Optional[str]):
    lts = state.component(instance).lts
    for t in lts.outgoing(state.states[instance], kind):
        if t.label == label:
            return t
    return None


def enabled_ports(state: SystemState) -> List[PortInstance]:
    """Ports labeling an enforceable transition out of the current states"""
    enabled = set()
    for instance, current in state.states.items():
        for t in state.component(instance).lts.outgoing(current, TransitionKind.ENFORCEABLE):
            enabled.add(PortInstance(instance[0], instance[1], t.label))
    return sorted(enabled)


def executable_interactions(glue: InteractionSet, enabled: List[PortInstance]) -> List[Interaction]:
    """
    Glue interactions whose ports are all enabled. An interaction holding two
    ports of one component instance is never executable.
    """
    enabled = set(enabled)
    return sorted_interactions(
        a for a in glue
        if a <= enabled and len({p.instance for p in a}) == len(a)
    )


def _settle(state: SystemState) -> List[InternalStep]:
    steps = []
    for instance in sorted(state.states):
        bound = len(set(state.component(instance).lts.states))
        taken = 0
        while True:
            t = _first_transition(state, instance, TransitionKind.INTERNAL, None)
            if t is None:
                break
            if taken >= bound:
                raise InternalLivelock(
                    f"{instance_name(instance)} keeps taking internal transitions after {bound} step(s)"
                )
            steps.append(InternalStep(instance, t.source, t.destination))
            state.states[instance] = t.destination
            taken += 1
    return steps


def step(state: SystemState, glue: InteractionSet, policy: str, rng: Xoshiro256,
         schedule: Optional[EventSchedule] = None) -> CycleRecord:
    if policy not in POLICIES:
        raise ValueError(f"unknown selection policy {policy!r}; use one of {', '.join(POLICIES)}")
    cycle = state.cycle
    schedule = schedule or EventSchedule()
    state.pending.extend(schedule.due(cycle))

    spontaneous = []
    dropped = []
    for event in state.pending:
        t = _first_transition(state, event.instance, TransitionKind.SPONTANEOUS, event.event)
        if t is None:
            logger.warning("Cycle %d: dropped event %s of %s[%d], no matching transition from %s",
                           cycle, event.event, event.component_type, event.index, state.states[event.instance])
            dropped.append(event)
            continue
        spontaneous.append(SpontaneousFiring(event.instance, event.event, t.source, t.destination))
        state.states[event.instance] = t.destination
    state.pending.clear()

    enabled = enabled_ports(state)
    executable = executable_interactions(glue, enabled)
    chosen = None
    if executable:
        index = 0 if policy == 'first' else rng.below(len(executable))
        chosen = executable[index]
        logger.debug("Cycle %d: %d executable interaction(s), picked %s", cycle, len(executable),
                     ' '.join(str(p) for p in sorted(chosen)))

    fired = []
    if chosen is not None:
        for port in sorted(chosen):
            t = _first_transition(state, port.instance, TransitionKind.ENFORCEABLE, port.port)
            fired.append(PortFiring(port, t.source, t.destination))
            state.states[port.instance] = t.destination

    internal = _settle(state)
    state.cycle += 1
    return CycleRecord(
        cycle=cycle,
        enabled=tuple(enabled),
        spontaneous=tuple(spontaneous),
        interaction=chosen,
        fired=tuple(fired),
        internal=tuple(internal),
        states=dict(state.states),
        dropped=tuple(dropped),
    )


def glue_interactions(model: Model, cards: Mapping[str, int], glue: str = 'diagram',
                      mode: str = 'motif', bound: Optional[int] = None) -> InteractionSet:
    """Interactions the engine may execute, from the expanded diagram or from its macros"""
    if glue == 'diagram':
        if not model.motifs:
            return frozenset()
        return interactions_of_configuration(expand_unique(model.diagram, cards))
    if glue == 'macros':
        return interactions_from_macros(encode_macros(model.diagram), cards, mode, bound)
    raise ValueError(f"unknown glue source {glue!r}; use one of {', '.join(GLUE_SOURCES)}")


def run(model: Model, cards: Mapping[str, int], seed: int = 0, max_cycles: int = 100,
        schedule: Optional[EventSchedule] = None, policy: str = 'uniform',
        glue: str = 'diagram', mode: str = 'motif') -> Trace:
    """
    Run cycles until `max_cycles` or until nothing can happen any more: no
    executable interaction, no event fired and none scheduled later.

    Args:
        model: Parsed model without behavioral errors
        cards: Number of instances per component type
        seed: Seed of the xoshiro256** generator used by the `uniform` policy
        max_cycles: Upper bound on the number of cycles
        schedule: Spontaneous events to deliver, by cycle
        policy: 'uniform' or 'first'
        glue: 'diagram' for the expanded configuration, 'macros' for the Require/Accept encoding
        mode: Macro evaluation mode when `glue` is 'macros'

    Returns:
        Trace with one record per cycle and the terminal reason
        ('completed', 'deadlock' or 'eventExhausted')
    """
    schedule = schedule or EventSchedule()
    state = init_system(model, cards)
    _check_schedule(model, cards, schedule)
    interactions = glue_interactions(model, cards, glue, mode)
    rng = Xoshiro256(seed)

    header = {
        'model': model_hash(model),
        'cards': dict(sorted(cards.items())),
        'seed': seed,
        'policy': policy,
        'glue': glue,
    }
    records = []
    terminal = 'completed'
    while state.cycle < max_cycles:
        record = step(state, interactions, policy, rng, schedule)
        records.append(record)
        if not record.progressed and not schedule.pending_after(record.cycle):
            terminal = 'eventExhausted' if len(schedule) else 'deadlock'
            break
    logger.info("Run finished after %d cycle(s): %s", len(records), terminal)
    return Trace(header, records, terminal)


def trace_to_json(trace: Trace) -> str:
    return json.dumps(trace.as_dict(), indent=2, ensure_ascii=False) + '\n'
