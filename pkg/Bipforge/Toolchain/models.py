"""
Domain types shared by the whole toolchain.

Component types with their behavior, architecture diagrams, port instances,
connectors, interactions, propositional interaction formulas and the
Require/Accept macros. All values are immutable once constructed.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

from Bipforge.Toolchain.errors import MissingCardinality, ModelError

logger = logging.getLogger(__name__)


class Typing(str, Enum):
    SYNCHRON = 'sync'
    TRIGGER = 'trigger'


class TransitionKind(str, Enum):
    ENFORCEABLE = 'enforceable'
    SPONTANEOUS = 'spontaneous'
    INTERNAL = 'internal'


class Severity(str, Enum):
    ERROR = 'error'
    WARNING = 'warning'


@dataclass(frozen=True, order=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ModelError(f"span ends before it starts: {self!r}")

    def __str__(self):
        return f"{self.file}:{self.start_line}:{self.start_col}"


# ============================================================================
# COMPONENT TYPES AND BEHAVIOR
# ============================================================================

@dataclass(frozen=True, order=True)
class PortTypeRef:
    component_type: str
    port: str

    def __post_init__(self):
        if not self.component_type or not self.port:
            raise ModelError("port type references need a component type and a port name")

    def __str__(self):
        return f"{self.component_type}.{self.port}"


@dataclass(frozen=True)
class Transition:
    source: str
    destination: str
    kind: TransitionKind
    label: Optional[str] = None
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind is TransitionKind.INTERNAL and self.label is not None:
            raise ModelError(f"internal transition {self.source} -> {self.destination} cannot carry a label")
        if self.kind is not TransitionKind.INTERNAL and not self.label:
            raise ModelError(f"{self.kind.value} transition {self.source} -> {self.destination} needs a label")

    @property
    def display_label(self) -> str:
        return self.label if self.label is not None else 'internal'


@dataclass(frozen=True)
class Lts:
    """
    Labeled transition system of a component type.

    `initial` keeps every declared initial state so that the behavior check
    can report a missing or repeated declaration; a well-formed LTS has
    exactly one.
    """
    states: Tuple[str, ...]
    initial: Tuple[str, ...]
    transitions: Tuple[Transition, ...]
    state_spans: Mapping[str, SourceSpan] = field(default_factory=dict, compare=False)

    @property
    def initial_state(self) -> Optional[str]:
        if len(self.initial) == 1 and self.initial[0] in self.states:
            return self.initial[0]
        return None

    def outgoing(self, state: str, kind: Optional[TransitionKind] = None) -> List[Transition]:
        """Transitions leaving `state`, in declaration order"""
        return [
            t for t in self.transitions
            if t.source == state and (kind is None or t.kind is kind)
        ]


Cardinality = Union[int, str]


@dataclass(frozen=True)
class ComponentType:
    name: str
    ports: Tuple[str, ...]
    events: Tuple[str, ...]
    lts: Lts
    cardinality: Cardinality
    span: Optional[SourceSpan] = field(default=None, compare=False)
    port_spans: Mapping[str, SourceSpan] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.name:
            raise ModelError("component types need a name")
        if isinstance(self.cardinality, bool) or not isinstance(self.cardinality, (int, str)):
            raise ModelError(f"component type [{self.name}] has an invalid cardinality {self.cardinality!r}")
        if isinstance(self.cardinality, int) and self.cardinality < 1:
            raise ModelError(f"component type [{self.name}] must have cardinality >= 1")
        if isinstance(self.cardinality, str) and not self.cardinality:
            raise ModelError(f"component type [{self.name}] has an empty cardinality parameter")

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.cardinality, str)

    def port_refs(self) -> List[PortTypeRef]:
        return [PortTypeRef(self.name, p) for p in self.ports]


# ============================================================================
# ARCHITECTURE DIAGRAMS
# ============================================================================

@dataclass(frozen=True)
class MotifEnd:
    port: PortTypeRef
    multiplicity: int
    degree: int
    typing: Typing
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ModelError(f"end {self.port} needs multiplicity >= 1, got {self.multiplicity}")
        if self.degree < 0:
            raise ModelError(f"end {self.port} needs degree >= 0, got {self.degree}")

    @property
    def is_trigger(self) -> bool:
        return self.typing is Typing.TRIGGER


@dataclass(frozen=True)
class ConnectorMotif:
    id: str
    ends: Tuple[MotifEnd, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.id:
            raise ModelError("connector motifs need an id")
        if not self.ends:
            raise ModelError(f"connector motif [{self.id}] has no ends")

    def end_for(self, ref: PortTypeRef) -> Optional[MotifEnd]:
        for end in self.ends:
            if end.port == ref:
                return end
        return None

    @property
    def port_types(self) -> List[PortTypeRef]:
        return [end.port for end in self.ends]

    @property
    def has_trigger(self) -> bool:
        return any(end.is_trigger for end in self.ends)


@dataclass(frozen=True)
class Diagram:
    component_types: Tuple[ComponentType, ...]
    motifs: Tuple[ConnectorMotif, ...]

    def component(self, name: str) -> Optional[ComponentType]:
        for ct in self.component_types:
            if ct.name == name:
                return ct
        return None

    def port_types(self) -> List[PortTypeRef]:
        """Every declared port type, in declaration order"""
        return [ref for ct in self.component_types for ref in ct.port_refs()]

    def motifs_of(self, ref: PortTypeRef) -> List[ConnectorMotif]:
        return [motif for motif in self.motifs if motif.end_for(ref) is not None]


@dataclass(frozen=True)
class Model:
    """A parsed source document: component types plus one architecture diagram"""
    diagram: Diagram
    file: str = field(default='<memory>', compare=False)

    @property
    def component_types(self) -> Tuple[ComponentType, ...]:
        return self.diagram.component_types

    @property
    def motifs(self) -> Tuple[ConnectorMotif, ...]:
        return self.diagram.motifs


# ============================================================================
# INSTANCES, CONNECTORS AND INTERACTIONS
# ============================================================================

@dataclass(frozen=True, order=True)
class PortInstance:
    """Port of one component instance; ordered by (type, index, port)"""
    component_type: str
    index: int
    port: str

    def __post_init__(self):
        if self.index < 1:
            raise ModelError(f"instance indices start at 1, got {self.component_type}[{self.index}]")

    @property
    def instance(self) -> Tuple[str, int]:
        return (self.component_type, self.index)

    @property
    def port_type(self) -> PortTypeRef:
        return PortTypeRef(self.component_type, self.port)

    def __str__(self):
        return f"{self.component_type}[{self.index}].{self.port}"


def instance_name(instance: Tuple[str, int]) -> str:
    return f"{instance[0]}[{instance[1]}]"


@dataclass(frozen=True)
class ConnectorNode:
    """
    A connector tree. Leaves carry a port instance, inner nodes carry
    children; every node is typed trigger or synchron. `motif` records
    which connector motif generated the connector, if any.
    """
    typing: Typing
    port: Optional[PortInstance] = None
    children: Tuple['ConnectorNode', ...] = ()
    motif: Optional[str] = None

    def __post_init__(self):
        if (self.port is None) == (not self.children):
            raise ModelError("a connector node is either a port leaf or a non-empty group")
        if self.children:
            ports = [leaf.port for leaf in self.leaves()]
            if len(set(ports)) != len(ports):
                raise ModelError("a connector cannot contain the same port instance twice")

    @classmethod
    def leaf(cls, port: PortInstance, typing: Typing = Typing.SYNCHRON) -> 'ConnectorNode':
        return cls(typing=typing, port=port)

    @classmethod
    def group(cls, children: Iterable['ConnectorNode'], typing: Typing = Typing.SYNCHRON,
              motif: Optional[str] = None) -> 'ConnectorNode':
        return cls(typing=typing, children=tuple(children), motif=motif)

    @property
    def is_leaf(self) -> bool:
        return self.port is not None

    @property
    def is_trigger(self) -> bool:
        return self.typing is Typing.TRIGGER

    def leaves(self) -> List['ConnectorNode']:
        if self.is_leaf:
            return [self]
        return [leaf for child in self.children for leaf in child.leaves()]

    def ports(self) -> FrozenSet[PortInstance]:
        return frozenset(leaf.port for leaf in self.leaves())

    def sort_key(self):
        if self.is_leaf:
            return (0, self.port, self.typing.value)
        return (1, self.motif or '', tuple(child.sort_key() for child in self.children), self.typing.value)


# An interaction is a non-empty set of port instances; interaction sets are
# sets of interactions. Plain frozensets keep set algebra free.
Interaction = FrozenSet[PortInstance]
InteractionSet = FrozenSet[Interaction]


def make_interaction(ports: Iterable[PortInstance]) -> Interaction:
    interaction = frozenset(ports)
    if not interaction:
        raise ModelError("interactions are non-empty")
    return interaction


def interaction_key(interaction: Interaction) -> Tuple[PortInstance, ...]:
    return tuple(sorted(interaction))


def sorted_interactions(interactions: Iterable[Interaction]) -> List[Interaction]:
    return sorted(interactions, key=interaction_key)


def render_interaction(interaction: Interaction) -> str:
    return ' '.join(str(p) for p in sorted(interaction))


@dataclass(frozen=True)
class Configuration:
    """A non-empty collection of connectors, kept in canonical order"""
    connectors: Tuple[ConnectorNode, ...]

    def __post_init__(self):
        if not self.connectors:
            raise ModelError("a configuration is a non-empty set of connectors")

    @classmethod
    def of(cls, connectors: Iterable[ConnectorNode]) -> 'Configuration':
        return cls(tuple(sorted(connectors, key=lambda c: c.sort_key())))

    def __len__(self):
        return len(self.connectors)

    def __iter__(self):
        return iter(self.connectors)


@dataclass(frozen=True)
class Architecture:
    components: Tuple[Tuple[str, int], ...]
    configuration: Configuration


# ============================================================================
# PROPOSITIONAL INTERACTION LOGIC
# ============================================================================

class PilFormula:
    """Base class of formulas over port-instance atoms"""

    def evaluate(self, interaction: Interaction) -> bool:
        raise NotImplementedError

    def atoms(self) -> FrozenSet[PortInstance]:
        raise NotImplementedError

    def __str__(self):
        return _render_formula(self, 0)


@dataclass(frozen=True)
class Top(PilFormula):
    def evaluate(self, interaction):
        return True

    def atoms(self):
        return frozenset()


@dataclass(frozen=True)
class Atom(PilFormula):
    port: PortInstance

    def evaluate(self, interaction):
        return self.port in interaction

    def atoms(self):
        return frozenset([self.port])


@dataclass(frozen=True)
class Not(PilFormula):
    operand: PilFormula

    def evaluate(self, interaction):
        return not self.operand.evaluate(interaction)

    def atoms(self):
        return self.operand.atoms()


@dataclass(frozen=True)
class Or(PilFormula):
    left: PilFormula
    right: PilFormula

    def evaluate(self, interaction):
        return self.left.evaluate(interaction) or self.right.evaluate(interaction)

    def atoms(self):
        return self.left.atoms() | self.right.atoms()


def conj(left: PilFormula, right: PilFormula) -> PilFormula:
    """Conjunction, derived through De Morgan"""
    return Not(Or(Not(left), Not(right)))


def as_conjunction(formula: PilFormula) -> Optional[Tuple[PilFormula, PilFormula]]:
    """Return the operands when `formula` has the derived conjunction shape"""
    if isinstance(formula, Not) and isinstance(formula.operand, Or):
        left, right = formula.operand.left, formula.operand.right
        if isinstance(left, Not) and isinstance(right, Not):
            return left.operand, right.operand
    return None


# precedence: 1 disjunction, 2 conjunction, 3 negation/atoms
def _render_formula(formula: PilFormula, context: int) -> str:
    pair = as_conjunction(formula)
    if pair is not None:
        text = f"{_render_formula(pair[0], 2)} & {_render_formula(pair[1], 2)}"
        return f"({text})" if context > 2 else text
    if isinstance(formula, Or):
        text = f"{_render_formula(formula.left, 1)} | {_render_formula(formula.right, 1)}"
        return f"({text})" if context > 1 else text
    if isinstance(formula, Not):
        return f"!{_render_formula(formula.operand, 3)}"
    if isinstance(formula, Atom):
        return str(formula.port)
    return 'true'


# ============================================================================
# REQUIRE / ACCEPT MACROS
# ============================================================================

class RequireMode(str, Enum):
    EXACT = 'exact'
    AT_LEAST = 'atLeast'


@dataclass(frozen=True)
class RequireOption:
    """
    One Require option of a port type. An option without counts is the dash:
    the port needs no partner. `motif` names the connector motif that
    produced the option.
    """
    motif: Optional[str]
    counts: Tuple[Tuple[PortTypeRef, int], ...] = ()
    mode: Optional[RequireMode] = None

    def __post_init__(self):
        if self.mode is None and self.counts:
            raise ModelError("dash options carry no counts")
        if self.mode is not None and not self.counts:
            raise ModelError("non-dash require options need at least one count")
        if any(count < 1 for _, count in self.counts):
            raise ModelError("require counts are positive")

    @classmethod
    def dash(cls, motif: Optional[str]) -> 'RequireOption':
        return cls(motif=motif)

    @classmethod
    def of(cls, motif: Optional[str], counts: Mapping[PortTypeRef, int], mode: RequireMode) -> 'RequireOption':
        return cls(motif=motif, counts=tuple(sorted(counts.items())), mode=mode)

    @property
    def is_dash(self) -> bool:
        return self.mode is None

    def count_map(self) -> Dict[PortTypeRef, int]:
        return dict(self.counts)


@dataclass(frozen=True)
class Accept:
    """
    Accept side of a port type: the port types allowed next to it, each with
    the largest number of its instances an interaction may hold. `none` is
    the dash: no partner accepted by some unary motif.
    """
    parts: Tuple[Tuple[PortTypeRef, int], ...] = ()
    none: bool = False

    def permits(self, ref: PortTypeRef) -> bool:
        return any(part == ref for part, _ in self.parts)

    def bound(self, ref: PortTypeRef) -> Optional[int]:
        for part, bound in self.parts:
            if part == ref:
                return bound
        return None

    @property
    def is_dash(self) -> bool:
        return self.none and not self.parts


@dataclass(frozen=True)
class Macros:
    require: Mapping[PortTypeRef, Tuple[RequireOption, ...]]
    accept: Mapping[PortTypeRef, Accept]

    def port_types(self) -> List[PortTypeRef]:
        return sorted(set(self.require) | set(self.accept))

    def motif_ids(self) -> List[str]:
        return sorted({
            option.motif for options in self.require.values()
            for option in options if option.motif is not None
        })


# ============================================================================
# DIAGNOSTICS AND ENCODABILITY REPORTS
# ============================================================================

@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: Optional[SourceSpan] = None
    node: str = ''

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def render(self) -> str:
        where = str(self.span) if self.span is not None else (self.node or '<model>')
        return f"{self.severity.value.upper()} {self.code} {where} {self.message}"

    def as_dict(self) -> dict:
        return {
            'severity': self.severity.value,
            'code': self.code,
            'message': self.message,
            'file': self.span.file if self.span else None,
            'line': self.span.start_line if self.span else None,
            'col': self.span.start_col if self.span else None,
            'node': self.node,
        }


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)


@dataclass(frozen=True)
class EndReport:
    motif: str
    port: PortTypeRef
    matching_factor: Fraction
    max_connectors: int
    cond1: bool
    cond2: bool

    @property
    def integral(self) -> bool:
        return self.matching_factor.denominator == 1

    @property
    def ok(self) -> bool:
        return self.cond1 and self.cond2 and self.integral


@dataclass(frozen=True)
class EncodabilityReport:
    ends: Tuple[EndReport, ...]
    verdict: bool
    diagnostics: Tuple[Diagnostic, ...] = ()

    @property
    def per_end(self) -> Dict[Tuple[str, PortTypeRef], EndReport]:
        return {(end.motif, end.port): end for end in self.ends}


# ============================================================================
# REFERENCE VALIDATION
# ============================================================================

def _duplicates(names: Iterable[str]) -> List[str]:
    counts = Counter(names)
    return [name for name, count in counts.items() if count > 1]


def validate_references(model: Model) -> List[Diagnostic]:
    """
    Check that every name resolves, that names are unique and that ports and
    events of a component type are disjoint. Degree-zero ends are warnings.
    """
    diagnostics: List[Diagnostic] = []
    diagram = model.diagram

    for name in _duplicates(ct.name for ct in diagram.component_types):
        spans = [ct.span for ct in diagram.component_types if ct.name == name]
        diagnostics.append(Diagnostic(
            Severity.ERROR, 'DUPLICATE_NAME',
            f"Component type [{name}] is declared more than once. Please rename or remove it.",
            spans[-1], f"component {name}",
        ))

    for ct in diagram.component_types:
        node = f"component {ct.name}"
        for port in _duplicates(ct.ports):
            diagnostics.append(Diagnostic(
                Severity.ERROR, 'DUPLICATE_NAME',
                f"Port [{port}] is declared more than once in component type [{ct.name}].",
                ct.port_spans.get(port, ct.span), f"{node}/port {port}",
            ))
        for event in _duplicates(ct.events):
            diagnostics.append(Diagnostic(
                Severity.ERROR, 'DUPLICATE_NAME',
                f"Event [{event}] is declared more than once in component type [{ct.name}].",
                ct.port_spans.get(event, ct.span), f"{node}/event {event}",
            ))
        for state in _duplicates(ct.lts.states):
            diagnostics.append(Diagnostic(
                Severity.ERROR, 'DUPLICATE_NAME',
                f"State [{state}] is declared more than once in component type [{ct.name}].",
                ct.lts.state_spans.get(state, ct.span), f"{node}/state {state}",
            ))
        for name in sorted(set(ct.ports) & set(ct.events)):
            diagnostics.append(Diagnostic(
                Severity.ERROR, 'PORT_EVENT_OVERLAP',
                f"Name [{name}] of component type [{ct.name}] is both a port and an event. Please rename one of them.",
                ct.port_spans.get(name, ct.span), f"{node}/port {name}",
            ))

    for motif_id in _duplicates(m.id for m in diagram.motifs):
        spans = [m.span for m in diagram.motifs if m.id == motif_id]
        diagnostics.append(Diagnostic(
            Severity.ERROR, 'DUPLICATE_NAME',
            f"Connector motif [{motif_id}] is declared more than once. Please rename or remove it.",
            spans[-1], f"diagram/motif {motif_id}",
        ))

    for motif in diagram.motifs:
        node = f"diagram/motif {motif.id}"
        seen = set()
        for end in motif.ends:
            ct = diagram.component(end.port.component_type)
            if ct is None or end.port.port not in ct.ports:
                diagnostics.append(Diagnostic(
                    Severity.ERROR, 'UNRESOLVED_REFERENCE',
                    f"Connector motif [{motif.id}] refers to undeclared port type [{end.port}]. Please declare it or remove the end.",
                    end.span or motif.span, f"{node}/{end.port}",
                ))
            if end.port in seen:
                diagnostics.append(Diagnostic(
                    Severity.ERROR, 'DUPLICATE_END',
                    f"Connector motif [{motif.id}] lists port type [{end.port}] more than once.",
                    end.span or motif.span, f"{node}/{end.port}",
                ))
            seen.add(end.port)
            if end.degree == 0:
                diagnostics.append(Diagnostic(
                    Severity.WARNING, 'ZERO_DEGREE',
                    f"End [{end.port}] of connector motif [{motif.id}] has degree 0; its instances take part in no connector.",
                    end.span or motif.span, f"{node}/{end.port}",
                ))

    logger.info("Reference check of %s: %d diagnostic(s)", model.file, len(diagnostics))
    return diagnostics


# ============================================================================
# CARDINALITIES
# ============================================================================

def resolve_cardinalities(model: Model,
                          cards: Optional[Mapping[str, int]] = None,
                          params: Optional[Mapping[str, int]] = None) -> Dict[str, int]:
    """
    Turn the model's (possibly symbolic) cardinalities into numbers.

    An explicit `cards` entry wins, then a literal cardinality, then a
    parameter named like the symbolic cardinality.
    """
    cards = dict(cards or {})
    params = dict(params or {})
    resolved: Dict[str, int] = {}
    missing = []
    for ct in model.component_types:
        if ct.name in cards:
            value = cards[ct.name]
        elif isinstance(ct.cardinality, int):
            value = ct.cardinality
        elif ct.cardinality in params:
            value = params[ct.cardinality]
        else:
            missing.append(f"{ct.name} (n={ct.cardinality})")
            continue
        if value < 1:
            raise MissingCardinality(f"cardinality of {ct.name} must be >= 1, got {value}")
        resolved[ct.name] = value
    if missing:
        raise MissingCardinality("no cardinality given for " + ', '.join(missing) + "; use --card TYPE=N")
    return resolved


def port_instances(ref: PortTypeRef, cards: Mapping[str, int]) -> List[PortInstance]:
    """All instances of a port type, in index order"""
    if ref.component_type not in cards:
        raise MissingCardinality(f"no cardinality given for {ref.component_type}")
    return [PortInstance(ref.component_type, i, ref.port) for i in range(1, cards[ref.component_type] + 1)]
