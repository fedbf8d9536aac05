"""
Textual model language.

Parses and prints component/diagram models, scenario files (scheduled
spontaneous events) and connector configurations, and loads the bundled
coordination patterns. Every named node produced by the parser carries a
SourceSpan so that diagnostics can point back into the source.
"""

import logging
from dataclasses import dataclass
from importlib import resources
from string import Template
from typing import Dict, List, Mapping, Optional, Tuple

import pyparsing as pp

from Bipforge.Toolchain.errors import MissingParameter, ModelError, ParseError, UnknownPattern
from Bipforge.Toolchain.models import (
    ComponentType,
    Configuration,
    ConnectorMotif,
    ConnectorNode,
    Diagram,
    Lts,
    Model,
    MotifEnd,
    PortInstance,
    PortTypeRef,
    SourceSpan,
    Transition,
    TransitionKind,
    Typing,
)

logger = logging.getLogger(__name__)

PATTERNS = ('star', 'mutex')


@dataclass(frozen=True)
class ScheduledEvent:
    cycle: int
    component_type: str
    index: int
    event: str
    span: Optional[SourceSpan] = None

    @property
    def instance(self) -> Tuple[str, int]:
        return (self.component_type, self.index)


@dataclass(frozen=True)
class EventSchedule:
    """Scheduled spontaneous events, sorted by cycle (stable within a cycle)"""
    events: Tuple[ScheduledEvent, ...] = ()

    def __post_init__(self):
        cycles = [e.cycle for e in self.events]
        if cycles != sorted(cycles):
            raise ModelError("event schedules are sorted by cycle")

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def due(self, cycle: int) -> List[ScheduledEvent]:
        return [e for e in self.events if e.cycle == cycle]

    def pending_after(self, cycle: int) -> bool:
        return any(e.cycle > cycle for e in self.events)


# ============================================================================
# GRAMMAR HELPERS
# ============================================================================

@dataclass(frozen=True)
class _Name:
    text: str
    span: SourceSpan


@dataclass(frozen=True)
class _Label:
    kind: TransitionKind
    name: Optional[_Name]


def _span(file: str, text: str, start: int, end: int) -> SourceSpan:
    return SourceSpan(file, pp.lineno(start, text), pp.col(start, text), pp.lineno(end, text), pp.col(end, text))


def _keyword(word: str) -> pp.Keyword:
    return pp.Keyword(word).set_name(f"'{word}'")


def _to_parse_error(exc: pp.ParseBaseException, file: str) -> ParseError:
    message = exc.msg[:1].lower() + exc.msg[1:] if exc.msg else 'syntax error'
    line, col = exc.lineno, exc.col
    return ParseError(message, SourceSpan(file, line, col, line, col))


class _Grammar:
    """Grammar elements bound to one source file name"""

    def __init__(self, file: str):
        self.file = file

        self.LBRACE, self.RBRACE, self.LPAR, self.RPAR = map(pp.Suppress, '{}()')
        self.LBRACK, self.RBRACK, self.COMMA, self.DOT = map(pp.Suppress, '[],.')
        self.EQ, self.COLON = pp.Suppress('='), pp.Suppress(':')
        self.ARROW = pp.Suppress(pp.Literal('->').set_name("'->'"))

        self.ident = pp.Word(pp.alphas + '_', pp.alphanums + '_').set_name('name')
        self.posint = pp.Regex(r'[1-9][0-9]*').set_name('positive integer')
        self.posint.set_parse_action(lambda t: int(t[0]))
        self.natint = pp.Regex(r'[0-9]+').set_name('integer')
        self.natint.set_parse_action(lambda t: int(t[0]))

        self.name = self.located(self.ident.copy(), lambda value, span: _Name(value[0], span))
        self.names = self.name + pp.ZeroOrMore(self.COMMA - self.name)

    def located(self, expr: pp.ParserElement, build) -> pp.ParserElement:
        """Wrap `expr` so that `build(tokens, span)` receives its source span"""
        def action(text, loc, toks):
            start, value, end = toks[0], toks[1], toks[2]
            return build(value, _span(self.file, text, start, end))
        return pp.Located(expr).set_parse_action(action)


# ============================================================================
# MODEL LANGUAGE
# ============================================================================

def _build_transition(value, span: SourceSpan) -> Transition:
    source, destination, label = value[0], value[1], value[2]
    return Transition(
        source=source.text,
        destination=destination.text,
        kind=label.kind,
        label=label.name.text if label.name is not None else None,
        span=span,
    )


def _build_component(value, span: SourceSpan) -> ComponentType:
    name, cardinality, ports, events, states, initial, transitions = value
    port_spans: Dict[str, SourceSpan] = {}
    for n in list(ports) + list(events):
        port_spans.setdefault(n.text, n.span)
    state_spans: Dict[str, SourceSpan] = {}
    for n in states:
        state_spans.setdefault(n.text, n.span)
    lts = Lts(
        states=tuple(n.text for n in states),
        initial=tuple(n.text for n in initial),
        transitions=tuple(transitions),
        state_spans=state_spans,
    )
    return ComponentType(
        name=name.text,
        ports=tuple(n.text for n in ports),
        events=tuple(n.text for n in events),
        lts=lts,
        cardinality=cardinality,
        span=span,
        port_spans=port_spans,
    )


def _build_end(value, span: SourceSpan) -> MotifEnd:
    component, port, multiplicity, degree, typing = value
    return MotifEnd(
        port=PortTypeRef(component.text, port.text),
        multiplicity=multiplicity,
        degree=degree,
        typing=Typing(typing),
        span=span,
    )


def _build_motif(value, span: SourceSpan) -> ConnectorMotif:
    name, ends = value[0], value[1]
    return ConnectorMotif(id=name.text, ends=tuple(ends), span=span)


def _model_grammar(file: str) -> pp.ParserElement:
    g = _Grammar(file)
    kw = _keyword

    label = (
        (kw('on') - g.name).set_parse_action(lambda t: _Label(TransitionKind.ENFORCEABLE, t[1]))
        | (kw('when') - g.name).set_parse_action(lambda t: _Label(TransitionKind.SPONTANEOUS, t[1]))
        | kw('internal').set_parse_action(lambda t: _Label(TransitionKind.INTERNAL, None))
    )
    transition = g.located(g.name + g.ARROW - g.name - label, _build_transition)

    cardinality = g.posint | g.ident.copy()
    component = g.located(
        kw('component').suppress() - g.name
        - g.LPAR - kw('n').suppress() - g.EQ - cardinality - g.RPAR
        - g.LBRACE
        - kw('ports').suppress() - pp.Group(g.names)
        - pp.Group(pp.Optional(kw('events').suppress() - g.names))
        - kw('states').suppress() - pp.Group(g.names)
        - pp.Group(pp.ZeroOrMore(kw('initial').suppress() - g.names))
        - pp.Group(pp.ZeroOrMore(transition))
        - g.RBRACE,
        _build_component,
    )

    end = g.located(
        g.name + g.DOT - g.name
        - g.LBRACK - kw('m').suppress() - g.EQ - g.posint
        - g.COMMA - kw('d').suppress() - g.EQ - g.natint - g.RBRACK
        - (kw('sync') | kw('trigger')),
        _build_end,
    )
    motif = g.located(
        kw('motif').suppress() - g.name - g.LBRACE - pp.Group(end - pp.ZeroOrMore(g.COMMA - end)) - g.RBRACE,
        _build_motif,
    )
    diagram = kw('diagram').suppress() - g.LBRACE - pp.Group(pp.ZeroOrMore(motif)) - g.RBRACE

    model = pp.Group(pp.OneOrMore(component)) + diagram + pp.StringEnd().set_name('end of text')
    model.ignore(pp.python_style_comment)
    return model


def parse_model(text: str, file: str = '<memory>') -> Model:
    """
    Parse a model document.

    Args:
        text: Model source, with template placeholders already substituted
        file: Name recorded in source spans and error messages

    Returns:
        The model; names are not resolved yet (see validate_references)

    Raises ParseError on the first syntax error, with the span of the
    offending token.
    """
    logger.info("Parsing model %s", file)
    stripped = '\n'.join(line.split('#', 1)[0] for line in text.splitlines()).strip()
    if not stripped:
        raise ParseError("expected 'component'", SourceSpan(file, 1, 1, 1, 1))
    try:
        components, motifs = _model_grammar(file).parse_string(text, parse_all=True)
    except pp.ParseBaseException as exc:
        raise _to_parse_error(exc, file) from None
    except ModelError as exc:
        raise ParseError(str(exc), SourceSpan(file, 1, 1, 1, 1)) from None
    model = Model(Diagram(tuple(components), tuple(motifs)), file)
    logger.info("Parsed %s: %d component type(s), %d motif(s)",
                file, len(model.component_types), len(model.motifs))
    return model


def _transition_text(t: Transition) -> str:
    if t.kind is TransitionKind.ENFORCEABLE:
        suffix = f"on {t.label}"
    elif t.kind is TransitionKind.SPONTANEOUS:
        suffix = f"when {t.label}"
    else:
        suffix = 'internal'
    return f"{t.source} -> {t.destination} {suffix}"


def _end_text(end: MotifEnd) -> str:
    return f"{end.port}[m={end.multiplicity},d={end.degree}] {end.typing.value}"


def serialize_model(model: Model) -> str:
    """Canonical source text of a model; parsing it gives back an equal model"""
    lines: List[str] = []
    for ct in model.component_types:
        lines.append(f"component {ct.name} (n={ct.cardinality}) {{")
        lines.append(f"  ports {', '.join(ct.ports)}")
        if ct.events:
            lines.append(f"  events {', '.join(ct.events)}")
        lines.append(f"  states {', '.join(ct.lts.states)}")
        if ct.lts.initial:
            lines.append(f"  initial {', '.join(ct.lts.initial)}")
        for transition in ct.lts.transitions:
            lines.append(f"  {_transition_text(transition)}")
        lines.append("}")
        lines.append("")
    lines.append("diagram {")
    for motif in model.motifs:
        lines.append(f"  motif {motif.id} {{ {', '.join(_end_text(e) for e in motif.ends)} }}")
    lines.append("}")
    return '\n'.join(lines) + '\n'


# ============================================================================
# TEMPLATES AND PATTERNS
# ============================================================================

def instantiate_template(text: str, params: Optional[Mapping[str, int]] = None) -> str:
    """Substitute `$name` placeholders with parameter values"""
    if '$' not in text:
        return text
    try:
        return Template(text).substitute({k: str(v) for k, v in (params or {}).items()})
    except KeyError as exc:
        raise MissingParameter(f"parameter '{exc.args[0]}' is not set; use --param {exc.args[0]}=N") from None
    except ValueError as exc:
        raise ParseError(f"bad placeholder: {exc}") from None


def pattern_source(name: str) -> str:
    if name not in PATTERNS:
        raise UnknownPattern(f"unknown pattern '{name}'; bundled patterns: {', '.join(PATTERNS)}")
    return resources.files('Bipforge.Toolchain').joinpath('patterns', f'{name}.bip').read_text(encoding='utf-8')


def load_pattern(name: str, params: Mapping[str, int]) -> Model:
    """Instantiate a bundled coordination pattern with its parameters"""
    text = instantiate_template(pattern_source(name), params)
    return parse_model(text, file=f'<pattern:{name}>')


# ============================================================================
# SCENARIOS
# ============================================================================

def load_scenario(text: str, file: str = '<scenario>') -> EventSchedule:
    """
    Parse a scenario: one `CYCLE TYPE[index] EVENT` entry per line.

    Entries are returned sorted by cycle; entries of the same cycle keep
    their file order.
    """
    g = _Grammar(file)
    entry = g.located(
        g.natint + g.ident.copy() + g.LBRACK - g.posint - g.RBRACK - g.ident.copy(),
        lambda v, span: ScheduledEvent(v[0], v[1], v[2], v[3], span),
    )
    grammar = pp.ZeroOrMore(entry) + pp.StringEnd().set_name('end of text')
    grammar.ignore(pp.python_style_comment)
    try:
        entries = list(grammar.parse_string(text, parse_all=True))
    except pp.ParseBaseException as exc:
        raise _to_parse_error(exc, file) from None
    lines = set()
    for entry in entries:
        span = entry.span
        if span.start_line != span.end_line or span.start_line in lines:
            raise ParseError("expected one scenario entry per line", span)
        lines.add(span.start_line)
    return EventSchedule(tuple(sorted(entries, key=lambda e: e.cycle)))


# ============================================================================
# CONFIGURATIONS
# ============================================================================

_TYPING_MARK = {Typing.SYNCHRON: '*', Typing.TRIGGER: '!'}
_MARK_TYPING = {mark: typing for typing, mark in _TYPING_MARK.items()}


def render_node(node: ConnectorNode) -> str:
    if node.is_leaf:
        return f"{node.port}{_TYPING_MARK[node.typing]}"
    inner = ' '.join(render_node(child) for child in node.children)
    return f"[{inner}]{_TYPING_MARK[node.typing]}"


def render_connector(connector: ConnectorNode) -> str:
    """`motif: C[1].p* S[2].q!`; nested groups render as `[ ... ]*`"""
    if connector.is_leaf:
        body = render_node(connector)
    else:
        body = ' '.join(render_node(child) for child in connector.children)
    return f"{connector.motif or '-'}: {body}"


def render_configuration(configuration: Configuration) -> str:
    return '\n'.join(render_connector(c) for c in configuration)


def load_configuration(text: str, file: str = '<configuration>') -> Configuration:
    """Parse connectors written in the rendering of render_configuration"""
    g = _Grammar(file)
    mark = (pp.Literal('*') | pp.Literal('!')).set_name("'*' or '!'")
    leaf = (g.ident.copy() + g.LBRACK - g.posint - g.RBRACK - g.DOT - g.ident.copy() - mark).set_parse_action(
        lambda t: ConnectorNode.leaf(PortInstance(t[0], t[1], t[2]), _MARK_TYPING[t[3]])
    )
    node = pp.Forward()
    group = (g.LBRACK + pp.Group(pp.OneOrMore(node)) - g.RBRACK - mark).set_parse_action(
        lambda t: ConnectorNode.group(t[0], _MARK_TYPING[t[1]])
    )
    node <<= leaf | group
    motif_id = g.ident.copy() | pp.Literal('-')
    connector = (motif_id + g.COLON - pp.Group(pp.OneOrMore(node))).set_parse_action(
        lambda t: ConnectorNode.group(t[1], Typing.SYNCHRON, motif=None if t[0] == '-' else t[0])
    )
    grammar = pp.OneOrMore(connector) + pp.StringEnd().set_name('end of text')
    grammar.ignore(pp.python_style_comment)
    try:
        connectors = list(grammar.parse_string(text, parse_all=True))
    except pp.ParseBaseException as exc:
        raise _to_parse_error(exc, file) from None
    except ModelError as exc:
        raise ParseError(str(exc), SourceSpan(file, 1, 1, 1, 1)) from None
    return Configuration.of(connectors)
