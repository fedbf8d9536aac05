"""
Require/Accept macros: encoding of a diagram, extensional meaning of the
macros, the diagram/macro equivalence check and the glue XML document.
"""

import logging
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional

from Bipforge.Toolchain import config
from Bipforge.Toolchain.diagrams import expand_unique
from Bipforge.Toolchain.errors import ParseError, UniverseTooLarge
from Bipforge.Toolchain.interactions import interactions_of_configuration
from Bipforge.Toolchain.models import (
    Accept,
    Diagram,
    Interaction,
    InteractionSet,
    Macros,
    PortInstance,
    PortTypeRef,
    RequireMode,
    RequireOption,
    port_instances,
)
from Bipforge.Toolchain.utils import non_empty_subsets

logger = logging.getLogger(__name__)

MODES = ('motif', 'flat')


def _option_key(option: RequireOption):
    return (option.motif or '', option.mode.value if option.mode else '', option.counts)


# ============================================================================
# ENCODING
# ============================================================================

def encode_macros(diagram: Diagram) -> Macros:
    """
    Require and Accept of every port type that appears in some motif.

    A motif made of one end of multiplicity 1 gives unary interactions: the
    port requires and accepts nothing. Otherwise the port accepts the other
    port types of the motif (its own type too when the multiplicity is above
    1), bounded by their multiplicities. A trigger requires nothing; a
    synchron next to triggers needs one of them; a synchron among synchrons
    needs exactly the rest of the connector.
    """
    require: Dict[PortTypeRef, List[RequireOption]] = {}
    bounds: Dict[PortTypeRef, Dict[PortTypeRef, int]] = {}
    unary = set()

    for motif in diagram.motifs:
        types = motif.port_types
        multiplicity = {end.port: end.multiplicity for end in motif.ends}
        for end in motif.ends:
            p = end.port
            options = require.setdefault(p, [])
            parts = bounds.setdefault(p, {})

            if len(types) == 1 and end.multiplicity == 1:
                options.append(RequireOption.dash(motif.id))
                unary.add(p)
                continue

            accepted = types if end.multiplicity > 1 else [t for t in types if t != p]
            for t in accepted:
                parts[t] = max(parts.get(t, 0), multiplicity[t])

            if end.is_trigger:
                options.append(RequireOption.dash(motif.id))
            elif motif.has_trigger:
                for other in motif.ends:
                    if other.is_trigger:
                        options.append(RequireOption.of(motif.id, {other.port: 1}, RequireMode.AT_LEAST))
            else:
                counts = {t: multiplicity[t] for t in types if t != p}
                if end.multiplicity > 1:
                    counts[p] = end.multiplicity - 1
                options.append(RequireOption.of(motif.id, counts, RequireMode.EXACT))

    accept = {
        p: Accept(parts=tuple(sorted(bounds.get(p, {}).items())), none=p in unary)
        for p in require
    }
    macros = Macros(
        require={p: tuple(sorted(options, key=_option_key)) for p, options in sorted(require.items())},
        accept=dict(sorted(accept.items())),
    )
    logger.info("Encoded %d port type(s) into macros", len(macros.require))
    return macros


# ============================================================================
# MACRO SEMANTICS
# ============================================================================

def _accepts(accept: Optional[Accept], p: PortInstance, members: Iterable[PortInstance]) -> bool:
    others = [q for q in members if q != p]
    if accept is None or not accept.parts:
        return not others
    if any(not accept.permits(q.port_type) for q in others):
        return False
    counts = Counter(q.port_type for q in members)
    return all(counts[t] <= bound for t, bound in accept.parts)


def _option_holds(option: RequireOption, p: PortInstance, members: Iterable[PortInstance]) -> bool:
    if option.is_dash:
        return True
    counts = Counter(q.port_type for q in members if q != p)
    wanted = option.count_map()
    if option.mode is RequireMode.AT_LEAST:
        return all(counts[t] >= c for t, c in wanted.items())
    return counts == Counter(wanted)


def _valid(macros: Macros, members: frozenset, motif: Optional[str]) -> bool:
    for p in members:
        ref = p.port_type
        if not _accepts(macros.accept.get(ref), p, members):
            return False
        options = [o for o in macros.require.get(ref, ()) if motif is None or o.motif == motif]
        if not any(_option_holds(o, p, members) for o in options):
            return False
    return True


def _universe(types: Iterable[PortTypeRef], cards: Mapping[str, int], bound: int, where: str) -> List[PortInstance]:
    ports = sorted(p for ref in types for p in port_instances(ref, cards))
    if len(ports) > bound:
        raise UniverseTooLarge(len(ports), bound, where)
    return ports


def interactions_from_macros(macros: Macros, cards: Mapping[str, int], mode: str = 'motif',
                             bound: Optional[int] = None) -> InteractionSet:
    """
    Every interaction the macros allow, by brute force over port-instance
    sets. In `motif` mode an interaction is built inside one motif: only the
    port types that motif tags and only the Require options it produced
    count. `flat` mode ignores motif tags.
    """
    if mode not in MODES:
        raise ValueError(f"unknown macro evaluation mode {mode!r}; use one of {', '.join(MODES)}")
    bound = config['UNIVERSE_BOUND'] if bound is None else bound

    if mode == 'flat':
        scopes = [(None, macros.port_types())]
    else:
        scopes = []
        for motif in macros.motif_ids():
            types = [ref for ref, options in macros.require.items() if any(o.motif == motif for o in options)]
            scopes.append((motif, sorted(types)))

    result = set()
    for motif, types in scopes:
        universe = _universe(types, cards, bound, f"motif {motif}" if motif else 'macro universe')
        for subset in non_empty_subsets(universe):
            members = frozenset(subset)
            if _valid(macros, members, motif):
                result.add(members)
    return frozenset(result)


@dataclass(frozen=True)
class EquivalenceReport:
    equal: bool
    only_in_diagram: InteractionSet
    only_in_macros: InteractionSet


def check_equivalence(diagram: Diagram, cards: Mapping[str, int], mode: str = 'motif',
                      bound: Optional[int] = None) -> EquivalenceReport:
    """Compare the interactions of the expanded diagram with those its macros allow"""
    from_diagram = interactions_of_configuration(expand_unique(diagram, cards))
    from_macros = interactions_from_macros(encode_macros(diagram), cards, mode, bound)
    only_in_diagram = from_diagram - from_macros
    only_in_macros = from_macros - from_diagram
    equal = not only_in_diagram and not only_in_macros
    if not equal:
        logger.info("Diagram and macros differ: %d only in diagram, %d only in macros",
                    len(only_in_diagram), len(only_in_macros))
    return EquivalenceReport(equal, frozenset(only_in_diagram), frozenset(only_in_macros))


# ============================================================================
# TEXT NOTATION
# ============================================================================

def _option_text(option: RequireOption) -> str:
    if option.is_dash:
        return '-'
    words = [str(ref) for ref, count in option.counts for _ in range(count)]
    suffix = '+' if option.mode is RequireMode.AT_LEAST else ''
    return ' '.join(words) + suffix


def render_macros(macros: Macros) -> str:
    """
    Two lines per port type, `C.p Require S.q` and `C.p Accept S.q`.
    Options are separated by `;`, `-` stands for no partner and a trailing
    `+` marks an at-least option.
    """
    lines = []
    for ref in macros.port_types():
        options = macros.require.get(ref, ())
        lines.append(f"{ref} Require {' ; '.join(_option_text(o) for o in options) or '-'}")
        accept = macros.accept.get(ref)
        parts = ' '.join(str(t) for t, _ in accept.parts) if accept is not None else ''
        lines.append(f"{ref} Accept {parts or '-'}")
    return '\n'.join(lines)


# ============================================================================
# GLUE XML
# ============================================================================

def _ref_attrs(ref: PortTypeRef) -> Dict[str, str]:
    return {'type': ref.component_type, 'name': ref.port}


def emit_glue(macros: Macros) -> str:
    """Glue document, ports sorted by (component, port) and options by motif"""
    root = ET.Element('glue')
    for ref in macros.port_types():
        port = ET.SubElement(root, 'port', _ref_attrs(ref))

        options = sorted(macros.require.get(ref, ()), key=_option_key)
        require = ET.SubElement(port, 'require')
        if all(o.is_dash for o in options):
            require.set('none', 'true')
        for option in options:
            element = ET.SubElement(require, 'option')
            if option.motif is not None:
                element.set('motif', option.motif)
            if option.is_dash:
                element.set('none', 'true')
                continue
            element.set('mode', option.mode.value)
            for part, count in option.counts:
                ET.SubElement(element, 'part', {**_ref_attrs(part), 'count': str(count)})

        accept = macros.accept.get(ref, Accept(none=True))
        element = ET.SubElement(port, 'accept')
        if accept.none:
            element.set('none', 'true')
        for part, bound in accept.parts:
            ET.SubElement(element, 'part', {**_ref_attrs(part), 'max': str(bound)})

    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding='unicode') + '\n'


def _ref_of(element: ET.Element) -> PortTypeRef:
    try:
        return PortTypeRef(element.attrib['type'], element.attrib['name'])
    except KeyError as exc:
        raise ParseError(f"<{element.tag}> lacks the {exc.args[0]!r} attribute") from None


def _int_attr(element: ET.Element, name: str, default: Optional[int] = None) -> int:
    raw = element.get(name)
    if raw is None:
        if default is None:
            raise ParseError(f"<{element.tag}> lacks the {name!r} attribute")
        return default
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"<{element.tag}> attribute {name}={raw!r} is not an integer") from None


def parse_glue(text: str) -> Macros:
    """Read a glue document written by emit_glue"""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed glue document: {exc}") from None
    if root.tag != 'glue':
        raise ParseError(f"expected <glue> as the document element, found <{root.tag}>")

    require = {}
    accept = {}
    for port in root.findall('port'):
        ref = _ref_of(port)
        options = []
        require_element = port.find('require')
        if require_element is not None:
            for element in require_element.findall('option'):
                motif = element.get('motif')
                if element.get('none') == 'true':
                    options.append(RequireOption.dash(motif))
                    continue
                try:
                    mode = RequireMode(element.get('mode'))
                except ValueError:
                    raise ParseError(f"option of {ref} has an unknown mode {element.get('mode')!r}") from None
                counts = {_ref_of(part): _int_attr(part, 'count') for part in element.findall('part')}
                options.append(RequireOption.of(motif, counts, mode))
            if not options and require_element.get('none') == 'true':
                options.append(RequireOption.dash(None))
        require[ref] = tuple(options)

        accept_element = port.find('accept')
        if accept_element is None:
            accept[ref] = Accept(none=True)
        else:
            parts = tuple(sorted(
                (_ref_of(part), _int_attr(part, 'max', default=1)) for part in accept_element.findall('part')
            ))
            accept[ref] = Accept(parts=parts, none=accept_element.get('none') == 'true')
    return Macros(require=require, accept=accept)


def interaction_list(interactions: Iterable[Interaction]) -> List[List[str]]:
    """Interactions as sorted lists of port instance names, for JSON output"""
    return sorted(sorted(str(p) for p in a) for a in interactions)
