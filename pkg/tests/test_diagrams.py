from fractions import Fraction
from itertools import product

import pytest

from Bipforge.Toolchain.diagrams import (
    check_encodable,
    conforms,
    enumerate_configurations,
    expand_unique,
    matching_factor,
    max_connectors,
)
from Bipforge.Toolchain.dsl import load_configuration, render_configuration
from Bipforge.Toolchain.errors import LimitExceeded, NotEncodable
from Bipforge.Toolchain.models import (
    Architecture,
    ComponentType,
    Configuration,
    ConnectorMotif,
    Diagram,
    Lts,
    MotifEnd,
    PortTypeRef,
    Transition,
    TransitionKind,
    Typing,
)

PAIR_CARDS = {'T1': 2, 'T2': 2}


def _component(name, port):
    lts = Lts(('s0',), ('s0',), (Transition('s0', 's0', TransitionKind.ENFORCEABLE, port),))
    return ComponentType(name, (port,), (), lts, 1)


def _end(component, port, m, d, typing=Typing.SYNCHRON):
    return MotifEnd(PortTypeRef(component, port), m, d, typing)


def _diagram(*ends):
    components = tuple(_component(end.port.component_type, end.port.port) for end in ends)
    return Diagram(components, (ConnectorMotif('m', tuple(ends)),))


def _architecture(cards, text):
    components = tuple((name, i) for name, n in sorted(cards.items()) for i in range(1, n + 1))
    return Architecture(components, load_configuration(text))


def test_matching_factor(ambiguous, complete):
    single = ambiguous.motifs[0].ends[0]
    double = complete.motifs[0].ends[0]
    assert matching_factor(single, PAIR_CARDS) == 2
    assert matching_factor(double, PAIR_CARDS) == 4
    assert matching_factor(_end('T', 'p', 2, 1), {'T': 3}) == Fraction(3, 2)


def test_max_connectors(ambiguous):
    assert max_connectors(ambiguous.motifs[0], PAIR_CARDS) == 4
    assert max_connectors(ConnectorMotif('u', (_end('T', 'p', 1, 1),)), {'T': 3}) == 3
    assert max_connectors(ConnectorMotif('u', (_end('T', 'p', 2, 1),)), {'T': 1}) == 0


def test_ambiguous_is_not_encodable(ambiguous):
    report = check_encodable(ambiguous.diagram, PAIR_CARDS)
    assert not report.verdict
    assert [(e.cond1, e.cond2) for e in report.ends] == [(True, False), (True, False)]
    messages = [d.message for d in report.diagnostics]
    assert messages == ['matching factor 2 ≠ max connectors 4'] * 2
    assert all(d.span is not None for d in report.diagnostics)


def test_complete_is_encodable(complete):
    report = check_encodable(complete.diagram, PAIR_CARDS)
    assert report.verdict
    assert report.diagnostics == ()


def test_multiplicity_above_cardinality_fails_first_condition():
    report = check_encodable(_diagram(_end('T', 'p', 3, 1)), {'T': 2})
    assert not report.ends[0].cond1
    assert 'MULTIPLICITY_EXCEEDS_CARDINALITY' in [d.code for d in report.diagnostics]


def test_expand_complete(complete):
    configuration = expand_unique(complete.diagram, PAIR_CARDS)
    assert render_configuration(configuration) == '\n'.join([
        'm: T1[1].p* T2[1].q*',
        'm: T1[1].p* T2[2].q*',
        'm: T1[2].p* T2[1].q*',
        'm: T1[2].p* T2[2].q*',
    ])


def test_expand_trigger_gives_one_trigger_connector(trigger):
    configuration = expand_unique(trigger.diagram, {'T1': 1, 'T2': 2})
    assert render_configuration(configuration) == 'm: T1[1].p* T2[1].q! T2[2].q!'


def test_expand_unary_motif():
    configuration = expand_unique(_diagram(_end('T', 'p', 1, 1)), {'T': 3})
    assert render_configuration(configuration) == 'm: T[1].p*\nm: T[2].p*\nm: T[3].p*'


def test_expand_refuses_non_encodable(ambiguous):
    with pytest.raises(NotEncodable) as excinfo:
        expand_unique(ambiguous.diagram, PAIR_CARDS)
    assert excinfo.value.report is not None


def test_enumerate_ambiguous_finds_both_configurations(ambiguous):
    configurations = enumerate_configurations(ambiguous.diagram, PAIR_CARDS)
    assert [render_configuration(c) for c in configurations] == [
        'm: T1[1].p* T2[1].q*\nm: T1[2].p* T2[2].q*',
        'm: T1[1].p* T2[2].q*\nm: T1[2].p* T2[1].q*',
    ]


def test_enumerate_complete_matches_expansion(complete):
    configurations = enumerate_configurations(complete.diagram, PAIR_CARDS)
    assert configurations == [expand_unique(complete.diagram, PAIR_CARDS)]


def test_enumerate_non_integral_matching_factor():
    diagram = _diagram(_end('P', 'p', 1, 3), _end('Q', 'q', 2, 1))
    assert enumerate_configurations(diagram, {'P': 1, 'Q': 3}) == []


def test_enumerate_is_deterministic(ambiguous):
    assert enumerate_configurations(ambiguous.diagram, PAIR_CARDS) == enumerate_configurations(ambiguous.diagram, PAIR_CARDS)


def test_enumerate_limit(ambiguous):
    with pytest.raises(LimitExceeded) as excinfo:
        enumerate_configurations(ambiguous.diagram, PAIR_CARDS, limit=1)
    assert excinfo.value.found == 0


def test_enumerate_max_results(ambiguous):
    assert len(enumerate_configurations(ambiguous.diagram, PAIR_CARDS, max_results=1)) == 1


def test_enumerate_zero_degree_diagram_yields_nothing():
    assert enumerate_configurations(_diagram(_end('T', 'p', 1, 0)), {'T': 2}) == []


def test_zero_degree_motif_adds_no_connectors():
    components = (
        ComponentType('T1', ('p', 'r'), (), Lts(('s0',), ('s0',), ()), 2),
        ComponentType('T2', ('q',), (), Lts(('s0',), ('s0',), ()), 2),
    )
    live = ConnectorMotif('a', (_end('T1', 'p', 1, 2), _end('T2', 'q', 1, 2)))
    idle = ConnectorMotif('b', (_end('T1', 'r', 1, 0),))
    (configuration,) = enumerate_configurations(Diagram(components, (live, idle)), PAIR_CARDS)
    assert {c.motif for c in configuration} == {'a'}
    assert len(configuration) == 4


def test_enumerate_multiple_motifs_is_a_product():
    ends_a = (_end('T1', 'p', 1, 1), _end('T2', 'q', 1, 1))
    ends_b = (_end('T1', 'r', 1, 1), _end('T2', 's', 1, 1))
    components = (
        ComponentType('T1', ('p', 'r'), (), Lts(('s0',), ('s0',), ()), 2),
        ComponentType('T2', ('q', 's'), (), Lts(('s0',), ('s0',), ()), 2),
    )
    diagram = Diagram(components, (ConnectorMotif('a', ends_a), ConnectorMotif('b', ends_b)))
    configurations = enumerate_configurations(diagram, PAIR_CARDS)
    assert len(configurations) == 4
    assert all(len(c) == 4 for c in configurations)


def test_conforms_trigger_architecture(trigger):
    cards = {'T1': 1, 'T2': 2}
    assert conforms(_architecture(cards, 'm: T1[1].p* T2[1].q! T2[2].q!'), trigger.diagram, cards)


def test_duplicate_connector_exceeds_degree(trigger):
    cards = {'T1': 1, 'T2': 2}
    architecture = _architecture(cards, 'm: T1[1].p* T2[1].q! T2[2].q!')
    doubled = Architecture(architecture.components, Configuration(architecture.configuration.connectors * 2))
    assert not conforms(doubled, trigger.diagram, cards)


def test_instance_count_mismatch(trigger):
    cards = {'T1': 1, 'T2': 2}
    architecture = _architecture({'T1': 1, 'T2': 3}, 'm: T1[1].p* T2[1].q! T2[2].q!')
    assert not conforms(architecture, trigger.diagram, cards)


def test_wrong_typing_does_not_conform(trigger):
    cards = {'T1': 1, 'T2': 2}
    assert not conforms(_architecture(cards, 'm: T1[1].p* T2[1].q* T2[2].q*'), trigger.diagram, cards)


def test_ambiguous_configurations_conform(ambiguous):
    for configuration in enumerate_configurations(ambiguous.diagram, PAIR_CARDS):
        architecture = Architecture((('T1', 1), ('T1', 2), ('T2', 1), ('T2', 2)), configuration)
        assert conforms(architecture, ambiguous.diagram, PAIR_CARDS)


# Every single-motif diagram over at most two component types at desk scale:
# the diagram has exactly one conforming configuration iff it is encodable,
# and that configuration is the expansion.
SIZES = [(n, m, d) for n in range(1, 5) for m in range(1, 4) for d in range(1, 4)]
TYPINGS = [Typing.SYNCHRON, Typing.TRIGGER]

GRID = [((n, m, d, t),) for (n, m, d), t in product(SIZES, TYPINGS)]
GRID += [
    ((n1, m1, d1, t1), (n2, m2, d2, t2))
    for (n1, m1, d1), (n2, m2, d2) in product(SIZES, SIZES)
    for t1, t2 in product(TYPINGS, TYPINGS)
]


def grid_case(case):
    names = ['T1', 'T2'][:len(case)]
    ends = [_end(name, 'p', m, d, t) for name, (n, m, d, t) in zip(names, case)]
    cards = {name: n for name, (n, _, _, _) in zip(names, case)}
    return _diagram(*ends), cards


def test_uniqueness_iff_encodable_over_the_grid():
    counterexamples = []
    for case in GRID:
        diagram, cards = grid_case(case)
        verdict = check_encodable(diagram, cards).verdict
        found = enumerate_configurations(diagram, cards, max_results=2)
        if (len(found) == 1) != verdict:
            counterexamples.append(case)
        elif verdict and found[0] != expand_unique(diagram, cards):
            counterexamples.append(case)
    assert counterexamples == []


def test_expansion_conforms_over_the_grid():
    for case in GRID:
        diagram, cards = grid_case(case)
        if not check_encodable(diagram, cards).verdict:
            continue
        configuration = expand_unique(diagram, cards)
        components = tuple((name, i) for name, n in sorted(cards.items()) for i in range(1, n + 1))
        assert conforms(Architecture(components, configuration), diagram, cards)
