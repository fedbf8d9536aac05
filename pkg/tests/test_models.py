import pytest

from Bipforge.Toolchain.errors import MissingCardinality, ModelError
from Bipforge.Toolchain.models import (
    Atom,
    Configuration,
    ConnectorNode,
    Diagnostic,
    Not,
    PortInstance,
    PortTypeRef,
    Severity,
    SourceSpan,
    Transition,
    TransitionKind,
    conj,
    port_instances,
    resolve_cardinalities,
    validate_references,
)

from conftest import load_fixture


def test_port_instance_rendering_and_order():
    p = PortInstance('T1', 2, 'p')
    assert str(p) == 'T1[2].p'
    assert p.instance == ('T1', 2)
    assert p.port_type == PortTypeRef('T1', 'p')
    assert sorted([PortInstance('T2', 1, 'q'), PortInstance('T1', 2, 'p'), PortInstance('T1', 1, 'p')]) == [
        PortInstance('T1', 1, 'p'), PortInstance('T1', 2, 'p'), PortInstance('T2', 1, 'q'),
    ]


def test_port_instance_index_starts_at_one():
    with pytest.raises(ModelError):
        PortInstance('T1', 0, 'p')


def test_internal_transition_cannot_carry_label():
    with pytest.raises(ModelError):
        Transition('a', 'b', TransitionKind.INTERNAL, 'p')
    with pytest.raises(ModelError):
        Transition('a', 'b', TransitionKind.ENFORCEABLE)


def test_connector_rejects_repeated_port():
    p = PortInstance('T1', 1, 'p')
    with pytest.raises(ModelError):
        ConnectorNode.group([ConnectorNode.leaf(p), ConnectorNode.leaf(p)])


def test_configuration_is_non_empty():
    with pytest.raises(ModelError):
        Configuration.of([])


def test_configuration_is_canonically_ordered():
    a = ConnectorNode.group([ConnectorNode.leaf(PortInstance('T', 2, 'p'))], motif='m')
    b = ConnectorNode.group([ConnectorNode.leaf(PortInstance('T', 1, 'p'))], motif='m')
    assert Configuration.of([a, b]).connectors == (b, a)


def test_conjunction_renders_through_de_morgan():
    p = PortInstance('T1', 1, 'p')
    q = PortInstance('T2', 1, 'q')
    phi = conj(Atom(p), Not(Atom(q)))
    assert str(phi) == 'T1[1].p & !T2[1].q'
    assert phi.evaluate(frozenset([p]))
    assert not phi.evaluate(frozenset([p, q]))


def test_diagnostic_render_uses_span():
    span = SourceSpan('m.bip', 3, 5, 3, 9)
    d = Diagnostic(Severity.ERROR, 'NO_INITIAL', 'boom', span, 'component X')
    assert d.render() == 'ERROR NO_INITIAL m.bip:3:5 boom'
    assert d.as_dict()['line'] == 3


def test_resolve_cardinalities_precedence():
    model = load_fixture('trigger.bip')
    cards = resolve_cardinalities(model, cards={'T1': 1}, params={'n1': 5, 'n2': 2})
    assert cards == {'T1': 1, 'T2': 2}


def test_resolve_cardinalities_names_every_missing_type():
    model = load_fixture('trigger.bip')
    with pytest.raises(MissingCardinality) as excinfo:
        resolve_cardinalities(model)
    assert 'T1 (n=n1)' in str(excinfo.value)
    assert 'T2 (n=n2)' in str(excinfo.value)


def test_port_instances_in_index_order():
    assert [str(p) for p in port_instances(PortTypeRef('S', 'q'), {'S': 3})] == ['S[1].q', 'S[2].q', 'S[3].q']
    with pytest.raises(MissingCardinality):
        port_instances(PortTypeRef('S', 'q'), {})


def test_validate_references_reports_duplicates_and_unresolved_ends():
    codes = [d.code for d in validate_references(load_fixture('duplicate.bip'))]
    assert 'DUPLICATE_NAME' in codes
    assert 'UNRESOLVED_REFERENCE' in codes


def test_validate_references_clean_model():
    assert validate_references(load_fixture('ambiguous.bip')) == []
