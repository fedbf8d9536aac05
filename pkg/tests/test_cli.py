import json

import pytest
from click.testing import CliRunner

from Bipforge.Toolchain.cli import main

from conftest import fixture_path


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


def test_check_reports_non_encodable_diagram(runner):
    result = invoke(runner, 'check', fixture_path('ambiguous.bip'))
    assert result.exit_code == 3
    assert result.output.count('matching factor 2 ≠ max connectors 4') == 2
    assert 'not encodable' in result.output


def test_check_encodable_diagram(runner):
    result = invoke(runner, 'check', fixture_path('complete.bip'))
    assert result.exit_code == 0
    assert result.output.strip() == 'encodable'


def test_check_behavioral_errors(runner):
    result = invoke(runner, 'check', fixture_path('broken.bip'))
    assert result.exit_code == 1
    assert 'does not have an initial state' in result.output


def test_check_json(runner):
    result = invoke(runner, 'check', fixture_path('ambiguous.bip'), '--format', 'json')
    document = json.loads(result.output)
    assert document['encodability']['verdict'] is False
    assert [e['cond2'] for e in document['encodability']['ends']] == [False, False]


def test_parse_error(runner, tmp_path):
    path = tmp_path / 'bad.bip'
    path.write_text('component {', encoding='utf-8')
    assert invoke(runner, 'check', path).exit_code == 2


def test_missing_cardinality(runner):
    result = invoke(runner, 'expand', fixture_path('trigger.bip'))
    assert result.exit_code == 1
    assert '--card' in result.output


def test_expand_trigger(runner):
    result = invoke(runner, 'expand', fixture_path('trigger.bip'), '--card', 'T1=1', '--card', 'T2=2')
    assert result.exit_code == 0
    assert result.output.strip() == 'm: T1[1].p* T2[1].q! T2[2].q!'


def test_expand_with_parameters(runner):
    result = invoke(runner, 'expand', fixture_path('trigger.bip'), '--param', 'n1=1', '--param', 'n2=2')
    assert result.exit_code == 0


def test_expand_non_encodable(runner):
    assert invoke(runner, 'expand', fixture_path('ambiguous.bip')).exit_code == 3


def test_enumerate(runner):
    result = invoke(runner, 'enumerate', fixture_path('ambiguous.bip'))
    assert result.exit_code == 0
    assert result.output.startswith('2 configuration(s)')


def test_enumerate_limit(runner):
    result = invoke(runner, 'enumerate', fixture_path('ambiguous.bip'), '--limit', 1)
    assert result.exit_code == 5


def test_interactions_trigger(runner):
    result = invoke(runner, 'interactions', fixture_path('trigger.bip'), '--card', 'T1=1', '--card', 'T2=2')
    assert result.exit_code == 0
    assert len(result.output.strip().splitlines()) == 6


def test_pattern_encode_and_macro_interactions(runner, tmp_path):
    model = tmp_path / 'star.bip'
    glue = tmp_path / 'star.xml'
    assert invoke(runner, 'pattern', 'star', '--param', 'n=3', '-o', model).exit_code == 0
    result = invoke(runner, 'encode', model, '-o', glue)
    assert result.exit_code == 0
    assert 'C.p Require S.q' in result.output
    assert glue.read_text(encoding='utf-8').startswith('<?xml')
    result = invoke(runner, 'interactions', model, '--glue', 'macros', '--format', 'json')
    assert json.loads(result.output) == [
        ['C[1].p', 'S[1].q'], ['C[1].p', 'S[2].q'], ['C[1].p', 'S[3].q'],
    ]


def test_pattern_needs_its_parameter(runner):
    assert invoke(runner, 'pattern', 'star').exit_code == 1


def test_equiv(runner):
    result = invoke(runner, 'equiv', fixture_path('trigger.bip'), '--card', 'T1=1', '--card', 'T2=2')
    assert result.exit_code == 0
    assert result.output.strip() == 'equal'


def test_formula(runner, tmp_path):
    model = tmp_path / 'star.bip'
    invoke(runner, 'pattern', 'star', '--param', 'n=3', '-o', model)
    result = invoke(runner, 'formula', model)
    assert result.exit_code == 0
    assert result.output.strip() == (
        'C[1].p & S[1].q & !S[2].q & !S[3].q'
        ' | C[1].p & !S[1].q & S[2].q & !S[3].q'
        ' | C[1].p & !S[1].q & !S[2].q & S[3].q'
    )


def test_run_is_deterministic(runner, tmp_path):
    model = tmp_path / 'mutex.bip'
    invoke(runner, 'pattern', 'mutex', '--param', 'n=2', '-o', model)
    traces = []
    for name in ('a.json', 'b.json'):
        path = tmp_path / name
        result = invoke(runner, 'run', model, '--seed', 42, '--cycles', 200, '--trace', path)
        assert result.exit_code == 0
        assert 'completed after 200 cycle(s)' in result.output
        traces.append(path.read_bytes())
    assert traces[0] == traces[1]

    result = invoke(runner, 'stats', tmp_path / 'a.json', '--format', 'json')
    document = json.loads(result.output)
    assert document['cycles'] == 200
    assert sum(entry['count'] for entry in document['interactions']) == 200


def test_run_with_scenario(runner):
    result = invoke(runner, 'run', fixture_path('lamp.bip'), '--cycles', 3,
                    '--scenario', fixture_path('lamp.scenario'), '--policy', 'first')
    assert result.exit_code == 0
    document = json.loads(result.output)
    assert document['records'][0]['spontaneous'][0]['event'] == 'press'


def test_run_deadlock(runner):
    assert invoke(runner, 'run', fixture_path('lonely.bip')).exit_code == 0
    result = invoke(runner, 'run', fixture_path('lonely.bip'), '--fail-on-deadlock')
    assert result.exit_code == 4


def test_run_refuses_broken_behavior(runner):
    assert invoke(runner, 'run', fixture_path('broken.bip')).exit_code == 1


def test_conforms(runner):
    config = fixture_path('complete.config')
    assert invoke(runner, 'conforms', fixture_path('complete.bip'), config).exit_code == 0
    result = invoke(runner, 'conforms', fixture_path('ambiguous.bip'), config)
    assert result.exit_code == 1
    assert 'does not conform' in result.output


def test_stats_csv(runner, tmp_path):
    trace = tmp_path / 'trace.json'
    csv = tmp_path / 'cycles.csv'
    invoke(runner, 'run', fixture_path('lonely.bip'), '--trace', trace)
    result = invoke(runner, 'stats', trace, '--csv', csv)
    assert result.exit_code == 0
    assert result.output.startswith('deadlock after 1 cycle(s)')
    assert csv.read_text(encoding='utf-8').splitlines()[0] == 'cycle,interaction,fired,spontaneous,internal'


BROKEN_WITH_MOTIF = """\
component A (n=1) {
  ports p
  states s0
  s0 -> nowhere on p
}

component B (n=1) {
  ports q
  states s0
  initial s0
  s0 -> s0 on q
}

diagram {
  motif m { A.p[m=1,d=1] sync, B.q[m=1,d=1] sync }
}
"""


def test_generation_stops_on_behavioral_errors(runner, tmp_path):
    model = tmp_path / 'bad.bip'
    model.write_text(BROKEN_WITH_MOTIF, encoding='utf-8')
    glue = tmp_path / 'bad.xml'

    result = invoke(runner, 'encode', model, '-o', glue)
    assert result.exit_code == 1
    assert 'NO_INITIAL' in result.output
    assert 'DANGLING_DEST' in result.output
    assert not glue.exists()

    for command in ('expand', 'enumerate', 'interactions', 'equiv', 'formula'):
        result = invoke(runner, command, model)
        assert result.exit_code == 1, command
        assert 'NO_INITIAL' in result.output
        assert 'A[1].p' not in result.output
