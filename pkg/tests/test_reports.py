import pytest

from Bipforge.Toolchain.dsl import load_pattern
from Bipforge.Toolchain.engine import run, trace_to_json
from Bipforge.Toolchain.errors import ParseError
from Bipforge.Toolchain.reports import interaction_counts, load_trace, state_occupancy, summarize_trace

from conftest import load_fixture

MUTEX_CARDS = {'Process': 2, 'MutexManager': 1}


@pytest.fixture
def mutex_trace():
    return run(load_pattern('mutex', {'n': 2}), MUTEX_CARDS, seed=3, max_cycles=20)


def test_summary_has_one_row_per_cycle(mutex_trace):
    df = summarize_trace(mutex_trace)
    assert list(df.columns) == ['cycle', 'interaction', 'fired', 'spontaneous', 'internal']
    assert list(df['cycle']) == list(range(20))
    assert (df['fired'] == 2).all()
    assert df['interaction'].iloc[0].startswith('MutexManager[1].acquire Process[')


def test_summary_of_a_loaded_document_matches(mutex_trace):
    loaded = load_trace(trace_to_json(mutex_trace))
    assert summarize_trace(loaded).equals(summarize_trace(mutex_trace))


def test_interaction_counts(mutex_trace):
    counts = interaction_counts(mutex_trace)
    assert list(counts.columns) == ['interaction', 'count']
    assert counts['count'].sum() == 20
    assert list(counts['count']) == sorted(counts['count'], reverse=True)


def test_state_occupancy(mutex_trace):
    occupancy = state_occupancy(mutex_trace)
    assert occupancy['MutexManager[1]'].sum() == 20
    assert occupancy.loc['taken', 'MutexManager[1]'] == 10


def test_idle_cycles_are_marked():
    trace = run(load_fixture('lonely.bip'), {'A': 1, 'B': 1})
    df = summarize_trace(trace)
    assert list(df['interaction']) == ['-']
    assert interaction_counts(trace).empty


def test_load_trace_rejects_bad_documents():
    with pytest.raises(ParseError):
        load_trace('{not json')
    with pytest.raises(ParseError):
        load_trace('{"header": {}}')
