"""
Trace statistics for replay and plotting.
Flattens trace documents into pandas tables.
"""

import json
import logging
from typing import Union

import pandas as pd

from Bipforge.Toolchain.engine import Trace
from Bipforge.Toolchain.errors import ParseError

logger = logging.getLogger(__name__)

COLUMNS = ['cycle', 'interaction', 'fired', 'spontaneous', 'internal']
NO_INTERACTION = '-'


def load_trace(text: str, file: str = '<trace>') -> dict:
    """
    Read a trace document written by the `run` command

    Args:
        text: JSON text of the trace
        file: Name used in error messages

    Returns:
        The trace as a plain dictionary
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{file}: not a JSON document ({e.msg} at line {e.lineno})") from None
    missing = [key for key in ('header', 'records', 'terminal') if key not in document]
    if missing:
        raise ParseError(f"{file}: trace lacks {', '.join(missing)}")
    return document


def _document(trace: Union[Trace, dict]) -> dict:
    return trace.as_dict() if isinstance(trace, Trace) else trace


def summarize_trace(trace: Union[Trace, dict]) -> pd.DataFrame:
    """
    One row per cycle: the chosen interaction (or '-') and how many port,
    spontaneous and internal transitions fired.
    """
    rows = []
    for record in _document(trace)['records']:
        interaction = record['interaction']
        rows.append({
            'cycle': record['cycle'],
            'interaction': ' '.join(interaction) if interaction else NO_INTERACTION,
            'fired': len(record['fired']),
            'spontaneous': len(record['spontaneous']),
            'internal': len(record['internal']),
        })
    df = pd.DataFrame(rows, columns=COLUMNS)
    logger.info("Summarized %d cycle(s)", len(df))
    return df


def interaction_counts(trace: Union[Trace, dict]) -> pd.DataFrame:
    """How often each interaction fired, most frequent first (ties by name)"""
    df = summarize_trace(trace)
    df = df[df['interaction'] != NO_INTERACTION]
    counts = df.groupby('interaction').size().reset_index(name='count')
    return counts.sort_values(['count', 'interaction'], ascending=[False, True]).reset_index(drop=True)


def state_occupancy(trace: Union[Trace, dict]) -> pd.DataFrame:
    """Cycles each component instance spent in each state, one column per instance"""
    records = _document(trace)['records']
    states = pd.DataFrame([record['states'] for record in records])
    if states.empty:
        return states
    return states.apply(lambda column: column.value_counts()).fillna(0).astype(int)
