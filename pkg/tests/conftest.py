import os

import pytest

from Bipforge.Toolchain.dsl import instantiate_template, parse_model

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def load_fixture(name, params=None):
    with open(fixture_path(name), 'r', encoding='utf-8') as f:
        text = f.read()
    return parse_model(instantiate_template(text, params), file=name)


@pytest.fixture
def trigger():
    return load_fixture('trigger.bip')


@pytest.fixture
def ambiguous():
    return load_fixture('ambiguous.bip')


@pytest.fixture
def complete():
    return load_fixture('complete.bip')
