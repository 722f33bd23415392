import os

import pytest

from cavityantenna.lib.materials import get_material
from cavityantenna.lib.stack import DipoleSource, Layer, Stack, load_stack

STACKS_DIR = os.path.join(os.path.dirname(__file__), '..', 'stacks')


def stack_path(name):
    return os.path.join(STACKS_DIR, name)


@pytest.fixture
def stacks_dir():
    return STACKS_DIR


@pytest.fixture
def case_one():
    """Silver antenna, horizontal dipole, vacuum on both sides"""
    return load_stack(stack_path('caseI.json'))


@pytest.fixture
def bulk_stack():
    """Dipole under a single diamond/vacuum interface"""
    return load_stack(stack_path('bulk.json'))


@pytest.fixture
def homogeneous_stack():
    """Dipole in unbounded diamond"""
    diamond = get_material('diamond')
    return Stack(
        upper=diamond,
        layers_above=(),
        host=Layer(diamond, 400.0),
        layers_below=(),
        lower=diamond,
        dipole=DipoleSource(620.0, 90.0, 200.0),
    )


@pytest.fixture
def membrane_stack():
    """Air over a diamond membrane on a silica substrate"""
    return Stack(
        upper=get_material('air'),
        layers_above=(),
        host=Layer(get_material('diamond'), 437.0),
        layers_below=(),
        lower=get_material('silica'),
        dipole=DipoleSource(620.0, 90.0, 100.0),
    )
