import pytest

from app.utils.functions import build_excitation, parse_excitation, parse_quantity, split_list
from app.utils.errors import ParameterError


@pytest.mark.parametrize('text, kind, expected', [
    ('40km', 'length', 40e3),
    ('10 m', 'length', 10.0),
    ('0.1us', 'time', 1e-7),
    ('5ms', 'time', 5e-3),
    ('10kohm', 'impedance', 1e4),
    ('100ohm.m', 'resistivity', 100.0),
    ('90deg', 'angle', 90.0),
    ('1e3Hz', 'frequency', 1e3),
    ('10MHz', 'frequency', 1e7),
])
def test_quantities_convert_to_si(text, kind, expected):
    assert parse_quantity(text, kind) == pytest.approx(expected)


@pytest.mark.parametrize('text', ['40', 'km', '40 furlongs', '4.0.0km'])
def test_quantities_need_a_known_suffix(text):
    with pytest.raises(ParameterError):
        parse_quantity(text, 'length')


def test_default_lightning_excitation():
    descriptor = parse_excitation('lightning')
    assert descriptor.kind == 'lightning'
    assert descriptor.alpha == 20e-6 and descriptor.beta == 3e-6


def test_rect_excitation_parameters():
    descriptor = parse_excitation('rect:A=5000,width=2e-6')
    assert (descriptor.amplitude, descriptor.width) == (5000.0, 2e-6)
    pulse = build_excitation(descriptor, 1e-7, 1e-5)
    assert pulse.samples.max() == pytest.approx(5000.0)


@pytest.mark.parametrize('spec', ['step', 'rect:width=wide', 'lightning:gamma=1'])
def test_bad_excitations(spec):
    with pytest.raises(ParameterError):
        parse_excitation(spec)


def test_split_list_drops_blanks():
    assert split_list('PG-a, PP-bc,,3P ') == ('PG-a', 'PP-bc', '3P')
