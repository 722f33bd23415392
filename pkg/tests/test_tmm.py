import pytest  # noqa
import math
from dataclasses import replace

import numpy as np

from cavityantenna.lib.errors import ValidationError
from cavityantenna.lib.materials import complex_index, constant, get_material
from cavityantenna.lib.stack import Layer, Substack, full_substack, with_params
from cavityantenna.lib.tmm import (
    PlaneWaveChannel,
    Polarization,
    angle_averaged_reflectance,
    cascade,
    compose,
    fresnel_interface,
    kz,
    normal_incidence_reflectance,
    normal_wavenumber,
    reflectance_spectrum,
    stack_reflectance,
    substack_coefficients,
    unpolarized_reflectance,
    wavenumber,
)


def test_polarization_parse():
    """Test parsing polarization names."""
    assert Polarization.parse('S') is Polarization.S
    assert Polarization.parse(Polarization.P) is Polarization.P
    with pytest.raises(ValidationError):
        Polarization.parse('x')


def test_normal_wavenumber_branch():
    """Test that k_z decays into the medium for evanescent and lossy channels."""
    k0 = wavenumber(620.0)
    values = normal_wavenumber(1.0, [0.0, 0.5, 2.0], k0)
    assert values[0] == pytest.approx(k0)
    assert values[1].real == pytest.approx(k0 * math.sqrt(0.75))
    assert values[2].real == pytest.approx(0.0)
    assert values[2].imag == pytest.approx(k0 * math.sqrt(3.0))
    lossy = normal_wavenumber(0.05 + 4.21j, [0.0, 1.5], k0)
    assert np.all(lossy.imag > 0)


def test_kz_scalar_channel():
    """Test that a scalar channel gives a scalar k_z."""
    channel = PlaneWaveChannel(620.0, 0.0)
    assert kz(2.414, channel) == pytest.approx(2.414 * channel.k0)


class TestFresnel:
    """Tests for single interfaces."""

    def test_normal_incidence(self):
        """Test air to diamond at normal incidence in both polarizations."""
        for polarization in ('s', 'p'):
            r, t = fresnel_interface(1.0, 2.414, PlaneWaveChannel(620.0, 0.0, polarization))
            assert r == pytest.approx(-1.414 / 3.414)
            assert t == pytest.approx(2.0 / 3.414)

    def test_brewster_angle(self):
        """Test that p reflection vanishes at the Brewster angle."""
        n_eff = math.sin(math.atan(2.414))
        r_p, _ = fresnel_interface(1.0, 2.414, PlaneWaveChannel(620.0, n_eff, 'p'))
        r_s, _ = fresnel_interface(1.0, 2.414, PlaneWaveChannel(620.0, n_eff, 's'))
        assert abs(r_p) < 1e-12
        assert abs(r_s) > 0.5

    def test_total_internal_reflection(self):
        """Test unit reflectance beyond the critical angle."""
        n_eff = np.array([1.2, 1.8, 2.3])
        for polarization in ('s', 'p'):
            r, _ = fresnel_interface(2.414, 1.0, PlaneWaveChannel(620.0, n_eff, polarization))
            np.testing.assert_allclose(np.abs(r), 1.0, atol=1e-12)


class TestStackReflectance:
    """Tests for the reflectance of whole stacks."""

    def test_energy_conservation(self, membrane_stack):
        """Test R + T = 1 for a lossless stack."""
        angles = np.linspace(0.0, 85.0, 18)
        for polarization in ('s', 'p'):
            r, t, a = stack_reflectance(membrane_stack, 620.0, angles, polarization)
            np.testing.assert_allclose(a, 0.0, atol=1e-12)
            assert np.all((r >= 0) & (r <= 1))

    def test_absorbing_stack(self, case_one):
        """Test that silver layers absorb and block transmission."""
        r, t, a = stack_reflectance(case_one, 620.0, 0.0, 's')
        assert isinstance(r, float)
        assert 0 < a < 1
        assert t < 1e-3
        assert r + t + a == pytest.approx(1.0)

    def test_single_interface_limit(self, membrane_stack):
        """Test that index matching removes the membrane interface."""
        matched = with_params(membrane_stack, t0=1000.0)
        matched = replace(matched, lower=get_material('diamond'))
        r, _, _ = stack_reflectance(matched, 620.0, 0.0, 's')
        assert r == pytest.approx((1.414 / 3.414) ** 2)

    def test_unpolarized_average(self, membrane_stack):
        """Test that the unpolarized reflectance is the mean of s and p."""
        r_s = stack_reflectance(membrane_stack, 620.0, 40.0, 's')[0]
        r_p = stack_reflectance(membrane_stack, 620.0, 40.0, 'p')[0]
        assert unpolarized_reflectance(membrane_stack, 620.0, 40.0) == pytest.approx(0.5 * (r_s + r_p))

    def test_angle_average_at_zero_cone(self, membrane_stack):
        """Test that a zero cone gives the normal-incidence value."""
        expected = unpolarized_reflectance(membrane_stack, 620.0, 0.0)
        assert angle_averaged_reflectance(membrane_stack, 620.0, 0.0) == pytest.approx(float(expected))
        averaged = angle_averaged_reflectance(membrane_stack, 620.0, 30.0)
        assert 0 < averaged < 1

    def test_normal_incidence_vectorized(self, membrane_stack):
        """Test the wavelength-vectorized normal-incidence reflectance."""
        wavelengths = np.linspace(550.0, 700.0, 7)
        substack = full_substack(membrane_stack)
        indices = [np.full(wavelengths.size, complex_index(m, 620.0))
                   for m in (substack.incidence, *(l.material for l in substack.layers), substack.exit)]
        fast = normal_incidence_reflectance(indices, [437.0], wavelengths)
        for wavelength, value in zip(wavelengths, fast):
            assert value == pytest.approx(stack_reflectance(membrane_stack, wavelength, 0.0, 's')[0])

    def test_spectrum_matches_pointwise(self, case_one):
        """Test the wavelength spectrum against single-wavelength evaluations."""
        wavelengths = [560.0, 600.0, 620.0, 650.0]
        r, t, a = reflectance_spectrum(case_one, wavelengths, 30.0, 'p')
        assert r.shape == t.shape == a.shape == (4,)
        for i, wavelength in enumerate(wavelengths):
            expected = stack_reflectance(case_one, wavelength, 30.0, 'p')
            assert (r[i], t[i], a[i]) == pytest.approx(expected)


class TestComposition:
    """Tests for multilayer composition."""

    def test_cascade_matches_direct(self):
        """Test that cascading two substacks equals composing them at once."""
        diamond, silica = get_material('diamond'), get_material('silica')
        silver, air = get_material('silver-literature'), get_material('air')
        front = Substack(diamond, (Layer(silver, 30.0),), silica)
        back = Substack(silica, (Layer(silica, 100.0), Layer(silver, 40.0)), air)
        whole = Substack(diamond, (Layer(silver, 30.0), Layer(silica, 100.0), Layer(silver, 40.0)), air)
        channel = PlaneWaveChannel(620.0, np.array([0.0, 0.3, 0.9, 1.6]), 's')

        r, t = cascade(substack_coefficients(front, channel), substack_coefficients(front.reversed(), channel),
                       substack_coefficients(back, channel))
        direct = substack_coefficients(whole, channel)
        np.testing.assert_allclose(r, direct.r, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(t, direct.t, rtol=1e-9, atol=1e-12)

    def test_thick_evanescent_layer_stays_finite(self):
        """Test that deep evanescent channels through thick layers do not overflow."""
        k0 = wavenumber(620.0)
        n_eff = np.array([3.0, 10.0, 40.0])
        for polarization in (Polarization.S, Polarization.P):
            raw = compose([2.414, 1.0, 2.414], [5000.0], n_eff, k0, polarization)
            assert np.all(np.isfinite(raw.r))
            assert np.all(np.isfinite(raw.t))
            np.testing.assert_allclose(np.abs(raw.t), 0.0, atol=1e-12)

    def test_zero_thickness_layer(self):
        """Test that a vanishing layer is transparent."""
        k0 = wavenumber(620.0)
        n_eff = np.array([0.0, 0.5, 1.5])
        with_layer = compose([2.414, 1.464, 1.0], [0.0], n_eff, k0, Polarization.P)
        without = compose([2.414, 1.0], [], n_eff, k0, Polarization.P)
        np.testing.assert_allclose(with_layer.r, without.r, atol=1e-12)

    def test_index_count(self):
        """Test that every layer needs an index."""
        with pytest.raises(ValueError):
            compose([1.0, 2.0], [10.0], 0.0, wavenumber(620.0), Polarization.S)

    @pytest.mark.parametrize('split', [0, 2, 3])
    def test_split_position_is_irrelevant(self, split):
        """Test that cascading gives the direct result wherever the stack is cut."""
        silver, silica = get_material('silver-literature'), get_material('silica')
        layers = (Layer(silica, 50.0), Layer(silver, 30.0), Layer(silica, 100.0), Layer(get_material('diamond'), 80.0),
                  Layer(silver, 40.0))
        diamond, air = get_material('diamond'), get_material('air')
        medium = layers[split].material
        front = Substack(diamond, layers[:split], medium)
        back = Substack(medium, layers[split:], air)
        channel = PlaneWaveChannel(620.0, np.array([0.0, 0.4, 0.95, 1.3, 2.2]), 's')

        r, t = cascade(substack_coefficients(front, channel), substack_coefficients(front.reversed(), channel),
                       substack_coefficients(back, channel))
        direct = substack_coefficients(Substack(diamond, layers, air), channel)
        np.testing.assert_allclose(r, direct.r, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(t, direct.t, rtol=1e-9, atol=1e-12)


def _film(t0, n_film=2.414):
    return Substack(get_material('air'), (Layer(constant('film', n_film), t0),), get_material('air'))


class TestThinFilm:
    """A single film in air against the Airy formula."""

    def test_half_wave_film_is_invisible(self):
        """Test that a half-wave film does not reflect at normal incidence."""
        for polarization in ('s', 'p'):
            coefficients = substack_coefficients(_film(620.0 / (2 * 2.414)), PlaneWaveChannel(620.0, 0.0, polarization))
            assert coefficients.reflectance == pytest.approx(0.0, abs=1e-9)
            assert coefficients.transmittance == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize('t0', [37.0, 100.0, 250.0, 611.0])
    def test_airy_reflectance(self, t0):
        """Test the reflectance of a lossless film at normal incidence."""
        r1 = ((2.414 - 1.0) / (2.414 + 1.0)) ** 2
        finesse = 4 * r1 / (1 - r1) ** 2
        phase = 2 * math.pi * 2.414 * t0 / 620.0
        expected = finesse * math.sin(phase) ** 2 / (1 + finesse * math.sin(phase) ** 2)
        coefficients = substack_coefficients(_film(t0), PlaneWaveChannel(620.0, 0.0, 's'))
        assert coefficients.reflectance == pytest.approx(expected, abs=1e-9)


class TestPowerFlow:
    """Energy bookkeeping of plane-wave channels."""

    def _stacks(self):
        diamond, silica, air = get_material('diamond'), get_material('silica'), get_material('air')
        silver = get_material('silver-literature')
        lossless = Substack(diamond, (Layer(silica, 107.6), Layer(diamond, 250.0), Layer(silica, 60.0)), air)
        lossy = Substack(diamond, (Layer(silver, 42.4), Layer(silica, 107.6)), air)
        return lossless, lossy

    def test_energy_conservation(self):
        """Test R + T = 1 for a lossless stack and R + T <= 1 with silver, over 10^4 channels."""
        rng = np.random.default_rng(7)
        lossless, lossy = self._stacks()
        for polarization in ('s', 'p'):
            channel = PlaneWaveChannel(620.0, rng.uniform(0.0, 2.4, 5000), polarization)
            clear = substack_coefficients(lossless, channel)
            np.testing.assert_allclose(clear.reflectance + clear.transmittance, 1.0, atol=1e-9)
            absorbing = substack_coefficients(lossy, channel)
            absorptance = 1.0 - absorbing.reflectance - absorbing.transmittance
            assert np.all(absorptance > -1e-12)
            assert np.all(absorbing.reflectance <= 1.0 + 1e-12)

    def test_reciprocity(self):
        """Test that transmittance is the same from either side."""
        channel_s = PlaneWaveChannel(620.0, np.linspace(0.0, 0.99, 12), 's')
        channel_p = PlaneWaveChannel(620.0, np.linspace(0.0, 0.99, 12), 'p')
        for substack in self._stacks():
            for channel in (channel_s, channel_p):
                forward = substack_coefficients(substack, channel).transmittance
                backward = substack_coefficients(substack.reversed(), channel).transmittance
                np.testing.assert_allclose(forward, backward, rtol=1e-9, atol=1e-12)
