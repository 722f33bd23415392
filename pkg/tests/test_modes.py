import pytest  # noqa
import math

import numpy as np

from cavityantenna.lib.dipole import AngularSpectrum, angular_spectrum
from cavityantenna.lib.errors import DomainError, NoMirrorError, NotALeakyModeError
from cavityantenna.lib.materials import constant, get_material
from cavityantenna.lib.modes import (
    ModeKind,
    classify,
    find_modes,
    leaky_to_angle,
    mirror_reflection,
    penetration_depth,
    resonance_check,
    slab_modes_oracle,
)
from cavityantenna.lib.stack import Substack, load_stack, with_params
from cavityantenna.lib.tmm import Polarization


def _lorentzian_spectrum(centers, width=2e-3):
    grid = np.arange(0.0, 3.0, 2e-4)
    density_s = sum(1.0 / (1 + ((grid - c) / width) ** 2) for c in centers)
    zeros = np.zeros_like(grid)
    return AngularSpectrum(grid, density_s, zeros, zeros, zeros, 620.0, 2.414)


class TestClassify:
    """Tests for mode classification."""

    def test_regions(self):
        """Test the three n_eff regions."""
        assert classify(0.5, 2.414, 1.0) is ModeKind.LEAKY
        assert classify(1.8, 2.414, 1.0) is ModeKind.GUIDED
        assert classify(2.6, 2.414, 1.0) is ModeKind.SPP

    def test_leaky_angle(self):
        """Test the propagation angle of a leaky mode."""
        assert leaky_to_angle(0.5, 1.0) == pytest.approx(30.0)
        with pytest.raises(NotALeakyModeError):
            leaky_to_angle(1.2, 1.0)


class TestFindModes:
    """Tests for peak detection on a spectrum."""

    def test_synthetic_peaks(self):
        """Test that isolated peaks are found and classified."""
        modes = find_modes(_lorentzian_spectrum([0.45, 1.7, 2.8]))
        assert [m.kind for m in modes] == [ModeKind.LEAKY, ModeKind.GUIDED, ModeKind.SPP]
        for mode, center in zip(modes, [0.45, 1.7, 2.8]):
            assert mode.n_eff == pytest.approx(center, abs=2e-4)
            assert mode.fwhm_n_eff == pytest.approx(4e-3, rel=0.05)
            assert mode.polarization is Polarization.S

    def test_broad_resonance_beside_sharp_peak(self):
        """Test that a broad leaky resonance is kept next to a dominant narrow peak."""
        grid = np.arange(0.0, 3.0, 1e-3)
        density_s = 1.0 / (1 + ((grid - 0.33) / 0.15) ** 2) + 10.0 / (1 + ((grid - 2.8) / 2e-3) ** 2)
        zeros = np.zeros_like(grid)
        modes = find_modes(AngularSpectrum(grid, density_s, zeros, zeros, zeros, 620.0, 2.414))
        assert [m.kind for m in modes] == [ModeKind.LEAKY, ModeKind.SPP]
        assert modes[0].n_eff == pytest.approx(0.33, abs=1e-4)
        assert modes[0].fwhm_n_eff > 0.1

    def test_flat_spectrum(self):
        """Test that a flat spectrum has no modes."""
        assert find_modes(_lorentzian_spectrum([])) == []

    def test_guided_modes_of_a_lossy_slab(self, stacks_dir):
        """Test that the spectrum peaks sit on the guided modes of a symmetric slab."""
        stack = load_stack(f"{stacks_dir}/slab350.json")
        spectrum = angular_spectrum(stack, 2.9)
        # skip the light-line edge at n_eff = 1
        guided = [m for m in find_modes(spectrum) if m.kind is ModeKind.GUIDED and m.n_eff > 1.02]
        oracle = slab_modes_oracle(2.414, 1.0, 350.0, 620.0)

        assert guided
        for mode in guided:
            matches = [n for n, pol in oracle if pol is mode.polarization]
            assert min(abs(mode.n_eff - n) for n in matches) < 5e-3

    @pytest.mark.slow
    @pytest.mark.parametrize("t0", [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0, 900.0, 1000.0])
    def test_guided_modes_across_thickness(self, stacks_dir, t0):
        """Test that guided peaks match the slab dispersion for host thicknesses up to a micron."""
        slab = load_stack(f"{stacks_dir}/slab350.json")
        stack = with_params(slab, t0=t0, d=0.37 * t0)
        spectrum = angular_spectrum(stack, 2.9)
        guided = [m for m in find_modes(spectrum) if m.kind is ModeKind.GUIDED
                  and m.n_eff > 1.02 and abs(m.n_eff - 2.414) > 5e-3]
        oracle = slab_modes_oracle(2.414, 1.0, t0, 620.0)

        assert guided
        for mode in guided:
            matches = [n for n, pol in oracle if pol is mode.polarization]
            assert matches
            assert min(abs(mode.n_eff - n) for n in matches) < 1e-3


class TestSlabOracle:
    """Tests for the symmetric slab dispersion."""

    def test_mode_count(self):
        """Test the number and order of guided modes."""
        modes = slab_modes_oracle(2.414, 1.0, 350.0, 620.0)
        assert len(modes) == 6
        assert all(1.0 < n < 2.414 for n, _ in modes)
        assert modes[0][1] is Polarization.S
        assert [n for n, _ in modes] == sorted([n for n, _ in modes], reverse=True)

    def test_te_above_tm(self):
        """Test that each TE mode lies above its TM partner."""
        modes = slab_modes_oracle(2.414, 1.0, 350.0, 620.0)
        te = sorted((n for n, pol in modes if pol is Polarization.S), reverse=True)
        tm = sorted((n for n, pol in modes if pol is Polarization.P), reverse=True)
        assert all(s > p for s, p in zip(te, tm))

    def test_needs_index_contrast(self):
        """Test that a slab needs a higher core index."""
        with pytest.raises(DomainError):
            slab_modes_oracle(1.0, 1.5, 350.0, 620.0)


class TestMirrors:
    """Tests for penetration depth and the resonance condition."""

    def test_ideal_metal(self):
        """Test that a near-perfect conductor has almost no penetration depth."""
        mirror = Substack(get_material('diamond'), (), constant('conductor', 1e-3, 1e3))
        for polarization in (Polarization.S, Polarization.P):
            r = mirror_reflection(mirror, 0.0, 620.0, polarization)
            assert r == pytest.approx(-1.0, abs=1e-2)
            assert penetration_depth(mirror, 0.0, 620.0, polarization) == pytest.approx(0.0, abs=0.5)

    def test_silver_penetration(self):
        """Test that a silver mirror penetration depth is positive and below a half wave."""
        mirror = Substack(get_material('diamond'), (), get_material('silver-literature'))
        depth = penetration_depth(mirror, 0.3, 620.0, Polarization.S)
        assert 0 < depth < 310.0

    def test_no_mirror(self):
        """Test that an index-matched substack is not a mirror."""
        diamond = get_material('diamond')
        with pytest.raises(NoMirrorError):
            penetration_depth(Substack(diamond, (), diamond), 0.0, 620.0, Polarization.S)

    def test_resonance_check(self):
        """Test the Fabry-Perot order and residual."""
        check = resonance_check(100.0, 2.0, 0.0, 55.0, 55.0, 620.0)
        assert check.order_q == 1
        assert check.rhs_nm == pytest.approx(310.0)
        assert check.residual_nm == pytest.approx(0.0)

        detuned = resonance_check(250.0, 2.0, 1.0, 10.0, 10.0, 620.0)
        assert detuned.rhs_nm == pytest.approx(250.0 * math.sqrt(3.0) + 20.0)
        assert detuned.order_q == 1
        assert detuned.lhs_nm == 310.0
