import pytest  # noqa

import numpy as np

from cavityantenna.lib import optimize as optimize_module
from cavityantenna.lib.errors import DomainError, OpenResonanceError, ValidationError
from cavityantenna.lib.optimize import (
    ParameterSpace,
    SweepGrid,
    dual_resonance_thickness,
    fwhm,
    gradient_bound,
    gradient_tolerance_report,
    local_refine,
    objective,
    optimize,
    pso,
    resonance_maxima,
    resonance_slope,
    resonance_wavelengths,
    resonant_thicknesses,
    sweep,
)


def _bowl(vector):
    x, y = vector
    return 1.0 - (x - 3.0) ** 2 - (y + 1.0) ** 2


@pytest.fixture
def bowl_space():
    return ParameterSpace(None, {'x': (0.0, 5.0), 'y': (-4.0, 2.0)})


@pytest.fixture
def fake_xi(monkeypatch):
    """Replace the collection factor by a cheap function of the stack"""
    def install(func):
        monkeypatch.setattr(optimize_module, 'collection_factor', lambda stack, na: func(stack))
    return install


class TestParameterSpace:
    """Tests for the free-parameter box."""

    def test_vectors(self, case_one):
        """Test conversion between dicts and vectors."""
        space = ParameterSpace(case_one, {'t0': (50.0, 800.0), 'd': (5.0, 100.0)})
        assert space.names == ('t0', 'd')
        np.testing.assert_array_equal(space.lower, [50.0, 5.0])
        np.testing.assert_array_equal(space.as_vector({'d': 20.0, 't0': 100.0}), [100.0, 20.0])
        assert space.as_dict([100.0, 20.0]) == {'t0': 100.0, 'd': 20.0}

    def test_invalid(self, case_one):
        """Test bound validation."""
        with pytest.raises(ValidationError):
            ParameterSpace(case_one, {})
        with pytest.raises(ValidationError):
            ParameterSpace(case_one, {'t0': (100.0, 50.0)})
        with pytest.raises(ValidationError):
            ParameterSpace(case_one, {'theta': (0.0, 90.0)})


def test_infeasible_objective(case_one):
    """Test that a dipole outside the host scores zero."""
    space = ParameterSpace(case_one, {'d': (1.0, 200.0)})
    result = objective({'d': 120.0}, space)
    assert result.xi == 0.0
    assert not result.feasible


class TestPSO:
    """Tests for the particle swarm."""

    def test_finds_maximum(self, bowl_space):
        """Test that the swarm finds the top of a smooth bowl."""
        result = pso(bowl_space, swarm_size=20, iterations=60, seed=1, fitness=_bowl)
        assert result.best_params['x'] == pytest.approx(3.0, abs=1e-2)
        assert result.best_params['y'] == pytest.approx(-1.0, abs=1e-2)
        assert result.best_xi == pytest.approx(1.0, abs=1e-3)

    def test_trace(self, bowl_space):
        """Test the best-so-far trace."""
        result = pso(bowl_space, swarm_size=10, iterations=15, seed=0, fitness=_bowl)
        assert result.trace.size == 16
        assert np.all(np.diff(result.trace) >= 0)
        assert result.evaluations == 160
        assert result.trace[-1] == result.best_xi

    def test_deterministic(self, bowl_space):
        """Test that a fixed seed reproduces the run."""
        first = pso(bowl_space, swarm_size=10, iterations=10, seed=7, fitness=_bowl)
        second = pso(bowl_space, swarm_size=10, iterations=10, seed=7, fitness=_bowl)
        assert first.best_params == second.best_params
        np.testing.assert_array_equal(first.trace, second.trace)

    def test_stays_in_bounds(self):
        """Test that particles never leave the box."""
        space = ParameterSpace(None, {'x': (0.0, 1.0), 'y': (0.0, 1.0)})
        seen = []

        def fitness(vector):
            seen.append(np.array(vector))
            return float(vector[0] + vector[1])

        result = pso(space, swarm_size=8, iterations=20, seed=3, fitness=fitness)
        points = np.array(seen)
        assert np.all(points >= 0.0) and np.all(points <= 1.0)
        assert result.best_xi > 1.8


class TestLocalRefine:
    """Tests for the gradient polish."""

    def test_reaches_optimum(self, bowl_space):
        """Test refinement from a nearby start."""
        result = local_refine({'x': 2.5, 'y': -0.4}, bowl_space, fitness=_bowl)
        assert result.params['x'] == pytest.approx(3.0, abs=1e-3)
        assert result.params['y'] == pytest.approx(-1.0, abs=1e-3)
        assert result.xi >= result.start_xi

    def test_respects_bounds(self):
        """Test that the optimum is clipped to the box."""
        space = ParameterSpace(None, {'x': (0.0, 2.0), 'y': (-4.0, 2.0)})
        result = local_refine([1.0, 0.0], space, fitness=_bowl)
        assert result.params['x'] == pytest.approx(2.0)
        assert result.params['y'] == pytest.approx(-1.0, abs=1e-3)

    def test_never_worse_than_start(self, bowl_space):
        """Test that the start is kept when it is already optimal."""
        result = local_refine([3.0, -1.0], bowl_space, fitness=_bowl)
        assert result.xi == pytest.approx(1.0)
        assert result.xi >= result.start_xi


def test_optimize_refines_swarm_best(bowl_space):
    """Test that refinement starts from the swarm's best point."""
    swarm, refined = optimize(bowl_space, swarm_size=10, iterations=10, seed=2, fitness=_bowl)
    assert refined.start_xi == pytest.approx(swarm.best_xi)
    assert refined.xi >= swarm.best_xi
    assert refined.params['x'] == pytest.approx(3.0, abs=1e-3)
    assert refined.params['y'] == pytest.approx(-1.0, abs=1e-3)


def test_recovers_known_optimum(case_one, fake_xi):
    """Test that swarm and refinement find a planted optimum through the stack objective."""
    fake_xi(lambda stack: float(np.exp(-((stack.t0 - 86.5) / 10.0) ** 2
                                       - ((stack.dipole.depth_nm - 42.9) / 8.0) ** 2)))
    space = ParameterSpace(case_one, {'t0': (60.0, 120.0), 'd': (20.0, 60.0)}, 0.8)

    swarm, refined = optimize(space, swarm_size=20, iterations=40, seed=3, threads=1)
    assert swarm.best_params['t0'] == pytest.approx(86.5, abs=0.5)
    assert swarm.best_params['d'] == pytest.approx(42.9, abs=0.5)
    assert refined.params['t0'] == pytest.approx(86.5, abs=1e-2)
    assert refined.params['d'] == pytest.approx(42.9, abs=1e-2)
    assert refined.xi == pytest.approx(1.0, abs=1e-6)


class TestSweep:
    """Tests for parameter sweeps."""

    def test_grid_and_feasibility(self, case_one, fake_xi):
        """Test the grid shape and the infeasible corner."""
        fake_xi(lambda stack: stack.t0 + stack.dipole.depth_nm)
        grid = sweep(case_one, {'t0': [50.0, 100.0], 'd': [40.0, 60.0, 80.0]})
        assert grid.values.shape == (2, 3)
        assert grid.quantity == 'xi'
        np.testing.assert_array_equal(grid.feasible, [[True, False, False], [True, True, True]])
        np.testing.assert_allclose(grid.values, [[90.0, 0.0, 0.0], [140.0, 160.0, 180.0]])

    def test_transposed(self, case_one, fake_xi):
        """Test reordering the axes of a grid."""
        fake_xi(lambda stack: stack.t0 - stack.dipole.depth_nm)
        grid = sweep(case_one, {'t0': [100.0, 120.0], 'd': [40.0, 60.0, 80.0]})
        flipped = grid.transposed(['d', 't0'])
        assert isinstance(flipped, SweepGrid)
        assert flipped.values.shape == (3, 2)
        assert flipped.values[2, 1] == grid.values[1, 2]
        np.testing.assert_array_equal(flipped.axis('d'), [40.0, 60.0, 80.0])

    def test_reflectance_axis(self, case_one):
        """Test that an angle-of-incidence axis switches to reflectance."""
        grid = sweep(case_one, {'aoi': [0.0, 30.0, 60.0], 'lambda': [600.0, 620.0]})
        assert grid.quantity == 'reflectance'
        assert grid.values.shape == (3, 2)
        assert np.all((grid.values >= 0) & (grid.values <= 1))

    def test_unknown_axis(self, case_one):
        """Test that unknown axes are rejected."""
        with pytest.raises(ValidationError):
            sweep(case_one, {'t9': [1.0]})
        with pytest.raises(ValidationError):
            sweep(case_one, {})


class TestResonances:
    """Tests for resonance analysis of sampled curves."""

    def test_fwhm(self):
        """Test the width of a Gaussian."""
        x = np.linspace(-10.0, 10.0, 2001)
        y = np.exp(-x ** 2 / 2)
        assert fwhm(x, y) == pytest.approx(2 * np.sqrt(2 * np.log(2)), rel=1e-3)

    def test_open_resonance(self):
        """Test that a curve without both flanks has no width."""
        x = np.linspace(0.0, 1.0, 11)
        with pytest.raises(OpenResonanceError):
            fwhm(x, x)
        with pytest.raises(OpenResonanceError):
            fwhm(x, 1.0 - 0.1 * (x - 0.5) ** 2)

    def test_maxima(self):
        """Test parabola-refined maxima positions."""
        x = np.linspace(0.0, 10.0, 1001)
        y = np.exp(-(x - 2.345) ** 2) + 0.5 * np.exp(-(x - 7.5) ** 2)
        np.testing.assert_allclose(resonance_maxima(x, y), [2.345, 7.5], atol=1e-4)

    def test_dual_resonance(self, case_one, fake_xi):
        """Test the smallest thickness resonant at two wavelengths."""
        def comb(t0, period):
            return 0.01 + sum(np.exp(-(t0 - k * period) ** 2 / 50.0) for k in range(1, 9))

        fake_xi(lambda stack: comb(stack.t0, 100.0 if stack.wavelength_nm < 600 else 150.0))
        t0 = dual_resonance_thickness(case_one, [516.0, 620.0], np.arange(50.0, 801.0, 1.0))
        assert t0 == pytest.approx(300.0, abs=0.5)

    def test_dual_resonance_on_a_flank(self, case_one, fake_xi):
        """Test that a resonance on the flank of the other wavelength's resonance counts."""
        def comb(t0, period, shift):
            return 0.01 + sum(np.exp(-(t0 - k * period - shift) ** 2 / 50.0) for k in range(1, 9))

        fake_xi(lambda stack: comb(stack.t0, 100.0, 4.0) if stack.wavelength_nm < 600 else comb(stack.t0, 150.0, 0.0))
        t0 = dual_resonance_thickness(case_one, [516.0, 620.0], np.arange(50.0, 801.0, 1.0))
        assert t0 == pytest.approx(300.0, abs=0.5)

    def test_resonant_thicknesses(self, case_one, fake_xi):
        """Test the thicknesses of every resonance order inside the grid."""
        fake_xi(lambda stack: 0.01 + sum(np.exp(-(stack.t0 - k * 150.0) ** 2 / 50.0) for k in range(1, 9)))
        t0s = resonant_thicknesses(case_one, 620.0, np.arange(50.0, 801.0, 1.0))
        np.testing.assert_allclose(t0s, [150.0, 300.0, 450.0, 600.0, 750.0], atol=0.5)

    def test_resonance_wavelengths(self, case_one, fake_xi):
        """Test the resonant wavelength of a fixed cavity."""
        fake_xi(lambda stack: np.exp(-(stack.wavelength_nm - (500.0 + 0.5 * stack.t0)) ** 2 / 8.0))
        wavelengths = resonance_wavelengths(case_one, 200.0, np.arange(550.0, 651.0, 1.0))
        np.testing.assert_allclose(wavelengths, [600.0], atol=0.05)

    def test_no_dual_resonance(self, case_one, fake_xi):
        """Test that disjoint resonances are reported."""
        fake_xi(lambda stack: np.exp(-(stack.t0 - (200.0 if stack.wavelength_nm < 600 else 500.0)) ** 2 / 50.0))
        with pytest.raises(DomainError):
            dual_resonance_thickness(case_one, [516.0, 620.0], np.arange(50.0, 801.0, 1.0))

    def test_resonance_slope(self, case_one, fake_xi):
        """Test the shift of the resonance wavelength with thickness."""
        fake_xi(lambda stack: np.exp(-(stack.wavelength_nm - (500.0 + 0.5 * stack.t0)) ** 2 / 8.0))
        slope = resonance_slope(case_one, 86.5, np.arange(500.0, 601.0, 1.0))
        assert slope == pytest.approx(0.5, abs=0.02)


class TestGradient:
    """Tests for the thickness-gradient tolerance."""

    def test_bound(self):
        """Test the tolerable gradient for a 6 nm shift under an 800 nm FWHM spot."""
        beam_diameter_um = 0.8 * np.sqrt(2.0 / np.log(2.0))
        assert gradient_bound(1.019, 800.0, 6.0) == pytest.approx(6.0 / (1.019 * beam_diameter_um))
        assert gradient_bound(-1.019, 800.0, 6.0) == gradient_bound(1.019, 800.0, 6.0)
        assert gradient_bound(1.019, 800.0, 6.0) == pytest.approx(4.4, rel=0.15)

    def test_invalid(self):
        """Test the domain of the bound."""
        with pytest.raises(DomainError):
            gradient_bound(0.0, 800.0, 6.0)
        with pytest.raises(DomainError):
            gradient_bound(1.4, 0.0, 6.0)

    def test_report_with_given_slope(self, case_one):
        """Test the report for a measured slope."""
        report = gradient_tolerance_report(case_one, 800.0, 6.0, slope=1.4)
        assert report.bound_nm_per_um == pytest.approx(gradient_bound(1.4, 800.0, 6.0))
        assert report.bound_nm_per_um == pytest.approx(3.154, abs=1e-3)
        assert report.working_point_nm == 86.5
        assert report.slope == 1.4
