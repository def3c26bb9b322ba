import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import special

from biphoton.errors import DimensionMismatch, GeometryError, GridMismatch, InvalidDistance, SamplingViolation
from biphoton.fresnel import (
    Aperture,
    FreeSpace,
    OpticalArm,
    ParaxialWarning,
    SampledField,
    ThinLens,
    TransverseGrid,
    apply_element,
    bessel_j1,
    check_sampling,
    free_propagate,
    gaussian_phase,
    kernel_matrix,
    point_source_response,
    propagate_arm,
    somb,
)
from biphoton.metrics import first_zero, fwhm

import oracles

LAMBDA = 702.2e-9
finite = st.floats(-1e3, 1e3, allow_nan=False)


# --- Gaussian phase factor ----------------------------------------------------

def test_gaussian_phase_zero_curvature_is_one():
    assert gaussian_phase(123.4, 0.0) == 1


def test_gaussian_phase_direct_value():
    assert abs(gaussian_phase(1.0, np.pi) - 1j) < 1e-15


@given(finite, finite)
def test_gaussian_phase_conjugation(a, b):
    assert abs(gaussian_phase(a * a, b) * gaussian_phase(a * a, -b) - 1) < 1e-12


@given(finite, finite)
def test_gaussian_phase_unit_magnitude(a, b):
    assert abs(abs(gaussian_phase(a, b)) - 1) < 1e-12


# --- somb and J1 --------------------------------------------------------------

def test_somb_at_origin():
    assert somb(0.0) == 1.0


def test_somb_first_root_is_zero():
    assert abs(somb(oracles.j1_first_root())) < 1e-9


@given(st.floats(-200, 200, allow_nan=False))
def test_somb_even(x):
    assert somb(-x) == somb(x)


def test_j1_matches_reference():
    x = np.concatenate([np.linspace(-60, 60, 20001), [7.999, 8.0, 11.999, 12.0, 12.001]])
    assert np.max(np.abs(bessel_j1(x) - special.j1(x))) < 1e-10


def test_somb_matches_reference():
    x = np.linspace(1e-6, 80, 20001)
    assert np.max(np.abs(somb(x) - 2 * special.j1(x) / x)) < 1e-10


def test_somb_preserves_shape():
    x = np.linspace(0, 5, 12).reshape(3, 4)
    assert somb(x).shape == (3, 4)
    assert isinstance(somb(2.0), float)


# --- grids and fields ---------------------------------------------------------

@given(st.integers(2, 500), st.floats(1e-7, 1e-2), st.floats(-1e-2, 1e-2))
def test_grid_coordinates(n, dx, c):
    g = TransverseGrid(n, dx, 1, (c,))
    x = g.axis_coords()
    assert g.extent == pytest.approx(n * dx)
    assert x[0] == pytest.approx(c - n / 2 * dx, abs=1e-15)
    assert np.allclose(np.diff(x), dx)


@pytest.mark.parametrize("args", [(1, 1e-6), (10, 0.0), (10, -1e-6), (2.5, 1e-6)])
def test_grid_rejects_bad_values(args):
    with pytest.raises(ValueError):
        TransverseGrid(*args)


def test_grid_rejects_3d():
    with pytest.raises(DimensionMismatch):
        TransverseGrid(4, 1e-6, 3)


def test_centered_grid_is_symmetric():
    for n in (6, 7):
        x = TransverseGrid.centered(n, 1e-3).axis_coords()
        assert np.allclose(x, -x[::-1])


def test_nearest_index_off_grid():
    with pytest.raises(GeometryError):
        TransverseGrid.centered(10, 1e-6).nearest_index(1.0)


def test_field_shape_and_finiteness():
    g = TransverseGrid.centered(8, 1e-6)
    with pytest.raises(GridMismatch):
        SampledField(g, np.ones(7), LAMBDA)
    with pytest.raises(ValueError):
        SampledField(g, np.full(8, np.nan), LAMBDA)
    with pytest.raises(ValueError):
        SampledField(g, np.ones(8), -1.0)


def test_element_validation():
    with pytest.raises(InvalidDistance):
        FreeSpace(0.0)
    with pytest.raises(InvalidDistance):
        FreeSpace(-1.0)
    with pytest.raises(ValueError):
        ThinLens(0.0)
    g = TransverseGrid.centered(4, 1e-6)
    with pytest.raises(ValueError):
        Aperture(np.full(4, 1.5), g)
    with pytest.raises(GridMismatch):
        Aperture(np.ones(5), g)


def test_arm_length():
    arm = OpticalArm((FreeSpace(0.3), ThinLens(0.2), FreeSpace(0.6)))
    assert arm.total_axial_length == pytest.approx(0.9)
    assert OpticalArm().total_axial_length == 0


# --- free propagation ---------------------------------------------------------

@pytest.mark.filterwarnings("ignore::biphoton.fresnel.ParaxialWarning")
def test_plane_wave_interior():
    # 16 mm of input, observed only in the central 2 mm (edge ripple decays with distance)
    g = TransverseGrid.centered(20000, 0.8e-6)
    z = 0.02
    obs = TransverseGrid.centered(201, 10e-6)
    interior = free_propagate(SampledField(g, np.ones(g.n), LAMBDA), z, obs).amplitude
    carrier = np.exp(2j * np.pi * z / LAMBDA)
    assert np.max(np.abs(interior / carrier - 1)) <= 1e-2


def test_gaussian_beam_waist():
    w0 = 0.15e-3
    g = TransverseGrid.centered(1500, 4e-6)
    x = g.axis_coords()
    field = SampledField(g, np.exp(-x**2 / w0**2), LAMBDA)
    z = np.pi * w0**2 / LAMBDA
    out = free_propagate(field, z)
    w = oracles.second_moment_width(x, out.intensity())
    assert w == pytest.approx(oracles.gaussian_beam_width(w0, z, LAMBDA), rel=0.01)


def test_cascade_through_intermediate_grid():
    g = TransverseGrid.centered(800, 5e-6)
    mid = TransverseGrid.centered(1000, 5e-6)
    x = g.axis_coords()
    field = SampledField(g, np.exp(-x**2 / (0.2e-3) ** 2), LAMBDA)
    two = free_propagate(free_propagate(field, 0.1, mid), 0.15, g)
    one = free_propagate(field, 0.25)
    assert np.linalg.norm(two.amplitude - one.amplitude) / np.linalg.norm(one.amplitude) < 1e-3
    assert two.z == pytest.approx(0.25)


def test_lens_focuses_plane_wave():
    g = TransverseGrid.centered(1001, 4e-6)
    f = 0.1
    field = apply_element(SampledField(g, np.ones(g.n), LAMBDA), ThinLens(f))
    out = free_propagate(field, f)
    assert np.argmax(np.abs(out.amplitude)) == g.nearest_index(0.0)[0]


def test_all_ones_aperture_is_identity():
    g = TransverseGrid.centered(64, 1e-6)
    rng = np.random.default_rng(1)
    field = SampledField(g, rng.normal(size=64) + 1j * rng.normal(size=64), LAMBDA)
    out = apply_element(field, Aperture(np.ones(64), g))
    assert out.amplitude.tobytes() == field.amplitude.tobytes()


def test_single_slit_first_zero():
    a, z = 0.16e-3, 0.5
    src = TransverseGrid.centered(160, 1e-6)
    x = src.axis_coords()
    field = SampledField(src, (np.abs(x) <= a / 2).astype(float), LAMBDA)
    obs = TransverseGrid.centered(1001, 10e-6)
    out = free_propagate(field, z, obs)
    zero = first_zero(obs.axis_coords(), out.intensity(), origin=0.0)
    assert abs(zero - LAMBDA * z / a) <= obs.spacing


def test_aperture_resampled_and_must_cover():
    g = TransverseGrid.centered(10, 1e-6)
    fine = TransverseGrid.centered(20, 0.5e-6)
    field = SampledField(g, np.ones(10), LAMBDA)
    out = apply_element(field, Aperture(np.full(20, 0.5), fine))
    assert np.allclose(out.amplitude, 0.5)
    small = TransverseGrid.centered(4, 1e-6)
    with pytest.raises(GridMismatch):
        apply_element(field, Aperture(np.ones(4), small))


def test_lens_aperture_zeroes_outside():
    g = TransverseGrid.centered(100, 1e-5)
    out = apply_element(SampledField(g, np.ones(100), LAMBDA), ThinLens(0.1, 2e-4))
    r = np.abs(g.axis_coords())
    assert np.all(out.amplitude[r > 2e-4] == 0)
    assert np.allclose(np.abs(out.amplitude[r <= 2e-4]), 1)


def test_invalid_distance():
    g = TransverseGrid.centered(8, 1e-6)
    field = SampledField(g, np.ones(8), LAMBDA)
    for d in (0.0, -0.1, np.inf):
        with pytest.raises(InvalidDistance):
            free_propagate(field, d)


def test_sampling_violation_and_suggested_grid():
    g = TransverseGrid.centered(100, 1e-4)
    field = SampledField(g, np.ones(100), LAMBDA)
    with pytest.raises(SamplingViolation) as info:
        free_propagate(field, 0.01)
    n = info.value.min_samples
    assert n > 100 and info.value.max_spacing < 1e-4
    fixed = TransverseGrid.centered(n, g.extent / n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParaxialWarning)
        check_sampling(fixed, fixed, LAMBDA, 0.01)


def test_paraxial_warning():
    g = TransverseGrid.centered(100, 1e-6)
    with pytest.warns(ParaxialWarning):
        check_sampling(g, g, LAMBDA, 2e-4)


def test_dimension_mismatch():
    g = TransverseGrid.centered(8, 1e-6)
    field = SampledField(g, np.ones(8), LAMBDA)
    with pytest.raises(DimensionMismatch):
        free_propagate(field, 0.1, TransverseGrid.centered(8, 1e-6, 2))


def test_2d_propagation_is_separable_product():
    g1 = TransverseGrid.centered(64, 5e-6)
    g2 = TransverseGrid.centered(64, 5e-6, 2)
    x = g1.axis_coords()
    a = np.exp(-x**2 / (50e-6) ** 2)
    b = np.exp(-(x - 20e-6) ** 2 / (70e-6) ** 2)
    out1a = free_propagate(SampledField(g1, a, LAMBDA), 0.05).amplitude
    out1b = free_propagate(SampledField(g1, b, LAMBDA), 0.05).amplitude
    out2 = free_propagate(SampledField(g2, np.outer(b, a), LAMBDA), 0.05).amplitude
    carrier = np.exp(2j * np.pi * 0.05 / LAMBDA)
    assert np.allclose(out2, np.outer(out1b, out1a) / carrier, rtol=0, atol=1e-12 * np.abs(out2).max())


# --- point-source responses -----------------------------------------------------

def test_point_source_matches_kernel():
    z = 0.2
    obs = TransverseGrid.centered(501, 4e-6)
    x0 = 0.1e-3
    resp = point_source_response(OpticalArm((FreeSpace(z),)), x0, LAMBDA, obs)
    ref = oracles.fresnel_kernel(obs.axis_coords(), np.array([x0]), LAMBDA, z)[:, 0]
    assert np.max(np.abs(resp.amplitude - ref)) / np.max(np.abs(ref)) < 1e-6


def test_point_source_needs_leading_free_space():
    obs = TransverseGrid.centered(11, 1e-6)
    with pytest.raises(GeometryError):
        point_source_response(OpticalArm((ThinLens(0.1),)), 0.0, LAMBDA, obs)


def _imaging_arm(s_o, f, s_i):
    lens_grid = TransverseGrid.centered(2000, 5e-6)
    return OpticalArm((FreeSpace(s_o, lens_grid), ThinLens(f, 5e-3), FreeSpace(s_i)))


def test_imaging_point_to_point():
    s_o, f, s_i = 0.6, 0.4, 1.2
    x0 = 0.5e-3
    obs = TransverseGrid.centered(2001, 2e-6)
    resp = point_source_response(_imaging_arm(s_o, f, s_i), x0, LAMBDA, obs)
    peak = obs.axis_coords()[np.argmax(resp.intensity())]
    assert abs(peak - (-(s_i / s_o) * x0)) <= obs.spacing


def test_defocus_widens_response():
    s_o, f, s_i = 0.6, 0.4, 1.2
    obs = TransverseGrid.centered(2001, 2e-6)
    x = obs.axis_coords()
    sharp = point_source_response(_imaging_arm(s_o, f, s_i), 0.0, LAMBDA, obs)
    blurred = point_source_response(_imaging_arm(s_o, f, 0.75 * s_i), 0.0, LAMBDA, obs)
    assert fwhm(x, blurred.intensity()) > fwhm(x, sharp.intensity())


def test_propagate_arm_without_free_space_resamples():
    g = TransverseGrid.centered(10, 1e-6)
    out_grid = TransverseGrid.centered(20, 0.5e-6)
    field = SampledField(g, np.arange(10.0), LAMBDA)
    out = propagate_arm(field, OpticalArm(), out_grid)
    assert out.grid == out_grid and out.amplitude.shape == (20,)


# --- invariants -------------------------------------------------------------------

N_PROP = 64
GRID = TransverseGrid.centered(N_PROP, 5e-6)
amps = arrays(complex, N_PROP, elements=st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                            allow_infinity=False))


@given(amps, amps, st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_free_propagation_is_linear(a, b, c):
    prop = lambda v: free_propagate(SampledField(GRID, v, LAMBDA), 0.05).amplitude  # noqa: E731
    lhs = prop(a + c * b)
    rhs = prop(a) + c * prop(b)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-9 * (1 + np.abs(rhs).max()))


@given(amps, amps)
def test_elements_are_linear(a, b):
    rng = np.random.default_rng(0)
    mask = Aperture(rng.uniform(0, 1, N_PROP) * np.exp(1j * rng.uniform(0, 6, N_PROP)), GRID)
    for el in (mask, ThinLens(0.1, 1e-4)):
        app = lambda v: apply_element(SampledField(GRID, v, LAMBDA), el).amplitude  # noqa: E731
        assert np.allclose(app(a + b), app(a) + app(b), rtol=0, atol=1e-12 * (1 + np.abs(a).max() + np.abs(b).max()))


@given(st.integers(2, 200), st.floats(1e-6, 1e-5), st.floats(0.05, 2.0), st.floats(400e-9, 1.6e-6))
def test_kernel_is_symmetric(n, dx, z, lam):
    g = TransverseGrid.centered(n, dx)
    k = kernel_matrix(g, g, lam, z)
    assert np.array_equal(k, k.T)


@given(amps, arrays(float, N_PROP, elements=st.floats(0, 1)), st.floats(1e-5, 2e-4))
def test_masks_never_add_energy(a, t, radius):
    field = SampledField(GRID, a, LAMBDA)
    p0 = field.power()
    assert apply_element(field, Aperture(t, GRID)).power() <= p0 * (1 + 1e-12)
    assert apply_element(field, ThinLens(0.2, radius)).power() <= p0 * (1 + 1e-12)
