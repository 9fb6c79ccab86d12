import math

import numpy as np
import pytest

from orbit_thermo.algebra import adjoint_group_element
from orbit_thermo.errors import DivergentNeighborhood, InvalidParameter, NotAdmissibleFunctional, OutsideCmax
from orbit_thermo.models import Method
from orbit_thermo.orbits import HspAffine, OscPlane, Sl2Hyperboloid, Sl2Nilpotent, Su2Sphere, parse_family
from orbit_thermo.oracle import sample_orbit
from orbit_thermo.services import orbit_structure, sample_temperature
from orbit_thermo.thermo import (
    DIVERGENT, catalog_log_z, convolution_partition, dh_breakdown, dh_partition, factorized_partition,
    fisher_rao, gaussian_laplace, geometric_heat, hsp_gaussian_partition, method_log_z, product_partition,
    shifted_partition, temperedness_exponent, temperedness_limit, thermo_report,
)

FAMILIES = [Sl2Nilpotent(), Sl2Hyperboloid(1.0), Su2Sphere(1.0), OscPlane(1.0, 0.5), HspAffine(1, 1.0)]


def test_gaussian_laplace():
    assert gaussian_laplace(np.eye(2), [0.0, 0.0]) == pytest.approx(1.0)
    assert gaussian_laplace(np.diag([2.0, 8.0]), [1.0, 0.0]) == pytest.approx(0.25 * math.exp(0.25))
    assert gaussian_laplace(np.diag([1.0, -1.0]), [0.0, 0.0]) == DIVERGENT


def test_gaussian_methods_match_catalog():
    osc = OscPlane(1.0, 0.5)
    x = [0.2, 0.1, 0.3, 1.2]
    assert math.log(convolution_partition(osc, x)) == pytest.approx(osc.closed_form(x).log_z, rel=1e-10)
    hsp = HspAffine(1, 2.0)
    y = [0.0, 0.0, 0.5, 1.5, 0.0, 0.0]
    # reduces to the oscillator at a rotation point: Z = 2 e^{-lambda_c s} / t
    assert hsp_gaussian_partition(hsp, y) == pytest.approx(2 * math.exp(-1.0) / 1.5)
    assert hsp_gaussian_partition(hsp, [0.0, 0.0, 0.0, -1.0, 0.0, 0.0]) == DIVERGENT


def test_product_partition_factorizes():
    model = parse_family("product:su2:1+sl2-hyperboloid:1")
    x = np.array([0.0, 0.0, 1.0, 2.0, 0.0, 0.0])
    assert product_partition(model, x) == pytest.approx(2 * math.sinh(1.0) * math.exp(-2.0) / 2.0)
    assert product_partition(model, [0.0, 0.0, 1.0, -2.0, 0.0, 0.0]) == DIVERGENT


def test_method_log_z_rejects_mismatched_family():
    with pytest.raises(InvalidParameter):
        method_log_z(Su2Sphere(1.0), Method.GAUSSIAN)
    with pytest.raises(InvalidParameter):
        method_log_z(Su2Sphere(1.0), Method.PRODUCT)


@pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
def test_dh_matches_hyperboloid(t):
    structure = orbit_structure(Sl2Hyperboloid(1.0))
    value = dh_partition(structure.datum, structure.system, structure.weyl, structure.lam_t, [t])
    assert value == pytest.approx(math.exp(-t) / t, rel=1e-10)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_dh_matches_sphere(t):
    structure = orbit_structure(Su2Sphere(1.0))
    value = dh_partition(structure.datum, structure.system, structure.weyl, structure.lam_t, [t])
    assert value == pytest.approx(2 * math.sinh(t) / t, rel=1e-10)


def test_dh_breakdown_multiplicities():
    structure = orbit_structure(Su2Sphere(2.0))
    breakdown = dh_breakdown(structure.datum, structure.system, structure.weyl, structure.lam_t, [1.0])
    assert list(breakdown.multiplicities.values()) == [1]
    assert not breakdown.partial_multiplicities
    assert abs(breakdown.functional[0]) == pytest.approx(2.0)


def test_dh_outside_cmax_and_bad_functional():
    structure = orbit_structure(Sl2Hyperboloid(1.0))
    with pytest.raises(OutsideCmax):
        dh_partition(structure.datum, structure.system, structure.weyl, structure.lam_t, [-1.0])
    with pytest.raises(NotAdmissibleFunctional):
        dh_partition(structure.datum, structure.system, structure.weyl, -structure.lam_t, [1.0])


def test_factorized_and_shifted_forms():
    structure = orbit_structure(Sl2Hyperboloid(1.0))
    args = (structure.datum, structure.system, structure.weyl, structure.lam_t)
    assert factorized_partition(*args, [2.0]) == pytest.approx(dh_partition(*args, [2.0]))
    # the Weyl group of sl2 is trivial, every functional on t is a valid shift
    assert shifted_partition(*args, [0.5], [2.0]) == pytest.approx(math.exp(-1.0) * dh_partition(*args, [2.0]))


def test_temperedness_limit_hyperboloid():
    structure = orbit_structure(Sl2Hyperboloid(1.0))
    limit, n = temperedness_limit(structure.datum, structure.system, structure.weyl, structure.lam_t, [1.0])
    assert n == 1
    assert limit == pytest.approx(1.0)


def test_temperedness_exponents():
    k, _ = temperedness_exponent(catalog_log_z(Sl2Hyperboloid(1.0)), [1.0, 0.0, 0.0])
    assert k == pytest.approx(1.0, abs=0.05)
    k, _ = temperedness_exponent(catalog_log_z(Su2Sphere(1.0)), [0.0, 0.0, 1.0])
    assert k == pytest.approx(0.0, abs=0.01)


def test_entropy_identity_and_fisher():
    model = Sl2Nilpotent()
    x = [2.0, 1.0, 0.0]
    report = thermo_report(x, catalog_log_z(model), Method.CATALOG, model.closed_form(x))
    assert report.finite
    assert report.entropy == pytest.approx(float(np.dot(report.q, x)) + report.log_z)
    assert np.min(np.linalg.eigvalsh(np.array(report.fisher))) > -1e-8
    assert np.array(report.fisher) == pytest.approx(fisher_rao(catalog_log_z(model), x), rel=1e-4, abs=1e-6)


def test_report_outside_domain():
    model = Sl2Nilpotent()
    report = thermo_report([1.0, 2.0, 0.0], catalog_log_z(model), Method.CATALOG, model.closed_form([1.0, 2.0, 0.0]))
    assert not report.finite
    assert report.z == math.inf


def test_heat_near_boundary_raises():
    with pytest.raises(DivergentNeighborhood):
        geometric_heat(catalog_log_z(Sl2Nilpotent()), [1.0, 1.0 - 1e-7, 0.0])


@pytest.mark.parametrize("model", FAMILIES, ids=lambda m: m.label)
def test_log_z_is_convex(model, rng):
    log_z = catalog_log_z(model)
    points = sample_temperature(model, 200, rng)
    for a, b in zip(points[:100], points[100:]):
        la, lb = log_z(a), log_z(b)
        for t in (0.25, 0.5, 0.75):
            bound = t * la + (1 - t) * lb
            assert log_z(t * a + (1 - t) * b) <= bound + 1e-9 * (1 + abs(bound))


@pytest.mark.parametrize("model", FAMILIES, ids=lambda m: m.label)
def test_partition_function_is_adjoint_invariant(model, rng):
    log_z = catalog_log_z(model)
    for x in sample_temperature(model, 20, rng):
        g = adjoint_group_element(model.algebra, [rng.normal(scale=0.3, size=model.algebra.dim)])
        assert log_z(g @ x) == pytest.approx(log_z(x), abs=1e-7)


def _wmin_direction(model, rng):
    """A direction y with alpha(y) >= 0 on the whole orbit."""
    if isinstance(model, OscPlane):
        return np.array([0.0, 0.0, abs(rng.normal()), abs(rng.normal())])
    y = sample_temperature(model, 1, rng)[0]
    if isinstance(model, HspAffine):
        y[:2 * model.n] = 0.0
        y[2 * model.n] = abs(y[2 * model.n])
    return y


@pytest.mark.parametrize("model", [m for m in FAMILIES if not isinstance(m, Su2Sphere)], ids=lambda m: m.label)
def test_partition_function_decreases_along_wmin(model, rng):
    log_z = catalog_log_z(model)
    orbit = sample_orbit(model, 500, seed=8, scale=3.0)
    for x in sample_temperature(model, 20, rng):
        y = _wmin_direction(model, rng)
        assert np.min(orbit @ y) >= -1e-9
        assert log_z(x + y) <= log_z(x) + 1e-12


@pytest.mark.parametrize("model", FAMILIES, ids=lambda m: m.label)
def test_no_direction_leaves_z_constant(model, rng):
    log_z = catalog_log_z(model)
    dim = model.algebra.dim
    x = sample_temperature(model, 1, rng)[0]
    # the sampled point keeps a ball of radius 0.1 |x| / sqrt(dim) inside the domain
    step = 0.05 * np.linalg.norm(x) / math.sqrt(dim)
    base = log_z(x)
    for _ in range(50):
        y = rng.normal(size=dim)
        y *= step / np.linalg.norm(y)
        values = [log_z(x + t * y) for t in (-1.0, -0.5, 0.5, 1.0)]
        assert max(abs(v - base) for v in values) > 1e-9
