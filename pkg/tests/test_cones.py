import numpy as np
import pytest

from orbit_thermo.algebra import direct_sum
from orbit_thermo.cones import (
    Cone, c_max, c_min, contains, dual, interior_point, is_pointed, is_subset, lambda_in_cmin_star, same_cone,
    to_generators, to_inequalities, transform, wmin_star_falsifier,
)
from orbit_thermo.errors import DimensionMismatch, DimensionTooLarge, InvalidParameter
from orbit_thermo.models import FalsifierVerdict, Representation
from orbit_thermo.roots import adapted_systems, root_decomposition, weyl_group


def _positive_system(systems):
    """The system whose regular element is a positive multiple of the first Cartan vector."""
    return next(s for s in systems if s.regular_element[0] > 0)


def test_quadrant_dual_is_itself():
    quadrant = Cone.generated(2, [[1.0, 0.0], [0.0, 1.0]])
    d = dual(quadrant)
    assert d.representation == Representation.INEQUALITIES
    assert same_cone(d, quadrant)


def test_membership_and_interior():
    quadrant = Cone.generated(2, [[1.0, 0.0], [0.0, 1.0]])
    assert contains(quadrant, [1.0, 2.0])
    assert contains(quadrant, [1.0, 0.0])
    assert not contains(quadrant, [1.0, 0.0], strict=True)
    assert contains(quadrant, [1.0, 2.0], strict=True)
    assert not contains(quadrant, [-1.0, 2.0])


def test_degenerate_cone_has_empty_interior():
    ray = Cone.generated(2, [[1.0, 1.0]])
    assert contains(ray, [2.0, 2.0])
    assert not contains(ray, [2.0, 2.0], strict=True)
    assert interior_point(ray) is None


def test_conversions_agree():
    cone = Cone.generated(3, [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 1.0]])
    ineq = to_inequalities(cone)
    back = to_generators(ineq)
    assert ineq.vectors.shape[0] == 4
    assert same_cone(back, cone)
    assert contains(ineq, [0.0, 0.0, 1.0], strict=True)
    assert not contains(ineq, [2.0, 0.0, 1.0])


def test_pointedness():
    assert is_pointed(Cone.generated(2, [[1.0, 0.0], [0.0, 1.0]]))
    assert not is_pointed(Cone.generated(2, [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]))
    assert is_pointed(Cone.cut_out(2, [[1.0, 0.0], [0.0, 1.0]]))
    assert not is_pointed(Cone.cut_out(2, [[0.0, 1.0]]))


def test_transform_and_subset():
    quadrant = Cone.generated(2, [[1.0, 0.0], [0.0, 1.0]])
    half_plane = Cone.cut_out(2, [[0.0, 1.0]])
    assert is_subset(quadrant, half_plane)
    assert not is_subset(half_plane, quadrant)
    swapped = transform(quadrant, np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert same_cone(swapped, quadrant)


def test_dimension_errors(settings):
    quadrant = Cone.generated(2, [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DimensionMismatch):
        contains(quadrant, [1.0, 0.0, 0.0])
    big = Cone.generated(settings.max_cone_dim + 1, np.eye(settings.max_cone_dim + 1))
    with pytest.raises(DimensionTooLarge):
        to_inequalities(big, settings)


def test_sl2_cones(sl2_datum):
    datum, weyl = sl2_datum
    system = _positive_system(adapted_systems(datum, weyl))
    cmin, cmax = c_min(datum, system), c_max(datum, system)
    assert contains(cmax, [1.0], strict=True)
    assert not contains(cmax, [-1.0])
    assert contains(cmin, [1.0])
    assert not contains(cmin, [-1.0])
    assert is_pointed(cmin)
    assert is_subset(cmin, cmax)
    assert lambda_in_cmin_star([2.0], cmin)
    assert not lambda_in_cmin_star([-2.0], cmin)


def test_falsifier_refutes_spacelike_functional(sl2_datum):
    datum, weyl = sl2_datum
    system = _positive_system(adapted_systems(datum, weyl))
    cmin = c_min(datum, system)
    result = wmin_star_falsifier(datum, cmin, [8.0, 0.0, 0.0], samples=2000, seed=5)
    assert result.verdict == FalsifierVerdict.REFUTED
    assert result.witness.value < 0
    again = wmin_star_falsifier(datum, cmin, [8.0, 0.0, 0.0], samples=2000, seed=5)
    assert again.witness == result.witness


def test_falsifier_keeps_timelike_functional(sl2_datum):
    datum, weyl = sl2_datum
    system = _positive_system(adapted_systems(datum, weyl))
    cmin = c_min(datum, system)
    result = wmin_star_falsifier(datum, cmin, [0.0, 2.0, -2.0], samples=2000, seed=5)
    assert result.verdict == FalsifierVerdict.NOT_REFUTED
    assert result.witness is None


@pytest.mark.parametrize("samples", [0, -3])
def test_falsifier_rejects_empty_sample(sl2_datum, samples):
    datum, weyl = sl2_datum
    cmin = c_min(datum, _positive_system(adapted_systems(datum, weyl)))
    with pytest.raises(InvalidParameter):
        wmin_star_falsifier(datum, cmin, [8.0, 0.0, 0.0], samples=samples, seed=5)


def test_bidual_of_random_cones(rng):
    for _ in range(20):
        generators = rng.normal(size=(5, 3))
        generators[:, 0] = np.abs(generators[:, 0]) + 0.5
        cone = Cone.generated(3, generators)
        bidual = dual(dual(cone, Representation.GENERATORS), Representation.GENERATORS)
        assert bidual.representation == Representation.GENERATORS
        assert same_cone(bidual, cone)
        for p in rng.normal(size=(20, 3)):
            if contains(cone, p, strict=True) or not contains(cone, p):
                assert contains(bidual, p) == contains(cone, p)


def test_cones_are_weyl_invariant(su2, sl2, rng):
    datum = root_decomposition(direct_sum(su2, sl2))
    weyl = weyl_group(datum)
    assert weyl.order == 2
    for system in adapted_systems(datum, weyl):
        cmin, cmax = c_min(datum, system), c_max(datum, system)
        for w in weyl.elements:
            assert same_cone(transform(cmin, w), cmin)
        for y in rng.normal(size=(50, 2)):
            for w in weyl.elements:
                assert contains(cmax, w @ y, strict=True) == contains(cmax, y, strict=True)
                assert contains(cmin, w @ y) == contains(cmin, y)
