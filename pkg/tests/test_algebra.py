import math

import numpy as np
import pytest

from orbit_thermo.algebra import (
    DecompositionMeta, LieAlgebra, adjoint_group_element, bracket, coadjoint_act, coadjoint_flow,
    fixed_by_coadjoint, from_triples, is_elliptic_element, is_elliptic_matrix, jacobi_residual, killing_form,
    multiplicative_jordan, validate_algebra, escape_classifier, antisymmetry_residual,
)
from orbit_thermo.errors import DimensionMismatch, InvalidAlgebra, SingularMatrix
from orbit_thermo.models import EscapeVerdict
from orbit_thermo.repositories import CATALOG


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_algebras_are_valid(name):
    algebra = validate_algebra(CATALOG[name]())
    assert antisymmetry_residual(algebra) < 1e-12
    assert jacobi_residual(algebra) < 1e-10


def test_sl2_brackets(sl2):
    h, e, f = np.eye(3)
    assert bracket(sl2, h, e) == pytest.approx(2 * e)
    assert bracket(sl2, h, f) == pytest.approx(-2 * f)
    assert bracket(sl2, e, f) == pytest.approx(h)
    assert killing_form(sl2, h, h) == pytest.approx(8.0)


def test_so12_brackets(so12):
    k0, k1, k2 = np.eye(3)
    assert bracket(so12, k0, k1) == pytest.approx(-k2, abs=1e-12)
    assert bracket(so12, k0, k2) == pytest.approx(k1, abs=1e-12)
    assert bracket(so12, k1, k2) == pytest.approx(k0, abs=1e-12)


def test_non_antisymmetric_structure_rejected():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    with pytest.raises(InvalidAlgebra) as exc:
        validate_algebra(LieAlgebra("bad", ("a", "b", "c"), c))
    assert exc.value.path == "structure"


def test_jacobi_failure_rejected():
    algebra = from_triples("bad", ("a", "b", "c"), [(0, 1, 2, 1.0), (1, 2, 1, 1.0)])
    with pytest.raises(InvalidAlgebra, match="Jacobi") as exc:
        validate_algebra(algebra)
    assert exc.value.path == "structure"


def test_non_central_center_reports_field_path(sl2):
    meta = DecompositionMeta.build(3, center=[[1.0, 0.0, 0.0]])
    algebra = LieAlgebra("sl2", sl2.basis_names, sl2.structure, meta)
    with pytest.raises(InvalidAlgebra) as exc:
        validate_algebra(algebra)
    assert exc.value.path == "meta.center[0]"


def test_cartan_must_be_self_centralizing(su2):
    meta = DecompositionMeta.build(3, cartan=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    algebra = LieAlgebra("su2", su2.basis_names, su2.structure, meta)
    with pytest.raises(InvalidAlgebra) as exc:
        validate_algebra(algebra)
    assert exc.value.path.startswith("meta.cartan")


def test_coerce_rejects_wrong_length(sl2):
    with pytest.raises(DimensionMismatch):
        bracket(sl2, [1.0, 0.0], [0.0, 1.0, 0.0])


def test_elliptic_matrix_catalog():
    assert is_elliptic_matrix(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert is_elliptic_matrix(np.zeros((2, 2)))
    assert not is_elliptic_matrix(np.diag([1.0, -1.0]))
    assert not is_elliptic_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_elliptic_elements_of_sl2(sl2):
    assert is_elliptic_element(sl2, [0.0, 0.5, -0.5])
    assert not is_elliptic_element(sl2, [1.0, 0.0, 0.0])
    assert not is_elliptic_element(sl2, [0.0, 1.0, 0.0])


def test_multiplicative_jordan_reconstructs():
    theta = 0.3
    rotation = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    g = np.zeros((3, 3))
    g[:2, :2] = 2.0 * rotation
    g[2, 2] = -0.5
    triple = multiplicative_jordan(g)
    e, h, u = triple.elliptic, triple.hyperbolic, triple.unipotent
    assert e @ h @ u == pytest.approx(g, abs=1e-9)
    assert e @ h == pytest.approx(h @ e, abs=1e-9)
    assert h == pytest.approx(np.diag([2.0, 2.0, 0.5]), abs=1e-9)
    assert u == pytest.approx(np.eye(3), abs=1e-9)
    assert np.abs(np.linalg.eigvals(e)) == pytest.approx(np.ones(3), abs=1e-9)
    assert e[2, 2] == pytest.approx(-1.0)


def test_multiplicative_jordan_needs_invertible():
    with pytest.raises(SingularMatrix):
        multiplicative_jordan(np.array([[1.0, 0.0], [0.0, 0.0]]))


@pytest.mark.parametrize("g, v, verdict", [
    (np.array([[0.0, -1.0], [1.0, 0.0]]), [1.0, 2.0], EscapeVerdict.BOUNDED),
    (np.diag([2.0, 0.5]), [1.0, 0.0], EscapeVerdict.ESCAPES_FORWARD),
    (np.diag([2.0, 0.5]), [0.0, 1.0], EscapeVerdict.ESCAPES_BACKWARD),
    (np.array([[1.0, 1.0], [0.0, 1.0]]), [0.0, 1.0], EscapeVerdict.ESCAPES_FORWARD),
    (np.array([[1.0, 1.0], [0.0, 1.0]]), [1.0, 0.0], EscapeVerdict.BOUNDED),
])
def test_escape_classifier(g, v, verdict):
    assert escape_classifier(g, v) == verdict


def test_coadjoint_act_matches_flow(sl2, rng):
    y = rng.normal(size=3)
    lam = np.array([0.0, 2.0, -2.0])
    g = adjoint_group_element(sl2, [y])
    assert coadjoint_act(sl2, g, lam) == pytest.approx(coadjoint_flow(sl2, y, lam), abs=1e-10)


def test_coadjoint_fixed_points(su2, osc):
    assert not fixed_by_coadjoint(su2, [0.0, 0.0, 1.0])
    assert fixed_by_coadjoint(su2, [0.0, 0.0, 0.0])
    # the centre functional of the oscillator algebra is not fixed, c* pairs with [p, q]
    assert not fixed_by_coadjoint(osc, [0.0, 0.0, 1.0, 0.0])
    assert fixed_by_coadjoint(osc, [0.0, 0.0, 0.0, 1.0])


def _peak_log_growth(g, v, steps=200):
    """max over n <= steps of log |g^n v| / |v|, renormalizing each step."""
    x = np.asarray(v, dtype=float) / np.linalg.norm(v)
    total = peak = 0.0
    for _ in range(steps):
        x = g @ x
        size = np.linalg.norm(x)
        total += math.log(size)
        peak = max(peak, total)
        x = x / size
    return peak


def _rotation(theta):
    return np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])


def _random_invertible(rng, kind):
    """S D S^-1 with |log |mu|| >= log 1.1 or |mu| = 1 for every eigenvalue mu, S well conditioned."""
    while True:
        s = rng.normal(size=(3, 3))
        if np.linalg.cond(s) < 20:
            break
    moduli = rng.uniform(1.1, 2.0, size=3) ** rng.choice([-1.0, 1.0], size=3)
    d = np.zeros((3, 3))
    if kind == 0:
        d = np.diag(moduli * rng.choice([-1.0, 1.0], size=3))
    elif kind == 1:
        d[:2, :2] = _rotation(rng.uniform(0.1, 3.0))
        d[2, 2] = rng.choice([-1.0, 1.0])
    else:
        d[:2, :2] = moduli[0] * _rotation(rng.uniform(0.1, 3.0))
        d[2, 2] = moduli[1] * rng.choice([-1.0, 1.0])
    return s @ d @ np.linalg.inv(s)


def test_escape_classifier_agrees_with_iteration():
    rng = np.random.default_rng(17)
    threshold = math.log(1e3)
    for k in range(100):
        g = _random_invertible(rng, k % 3)
        v = rng.normal(size=3)
        if _peak_log_growth(g, v) > threshold:
            expected = EscapeVerdict.ESCAPES_FORWARD
        elif _peak_log_growth(np.linalg.inv(g), v) > threshold:
            expected = EscapeVerdict.ESCAPES_BACKWARD
        else:
            expected = EscapeVerdict.BOUNDED
        assert escape_classifier(g, v) == expected, (k, g, v)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_killing_form_is_ad_invariant(name, rng):
    algebra = CATALOG[name]()
    for _ in range(20):
        x, y, z = rng.normal(size=(3, algebra.dim))
        left = killing_form(algebra, bracket(algebra, x, y), z)
        right = -killing_form(algebra, y, bracket(algebra, x, z))
        assert left == pytest.approx(right, abs=1e-9 * (1 + abs(left)))
