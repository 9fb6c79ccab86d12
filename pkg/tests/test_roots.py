import numpy as np
import pytest

from orbit_thermo.algebra import direct_sum
from orbit_thermo.errors import MissingCartanMeta, NotACartan, NotCompactlyEmbedded
from orbit_thermo.models import RootKind, RootOrigin
from orbit_thermo.roots import (
    adapted_systems, cone_potential, coroot, dominant_conjugate, positive_systems, reflection, root_decomposition,
    weyl_group,
)


def test_sl2_has_one_pair_of_noncompact_roots(sl2_datum):
    datum, weyl = sl2_datum
    assert len(datum.roots) == 2
    assert all(r.kind == RootKind.NONCOMPACT for r in datum.roots)
    assert all(r.origin == RootOrigin.SEMISIMPLE for r in datum.roots)
    assert sorted(abs(r.beta[0]) for r in datum.roots) == pytest.approx([1.0, 1.0])
    assert datum.roots[1].beta == pytest.approx(-datum.roots[0].beta)
    assert weyl.order == 1
    assert cone_potential(datum)


def test_su2_roots_are_compact(su2):
    datum = root_decomposition(su2)
    weyl = weyl_group(datum)
    assert all(r.kind == RootKind.COMPACT for r in datum.roots)
    assert weyl.order == 2
    assert sorted(float(w[0, 0]) for w in weyl.elements) == pytest.approx([-1.0, 1.0])


def test_weyl_group_of_su2_plus_su2(su2):
    datum = root_decomposition(direct_sum(su2, su2))
    weyl = weyl_group(datum)
    assert datum.zero_space_dim == 2
    assert len(datum.roots) == 4
    assert weyl.order == 4
    assert sorted(np.round(np.diag(w), 8).tolist() for w in weyl.elements) == [
        [-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0],
    ]


def test_reflection_squares_to_identity(su2):
    datum = root_decomposition(su2)
    root = datum.roots[0]
    r = reflection(datum, root)
    assert r @ r == pytest.approx(np.eye(1))
    # beta(alpha_check) = 2 / i
    assert float(root.beta @ coroot(datum, root)) == pytest.approx(2.0)


def test_oscillator_root_values(osc):
    datum = root_decomposition(osc)
    assert datum.zero_space_dim == 2
    assert len(datum.roots) == 2
    for root in datum.roots:
        assert root.beta[0] == pytest.approx(0.0, abs=1e-12)
        assert abs(root.beta[1]) == pytest.approx(0.5)
        assert root.origin == RootOrigin.SOLVABLE
    assert cone_potential(datum)


def test_hsp1_root_multiset(hsp1):
    datum = root_decomposition(hsp1)
    values = sorted(abs(float(r.beta[1])) for r in datum.roots)
    assert values == pytest.approx([0.5, 0.5, 1.0, 1.0])
    origins = {round(abs(float(r.beta[1])), 6): r.origin for r in datum.roots}
    assert origins[0.5] == RootOrigin.SOLVABLE
    assert origins[1.0] == RootOrigin.SEMISIMPLE


def test_motion_algebra_fails_cone_potential(mot2):
    datum = root_decomposition(mot2)
    assert not cone_potential(datum)
    assert all(r.zero_bracket for r in datum.roots)


def test_missing_cartan(heis3):
    with pytest.raises(MissingCartanMeta):
        root_decomposition(heis3)


def test_cartan_must_commute(su2):
    with pytest.raises(NotACartan):
        root_decomposition(su2, cartan=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def test_split_cartan_is_not_compactly_embedded(sl2):
    with pytest.raises(NotCompactlyEmbedded):
        root_decomposition(sl2, cartan=[[1.0, 0.0, 0.0]])


def test_sl2_positive_systems_are_adapted(sl2_datum):
    datum, weyl = sl2_datum
    systems = adapted_systems(datum, weyl)
    assert len(systems) == 2
    assert all(s.adapted for s in systems)
    for s in systems:
        assert len(s.positive) == 1
        assert datum.roots[s.positive[0]].i_alpha(s.regular_element) > 0


def test_positive_systems_are_deterministic(hsp1):
    datum = root_decomposition(hsp1)
    first = positive_systems(datum)
    second = positive_systems(datum)
    assert [s.positive for s in first] == [s.positive for s in second]


def test_dominant_conjugate_su2(su2):
    datum = root_decomposition(su2)
    weyl = weyl_group(datum)
    system = adapted_systems(datum, weyl)[0]
    dominant = dominant_conjugate(datum, system, weyl, np.array([1.0]))
    root = datum.roots[system.positive[0]]
    assert abs(dominant[0]) == pytest.approx(1.0)
    assert float(dominant @ coroot(datum, root)) >= 0
