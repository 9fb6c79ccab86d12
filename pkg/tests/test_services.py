import math

import pytest

from orbit_thermo.errors import InvalidParameter, MissingCartanMeta
from orbit_thermo.models import Family, LambdaStatus, Method, ProbeStatus
from orbit_thermo.orbits import HspAffine, OscPlane, Sl2Hyperboloid, Sl2Nilpotent, Su2Sphere
from orbit_thermo.services import (
    ClassificationService, DomainScanService, LegendreService, PartitionService, VerificationService,
)


@pytest.fixture
def classifier(settings):
    return ClassificationService(settings)


def test_check_sl2(classifier, sl2):
    report = classifier.check(sl2)
    assert report.cartan_dim == 1
    assert report.weyl_order == 1
    assert report.cone_potential
    assert len(report.systems) == 2
    assert report.model_dump(by_alias=True)["schema"] == 1


def test_timelike_functional_has_gibbs_ensembles(classifier, sl2):
    report = classifier.classify(sl2, [0.0, 2.0, -2.0], samples=2000, seed=5)
    assert report.admissible
    assert report.reasons == []
    assert report.lambda_status == LambdaStatus.IN_CMIN_STAR
    assert report.gibbs_exists
    assert report.omega is not None
    assert len(report.omega.inequalities) == 1


def test_spacelike_functional_is_refuted(classifier, sl2):
    report = classifier.classify(sl2, [8.0, 0.0, 0.0], samples=2000, seed=5)
    assert report.admissible
    assert report.lambda_status == LambdaStatus.REFUTED
    assert report.witness is not None
    assert report.witness.value < 0
    assert not report.gibbs_exists
    assert report.omega is None


def test_compact_algebra_has_full_temperature(classifier, su2):
    report = classifier.classify(su2, [0.0, 0.0, 1.0])
    assert report.gibbs_exists
    assert report.omega.statement == "Omega_lambda = g"
    assert report.spanning.sampled_rank == 3


def test_motion_group_is_not_admissible(classifier, mot2):
    report = classifier.classify(mot2, [0.0, 0.0, 1.0])
    assert not report.admissible
    assert any("cone potential" in reason for reason in report.reasons)
    assert not report.gibbs_exists


def test_classify_needs_cartan(classifier, heis3):
    with pytest.raises(MissingCartanMeta):
        classifier.classify(heis3, [0.0, 0.0, 1.0])


def test_scan_nilpotent_points(settings):
    report = DomainScanService(settings).scan(Sl2Nilpotent(), points=[[1, 0, 0], [2, 1, 0], [1, 2, 0], [-1, 0, 0]])
    assert [r.observed for r in report.rows] == [
        ProbeStatus.FINITE, ProbeStatus.FINITE, ProbeStatus.DIVERGENT, ProbeStatus.DIVERGENT,
    ]
    assert report.mismatches == 0
    assert report.rows[0].z == pytest.approx(2 * math.pi, rel=1e-4)


@pytest.mark.parametrize("model, conjugations", [
    (Sl2Nilpotent(), 5), (Sl2Hyperboloid(1.0), 5), (Su2Sphere(1.0), 5), (OscPlane(1.0, 0.5), 2), (HspAffine(1, 1.0), 2),
])
def test_scan_conjugated_grid(settings, model, conjugations):
    report = DomainScanService(settings).scan(model, conjugations=conjugations, seed=2)
    assert len(report.rows) >= 20
    assert len({tuple(r.cartan) for r in report.rows}) < len(report.rows)
    assert report.mismatches == 0
    assert all(r.match for r in report.rows)
    if model.family != Family.SU2_SPHERE:
        assert {r.observed for r in report.rows} == {ProbeStatus.FINITE, ProbeStatus.DIVERGENT}


@pytest.mark.parametrize("model", [OscPlane(1.0, 0.0), Su2Sphere(1.0), Sl2Hyperboloid(1.0)])
def test_legendre_checks(settings, model):
    report = LegendreService(settings).check(model, n_x=50, n_orbit=200, seed=3)
    assert report.n_x == 50
    assert report.contained == 50
    assert report.injective_pairs > 0
    assert report.injectivity_failures == 0
    assert report.central_invariance_max <= 1e-7
    assert report.passed


@pytest.mark.parametrize("model", [Su2Sphere(1.0), OscPlane(1.0, 0.0), Sl2Hyperboloid(1.0)])
def test_verify_quadrature(settings, model):
    report = VerificationService(settings).verify(model)
    assert report.passed
    assert all(row.rel_error <= 1e-6 for row in report.rows)


def test_verify_reports_divergent_rows(settings):
    report = VerificationService(settings).verify(Sl2Nilpotent(), grid=[[2, 1, 0], [1, 2, 0]])
    assert report.rows[1].closed_form == math.inf
    assert report.passed


def test_verify_mc(settings):
    report = VerificationService(settings).verify(Su2Sphere(1.0), grid=[[0, 0, 1]], method="mc", samples=20_000,
                                                  seed=1)
    assert report.rows[0].rel_error < 0.05
    with pytest.raises(InvalidParameter):
        VerificationService(settings).verify(Su2Sphere(1.0), method="simpson")


def test_partition_dh_matches_catalog(settings):
    service = PartitionService(settings)
    dh = service.partition(Sl2Hyperboloid(1.0), [2.0, 0.0, 0.0], method="dh")
    assert dh.coordinates == "cartan"
    assert dh.x == pytest.approx([2.0])
    assert dh.z == pytest.approx(math.exp(-2.0) / 2.0, rel=1e-10)
    catalog = service.partition(Sl2Hyperboloid(1.0), [2.0, 0.0, 0.0])
    assert catalog.method == Method.CATALOG
    assert catalog.z == pytest.approx(dh.z, rel=1e-10)


def test_partition_dh_needs_orbit_through_cartan_dual(settings):
    with pytest.raises(InvalidParameter):
        PartitionService(settings).partition(Sl2Nilpotent(), [2.0, 0.0, 0.0], method="dh")
    with pytest.raises(InvalidParameter):
        PartitionService(settings).partition(Su2Sphere(1.0), [1.0, 0.0, 0.0], method="dh")


def test_partition_quadrature(settings):
    report = PartitionService(settings).partition(Su2Sphere(1.0), [0.0, 0.0, 1.0], method="quad", samples=20_000)
    assert report.method == Method.ORACLE
    assert report.z == pytest.approx(2 * math.sinh(1.0), rel=1e-8)
    diverged = PartitionService(settings).partition(Sl2Nilpotent(), [1.0, 2.0, 0.0], method="quad")
    assert not diverged.finite


def test_partition_unknown_method(settings):
    with pytest.raises(InvalidParameter):
        PartitionService(settings).partition(Su2Sphere(1.0), [0.0, 0.0, 1.0], method="magic")
