"""
Service layer for the classification and verification flows.
Each service wraps the numerical modules into one report-producing call;
the command line only parses arguments and prints what these return.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize

from .algebra import LieAlgebra, adjoint_group_element, coadjoint_flow, numerical_rank
from .config import Settings, get_settings
from .cones import (
    Cone, c_max, c_min, contains, is_pointed, is_subset, lambda_in_cmin_star, to_generators, wmin_star_falsifier,
)
from .errors import InvalidParameter, MissingCartanMeta, OutsideCmax
from .models import (
    CheckReport, ClassificationReport, ConeReport, DomainScanReport, FalsifierWitness, Family, LambdaStatus,
    LegendreReport, Method, OmegaDescription, ProbeStatus, RootReport, ScanRow, SpanningReport, SystemReport,
    ThermoGridReport, ThermoReport, VerifyReport, VerifyRow,
)
from .oracle import divergence_probe, laplace_mc, laplace_quadrature, moment_mc, sample_orbit
from .orbits import OrbitModel, Product
from .roots import (
    PositiveSystem, RootDatum, WeylGroup, adapted_systems, cone_potential, root_decomposition, weyl_group,
)
from .thermo import catalog_log_z, dh_partition, geometric_heat, method_log_z, thermo_report

logger = logging.getLogger(__name__)

_MC_Z_LIMIT = 4.0

DEFAULT_GRIDS: Dict[Family, List[List[float]]] = {
    Family.SL2_NILPOTENT: [[1, 0, 0], [2, 1, 0], [1, 0.5, 0], [2, 0, 1], [3, 1, 1]],
    Family.SL2_HYPERBOLOID: [[0.5, 0, 0], [1, 0, 0], [2, 0, 0], [1.5, 0.5, 0]],
    Family.SU2_SPHERE: [[0, 0, 0.5], [0, 0, 1], [0, 0, 2], [0.3, 0.4, 1]],
    Family.OSC_PLANE: [[0, 0, 0, 1], [0, 0, 1, 1], [0.2, 0.1, 0, 1], [0.5, -0.3, 0.5, 2]],
    Family.HSP_AFFINE: [[0, 0, 0, 1, 0, 0], [0, 0, 1, 1, 0, 0], [0.2, 0.1, 0, 1, 0.2, 0.1], [0, 0, 0, 2, -0.5, 0.3]],
}


# === report helpers ===

def _root_report(root) -> RootReport:
    return RootReport(beta=root.beta.tolist(), kind=root.kind, origin=root.origin, multiplicity=root.multiplicity,
                      signature=root.signature, zero_bracket=root.zero_bracket)


def _system_report(datum: RootDatum, system: PositiveSystem) -> SystemReport:
    return SystemReport(
        regular_element=system.regular_element.tolist(),
        positive=[datum.roots[i].beta.tolist() for i in system.positive],
        noncompact_positive=[datum.roots[i].beta.tolist() for i in system.noncompact_positive],
        adapted=system.adapted,
    )


@dataclass
class OrbitStructure:
    """Root data of a model's algebra with the positive system matching its orbit."""
    datum: RootDatum
    weyl: WeylGroup
    system: PositiveSystem
    lam_t: np.ndarray


def select_system(datum: RootDatum, systems: Sequence[PositiveSystem], lam_t: np.ndarray,
                  settings: Settings) -> PositiveSystem:
    """First adapted system whose C_min dual contains lambda; the first adapted (or any) system otherwise."""
    ordered = [s for s in systems if s.adapted] + [s for s in systems if not s.adapted]
    for system in ordered:
        if lambda_in_cmin_star(lam_t, c_min(datum, system, settings), settings=settings):
            return system
    return ordered[0]


def orbit_structure(model: OrbitModel, settings: Optional[Settings] = None) -> OrbitStructure:
    settings = settings or get_settings()
    datum = root_decomposition(model.algebra, settings=settings)
    weyl = weyl_group(datum, settings)
    lam_t = datum.restrict(model.base_point)
    system = select_system(datum, adapted_systems(datum, weyl, settings), lam_t, settings)
    return OrbitStructure(datum, weyl, system, lam_t)


def sample_temperature(model: OrbitModel, n: int, rng: np.random.Generator, margin: float = 0.1,
                       max_draws: int = 1000) -> np.ndarray:
    """n points of the geometric temperature, each with a ball of relative radius margin inside it."""
    dim = model.algebra.dim
    eye = np.eye(dim)
    out = []
    for _ in range(max_draws * n):
        x = rng.normal(size=dim)
        step = margin * linalg.norm(x)
        if all(model.temperature_contains(x + s * step * e) for e in eye for s in (0.0, 1.0, -1.0)):
            out.append(x)
            if len(out) == n:
                return np.array(out)
    raise InvalidParameter(f"Could not draw {n} points of the temperature domain of '{model.label}'")


def conjugated_grid(structure: OrbitStructure, values: Sequence[float], conjugations: int, seed: int,
                    scale: float = 0.5) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Pairs (Ad(g) y, y) for Cartan points y on a product grid and random g (the first one is the identity)."""
    datum = structure.datum
    algebra = datum.algebra
    r = datum.zero_space_dim
    rng = np.random.default_rng(seed)
    mesh = np.meshgrid(*[np.asarray(values, dtype=float)] * r, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])
    elements = [np.eye(algebra.dim)] + [
        adjoint_group_element(algebra, [rng.normal(scale=scale, size=algebra.dim)]) for _ in range(conjugations - 1)
    ]
    return [(g @ datum.to_algebra(y), y) for y in points for g in elements]


# === services ===

class ClassificationService:
    """Structure reports and Gibbs-existence verdicts for an algebra and a functional."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def check(self, algebra: LieAlgebra) -> CheckReport:
        """Roots, Weyl group, positive systems with their cones."""
        datum = root_decomposition(algebra, settings=self.settings)
        weyl = weyl_group(datum, self.settings)
        systems = adapted_systems(datum, weyl, self.settings)
        cmins, cmaxs = [], []
        for system in systems:
            cmin, cmax = c_min(datum, system, self.settings), c_max(datum, system)
            cmins.append(cmin.report(is_pointed(cmin, self.settings), is_subset(cmin, cmax, self.settings)))
            cmaxs.append(cmax.report(is_pointed(cmax, self.settings)))
        return CheckReport(
            algebra=algebra.name, dim=algebra.dim, cartan_dim=datum.zero_space_dim,
            roots=[_root_report(r) for r in datum.roots], weyl_order=weyl.order,
            cone_potential=cone_potential(datum), systems=[_system_report(datum, s) for s in systems],
            c_min=cmins, c_max=cmaxs,
        )

    def spanning_check(self, algebra: LieAlgebra, functional: np.ndarray, seed: Optional[int] = None) -> SpanningReport:
        """Rank of lambda and 4*dim sampled coadjoint flows of it; the annihilator spans O_lambda-perp."""
        rng = np.random.default_rng(self.settings.seed if seed is None else seed)
        rows = [functional] + [coadjoint_flow(algebra, rng.normal(size=algebra.dim), functional)
                               for _ in range(4 * algebra.dim)]
        stack = np.array(rows)
        rank = numerical_rank(stack, self.settings.rank_tol)
        annihilator = linalg.null_space(stack, rcond=self.settings.rank_tol).T if rank < algebra.dim else np.zeros((0, algebra.dim))
        return SpanningReport(spans=rank == algebra.dim, sampled_rank=rank, annihilator=annihilator.tolist())

    def _lambda_test(self, datum: RootDatum, cmin: Cone, lam: np.ndarray, lam_t: np.ndarray,
                     samples: Optional[int], seed: Optional[int]) -> Tuple[LambdaStatus, int, Optional[FalsifierWitness]]:
        if datum.in_cartan_dual(lam, self.settings.dual_tol):
            if lambda_in_cmin_star(lam_t, cmin, settings=self.settings):
                return LambdaStatus.IN_CMIN_STAR, 0, None
            gens = to_generators(cmin, self.settings).vectors
            k = int(np.argmin(gens @ lam_t))
            witness = FalsifierWitness(word=[], generator=gens[k].tolist(), value=float(gens[k] @ lam_t))
            return LambdaStatus.REFUTED, 0, witness
        result = wmin_star_falsifier(datum, cmin, lam, samples, seed, self.settings)
        if result.witness is not None:
            return LambdaStatus.REFUTED, result.samples, result.witness
        return LambdaStatus.FALSIFIER_NOT_REFUTED, result.samples, None

    def classify(self, algebra: LieAlgebra, functional: Sequence[float], samples: Optional[int] = None,
                 seed: Optional[int] = None) -> ClassificationReport:
        """Does a Gibbs ensemble exist on the coadjoint orbit of lambda, and where."""
        lam = algebra.coerce(np.asarray(functional, dtype=float), "functional")
        if algebra.cartan.shape[0] == 0:
            raise MissingCartanMeta(f"algebra '{algebra.name}' has no Cartan subalgebra in its metadata")
        spanning = self.spanning_check(algebra, lam, seed)
        notes = []
        if not spanning.spans:
            notes.append(f"O_lambda lies in a proper subspace (sampled rank {spanning.sampled_rank}); "
                         "Z factors through the quotient by the annihilator")

        datum = root_decomposition(algebra, settings=self.settings)
        weyl = weyl_group(datum, self.settings)
        lam_t = datum.restrict(lam)
        systems = adapted_systems(datum, weyl, self.settings)
        system = select_system(datum, systems, lam_t, self.settings)
        cmin, cmax = c_min(datum, system, self.settings), c_max(datum, system)
        pointed = is_pointed(cmin, self.settings)
        subset = is_subset(cmin, cmax, self.settings)

        reasons = []
        if not cone_potential(datum):
            reasons.append("cone potential fails: some non-compact root vector has [x, x*] = 0")
        if not any(s.adapted for s in systems):
            reasons.append("no adapted positive system")
        if not pointed:
            reasons.append("C_min is not pointed")
        if not subset:
            reasons.append("C_min is not contained in C_max")
        admissible = not reasons

        status, used, witness = self._lambda_test(datum, cmin, lam, lam_t, samples, seed)
        if status == LambdaStatus.FALSIFIER_NOT_REFUTED:
            notes.append(f"lambda is outside t*; W_min* membership not refuted by {used} samples (necessary condition only)")
        gibbs = admissible and status != LambdaStatus.REFUTED

        omega = None
        if gibbs:
            rows = cmax.vectors
            if rows.shape[0] == 0:
                statement = "Omega_lambda = g"
            else:
                statement = "Omega_lambda = Ad(G) C_max interior, C_max interior = {x in t : f(x) > 0 for each listed f}"
            omega = OmegaDescription(inequalities=rows.tolist(), statement=statement)
        logger.info(f"Classified '{algebra.name}': admissible={admissible}, lambda {status.value}, gibbs={gibbs}")
        return ClassificationReport(
            algebra=algebra.name, functional=lam.tolist(), spanning=spanning, admissible=admissible, reasons=reasons,
            chosen_system=_system_report(datum, system), c_min=cmin.report(pointed, subset),
            c_max=cmax.report(is_pointed(cmax, self.settings)), lambda_status=status, falsifier_samples=used,
            witness=witness, gibbs_exists=gibbs, omega=omega, notes=notes,
        )


class DomainScanService:
    """Predicted C_max interior membership against the divergence probe."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def _predict(self, model: OrbitModel, structure: OrbitStructure, x: np.ndarray,
                 y: Optional[np.ndarray]) -> ProbeStatus:
        if y is None:
            inside = model.temperature_contains(x)
        else:
            inside = contains(c_max(structure.datum, structure.system), y, strict=True, settings=self.settings)
        return ProbeStatus.FINITE if inside else ProbeStatus.DIVERGENT

    def scan(self, model: OrbitModel, points: Optional[Sequence[Sequence[float]]] = None,
             values: Sequence[float] = (-1.0, -0.1, 0.1, 1.0), conjugations: int = 5,
             seed: Optional[int] = None) -> DomainScanReport:
        """Probe every grid point; explicit points are predicted from the family's invariants."""
        seed = self.settings.seed if seed is None else seed
        structure = orbit_structure(model, self.settings)
        if points is None:
            grid = conjugated_grid(structure, values, conjugations, seed)
        else:
            grid = [(model.algebra.coerce(np.asarray(p, dtype=float), "x"), None) for p in points]
        rows = []
        for x, y in grid:
            predicted = self._predict(model, structure, x, y)
            probe = divergence_probe(model, x, self.settings)
            z = probe.estimate.value if probe.estimate is not None else None
            rows.append(ScanRow(x=x.tolist(), cartan=None if y is None else y.tolist(), predicted=predicted,
                                observed=probe.status, z=z, match=predicted == probe.status))
        mismatches = sum(not r.match for r in rows)
        if mismatches:
            logger.warning(f"Domain scan of '{model.label}': {mismatches} mismatches in {len(rows)} points")
        return DomainScanReport(family=model.label, rows=rows, mismatches=mismatches)


class LegendreService:
    """Containment, injectivity and central invariance of the geometric heat map."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def heat(self, model: OrbitModel, x: np.ndarray, samples: int, seed: int) -> np.ndarray:
        form = model.closed_form(x, self.settings)
        if form.finite and form.grad is not None:
            return -form.grad
        return np.array(moment_mc(model, x, samples, seed, self.settings).mean)

    def in_hull(self, points: np.ndarray, q: np.ndarray) -> bool:
        """LP feasibility of q = sum mu_i p_i, mu >= 0, sum mu = 1, up to 1e-3 of the point cloud scale."""
        slack = 1e-3 * max(1.0, float(np.max(linalg.norm(points, axis=1))))
        n = points.shape[0]
        result = optimize.linprog(
            np.zeros(n), A_ub=np.vstack([points.T, -points.T]), b_ub=np.concatenate([q + slack, slack - q]),
            A_eq=np.ones((1, n)), b_eq=[1.0], bounds=(0, None), method="highs",
        )
        return result.status == 0

    def check(self, model: OrbitModel, n_x: int = 50, n_orbit: int = 200, seed: Optional[int] = None,
              mc_samples: Optional[int] = None) -> LegendreReport:
        seed = self.settings.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        xs = sample_temperature(model, n_x, rng)
        qs = np.array([self.heat(model, x, mc_samples or 100_000, seed) for x in xs])

        failures = []
        for k, (x, q) in enumerate(zip(xs, qs)):
            cloud = sample_orbit(model, n_orbit, seed + k, x=x, settings=self.settings)
            if not self.in_hull(cloud, q):
                failures.append(x.tolist())

        center = model.algebra.center
        pairs = tested = bad = 0
        while pairs < 50 and n_x > 1:
            pairs += 1
            i, j = rng.choice(n_x, size=2, replace=False)
            d = xs[i] - xs[j]
            if center.shape[0]:
                coeffs, *_ = linalg.lstsq(center.T, d)
                d = d - center.T @ coeffs
            if linalg.norm(d) < 1e-3:
                continue
            tested += 1
            if linalg.norm(qs[i] - qs[j]) <= 1e-6:
                bad += 1

        drift = 0.0
        if center.shape[0]:
            for x, q in zip(xs, qs):
                z = rng.normal(size=center.shape[0]) @ center
                drift = max(drift, float(np.max(np.abs(self.heat(model, x + z, mc_samples or 100_000, seed) - q))))

        mismatch = 0.0
        for x, q in zip(xs, qs):
            numeric = geometric_heat(catalog_log_z(model, self.settings), x, self.settings)
            mismatch = max(mismatch, float(linalg.norm(numeric - q) / max(1.0, linalg.norm(q))))

        zscore = None
        if mc_samples:
            worst = 0.0
            for k, (x, q) in enumerate(zip(xs[:3], qs[:3])):
                est = moment_mc(model, x, mc_samples, seed + k, self.settings)
                err = np.maximum(np.array(est.mean_stderr), 1e-12)
                worst = max(worst, float(np.max(np.abs(np.array(est.mean) - q) / err)))
            zscore = worst

        passed = (not failures and bad == 0 and drift <= 1e-7 and mismatch <= 1e-6
                  and (zscore is None or zscore <= _MC_Z_LIMIT))
        return LegendreReport(
            family=model.label, n_x=n_x, n_orbit=n_orbit, contained=n_x - len(failures), containment_failures=failures,
            injective_pairs=tested, injectivity_failures=bad, central_invariance_max=drift,
            heat_fd_mismatch=mismatch, mc_max_zscore=zscore, passed=passed,
        )


def default_grid(model: OrbitModel) -> List[List[float]]:
    if isinstance(model, Product):
        grids = [default_grid(m) for m in model.models]
        return [sum(points, []) for points in zip(*grids)]
    if model.family == Family.POINT:
        return [[0.5] * model.algebra.dim, [1.0] * model.algebra.dim, [-1.0] * model.algebra.dim]
    return [list(map(float, p)) for p in DEFAULT_GRIDS[model.family]]


class VerificationService:
    """Closed forms against the quadrature or Monte Carlo oracle."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def verify(self, model: OrbitModel, grid: Optional[Sequence[Sequence[float]]] = None, method: str = "quad",
               samples: int = 100_000, seed: Optional[int] = None, level: int = 0,
               tolerance: float = 1e-6) -> VerifyReport:
        """Quadrature rows pass within tolerance (relative); MC rows within 3 stderr."""
        seed = self.settings.seed if seed is None else seed
        if method not in ("quad", "mc"):
            raise InvalidParameter(f"Verification method must be 'quad' or 'mc', got '{method}'")
        rows = []
        for point in grid or default_grid(model):
            x = model.algebra.coerce(np.asarray(point, dtype=float), "x")
            form = model.closed_form(x, self.settings)
            if not form.finite:
                probe = divergence_probe(model, x, self.settings)
                rows.append(VerifyRow(x=x.tolist(), closed_form=math.inf, oracle=math.inf, stderr=0.0, rel_error=0.0,
                                      passed=probe.status == ProbeStatus.DIVERGENT))
                continue
            exact = math.exp(form.log_z)
            if method == "quad":
                est = laplace_quadrature(model, x, level, self.settings)
                rel = abs(est.value - exact) / exact
                passed = rel <= tolerance
            else:
                est = laplace_mc(model, x, samples, seed, self.settings)
                rel = abs(est.value - exact) / exact
                passed = abs(est.value - exact) <= 3 * est.stderr and not est.infinite_variance
            rows.append(VerifyRow(x=x.tolist(), closed_form=exact, oracle=est.value, stderr=est.stderr,
                                  rel_error=rel, passed=passed))
        report = VerifyReport(family=model.label, method=method, rows=rows, passed=all(r.passed for r in rows))
        if not report.passed:
            logger.warning(f"Verification of '{model.label}' failed on {sum(not r.passed for r in rows)} rows")
        return report


class PartitionService:
    """ThermoReport of a family at one point by a chosen method."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def _dh_log_z(self, structure: OrbitStructure) -> Callable[[np.ndarray], float]:
        def log_z(y: np.ndarray) -> float:
            try:
                value = dh_partition(structure.datum, structure.system, structure.weyl, structure.lam_t, y,
                                     self.settings)
            except OutsideCmax:
                return math.inf
            return math.log(value) if value > 0 else math.inf
        return log_z

    def cartan_coordinates(self, datum: RootDatum, x: np.ndarray) -> np.ndarray:
        y, *_ = linalg.lstsq(datum.cartan.T, x)
        if linalg.norm(datum.cartan.T @ y - x) > self.settings.rank_tol * (1.0 + linalg.norm(x)):
            raise InvalidParameter("the dh method needs x in the Cartan subalgebra")
        return y

    def partition(self, model: OrbitModel, x: Sequence[float], method: str = "catalog", samples: int = 100_000,
                  seed: Optional[int] = None, level: int = 0) -> ThermoReport:
        """method is one of dh, catalog, gaussian, product, quad, mc."""
        seed = self.settings.seed if seed is None else seed
        x = model.algebra.coerce(np.asarray(x, dtype=float), "x")
        if method == Method.CATALOG.value:
            return thermo_report(x, catalog_log_z(model, self.settings), Method.CATALOG,
                                 model.closed_form(x, self.settings), settings=self.settings)
        if method in (Method.GAUSSIAN.value, Method.PRODUCT.value):
            return thermo_report(x, method_log_z(model, Method(method), self.settings), Method(method),
                                 settings=self.settings)
        if method == Method.DH.value:
            structure = orbit_structure(model, self.settings)
            if not structure.datum.in_cartan_dual(model.base_point, self.settings.dual_tol):
                raise InvalidParameter(f"the dh method needs an orbit through t*, '{model.label}' has none")
            y = self.cartan_coordinates(structure.datum, x)
            return thermo_report(y, self._dh_log_z(structure), Method.DH, coordinates="cartan", settings=self.settings)
        if method in ("quad", "mc"):
            return self._oracle(model, x, method, samples, seed, level)
        raise InvalidParameter(f"Unknown method '{method}'")

    def partition_grid(self, model: OrbitModel, grid: Sequence[Sequence[float]], method: str = "catalog",
                       samples: int = 100_000, seed: Optional[int] = None, level: int = 0) -> ThermoGridReport:
        if not grid:
            raise InvalidParameter("partition grid has no points")
        points = [self.partition(model, x, method, samples, seed, level) for x in grid]
        return ThermoGridReport(family=model.label, points=points)

    def _oracle(self, model: OrbitModel, x: np.ndarray, method: str, samples: int, seed: int,
                level: int) -> ThermoReport:
        probe = divergence_probe(model, x, self.settings)
        if probe.status == ProbeStatus.DIVERGENT:
            return ThermoReport(x=x.tolist(), finite=False, z=math.inf, log_z=math.inf, method=Method.ORACLE)
        if method == "quad":
            z = laplace_quadrature(model, x, level, self.settings).value
        else:
            z = laplace_mc(model, x, samples, seed, self.settings).value
        moments = moment_mc(model, x, samples, seed, self.settings)
        q = np.array(moments.mean)
        log_z = math.log(z)
        return ThermoReport(x=x.tolist(), finite=True, z=z, log_z=log_z, q=q.tolist(),
                            entropy=float(q @ x) + log_z, fisher=moments.cov,
                            fisher_eigenvalues=linalg.eigvalsh(np.array(moments.cov)).tolist(), method=Method.ORACLE)
