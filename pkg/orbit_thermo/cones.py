"""
Polyhedral cones in small dimension: generator (V) and inequality (H)
representations, double-description conversion, membership, duality and
pointedness. Builds C_min and C_max from a positive system and runs the
sampling falsifier for lambda in W_min*.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Sequence, Tuple

import joblib
import numpy as np
from scipy import linalg
from scipy.optimize import linprog, nnls

from .algebra import LieAlgebra, adjoint_group_element, numerical_rank
from .config import Settings, get_settings
from .errors import DimensionMismatch, DimensionTooLarge, InvalidParameter
from .models import ConeReport, FalsifierVerdict, FalsifierWitness, Representation
from .roots import PositiveSystem, RootDatum, bracket_vector

logger = logging.getLogger(__name__)

_ZERO = 1e-12


@dataclass(frozen=True, eq=False)
class Cone:
    """Generators: nonnegative hull of the rows. Inequalities: {p : phi . p >= 0 for all rows phi}."""
    ambient_dim: int
    representation: Representation
    vectors: np.ndarray

    @classmethod
    def create(cls, ambient_dim: int, representation: Representation,
               vectors: Optional[Sequence[Sequence[float]]] = None) -> "Cone":
        """Drop zero rows and exact duplicates of unit directions."""
        arr = np.zeros((0, ambient_dim)) if vectors is None or len(vectors) == 0 \
            else np.asarray(vectors, dtype=float).reshape(-1, ambient_dim)
        kept: List[np.ndarray] = []
        for v in arr:
            n = linalg.norm(v)
            if n <= _ZERO:
                continue
            u = v / n
            if any(np.max(np.abs(u - k)) <= 1e-12 for k in kept):
                continue
            kept.append(u)
        return cls(ambient_dim, representation, np.array(kept).reshape(-1, ambient_dim))

    @classmethod
    def generated(cls, ambient_dim: int, vectors=None) -> "Cone":
        return cls.create(ambient_dim, Representation.GENERATORS, vectors)

    @classmethod
    def cut_out(cls, ambient_dim: int, vectors=None) -> "Cone":
        return cls.create(ambient_dim, Representation.INEQUALITIES, vectors)

    @property
    def is_generators(self) -> bool:
        return self.representation == Representation.GENERATORS

    def report(self, pointed: bool, subset_of_cmax: Optional[bool] = None) -> ConeReport:
        return ConeReport(representation=self.representation, vectors=self.vectors.tolist(),
                          pointed=pointed, subset_of_cmax=subset_of_cmax)


def _check_point(cone: Cone, point: Sequence[float]) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if p.shape != (cone.ambient_dim,):
        raise DimensionMismatch(f"point has shape {p.shape}, cone lives in dimension {cone.ambient_dim}")
    return p


def _check_size(cone: Cone, settings: Settings) -> None:
    if cone.ambient_dim > settings.max_cone_dim:
        raise DimensionTooLarge(f"cone conversion supports ambient dimension <= {settings.max_cone_dim}, got {cone.ambient_dim}")


# === double description ===

def _extreme_rays(a: np.ndarray, dim: int, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Extreme rays and lineality basis of {x : a x >= 0} by the Motzkin double description method."""
    if a.shape[0] == 0:
        return np.zeros((0, dim)), np.eye(dim)
    lineality = linalg.null_space(a, rcond=tol).T
    if lineality.shape[0] == dim:
        return np.zeros((0, dim)), lineality
    if lineality.shape[0]:
        frame = linalg.null_space(lineality, rcond=tol)
    else:
        frame = np.eye(dim)
    reduced = a @ frame
    k = frame.shape[1]

    # start from k independent constraints: the rays are the columns of the inverse
    order: List[int] = []
    for i in range(reduced.shape[0]):
        if numerical_rank(reduced[order + [i]], tol) == len(order) + 1:
            order.append(i)
        if len(order) == k:
            break
    basis_inv = linalg.inv(reduced[order])
    rays = [basis_inv[:, j] / linalg.norm(basis_inv[:, j]) for j in range(k)]
    processed = list(order)
    remaining = [i for i in range(reduced.shape[0]) if i not in order]

    def zero_set(r: np.ndarray) -> FrozenSet[int]:
        return frozenset(i for i in processed if abs(reduced[i] @ r) <= tol)

    for i in remaining:
        row = reduced[i]
        values = [row @ r for r in rays]
        plus = [r for r, v in zip(rays, values) if v > tol]
        zero = [r for r, v in zip(rays, values) if abs(v) <= tol]
        minus = [r for r, v in zip(rays, values) if v < -tol]
        new_rays = plus + zero
        if plus and minus:
            zsets = [zero_set(r) for r in rays]
            for p in plus:
                zp = zero_set(p)
                for n in minus:
                    common = zp & zero_set(n)
                    if len(common) < k - 2:
                        continue
                    # adjacent iff no other ray is tight on every common constraint
                    blocked = False
                    for r, zr in zip(rays, zsets):
                        if r is p or r is n:
                            continue
                        if common <= zr:
                            blocked = True
                            break
                    if blocked:
                        continue
                    w = (row @ p) * n - (row @ n) * p
                    new_rays.append(w / linalg.norm(w))
        processed.append(i)
        rays = new_rays
        if not rays:
            break

    out = np.array([frame @ r for r in rays]).reshape(-1, dim) if rays else np.zeros((0, dim))
    return Cone.generated(dim, out).vectors, lineality


def to_generators(cone: Cone, settings: Optional[Settings] = None) -> Cone:
    """Generator form: extreme rays R plus +/- a lineality basis L."""
    settings = settings or get_settings()
    if cone.is_generators:
        return cone
    _check_size(cone, settings)
    rays, lineality = _extreme_rays(cone.vectors, cone.ambient_dim, settings.dual_tol)
    return Cone.generated(cone.ambient_dim, np.vstack([rays, lineality, -lineality]))


def to_inequalities(cone: Cone, settings: Optional[Settings] = None) -> Cone:
    """Inequality form: generators of the dual cone, F plus +/- its lineality."""
    settings = settings or get_settings()
    if not cone.is_generators:
        return cone
    _check_size(cone, settings)
    rays, lineality = _extreme_rays(cone.vectors, cone.ambient_dim, settings.dual_tol)
    return Cone.cut_out(cone.ambient_dim, np.vstack([rays, lineality, -lineality]))


def dual(cone: Cone, representation: Optional[Representation] = None, settings: Optional[Settings] = None) -> Cone:
    """C* = {v : phi(v) >= 0 for all phi in C}; swaps the representation unless one is requested."""
    settings = settings or get_settings()
    _check_size(cone, settings)
    swapped = Representation.INEQUALITIES if cone.is_generators else Representation.GENERATORS
    result = Cone(cone.ambient_dim, swapped, cone.vectors)
    if representation is None or representation == swapped:
        return result
    if representation == Representation.GENERATORS:
        return to_generators(result, settings)
    return to_inequalities(result, settings)


# === predicates ===

def contains(cone: Cone, point: Sequence[float], strict: bool = False, settings: Optional[Settings] = None) -> bool:
    """Membership with tolerance cone_tol * (1 + |point|); strict tests the interior."""
    settings = settings or get_settings()
    p = _check_point(cone, point)
    tol = settings.cone_tol * (1.0 + linalg.norm(p))
    if cone.is_generators:
        if strict:
            inequalities = to_inequalities(cone, settings)
            rows = inequalities.vectors
            # a pair phi, -phi means the cone lies in a hyperplane and has empty interior
            for row in rows:
                if np.any(np.max(np.abs(rows + row), axis=1) <= 1e-9):
                    return False
            return contains(inequalities, p, strict=True, settings=settings)
        if cone.vectors.shape[0] == 0:
            return bool(linalg.norm(p) <= tol)
        _, residual = nnls(cone.vectors.T, p)
        return bool(residual <= tol)
    values = cone.vectors @ p
    if strict:
        return bool(np.all(values > tol))
    return bool(np.all(values >= -tol))


def is_pointed(cone: Cone, settings: Optional[Settings] = None) -> bool:
    """C intersected with -C is {0}."""
    settings = settings or get_settings()
    if cone.is_generators:
        if cone.vectors.shape[0] == 0:
            return True
        a = np.vstack([cone.vectors.T, np.ones((1, cone.vectors.shape[0]))])
        b = np.zeros(cone.ambient_dim + 1)
        b[-1] = 1.0
        return bool(nnls(a, b)[1] > settings.cone_tol)
    return numerical_rank(cone.vectors, settings.rank_tol) == cone.ambient_dim if cone.vectors.shape[0] else cone.ambient_dim == 0


def is_subset(a: Cone, b: Cone, settings: Optional[Settings] = None) -> bool:
    """a is contained in b."""
    settings = settings or get_settings()
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch(f"cones live in dimensions {a.ambient_dim} and {b.ambient_dim}")
    gens = to_generators(a, settings)
    return all(contains(b, g, settings=settings) for g in gens.vectors)


def same_cone(a: Cone, b: Cone, settings: Optional[Settings] = None) -> bool:
    return is_subset(a, b, settings) and is_subset(b, a, settings)


def transform(cone: Cone, matrix: np.ndarray) -> Cone:
    """Image of the cone under an invertible linear map of the ambient space."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (cone.ambient_dim, cone.ambient_dim):
        raise DimensionMismatch(f"map has shape {m.shape}, cone lives in dimension {cone.ambient_dim}")
    if cone.is_generators:
        return Cone.generated(cone.ambient_dim, cone.vectors @ m.T)
    return Cone.cut_out(cone.ambient_dim, cone.vectors @ linalg.inv(m))


def interior_point(cone: Cone, settings: Optional[Settings] = None) -> Optional[np.ndarray]:
    """A point with maximal margin in the unit box, or None when the interior is empty."""
    settings = settings or get_settings()
    ineq = to_inequalities(cone, settings)
    d = cone.ambient_dim
    if ineq.vectors.shape[0] == 0:
        return np.eye(d)[0] if d else np.zeros(0)
    # maximize s subject to phi . x >= s, -1 <= x <= 1
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-ineq.vectors, np.ones((ineq.vectors.shape[0], 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(ineq.vectors.shape[0]),
                  bounds=[(-1.0, 1.0)] * d + [(None, 1.0)], method="highs")
    if not res.success or res.x[-1] <= settings.cone_tol:
        return None
    return res.x[:d]


# === C_min, C_max ===

def c_min(datum: RootDatum, system: PositiveSystem, settings: Optional[Settings] = None) -> Cone:
    """Generated by the t-components of i[x_alpha, x_alpha*] over the non-compact positive roots."""
    settings = settings or get_settings()
    rng = np.random.default_rng(settings.seed)
    generators = []
    for i in system.noncompact_positive:
        space = datum.roots[i].space_basis
        vectors = [space[:, j] for j in range(space.shape[1])]
        if space.shape[1] > 1:
            for _ in range(8):
                coeffs = rng.normal(size=space.shape[1]) + 1j * rng.normal(size=space.shape[1])
                vectors.append(space @ coeffs)
        for z in vectors:
            generators.append(bracket_vector(datum.algebra, datum.projection, z / linalg.norm(z)))
    return Cone.generated(datum.zero_space_dim, generators)


def c_max(datum: RootDatum, system: PositiveSystem) -> Cone:
    """{x in t : i*alpha(x) >= 0 for all non-compact positive alpha}."""
    rows = [-datum.roots[i].beta for i in system.noncompact_positive]
    return Cone.cut_out(datum.zero_space_dim, rows)


def lambda_in_cmin_star(lam_t: Sequence[float], cmin: Cone, strict: bool = False,
                        settings: Optional[Settings] = None) -> bool:
    """lambda(c) >= -dual_tol for every generator c of C_min (strict: > dual_tol)."""
    settings = settings or get_settings()
    lam = np.asarray(lam_t, dtype=float)
    gens = to_generators(cmin, settings).vectors
    if gens.shape[0] == 0:
        return True
    values = gens @ lam
    if strict:
        return bool(np.all(values > settings.dual_tol))
    return bool(np.all(values >= -settings.dual_tol))


# === W_min* falsifier ===

@dataclass(frozen=True)
class FalsifierResult:
    verdict: FalsifierVerdict
    samples: int
    witness: Optional[FalsifierWitness] = None


def _random_word(rng: np.random.Generator, dim: int) -> List[np.ndarray]:
    word = []
    for _ in range(int(rng.integers(1, 5))):
        direction = rng.normal(size=dim)
        direction /= linalg.norm(direction)
        word.append(direction * rng.uniform(0.0, 3.0))
    return word


def _falsifier_chunk(algebra: LieAlgebra, generators: np.ndarray, lam: np.ndarray, count: int,
                     seed: np.random.SeedSequence, tol: float) -> Optional[FalsifierWitness]:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        word = _random_word(rng, algebra.dim)
        g = adjoint_group_element(algebra, word)
        values = (generators @ g.T) @ lam
        k = int(np.argmin(values))
        if values[k] < -tol:
            return FalsifierWitness(word=[x.tolist() for x in word], generator=generators[k].tolist(),
                                    value=float(values[k]))
    return None


def wmin_star_falsifier(datum: RootDatum, cmin: Cone, functional: Sequence[float], samples: Optional[int] = None,
                        seed: Optional[int] = None, settings: Optional[Settings] = None) -> FalsifierResult:
    """Sample Ad(g) C_min and look for lambda(Ad(g) c) < 0. Not refuted is a necessary condition only."""
    settings = settings or get_settings()
    algebra = datum.algebra
    lam = algebra.coerce(np.asarray(functional, dtype=float), "functional")
    samples = settings.falsifier_samples if samples is None else samples
    if samples < 1:
        raise InvalidParameter(f"falsifier needs at least one sample, got {samples}")
    seed = settings.seed if seed is None else seed
    gens_t = to_generators(cmin, settings).vectors
    if gens_t.shape[0] == 0:
        return FalsifierResult(FalsifierVerdict.NOT_REFUTED, samples)
    generators = np.array([datum.to_algebra(c) for c in gens_t])

    chunk = settings.falsifier_chunk
    sizes = [min(chunk, samples - start) for start in range(0, samples, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    results = joblib.Parallel(n_jobs=min(settings.threads, len(sizes)), prefer="threads")(
        joblib.delayed(_falsifier_chunk)(algebra, generators, lam, n, s, settings.falsifier_tol)
        for n, s in zip(sizes, seeds)
    )
    for witness in results:
        if witness is not None:
            logger.info(f"Functional refuted: lambda(Ad(g) c) = {witness.value:.3e}")
            return FalsifierResult(FalsifierVerdict.REFUTED, samples, witness)
    return FalsifierResult(FalsifierVerdict.NOT_REFUTED, samples)
