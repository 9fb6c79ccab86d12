"""
Root decomposition of g_C with respect to a compactly embedded Cartan
subalgebra t, root classification, positive systems and the Weyl group.

Sign convention: a root alpha is stored through the real functional
beta = -i*alpha on t, so alpha(h) = i*beta(h) and i*alpha(h) = -beta(h).
A root is positive for the regular element x0 iff i*alpha(x0) > 0, that is
beta(x0) < 0. Use `i_alpha` instead of manipulating beta directly.

Elements of t are handled in Cartan coordinates: y = sum_k y_k h_k.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .algebra import (
    LieAlgebra, ad_matrix, bracket, cluster_eigenvalues, is_elliptic_element, killing_matrix, numerical_rank,
)
from .config import Settings, get_settings
from .errors import (
    ClosureOverflow, InvalidAlgebra, MissingCartanMeta, NoRegularElement,
    NotACartan, NotCompactlyEmbedded, NumericalDegeneracy,
)
from .models import RootKind, RootOrigin

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Root:
    """One root alpha with its complex root space (columns of space_basis)."""
    beta: np.ndarray
    space_basis: np.ndarray
    kind: RootKind
    origin: RootOrigin
    signature: Tuple[int, int, int]
    zero_bracket: bool = False

    @property
    def multiplicity(self) -> int:
        return self.space_basis.shape[1]

    def i_alpha(self, x: np.ndarray) -> np.ndarray:
        """i*alpha on Cartan coordinates; x may be a single point or a stack of rows."""
        return -(np.asarray(x) @ self.beta)


@dataclass(frozen=True, eq=False)
class RootDatum:
    """Roots of (g, t) in +/- pairs: roots[2k] and roots[2k+1] = -roots[2k]."""
    algebra: LieAlgebra
    cartan: np.ndarray
    roots: List[Root]
    projection: np.ndarray

    @property
    def zero_space_dim(self) -> int:
        return self.cartan.shape[0]

    @property
    def representatives(self) -> List[Root]:
        return self.roots[0::2]

    def partner(self, index: int) -> int:
        return index ^ 1

    def t_projection(self, y: Sequence[complex]) -> np.ndarray:
        """Cartan coordinates of the t-component of y along [t, g]."""
        return self.projection @ np.asarray(y)

    def to_algebra(self, x_t: Sequence[float]) -> np.ndarray:
        """Element of g with Cartan coordinates x_t."""
        return np.asarray(x_t) @ self.cartan

    def restrict(self, functional: Sequence[float]) -> np.ndarray:
        """Functional on g restricted to t, in the dual Cartan coordinates."""
        return self.cartan @ np.asarray(functional, dtype=float)

    def extend_to_g(self, lam_t: Sequence[float]) -> np.ndarray:
        """Functional on t extended to g by zero on [t, g]."""
        return np.asarray(lam_t, dtype=float) @ self.projection

    def in_cartan_dual(self, functional: Sequence[float], tol: float = 1e-9) -> bool:
        """True iff the functional vanishes on [t, g], i.e. lies in t* = [t, g]-perp."""
        lam = self.algebra.coerce(functional, "functional")
        scale = 1.0 + float(np.max(np.abs(lam)))
        for h in self.cartan:
            if np.max(np.abs(lam @ ad_matrix(self.algebra, h))) > tol * scale:
                return False
        return True


@dataclass(frozen=True, eq=False)
class PositiveSystem:
    """Delta+ = {alpha : i*alpha(x0) > 0}, with the non-compact part Delta_p+."""
    regular_element: np.ndarray
    positive: Tuple[int, ...]
    noncompact_positive: Tuple[int, ...]
    adapted: bool = False

    def compact_positive(self, datum: RootDatum) -> Tuple[int, ...]:
        return tuple(i for i in self.positive if datum.roots[i].kind == RootKind.COMPACT)


@dataclass(frozen=True, eq=False)
class WeylGroup:
    """Finite group of linear maps of t (matrices on Cartan coordinates)."""
    elements: List[np.ndarray]
    generators: List[np.ndarray] = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.elements)

    def act_functional(self, w: np.ndarray, functional: np.ndarray) -> np.ndarray:
        """(w.f)(x) = f(w^-1 x)."""
        return np.asarray(functional) @ linalg.inv(w)


# === root decomposition ===

def _check_cartan(algebra: LieAlgebra, cartan: np.ndarray, settings: Settings) -> None:
    r = cartan.shape[0]
    for a in range(r):
        for b in range(a + 1, r):
            if np.max(np.abs(bracket(algebra, cartan[a], cartan[b]))) > settings.spectral_tol:
                raise NotACartan(f"Cartan vectors {a} and {b} do not commute")
    stacked = np.vstack([ad_matrix(algebra, h) for h in cartan])
    centralizer = algebra.dim - numerical_rank(stacked, settings.rank_tol)
    if centralizer != r:
        raise NotACartan(f"centralizer of t has dimension {centralizer}, t has dimension {r}")
    for k, h in enumerate(cartan):
        if not is_elliptic_element(algebra, h, settings):
            raise NotCompactlyEmbedded(f"Cartan basis vector {k} is not elliptic")


def _t_projector(algebra: LieAlgebra, cartan: np.ndarray) -> np.ndarray:
    """Rows P with P @ y = Cartan coordinates of the t-component of y along [t, g]."""
    r = cartan.shape[0]
    if r == algebra.dim:
        return linalg.inv(cartan.T)
    images = linalg.orth(np.hstack([ad_matrix(algebra, h) for h in cartan]))
    frame = np.hstack([cartan.T, images])
    return linalg.inv(frame)[:r]


def _in_span(vectors: np.ndarray, rows: np.ndarray, tol: float) -> bool:
    if rows.shape[0] == 0:
        return False
    coeffs, *_ = np.linalg.lstsq(rows.T.astype(complex), vectors, rcond=None)
    return bool(linalg.norm(rows.T @ coeffs - vectors) <= tol * max(1.0, linalg.norm(vectors)))


def _root_origin(algebra: LieAlgebra, space: np.ndarray, settings: Settings) -> RootOrigin:
    meta = algebra.meta
    if meta is not None and (meta.v_space.shape[0] or meta.levi.shape[0]):
        solvable = np.vstack([meta.v_space, meta.center])
        if _in_span(space, solvable, settings.root_tol):
            return RootOrigin.SOLVABLE
        if _in_span(space, meta.levi, settings.root_tol):
            return RootOrigin.SEMISIMPLE
        raise InvalidAlgebra("root space lies neither in V + z nor in the reductive complement", "meta.levi")
    if numerical_rank(killing_matrix(algebra), settings.rank_tol) == algebra.dim:
        return RootOrigin.SEMISIMPLE
    raise InvalidAlgebra("cannot decide solvable or semisimple origin without V/levi metadata", "meta")


def star(z: np.ndarray) -> np.ndarray:
    """z* = -conj(z) for the real form g."""
    return -np.conj(z)


def bracket_vector(algebra: LieAlgebra, projection: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Cartan coordinates of i[z, z*] (a real element of t for z in a root space)."""
    return (projection @ (1j * bracket(algebra, z, star(z)))).real


def hermitian_form(algebra: LieAlgebra, projection: np.ndarray, beta: np.ndarray, space: np.ndarray) -> np.ndarray:
    """H_jk = alpha([b_j, b_k*]) = beta(i[b_j, b_k*]) on the root space basis."""
    m = space.shape[1]
    h = np.zeros((m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            w = 1j * bracket(algebra, space[:, j], star(space[:, k]))
            h[j, k] = beta @ (projection @ w)
    return (h + h.conj().T) / 2.0


def classify_root(datum: RootDatum, root: Root, settings: Optional[Settings] = None) -> Tuple[RootKind, Tuple[int, int, int]]:
    """Compact iff the hermitian form z -> alpha([z, z*]) is positive definite on the root space."""
    settings = settings or get_settings()
    return _classify(datum.algebra, datum.projection, root.beta, root.space_basis, settings)


def _classify(algebra: LieAlgebra, projection: np.ndarray, beta: np.ndarray, space: np.ndarray,
              settings: Settings) -> Tuple[RootKind, Tuple[int, int, int]]:
    eig = linalg.eigvalsh(hermitian_form(algebra, projection, beta, space))
    scale = max(1.0, float(np.max(np.abs(eig))))
    tol = settings.spectral_tol * scale
    signature = (int(np.sum(eig > tol)), int(np.sum(eig < -tol)), int(np.sum(np.abs(eig) <= tol)))
    kind = RootKind.COMPACT if signature[0] == len(eig) else RootKind.NONCOMPACT
    if signature[0] and signature[1]:
        logger.warning(f"Root space with mixed hermitian signature {signature}; classified non-compact")
    return kind, signature


def _zero_bracket(algebra: LieAlgebra, space: np.ndarray, rng: np.random.Generator) -> bool:
    """Some basis vector or random combination z has [z, z*] = 0."""
    candidates = [space[:, j] for j in range(space.shape[1])]
    if space.shape[1] > 1:
        for _ in range(20):
            coeffs = rng.normal(size=space.shape[1]) + 1j * rng.normal(size=space.shape[1])
            candidates.append(space @ coeffs)
    for z in candidates:
        z = z / linalg.norm(z)
        if linalg.norm(bracket(algebra, z, star(z))) <= 1e-9:
            return True
    return False


def _normalize_phase(space: np.ndarray) -> np.ndarray:
    if space.shape[1] != 1:
        return space
    col = space[:, 0]
    pivot = col[np.argmax(np.abs(col))]
    return space * (abs(pivot) / pivot)


def _try_decomposition(algebra: LieAlgebra, cartan: np.ndarray, weights: np.ndarray,
                       settings: Settings) -> Optional[List[Tuple[np.ndarray, np.ndarray]]]:
    """(beta, space) for the roots with Im(eigenvalue) > 0 of a generic combination, or None."""
    ads = [ad_matrix(algebra, h) for h in cartan]
    generic = sum(w * a for w, a in zip(weights, ads))
    values = linalg.eigvals(generic)
    scale = max(1.0, float(np.max(np.abs(values))))
    clusters = cluster_eigenvalues(values, settings.spectral_tol * scale * 10)
    zero = [idx for idx in clusters if abs(values[idx].mean()) <= settings.spectral_tol * scale * 10]
    zero_size = len(zero[0]) if zero else 0
    if zero_size != cartan.shape[0]:
        return None

    found = []
    for idx in clusters:
        mu = values[idx].mean()
        if mu.imag <= settings.spectral_tol * scale * 10:
            continue
        m = len(idx)
        _, _, vh = linalg.svd(generic.astype(complex) - mu * np.eye(algebra.dim))
        space = vh[-m:].conj().T
        beta = np.array([np.trace(space.conj().T @ a @ space).imag / m for a in ads])
        for a, b in zip(ads, beta):
            if linalg.norm(a @ space - 1j * b * space) > settings.root_tol * max(1.0, linalg.norm(a)):
                return None
        found.append((beta, _normalize_phase(space)))
    return found


def root_decomposition(algebra: LieAlgebra, cartan: Optional[np.ndarray] = None,
                       settings: Optional[Settings] = None) -> RootDatum:
    """Simultaneous eigenspace decomposition of {ad h : h in t} over C."""
    settings = settings or get_settings()
    cartan = algebra.cartan if cartan is None else np.asarray(cartan, dtype=float).reshape(-1, algebra.dim)
    if cartan.shape[0] == 0:
        raise MissingCartanMeta(f"algebra '{algebra.name}' has no Cartan subalgebra in its metadata")
    _check_cartan(algebra, cartan, settings)
    projection = _t_projector(algebra, cartan)

    rng = np.random.default_rng(settings.seed)
    found = None
    for attempt in range(settings.max_generic_draws):
        weights = rng.normal(size=cartan.shape[0])
        found = _try_decomposition(algebra, cartan, weights, settings)
        if found is not None:
            break
        logger.debug(f"Generic Cartan combination {attempt + 1} did not separate the root spaces; redrawing")
    if found is None:
        raise NumericalDegeneracy(f"root spaces not separated after {settings.max_generic_draws} generic draws")

    pairs = []
    for beta, space in found:
        nz = np.nonzero(np.abs(beta) > settings.root_tol)[0]
        if nz.size == 0:
            raise NumericalDegeneracy("zero root functional")
        # representative has i*alpha > 0 on the first Cartan direction it sees
        if beta[nz[0]] > 0:
            beta, space = -beta, np.conj(space)
        pairs.append((beta, space))
    pairs.sort(key=lambda p: tuple(np.round(p[0], 9)))

    roots = []
    for beta, space in pairs:
        origin = _root_origin(algebra, space, settings)
        for b, s in ((beta, space), (-beta, np.conj(space))):
            kind, signature = _classify(algebra, projection, b, s, settings)
            zero = _zero_bracket(algebra, s, rng) if kind == RootKind.NONCOMPACT else False
            if kind == RootKind.COMPACT and s.shape[1] > 1:
                logger.warning(f"Compact root {np.round(b, 6).tolist()} has multiplicity {s.shape[1]}")
            roots.append(Root(b, s, kind, origin, signature, zero))

    total = 2 * sum(r.multiplicity for r in roots[0::2]) + cartan.shape[0]
    if total != algebra.dim:
        raise NumericalDegeneracy(f"root spaces account for dimension {total}, algebra has {algebra.dim}")
    logger.info(f"Root decomposition of '{algebra.name}': {len(roots)} roots, dim t = {cartan.shape[0]}")
    return RootDatum(algebra, cartan, roots, projection)


def cone_potential(datum: RootDatum) -> bool:
    """[x_alpha, x_alpha*] != 0 for every nonzero non-compact root vector."""
    return not any(r.zero_bracket for r in datum.roots if r.kind == RootKind.NONCOMPACT)


# === positive systems ===

def _chamber_system(datum: RootDatum, x0: np.ndarray) -> PositiveSystem:
    positive = tuple(i for i, r in enumerate(datum.roots) if r.i_alpha(x0) > 0)
    noncompact = tuple(i for i in positive if datum.roots[i].kind == RootKind.NONCOMPACT)
    return PositiveSystem(x0, positive, noncompact)


def positive_systems(datum: RootDatum, settings: Optional[Settings] = None) -> List[PositiveSystem]:
    """One positive system per realized chamber of the arrangement {beta = 0} in t."""
    settings = settings or get_settings()
    r = datum.zero_space_dim
    reps = np.array([root.beta for root in datum.representatives]).reshape(-1, r)
    if reps.shape[0] == 0:
        return [PositiveSystem(np.ones(r) / np.sqrt(r), (), ())]

    rng = np.random.default_rng(settings.seed)
    samples = rng.normal(size=(settings.chamber_samples, r))
    samples /= linalg.norm(samples, axis=1, keepdims=True)
    norms = linalg.norm(reps, axis=1)
    values = samples @ reps.T
    margin = np.min(np.abs(values) / norms, axis=1)
    regular = margin > settings.regular_tol

    best: Dict[Tuple[bool, ...], int] = {}
    for k in np.nonzero(regular)[0]:
        pattern = tuple(bool(v) for v in values[k] < 0)
        if pattern not in best or margin[k] > margin[best[pattern]]:
            best[pattern] = k
    if not best:
        raise NoRegularElement(f"no regular element among {settings.chamber_samples} samples of t")

    systems = [_chamber_system(datum, samples[best[p]]) for p in sorted(best, reverse=True)]
    logger.debug(f"Found {len(systems)} chambers")
    return systems


def is_adapted(datum: RootDatum, system: PositiveSystem, weyl: "WeylGroup", tol: float = 1e-9) -> bool:
    """Delta_p+ is invariant under the Weyl group."""
    functionals = [datum.roots[i].beta for i in system.noncompact_positive]
    if not functionals:
        return True
    base = np.array(functionals)
    for w in weyl.elements:
        moved = weyl.act_functional(w, base)
        for f in moved:
            if not np.any(np.max(np.abs(base - f), axis=1) <= tol * (1.0 + linalg.norm(f))):
                return False
    return True


def adapted_systems(datum: RootDatum, weyl: "WeylGroup", settings: Optional[Settings] = None) -> List[PositiveSystem]:
    """All realized positive systems with their adaptedness flag set."""
    out = []
    for system in positive_systems(datum, settings):
        out.append(PositiveSystem(system.regular_element, system.positive, system.noncompact_positive,
                                  is_adapted(datum, system, weyl)))
    return out


# === Weyl group ===

def reflection(datum: RootDatum, root: Root) -> np.ndarray:
    """r_alpha(x) = x - alpha(x) alpha_check, on Cartan coordinates."""
    v = bracket_vector(datum.algebra, datum.projection, root.space_basis[:, 0])
    return np.eye(datum.zero_space_dim) - (2.0 / (root.beta @ v)) * np.outer(v, root.beta)


def coroot(datum: RootDatum, root: Root) -> np.ndarray:
    """Real Cartan coordinates v with alpha_check = -2i v / beta(v) for a compact root."""
    v = bracket_vector(datum.algebra, datum.projection, root.space_basis[:, 0])
    return 2.0 * v / (root.beta @ v)


def weyl_group(datum: RootDatum, settings: Optional[Settings] = None) -> WeylGroup:
    """Closure of the reflections in the compact roots."""
    settings = settings or get_settings()
    r = datum.zero_space_dim
    generators = [reflection(datum, root) for root in datum.representatives if root.kind == RootKind.COMPACT]

    def key(m: np.ndarray) -> Tuple[float, ...]:
        return tuple(np.round(m, 8).ravel() + 0.0)

    identity = np.eye(r)
    seen = {key(identity)}
    elements = [identity]
    queue = deque([identity])
    while queue:
        g = queue.popleft()
        for s in generators:
            h = s @ g
            k = key(h)
            if k in seen:
                continue
            seen.add(k)
            elements.append(h)
            queue.append(h)
            if len(elements) > settings.weyl_limit:
                raise ClosureOverflow(f"Weyl group closure exceeded {settings.weyl_limit} elements")
    return WeylGroup(elements, generators)


def dominant_conjugate(datum: RootDatum, system: PositiveSystem, weyl: WeylGroup, lam_t: np.ndarray,
                       tol: float = 1e-9) -> np.ndarray:
    """Weyl conjugate of lambda with lambda(alpha_check) >= 0 for the compact positive roots."""
    compact = [coroot(datum, datum.roots[i]) for i in system.compact_positive(datum)]
    if not compact:
        return np.asarray(lam_t, dtype=float)
    checks = np.array(compact)
    for w in weyl.elements:
        moved = weyl.act_functional(w, lam_t)
        if np.all(checks @ moved >= -tol * (1.0 + linalg.norm(lam_t))):
            return moved
    return np.asarray(lam_t, dtype=float)
