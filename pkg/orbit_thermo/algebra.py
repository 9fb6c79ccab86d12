"""
Finite-dimensional real Lie algebras given by structure constants.
Bracket, adjoint and Killing operations, matrix spectral utilities
(ellipticity, multiplicative Jordan decomposition, escape classification)
and builders for the catalog families.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.cluster.hierarchy import fcluster, linkage

from .config import Settings, get_settings
from .errors import DimensionMismatch, InvalidAlgebra, NumericalDegeneracy, SingularMatrix
from .models import EscapeVerdict

logger = logging.getLogger(__name__)


def _rows(vectors: Optional[Iterable[Sequence[float]]], dim: int) -> np.ndarray:
    """Stack coordinate vectors into a (k, dim) float array, possibly empty."""
    if vectors is None:
        return np.zeros((0, dim))
    arr = np.asarray(list(vectors), dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    return arr.reshape(-1, dim)


def numerical_rank(matrix: np.ndarray, rel_tol: float) -> int:
    if matrix.size == 0:
        return 0
    s = linalg.svdvals(matrix)
    return int(np.sum(s > rel_tol * max(1.0, s[0])))


@dataclass(frozen=True, eq=False)
class DecompositionMeta:
    """Centre, Cartan subalgebra, V = [t, u] and reductive complement, as row bases."""
    center: np.ndarray
    cartan: np.ndarray
    v_space: np.ndarray
    levi: np.ndarray

    @classmethod
    def build(cls, dim: int, center=None, cartan=None, v_space=None, levi=None) -> "DecompositionMeta":
        return cls(_rows(center, dim), _rows(cartan, dim), _rows(v_space, dim), _rows(levi, dim))

    def transformed(self, pinv: np.ndarray) -> "DecompositionMeta":
        """Coordinates after a change of basis with inverse matrix pinv."""
        return DecompositionMeta(self.center @ pinv, self.cartan @ pinv, self.v_space @ pinv, self.levi @ pinv)


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """Real Lie algebra with [e_i, e_j] = sum_k structure[i, j, k] e_k."""
    name: str
    basis_names: Tuple[str, ...]
    structure: np.ndarray
    meta: Optional[DecompositionMeta] = None

    def __post_init__(self):
        c = self.structure
        if c.ndim != 3 or c.shape[0] != c.shape[1] or c.shape[1] != c.shape[2]:
            raise InvalidAlgebra(f"structure tensor has shape {c.shape}, expected (dim, dim, dim)", "structure")
        if len(self.basis_names) != c.shape[0]:
            raise InvalidAlgebra(f"{len(self.basis_names)} basis names for dim {c.shape[0]}", "basis")

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    @property
    def cartan(self) -> np.ndarray:
        return self.meta.cartan if self.meta is not None else np.zeros((0, self.dim))

    @property
    def center(self) -> np.ndarray:
        return self.meta.center if self.meta is not None else np.zeros((0, self.dim))

    def coerce(self, x: Sequence[float], what: str = "element") -> np.ndarray:
        """Return x as a vector of length dim or raise DimensionMismatch."""
        arr = np.asarray(x)
        if arr.shape != (self.dim,):
            raise DimensionMismatch(f"{what} has shape {arr.shape}, algebra '{self.name}' has dim {self.dim}")
        return arr

    def basis_vector(self, name: str) -> np.ndarray:
        try:
            index = self.basis_names.index(name)
        except ValueError:
            raise ValueError(f"Basis element '{name}' not found in '{self.name}'")
        return np.eye(self.dim)[index]


def from_triples(name: str, basis: Sequence[str], triples: Iterable[Sequence[float]],
                 meta: Optional[DecompositionMeta] = None) -> LieAlgebra:
    """Build an algebra from sparse (i, j, k, value) triples with i < j."""
    dim = len(basis)
    c = np.zeros((dim, dim, dim))
    for i, j, k, value in triples:
        i, j, k = int(i), int(j), int(k)
        c[i, j, k] += value
        c[j, i, k] -= value
    return LieAlgebra(name, tuple(basis), c, meta)


def to_triples(algebra: LieAlgebra, tol: float = 0.0) -> List[Tuple[int, int, int, float]]:
    """Sparse (i, j, k, value) triples with i < j."""
    c = algebra.structure
    out = []
    for i in range(algebra.dim):
        for j in range(i + 1, algebra.dim):
            for k in np.nonzero(np.abs(c[i, j]) > tol)[0]:
                out.append((i, j, int(k), float(c[i, j, k])))
    return out


# === core operations ===

def bracket(algebra: LieAlgebra, a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    """[a, b] in the algebra basis (complex coefficients allowed)."""
    a = algebra.coerce(a)
    b = algebra.coerce(b)
    return np.einsum("i,j,ijk->k", a, b, algebra.structure)


def ad_matrix(algebra: LieAlgebra, x: Sequence[float]) -> np.ndarray:
    """Matrix of ad x; column j is [x, e_j]."""
    x = algebra.coerce(x)
    return np.einsum("i,ijk->kj", x, algebra.structure)


def ad_stack(algebra: LieAlgebra) -> np.ndarray:
    """ad e_i for every basis element, shape (dim, dim, dim)."""
    return np.transpose(algebra.structure, (0, 2, 1))


def killing_matrix(algebra: LieAlgebra) -> np.ndarray:
    ads = ad_stack(algebra)
    return np.einsum("ikj,ljk->il", ads, ads)


def killing_form(algebra: LieAlgebra, x: Sequence[float], y: Sequence[float]) -> float:
    """tr(ad x ad y)."""
    return float(np.trace(ad_matrix(algebra, x) @ ad_matrix(algebra, y)))


def jacobi_residual(algebra: LieAlgebra) -> float:
    c = algebra.structure
    t = np.einsum("ijk,klm->ijlm", c, c)
    cyclic = t + np.transpose(t, (2, 0, 1, 3)) + np.transpose(t, (1, 2, 0, 3))
    return float(np.max(np.abs(cyclic))) if cyclic.size else 0.0


def antisymmetry_residual(algebra: LieAlgebra) -> float:
    c = algebra.structure
    return float(np.max(np.abs(c + np.transpose(c, (1, 0, 2))))) if c.size else 0.0


def validate_algebra(algebra: LieAlgebra, settings: Optional[Settings] = None) -> LieAlgebra:
    """Check antisymmetry, Jacobi and metadata invariants; raise InvalidAlgebra with a field path."""
    settings = settings or get_settings()
    tol = settings.algebra_tol
    if antisymmetry_residual(algebra) > tol:
        raise InvalidAlgebra("structure constants are not antisymmetric", "structure")
    residual = jacobi_residual(algebra)
    if residual > tol:
        raise InvalidAlgebra(f"Jacobi identity fails (residual {residual:.3e})", "structure")
    meta = algebra.meta
    if meta is None:
        return algebra

    for field in ("center", "cartan", "v_space", "levi"):
        block = getattr(meta, field)
        if block.shape[0] and numerical_rank(block, settings.rank_tol) < block.shape[0]:
            raise InvalidAlgebra("basis vectors are linearly dependent", f"meta.{field}")

    for pos, z in enumerate(meta.center):
        if np.max(np.abs(ad_matrix(algebra, z))) > settings.spectral_tol:
            raise InvalidAlgebra("vector is not central", f"meta.center[{pos}]")

    if meta.cartan.shape[0]:
        if meta.center.shape[0]:
            both = np.vstack([meta.cartan, meta.center])
            if numerical_rank(both, settings.rank_tol) > meta.cartan.shape[0]:
                raise InvalidAlgebra("centre is not contained in the Cartan subalgebra", "meta.center")
        for a, h in enumerate(meta.cartan):
            for b in range(a + 1, meta.cartan.shape[0]):
                if np.max(np.abs(bracket(algebra, h, meta.cartan[b]))) > settings.spectral_tol:
                    raise InvalidAlgebra(f"Cartan vectors {a} and {b} do not commute", f"meta.cartan[{a}]")
        stacked = np.vstack([ad_matrix(algebra, h) for h in meta.cartan])
        centralizer = algebra.dim - numerical_rank(stacked, settings.rank_tol)
        if centralizer != meta.cartan.shape[0]:
            raise InvalidAlgebra(f"Cartan subalgebra is not self-centralizing (centralizer dim {centralizer})",
                                 "meta.cartan")

    if meta.v_space.shape[0] and meta.levi.shape[0]:
        both = np.vstack([meta.v_space, meta.levi])
        if numerical_rank(both, settings.rank_tol) < both.shape[0]:
            raise InvalidAlgebra("V and the reductive complement intersect", "meta.levi")

    if meta.v_space.shape[0]:
        center = meta.center
        for a, v in enumerate(meta.v_space):
            for b in range(a + 1, meta.v_space.shape[0]):
                w = bracket(algebra, v, meta.v_space[b])
                if center.shape[0]:
                    coeffs, *_ = linalg.lstsq(center.T, w)
                    w = w - center.T @ coeffs
                if np.max(np.abs(w)) > settings.spectral_tol:
                    raise InvalidAlgebra(f"[v_{a}, v_{b}] leaves the centre", f"meta.v_space[{a}]")
    return algebra


# === spectral utilities ===

def cluster_eigenvalues(values: np.ndarray, tol: float) -> List[np.ndarray]:
    """Single-linkage clusters of complex eigenvalues closer than tol."""
    if len(values) == 1:
        return [np.array([0])]
    points = np.column_stack([values.real, values.imag])
    labels = fcluster(linkage(points, method="single"), t=tol, criterion="distance")
    return [np.nonzero(labels == label)[0] for label in np.unique(labels)]


def is_elliptic_matrix(m: np.ndarray, settings: Optional[Settings] = None) -> bool:
    """Semisimple with purely imaginary spectrum."""
    settings = settings or get_settings()
    n = m.shape[0]
    if n == 0:
        return True
    w = linalg.eigvals(m)
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.max(np.abs(w.real)) > settings.spectral_tol * scale:
        return False
    norm = max(1.0, float(linalg.norm(m, 2)))
    for idx in cluster_eigenvalues(w, settings.spectral_tol * scale):
        mu = w[idx].mean()
        geometric = n - numerical_rank(m - mu * np.eye(n), settings.rank_tol * norm / max(1.0, norm))
        if geometric != len(idx):
            return False
    return True


def is_elliptic_element(algebra: LieAlgebra, x: Sequence[float], settings: Optional[Settings] = None) -> bool:
    """ad x is semisimple with purely imaginary spectrum."""
    return is_elliptic_matrix(ad_matrix(algebra, x), settings)


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    """Generalized eigenspaces of a matrix: cluster centres, basis and its inverse."""
    centers: np.ndarray
    basis: np.ndarray
    inverse: np.ndarray
    slices: Tuple[slice, ...]

    def combine(self, values: np.ndarray) -> np.ndarray:
        """sum_mu values[mu] * P_mu, real part."""
        diag = np.concatenate([np.full(s.stop - s.start, v) for s, v in zip(self.slices, values)])
        return ((self.basis * diag) @ self.inverse).real

    def component(self, index: int, v: np.ndarray) -> np.ndarray:
        s = self.slices[index]
        return self.basis[:, s] @ (self.inverse[s] @ v)


def spectral_split(g: np.ndarray, settings: Optional[Settings] = None) -> SpectralSplit:
    """Split into generalized eigenspaces from the complex eigenstructure."""
    settings = settings or get_settings()
    n = g.shape[0]
    w = linalg.eigvals(g)
    scale = max(1.0, float(np.max(np.abs(w))))
    clusters = cluster_eigenvalues(w, settings.spectral_tol * scale)
    centers, blocks, slices = [], [], []
    start = 0
    for idx in clusters:
        mu = w[idx].mean()
        size = len(idx)
        power = np.linalg.matrix_power(g.astype(complex) - mu * np.eye(n), size)
        _, s, vh = linalg.svd(power)
        if s[-size] > np.sqrt(settings.rank_tol) * max(1.0, s[0]):
            raise NumericalDegeneracy(f"generalized eigenspace of {mu:.6g} has the wrong dimension")
        blocks.append(vh[-size:].conj().T)
        centers.append(mu)
        slices.append(slice(start, start + size))
        start += size
    basis = np.hstack(blocks)
    cond = np.linalg.cond(basis)
    if not np.isfinite(cond) or cond > 1.0 / settings.degeneracy_tol:
        raise NumericalDegeneracy(f"eigencluster separation too small (projector condition {cond:.3e})")
    return SpectralSplit(np.asarray(centers), basis, linalg.inv(basis), tuple(slices))


@dataclass(frozen=True, eq=False)
class JordanTriple:
    """g = g_e g_h g_u with commuting elliptic, hyperbolic and unipotent factors."""
    elliptic: np.ndarray
    hyperbolic: np.ndarray
    unipotent: np.ndarray


def multiplicative_jordan(g: np.ndarray, settings: Optional[Settings] = None) -> JordanTriple:
    """Multiplicative Jordan decomposition of an invertible real matrix."""
    settings = settings or get_settings()
    g = np.asarray(g, dtype=float)
    if abs(linalg.det(g)) <= 1e-12:
        raise SingularMatrix("multiplicative Jordan decomposition needs an invertible matrix")
    split = spectral_split(g, settings)
    semisimple = split.combine(split.centers)
    unipotent = linalg.solve(semisimple, g)
    moduli = np.abs(split.centers)
    hyperbolic = split.combine(moduli)
    elliptic = split.combine(split.centers / moduli)
    return JordanTriple(elliptic, hyperbolic, unipotent)


def escape_classifier(g: np.ndarray, v: Sequence[float], settings: Optional[Settings] = None) -> EscapeVerdict:
    """Whether g^n v stays bounded or escapes forward or backward."""
    settings = settings or get_settings()
    g = np.asarray(g, dtype=float)
    v = np.asarray(v, dtype=float)
    triple = multiplicative_jordan(g, settings)
    tol = settings.fixed_tol * (1.0 + linalg.norm(v))
    hu = triple.hyperbolic @ triple.unipotent
    if linalg.norm(hu @ v - v) <= tol:
        return EscapeVerdict.BOUNDED

    split = spectral_split(g, settings)
    moving = []
    for index, mu in enumerate(split.centers):
        part = split.component(index, v)
        if linalg.norm(part) <= tol:
            continue
        if linalg.norm(hu @ part - part) > tol:
            moving.append(abs(mu))
    # unit modulus with a unipotent part grows polynomially in the forward direction
    if any(m >= 1.0 - settings.fixed_tol for m in moving):
        return EscapeVerdict.ESCAPES_FORWARD
    return EscapeVerdict.ESCAPES_BACKWARD


# === group action helpers ===

def adjoint_group_element(algebra: LieAlgebra, word: Sequence[Sequence[float]]) -> np.ndarray:
    """Ad(exp x_1 ... exp x_K) = exp(ad x_1) ... exp(ad x_K)."""
    g = np.eye(algebra.dim)
    for x in word:
        g = g @ linalg.expm(ad_matrix(algebra, x))
    return g


def coadjoint_flow(algebra: LieAlgebra, y: Sequence[float], functional: np.ndarray) -> np.ndarray:
    """Ad*(exp y) applied to functionals given as rows: alpha o exp(-ad y)."""
    return functional @ linalg.expm(-ad_matrix(algebra, y))


def coadjoint_act(algebra: LieAlgebra, g: np.ndarray, functional: Sequence[float]) -> np.ndarray:
    """Ad*(g) lambda = lambda o Ad(g)^-1 for an adjoint group element g."""
    lam = algebra.coerce(functional, "functional")
    try:
        return linalg.solve(np.asarray(g, dtype=float).T, lam)
    except linalg.LinAlgError:
        raise SingularMatrix("group element is not invertible")


def coadjoint_stabilizer_defect(algebra: LieAlgebra, functional: Sequence[float]) -> float:
    """max_j |lambda o ad e_j|; zero iff lambda is a fixed point of the coadjoint action."""
    lam = algebra.coerce(functional, "functional")
    return float(np.max(np.abs(np.einsum("l,jkl->jk", lam, algebra.structure)))) if algebra.dim else 0.0


def fixed_by_coadjoint(algebra: LieAlgebra, functional: Sequence[float], settings: Optional[Settings] = None) -> bool:
    settings = settings or get_settings()
    return coadjoint_stabilizer_defect(algebra, functional) <= settings.algebra_tol


# === constructions ===

def change_basis(algebra: LieAlgebra, rows: np.ndarray, names: Sequence[str],
                 name: Optional[str] = None) -> LieAlgebra:
    """Same algebra in the basis f_a = sum_i rows[a, i] e_i."""
    p = np.asarray(rows, dtype=float)
    if p.shape != (algebra.dim, algebra.dim):
        raise DimensionMismatch(f"basis change matrix has shape {p.shape}")
    pinv = linalg.inv(p)
    c = np.einsum("ai,bj,ijk,kl->abl", p, p, algebra.structure, pinv)
    meta = algebra.meta.transformed(pinv) if algebra.meta is not None else None
    return LieAlgebra(name or algebra.name, tuple(names), c, meta)


def direct_sum(a: LieAlgebra, b: LieAlgebra, name: Optional[str] = None) -> LieAlgebra:
    """a + b with block structure constants and block metadata."""
    da, db = a.dim, b.dim
    n = da + db
    c = np.zeros((n, n, n))
    c[:da, :da, :da] = a.structure
    c[da:, da:, da:] = b.structure
    names = list(a.basis_names) + list(b.basis_names)
    if len(set(names)) < len(names):
        names = [f"{x}_1" for x in a.basis_names] + [f"{x}_2" for x in b.basis_names]
    meta = None
    if a.meta is not None and b.meta is not None:
        def block(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return np.vstack([np.hstack([x, np.zeros((x.shape[0], db))]),
                              np.hstack([np.zeros((y.shape[0], da)), y])])
        meta = DecompositionMeta(block(a.meta.center, b.meta.center), block(a.meta.cartan, b.meta.cartan),
                                 block(a.meta.v_space, b.meta.v_space), block(a.meta.levi, b.meta.levi))
    return LieAlgebra(name or f"{a.name}+{b.name}", tuple(names), c, meta)


def semidirect(u: LieAlgebra, l: LieAlgebra, action: Sequence[np.ndarray], name: str,
               meta: Optional[DecompositionMeta] = None) -> LieAlgebra:
    """u x| l where [l_a, u_b] = action[a] applied to u_b; u comes first in the basis."""
    du, dl = u.dim, l.dim
    if len(action) != dl:
        raise DimensionMismatch(f"{len(action)} derivations for a {dl}-dimensional factor")
    n = du + dl
    c = np.zeros((n, n, n))
    c[:du, :du, :du] = u.structure
    c[du:, du:, du:] = l.structure
    for a, d in enumerate(action):
        d = np.asarray(d, dtype=float)
        c[du + a, :du, :du] = d.T
        c[:du, du + a, :du] = -d.T
    return LieAlgebra(name, tuple(u.basis_names) + tuple(l.basis_names), c, meta)


def matrix_algebra(name: str, names: Sequence[str], matrices: Sequence[np.ndarray],
                   meta: Optional[DecompositionMeta] = None, settings: Optional[Settings] = None) -> LieAlgebra:
    """Structure constants of a Lie algebra of matrices, by least squares on commutators."""
    settings = settings or get_settings()
    mats = [np.asarray(m, dtype=float) for m in matrices]
    flat = np.array([m.ravel() for m in mats])
    k = len(mats)
    c = np.zeros((k, k, k))
    for i in range(k):
        for j in range(i + 1, k):
            comm = (mats[i] @ mats[j] - mats[j] @ mats[i]).ravel()
            coeffs, *_ = linalg.lstsq(flat.T, comm)
            if linalg.norm(flat.T @ coeffs - comm) > settings.algebra_tol * max(1.0, linalg.norm(comm)):
                raise InvalidAlgebra(f"[{names[i]}, {names[j]}] leaves the span of the given matrices", "matrices")
            c[i, j] = coeffs
            c[j, i] = -coeffs
    c[np.abs(c) < 1e-14] = 0.0
    return LieAlgebra(name, tuple(names), c, meta)


# === catalog ===

def build_sl2() -> LieAlgebra:
    """sl(2,R) in the basis (h, e, f); z0 = (e - f)/2."""
    meta = DecompositionMeta.build(3, cartan=[[0.0, 0.5, -0.5]], levi=np.eye(3))
    return from_triples("sl2", ("h", "e", "f"), [(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)], meta)


def build_so12() -> LieAlgebra:
    """so(1,2) ~ sl(2,R) in the Lorentz basis k0 = z0, k1 = h/2, k2 = (e+f)/2."""
    rows = np.array([[0.0, 0.5, -0.5],
                     [0.5, 0.0, 0.0],
                     [0.0, 0.5, 0.5]])
    return change_basis(build_sl2(), rows, ("k0", "k1", "k2"), name="so12")


def build_su2() -> LieAlgebra:
    """su(2) with [u1, u2] = u3 cyclic; z0 = u3."""
    meta = DecompositionMeta.build(3, cartan=[[0.0, 0.0, 1.0]], levi=np.eye(3))
    return from_triples("su2", ("u1", "u2", "u3"), [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 1, -1.0)], meta)


def build_abelian(n: int) -> LieAlgebra:
    if n < 1:
        raise InvalidAlgebra("abelian algebra needs n >= 1", "n")
    eye = np.eye(n)
    meta = DecompositionMeta.build(n, center=eye, cartan=eye)
    return LieAlgebra(f"abelian{n}", tuple(f"a{i + 1}" for i in range(n)), np.zeros((n, n, n)), meta)


def build_heis(n: int) -> LieAlgebra:
    """Heisenberg algebra with [p_i, q_i] = c; no compactly embedded Cartan subalgebra."""
    if n < 1:
        raise InvalidAlgebra("Heisenberg algebra needs n >= 1", "n")
    names = [f"p{i + 1}" for i in range(n)] + [f"q{i + 1}" for i in range(n)] + ["c"]
    dim = 2 * n + 1
    eye = np.eye(dim)
    meta = DecompositionMeta.build(dim, center=[eye[-1]], v_space=eye[:-1])
    return from_triples(f"heis{dim}", names, [(i, n + i, 2 * n, 1.0) for i in range(n)], meta)


def build_mot2() -> LieAlgebra:
    """Euclidean motion algebra: [r, x1] = x2, [r, x2] = -x1."""
    eye = np.eye(3)
    meta = DecompositionMeta.build(3, cartan=[eye[2]], v_space=eye[:2], levi=[eye[2]])
    return from_triples("mot2", ("x1", "x2", "r"), [(0, 2, 1, -1.0), (1, 2, 0, 1.0)], meta)


def symplectic_form(n: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]] on (p_1..p_n, q_1..q_n)."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def sp_basis(n: int) -> Tuple[List[str], List[np.ndarray]]:
    """Basis X = -J S of sp(2n) with the rotations z0_k = J_k / 2 listed first."""
    dim = 2 * n
    jmat = symplectic_form(n)
    names, syms = [], []

    def sym(a: int, b: int) -> np.ndarray:
        s = np.zeros((dim, dim))
        s[a, b] += 0.5
        s[b, a] += 0.5
        return s

    for k in range(n):
        p, q = k, n + k
        suffix = "" if n == 1 else str(k + 1)
        names += [f"z0{suffix}", f"a{suffix}", f"b{suffix}"]
        syms += [-(sym(p, p) + sym(q, q)) / 2.0, (sym(p, p) - sym(q, q)) / 2.0, sym(p, q)]
    for k in range(n):
        for l in range(k + 1, n):
            for a, la in ((k, "p"), (n + k, "q")):
                for b, lb in ((l, "p"), (n + l, "q")):
                    names.append(f"s_{la}{k + 1}{lb}{l + 1}")
                    syms.append(sym(a, b))
    return names, [-jmat @ s for s in syms]


def build_osc() -> LieAlgebra:
    """Oscillator algebra heis3 x| R z0 with [z0, p] = -q/2, [z0, q] = p/2 (i alpha(z0) = 1/2)."""
    heis = build_heis(1)
    rotation = np.zeros((3, 3))
    rotation[:2, :2] = symplectic_form(1) / 2.0
    eye = np.eye(4)
    meta = DecompositionMeta.build(4, center=[eye[2]], cartan=[eye[2], eye[3]], v_space=eye[:2], levi=[eye[3]])
    z0 = LieAlgebra("so2", ("z0",), np.zeros((1, 1, 1)))
    return semidirect(heis, z0, [rotation], "osc", meta)


def build_hsp(n: int) -> LieAlgebra:
    """heis_{2n+1} x| sp(2n); x in sp acts on V by matrix multiplication."""
    if n < 1:
        raise InvalidAlgebra("hsp needs n >= 1", "n")
    heis = build_heis(n)
    names, mats = sp_basis(n)
    sp = matrix_algebra(f"sp{2 * n}", names, mats)
    action = []
    for m in mats:
        d = np.zeros((2 * n + 1, 2 * n + 1))
        d[:2 * n, :2 * n] = m
        action.append(d)
    du = 2 * n + 1
    dim = du + len(mats)
    eye = np.eye(dim)
    z0_rows = [eye[du + 3 * k] for k in range(n)]
    meta = DecompositionMeta.build(dim, center=[eye[2 * n]], cartan=[eye[2 * n]] + z0_rows,
                                   v_space=eye[:2 * n], levi=eye[du:])
    return semidirect(heis, sp, action, f"hsp{n}", meta)
