"""
Explicit coadjoint orbit models.

Each model maps a parameter domain in R^{2n} onto an orbit in g*, carries
the Liouville density with respect to Lebesgue measure on the parameters,
and knows its partition function in closed form (log Z, gradient, Hessian).
Functionals are row vectors in the dual basis; the Hamiltonian of x at a
point alpha is alpha . x.

Density constants are pinned once against the known closed forms:
  sl2 nilpotent cone   dx1 dx2 / |x| = dr dphi, so density 1
  sl2 hyperboloid      1 / (2 pi x0), from int e^{-t x0} = e^{-tm} / t
  su2 sphere           (rho / 2 pi) sin(theta), total mass 2 rho
  oscillator / hsp     (lambda_c / 2 pi)^n, from Z(t z0) = 2 / t at s = 0
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .algebra import (
    LieAlgebra, build_abelian, build_hsp, build_osc, build_so12, build_su2,
    coadjoint_flow, coadjoint_stabilizer_defect, direct_sum, sp_basis, symplectic_form,
)
from .config import Settings, get_settings
from .errors import AlgebraMismatch, InvalidParameter
from .models import AxisKind, Family

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClosedForm:
    """log Z with its gradient and Hessian at one point; finite=False means Z = +inf."""
    finite: bool
    log_z: float
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None

    @classmethod
    def divergent(cls) -> "ClosedForm":
        return cls(False, math.inf)


class OrbitModel(ABC):
    """Parametrized coadjoint orbit with Liouville density and momentum image."""

    family: Family
    axes: Tuple[AxisKind, ...] = ()

    def __init__(self, algebra: LieAlgebra):
        self.algebra = algebra

    @property
    def param_dim(self) -> int:
        return len(self.axes)

    @property
    def label(self) -> str:
        return self.family.value

    @property
    def reference_param(self) -> np.ndarray:
        return np.zeros(self.param_dim)

    @property
    def base_point(self) -> np.ndarray:
        return self.embed(self.reference_param[None, :])[0]

    @abstractmethod
    def embed(self, p: np.ndarray) -> np.ndarray:
        """(N, param_dim) parameters to (N, dim) functionals."""

    @abstractmethod
    def density(self, p: np.ndarray) -> np.ndarray:
        """Liouville density at (N, param_dim) parameters."""

    @abstractmethod
    def project(self, alpha: np.ndarray) -> np.ndarray:
        """Parameters of the orbit point nearest to each row of alpha."""

    @abstractmethod
    def closed_form(self, x: Sequence[float], settings: Optional[Settings] = None) -> ClosedForm:
        """Analytic log Z, gradient and Hessian at x; settings drive any finite-difference Hessian."""

    @abstractmethod
    def temperature_contains(self, x: Sequence[float]) -> bool:
        """x lies in the geometric temperature (Z finite in a neighbourhood)."""

    def hamiltonian(self, p: np.ndarray, x: Sequence[float]) -> np.ndarray:
        return self.embed(p) @ self.algebra.coerce(np.asarray(x, dtype=float))

    def sample_params(self, rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
        """Parameters spread over the domain at the given length scale."""
        cols = []
        for axis in self.axes:
            if axis == AxisKind.RADIAL:
                cols.append(rng.uniform(0.1, 2.0, n) * scale)
            elif axis == AxisKind.LINE:
                cols.append(rng.normal(0.0, scale, n))
            elif axis == AxisKind.ANGLE:
                cols.append(rng.uniform(0.0, 2 * np.pi, n))
            else:
                cols.append(np.arccos(rng.uniform(-1.0, 1.0, n)))
        return np.column_stack(cols) if cols else np.zeros((n, 0))


def _positive(name: str, value: float) -> float:
    if not value > 0:
        raise InvalidParameter(f"{name} must be positive, got {value}")
    return float(value)


# === sl2 / so(1,2) orbits ===

_LORENTZ = np.diag([1.0, -1.0, -1.0])


class Sl2Nilpotent(OrbitModel):
    """Upper nilpotent cone alpha_0 = |(alpha_1, alpha_2)| in so(1,2)*, parameters (r, phi)."""

    family = Family.SL2_NILPOTENT
    axes = (AxisKind.RADIAL, AxisKind.ANGLE)

    def __init__(self, algebra: Optional[LieAlgebra] = None):
        super().__init__(algebra or build_so12())

    @property
    def reference_param(self) -> np.ndarray:
        return np.array([1.0, 0.0])

    def embed(self, p):
        p = np.atleast_2d(p)
        r, phi = p[:, 0], p[:, 1]
        return np.column_stack([r, r * np.cos(phi), r * np.sin(phi)])

    def density(self, p):
        return np.ones(np.atleast_2d(p).shape[0])

    def project(self, alpha):
        alpha = np.atleast_2d(alpha)
        return np.column_stack([np.hypot(alpha[:, 1], alpha[:, 2]), np.mod(np.arctan2(alpha[:, 2], alpha[:, 1]), 2 * np.pi)])

    def temperature_contains(self, x):
        z, a, b = self.algebra.coerce(np.asarray(x, dtype=float))
        return bool(z > math.hypot(a, b))

    def closed_form(self, x, settings=None):
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        if not self.temperature_contains(x):
            return ClosedForm.divergent()
        u = _LORENTZ @ x
        q = float(x @ u)
        grad = -u / q
        hess = -_LORENTZ / q + 2.0 * np.outer(u, u) / q ** 2
        return ClosedForm(True, math.log(2 * math.pi) - 0.5 * math.log(q), grad, hess)


class Sl2Hyperboloid(OrbitModel):
    """Upper sheet alpha_0 = sqrt(m^2 + |x|^2), parameters x in R^2."""

    family = Family.SL2_HYPERBOLOID
    axes = (AxisKind.LINE, AxisKind.LINE)

    def __init__(self, m: float, algebra: Optional[LieAlgebra] = None):
        super().__init__(algebra or build_so12())
        self.m = _positive("m", m)

    @property
    def label(self) -> str:
        return f"{self.family.value}:{self.m:g}"

    def embed(self, p):
        p = np.atleast_2d(p)
        x0 = np.sqrt(self.m ** 2 + p[:, 0] ** 2 + p[:, 1] ** 2)
        return np.column_stack([x0, p[:, 0], p[:, 1]])

    def density(self, p):
        p = np.atleast_2d(p)
        return 1.0 / (2 * np.pi * np.sqrt(self.m ** 2 + p[:, 0] ** 2 + p[:, 1] ** 2))

    def project(self, alpha):
        return np.atleast_2d(alpha)[:, 1:3].copy()

    def temperature_contains(self, x):
        z, a, b = self.algebra.coerce(np.asarray(x, dtype=float))
        return bool(z > math.hypot(a, b))

    def closed_form(self, x, settings=None):
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        if not self.temperature_contains(x):
            return ClosedForm.divergent()
        m = self.m
        u = _LORENTZ @ x
        q = float(x @ u)
        sq = math.sqrt(q)
        g1 = -m / (2 * sq) - 1.0 / (2 * q)
        g2 = m / (4 * q * sq) + 1.0 / (2 * q ** 2)
        grad = 2 * g1 * u
        hess = 4 * g2 * np.outer(u, u) + 2 * g1 * _LORENTZ
        return ClosedForm(True, -m * sq - 0.5 * math.log(q), grad, hess)


# === su2 sphere ===

class Su2Sphere(OrbitModel):
    """Sphere of radius rho in su(2)*, spherical parameters (theta, phi)."""

    family = Family.SU2_SPHERE
    axes = (AxisKind.POLAR, AxisKind.ANGLE)

    def __init__(self, rho: float, algebra: Optional[LieAlgebra] = None):
        super().__init__(algebra or build_su2())
        self.rho = _positive("rho", rho)

    @property
    def label(self) -> str:
        return f"{self.family.value}:{self.rho:g}"

    def embed(self, p):
        p = np.atleast_2d(p)
        th, ph = p[:, 0], p[:, 1]
        return self.rho * np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])

    def density(self, p):
        return self.rho / (2 * np.pi) * np.sin(np.atleast_2d(p)[:, 0])

    def project(self, alpha):
        alpha = np.atleast_2d(alpha)
        norm = linalg.norm(alpha, axis=1)
        theta = np.arccos(np.clip(alpha[:, 2] / norm, -1.0, 1.0))
        return np.column_stack([theta, np.mod(np.arctan2(alpha[:, 1], alpha[:, 0]), 2 * np.pi)])

    def temperature_contains(self, x):
        self.algebra.coerce(np.asarray(x, dtype=float))
        return True

    def closed_form(self, x, settings=None):
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        rho = self.rho
        r = float(linalg.norm(x))
        y = rho * r
        if y < 1e-2:
            y2 = y * y
            log_z = math.log(2 * rho) + y2 / 6 - y2 ** 2 / 180 + y2 ** 3 / 2835
            f1_over_r = rho ** 2 * (1 / 3 - y2 / 45 + 2 * y2 ** 2 / 945)
            f2 = rho ** 2 * (1 / 3 - y2 / 15 + 2 * y2 ** 2 / 189)
        else:
            log_z = y + math.log1p(-math.exp(-2 * y)) - math.log(r)
            f1 = rho / math.tanh(y) - 1.0 / r
            f1_over_r = f1 / r
            f2 = rho ** 2 * (1.0 / y ** 2 - 1.0 / math.sinh(y) ** 2) if y < 350 else 1.0 / r ** 2
        grad = f1_over_r * x
        # Hess = (f'' - f'/r) xhat xhat^T + (f'/r) I
        outer = np.outer(x, x) / r ** 2 if r > 0 else np.zeros((3, 3))
        hess = (f2 - f1_over_r) * outer + f1_over_r * np.eye(3)
        return ClosedForm(True, log_z, grad, hess)


# === oscillator and hsp ===

class OscPlane(OrbitModel):
    """Plane orbit in osc* = (p, q, c, z0)*: alpha_c = lambda_c, alpha_z0 = lambda_z + |alpha_V|^2 / (4 lambda_c)."""

    family = Family.OSC_PLANE
    axes = (AxisKind.LINE, AxisKind.LINE)

    def __init__(self, lambda_c: float, lambda_z: float = 0.0, algebra: Optional[LieAlgebra] = None):
        super().__init__(algebra or build_osc())
        self.lambda_c = _positive("lambda_c", lambda_c)
        self.lambda_z = float(lambda_z)

    @property
    def label(self) -> str:
        return f"{self.family.value}:{self.lambda_c:g},{self.lambda_z:g}"

    def embed(self, p):
        p = np.atleast_2d(p)
        lc = self.lambda_c
        vp, vq = p[:, 0], p[:, 1]
        n = p.shape[0]
        return np.column_stack([lc * vq, -lc * vp, np.full(n, lc), self.lambda_z + lc * (vp ** 2 + vq ** 2) / 4])

    def density(self, p):
        return np.full(np.atleast_2d(p).shape[0], self.lambda_c / (2 * np.pi))

    def project(self, alpha):
        alpha = np.atleast_2d(alpha)
        return np.column_stack([-alpha[:, 1] / self.lambda_c, alpha[:, 0] / self.lambda_c])

    def temperature_contains(self, x):
        return bool(self.algebra.coerce(np.asarray(x, dtype=float))[3] > 0)

    def closed_form(self, x, settings=None):
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        if not self.temperature_contains(x):
            return ClosedForm.divergent()
        lc, lz = self.lambda_c, self.lambda_z
        w, s, t = x[:2], x[2], x[3]
        w2 = float(w @ w)
        log_z = math.log(2) - math.log(t) - lc * s - lz * t + lc * w2 / t
        grad = np.concatenate([2 * lc * w / t, [-lc, -1.0 / t - lz - lc * w2 / t ** 2]])
        hess = np.zeros((4, 4))
        hess[:2, :2] = 2 * lc / t * np.eye(2)
        hess[:2, 3] = hess[3, :2] = -2 * lc * w / t ** 2
        hess[3, 3] = 1.0 / t ** 2 + 2 * lc * w2 / t ** 3
        return ClosedForm(True, log_z, grad, hess)


class HspAffine(OrbitModel):
    """Affine orbit of ev_0 scaled by lambda_c in hsp(n)*: H_{c,w,X}(v) = c + Omega(w, v) + Omega(Xv, v) / 2."""

    family = Family.HSP_AFFINE

    def __init__(self, n: int, lambda_c: float, algebra: Optional[LieAlgebra] = None):
        if n < 1:
            raise InvalidParameter(f"n must be >= 1, got {n}")
        super().__init__(algebra or build_hsp(n))
        self.n = int(n)
        self.lambda_c = _positive("lambda_c", lambda_c)
        self.axes = (AxisKind.LINE,) * (2 * n)
        self.jmat = symplectic_form(n)
        _, self.sp_mats = sp_basis(n)

    @property
    def label(self) -> str:
        return f"{self.family.value}:{self.n},{self.lambda_c:g}"

    def _split(self, x: np.ndarray) -> Tuple[np.ndarray, float, np.ndarray]:
        """(w, s, X) with X the sp(2n) part as a matrix."""
        d = 2 * self.n
        x_mat = np.einsum("a,aij->ij", x[d + 1:], np.asarray(self.sp_mats))
        return x[:d], float(x[d]), x_mat

    def quadratic_form(self, x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        """(A, xi) with H_x(v) = lambda_c s + xi.v + v^T A v / 2."""
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        w, _, x_mat = self._split(x)
        a = -self.lambda_c * self.jmat @ x_mat
        return (a + a.T) / 2.0, self.lambda_c * self.jmat.T @ w

    def embed(self, p):
        p = np.atleast_2d(p)
        lc = self.lambda_c
        v_part = lc * p @ self.jmat.T
        c_part = np.full((p.shape[0], 1), lc)
        # alpha(X_a) = lambda_c / 2 * Omega(X_a v, v) with Omega(u, v) = u^T J v
        sp_part = np.column_stack([0.5 * lc * np.einsum("ni,ij,nj->n", p @ m.T, self.jmat, p) for m in self.sp_mats])
        return np.hstack([v_part, c_part, sp_part])

    def density(self, p):
        return np.full(np.atleast_2d(p).shape[0], (self.lambda_c / (2 * np.pi)) ** self.n)

    def project(self, alpha):
        alpha = np.atleast_2d(alpha)
        return -alpha[:, :2 * self.n] @ self.jmat.T / self.lambda_c

    def temperature_contains(self, x):
        a, _ = self.quadratic_form(x)
        return bool(np.min(linalg.eigvalsh(a)) > 1e-12)

    def _log_z_grad(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        lc, n = self.lambda_c, self.n
        w, s, _ = self._split(x)
        a, xi = self.quadratic_form(x)
        a_inv = linalg.inv(a)
        eta = a_inv @ xi
        sign, logdet = np.linalg.slogdet(a)
        log_z = n * math.log(lc) - lc * s - 0.5 * logdet + 0.5 * float(xi @ eta)
        grad = np.zeros(self.algebra.dim)
        grad[:2 * n] = lc * self.jmat @ eta
        grad[2 * n] = -lc
        for k, m in enumerate(self.sp_mats):
            ak = -lc * self.jmat @ m
            ak = (ak + ak.T) / 2.0
            grad[2 * n + 1 + k] = -0.5 * np.trace(a_inv @ ak) - 0.5 * float(eta @ ak @ eta)
        return log_z, grad

    def closed_form(self, x, settings=None):
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        if not self.temperature_contains(x):
            return ClosedForm.divergent()
        log_z, grad = self._log_z_grad(x)
        settings = settings or get_settings()
        h = settings.fd_rel_step * (1.0 + linalg.norm(x))
        dim = self.algebra.dim
        hess = np.zeros((dim, dim))
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = h
            if not (self.temperature_contains(x + e) and self.temperature_contains(x - e)):
                return ClosedForm(True, log_z, grad, None)
            hess[:, k] = (self._log_z_grad(x + e)[1] - self._log_z_grad(x - e)[1]) / (2 * h)
        return ClosedForm(True, log_z, grad, (hess + hess.T) / 2.0)


# === point and product ===

class Point(OrbitModel):
    """One-point orbit {lambda_0}; lambda_0 must be fixed by the coadjoint action."""

    family = Family.POINT
    axes = ()

    def __init__(self, algebra: LieAlgebra, lambda0: Sequence[float], settings: Optional[Settings] = None):
        super().__init__(algebra)
        settings = settings or get_settings()
        self.lambda0 = algebra.coerce(np.asarray(lambda0, dtype=float), "lambda0")
        defect = coadjoint_stabilizer_defect(algebra, self.lambda0)
        if defect > settings.spectral_tol:
            raise InvalidParameter(f"lambda0 is not a fixed point of the coadjoint action (defect {defect:.3e})")

    @property
    def label(self) -> str:
        return f"{self.family.value}:{','.join(f'{v:g}' for v in self.lambda0)}"

    def embed(self, p):
        n = np.atleast_2d(p).shape[0] if np.ndim(p) else 1
        return np.tile(self.lambda0, (n, 1))

    def density(self, p):
        n = np.atleast_2d(p).shape[0] if np.ndim(p) else 1
        return np.ones(n)

    def project(self, alpha):
        return np.zeros((np.atleast_2d(alpha).shape[0], 0))

    def temperature_contains(self, x):
        self.algebra.coerce(np.asarray(x, dtype=float))
        return True

    def closed_form(self, x, settings=None):
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        dim = self.algebra.dim
        return ClosedForm(True, -float(self.lambda0 @ x), -self.lambda0.copy(), np.zeros((dim, dim)))


class Product(OrbitModel):
    """Product orbit in the dual of the direct sum of the factor algebras."""

    family = Family.PRODUCT

    def __init__(self, models: Sequence[OrbitModel], algebra: Optional[LieAlgebra] = None):
        if not models:
            raise InvalidParameter("product needs at least one factor")
        self.models = list(models)
        built = self.models[0].algebra
        for m in self.models[1:]:
            built = direct_sum(built, m.algebra)
        if algebra is not None and algebra.dim != built.dim:
            raise AlgebraMismatch(f"declared algebra has dim {algebra.dim}, factors sum to {built.dim}")
        super().__init__(algebra or built)
        self.axes = tuple(a for m in self.models for a in m.axes)
        self._dims = np.cumsum([0] + [m.algebra.dim for m in self.models])
        self._params = np.cumsum([0] + [m.param_dim for m in self.models])

    @property
    def label(self) -> str:
        return f"{self.family.value}:{'+'.join(m.label for m in self.models)}"

    @property
    def reference_param(self) -> np.ndarray:
        return np.concatenate([m.reference_param for m in self.models])

    def _pieces(self, p: np.ndarray) -> List[np.ndarray]:
        p = np.atleast_2d(p)
        return [p[:, self._params[k]:self._params[k + 1]] for k in range(len(self.models))]

    def restrict(self, x: np.ndarray, k: int) -> np.ndarray:
        return x[self._dims[k]:self._dims[k + 1]]

    def embed(self, p):
        return np.hstack([m.embed(q) for m, q in zip(self.models, self._pieces(p))])

    def density(self, p):
        out = np.ones(np.atleast_2d(p).shape[0])
        for m, q in zip(self.models, self._pieces(p)):
            out = out * m.density(q)
        return out

    def project(self, alpha):
        alpha = np.atleast_2d(alpha)
        return np.hstack([m.project(alpha[:, self._dims[k]:self._dims[k + 1]]) for k, m in enumerate(self.models)])

    def temperature_contains(self, x):
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        return all(m.temperature_contains(self.restrict(x, k)) for k, m in enumerate(self.models))

    def closed_form(self, x, settings=None):
        x = self.algebra.coerce(np.asarray(x, dtype=float))
        dim = self.algebra.dim
        log_z, grad, hess = 0.0, np.zeros(dim), np.zeros((dim, dim))
        for k, m in enumerate(self.models):
            form = m.closed_form(self.restrict(x, k), settings)
            if not form.finite:
                return ClosedForm.divergent()
            sl = slice(self._dims[k], self._dims[k + 1])
            log_z += form.log_z
            grad[sl] = form.grad
            if form.hess is None:
                hess = None
            elif hess is not None:
                hess[sl, sl] = form.hess
        return ClosedForm(True, log_z, grad, hess)


def product(*models: OrbitModel) -> OrbitModel:
    return models[0] if len(models) == 1 else Product(models)


# === checks ===

def equivariance_residual(model: OrbitModel, samples: int = 50, seed: int = 0, step: float = 0.1) -> float:
    """max distance from Ad*(exp y) embed(p) to the embedded image, over random p and small y."""
    if model.param_dim == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    params = model.sample_params(rng, samples)
    alpha = model.embed(params)
    worst = 0.0
    for row in alpha:
        y = rng.normal(size=model.algebra.dim)
        y *= step / linalg.norm(y)
        moved = coadjoint_flow(model.algebra, y, row)
        back = model.embed(model.project(moved[None, :]))[0]
        worst = max(worst, float(linalg.norm(back - moved)))
    return worst


# === family strings ===

def _floats(text: str, count: Optional[int], family: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",")] if text else []
    except ValueError:
        raise InvalidParameter(f"Family '{family}' needs numeric parameters, got '{text}'")
    if count is not None and len(values) != count:
        raise InvalidParameter(f"Family '{family}' needs {count} parameter(s), got {len(values)}")
    return values


def parse_family(text: str) -> OrbitModel:
    """Build a model from sl2-nilpotent | sl2-hyperboloid:m | su2:rho | osc:lc,lz | hsp:n,lc | point:coeffs | product:A+B."""
    text = text.strip()
    name, _, args = text.partition(":")
    if name == Family.PRODUCT.value:
        parts = [part for part in args.split("+") if part]
        return Product([parse_family(part) for part in parts])
    if name == Family.SL2_NILPOTENT.value:
        return Sl2Nilpotent()
    if name == Family.SL2_HYPERBOLOID.value:
        return Sl2Hyperboloid(*_floats(args or "1", 1, name))
    if name == Family.SU2_SPHERE.value:
        return Su2Sphere(*_floats(args or "1", 1, name))
    if name == Family.OSC_PLANE.value:
        values = _floats(args or "1,0", None, name)
        if len(values) not in (1, 2):
            raise InvalidParameter(f"Family '{name}' needs 1 or 2 parameter(s), got {len(values)}")
        return OscPlane(*values)
    if name == Family.HSP_AFFINE.value:
        n, lc = _floats(args or "1,1", 2, name)
        if n != int(n):
            raise InvalidParameter(f"hsp dimension must be an integer, got {n}")
        return HspAffine(int(n), lc)
    if name == Family.POINT.value:
        values = _floats(args, None, name)
        if not values:
            raise InvalidParameter("Family 'point' needs at least one coefficient")
        return Point(build_abelian(len(values)), values)
    raise InvalidParameter(f"Unknown family '{text}'")
