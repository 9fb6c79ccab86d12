"""
Closed-form thermodynamics of coadjoint orbits.

Partition functions come from the Duistermaat-Heckman Weyl sum, the
Gaussian formula for affine orbits, product factorization or the catalog
closed forms of orbits.py. Divergence is a value (DIVERGENT = +inf),
never an exception, in every Z evaluator.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .config import Settings, get_settings
from .cones import c_max, c_min, contains, lambda_in_cmin_star
from .errors import (
    DivergentNeighborhood, DivergentPoint, InvalidParameter, NotAdmissibleFunctional,
    NotRegular, OutsideCmax,
)
from .models import Method, ThermoReport
from .orbits import ClosedForm, HspAffine, OrbitModel, OscPlane, Product
from .roots import PositiveSystem, RootDatum, WeylGroup, dominant_conjugate

logger = logging.getLogger(__name__)

DIVERGENT = math.inf

LogPartition = Callable[[np.ndarray], float]


# === Gaussian ===

def gaussian_laplace(a: np.ndarray, xi: Sequence[float]) -> float:
    """det(A)^(-1/2) exp(<A^-1 xi, xi> / 2) for A positive definite, DIVERGENT otherwise."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    a = (a + a.T) / 2.0
    xi = np.asarray(xi, dtype=float).reshape(a.shape[0])
    if np.min(linalg.eigvalsh(a)) <= 1e-12:
        return DIVERGENT
    _, logdet = np.linalg.slogdet(a)
    return math.exp(-0.5 * logdet + 0.5 * float(xi @ linalg.solve(a, xi, assume_a="pos")))


def hsp_gaussian_partition(model: HspAffine, x: Sequence[float]) -> float:
    """Z(x) = lambda_c^n e^{-lambda_c s} det(A)^(-1/2) e^{xi A^-1 xi / 2}, the Gaussian integral against c_V = (lambda_c / 2 pi)^n."""
    x = model.algebra.coerce(np.asarray(x, dtype=float))
    a, xi = model.quadratic_form(x)
    gauss = gaussian_laplace(a, xi)
    if gauss == DIVERGENT:
        return DIVERGENT
    s = x[2 * model.n]
    return model.lambda_c ** model.n * math.exp(-model.lambda_c * s) * gauss


def convolution_partition(model: OscPlane, x: Sequence[float]) -> float:
    """Oscillator Z as the central character e^{-lambda_z t} times the Gaussian part of the plane orbit."""
    x = model.algebra.coerce(np.asarray(x, dtype=float))
    gaussian = HspAffine(1, model.lambda_c)
    # osc (p, q, c, z0) sits in hsp(1) = (p, q, c, z0, a, b)
    lifted = np.concatenate([x, [0.0, 0.0]])
    z = hsp_gaussian_partition(gaussian, lifted)
    if z == DIVERGENT:
        return DIVERGENT
    return math.exp(-model.lambda_z * x[3]) * z


def product_partition(model: Product, x: Sequence[float], settings: Optional[Settings] = None) -> float:
    """Product of the factor partition functions."""
    x = model.algebra.coerce(np.asarray(x, dtype=float))
    log_z = 0.0
    for k, factor in enumerate(model.models):
        form = factor.closed_form(model.restrict(x, k), settings)
        if not form.finite:
            return DIVERGENT
        log_z += form.log_z
    return math.exp(log_z)


# === Duistermaat-Heckman ===

@dataclass
class DhBreakdown:
    """Weyl sum with the data it was built from."""
    value: float
    functional: np.ndarray
    delta_lambda: Tuple[int, ...]
    multiplicities: Dict[int, int]
    partial_multiplicities: List[int] = field(default_factory=list)
    compensated: bool = False


def lambda_multiplicities(datum: RootDatum, functional: np.ndarray, indices: Sequence[int],
                          settings: Settings) -> Dict[int, int]:
    """m_alpha = dim g^alpha - dim(g_lambda,C cap g^alpha) = rank of y -> lambda o ad y on g^alpha."""
    c = datum.algebra.structure
    stab = np.einsum("l,jkl->kj", functional, c)
    out = {}
    for i in indices:
        space = datum.roots[i].space_basis
        image = stab @ space
        s = linalg.svdvals(image) if image.size else np.zeros(0)
        scale = max(1.0, float(np.max(np.abs(functional))))
        out[i] = int(np.sum(s > settings.rank_tol * scale))
    return out


def _weyl_terms(datum: RootDatum, weyl: WeylGroup, lam: np.ndarray, x: np.ndarray,
                roots: Dict[int, int], settings: Settings) -> Tuple[List[float], float]:
    terms, smallest = [], math.inf
    for w in weyl.elements:
        wx = w @ x
        denom = 1.0
        for i, m in roots.items():
            value = float(datum.roots[i].i_alpha(wx))
            if abs(value) <= settings.regular_tol:
                raise NotRegular(f"i*alpha(wx) = {value:.3e} vanishes; x is not regular for this orbit")
            smallest = min(smallest, abs(value))
            denom *= value ** m
        terms.append(math.exp(-float(lam @ wx)) / denom)
    return terms, smallest


def _weyl_sum(datum: RootDatum, weyl: WeylGroup, lam: np.ndarray, x: np.ndarray, roots: Dict[int, int],
              direction: np.ndarray, settings: Settings) -> Tuple[float, bool]:
    """Compensated Weyl sum; near cancelling poles it extrapolates from x +/- delta d."""
    terms, smallest = _weyl_terms(datum, weyl, lam, x, roots, settings)
    total = math.fsum(terms)
    if smallest >= settings.near_regular:
        return total, False
    magnitude = math.fsum(abs(t) for t in terms)
    error = magnitude * np.finfo(float).eps / max(abs(total), np.finfo(float).tiny)
    if error <= settings.cancellation_tol:
        return total, True

    logger.warning(f"Weyl sum loses precision near a wall (relative error {error:.1e}); extrapolating")

    def average(delta: float) -> float:
        up = math.fsum(_weyl_terms(datum, weyl, lam, x + delta * direction, roots, settings)[0])
        down = math.fsum(_weyl_terms(datum, weyl, lam, x - delta * direction, roots, settings)[0])
        return 0.5 * (up + down)

    delta = 1e-2 * (1.0 + linalg.norm(x))
    return (4.0 * average(delta / 2) - average(delta)) / 3.0, True


def dh_breakdown(datum: RootDatum, system: PositiveSystem, weyl: WeylGroup, lam_t: Sequence[float],
                 x: Sequence[float], compact_only: bool = False, settings: Optional[Settings] = None) -> DhBreakdown:
    """sum_w e^{-lambda(wx)} / prod_{alpha in Delta_lambda} (i*alpha(wx))^{m_alpha} with its data."""
    settings = settings or get_settings()
    lam_t = np.asarray(lam_t, dtype=float)
    x = np.asarray(x, dtype=float)
    cmin = c_min(datum, system, settings)
    if not lambda_in_cmin_star(lam_t, cmin, settings=settings):
        raise NotAdmissibleFunctional("lambda is not in the dual of C_min")
    if not contains(c_max(datum, system), x, strict=True, settings=settings):
        raise OutsideCmax("x is not in the interior of C_max")

    lam = dominant_conjugate(datum, system, weyl, lam_t)
    lam_g = datum.extend_to_g(lam)
    candidates = system.compact_positive(datum) if compact_only else system.positive
    mult = lambda_multiplicities(datum, lam_g, candidates, settings)
    partial = [i for i, m in mult.items() if 0 < m < datum.roots[i].multiplicity]
    if partial:
        logger.warning(f"Partial multiplicities on roots {partial}; values follow the rank formula")
    roots = {i: m for i, m in mult.items() if m > 0}
    direction = system.regular_element / linalg.norm(system.regular_element)
    value, compensated = _weyl_sum(datum, weyl, lam, x, roots, direction, settings)
    return DhBreakdown(value, lam, tuple(sorted(roots)), roots, partial, compensated)


def dh_partition(datum: RootDatum, system: PositiveSystem, weyl: WeylGroup, lam_t: Sequence[float],
                 x: Sequence[float], settings: Optional[Settings] = None) -> float:
    """Duistermaat-Heckman partition function at x in the interior of C_max (Cartan coordinates)."""
    return dh_breakdown(datum, system, weyl, lam_t, x, settings=settings).value


def _noncompact_denominator(datum: RootDatum, system: PositiveSystem, x: np.ndarray) -> float:
    denom = 1.0
    for i in system.noncompact_positive:
        root = datum.roots[i]
        denom *= float(root.i_alpha(x)) ** root.multiplicity
    return denom


def factorized_partition(datum: RootDatum, system: PositiveSystem, weyl: WeylGroup, lam_t: Sequence[float],
                         x: Sequence[float], settings: Optional[Settings] = None) -> float:
    """Compact-part Weyl sum divided by prod_{Delta_p+} (i*alpha(x))^dim."""
    settings = settings or get_settings()
    lam_t = np.asarray(lam_t, dtype=float)
    x = np.asarray(x, dtype=float)
    if not lambda_in_cmin_star(lam_t, c_min(datum, system, settings), strict=True, settings=settings):
        raise NotAdmissibleFunctional("factorized form needs lambda in the interior of the dual of C_min")
    compact = dh_breakdown(datum, system, weyl, lam_t, x, compact_only=True, settings=settings)
    return compact.value / _noncompact_denominator(datum, system, x)


def compact_orbit_volume(datum: RootDatum, system: PositiveSystem, weyl: WeylGroup, lam_t: Sequence[float],
                         x: Sequence[float], settings: Optional[Settings] = None) -> float:
    """Leading t -> 0 coefficient of the compact Weyl sum: sum_w (-lambda(wx))^N / (N! prod i*alpha(wx)^m)."""
    settings = settings or get_settings()
    x = np.asarray(x, dtype=float)
    lam = dominant_conjugate(datum, system, weyl, np.asarray(lam_t, dtype=float))
    lam_g = datum.extend_to_g(lam)
    mult = lambda_multiplicities(datum, lam_g, system.compact_positive(datum), settings)
    roots = {i: m for i, m in mult.items() if m > 0}
    power = sum(roots.values())
    terms = []
    for w in weyl.elements:
        wx = w @ x
        denom = 1.0
        for i, m in roots.items():
            value = float(datum.roots[i].i_alpha(wx))
            if abs(value) <= settings.regular_tol:
                raise NotRegular(f"i*alpha(wx) = {value:.3e} vanishes")
            denom *= value ** m
        terms.append((-float(lam @ wx)) ** power / denom)
    return math.fsum(terms) / math.factorial(power)


def temperedness_limit(datum: RootDatum, system: PositiveSystem, weyl: WeylGroup, lam_t: Sequence[float],
                       x: Sequence[float], settings: Optional[Settings] = None) -> Tuple[float, int]:
    """(lim_{t->0+} t^N Z(tx), N) with N = sum of dim g^alpha over Delta_p+."""
    x = np.asarray(x, dtype=float)
    volume = compact_orbit_volume(datum, system, weyl, lam_t, x, settings)
    n = sum(datum.roots[i].multiplicity for i in system.noncompact_positive)
    return volume / _noncompact_denominator(datum, system, x), n


def shifted_partition(datum: RootDatum, system: PositiveSystem, weyl: WeylGroup, lam_t: Sequence[float],
                      shift_t: Sequence[float], x: Sequence[float], settings: Optional[Settings] = None) -> float:
    """Z_{lambda + lambda_0}(x) = e^{-lambda_0(x)} Z_lambda(x) for a Weyl-fixed lambda_0."""
    shift = np.asarray(shift_t, dtype=float)
    for w in weyl.elements:
        if np.max(np.abs(weyl.act_functional(w, shift) - shift)) > 1e-9 * (1.0 + linalg.norm(shift)):
            raise InvalidParameter("shift is not fixed by the Weyl group")
    x = np.asarray(x, dtype=float)
    return math.exp(-float(shift @ x)) * dh_partition(datum, system, weyl, lam_t, x, settings)


# === derivatives ===

def _step(x: np.ndarray, rel: float) -> float:
    return rel * (1.0 + float(linalg.norm(x)))


def _checked(log_z: LogPartition, point: np.ndarray) -> float:
    value = log_z(point)
    if not math.isfinite(value):
        raise DivergentNeighborhood(f"log Z diverges at {np.round(point, 6).tolist()} inside the stencil")
    return value


def _central_gradient(log_z: LogPartition, x: np.ndarray, h: float) -> np.ndarray:
    grad = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        grad[k] = (_checked(log_z, x + e) - _checked(log_z, x - e)) / (2 * h)
    return grad


def geometric_heat(log_z: LogPartition, x: Sequence[float], settings: Optional[Settings] = None) -> np.ndarray:
    """Q(x) = -d log Z(x) by central differences with a Richardson step-halving correction."""
    settings = settings or get_settings()
    x = np.asarray(x, dtype=float)
    h = _step(x, settings.fd_rel_step)
    coarse = _central_gradient(log_z, x, h)
    fine = _central_gradient(log_z, x, h / 2)
    return -(4.0 * fine - coarse) / 3.0


def fisher_rao(log_z: LogPartition, x: Sequence[float], settings: Optional[Settings] = None) -> np.ndarray:
    """Hessian of log Z by central differences, symmetrized."""
    settings = settings or get_settings()
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _step(x, settings.fd_hess_step)
    f0 = _checked(log_z, x)
    hess = np.zeros((n, n))
    eye = np.eye(n) * h
    for i in range(n):
        hess[i, i] = (_checked(log_z, x + eye[i]) - 2 * f0 + _checked(log_z, x - eye[i])) / h ** 2
        for j in range(i + 1, n):
            value = (_checked(log_z, x + eye[i] + eye[j]) - _checked(log_z, x + eye[i] - eye[j])
                     - _checked(log_z, x - eye[i] + eye[j]) + _checked(log_z, x - eye[i] - eye[j])) / (4 * h ** 2)
            hess[i, j] = hess[j, i] = value
    return hess


def entropy(q: Sequence[float], x: Sequence[float], log_z: float) -> float:
    """s(x) = Q(x)(x) + log Z(x)."""
    return float(np.asarray(q) @ np.asarray(x)) + log_z


def temperedness_exponent(log_z: LogPartition, x: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope k of log Z(tx) against -log t for t = 2^-3 .. 2^-10, with the fit residual."""
    x = np.asarray(x, dtype=float)
    ts = 2.0 ** -np.arange(3, 11)
    values = []
    for t in ts:
        value = log_z(t * x)
        if not math.isfinite(value):
            raise DivergentPoint(f"Z diverges at t = {t:g} along x")
        values.append(value)
    design = np.column_stack([-np.log(ts), np.ones_like(ts)])
    coeffs, *_ = linalg.lstsq(design, np.array(values))
    residual = float(linalg.norm(design @ coeffs - values))
    return float(coeffs[0]), residual


# === partition functions by method ===

def catalog_log_z(model: OrbitModel, settings: Optional[Settings] = None) -> LogPartition:
    return lambda x: model.closed_form(x, settings).log_z


def method_log_z(model: OrbitModel, method: Method, settings: Optional[Settings] = None) -> LogPartition:
    """log Z of the model by a closed-form method."""
    if method == Method.CATALOG:
        return catalog_log_z(model, settings)
    if method == Method.GAUSSIAN:
        if isinstance(model, HspAffine):
            z_fn = lambda x: hsp_gaussian_partition(model, x)
        elif isinstance(model, OscPlane):
            z_fn = lambda x: convolution_partition(model, x)
        else:
            raise InvalidParameter(f"Gaussian method applies to osc and hsp families, not '{model.label}'")
        return lambda x: _log(z_fn(x))
    if method == Method.PRODUCT:
        if not isinstance(model, Product):
            raise InvalidParameter(f"Product method needs a product family, not '{model.label}'")
        return lambda x: _log(product_partition(model, x, settings))
    raise InvalidParameter(f"Method '{method.value}' is not a closed form for '{model.label}'")


def _log(z: float) -> float:
    return math.inf if z == DIVERGENT else math.log(z)


def thermo_report(x: Sequence[float], log_z: LogPartition, method: Method, analytic: Optional[ClosedForm] = None,
                  coordinates: str = "algebra", settings: Optional[Settings] = None) -> ThermoReport:
    """Z, Q, entropy and Fisher-Rao metric at x; analytic derivatives are checked against finite differences."""
    settings = settings or get_settings()
    x = np.asarray(x, dtype=float)
    value = analytic.log_z if analytic is not None else log_z(x)
    if not math.isfinite(value):
        return ThermoReport(x=x.tolist(), coordinates=coordinates, finite=False, z=math.inf, log_z=math.inf, method=method)

    if analytic is not None and analytic.grad is not None:
        q = -analytic.grad
        try:
            numeric = geometric_heat(log_z, x, settings)
            gap = linalg.norm(numeric - q) / max(1.0, linalg.norm(q))
            if gap > settings.fd_self_test:
                logger.warning(f"Analytic heat differs from finite differences by {gap:.2e} at {x.tolist()}")
        except DivergentNeighborhood:
            logger.debug("Finite-difference self-test skipped near the boundary")
    else:
        q = geometric_heat(log_z, x, settings)
    if analytic is not None and analytic.hess is not None:
        hess = analytic.hess
    else:
        hess = fisher_rao(log_z, x, settings)
    fisher = (hess + hess.T) / 2.0
    return ThermoReport(
        x=x.tolist(), coordinates=coordinates, finite=True, z=math.exp(value), log_z=value, q=q.tolist(),
        entropy=entropy(q, x, value), fisher=fisher.tolist(), fisher_eigenvalues=linalg.eigvalsh(fisher).tolist(),
        method=method,
    )
