"""
Numerical Laplace transforms over orbit parametrizations.

Two independent estimators back the closed forms of thermo.py:
tensor Gauss-Legendre quadrature on the parameter domain (deterministic,
truncated at an adaptive radius) and importance-sampling Monte Carlo
with Cauchy proposals. MC runs in chunks of settings.mc_chunk samples;
chunk k draws from SeedSequence(seed).spawn(n_chunks)[k] and chunk sums
are reduced in chunk order, so a (seed, n, chunk) triple always gives
the same bits whatever the thread count.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import joblib
import numpy as np
from scipy import linalg, stats

from .config import Settings, get_settings
from .errors import InvalidParameter, NoDecayDirection
from .models import AxisKind, Estimate, MomentEstimate, ProbeResult, ProbeStatus
from .orbits import OrbitModel, Product

logger = logging.getLogger(__name__)

_UNBOUNDED = (AxisKind.RADIAL, AxisKind.LINE)
_PILOT = 4096
_TOP_WEIGHTS = 10


def truncation_radius(x: np.ndarray, settings: Settings) -> float:
    """R = factor * (1 + 1/|x|)."""
    norm = float(linalg.norm(x))
    return settings.radius_factor * (1.0 + (1.0 / norm if norm > 0 else 1.0))


def _coerce(model: OrbitModel, x: Sequence[float]) -> np.ndarray:
    return model.algebra.coerce(np.asarray(x, dtype=float), "x")


# === quadrature ===

def _panels(axis: AxisKind, radius: float, count: int) -> np.ndarray:
    """Panel breakpoints; unbounded axes are graded toward the origin."""
    if axis == AxisKind.ANGLE:
        return np.linspace(0.0, 2 * np.pi, count + 1)
    if axis == AxisKind.POLAR:
        return np.linspace(0.0, np.pi, count + 1)
    graded = np.concatenate([[0.0], radius / 2.0 ** np.arange(count - 1, -1, -1)])
    if axis == AxisKind.RADIAL:
        return graded
    return np.concatenate([-graded[:0:-1], graded])


def axis_rule(axis: AxisKind, radius: float, per_panel: int, panels: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights along one parameter axis."""
    xg, wg = np.polynomial.legendre.leggauss(per_panel)
    edges = _panels(axis, radius, panels)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi + lo) + 0.5 * (hi - lo) * xg).ravel()
    weights = (0.5 * (hi - lo) * wg).ravel()
    return nodes, weights


def _log_integrand(model: OrbitModel, params: np.ndarray, x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(model.density(params)) - model.hamiltonian(params, x)


def _log_sum(log_values: np.ndarray, weights: np.ndarray) -> Tuple[float, float]:
    """(max, sum of weights*exp(log_values - max)) for a log-sum-exp reduction."""
    top = float(np.max(log_values))
    if not math.isfinite(top):
        return top, 0.0
    return top, math.fsum(weights * np.exp(log_values - top))


def _combine(parts: List[Tuple[float, float]]) -> float:
    finite = [(m, s) for m, s in parts if math.isfinite(m) and s > 0]
    if any(m == math.inf for m, _ in parts):
        return math.inf
    if not finite:
        return -math.inf
    top = max(m for m, _ in finite)
    return top + math.log(math.fsum(s * math.exp(m - top) for m, s in finite))


def _grid_log_integral(model: OrbitModel, x: np.ndarray, rules: List[Tuple[np.ndarray, np.ndarray]],
                       settings: Settings) -> float:
    """log of the tensor rule; above two axes the grid is summed slab by slab along the first axis."""
    if len(rules) <= 2:
        mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        wmesh = np.meshgrid(*[r[1] for r in rules], indexing="ij")
        params = np.column_stack([m.ravel() for m in mesh])
        weights = np.prod(np.column_stack([w.ravel() for w in wmesh]), axis=1)
        return _combine([_log_sum(_log_integrand(model, params, x), weights)])

    rest_nodes = np.meshgrid(*[r[0] for r in rules[1:]], indexing="ij")
    rest_weights = np.meshgrid(*[r[1] for r in rules[1:]], indexing="ij")
    rest = np.column_stack([m.ravel() for m in rest_nodes])
    rest_w = np.prod(np.column_stack([w.ravel() for w in rest_weights]), axis=1)

    def slab(node: float, weight: float) -> Tuple[float, float]:
        params = np.column_stack([np.full(rest.shape[0], node), rest])
        return _log_sum(_log_integrand(model, params, x), weight * rest_w)

    first_nodes, first_weights = rules[0]
    parts = joblib.Parallel(n_jobs=min(settings.threads, len(first_nodes)), prefer="threads")(
        joblib.delayed(slab)(n, w) for n, w in zip(first_nodes, first_weights)
    )
    return _combine(parts)


def _rules(model: OrbitModel, radius: float, level: int, settings: Settings) -> List[Tuple[np.ndarray, np.ndarray]]:
    if model.param_dim <= 2:
        per_panel, panels = max(2, settings.quad_nodes // 8) * 2 ** level, 8
    else:
        per_panel, panels = max(2, settings.quad_nodes // 32) * 2 ** level, 4
    return [axis_rule(axis, radius, per_panel, panels) for axis in model.axes]


def truncated_log_integral(model: OrbitModel, x: Sequence[float], radius: float, level: int = 0,
                           settings: Optional[Settings] = None) -> float:
    """log of the integral of e^{-H_x} over the parameter box truncated at radius."""
    settings = settings or get_settings()
    x = _coerce(model, x)
    if model.param_dim == 0:
        return -float(model.base_point @ x)
    return _grid_log_integral(model, x, _rules(model, radius, level, settings), settings)


def _node_count(model: OrbitModel, radius: float, level: int, settings: Settings) -> int:
    return math.prod(len(nodes) for nodes, _ in _rules(model, radius, level, settings))


def _shell_minimum(model: OrbitModel, x: np.ndarray, radius: float) -> float:
    """min of H_x over the outer faces of the truncation box."""
    coarse = [axis_rule(axis, radius, 4, 8)[0] for axis in model.axes]
    lowest = math.inf
    for k, axis in enumerate(model.axes):
        if axis not in _UNBOUNDED:
            continue
        faces = [radius] if axis == AxisKind.RADIAL else [-radius, radius]
        for face in faces:
            axes = list(coarse)
            axes[k] = np.array([face])
            mesh = np.meshgrid(*axes, indexing="ij")
            params = np.column_stack([m.ravel() for m in mesh])
            lowest = min(lowest, float(np.min(model.hamiltonian(params, x))))
    return lowest


def _check_decay(model: OrbitModel, x: np.ndarray, radius: float, settings: Settings) -> None:
    inner = _shell_minimum(model, x, radius)
    outer = _shell_minimum(model, x, 2 * radius)
    if outer < inner - settings.cone_tol * (1.0 + abs(inner)):
        raise NoDecayDirection(
            f"H_x decreases from {inner:.4g} to {outer:.4g} between radii {radius:g} and {2 * radius:g}"
        )


def _quadrature_factor(model: OrbitModel, x: np.ndarray, level: int, settings: Settings) -> Estimate:
    if model.param_dim == 0:
        return Estimate(value=math.exp(-float(model.base_point @ x)), samples=1, method="quadrature", level=0)

    radius = truncation_radius(x, settings)
    current = truncated_log_integral(model, x, radius, level, settings)
    unbounded = sum(axis in _UNBOUNDED for axis in model.axes)
    if unbounded:
        _check_decay(model, x, radius, settings)
        doublings = 0
        # tail beyond R bounded by e^{-min H on the shell} times the shell volume
        while (-_shell_minimum(model, x, radius) + unbounded * math.log(2 * radius) - current
               >= math.log(settings.tail_tol)):
            if doublings == settings.max_doublings:
                logger.warning(f"Tail bound did not reach {settings.tail_tol:g} by radius {radius:g}")
                break
            radius *= 2
            doublings += 1
            current = truncated_log_integral(model, x, radius, level, settings)
            logger.debug(f"Truncation radius doubled to {radius:g}")

    # tensor grids above two axes grow as nodes^d, refinement stops after one doubling
    top = settings.max_quad_level if model.param_dim <= 2 else min(settings.max_quad_level, level + 1)
    while True:
        refined = truncated_log_integral(model, x, radius, level + 1, settings)
        nodes = _node_count(model, radius, level + 1, settings)
        gap = abs(math.expm1(refined - current)) if math.isfinite(refined) else math.inf
        if gap < settings.quad_rel_tol or level + 1 >= top:
            if gap >= settings.quad_rel_tol:
                logger.warning(f"Quadrature stopped at level {level + 1} with relative gap {gap:.2e}")
            break
        level += 1
        current = refined
        logger.info(f"Quadrature level raised to {level} (relative gap {gap:.2e})")
    value = math.exp(refined)
    return Estimate(value=value, bound=gap * value if math.isfinite(gap) else math.inf, samples=nodes,
                    method="quadrature", radius=radius, level=level + 1)


def laplace_quadrature(model: OrbitModel, x: Sequence[float], level: int = 0,
                       settings: Optional[Settings] = None) -> Estimate:
    """Z(x) by tensor Gauss-Legendre; products factor by Fubini."""
    settings = settings or get_settings()
    x = _coerce(model, x)
    if isinstance(model, Product):
        factors = [laplace_quadrature(m, model.restrict(x, k), level, settings) for k, m in enumerate(model.models)]
        value = math.prod(f.value for f in factors)
        rel = sum(f.bound / f.value for f in factors if f.value > 0)
        return Estimate(value=value, bound=value * rel, samples=sum(f.samples for f in factors),
                        method="quadrature", radius=max((f.radius or 0.0) for f in factors),
                        level=max(f.level or 0 for f in factors))
    if model.param_dim > 4:
        raise InvalidParameter(f"Quadrature supports up to 4 parameters, '{model.label}' has {model.param_dim}")
    return _quadrature_factor(model, x, level, settings)


def divergence_probe(model: OrbitModel, x: Sequence[float], settings: Optional[Settings] = None) -> ProbeResult:
    """Truncated integrals at R, 2R, 4R, 8R; growth beyond the divergence factor over the last two doublings is Divergent."""
    settings = settings or get_settings()
    x = _coerce(model, x)
    if isinstance(model, Product):
        parts = [divergence_probe(m, model.restrict(x, k), settings) for k, m in enumerate(model.models)]
        for part in parts:
            if part.status == ProbeStatus.DIVERGENT:
                return part
        value = math.prod(p.estimate.value for p in parts)
        return ProbeResult(status=ProbeStatus.FINITE, radii=parts[0].radii, truncated=parts[0].truncated,
                           estimate=Estimate(value=value, method="quadrature",
                                             samples=sum(p.estimate.samples for p in parts)))

    radius = truncation_radius(x, settings)
    radii = [radius * 2 ** k for k in range(4)]
    logs = [truncated_log_integral(model, x, r, 0, settings) for r in radii]
    truncated = [math.exp(v) if v < 700 else math.inf for v in logs]
    for inner, outer in zip(logs, logs[1:]):
        if math.isfinite(inner) and math.isfinite(outer) and outer < inner - 1e-9:
            logger.warning(f"Truncated integrals decreased with the radius ({inner:.6g} -> {outer:.6g})")
    growth = logs[3] - logs[1] if math.isfinite(logs[3]) else math.inf
    if not all(math.isfinite(v) for v in logs) or growth > math.log(settings.divergence_factor):
        logger.info(f"Probe at {x.tolist()}: divergent (log growth {growth:.3g})")
        return ProbeResult(status=ProbeStatus.DIVERGENT, radii=radii, truncated=truncated)
    estimate = Estimate(value=truncated[-1], method="quadrature", radius=radii[-1], level=0,
                        samples=_node_count(model, radii[-1], 0, settings))
    return ProbeResult(status=ProbeStatus.FINITE, radii=radii, truncated=truncated, estimate=estimate)


# === Monte Carlo ===

@dataclass(frozen=True)
class Proposal:
    """Product proposal on the parameter axes: half-Cauchy, Cauchy or uniform per axis."""
    axes: Tuple[AxisKind, ...]
    scale: float

    def sample(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """(n, d) parameters and their log proposal density."""
        cols, logq = [], np.zeros(n)
        for axis in self.axes:
            if axis == AxisKind.RADIAL:
                col = stats.halfcauchy.rvs(scale=self.scale, size=n, random_state=rng)
                logq += stats.halfcauchy.logpdf(col, scale=self.scale)
            elif axis == AxisKind.LINE:
                col = stats.cauchy.rvs(scale=self.scale, size=n, random_state=rng)
                logq += stats.cauchy.logpdf(col, scale=self.scale)
            else:
                width = 2 * np.pi if axis == AxisKind.ANGLE else np.pi
                col = rng.uniform(0.0, width, n)
                logq -= math.log(width)
            cols.append(col)
        return np.column_stack(cols), logq


def proposal_for(model: OrbitModel, x: np.ndarray, settings: Settings) -> Proposal:
    return Proposal(model.axes, settings.proposal_scale_fraction * truncation_radius(x, settings))


@dataclass
class _ChunkSums:
    """Chunk-additive sums of the shifted weights w and of w * alpha terms."""
    n: int
    w: float
    w2: float
    top: np.ndarray
    w_alpha: Optional[np.ndarray] = None
    w_alpha2: Optional[np.ndarray] = None
    w2_alpha: Optional[np.ndarray] = None
    w2_alpha2: Optional[np.ndarray] = None


def _log_weights(model: OrbitModel, proposal: Proposal, x: np.ndarray, rng: np.random.Generator,
                 n: int) -> Tuple[np.ndarray, np.ndarray]:
    params, logq = proposal.sample(rng, n)
    return params, _log_integrand(model, params, x) - logq


def _chunk(model: OrbitModel, proposal: Proposal, x: np.ndarray, n: int, seed: np.random.SeedSequence,
           shift: float, moments: bool) -> _ChunkSums:
    rng = np.random.default_rng(seed)
    params, logw = _log_weights(model, proposal, x, rng, n)
    w = np.exp(logw - shift)
    sums = _ChunkSums(n=n, w=math.fsum(w), w2=math.fsum(w * w), top=np.sort(w)[-_TOP_WEIGHTS:])
    if moments:
        alpha = model.embed(params)
        sums.w_alpha = w @ alpha
        sums.w_alpha2 = np.einsum("n,ni,nj->ij", w, alpha, alpha)
        sums.w2_alpha = (w * w) @ alpha
        sums.w2_alpha2 = (w * w) @ (alpha * alpha)
    return sums


def _run_chunks(model: OrbitModel, x: np.ndarray, n: int, seed: int, settings: Settings,
                moments: bool = False) -> Tuple[float, List[_ChunkSums]]:
    """Shift from a pilot draw, then the chunk sums in chunk order."""
    proposal = proposal_for(model, x, settings)
    sizes = [min(settings.mc_chunk, n - start) for start in range(0, n, settings.mc_chunk)]
    *chunk_seeds, pilot_seed = np.random.SeedSequence(seed).spawn(len(sizes) + 1)
    _, pilot = _log_weights(model, proposal, x, np.random.default_rng(pilot_seed), min(n, _PILOT))
    shift = float(np.max(pilot[np.isfinite(pilot)])) if np.isfinite(pilot).any() else 0.0
    results = joblib.Parallel(n_jobs=min(settings.threads, len(sizes)), prefer="threads")(
        joblib.delayed(_chunk)(model, proposal, x, size, s, shift, moments) for size, s in zip(sizes, chunk_seeds)
    )
    return shift, results


def _heavy_tail(chunks: List[_ChunkSums], total: float, settings: Settings) -> bool:
    top = np.sort(np.concatenate([c.top for c in chunks]))[-_TOP_WEIGHTS:]
    heavy = total > 0 and math.fsum(top) > settings.infinite_variance_share * total
    if heavy:
        logger.warning(f"Top {_TOP_WEIGHTS} importance weights carry {math.fsum(top) / total:.0%} of the sum")
    return heavy


def laplace_mc(model: OrbitModel, x: Sequence[float], n: int, seed: Optional[int] = None,
               settings: Optional[Settings] = None) -> Estimate:
    """Z(x) by importance sampling with Cauchy proposals scaled by the truncation radius."""
    settings = settings or get_settings()
    seed = settings.seed if seed is None else seed
    x = _coerce(model, x)
    if model.param_dim == 0:
        return Estimate(value=math.exp(-float(model.base_point @ x)), samples=n, seed=seed, method="mc")
    if n < 2:
        raise InvalidParameter(f"Monte Carlo needs at least 2 samples, got {n}")
    shift, chunks = _run_chunks(model, x, n, seed, settings)
    w = math.fsum(c.w for c in chunks)
    w2 = math.fsum(c.w2 for c in chunks)
    mean = w / n
    var = max(w2 / n - mean * mean, 0.0)
    scale = math.exp(shift)
    return Estimate(value=scale * mean, stderr=scale * math.sqrt(var / n), samples=n, seed=seed, method="mc",
                    radius=truncation_radius(x, settings), infinite_variance=_heavy_tail(chunks, w, settings))


def moment_mc(model: OrbitModel, x: Sequence[float], n: int, seed: Optional[int] = None,
              settings: Optional[Settings] = None) -> MomentEstimate:
    """Self-normalized Gibbs mean and covariance of the momentum image, with delta-method errors on the mean."""
    settings = settings or get_settings()
    seed = settings.seed if seed is None else seed
    x = _coerce(model, x)
    dim = model.algebra.dim
    if model.param_dim == 0:
        return MomentEstimate(mean=model.base_point.tolist(), cov=np.zeros((dim, dim)).tolist(),
                              mean_stderr=[0.0] * dim, samples=n, seed=seed)
    _, chunks = _run_chunks(model, x, n, seed, settings, moments=True)
    w = math.fsum(c.w for c in chunks)
    w_alpha = np.sum([c.w_alpha for c in chunks], axis=0)
    w_alpha2 = np.sum([c.w_alpha2 for c in chunks], axis=0)
    w2 = math.fsum(c.w2 for c in chunks)
    w2_alpha = np.sum([c.w2_alpha for c in chunks], axis=0)
    w2_alpha2 = np.sum([c.w2_alpha2 for c in chunks], axis=0)

    mean = w_alpha / w
    cov = w_alpha2 / w - np.outer(mean, mean)
    spread = w2_alpha2 - 2 * mean * w2_alpha + mean * mean * w2
    stderr = np.sqrt(np.maximum(spread, 0.0)) / w
    return MomentEstimate(mean=mean.tolist(), cov=((cov + cov.T) / 2).tolist(), mean_stderr=stderr.tolist(),
                          samples=n, seed=seed, infinite_variance=_heavy_tail(chunks, w, settings))


@dataclass(frozen=True)
class EntropyEstimate:
    """Gibbs entropy and the entropies of matched-mean perturbations of the Gibbs density."""
    entropy: Estimate
    perturbed: List[Estimate]

    @property
    def max_excess(self) -> float:
        """Largest perturbed minus Gibbs entropy in units of the perturbed stderr."""
        return max(((p.value - self.entropy.value) / max(p.stderr, 1e-300) for p in self.perturbed),
                   default=-math.inf)


def _perturbation(basis: np.ndarray, alpha: np.ndarray, p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random bounded phi with E_p[phi] = 0 and E_p[alpha phi] = 0 on the weighted sample."""
    constraints = np.vstack([p @ basis, (alpha * p[:, None]).T @ basis])
    kernel = linalg.null_space(constraints)
    if kernel.shape[1] == 0:
        return np.zeros(basis.shape[0])
    return basis @ (kernel @ rng.normal(size=kernel.shape[1]))


def entropy_mc(model: OrbitModel, x: Sequence[float], n: int, seed: Optional[int] = None,
               perturbations: int = 10, amplitude: float = 0.5,
               settings: Optional[Settings] = None) -> EntropyEstimate:
    """s = E[H_x] + log Z under the Gibbs density, and s for (1 + phi) times it with matched normalization and mean.

    Each phi is a tanh ridge combination projected onto the constraints and
    scaled so that max |phi| = amplitude on the sample. A perturbed entropy is
    -E_q[log q] for q = (1 + phi) e^{-H_x} / Z_q, with its own weights and its
    own normalization Z_q estimated from the same sample.
    """
    settings = settings or get_settings()
    seed = settings.seed if seed is None else seed
    x = _coerce(model, x)
    if model.param_dim == 0:
        point = Estimate(value=0.0, samples=1, seed=seed, method="mc")
        return EntropyEstimate(point, [point] * perturbations)

    n = min(n, settings.mc_chunk)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    params, logw = _log_weights(model, proposal_for(model, x, settings), x, rng, n)
    shift = float(np.max(logw))
    w = np.exp(logw - shift)
    p = w / math.fsum(w)
    alpha = model.embed(params)
    h = alpha @ x
    log_z = shift + math.log(math.fsum(w) / n)
    mean_h = float(p @ h)
    ess = 1.0 / float(p @ p)
    base_err = math.sqrt(max(float(p @ (h - mean_h) ** 2), 0.0) / ess)
    base = Estimate(value=mean_h + log_z, stderr=base_err, samples=n, seed=seed, method="mc")

    centred = (alpha - p @ alpha) / (np.sqrt(np.maximum(np.diag(np.cov(alpha.T, aweights=p)), 0.0)) + 1e-12)
    perturbed = []
    for _ in range(perturbations):
        directions = rng.normal(size=(alpha.shape[1], 2 * alpha.shape[1] + 4))
        basis = np.tanh(centred @ directions + rng.normal(size=directions.shape[1]))
        phi = _perturbation(basis, alpha, p, rng)
        peak = float(np.max(np.abs(phi)))
        if peak > 0:
            phi *= amplitude / peak
        wq = w * (1 + phi)
        q = wq / math.fsum(wq)
        log_q = np.log1p(phi) - h - (shift + math.log(math.fsum(wq) / n))
        value = -math.fsum(q * log_q)
        err = math.sqrt(max(float(q @ (log_q + value) ** 2), 0.0) * float(q @ q))
        perturbed.append(Estimate(value=value, stderr=max(err, base_err), samples=n, seed=seed, method="mc"))
    return EntropyEstimate(base, perturbed)


def sample_orbit(model: OrbitModel, n: int, seed: Optional[int] = None, x: Optional[Sequence[float]] = None,
                 scale: float = 1.0, settings: Optional[Settings] = None) -> np.ndarray:
    """(n, dim) orbit points; with x, drawn from the Gibbs measure at x by importance resampling."""
    settings = settings or get_settings()
    rng = np.random.default_rng(settings.seed if seed is None else seed)
    if model.param_dim == 0:
        return np.tile(model.base_point, (n, 1))
    if x is None:
        return model.embed(model.sample_params(rng, n, scale))
    x = _coerce(model, x)
    pool = max(20 * n, 4096)
    params, logw = _log_weights(model, proposal_for(model, x, settings), x, rng, pool)
    w = np.exp(logw - np.max(logw))
    picks = rng.choice(pool, size=n, replace=True, p=w / w.sum())
    return model.embed(params[picks])
