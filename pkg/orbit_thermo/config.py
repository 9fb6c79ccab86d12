"""
Runtime settings for orbit_thermo.
Tolerances and sampling defaults live in one immutable Settings value;
a few of them can be overridden through environment variables.
"""

import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field


def _default_threads() -> int:
    return int(os.getenv("ORBIT_THERMO_THREADS", os.cpu_count() or 1))


def _default_seed() -> int:
    return int(os.getenv("ORBIT_THERMO_SEED", "42"))


def _default_data_dir() -> str:
    return os.getenv("ORBIT_THERMO_DATA_DIR", str(Path(__file__).parent.parent / "data" / "algebras"))


class Settings(BaseModel):
    """Numerical tolerances, quadrature and sampling defaults."""
    model_config = ConfigDict(frozen=True)

    # algebraic identities, spectral tests, rank cutoffs
    algebra_tol: float = Field(default=1e-10, gt=0, description="Antisymmetry/Jacobi residual bound")
    spectral_tol: float = Field(default=1e-9, gt=0, description="Real-part and eigenvalue clustering tolerance")
    rank_tol: float = Field(default=1e-8, gt=0, description="Relative singular value cutoff for rank tests")
    root_tol: float = Field(default=1e-8, gt=0, description="Root vector eigen-equation residual bound")
    degeneracy_tol: float = Field(default=1e-10, gt=0, description="Inverse condition bound for spectral projectors")
    fixed_tol: float = Field(default=1e-8, gt=0, description="Fixed-vector test in the escape classifier")
    max_generic_draws: int = Field(default=5, ge=1, description="Retries for the generic Cartan combination")

    # cones
    cone_tol: float = Field(default=1e-8, gt=0, description="Membership tolerance, scaled by 1+|point|")
    dual_tol: float = Field(default=1e-9, gt=0, description="C_min dual-cone membership slack")
    falsifier_tol: float = Field(default=1e-7, gt=0, description="Allowed negative value in the W_min dual falsifier")
    falsifier_samples: int = Field(default=10_000, ge=1)
    falsifier_chunk: int = Field(default=1_000, ge=1)
    max_cone_dim: int = Field(default=12, ge=1)
    weyl_limit: int = Field(default=1_000_000, ge=1)
    chamber_samples: int = Field(default=4096, ge=16)

    # thermodynamics
    regular_tol: float = Field(default=1e-9, gt=0, description="|i alpha(wx)| below this is singular")
    near_regular: float = Field(default=1e-4, gt=0, description="|i alpha(wx)| below this triggers compensated sums")
    cancellation_tol: float = Field(default=1e-6, gt=0)
    fd_rel_step: float = Field(default=1e-5, gt=0, description="Finite-difference step relative to 1+|x|")
    fd_hess_step: float = Field(default=1e-4, gt=0, description="Hessian finite-difference step relative to 1+|x|")
    fd_self_test: float = Field(default=1e-6, gt=0, description="Analytic vs finite-difference relative agreement")

    # oracle
    quad_nodes: int = Field(default=200, ge=8, description="Gauss-Legendre nodes per axis at level 0")
    quad_rel_tol: float = Field(default=1e-8, gt=0, description="Node-doubling agreement target")
    max_quad_level: int = Field(default=3, ge=0)
    radius_factor: float = Field(default=30.0, gt=0, description="Truncation start R = factor*(1+1/|x|)")
    tail_tol: float = Field(default=1e-16, gt=0, description="Tail mass bound relative to the running total")
    max_doublings: int = Field(default=6, ge=0)
    divergence_factor: float = Field(default=1.5, gt=1.0)
    proposal_scale_fraction: float = Field(default=0.1, gt=0, description="Cauchy proposal scale as a fraction of R")
    mc_chunk: int = Field(default=65_536, ge=1)
    infinite_variance_share: float = Field(default=0.5, gt=0, le=1)

    seed: int = Field(default_factory=_default_seed)
    threads: int = Field(default_factory=_default_threads, ge=1)
    data_dir: str = Field(default_factory=_default_data_dir)

    def with_overrides(self, overrides: Dict[str, Any]) -> "Settings":
        """Return a validated copy with some fields replaced."""
        unknown = set(overrides) - set(type(self).model_fields)
        if unknown:
            raise ValueError(f"Unknown setting(s): {', '.join(sorted(unknown))}")
        return type(self).model_validate({**self.model_dump(), **overrides})


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Process-wide default settings (environment read once)."""
    return Settings()
