from typing import Dict, List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from enum import Enum


SCHEMA_VERSION = 1


# Enums shared by the numerical modules
class EscapeVerdict(str, Enum):
    BOUNDED = "bounded"
    ESCAPES_FORWARD = "escapes_forward"
    ESCAPES_BACKWARD = "escapes_backward"


class RootKind(str, Enum):
    COMPACT = "compact"
    NONCOMPACT = "noncompact"


class RootOrigin(str, Enum):
    SOLVABLE = "solvable"
    SEMISIMPLE = "semisimple"


class Representation(str, Enum):
    GENERATORS = "generators"
    INEQUALITIES = "inequalities"


class Family(str, Enum):
    SL2_NILPOTENT = "sl2-nilpotent"
    SL2_HYPERBOLOID = "sl2-hyperboloid"
    SU2_SPHERE = "su2"
    OSC_PLANE = "osc"
    HSP_AFFINE = "hsp"
    POINT = "point"
    PRODUCT = "product"


class AxisKind(str, Enum):
    RADIAL = "radial"   # (0, inf)
    LINE = "line"       # (-inf, inf)
    ANGLE = "angle"     # [0, 2 pi)
    POLAR = "polar"     # [0, pi]


class FalsifierVerdict(str, Enum):
    NOT_REFUTED = "not_refuted"
    REFUTED = "refuted"


class LambdaStatus(str, Enum):
    IN_CMIN_STAR = "in_cmin_star"
    FALSIFIER_NOT_REFUTED = "falsifier_not_refuted"
    REFUTED = "refuted"


class Method(str, Enum):
    DH = "dh"
    CATALOG = "catalog"
    GAUSSIAN = "gaussian"
    PRODUCT = "product"
    ORACLE = "oracle"


class ProbeStatus(str, Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


# Algebra file format
class AlgebraMetaFile(BaseModel):
    """Decomposition metadata as stored in an algebra file."""
    center: List[List[float]] = Field(default=[], description="Basis of the centre")
    cartan: List[List[float]] = Field(default=[], description="Basis of a compactly embedded Cartan subalgebra")
    v_space: List[List[float]] = Field(default=[], description="Basis of V = [t, u]")
    levi: List[List[float]] = Field(default=[], description="Basis of the reductive complement")


class AlgebraFile(BaseModel):
    """Lie algebra given by sparse structure constants with i < j."""
    name: str
    dim: int = Field(..., gt=0)
    basis: List[str]
    structure: List[Tuple[int, int, int, float]] = Field(default=[], description="Triples [i, j, k, value], 0-based, i < j")
    meta: Optional[AlgebraMetaFile] = None

    @model_validator(mode="after")
    def _check_shapes(self) -> "AlgebraFile":
        if len(self.basis) != self.dim:
            raise ValueError(f"basis has {len(self.basis)} names but dim is {self.dim}")
        for pos, (i, j, k, _) in enumerate(self.structure):
            if not (0 <= i < j < self.dim and 0 <= k < self.dim):
                raise ValueError(f"structure[{pos}]: indices ({i}, {j}, {k}) need 0 <= i < j < dim and 0 <= k < dim")
        return self


# Evidence and sub-reports
class FalsifierWitness(BaseModel):
    """Group word, C_min generator and the negative pairing that refuted lambda."""
    word: List[List[float]] = Field(..., description="Elements x_k with g = exp(ad x_1)...exp(ad x_K)")
    generator: List[float] = Field(..., description="C_min generator in Cartan coordinates")
    value: float = Field(..., description="lambda(Ad(g) c)")


class RootReport(BaseModel):
    """One root of the complexified algebra."""
    beta: List[float] = Field(..., description="Real functional on t with alpha = i*beta")
    kind: RootKind
    origin: RootOrigin
    multiplicity: int = Field(..., ge=1)
    signature: Tuple[int, int, int] = Field(..., description="(positive, negative, zero) of the hermitian form")
    zero_bracket: bool = False


class SystemReport(BaseModel):
    """Positive system with its adaptedness verdict."""
    regular_element: List[float]
    positive: List[List[float]]
    noncompact_positive: List[List[float]]
    adapted: bool


class ConeReport(BaseModel):
    """Cone serialized for reports."""
    representation: Representation
    vectors: List[List[float]]
    pointed: bool
    subset_of_cmax: Optional[bool] = None


class CheckReport(BaseModel):
    """Structure of an algebra: roots, Weyl group, positive systems and cones."""
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    algebra: str
    dim: int
    cartan_dim: int
    roots: List[RootReport]
    weyl_order: int
    cone_potential: bool
    systems: List[SystemReport]
    c_min: List[ConeReport]
    c_max: List[ConeReport]

    model_config = ConfigDict(populate_by_name=True)


class SpanningReport(BaseModel):
    """Sampled rank of the orbit span and a basis of its annihilator."""
    spans: bool
    sampled_rank: int
    annihilator: List[List[float]] = Field(default=[], description="Quotient directions when the orbit lies in a hyperplane")


class OmegaDescription(BaseModel):
    """Geometric temperature as Ad(G) of the open cone C_max."""
    inequalities: List[List[float]] = Field(default=[], description="Functionals on t, strict positivity cuts out C_max interior")
    statement: str


class ClassificationReport(BaseModel):
    """Verdict on the existence of Gibbs ensembles for (g, lambda)."""
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    algebra: str
    functional: List[float]
    spanning: SpanningReport
    admissible: bool
    reasons: List[str] = Field(default=[], description="Why admissibility failed, empty when admissible")
    chosen_system: Optional[SystemReport] = None
    c_min: Optional[ConeReport] = None
    c_max: Optional[ConeReport] = None
    lambda_status: LambdaStatus
    falsifier_samples: int = 0
    witness: Optional[FalsifierWitness] = None
    gibbs_exists: bool
    omega: Optional[OmegaDescription] = None
    notes: List[str] = Field(default=[])

    model_config = ConfigDict(populate_by_name=True)


class ThermoReport(BaseModel):
    """Partition function and its derivatives at one point."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    x: List[float]
    coordinates: str = Field(default="algebra", description="'algebra' or 'cartan'")
    finite: bool
    z: float
    log_z: float
    q: List[float] = Field(default=[], description="Geometric heat Q(x) = -d log Z(x)")
    entropy: Optional[float] = None
    fisher: List[List[float]] = Field(default=[], description="Hessian of log Z")
    fisher_eigenvalues: List[float] = Field(default=[], description="Ascending spectrum of the Fisher-Rao metric")
    method: Method


class ThermoGridReport(BaseModel):
    """Thermodynamic reports over a grid of points."""
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    family: str
    points: List[ThermoReport]

    model_config = ConfigDict(populate_by_name=True)


class Estimate(BaseModel):
    """Numerical integral with its error information and provenance."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    value: float
    stderr: float = Field(default=0.0, ge=0)
    bound: float = Field(default=0.0, ge=0)
    samples: int = Field(default=0, ge=0, description="Samples (MC) or nodes (quadrature)")
    seed: Optional[int] = None
    method: str
    radius: Optional[float] = None
    level: Optional[int] = None
    infinite_variance: bool = False


class MomentEstimate(BaseModel):
    """Self-normalized Gibbs mean and covariance of the momentum image."""
    mean: List[float]
    cov: List[List[float]]
    mean_stderr: List[float]
    samples: int
    seed: int
    infinite_variance: bool = False


class ProbeResult(BaseModel):
    """Divergence probe outcome with the truncated-integral evidence."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    status: ProbeStatus
    radii: List[float] = Field(default=[])
    truncated: List[float] = Field(default=[])
    estimate: Optional[Estimate] = None


class ScanRow(BaseModel):
    """One grid point of a domain scan."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    x: List[float]
    cartan: Optional[List[float]] = None
    predicted: ProbeStatus
    observed: ProbeStatus
    z: Optional[float] = None
    match: bool


class DomainScanReport(BaseModel):
    """Predicted C_max membership against the divergence probe."""
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    family: str
    rows: List[ScanRow]
    mismatches: int

    model_config = ConfigDict(populate_by_name=True)


class LegendreReport(BaseModel):
    """Image of the geometric heat map."""
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    family: str
    n_x: int
    n_orbit: int
    contained: int = Field(..., description="Sampled x whose Q(x) lies in the sampled hull")
    containment_failures: List[List[float]] = Field(default=[])
    injective_pairs: int
    injectivity_failures: int
    central_invariance_max: float = Field(..., description="max |Q(x+z) - Q(x)| over central shifts")
    heat_fd_mismatch: float = Field(..., description="max relative gap between analytic and finite-difference Q")
    mc_max_zscore: Optional[float] = None
    passed: bool

    model_config = ConfigDict(populate_by_name=True)


class VerifyRow(BaseModel):
    """Closed form against the oracle at one point."""
    x: List[float]
    closed_form: float
    oracle: float
    stderr: float
    rel_error: float
    passed: bool


class VerifyReport(BaseModel):
    """Rows of a verification run."""
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    family: str
    method: str
    rows: List[VerifyRow]
    passed: bool

    model_config = ConfigDict(populate_by_name=True)


class RunConfig(BaseModel):
    """Command-line run parameters."""
    seed: int = Field(default=42, description="Master seed for every sampler")
    samples: int = Field(default=100_000, ge=1, description="Monte Carlo sample count")
    quad_level: int = Field(default=0, ge=0, description="Starting quadrature level")
    radius_factor: Optional[float] = Field(default=None, gt=0, description="Override of the truncation factor")
    tolerances: Dict[str, float] = Field(default={}, description="Settings overrides")
    output: OutputFormat = Field(default=OutputFormat.JSON)
    expect: Optional[str] = Field(default=None, description="Expected-verdict JSON file")

    @field_validator("tolerances")
    @classmethod
    def _positive(cls, value: Dict[str, float]) -> Dict[str, float]:
        for key, tol in value.items():
            if tol <= 0:
                raise ValueError(f"tolerance '{key}' must be positive")
        return value


class VerifyConfig(RunConfig):
    """Run parameters for oracle-backed commands."""
    samples: int = Field(default=100_000, ge=10_000, description="Monte Carlo sample count (>= 1e4)")
