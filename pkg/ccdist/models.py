from math import comb
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# 距離對索引
class PairIndex(BaseModel):
    model_config = ConfigDict(frozen=True)

    i: int = Field(ge=1)
    j: int = Field(ge=2)
    linear: int = Field(ge=0)

    @property
    def label(self) -> str:
        return f"{self.i}{self.j}"


# 打包的互距向量（字典序）
class DistanceVector(BaseModel):
    n: int = Field(ge=2)
    entries: List[float]

    @model_validator(mode="after")
    def _check_entries(self) -> "DistanceVector":
        if len(self.entries) != comb(self.n, 2):
            raise ValueError(f"expected {comb(self.n, 2)} distances for n={self.n}")
        if any(not np.isfinite(r) or r <= 0 for r in self.entries):
            raise ValueError("mutual distances must be finite and positive")
        return self

    @classmethod
    def from_array(cls, values, n: Optional[int] = None) -> "DistanceVector":
        arr = np.asarray(values, dtype=float).ravel()
        if n is None:
            n = int(round((1 + np.sqrt(1 + 8 * arr.size)) / 2))
        return cls(n=n, entries=arr.tolist())

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    def get(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        linear = (i - 1) * (2 * self.n - i) // 2 + (j - i - 1)
        return self.entries[linear]


# 質量向量
class MassVector(BaseModel):
    masses: List[float] = Field(min_length=1)

    @field_validator("masses")
    @classmethod
    def _positive(cls, v: List[float]) -> List[float]:
        if any(not np.isfinite(m) or m <= 0 for m in v):
            raise ValueError("masses must be finite and positive")
        return v

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=float)

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def total(self) -> float:
        return float(sum(self.masses))

    @property
    def inertia_target(self) -> float:
        """I0 = 1 / (2m)"""
        return 1.0 / (2.0 * self.total)


class PlanarConfiguration(BaseModel):
    points: List[Tuple[float, float]] = Field(min_length=2)

    @classmethod
    def from_array(cls, values) -> "PlanarConfiguration":
        arr = np.asarray(values, dtype=float).reshape(-1, 2)
        return cls(points=[(float(x), float(y)) for x, y in arr])

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    @property
    def n(self) -> int:
        return len(self.points)


class OrientedArea(BaseModel):
    value: float
    triple: Tuple[int, int, int]
    slot: int = Field(ge=1, le=4)


class MultiplierSet(BaseModel):
    delta: float
    omega: float = 0.0
    theta: float = 0.0


class TrapezoidGuess(BaseModel):
    r: List[float]
    delta: float
    omega: float = 0.0
    theta: float = 0.0


class RealizabilityReport(BaseModel):
    realizable: bool
    in_g2: bool = False
    violations: List[str] = Field(default_factory=list)
    g2_violations: List[str] = Field(default_factory=list)


# 約束集合成員報告
class ConstraintReport(BaseModel):
    t2: float
    l123: float
    inertia_defect: float
    f2: float
    f4: float
    f5: float
    in_g: bool
    in_g2: bool
    in_m_plus: bool
    in_n: bool
    in_h: bool
    in_t: bool
    notes: List[str] = Field(default_factory=list)


class ClassificationFlags(BaseModel):
    delta_positive: bool
    omega_positive: bool
    theta_positive: bool
    r24_equals_r25: bool
    inequality_chain: bool
    spectrum_positive: bool
    spectrum_matches_numeric: bool
    violations: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


SymmetryClass = Literal["rectangle", "symmetric_isosceles", "asymmetric_r13_gt_r45", "violation"]


class SymmetryVerdict(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    symmetry_class: SymmetryClass = Field(alias="class")
    mirrored: bool = False
    distance_defects: Dict[str, float] = Field(default_factory=dict)
    mass_defects: Dict[str, float] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)


class TrapezoidSolution(BaseModel):
    r: DistanceVector
    multipliers: MultiplierSet
    residual_norm: float
    iterations: int = 0
    spectrum: List[float] = Field(default_factory=list)
    constraints: Optional[ConstraintReport] = None
    flags: Optional[ClassificationFlags] = None
    symmetry: Optional[SymmetryVerdict] = None


class FamilyMember(BaseModel):
    """Realizable symmetric trapezoid with the masses that make it central."""

    base_ratio: float
    height: float
    masses: MassVector
    positions: PlanarConfiguration


class EtaReport(BaseModel):
    eta: Dict[str, float]
    residuals: List[float]
    max_residual: float
    passed: bool


class ClusterSummary(BaseModel):
    size: int
    representative: List[float]


class UniquenessReport(BaseModel):
    starts: int
    seed: int
    converged: int
    failures: int
    clusters: List[ClusterSummary]
    nonrealizable_clusters: List[ClusterSummary] = Field(default_factory=list)
    message: str = ""

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)


class Ordering(BaseModel):
    model_config = ConfigDict(frozen=True)

    perm: Tuple[int, ...]

    @field_validator("perm")
    @classmethod
    def _permutation(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if sorted(v) != list(range(1, len(v) + 1)):
            raise ValueError(f"{v} is not a permutation of 1..{len(v)}")
        return v

    @property
    def n(self) -> int:
        return len(self.perm)

    @property
    def is_canonical(self) -> bool:
        return self.perm[0] < self.perm[-1]

    def canonical(self) -> "Ordering":
        return self if self.is_canonical else Ordering(perm=tuple(reversed(self.perm)))


class CollinearSolution(BaseModel):
    ordering: Ordering
    gaps: List[float]
    delta: float
    sigma: Dict[str, float]
    residual_norm: float
    iterations: int = 0
    spectrum: List[float] = Field(default_factory=list)
    distances: Optional[DistanceVector] = None
    s_signs: Dict[str, int] = Field(default_factory=dict)


class GammaReport(BaseModel):
    masses: List[float]
    matrix: List[List[float]]
    gammas: List[float]


class PsiReport(BaseModel):
    psi_inv: List[List[float]]
    psi: List[List[float]]
    roundtrip_error: float


class LBasisReport(BaseModel):
    n: int
    rank: int
    expected_rank: int
    representation_ok: bool

    @property
    def passed(self) -> bool:
        return self.rank == self.expected_rank and self.representation_ok


class GradientCollinearityReport(BaseModel):
    v2: float
    v4: float
    v5: float
    errors: Dict[str, float]
    passed: bool


class OracleSolution(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    x: PlanarConfiguration
    lambda_: float = Field(alias="lambda")
    delta: float
    residual_norm: float
    iterations: int = 0
    pinned: Tuple[int, int] = (1, 3)


class CrossValidationReport(BaseModel):
    max_relative_error: float
    passed: bool
    oracle: OracleSolution


class FuzzFailure(BaseModel):
    check: str
    trial: int
    seed: Tuple[int, int]
    error: float


class FuzzReport(BaseModel):
    seed: int
    trials: int
    checks: List[str]
    max_errors: Dict[str, float]
    failures: List[FuzzFailure] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


class BruteForceReport(BaseModel):
    grid: int
    arc: Tuple[float, float]
    phi_grid: float
    phi_solution: float
    cell_width: float
    within_one_cell: bool
    u_min: float
    endpoint_ratio: float


CommandName = Literal[
    "solve-trapezoid",
    "solve-collinear",
    "enumerate-moulton",
    "verify-identities",
    "cross-validate",
    "uniqueness-probe",
    "make-fixture",
]


class RunConfig(BaseModel):
    command: CommandName
    masses: Optional[MassVector] = None
    tol: Optional[float] = Field(default=None, gt=0)
    max_iter: Optional[int] = Field(default=None, gt=0)
    seed: int = 0
    output_path: Optional[str] = None
    input_path: Optional[str] = None
    ordering: Optional[Ordering] = None
    rho: float = Field(default=1.2, gt=0)
    height: float = Field(default=2.0, gt=0)
    offset: float = 0.0
    family_b: Optional[float] = Field(default=None, gt=0)
    starts: int = Field(default=100, ge=2)
    trials: int = Field(default=1000, ge=1)
    verbose: bool = False
