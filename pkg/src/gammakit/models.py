"""Value types and JSON wire models shared by every gammakit module.

Matrices travel through the library as ``numpy`` arrays; the pydantic models
in this module are the on-disk and CLI representations.
"""

import cmath
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, Self

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic.alias_generators import to_camel

from gammakit.errors import CommutatorTooLarge

Matrix = NDArray[np.complex128]


def complex_pair(z: complex) -> list[float]:
    """Encode a complex number as ``[re, im]``."""
    z = complex(z)
    return [z.real, z.imag]


def as_matrix(data: Any) -> Matrix:
    """Coerce array-like input to a complex 2-D array.

    Args:
        data (Any): Array-like input.

    Returns:
        Matrix: Complex copy of the input.

    Raises:
        ValueError: If the input is not two-dimensional or holds NaN/Inf.
    """
    arr = np.array(data, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Matrix contains NaN or Inf entries")
    return arr


def op_norm(T: Matrix) -> float:
    if T.size == 0:
        return 0.0
    return float(np.linalg.norm(T, 2))


# ---------------------------------------------------------------------------
# Points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Point2:
    """A point ``(s, p)`` of the symmetrized coordinate plane."""

    s: complex
    p: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "p", complex(self.p))
        if not (cmath.isfinite(self.s) and cmath.isfinite(self.p)):
            raise ValueError(f"Point2 entries must be finite, got ({self.s}, {self.p})")

    def to_json(self) -> list[list[float]]:
        return [complex_pair(self.s), complex_pair(self.p)]

    @classmethod
    def from_json(cls, raw: Any) -> Self:
        """Parse ``[[re, im], [re, im]]``.

        Args:
            raw (Any): Decoded JSON value.

        Returns:
            Point2: The parsed point.

        Raises:
            ValueError: If the shape is wrong.
        """
        try:
            (sr, si), (pr, pi) = raw
        except (TypeError, ValueError) as exc:
            raise ValueError(f"Point2 must be [[re, im], [re, im]], got {raw!r}") from exc
        return cls(complex(sr, si), complex(pr, pi))


class PointTag(StrEnum):
    INTERIOR_G2 = "InteriorG2"
    DISTINGUISHED_BOUNDARY = "DistinguishedBoundary"
    OTHER_BOUNDARY = "OtherBoundary"
    EXTERIOR_GAMMA = "ExteriorGamma"
    EXTERIOR_SYMMETRIZED_E2 = "ExteriorSymmetrizedE2"
    EXTERIOR_OTHER = "ExteriorOther"

    @property
    def in_gamma(self) -> bool:
        return self in (
            PointTag.INTERIOR_G2,
            PointTag.DISTINGUISHED_BOUNDARY,
            PointTag.OTHER_BOUNDARY,
        )


@dataclass(frozen=True)
class PointClass:
    tag: PointTag
    fiber: tuple[complex, complex]
    margin: float

    def to_json(self) -> dict[str, Any]:
        return {
            "tag": str(self.tag),
            "fiber": [complex_pair(z) for z in self.fiber],
            "margin": self.margin,
        }


# ---------------------------------------------------------------------------
# Operator pairs
# ---------------------------------------------------------------------------


class PairRole(StrEnum):
    GENERIC = "generic"
    GAMMA_CONTRACTION = "gamma-contraction"
    GAMMA_UNITARY = "gamma-unitary"
    PURE_ISOMETRY_MODEL = "pure-isometry-model"


@dataclass(frozen=True, eq=False)
class CommutingPair:
    """An ordered pair ``(S, P)`` of commuting square matrices.

    Build instances with :meth:`of`, which measures the commutator and
    rejects pairs that do not commute within tolerance.
    """

    S: Matrix
    P: Matrix
    commutator_norm: float
    role: PairRole = PairRole.GENERIC

    @classmethod
    def of(
        cls,
        S: Any,
        P: Any,
        ctol: float = 1e-9,
        role: PairRole = PairRole.GENERIC,
    ) -> "CommutingPair":
        """Validate and build a pair.

        Args:
            S (Any): First operator, array-like square matrix.
            P (Any): Second operator, same size as ``S``.
            ctol (float): Relative commutator tolerance.
            role (PairRole): Role tag carried with the pair.

        Returns:
            CommutingPair: The validated pair.

        Raises:
            ValueError: If the shapes disagree or are not square.
            CommutatorTooLarge: If ``||SP - PS|| > ctol * (1 + ||S|| ||P||)``.
        """
        S_arr = as_matrix(S)
        P_arr = as_matrix(P)
        if S_arr.shape != P_arr.shape or S_arr.shape[0] != S_arr.shape[1]:
            raise ValueError(
                f"S and P must be square of equal size, got {S_arr.shape} and {P_arr.shape}"
            )
        comm = op_norm(S_arr @ P_arr - P_arr @ S_arr)
        bound = ctol * (1.0 + op_norm(S_arr) * op_norm(P_arr))
        if comm > bound:
            raise CommutatorTooLarge(
                f"||SP - PS|| = {comm:.3e} exceeds {bound:.3e}"
            )
        return cls(S=S_arr, P=P_arr, commutator_norm=comm, role=role)

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    @property
    def scale(self) -> float:
        """Size used for relative tolerances: ``1 + ||S|| + ||P||``."""
        return 1.0 + op_norm(self.S) + op_norm(self.P)

    def with_role(self, role: PairRole) -> "CommutingPair":
        return CommutingPair(self.S, self.P, self.commutator_norm, role)

    def to_json(self) -> dict[str, Any]:
        return {
            "S": ComplexMatrix.from_array(self.S).model_dump(),
            "P": ComplexMatrix.from_array(self.P).model_dump(),
            "commutatorNorm": self.commutator_norm,
            "role": str(self.role),
        }


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal column frame of a subspace."""

    frame: Matrix
    label: str = ""

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def projector(self) -> Matrix:
        return self.frame @ self.frame.conj().T

    def to_json(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "frame": ComplexMatrix.from_array(self.frame).model_dump(),
        }


@dataclass(frozen=True, eq=False)
class DefectData:
    """``D = (I - P*P)^(1/2)`` with its eigen-decomposition."""

    D: Matrix
    frame: SubspaceBasis
    eigs: NDArray[np.float64]
    basis: Matrix

    @property
    def rank(self) -> int:
        return self.frame.dim

    @property
    def defect_eigs(self) -> NDArray[np.float64]:
        """Eigenvalues of ``D`` on the frame columns, in frame order."""
        return self.eigs[self.eigs.size - self.rank :]


@dataclass(frozen=True, eq=False)
class FundamentalSolve:
    """Solution ``A`` of ``S - S*P = D_P A D_P`` in defect-frame coordinates."""

    A: Matrix
    residual: float
    omega: float
    frame: SubspaceBasis

    @property
    def lifted(self) -> Matrix:
        """``A`` as an operator on the ambient space (zero off the defect space)."""
        F = self.frame.frame
        return F @ self.A @ F.conj().T

    def to_json(self) -> dict[str, Any]:
        return {
            "A": ComplexMatrix.from_array(self.A).model_dump(),
            "residual": self.residual,
            "omega": self.omega,
            "frame": self.frame.to_json(),
        }


# ---------------------------------------------------------------------------
# Certificates and verdicts
# ---------------------------------------------------------------------------


class Verdict(StrEnum):
    PASS = "Pass"
    FAIL = "Fail"
    INCONCLUSIVE = "Inconclusive"


class Check(BaseModel):
    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.value <= self.threshold


class Certificate(BaseModel):
    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    verdict: Verdict
    checks: list[Check] = Field(default_factory=list)
    notes: str = ""
    witnesses: dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_checks(
        cls,
        checks: list[Check],
        notes: str = "",
        witnesses: dict[str, Any] | None = None,
        inconclusive: bool = False,
    ) -> "Certificate":
        """Build a certificate whose verdict is Pass iff every check holds.

        Args:
            checks (list[Check]): Measured checks.
            notes (str): Free-form notes.
            witnesses (dict[str, Any] | None): JSON-ready numeric witnesses.
            inconclusive (bool): Downgrade a would-be Pass to Inconclusive.

        Returns:
            Certificate: The assembled certificate.
        """
        if not all(c.passed for c in checks):
            verdict = Verdict.FAIL
        elif inconclusive:
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.PASS
        return cls(verdict=verdict, checks=checks, notes=notes, witnesses=witnesses or {})

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def failed_checks(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


class PolyTag(StrEnum):
    GAMMA_DISTINGUISHED = "GammaDistinguished"
    DISTINGUISHED = "Distinguished"
    NEITHER_EVIDENCE = "NeitherEvidence"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class PolyVerdict:
    """Sampled evidence about the zero set of a polynomial.

    ``gamma_distinguished`` and ``distinguished`` record the two set inclusions
    separately; ``tag`` is the summary, preferring the stronger conclusion.
    """

    tag: PolyTag
    samples_checked: int
    worst_violation: tuple[Point2, PointClass] | None
    interior_witness: Point2 | None
    gamma_distinguished: bool
    distinguished: bool
    boundary_violations: int = 0
    exterior_violations: int = 0
    degenerate_slices: int = 0
    notes: str = ""

    def to_json(self) -> dict[str, Any]:
        worst = None
        if self.worst_violation is not None:
            pt, cls_ = self.worst_violation
            worst = {"point": pt.to_json(), "class": cls_.to_json()}
        return {
            "tag": str(self.tag),
            "samplesChecked": self.samples_checked,
            "worstViolation": worst,
            "interiorWitness": (
                self.interior_witness.to_json() if self.interior_witness else None
            ),
            "gammaDistinguished": self.gamma_distinguished,
            "distinguished": self.distinguished,
            "boundaryViolations": self.boundary_violations,
            "exteriorViolations": self.exterior_violations,
            "degenerateSlices": self.degenerate_slices,
            "notes": self.notes,
        }


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


class SamplerConfig(BaseModel):
    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    samples: int = 512
    tol: float = 1e-6
    seed: int = 0

    @field_validator("samples")
    @classmethod
    def _enough_samples(cls, v: int) -> int:
        if v < 16:
            raise ValueError(f"samples must be >= 16, got {v}")
        return v

    @field_validator("tol")
    @classmethod
    def _positive_tol(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"tol must be positive, got {v}")
        return v

    @field_validator("seed")
    @classmethod
    def _unsigned_seed(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"seed must be non-negative, got {v}")
        return v


class RunConfig(BaseModel):
    """Settings shared by every CLI command and embedded in every report."""

    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    tol: float = 1e-9
    rank_tol: float = 1e-8
    samples: int = 512
    seed: int = 0
    truncation: int = 6
    probe_degree: int = 2
    output_path: str | None = None
    sampler_tol: float = 1e-6

    @field_validator("tol", "rank_tol", "sampler_tol")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"tolerances must be positive, got {v}")
        return v

    @field_validator("samples")
    @classmethod
    def _enough_samples(cls, v: int) -> int:
        if v < 16:
            raise ValueError(f"samples must be >= 16, got {v}")
        return v

    @field_validator("seed", "probe_degree")
    @classmethod
    def _non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"value must be non-negative, got {v}")
        return v

    @model_validator(mode="after")
    def _band_safe_defaults(self) -> Self:
        if self.truncation < self.probe_degree + 1:
            raise ValueError(
                f"truncation ({self.truncation}) must be >= probe_degree + 1 "
                f"({self.probe_degree + 1})"
            )
        return self

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(samples=self.samples, tol=self.sampler_tol, seed=self.seed)


# ---------------------------------------------------------------------------
# Wire formats
# ---------------------------------------------------------------------------


class ComplexMatrix(BaseModel):
    """Row-major complex matrix: ``{"rows": r, "cols": c, "data": [[re, im], ...]}``."""

    rows: int
    cols: int
    data: list[tuple[float, float]]

    @model_validator(mode="after")
    def _check_shape(self) -> Self:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("rows and cols must be non-negative")
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"data has {len(self.data)} entries, expected {self.rows * self.cols}"
            )
        if not all(math.isfinite(re) and math.isfinite(im) for re, im in self.data):
            raise ValueError("matrix data must be finite")
        return self

    @classmethod
    def from_array(cls, arr: Any) -> "ComplexMatrix":
        a = np.asarray(arr, dtype=np.complex128)
        rows, cols = a.shape
        data = [(float(z.real), float(z.imag)) for z in a.reshape(-1)]
        return cls(rows=rows, cols=cols, data=data)

    def to_array(self) -> Matrix:
        flat = np.array([complex(re, im) for re, im in self.data], dtype=np.complex128)
        return flat.reshape(self.rows, self.cols)


class PairFile(BaseModel):
    """On-disk commuting pair: ``{"S": ComplexMatrix, "P": ComplexMatrix}``."""

    model_config = ConfigDict(populate_by_name=True)

    S: ComplexMatrix
    P: ComplexMatrix

    def to_pair(self, ctol: float) -> CommutingPair:
        return CommutingPair.of(self.S.to_array(), self.P.to_array(), ctol=ctol)


class BiPolyPayload(BaseModel):
    """``{"deg": [n, m], "coeffs": [[[re, im], ...], ...]}`` with rows indexed by z1 power."""

    deg: tuple[int, int]
    coeffs: list[list[tuple[float, float]]]

    @model_validator(mode="after")
    def _check_grid(self) -> Self:
        n, m = self.deg
        if n < 0 or m < 0:
            raise ValueError(f"bidegree must be non-negative, got {self.deg}")
        if len(self.coeffs) != n + 1 or any(len(row) != m + 1 for row in self.coeffs):
            raise ValueError(f"coefficient grid must be {n + 1}x{m + 1}")
        return self


class FactorsFile(BaseModel):
    factors: list[BiPolyPayload] = Field(min_length=1)


@dataclass(frozen=True)
class Fixture:
    """A named, JSON-ready test fixture."""

    name: str
    kind: str
    payload: dict[str, Any]
    description: str = ""
    expected: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        """Payload keys at the top level, so the file also parses as the payload's wire model."""
        return {
            **self.payload,
            "name": self.name,
            "kind": self.kind,
            "description": self.description,
            "expected": self.expected,
        }
