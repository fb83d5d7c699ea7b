"""Orthogonal decomposition of Gamma-unitaries along polynomial factorizations.

If ``q = q_1 ... q_N`` annihilates a Gamma-unitary ``Sigma`` on ``K``, then
``K`` splits orthogonally into reducing subspaces ``K_j`` with ``Sigma|K_j``
annihilated by ``q_j``. The split is built two factors at a time: the range
of ``q_1(Sigma)`` carries the remaining factors, while the range of the
remaining product plus the common kernel is annihilated by ``q_1``.
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Any

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from gammakit.bipoly import (
    BiPoly,
    classify_poly,
    compose_with_symmetrization,
    eval_pair,
    inner_toral_symmetry_check,
)
from gammakit.dilation import ToeplitzModel, coefficient_scale, verify_annihilation_banded
from gammakit.errors import (
    AnnihilationPreconditionFailed,
    BandUnsafe,
    IncompleteDecomposition,
    PointNotOnDistinguishedBoundary,
    ResidualTooLarge,
)
from gammakit.geometry import distinguished_boundary_defect, fiber
from gammakit.models import (
    Certificate,
    Check,
    CommutingPair,
    Matrix,
    PairRole,
    Point2,
    SamplerConfig,
    SubspaceBasis,
    complex_pair,
    op_norm,
)
from gammakit.opcore import certify_gamma_unitary, joint_diagonalize

logger = logging.getLogger(__name__)

ANNIHILATION_TOL = 1e-8
ORTHOGONALITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DecompositionPart:
    basis: SubspaceBasis
    annihilator: BiPoly
    residual: float
    pair: CommutingPair | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "basis": self.basis.to_json(),
            "annihilator": self.annihilator.to_json(),
            "residual": self.residual,
            "dim": self.basis.dim,
        }


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    parts: list[DecompositionPart]
    completeness_defect: float
    orthogonality: float
    band_truncated: bool = False
    reconstruction_error: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "parts": [part.to_json() for part in self.parts],
            "completenessDefect": self.completeness_defect,
            "orthogonality": self.orthogonality,
            "bandTruncated": self.band_truncated,
            "reconstructionError": self.reconstruction_error,
            "notes": self.notes,
        }


# ---------------------------------------------------------------------------
# Generators and linear-algebra helpers
# ---------------------------------------------------------------------------


def bgamma_point(theta: float, psi: float) -> Point2:
    """``pi(e^{i theta}, e^{i psi})``, a point of the distinguished boundary."""
    z1, z2 = np.exp(1j * theta), np.exp(1j * psi)
    return Point2(z1 + z2, z1 * z2)


def random_gamma_unitary(
    spectrum: list[tuple[Point2, int]], seed: int = 0
) -> CommutingPair:
    """Gamma-unitary with a prescribed joint spectrum, conjugated by a Haar unitary.

    Args:
        spectrum (list[tuple[Point2, int]]): Joint eigenvalues with multiplicities.
        seed (int): Seed for the Haar unitary.

    Returns:
        CommutingPair: ``(U D_s U*, U D_p U*)``.

    Raises:
        ValueError: If ``spectrum`` is empty or a multiplicity is not positive.
        PointNotOnDistinguishedBoundary: If a point is not in the distinguished boundary.
    """
    if not spectrum:
        raise ValueError("spectrum is empty")
    s_vals: list[complex] = []
    p_vals: list[complex] = []
    for pt, mult in spectrum:
        if mult < 1:
            raise ValueError(f"multiplicity must be positive, got {mult}")
        if distinguished_boundary_defect(pt) > 1e-9:
            raise PointNotOnDistinguishedBoundary(f"({pt.s}, {pt.p}) is not in bGamma")
        s_vals.extend([pt.s] * mult)
        p_vals.extend([pt.p] * mult)
    d = len(s_vals)
    rng = np.random.default_rng(seed)
    if d == 1:
        U = np.array([[np.exp(2j * np.pi * rng.uniform())]])
    else:
        U = unitary_group.rvs(d, random_state=rng)
    Uh = U.conj().T
    S = U @ np.diag(s_vals) @ Uh
    P = U @ np.diag(p_vals) @ Uh
    return CommutingPair.of(S, P, ctol=1e-10, role=PairRole.GAMMA_UNITARY)


def _range(M: Matrix, rank_tol: float, floor: float = 1.0) -> Matrix:
    """Range frame; singular values up to ``rank_tol * max(sigma_1, floor)`` count as zero."""
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=np.complex128)
    U, sv, _ = linalg.svd(M)
    cutoff = rank_tol * max(float(sv[0]) if sv.size else 0.0, floor)
    return U[:, : int(np.sum(sv > cutoff))]


def _common_kernel(
    blocks: list[Matrix], dim: int, rank_tol: float, floor: float = 1.0
) -> Matrix:
    if dim == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    stacked = np.vstack(blocks)
    _, sv, vh = linalg.svd(stacked)
    peak = float(sv[0]) if sv.size else 0.0
    rank = int(np.sum(sv > rank_tol * max(peak, floor)))
    return vh[rank:].conj().T


def _restrict(pair: CommutingPair, frame: Matrix) -> CommutingPair:
    Fh = frame.conj().T
    return CommutingPair.of(
        Fh @ pair.S @ frame, Fh @ pair.P @ frame, ctol=1e-8, role=pair.role
    )


def _product(factors: list[BiPoly]) -> BiPoly:
    return reduce(lambda a, b: a * b, factors, BiPoly.constant(1.0))


def _relative(q: BiPoly, pair: CommutingPair) -> float:
    """``||q(Sigma)||`` relative to a coefficient bound."""
    if pair.dim == 0:
        return 0.0
    return op_norm(eval_pair(q, pair, ctol=1e-8)) / coefficient_scale(q, pair)


def _max_cross(frames: list[Matrix]) -> float:
    worst = 0.0
    for i, a in enumerate(frames):
        for b in frames[i + 1 :]:
            if a.shape[1] and b.shape[1]:
                worst = max(worst, op_norm(a.conj().T @ b))
    return worst


# ---------------------------------------------------------------------------
# Gamma-unitary decompositions
# ---------------------------------------------------------------------------


def _require_gamma_unitary(pair: CommutingPair) -> None:
    cert = certify_gamma_unitary(pair)
    if not cert.passed:
        raise AnnihilationPreconditionFailed(
            f"pair is not a Gamma-unitary (failed: {', '.join(cert.failed_checks())})"
        )


def _require_annihilated(pair: CommutingPair, q: BiPoly) -> float:
    residual = _relative(q, pair)
    if residual > ANNIHILATION_TOL:
        raise AnnihilationPreconditionFailed(
            f"factor product leaves residual {residual:.3e} on the pair"
        )
    return residual


def check_range_orthogonality(
    pair: CommutingPair,
    q1: BiPoly,
    q2: BiPoly,
    tol: float = ORTHOGONALITY_TOL,
    assume_distinguished: bool = False,
    sampler: SamplerConfig | None = None,
) -> Certificate:
    """Check ``q1(Sigma) K`` is orthogonal to ``q2(Sigma) K``.

    Args:
        pair (CommutingPair): A Gamma-unitary annihilated by ``q1 * q2``.
        q1 (BiPoly): First factor.
        q2 (BiPoly): Second factor.
        tol (float): Tolerance relative to ``||q1(Sigma)|| ||q2(Sigma)||``.
        assume_distinguished (bool): Record the factors as distinguished by
            assertion instead of sampling them.
        sampler (SamplerConfig | None): Sampler settings for the factor check.

    Returns:
        Certificate: Pass iff ``||q1(Sigma)* q2(Sigma)||`` is within tolerance.

    Raises:
        AnnihilationPreconditionFailed: If the pair is not a Gamma-unitary, the
            product does not annihilate it, or a factor is not distinguished.
    """
    _require_gamma_unitary(pair)
    _require_annihilated(pair, q1 * q2)
    if assume_distinguished:
        source = "asserted"
    else:
        source = "sampled"
        for name, q in (("q1", q1), ("q2", q2)):
            if not classify_poly(q, sampler).distinguished:
                raise AnnihilationPreconditionFailed(f"{name} is not distinguished")
    Q1 = eval_pair(q1, pair, ctol=1e-8)
    Q2 = eval_pair(q2, pair, ctol=1e-8)
    value = op_norm(Q1.conj().T @ Q2)
    scale = max(1.0, op_norm(Q1) * op_norm(Q2))
    return Certificate.from_checks(
        [Check(name="range_orthogonality", value=value, threshold=tol * scale)],
        notes=f"factors distinguished ({source})",
    )


def _split_two(
    pair: CommutingPair, q1: BiPoly, rest: BiPoly, rank_tol: float
) -> tuple[Matrix, Matrix]:
    """Frames ``(K1, K2)`` in the coordinates of ``pair``.

    ``K2`` is the range of ``q1(Sigma)``; ``K1`` joins the range of
    ``rest(Sigma)`` and the common kernel, both annihilated by ``q1``.
    """
    Q1 = eval_pair(q1, pair, ctol=1e-8)
    Qr = eval_pair(rest, pair, ctol=1e-8)
    s1, sr = coefficient_scale(q1, pair), coefficient_scale(rest, pair)
    K2 = _range(Q1, rank_tol, s1)
    L1 = _range(Qr, rank_tol, sr)
    L_prime = _common_kernel([Q1, Qr], pair.dim, rank_tol, max(s1, sr))
    return np.hstack([L1, L_prime]), K2


def decompose_gamma_unitary(
    pair: CommutingPair,
    factors: list[BiPoly],
    rank_tol: float = 1e-8,
) -> DecompositionResult:
    """Split a Gamma-unitary into orthogonal parts, one per factor.

    Args:
        pair (CommutingPair): A Gamma-unitary annihilated by the product of ``factors``.
        factors (list[BiPoly]): Nonempty factor list.
        rank_tol (float): Relative singular-value cutoff for ranges and kernels.

    Returns:
        DecompositionResult: Parts in factor order with their restricted pairs.

    Raises:
        ValueError: If ``factors`` is empty.
        AnnihilationPreconditionFailed: If the preconditions fail.
        ResidualTooLarge: If a restriction is not annihilated by its factor.
        IncompleteDecomposition: If the parts overlap or miss part of the space.
    """
    if not factors:
        raise ValueError("factor list is empty")
    _require_gamma_unitary(pair)
    _require_annihilated(pair, _product(factors))

    frames: list[Matrix] = []
    current = np.eye(pair.dim, dtype=np.complex128)
    for j, q in enumerate(factors):
        if j == len(factors) - 1 or current.shape[1] == 0:
            frames.append(current)
            frames.extend(
                np.zeros((pair.dim, 0), dtype=np.complex128) for _ in factors[j + 1 :]
            )
            break
        local = _restrict(pair, current)
        K1, K2 = _split_two(local, q, _product(factors[j + 1 :]), rank_tol)
        frames.append(current @ K1)
        current = current @ K2

    parts = []
    for j, (q, frame) in enumerate(zip(factors, frames)):
        restricted = _restrict(pair, frame)
        residual = _relative(q, restricted)
        if residual > ANNIHILATION_TOL:
            raise ResidualTooLarge(f"part {j} leaves residual {residual:.3e} under its factor")
        if not certify_gamma_unitary(restricted).passed:
            raise ResidualTooLarge(f"part {j} is not a Gamma-unitary")
        parts.append(
            DecompositionPart(
                basis=SubspaceBasis(frame, label=f"K{j + 1}"),
                annihilator=q,
                residual=residual,
                pair=restricted.with_role(PairRole.GAMMA_UNITARY),
            )
        )

    orthogonality = _max_cross(frames)
    if orthogonality > ORTHOGONALITY_TOL:
        raise IncompleteDecomposition(f"parts overlap ({orthogonality:.3e})")
    projector = sum((f @ f.conj().T for f in frames), np.zeros((pair.dim, pair.dim)))
    completeness = op_norm(np.eye(pair.dim) - projector)
    if completeness > ANNIHILATION_TOL:
        raise IncompleteDecomposition(f"completeness defect {completeness:.3e}")
    rebuilt_s = sum(
        (p.basis.frame @ p.pair.S @ p.basis.frame.conj().T for p in parts if p.pair),
        np.zeros((pair.dim, pair.dim)),
    )
    rebuilt_p = sum(
        (p.basis.frame @ p.pair.P @ p.basis.frame.conj().T for p in parts if p.pair),
        np.zeros((pair.dim, pair.dim)),
    )
    reconstruction = max(op_norm(rebuilt_s - pair.S), op_norm(rebuilt_p - pair.P))
    logger.info(
        "decomposed Gamma-unitary of dim %d into parts %s",
        pair.dim,
        [p.basis.dim for p in parts],
    )
    return DecompositionResult(
        parts=parts,
        completeness_defect=completeness,
        orthogonality=orthogonality,
        reconstruction_error=reconstruction,
    )


def check_kernel_part(
    pair: CommutingPair, q1: BiPoly, q2: BiPoly, rank_tol: float = 1e-8
) -> Certificate:
    """Both factors vanish on ``L' = ker q1(Sigma) & ker q2(Sigma)``."""
    Q1 = eval_pair(q1, pair, ctol=1e-8)
    Q2 = eval_pair(q2, pair, ctol=1e-8)
    floor = max(coefficient_scale(q1, pair), coefficient_scale(q2, pair))
    L_prime = _common_kernel([Q1, Q2], pair.dim, rank_tol, floor)
    scale = max(1.0, op_norm(Q1), op_norm(Q2))
    return Certificate.from_checks(
        [
            Check(name="q1_on_kernel", value=op_norm(Q1 @ L_prime), threshold=ORTHOGONALITY_TOL * scale),
            Check(name="q2_on_kernel", value=op_norm(Q2 @ L_prime), threshold=ORTHOGONALITY_TOL * scale),
        ],
        witnesses={"kernelDim": int(L_prime.shape[1])},
    )


def unitary_realization(pair: CommutingPair, seed: int = 0) -> tuple[Matrix, Matrix]:
    """Commuting unitaries ``(U1, U2)`` with ``(U1 + U2, U1 U2) = (S, P)``.

    Raises:
        JointDiagonalizationFailed: If the pair cannot be jointly diagonalized.
    """
    Q, s_vals, p_vals = joint_diagonalize(pair, seed=seed)
    first, second = [], []
    for s, p in zip(s_vals, p_vals):
        a, b = fiber(Point2(s, p))
        first.append(a / abs(a) if a else 1.0)
        second.append(b / abs(b) if b else 1.0)
    Qh = Q.conj().T
    return Q @ np.diag(first) @ Qh, Q @ np.diag(second) @ Qh


def check_inner_toral_identity(
    pair: CommutingPair, q: BiPoly, tol: float = 1e-9
) -> Certificate:
    """Check ``p1(U)* U1^n U2^m = alpha p1(U)`` for ``p1 = q o pi`` of bidegree ``(n, m)``.

    ``alpha`` comes from :func:`inner_toral_symmetry_check`; the identity
    holds whenever that check passes.
    """
    p1 = compose_with_symmetrization(q)
    symmetry = inner_toral_symmetry_check(p1)
    re, im = symmetry.witnesses.get("alpha", (1.0, 0.0))
    alpha = complex(re, im)
    U1, U2 = unitary_realization(pair)
    torus = CommutingPair.of(U1, U2, ctol=1e-8)
    value_p1 = eval_pair(p1, torus, ctol=1e-8)
    n, m = p1.deg
    lhs = value_p1.conj().T @ np.linalg.matrix_power(U1, n) @ np.linalg.matrix_power(U2, m)
    gap = op_norm(lhs - alpha * value_p1)
    scale = max(1.0, float(np.sum(np.abs(p1.coeffs))))
    return Certificate.from_checks(
        symmetry.checks
        + [Check(name="inner_toral_identity", value=gap, threshold=tol * scale)],
        witnesses={"alpha": complex_pair(alpha), "bidegree": list(p1.deg)},
    )


# ---------------------------------------------------------------------------
# Band-truncated decomposition of pure models
# ---------------------------------------------------------------------------


def decompose_pure_isometry_banded(
    tm: ToeplitzModel,
    factors: list[BiPoly],
    probe_degree: int,
    rank_tol: float = 1e-8,
) -> DecompositionResult:
    """Parts ``H_j = range r_j(Sigma)`` with ``r_j = q / q_j``, on the probed range only.

    Args:
        tm (ToeplitzModel): The pure model truncation.
        factors (list[BiPoly]): Nonempty factor list.
        probe_degree (int): Highest probed degree.
        rank_tol (float): Relative singular-value cutoff.

    Returns:
        DecompositionResult: Parts flagged as band-truncated.

    Raises:
        ValueError: If ``factors`` is empty.
        BandUnsafe: If ``probe_degree + deg q > N``.
        AnnihilationPreconditionFailed: If ``q`` does not annihilate the probed range.
        ResidualTooLarge: If a part is not annihilated by its factor.
        IncompleteDecomposition: If parts overlap or a part is empty.
    """
    if not factors:
        raise ValueError("factor list is empty")
    q = _product(factors)
    if probe_degree + q.total_degree > tm.N:
        raise BandUnsafe(
            f"probe degree {probe_degree} + degree {q.total_degree} exceeds N={tm.N}"
        )
    if not verify_annihilation_banded(tm, q, probe_degree).passed:
        raise AnnihilationPreconditionFailed("factor product does not annihilate the probed range")
    pair = tm.pair
    cols = (probe_degree + 1) * tm.block_size
    probe = np.eye(pair.dim, dtype=np.complex128)[:, :cols]
    frames: list[Matrix] = []
    parts = []
    for j, q_j in enumerate(factors):
        r_j = _product(factors[:j] + factors[j + 1 :])
        frame = _range(
            eval_pair(r_j, pair, ctol=1e-10) @ probe, rank_tol, coefficient_scale(r_j, pair)
        )
        if frame.shape[1] == 0:
            raise IncompleteDecomposition(f"factor {j} contributes an empty part")
        residual = op_norm(eval_pair(q_j, pair, ctol=1e-10) @ frame)
        if residual > ANNIHILATION_TOL * coefficient_scale(q_j, pair):
            raise ResidualTooLarge(f"part {j} leaves residual {residual:.3e}")
        frames.append(frame)
        parts.append(
            DecompositionPart(
                basis=SubspaceBasis(frame, label=f"H{j + 1}"),
                annihilator=q_j,
                residual=residual,
            )
        )
    orthogonality = _max_cross(frames)
    if orthogonality > ORTHOGONALITY_TOL:
        raise IncompleteDecomposition(f"parts overlap ({orthogonality:.3e})")
    projector = sum((f @ f.conj().T for f in frames), np.zeros((pair.dim, pair.dim)))
    completeness = op_norm(probe - projector @ probe)
    return DecompositionResult(
        parts=parts,
        completeness_defect=completeness,
        orthogonality=orthogonality,
        band_truncated=True,
        notes=[f"verified on degrees <= {probe_degree} of an N={tm.N} truncation"],
    )
