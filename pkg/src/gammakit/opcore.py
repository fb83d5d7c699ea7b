"""Matrix-level operator theory for commuting pairs.

Covers numerical and spectral radii, defect operators, the fundamental
operator ``A`` solving ``S - S*P = D_P A D_P``, certificates for
Gamma-contractions and Gamma-unitaries, and the pure/unitary splitting.
"""

import logging
from typing import Any

import numpy as np
from scipy import linalg, optimize

from gammakit.bipoly import BiPoly, PencilOrder, det_pencil, point_annihilator
from gammakit.errors import (
    GammaError,
    JointDiagonalizationFailed,
    NotAContraction,
    NotNormal,
    NotUnitary,
    RankDeficientInconsistent,
    SpectralGapTooSmall,
)
from gammakit.geometry import distinguished_boundary_defect
from gammakit.models import (
    Certificate,
    Check,
    CommutingPair,
    DefectData,
    FundamentalSolve,
    Matrix,
    PairRole,
    Point2,
    RunConfig,
    SubspaceBasis,
    complex_pair,
    op_norm,
)

logger = logging.getLogger(__name__)

CONTRACTION_SLACK = 1e-8
_CLAMP_FLOOR = -1e-10
_ROUNDING_FLOOR = 1e-12
_JOINT_DIAG_TOL = 1e-8
_SPLIT_UNIT_TOL = 1e-9
_SPLIT_GAP = 1e-6


# ---------------------------------------------------------------------------
# Radii
# ---------------------------------------------------------------------------


def _real_part_top(T: Matrix, theta: float) -> float:
    rotated = np.exp(1j * theta) * T
    return float(linalg.eigvalsh((rotated + rotated.conj().T) / 2)[-1])


def numerical_radius(T: Matrix, grid: int = 256, refine_iters: int = 40) -> float:
    """Numerical radius ``max_theta lambda_max(Re(e^{i theta} T))``.

    A uniform grid locates the best cell, then a bounded Brent search refines
    inside the two neighbouring cells. The refined value never falls below
    the grid value.

    Args:
        T (Matrix): Square matrix.
        grid (int): Number of grid angles, at least 32.
        refine_iters (int): Iteration cap for the refinement.

    Returns:
        float: The numerical radius.

    Raises:
        ValueError: If ``T`` is not square or ``grid < 32``.
    """
    T = np.asarray(T, dtype=np.complex128)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"numerical radius needs a square matrix, got {T.shape}")
    if grid < 32:
        raise ValueError(f"grid must be >= 32, got {grid}")
    if T.size == 0:
        return 0.0
    thetas = 2 * np.pi * np.arange(grid) / grid
    values = np.array([_real_part_top(T, t) for t in thetas])
    k = int(np.argmax(values))
    best = float(values[k])
    step = 2 * np.pi / grid
    res = optimize.minimize_scalar(
        lambda t: -_real_part_top(T, t),
        bounds=(thetas[k] - step, thetas[k] + step),
        method="bounded",
        options={"maxiter": refine_iters, "xatol": 1e-12},
    )
    return max(best, float(-res.fun))


def spectral_radius(T: Matrix) -> float:
    T = np.asarray(T, dtype=np.complex128)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got {T.shape}")
    if T.size == 0:
        return 0.0
    return float(np.max(np.abs(linalg.eigvals(T))))


# ---------------------------------------------------------------------------
# Defect operators and the fundamental operator
# ---------------------------------------------------------------------------


def _normalize_phases(U: Matrix) -> Matrix:
    """Make the largest-modulus entry of every column real and positive."""
    if U.size == 0:
        return U
    idx = np.argmax(np.abs(U), axis=0)
    pivots = U[idx, np.arange(U.shape[1])]
    return U * (np.abs(pivots) / pivots)


def defect(P: Matrix, rank_tol: float = 1e-8) -> DefectData:
    """Defect operator ``D_P = (I - P*P)^(1/2)`` and an orthonormal frame of its range.

    Eigenvalues of ``I - P*P`` down to ``-1e-10`` are rounding and count as
    zero; anything below ``-1e-8`` means ``P`` is not a contraction.

    Args:
        P (Matrix): Square matrix with ``||P|| <= 1 + 1e-8``.
        rank_tol (float): Relative cutoff for the defect frame.

    Returns:
        DefectData: ``D``, the frame, the eigenvalues of ``D`` (ascending) and
        the full eigenbasis.

    Raises:
        NotAContraction: If ``I - P*P`` has an eigenvalue below ``-1e-8``.
    """
    P = np.asarray(P, dtype=np.complex128)
    d = P.shape[0]
    M = np.eye(d) - P.conj().T @ P
    w, U = linalg.eigh((M + M.conj().T) / 2)
    if w.size and w[0] < -CONTRACTION_SLACK:
        raise NotAContraction(f"I - P*P has eigenvalue {w[0]:.3e}")
    if w.size and w[0] < _CLAMP_FLOOR:
        logger.debug("clamping eigenvalue %.3e of I - P*P to zero", w[0])
    w = np.where(w <= _ROUNDING_FLOOR, 0.0, w)
    U = _normalize_phases(U)
    eigs = np.sqrt(w)
    D = (U * eigs) @ U.conj().T
    cutoff = rank_tol * max(1.0, float(eigs.max()) if eigs.size else 1.0)
    keep = eigs > cutoff
    frame = SubspaceBasis(U[:, keep], label="defect")
    return DefectData(D=D, frame=frame, eigs=eigs, basis=U)


def _solve_fundamental(
    pair: CommutingPair, rank_tol: float, tol: float
) -> tuple[FundamentalSolve | None, float]:
    """Entrywise solve in the defect eigenframe; returns the solve and the off-block mass."""
    dd = defect(pair.P, rank_tol)
    U = dd.basis
    target = pair.S - pair.S.conj().T @ pair.P
    R = U.conj().T @ target @ U
    keep = dd.eigs > rank_tol * max(1.0, float(dd.eigs.max()) if dd.eigs.size else 1.0)
    outside = ~np.outer(keep, keep)
    off_block = float(np.max(np.abs(R[outside]))) if outside.any() else 0.0
    if off_block > 4 * max(tol, rank_tol) * pair.scale:
        return None, off_block
    d_keep = dd.eigs[keep]
    A = R[np.ix_(keep, keep)] / np.outer(d_keep, d_keep)
    F = dd.frame.frame
    residual = op_norm(dd.D @ F @ A @ F.conj().T @ dd.D - target)
    omega = numerical_radius(A) if A.size else 0.0
    return FundamentalSolve(A=A, residual=residual, omega=omega, frame=dd.frame), off_block


def fundamental_operator(
    pair: CommutingPair, rank_tol: float = 1e-8, tol: float = 1e-9
) -> FundamentalSolve:
    """Solve ``S - S*P = D_P A D_P`` for ``A`` on the defect space of ``P``.

    With ``D_P = U diag(d) U*`` the equation decouples entrywise:
    ``A_ij = R_ij / (d_i d_j)`` where ``R = U*(S - S*P)U``. Entries of ``R``
    outside the defect block must vanish.

    Args:
        pair (CommutingPair): The pair ``(S, P)``.
        rank_tol (float): Relative cutoff for the defect frame.
        tol (float): Tolerance for the off-block entries, relative to the pair scale.

    Returns:
        FundamentalSolve: ``A`` in defect-frame coordinates, the residual and ``omega(A)``.

    Raises:
        NotAContraction: If ``P`` is not a contraction.
        RankDeficientInconsistent: If ``R`` has mass outside the defect block.
    """
    solve, off_block = _solve_fundamental(pair, rank_tol, tol)
    if solve is None:
        raise RankDeficientInconsistent(
            f"S - S*P has mass {off_block:.3e} outside the defect block"
        )
    logger.debug(
        "fundamental operator k=%d residual=%.2e omega=%.6f",
        solve.A.shape[0],
        solve.residual,
        solve.omega,
    )
    return solve


def lstsq_fundamental(pair: CommutingPair, rank_tol: float = 1e-8) -> Matrix:
    """Dense least-squares solve of the fundamental equation over all ``k**2`` unknowns.

    An independent oracle for :func:`fundamental_operator`, in the same frame.
    """
    dd = defect(pair.P, rank_tol)
    B = dd.D @ dd.frame.frame
    k = B.shape[1]
    target = pair.S - pair.S.conj().T @ pair.P
    system = np.kron(B.conj(), B)
    x, *_ = linalg.lstsq(system, target.reshape(-1, order="F"))
    return x.reshape(k, k, order="F")


def normal_fundamental_operator(pair: CommutingPair, tol: float = 1e-9) -> Matrix:
    """``D^-1 (S - S*P) D^-1`` for a normal pair with ``||P|| < 1``.

    Raises:
        NotNormal: If ``S`` or ``P`` is not normal.
        NotAContraction: If ``||P|| >= 1``.
    """
    for name, T in (("S", pair.S), ("P", pair.P)):
        if op_norm(T.conj().T @ T - T @ T.conj().T) > tol * pair.scale**2:
            raise NotNormal(f"{name} is not normal")
    if op_norm(pair.P) >= 1:
        raise NotAContraction("normal closed form needs ||P|| < 1")
    D_inv = linalg.inv(defect(pair.P).D)
    return D_inv @ (pair.S - pair.S.conj().T @ pair.P) @ D_inv


def adjoint_pair(pair: CommutingPair) -> CommutingPair:
    return CommutingPair(
        pair.S.conj().T, pair.P.conj().T, pair.commutator_norm, pair.role
    )


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


def certify_gamma_contraction(
    pair: CommutingPair, cfg: RunConfig | None = None
) -> Certificate:
    """Certify ``(S, P)`` as a Gamma-contraction through the fundamental equation.

    A commuting pair is a Gamma-contraction iff ``||S|| <= 2``, ``||P|| <= 1``
    and the fundamental equation has a solution with numerical radius at most 1.

    Args:
        pair (CommutingPair): The pair to certify.
        cfg (RunConfig | None): Tolerances; defaults to ``RunConfig()``.

    Returns:
        Certificate: Pass only when every check holds.
    """
    cfg = cfg or RunConfig()
    norm_s, norm_p = op_norm(pair.S), op_norm(pair.P)
    checks = [
        Check(
            name="commutator",
            value=pair.commutator_norm,
            threshold=cfg.tol * (1 + norm_s * norm_p),
        ),
        Check(name="norm_S", value=norm_s, threshold=2 + cfg.tol),
        Check(name="norm_P", value=norm_p, threshold=1 + cfg.tol),
    ]
    witnesses: dict[str, Any] = {}
    notes = ""
    if norm_p**2 <= 1 + CONTRACTION_SLACK:
        solve, off_block = _solve_fundamental(pair, cfg.rank_tol, cfg.tol)
        resid_tol = cfg.tol * pair.scale
        if solve is None:
            checks.append(Check(name="fundamental_residual", value=off_block, threshold=resid_tol))
            notes = "S - S*P is not supported on the defect space"
        else:
            checks.append(
                Check(name="fundamental_residual", value=solve.residual, threshold=resid_tol)
            )
            checks.append(Check(name="omega_A", value=solve.omega, threshold=1 + cfg.tol))
            witnesses["defectRank"] = solve.A.shape[0]
            witnesses["spectralRadiusA"] = spectral_radius(solve.A)
    else:
        notes = "P is not a contraction; fundamental equation skipped"
    cert = Certificate.from_checks(checks, notes=notes, witnesses=witnesses)
    logger.info("gamma-contraction certificate: %s", cert.verdict)
    return cert


def joint_diagonalize(
    pair: CommutingPair, seed: int = 0, retries: int = 5
) -> tuple[Matrix, np.ndarray, np.ndarray]:
    """Common orthonormal eigenbasis of a commuting normal pair.

    Diagonalizes ``S + mu P`` for random ``mu`` through the complex Schur form
    and accepts the basis once both ``Q* S Q`` and ``Q* P Q`` are diagonal.

    Args:
        pair (CommutingPair): Commuting normal pair.
        seed (int): Seed for the random combinations.
        retries (int): Number of combinations to try.

    Returns:
        tuple[Matrix, np.ndarray, np.ndarray]: ``Q`` and the diagonals of
        ``Q* S Q`` and ``Q* P Q``.

    Raises:
        JointDiagonalizationFailed: If no combination yields a common eigenbasis.
    """
    return _joint_schur(pair, seed, retries, diagonal=True)


def joint_eigenvalues(pair: CommutingPair, seed: int = 0, retries: int = 5) -> list[Point2]:
    """Joint eigenvalues ``(s_i, p_i)`` read from a simultaneous Schur triangularization.

    Raises:
        JointDiagonalizationFailed: If no combination triangularizes both operators.
    """
    _, s_vals, p_vals = _joint_schur(pair, seed, retries, diagonal=False)
    return [Point2(s, p) for s, p in zip(s_vals, p_vals)]


def _joint_schur(
    pair: CommutingPair, seed: int, retries: int, diagonal: bool
) -> tuple[Matrix, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    limit = _JOINT_DIAG_TOL * pair.scale
    if pair.dim == 0:
        empty = np.zeros(0, dtype=np.complex128)
        return np.zeros((0, 0), dtype=np.complex128), empty, empty
    for attempt in range(retries):
        mu = complex(rng.normal(), rng.normal())
        _, Q = linalg.schur(pair.S + mu * pair.P, output="complex")
        S_q = Q.conj().T @ pair.S @ Q
        P_q = Q.conj().T @ pair.P @ Q
        mask = ~np.eye(pair.dim, dtype=bool) if diagonal else np.tril(np.ones_like(S_q, dtype=bool), -1)
        worst = max(
            float(np.max(np.abs(S_q[mask]), initial=0.0)),
            float(np.max(np.abs(P_q[mask]), initial=0.0)),
        )
        if worst <= limit:
            return Q, np.diag(S_q).copy(), np.diag(P_q).copy()
        logger.debug("joint Schur attempt %d rejected (off-pattern %.2e)", attempt, worst)
    raise JointDiagonalizationFailed(
        f"no common {'eigenbasis' if diagonal else 'triangularization'} after {retries} tries"
    )


def certify_gamma_unitary(pair: CommutingPair, tol: float = 1e-9, seed: int = 0) -> Certificate:
    """Certify ``(S, P)`` as a Gamma-unitary.

    Both operators must be normal and commute, and every joint eigenvalue must
    lie on the distinguished boundary.

    Args:
        pair (CommutingPair): The pair to certify.
        tol (float): Tolerance relative to the pair scale.
        seed (int): Seed for the joint diagonalization.

    Returns:
        Certificate: Pass only when every check holds.

    Raises:
        JointDiagonalizationFailed: If normal commuting input cannot be diagonalized.
    """
    scale = pair.scale
    checks = [
        Check(
            name="normal_S",
            value=op_norm(pair.S.conj().T @ pair.S - pair.S @ pair.S.conj().T),
            threshold=tol * scale**2,
        ),
        Check(
            name="normal_P",
            value=op_norm(pair.P.conj().T @ pair.P - pair.P @ pair.P.conj().T),
            threshold=tol * scale**2,
        ),
        Check(name="commutator", value=pair.commutator_norm, threshold=tol * scale**2),
    ]
    if not all(c.passed for c in checks):
        return Certificate.from_checks(checks, notes="pair is not a commuting normal pair")
    _, s_vals, p_vals = joint_diagonalize(pair, seed=seed)
    points = [Point2(s, p) for s, p in zip(s_vals, p_vals)]
    worst = max((distinguished_boundary_defect(pt) for pt in points), default=0.0)
    checks.append(Check(name="joint_spectrum_in_bGamma", value=worst, threshold=tol * scale))
    cert = Certificate.from_checks(
        checks,
        witnesses={"jointEigenvalues": [pt.to_json() for pt in points]},
    )
    logger.info("gamma-unitary certificate: %s", cert.verdict)
    return cert


# ---------------------------------------------------------------------------
# Purity and the pure/unitary splitting
# ---------------------------------------------------------------------------


def is_pure(P: Matrix, tol: float = 1e-9) -> bool:
    """Whether ``P*^n -> 0``; in finite dimension this is ``r(P) < 1``.

    Raises:
        NotAContraction: If ``||P|| > 1 + 1e-8``.
    """
    if op_norm(P) > 1 + CONTRACTION_SLACK:
        raise NotAContraction(f"||P|| = {op_norm(P):.6f} exceeds 1")
    return spectral_radius(P) < 1 - tol


def split_pure_unitary(
    pair: CommutingPair,
    unit_tol: float = _SPLIT_UNIT_TOL,
    gap: float = _SPLIT_GAP,
) -> tuple[CommutingPair, CommutingPair, SubspaceBasis, SubspaceBasis]:
    """Split a Gamma-contraction into its pure part and its Gamma-unitary part.

    An ordered complex Schur form of ``P`` puts eigenvalues inside the disc
    first. For a Gamma-contraction the off-diagonal blocks of both ``S`` and
    ``P`` vanish in that basis, and this is verified.

    Args:
        pair (CommutingPair): A Gamma-contraction.
        unit_tol (float): Eigenvalues with ``|lambda| >= 1 - unit_tol`` are unitary.
        gap (float): Moduli in ``[1 - gap, 1 - unit_tol)`` are ill-conditioned.

    Returns:
        tuple[CommutingPair, CommutingPair, SubspaceBasis, SubspaceBasis]:
        The pure pair, the unitary pair, and their frames.

    Raises:
        NotAContraction: If ``||P|| > 1 + 1e-8``.
        SpectralGapTooSmall: If an eigenvalue of ``P`` lies in the gap band.
        GammaError: If the off-diagonal blocks do not vanish.
    """
    if op_norm(pair.P) > 1 + CONTRACTION_SLACK:
        raise NotAContraction(f"||P|| = {op_norm(pair.P):.6f} exceeds 1")
    moduli = np.abs(linalg.eigvals(pair.P)) if pair.dim else np.zeros(0)
    band = moduli[(moduli >= 1 - gap) & (moduli < 1 - unit_tol)]
    if band.size:
        raise SpectralGapTooSmall(f"eigenvalue modulus {band[0]:.12f} too close to 1")
    if pair.dim == 0:
        Q, k = np.zeros((0, 0), dtype=np.complex128), 0
    else:
        _, Q, k = linalg.schur(
            pair.P, output="complex", sort=lambda x: abs(x) < 1 - unit_tol
        )
    S_q = Q.conj().T @ pair.S @ Q
    P_q = Q.conj().T @ pair.P @ Q
    off = max(
        op_norm(S_q[:k, k:]),
        op_norm(S_q[k:, :k]),
        op_norm(P_q[:k, k:]),
        op_norm(P_q[k:, :k]),
    )
    if off > _JOINT_DIAG_TOL * pair.scale:
        raise GammaError(f"pure and unitary parts are coupled (off-diagonal {off:.3e})")
    pure = CommutingPair.of(S_q[:k, :k], P_q[:k, :k], ctol=1e-8, role=PairRole.GAMMA_CONTRACTION)
    unitary = CommutingPair.of(S_q[k:, k:], P_q[k:, k:], ctol=1e-8, role=PairRole.GAMMA_UNITARY)
    logger.debug("split pure/unitary: %d + %d", k, pair.dim - k)
    return (
        pure,
        unitary,
        SubspaceBasis(Q[:, :k], label="pure"),
        SubspaceBasis(Q[:, k:], label="unitary"),
    )


def unitary_conjugate(pair: CommutingPair, U: Matrix) -> CommutingPair:
    """Return ``(U* S U, U* P U)``.

    Raises:
        NotUnitary: If ``||U*U - I|| > 1e-10``.
    """
    U = np.asarray(U, dtype=np.complex128)
    if U.shape != pair.S.shape or op_norm(U.conj().T @ U - np.eye(U.shape[0])) > 1e-10:
        raise NotUnitary("conjugating matrix is not unitary of matching size")
    Uh = U.conj().T
    return CommutingPair.of(Uh @ pair.S @ U, Uh @ pair.P @ U, ctol=1e-8, role=pair.role)


# ---------------------------------------------------------------------------
# Annihilating polynomials
# ---------------------------------------------------------------------------


def _distinct_points(points: list[Point2], tol: float) -> list[Point2]:
    out: list[Point2] = []
    for pt in points:
        if all(abs(pt.s - q.s) + abs(pt.p - q.p) > tol for q in out):
            out.append(pt)
    return out


def annihilating_pencil(pair: CommutingPair, rank_tol: float = 1e-8) -> BiPoly:
    """A determinantal polynomial annihilating a Gamma-contraction.

    The pure part is annihilated by ``det(F* + z2 F - z1 I)`` where ``F`` is
    the fundamental operator of the adjoint of the pure part. Each joint
    eigenvalue of the unitary part contributes its point annihilator.

    Args:
        pair (CommutingPair): A Gamma-contraction.
        rank_tol (float): Relative cutoff for defect frames.

    Returns:
        BiPoly: Polynomial ``q`` with ``q(S, P) = 0``.
    """
    pure, unitary, _, _ = split_pure_unitary(pair)
    q = BiPoly.constant(1.0)
    if pure.dim:
        F = fundamental_operator(adjoint_pair(pure), rank_tol).A
        q = q * det_pencil(F, PencilOrder.ADJ_FIRST)
    if unitary.dim:
        _, s_vals, p_vals = joint_diagonalize(unitary)
        points = [Point2(s, p) for s, p in zip(s_vals, p_vals)]
        for pt in _distinct_points(points, 1e-7):
            q = q * point_annihilator(pt)
    logger.debug("annihilating pencil bidegree %s", q.deg)
    return q


def fundamental_witnesses(solve: FundamentalSolve) -> dict[str, Any]:
    """JSON-ready summary of a fundamental solve's spectrum."""
    eigs = linalg.eigvals(solve.A) if solve.A.size else np.zeros(0)
    return {
        "eigenvalues": [complex_pair(z) for z in eigs],
        "spectralRadius": spectral_radius(solve.A),
        "omega": solve.omega,
        "residual": solve.residual,
    }
