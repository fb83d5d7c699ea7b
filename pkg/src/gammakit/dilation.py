"""Minimal Gamma-isometric dilation and its finite truncations.

The minimal dilation lives on ``H (+) l2(D_P)`` and is never built in full.
Instead :func:`build_truncated_dilation` assembles ``(T_n, V_n)`` on
``H (+) D_P^n``; every ``(T_n, V_n)`` is the leading principal block of the
next one. Pure Gamma-isometry models ``(T_phi, T_z)`` with a linear symbol
are built as banded block-Toeplitz truncations, and annihilation is only
checked on vectors whose images cannot reach the truncation edge.
"""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from gammakit.bipoly import (
    BiPoly,
    classify_poly,
    det_affine_pencil,
    eval_pair,
    square_free,
)
from gammakit.errors import (
    BandUnsafe,
    GammaError,
    NotNormal,
    NumericalGCDUnstable,
    ResidualTooLarge,
    SpectrumTouchesCircle,
)
from gammakit.models import (
    Certificate,
    Check,
    CommutingPair,
    ComplexMatrix,
    Matrix,
    PairRole,
    RunConfig,
    complex_pair,
    op_norm,
)
from gammakit.opcore import (
    annihilating_pencil,
    certify_gamma_contraction,
    defect,
    fundamental_operator,
    spectral_radius,
)

logger = logging.getLogger(__name__)

_CLUSTER_GAP = 1e-7


def _lower_shift(n: int) -> np.ndarray:
    return np.eye(n, k=-1)


def coefficient_scale(p: BiPoly, pair: CommutingPair) -> float:
    """Upper bound for ``||p(S, P)||`` from the coefficients."""
    s_norm = max(1.0, op_norm(pair.S))
    p_norm = max(1.0, op_norm(pair.P))
    return max(
        1.0,
        float(
            sum(abs(c) * s_norm**i * p_norm**j for (i, j), c in np.ndenumerate(p.coeffs))
        ),
    )


# ---------------------------------------------------------------------------
# Hat pairs and truncated dilations
# ---------------------------------------------------------------------------


def build_hat_pair(A: Matrix, n: int) -> CommutingPair:
    """The pair ``(A_n, I_n)`` of ``n x n`` block matrices.

    ``A_n`` has ``A`` on the block diagonal and ``A*`` on the block
    subdiagonal; ``I_n`` is the block shift.

    Args:
        A (Matrix): Square ``k x k`` matrix.
        n (int): Number of blocks, at least 1.

    Returns:
        CommutingPair: ``(A_n, I_n)`` of size ``n k``.

    Raises:
        ValueError: If ``n < 1``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    A = np.asarray(A, dtype=np.complex128)
    k = A.shape[0]
    shift = _lower_shift(n)
    hat_a = np.kron(np.eye(n), A) + np.kron(shift, A.conj().T)
    hat_i = np.kron(shift, np.eye(k))
    return CommutingPair.of(hat_a, hat_i, ctol=1e-12, role=PairRole.GAMMA_CONTRACTION)


@dataclass(frozen=True, eq=False)
class TruncatedDilation:
    """``(T_n, V_n)`` on ``H (+) D_P^n``, of size ``d + n k``."""

    T: Matrix
    V: Matrix
    n: int
    base: CommutingPair
    A: Matrix
    frame_blocks: list[tuple[str, int, int]]
    validation: Certificate

    @property
    def pair(self) -> CommutingPair:
        return CommutingPair.of(self.T, self.V, ctol=1e-8, role=PairRole.GAMMA_CONTRACTION)

    @property
    def h_dim(self) -> int:
        return self.base.dim

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "base": self.base.to_json(),
            "A": ComplexMatrix.from_array(self.A).model_dump(),
            "T": ComplexMatrix.from_array(self.T).model_dump(),
            "V": ComplexMatrix.from_array(self.V).model_dump(),
            "frameBlocks": [
                {"label": label, "start": start, "stop": stop}
                for label, start, stop in self.frame_blocks
            ],
            "validation": self.validation.model_dump(by_alias=True, mode="json"),
        }


def _dilation_matrices(
    S: Matrix, P: Matrix, B0: Matrix, A: Matrix, n: int
) -> tuple[Matrix, Matrix]:
    """Assemble ``T_n`` and ``V_n`` from ``B0 = F* D_P`` and the fundamental operator."""
    d, k = S.shape[0], A.shape[0]
    size = d + n * k
    T = np.zeros((size, size), dtype=np.complex128)
    V = np.zeros((size, size), dtype=np.complex128)
    T[:d, :d] = S
    V[:d, :d] = P
    if k == 0:
        return T, V
    T[d : d + k, :d] = A.conj().T @ B0
    V[d : d + k, :d] = B0
    T[d:, d:] = np.kron(np.eye(n), A) + np.kron(_lower_shift(n), A.conj().T)
    V[d:, d:] = np.kron(_lower_shift(n), np.eye(k))
    return T, V


def _blocks(d: int, k: int, n: int) -> list[tuple[str, int, int]]:
    blocks = [("H", 0, d)]
    blocks.extend((f"D{j}", d + (j - 1) * k, d + j * k) for j in range(1, n + 1))
    return blocks


def build_truncated_dilation(
    pair: CommutingPair, n: int, cfg: RunConfig | None = None
) -> TruncatedDilation:
    """Truncation ``(T_n, V_n)`` of the minimal Gamma-isometric dilation.

    ``V_n(x) = (P x0, D_P x0, x1, ..., x_(n-1))`` and
    ``T_n(x) = (S x0, A* D_P x0 + A x1, A* x1 + A x2, ..., A* x_(n-1) + A x_n)``.
    The fundamental operator of ``(T_n, V_n)`` must be ``A`` in the last
    block, and ``D_(V_n)`` must be the projection onto the last block.

    Args:
        pair (CommutingPair): A Gamma-contraction.
        n (int): Truncation depth, at least 1.
        cfg (RunConfig | None): Tolerances.

    Returns:
        TruncatedDilation: The assembled and validated truncation.

    Raises:
        ValueError: If ``n < 1``.
        GammaError: If ``pair`` fails the Gamma-contraction certificate.
        ResidualTooLarge: If the closed forms of the fundamental operator or
            of ``D_(V_n)`` do not match.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cfg = cfg or RunConfig()
    cert = certify_gamma_contraction(pair, cfg)
    if not cert.passed:
        raise GammaError(
            f"pair is not a Gamma-contraction (failed: {', '.join(cert.failed_checks())})"
        )
    solve = fundamental_operator(pair, cfg.rank_tol, cfg.tol)
    dd = defect(pair.P, cfg.rank_tol)
    B0 = solve.frame.frame.conj().T @ dd.D
    T, V = _dilation_matrices(pair.S, pair.P, B0, solve.A, n)
    d, k = pair.dim, solve.A.shape[0]

    corner = np.zeros_like(T)
    corner[d + (n - 1) * k :, d + (n - 1) * k :] = solve.A
    big = CommutingPair.of(T, V, ctol=1e-8)
    big_solve = fundamental_operator(big, cfg.rank_tol, max(cfg.tol, 1e-9))
    corner_gap = op_norm(big_solve.lifted - corner)
    expected_defect = np.zeros_like(T)
    expected_defect[d + (n - 1) * k :, d + (n - 1) * k :] = np.eye(k)
    defect_gap = op_norm(defect(V, cfg.rank_tol).D - expected_defect)
    validation = Certificate.from_checks(
        [
            Check(name="commutator_TV", value=big.commutator_norm, threshold=1e-9 * big.scale),
            Check(name="fundamental_corner", value=corner_gap, threshold=1e-8),
            Check(name="defect_V_last_block", value=defect_gap, threshold=1e-10),
        ]
    )
    if not validation.passed:
        raise ResidualTooLarge(
            f"truncated dilation failed validation: {', '.join(validation.failed_checks())}"
        )
    logger.info("built truncated dilation n=%d size=%d", n, T.shape[0])
    return TruncatedDilation(
        T=T,
        V=V,
        n=n,
        base=pair,
        A=solve.A,
        frame_blocks=_blocks(d, k, n),
        validation=validation,
    )


def compress_to_h(M: Matrix, td: TruncatedDilation) -> Matrix:
    d = td.h_dim
    return M[:d, :d]


def verify_dilation_identity(
    td: TruncatedDilation, p: BiPoly, tol: float = 1e-9
) -> Certificate:
    """Compare ``P_H p(T_n, V_n)|_H`` with ``p(S, P)``.

    ``H`` is co-invariant for both ``T_n`` and ``V_n`` (they are block lower
    triangular), so the identity holds for every ``n``; the band argument
    alone guarantees it once ``n`` reaches the total degree of ``p``.

    Args:
        td (TruncatedDilation): The truncation.
        p (BiPoly): Polynomial to test.
        tol (float): Tolerance relative to a coefficient bound of ``p(T_n, V_n)``.

    Returns:
        Certificate: Pass when the measured deficiency is within tolerance.
    """
    big = td.pair
    lhs = compress_to_h(eval_pair(p, big, ctol=1e-8), td)
    rhs = eval_pair(p, td.base, ctol=1e-8)
    deficiency = op_norm(lhs - rhs)
    degree = p.total_degree
    return Certificate.from_checks(
        [
            Check(
                name="compression_identity",
                value=deficiency,
                threshold=tol * coefficient_scale(p, big),
            )
        ],
        notes=f"n={td.n}, total degree={degree}",
        witnesses={"deficiency": deficiency, "bandExact": td.n >= degree},
    )


# ---------------------------------------------------------------------------
# Toeplitz models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ToeplitzModel:
    """Truncation to degrees ``0..N`` of ``(T_phi, T_z)`` with ``phi(z) = C0 + C1 z``."""

    C0: Matrix
    C1: Matrix
    N: int
    T_phi: Matrix
    T_z: Matrix

    @property
    def block_size(self) -> int:
        return self.C0.shape[0]

    @property
    def pair(self) -> CommutingPair:
        return CommutingPair.of(
            self.T_phi, self.T_z, ctol=1e-10, role=PairRole.PURE_ISOMETRY_MODEL
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "C0": ComplexMatrix.from_array(self.C0).model_dump(),
            "C1": ComplexMatrix.from_array(self.C1).model_dump(),
        }


def build_toeplitz_model(C0: Matrix, C1: Matrix, N: int) -> ToeplitzModel:
    """Banded block-Toeplitz truncation of ``(T_phi, T_z)``.

    Raises:
        ValueError: If ``C0``, ``C1`` differ in shape or ``N < 1``.
    """
    C0 = np.asarray(C0, dtype=np.complex128)
    C1 = np.asarray(C1, dtype=np.complex128)
    if C0.shape != C1.shape or C0.ndim != 2 or C0.shape[0] != C0.shape[1]:
        raise ValueError(f"symbol coefficients must be square of equal size, got {C0.shape}, {C1.shape}")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    k = C0.shape[0]
    shift = _lower_shift(N + 1)
    T_phi = np.kron(np.eye(N + 1), C0) + np.kron(shift, C1)
    T_z = np.kron(shift, np.eye(k))
    return ToeplitzModel(C0=C0, C1=C1, N=N, T_phi=T_phi, T_z=T_z)


def de_model(A: Matrix, N: int) -> ToeplitzModel:
    """The ``(D, E)`` model ``(T_(A + A* z), T_z)`` built from a fundamental operator."""
    A = np.asarray(A, dtype=np.complex128)
    return build_toeplitz_model(A, A.conj().T, N)


def model_pencil(tm: ToeplitzModel) -> BiPoly:
    """``det(C0 + C1 z2 - z1 I)``, which annihilates the model."""
    return det_affine_pencil(tm.C0, tm.C1)


def verify_annihilation_banded(
    tm: ToeplitzModel, p: BiPoly, probe_degree: int, tol: float = 1e-9
) -> Certificate:
    """Check ``p(T_phi, T_z) x = 0`` for every basis vector of degree ``<= probe_degree``.

    With ``probe_degree + total_degree(p) <= N`` no image reaches the
    truncation edge, so the check is exact on the probed range.

    Args:
        tm (ToeplitzModel): The model.
        p (BiPoly): Candidate annihilator.
        probe_degree (int): Highest probed degree.
        tol (float): Tolerance relative to a coefficient bound.

    Returns:
        Certificate: Pass when every probed image vanishes.

    Raises:
        BandUnsafe: If the band-safety condition fails.
    """
    degree = p.total_degree
    if probe_degree < 0 or probe_degree + degree > tm.N:
        raise BandUnsafe(
            f"probe degree {probe_degree} + polynomial degree {degree} exceeds N={tm.N}"
        )
    pair = tm.pair
    M = eval_pair(p, pair, ctol=1e-10)
    cols = (probe_degree + 1) * tm.block_size
    worst = float(np.max(np.linalg.norm(M[:, :cols], axis=0), initial=0.0))
    return Certificate.from_checks(
        [Check(name="probed_images", value=worst, threshold=tol * coefficient_scale(p, pair))],
        notes=f"band-truncated: N={tm.N}, probe degree={probe_degree}",
        witnesses={"probedVectors": cols},
    )


# ---------------------------------------------------------------------------
# Convergence and annihilators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeRow:
    n: int
    vector: int
    t_gap: float
    v_gap: float


def convergence_probe(
    pair: CommutingPair,
    n_list: list[int],
    test_vectors: list[Any],
    cfg: RunConfig | None = None,
) -> list[ProbeRow]:
    """Distances ``||T_n' x - T_n x||`` and ``||V_n' x - V_n x||`` for ``n' = max(n_list)``.

    ``T_n x`` means ``T_n`` applied to the part of ``x`` in ``H (+) D_P^n``,
    padded with zeros. Vectors are given in the coordinates of
    ``H (+) D_P^n'`` and may be shorter (zero-padded).

    Args:
        pair (CommutingPair): A Gamma-contraction.
        n_list (list[int]): Truncation depths, each at least 1.
        test_vectors (list[Any]): Finitely supported vectors.
        cfg (RunConfig | None): Tolerances.

    Returns:
        list[ProbeRow]: One row per (n, vector).
    """
    if not n_list:
        return []
    top = max(n_list)
    td = build_truncated_dilation(pair, top, cfg)
    size = td.T.shape[0]
    k = td.A.shape[0]
    rows = []
    for idx, raw in enumerate(test_vectors):
        x = np.zeros(size, dtype=np.complex128)
        vec = np.asarray(raw, dtype=np.complex128).reshape(-1)
        if vec.size > size:
            raise ValueError(f"test vector {idx} has {vec.size} entries, space has {size}")
        x[: vec.size] = vec
        full_t, full_v = td.T @ x, td.V @ x
        for n in n_list:
            m = pair.dim + n * k
            t_n = np.zeros(size, dtype=np.complex128)
            v_n = np.zeros(size, dtype=np.complex128)
            t_n[:m] = td.T[:m, :m] @ x[:m]
            v_n[:m] = td.V[:m, :m] @ x[:m]
            rows.append(
                ProbeRow(
                    n=n,
                    vector=idx,
                    t_gap=float(np.linalg.norm(full_t - t_n)),
                    v_gap=float(np.linalg.norm(full_v - v_n)),
                )
            )
    return rows


def _cluster_eigenvalues(eigs: np.ndarray, gap: float) -> list[complex]:
    reps: list[complex] = []
    for z in eigs:
        if all(abs(z - r) > gap for r in reps):
            reps.append(complex(z))
    return reps


def normal_annihilator(A: Matrix, tol: float = 1e-9) -> BiPoly:
    """Annihilator ``prod_j (lambda_j + conj(lambda_j) z2 - z1)`` of the ``(D, E)`` model.

    ``lambda_j`` runs over the distinct eigenvalues of the normal matrix ``A``.

    Args:
        A (Matrix): Normal matrix with spectral radius below 1.
        tol (float): Normality and spectral-margin tolerance.

    Returns:
        BiPoly: The product of distinct linear pencils.

    Raises:
        NotNormal: If ``||A*A - AA*|| > tol``.
        SpectrumTouchesCircle: If ``r(A) >= 1 - tol``.
    """
    A = np.asarray(A, dtype=np.complex128)
    if op_norm(A.conj().T @ A - A @ A.conj().T) > tol * max(1.0, op_norm(A) ** 2):
        raise NotNormal("fundamental operator is not normal")
    if spectral_radius(A) >= 1 - tol:
        raise SpectrumTouchesCircle(f"spectral radius {spectral_radius(A):.12f} is not below 1")
    f = BiPoly.constant(1.0)
    for lam in _cluster_eigenvalues(np.linalg.eigvals(A), max(tol, _CLUSTER_GAP)):
        f = f * BiPoly.from_terms({(0, 0): lam, (0, 1): lam.conjugate(), (1, 0): -1.0})
    return f


def _reduced_annihilator(pair: CommutingPair, cfg: RunConfig) -> tuple[BiPoly, float]:
    """Annihilating pencil, reduced to square-free form when that stays an annihilator."""
    q = annihilating_pencil(pair, cfg.rank_tol)
    residual = op_norm(eval_pair(q, pair, ctol=1e-8))
    try:
        reduced = square_free(q, cfg.rank_tol)
    except NumericalGCDUnstable:
        logger.debug("square-free reduction unstable, keeping the full pencil")
        return q, residual
    reduced_residual = op_norm(eval_pair(reduced, pair, ctol=1e-8))
    if reduced_residual <= 1e-7 * coefficient_scale(reduced, pair):
        return reduced, reduced_residual
    return q, residual


def classify_minimal_dilation(
    pair: CommutingPair,
    cfg: RunConfig | None = None,
    annihilator: BiPoly | None = None,
) -> Certificate:
    """Decide whether the minimal Gamma-isometric dilation is Gamma-distinguished.

    The dilation is Gamma-distinguished exactly when ``r(A) < 1``. On the
    positive side the certificate also confirms a Gamma-distinguished
    annihilator of ``(S, P)``, either supplied or derived from the
    annihilating pencil.

    Args:
        pair (CommutingPair): A Gamma-contraction.
        cfg (RunConfig | None): Tolerances and sampler settings.
        annihilator (BiPoly | None): Optional user-supplied annihilator.

    Returns:
        Certificate: Pass for a Gamma-distinguished dilation, Fail with the
        offending eigenvalue of ``A`` otherwise.
    """
    cfg = cfg or RunConfig()
    contraction = certify_gamma_contraction(pair, cfg)
    if not contraction.passed:
        return Certificate.from_checks(
            contraction.checks, notes="pair is not a Gamma-contraction"
        )
    solve = fundamental_operator(pair, cfg.rank_tol, cfg.tol)
    eigs = np.linalg.eigvals(solve.A) if solve.A.size else np.zeros(0, dtype=np.complex128)
    radius = float(np.max(np.abs(eigs), initial=0.0))
    checks = [Check(name="spectral_radius_A", value=radius, threshold=1 - cfg.tol)]
    witnesses: dict[str, Any] = {"spectralRadiusA": radius}
    notes = "matrix-scale analogue: infinite-dimensional obstructions are not reproduced"
    if radius >= 1 - cfg.tol:
        witness = eigs[int(np.argmax(np.abs(eigs)))]
        witnesses["witnessEigenvalue"] = complex_pair(witness)
        logger.info("minimal dilation not distinguished: eigenvalue %s of A", witness)
        return Certificate.from_checks(
            checks, notes="sigma(A) meets the unit circle", witnesses=witnesses
        )

    if annihilator is None:
        q, residual = _reduced_annihilator(pair, cfg)
    else:
        q = annihilator
        residual = op_norm(eval_pair(q, pair, ctol=1e-8))
    verdict = classify_poly(q, cfg.sampler())
    checks.append(
        Check(
            name="annihilator_residual",
            value=residual,
            threshold=1e-7 * coefficient_scale(q, pair),
        )
    )
    checks.append(
        Check(
            name="annihilator_gamma_distinguished",
            value=0.0 if verdict.gamma_distinguished else 1.0,
            threshold=0.0,
        )
    )
    witnesses["annihilator"] = q.to_json()
    witnesses["annihilatorVerdict"] = str(verdict.tag)
    return Certificate.from_checks(checks, notes=notes, witnesses=witnesses)


def truncation_sequence_check(
    pair: CommutingPair,
    p: BiPoly,
    n_range: range,
    cfg: RunConfig | None = None,
) -> Certificate:
    """Report, for each ``n`` in a user-chosen range, whether ``p`` annihilates ``(T_n, V_n)``.

    Uniformity over all ``n`` is not decidable numerically; the certificate
    covers exactly the requested range.
    """
    cfg = cfg or RunConfig()
    checks = []
    for n in n_range:
        td = build_truncated_dilation(pair, n, cfg)
        big = td.pair
        value = op_norm(eval_pair(p, big, ctol=1e-8))
        checks.append(
            Check(
                name=f"annihilates_T{n}",
                value=value,
                threshold=1e-9 * coefficient_scale(p, big),
            )
        )
    return Certificate.from_checks(
        checks, notes=f"checked n in [{n_range.start}, {n_range.stop - 1}] only"
    )
