"""Bivariate polynomials over the symmetrized coordinates.

A :class:`BiPoly` is a dense coefficient grid ``coeffs[i, j]`` multiplying
``z1**i * z2**j``. The module evaluates polynomials at points and on commuting
operator pairs, builds determinantal pencils, checks the inner-toral
coefficient symmetry, reduces to square-free form, and classifies zero sets
by sampling the boundary of Gamma.
"""

import logging
import math
from collections import Counter
from enum import StrEnum
from typing import Any, Self

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import linalg
from scipy.signal import convolve2d

from gammakit.errors import CommutatorTooLarge, DegenerateSlices, NumericalGCDUnstable
from gammakit.geometry import classify_point, symmetrize
from gammakit.models import (
    BiPolyPayload,
    Certificate,
    Check,
    CommutingPair,
    Matrix,
    Point2,
    PointClass,
    PointTag,
    PolyTag,
    PolyVerdict,
    SamplerConfig,
    complex_pair,
    op_norm,
)

logger = logging.getLogger(__name__)

ZERO_THRESHOLD = 1e-10
_ROOT_CLUSTER_RADIUS = 1e-3
_Z2_SLICE_RADII = (0.25, 0.5, 1.0, 2.0, 4.0)
_DEGENERATE_S_RADII = (0.5, 1.0, 2.5)


class PencilOrder(StrEnum):
    A_FIRST = "AFirst"  # det(A + z2 A* - z1 I)
    ADJ_FIRST = "AdjFirst"  # det(A* + z2 A - z1 I)


# ---------------------------------------------------------------------------
# BiPoly
# ---------------------------------------------------------------------------


class BiPoly:
    """Bivariate polynomial with a declared bidegree.

    The declared bidegree ``(n, m)`` is the grid shape minus one. Unless the
    polynomial is identically zero, the top row or the top column must hold a
    coefficient above the relative zero threshold.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Any) -> None:
        arr = np.array(coeffs, dtype=np.complex128)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValueError(f"coefficient grid must be a non-empty 2-D array, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        peak = float(np.max(np.abs(arr)))
        if peak > 0:
            cut = ZERO_THRESHOLD * peak
            if np.max(np.abs(arr[-1, :])) <= cut and np.max(np.abs(arr[:, -1])) <= cut:
                raise ValueError(
                    f"declared bidegree {tuple(s - 1 for s in arr.shape)} is not attained"
                )
        self.coeffs = arr

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> Self:
        return cls([[0.0]])

    @classmethod
    def constant(cls, c: complex) -> Self:
        return cls([[c]])

    @classmethod
    def monomial(cls, i: int, j: int, c: complex = 1.0) -> Self:
        grid = np.zeros((i + 1, j + 1), dtype=np.complex128)
        grid[i, j] = c
        return cls(grid)

    @classmethod
    def from_terms(cls, terms: dict[tuple[int, int], complex]) -> Self:
        """Build from ``{(i, j): coefficient}``, trimming to the attained bidegree.

        Args:
            terms (dict[tuple[int, int], complex]): Exponent pairs and coefficients.

        Returns:
            BiPoly: The polynomial.
        """
        if not terms:
            return cls.zero()
        n = max(i for i, _ in terms)
        m = max(j for _, j in terms)
        grid = np.zeros((n + 1, m + 1), dtype=np.complex128)
        for (i, j), c in terms.items():
            grid[i, j] += c
        return cls._trimmed_grid(grid)

    @classmethod
    def _trimmed_grid(cls, grid: Matrix) -> Self:
        peak = float(np.max(np.abs(grid))) if grid.size else 0.0
        if peak == 0:
            return cls.zero()
        mask = np.abs(grid) > ZERO_THRESHOLD * peak
        rows = np.nonzero(mask.any(axis=1))[0]
        cols = np.nonzero(mask.any(axis=0))[0]
        trimmed = np.where(mask, grid, 0)[: rows[-1] + 1, : cols[-1] + 1]
        return cls(trimmed)

    # -- properties ---------------------------------------------------------

    @property
    def deg(self) -> tuple[int, int]:
        n, m = self.coeffs.shape
        return (n - 1, m - 1)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    @property
    def total_degree(self) -> int:
        """Largest ``i + j`` with a non-negligible coefficient (0 for constants and zero)."""
        peak = float(np.max(np.abs(self.coeffs)))
        if peak == 0:
            return 0
        i, j = np.nonzero(np.abs(self.coeffs) > ZERO_THRESHOLD * peak)
        return int(np.max(i + j))

    # -- algebra ------------------------------------------------------------

    def trimmed(self) -> "BiPoly":
        return BiPoly._trimmed_grid(self.coeffs)

    def normalized(self) -> "BiPoly":
        """Scale so the largest-modulus coefficient (first in row-major order) equals 1."""
        flat = self.coeffs.reshape(-1)
        k = int(np.argmax(np.abs(flat)))
        if flat[k] == 0:
            return self
        return BiPoly(self.coeffs / flat[k])

    def _padded(self, shape: tuple[int, int]) -> Matrix:
        out = np.zeros(shape, dtype=np.complex128)
        n, m = self.coeffs.shape
        out[:n, :m] = self.coeffs
        return out

    def __add__(self, other: "BiPoly") -> "BiPoly":
        shape = (
            max(self.coeffs.shape[0], other.coeffs.shape[0]),
            max(self.coeffs.shape[1], other.coeffs.shape[1]),
        )
        return BiPoly._trimmed_grid(self._padded(shape) + other._padded(shape))

    def __neg__(self) -> "BiPoly":
        return BiPoly(-self.coeffs)

    def __sub__(self, other: "BiPoly") -> "BiPoly":
        return self + (-other)

    def __mul__(self, other: "BiPoly | complex") -> "BiPoly":
        if isinstance(other, BiPoly):
            return BiPoly._trimmed_grid(convolve2d(self.coeffs, other.coeffs))
        return BiPoly._trimmed_grid(self.coeffs * complex(other))

    __rmul__ = __mul__

    def partial(self, axis: int) -> "BiPoly":
        """Derivative with respect to ``z1`` (axis 0) or ``z2`` (axis 1)."""
        if axis not in (0, 1):
            raise ValueError(f"axis must be 0 or 1, got {axis}")
        if self.coeffs.shape[axis] == 1:
            return BiPoly.zero()
        return BiPoly._trimmed_grid(npoly.polyder(self.coeffs, axis=axis))

    def __call__(self, z1: complex, z2: complex) -> complex:
        return complex(npoly.polyval2d(complex(z1), complex(z2), self.coeffs))

    def allclose(self, other: "BiPoly", atol: float = 1e-10) -> bool:
        diff = self - other
        return bool(np.max(np.abs(diff.coeffs)) <= atol)

    def equal_up_to_scalar(self, other: "BiPoly", tol: float = 1e-8) -> bool:
        a = self.trimmed().normalized()
        b = other.trimmed().normalized()
        if a.coeffs.shape != b.coeffs.shape:
            return False
        return bool(np.max(np.abs(a.coeffs - b.coeffs)) <= tol)

    def __repr__(self) -> str:
        terms = [
            f"({c:.4g})*z1^{i}*z2^{j}"
            for (i, j), c in np.ndenumerate(self.coeffs)
            if c != 0
        ]
        return f"BiPoly(deg={self.deg}, {' + '.join(terms) or '0'})"

    # -- wire format --------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        return {
            "deg": list(self.deg),
            "coeffs": [[complex_pair(c) for c in row] for row in self.coeffs],
        }

    @classmethod
    def from_payload(cls, payload: BiPolyPayload) -> Self:
        grid = [[complex(re, im) for re, im in row] for row in payload.coeffs]
        return cls(grid)

    @classmethod
    def from_json(cls, raw: Any) -> Self:
        return cls.from_payload(BiPolyPayload.model_validate(raw))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def eval_scalar(p: BiPoly, pt: Point2) -> complex:
    """Evaluate ``p`` at the point ``(s, p)`` of the symmetrized coordinates."""
    return p(pt.s, pt.p)


def _powers(T: Matrix, k: int) -> list[Matrix]:
    out = [np.eye(T.shape[0], dtype=np.complex128)]
    for _ in range(k):
        out.append(out[-1] @ T)
    return out


def eval_pair(p: BiPoly, pair: CommutingPair, ctol: float = 1e-9) -> Matrix:
    """Evaluate ``p(S, P) = sum a_ij S^i P^j``.

    Args:
        p (BiPoly): The polynomial.
        pair (CommutingPair): The operator pair.
        ctol (float): Relative commutator tolerance.

    Returns:
        Matrix: The operator ``p(S, P)``.

    Raises:
        CommutatorTooLarge: If the pair does not commute within tolerance.
    """
    bound = ctol * (1.0 + op_norm(pair.S) * op_norm(pair.P))
    if pair.commutator_norm > bound:
        raise CommutatorTooLarge(
            f"commutator {pair.commutator_norm:.3e} exceeds {bound:.3e}"
        )
    n, m = p.deg
    s_pows = _powers(pair.S, n)
    p_pows = _powers(pair.P, m)
    out = np.zeros_like(pair.S)
    for i in range(n + 1):
        row = p.coeffs[i]
        if not np.any(row):
            continue
        inner = sum(row[j] * p_pows[j] for j in range(m + 1) if row[j] != 0)
        out = out + s_pows[i] @ inner
    return out


# ---------------------------------------------------------------------------
# Pencils
# ---------------------------------------------------------------------------


def det_affine_pencil(C0: Matrix, C1: Matrix) -> BiPoly:
    """Coefficients of ``det(C0 + z2 C1 - z1 I)``.

    The determinant is sampled on a tensor grid of ``(k + 1)``-th roots of
    unity, where both Vandermonde systems are discrete Fourier transforms and
    therefore perfectly conditioned.

    Args:
        C0 (Matrix): Constant term, ``k x k``.
        C1 (Matrix): Coefficient of ``z2``, same size.

    Returns:
        BiPoly: Polynomial of bidegree at most ``(k, k)``.

    Raises:
        ValueError: If the matrices are not square of equal size.
    """
    C0 = np.asarray(C0, dtype=np.complex128)
    C1 = np.asarray(C1, dtype=np.complex128)
    if C0.ndim != 2 or C0.shape[0] != C0.shape[1] or C0.shape != C1.shape:
        raise ValueError(f"pencil matrices must be square of equal size, got {C0.shape}, {C1.shape}")
    k = C0.shape[0]
    if k == 0:
        return BiPoly.constant(1.0)
    eye = np.eye(k)
    nodes = np.exp(2j * np.pi * np.arange(k + 1) / (k + 1))
    values = np.array(
        [[np.linalg.det(C0 + y * C1 - x * eye) for y in nodes] for x in nodes]
    )
    vander = np.vander(nodes, k + 1, increasing=True)
    coeffs = np.linalg.solve(vander, values)
    coeffs = np.linalg.solve(vander, coeffs.T).T
    peak = float(np.max(np.abs(coeffs)))
    coeffs[np.abs(coeffs) < ZERO_THRESHOLD * peak] = 0
    return BiPoly._trimmed_grid(coeffs)


def det_pencil(A: Matrix, order: PencilOrder = PencilOrder.A_FIRST) -> BiPoly:
    """Determinantal polynomial of ``A`` and its adjoint.

    Args:
        A (Matrix): Square ``k x k`` matrix.
        order (PencilOrder): ``AFirst`` for ``det(A + z2 A* - z1 I)``,
            ``AdjFirst`` for ``det(A* + z2 A - z1 I)``.

    Returns:
        BiPoly: Polynomial of bidegree at most ``(k, k)``.

    Raises:
        ValueError: If ``A`` is not square.
    """
    A = np.asarray(A, dtype=np.complex128)
    logger.debug("det_pencil shape=%s order=%s", A.shape, order)
    if order is PencilOrder.A_FIRST:
        return det_affine_pencil(A, A.conj().T)
    return det_affine_pencil(A.conj().T, A)


def point_annihilator(pt: Point2, tol: float = 1e-9) -> BiPoly:
    """Gamma-distinguished polynomial vanishing at a distinguished-boundary point.

    Off the diagonal fiber this is the scalar pencil
    ``s/2 + conj(s/2) z2 - z1``; on the diagonal (``|s| = 2``) it is
    ``z1**2 - 4 z2``.
    """
    if abs(pt.s) >= 2 - tol:
        return BiPoly.from_terms({(2, 0): 1.0, (0, 1): -4.0})
    half = pt.s / 2
    return BiPoly.from_terms({(0, 0): half, (0, 1): half.conjugate(), (1, 0): -1.0})


def symmetric_lift(q: BiPoly) -> BiPoly:
    """``z1 * q``; Gamma-distinguished whenever ``q`` is distinguished."""
    return BiPoly.monomial(1, 0) * q


# ---------------------------------------------------------------------------
# Composition with the symmetrization map
# ---------------------------------------------------------------------------


def compose_with_symmetrization(q: BiPoly) -> BiPoly:
    """Coefficients of ``q(z1 + z2, z1 z2)``.

    Each monomial ``s**i p**j`` expands exactly as
    ``sum_k C(i, k) z1**(k + j) z2**(i - k + j)``.

    Args:
        q (BiPoly): Polynomial in the symmetrized coordinates.

    Returns:
        BiPoly: The pulled-back polynomial, trimmed to its attained bidegree.
    """
    n, m = q.deg
    size = n + m + 1
    grid = np.zeros((size, size), dtype=np.complex128)
    for (i, j), c in np.ndenumerate(q.coeffs):
        if c == 0:
            continue
        for k in range(i + 1):
            grid[k + j, i - k + j] += c * math.comb(i, k)
    return BiPoly._trimmed_grid(grid)


def inner_toral_symmetry_check(p: BiPoly, tol: float = 1e-9) -> Certificate:
    """Test ``conj(alpha) * conj(a_ij) == a_(n-i)(m-j)`` for a unimodular ``alpha``.

    ``alpha`` is read off the largest coefficient and then verified on the
    whole grid of the declared bidegree.

    Args:
        p (BiPoly): Nonzero polynomial.
        tol (float): Relative tolerance.

    Returns:
        Certificate: Checks on the modulus of ``alpha`` and the worst deviation.

    Raises:
        ValueError: If ``p`` is identically zero.
    """
    if p.is_zero():
        raise ValueError("inner-toral check needs a nonzero polynomial")
    a = p.coeffs
    reflected = a[::-1, ::-1]
    scale = float(np.max(np.abs(a)))
    i, j = np.unravel_index(int(np.argmax(np.abs(a))), a.shape)
    if abs(reflected[i, j]) <= ZERO_THRESHOLD * scale:
        return Certificate.from_checks(
            [Check(name="reflected_peak", value=1.0, threshold=0.0)],
            notes="reflected coefficient of the largest term vanishes",
        )
    alpha = complex(np.conj(reflected[i, j]) / a[i, j])
    deviation = float(np.max(np.abs(np.conj(alpha) * np.conj(a) - reflected))) / scale
    checks = [
        Check(name="alpha_modulus", value=abs(abs(alpha) - 1.0), threshold=tol),
        Check(name="coefficient_symmetry", value=deviation, threshold=tol),
    ]
    return Certificate.from_checks(
        checks,
        notes=f"bidegree {p.deg}",
        witnesses={"alpha": complex_pair(alpha), "worstDeviation": deviation},
    )


# ---------------------------------------------------------------------------
# Zero-set sampling
# ---------------------------------------------------------------------------


def _trim_leading(c: np.ndarray, scale: float) -> np.ndarray:
    nz = np.nonzero(np.abs(c) > ZERO_THRESHOLD * scale)[0]
    if nz.size == 0:
        return c[:0]
    return c[: nz[-1] + 1]


def _cluster_roots(roots: np.ndarray) -> list[complex]:
    """Replace clusters of nearby roots by their mean."""
    clusters: list[list[complex]] = []
    for r in sorted(roots, key=lambda z: (z.real, z.imag)):
        for cl in clusters:
            if abs(np.mean(cl) - r) < _ROOT_CLUSTER_RADIUS:
                cl.append(complex(r))
                break
        else:
            clusters.append([complex(r)])
    return [complex(np.mean(cl)) for cl in clusters]


def _slice_roots(c: np.ndarray, scale: float) -> list[complex] | None:
    """Clustered roots of ``sum c[l] w**l``; ``None`` if the slice vanishes."""
    trimmed = _trim_leading(c, scale)
    if trimmed.size == 0:
        return None
    if trimmed.size == 1:
        return []
    return _cluster_roots(npoly.polyroots(trimmed))


class _Tally:
    """Order-independent aggregation of sampled violations."""

    def __init__(self) -> None:
        self.boundary = 0
        self.exterior = 0
        self.worst: tuple[Point2, PointClass] | None = None

    def record(self, pt: Point2, cls_: PointClass, boundary: bool) -> None:
        if boundary:
            self.boundary += 1
        else:
            self.exterior += 1
        if self.worst is None or cls_.margin > self.worst[1].margin:
            self.worst = (pt, cls_)


def _interior_witness(
    pulled: BiPoly, roots_on_circle: list[tuple[complex, complex]], cfg: SamplerConfig
) -> Point2 | None:
    """Search for a zero of ``p`` in G2 through slices ``z1 = u`` with ``|u| < 1``."""
    rng = np.random.default_rng(cfg.seed)
    scale = float(np.max(np.abs(pulled.coeffs)))
    candidates: list[complex] = []
    for u, _ in roots_on_circle[:16]:
        candidates.extend(rho * u for rho in (0.999, 0.9, 0.5, 0.0))
    radii = np.sqrt(rng.uniform(0, 0.999**2, size=64))
    angles = rng.uniform(0, 2 * np.pi, size=64)
    candidates.extend(radii * np.exp(1j * angles))
    for u in candidates:
        coeffs = pulled.coeffs.T @ (u ** np.arange(pulled.coeffs.shape[0]))
        roots = _slice_roots(coeffs, scale)
        ws = [0j] if roots is None else roots
        for w in ws:
            pt = symmetrize(u, w)
            if classify_point(pt, cfg.tol).tag is PointTag.INTERIOR_G2:
                return pt
    return None


def classify_poly(p: BiPoly, cfg: SamplerConfig | None = None) -> PolyVerdict:
    """Classify the zero set of ``p`` as Gamma-distinguished and/or distinguished.

    The boundary of Gamma is the image of ``T x closed disc``, so slices
    ``z1 = e^{i theta}`` of ``p(z1 + z2, z1 z2)`` see every zero on the
    boundary. A root ``w`` with ``|w| < 1`` is a zero on the boundary outside
    the distinguished boundary; ``|w| > 1`` is a zero outside Gamma but not in
    the symmetrized exterior. Slices of ``p`` at fixed second coordinate
    sample the mixed exterior. Verdicts are sampled evidence, not proofs.

    Args:
        p (BiPoly): Nonzero polynomial in the symmetrized coordinates.
        cfg (SamplerConfig | None): Grid size, tolerance and seed.

    Returns:
        PolyVerdict: The verdict with violation counts and witnesses.

    Raises:
        ValueError: If ``p`` is identically zero.
        DegenerateSlices: If every boundary slice vanishes identically.
    """
    cfg = cfg or SamplerConfig()
    if p.is_zero():
        raise ValueError("cannot classify the zero polynomial")
    if p.total_degree == 0:
        logger.info("classify_poly: constant polynomial, empty zero set")
        return PolyVerdict(
            tag=PolyTag.INCONCLUSIVE,
            samples_checked=0,
            worst_violation=None,
            interior_witness=None,
            gamma_distinguished=False,
            distinguished=False,
            notes="constant polynomial: the zero set is empty, nothing was sampled",
        )
    tol = cfg.tol
    pulled = compose_with_symmetrization(p)
    scale = float(np.max(np.abs(pulled.coeffs)))
    powers = np.arange(pulled.coeffs.shape[0])
    tally = _Tally()
    degenerate = 0
    circle_roots: list[tuple[complex, complex]] = []

    for theta in 2 * np.pi * np.arange(cfg.samples) / cfg.samples:
        u = complex(np.exp(1j * theta))
        roots = _slice_roots(pulled.coeffs.T @ (u**powers), scale)
        if roots is None:
            degenerate += 1
            pt = symmetrize(u, 0)
            tally.record(pt, classify_point(pt, tol), boundary=True)
            continue
        for w in roots:
            pt = symmetrize(u, w)
            cls_ = classify_point(pt, tol)
            if abs(w) < 1 - tol:
                tally.record(pt, cls_, boundary=True)
            elif abs(w) > 1 + tol:
                tally.record(pt, cls_, boundary=False)
            else:
                circle_roots.append((u, w))

    if degenerate == cfg.samples:
        raise DegenerateSlices("polynomial vanishes on every boundary slice")

    _scan_second_coordinate(p, cfg, tally)

    witness = _interior_witness(pulled, circle_roots, cfg)
    gamma_ok = tally.boundary == 0 and witness is not None
    dist_ok = tally.boundary == 0 and tally.exterior == 0
    if degenerate > 0.1 * cfg.samples:
        tag = PolyTag.INCONCLUSIVE
    elif gamma_ok:
        tag = PolyTag.GAMMA_DISTINGUISHED
    elif dist_ok:
        tag = PolyTag.DISTINGUISHED
    else:
        tag = PolyTag.NEITHER_EVIDENCE
    logger.info(
        "classify_poly deg=%s tag=%s boundary=%d exterior=%d degenerate=%d",
        p.deg,
        tag,
        tally.boundary,
        tally.exterior,
        degenerate,
    )
    return PolyVerdict(
        tag=tag,
        samples_checked=cfg.samples,
        worst_violation=tally.worst,
        interior_witness=witness,
        gamma_distinguished=gamma_ok,
        distinguished=dist_ok,
        boundary_violations=tally.boundary,
        exterior_violations=tally.exterior,
        degenerate_slices=degenerate,
    )


def _scan_second_coordinate(p: BiPoly, cfg: SamplerConfig, tally: _Tally) -> None:
    """Sample zeros on slices ``p = c`` and record any that leave the allowed set."""
    tol = cfg.tol
    n_phi = max(8, cfg.samples // 16)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    scale = float(np.max(np.abs(p.coeffs)))
    powers = np.arange(p.coeffs.shape[1])
    allowed = (
        PointTag.INTERIOR_G2,
        PointTag.DISTINGUISHED_BOUNDARY,
        PointTag.EXTERIOR_SYMMETRIZED_E2,
    )
    for radius in _Z2_SLICE_RADII:
        for phi in phis:
            c = radius * complex(np.exp(1j * phi))
            roots = _slice_roots(p.coeffs @ (c**powers), scale)
            if roots is None:
                roots = [rho * complex(np.exp(1j * a)) for rho in _DEGENERATE_S_RADII for a in phis]
            for s in roots:
                pt = Point2(s, c)
                cls_ = classify_point(pt, tol)
                if cls_.tag not in allowed:
                    tally.record(pt, cls_, boundary=cls_.tag is PointTag.OTHER_BOUNDARY)


# ---------------------------------------------------------------------------
# Square-free reduction
# ---------------------------------------------------------------------------


def _sylvester(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Sylvester matrix of two univariate polynomials (increasing coefficients)."""
    df, dg = f.size - 1, g.size - 1
    size = df + dg
    out = np.zeros((size, size), dtype=np.complex128)
    for r in range(dg):
        out[r, r : r + df + 1] = f[::-1]
    for r in range(df):
        out[dg + r, r : r + dg + 1] = g[::-1]
    return out


def _univariate_gcd_degree(f: np.ndarray, rank_tol: float) -> int:
    f = _trim_leading(f, float(np.max(np.abs(f))) if f.size else 0.0)
    if f.size <= 2:
        return 0
    df = npoly.polyder(f)
    syl = _sylvester(f / np.max(np.abs(f)), df / np.max(np.abs(df)))
    sv = linalg.svdvals(syl)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    return syl.shape[0] - rank


def _slice_gcd_degrees(p: BiPoly, axis: int, rank_tol: float, slices: int = 7) -> int:
    rng = np.random.default_rng(20_240_917 + axis)
    degrees = []
    for theta in rng.uniform(0, 2 * np.pi, size=slices):
        c = complex(np.exp(1j * theta))
        if axis == 0:
            f = p.coeffs @ (c ** np.arange(p.coeffs.shape[1]))
        else:
            f = p.coeffs.T @ (c ** np.arange(p.coeffs.shape[0]))
        degrees.append(_univariate_gcd_degree(f, rank_tol))
    mode, count = Counter(degrees).most_common(1)[0]
    if slices - count >= 3:
        raise NumericalGCDUnstable(f"slice GCD degrees disagree: {degrees}")
    logger.debug("slice gcd degrees axis=%d: %s", axis, degrees)
    return mode


def _conv_matrix(kernel: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Matrix of ``X -> convolve2d(X, kernel)`` on row-major ``X`` of the given shape."""
    cols = []
    for idx in range(shape[0] * shape[1]):
        basis = np.zeros(shape, dtype=np.complex128)
        basis.reshape(-1)[idx] = 1
        cols.append(convolve2d(basis, kernel).reshape(-1))
    return np.array(cols).T


def square_free(p: BiPoly, rank_tol: float = 1e-8) -> BiPoly:
    """Reduce ``p`` to its square-free part ``p / gcd(p, dp/dz1, dp/dz2)``.

    The bidegree of the result is read from univariate GCD degrees on random
    slices; the result ``r`` is then the null vector of the linear system
    ``r * p_z1 = p * h1``, ``r * p_z2 = p * h2``.

    Args:
        p (BiPoly): Nonzero polynomial.
        rank_tol (float): Relative singular-value cutoff for numerical ranks.

    Returns:
        BiPoly: The square-free part, normalized to a unit leading coefficient.

    Raises:
        ValueError: If ``p`` is identically zero.
        NumericalGCDUnstable: If the slice GCD degrees or the null space are unreliable.
    """
    if p.is_zero():
        raise ValueError("square_free needs a nonzero polynomial")
    p = p.trimmed().normalized()
    n, m = p.deg
    a = n - _slice_gcd_degrees(p, axis=0, rank_tol=rank_tol)
    b = m - _slice_gcd_degrees(p, axis=1, rank_tol=rank_tol)
    if a == 0 and b == 0:
        return BiPoly.constant(1.0)
    px = npoly.polyder(p.coeffs, axis=0)
    py = npoly.polyder(p.coeffs, axis=1)
    r_shape = (a + 1, b + 1)
    blocks: list[list[np.ndarray | None]] = []
    if a > 0:
        blocks.append([_conv_matrix(px, r_shape), -_conv_matrix(p.coeffs, (a, b + 1)), None])
    if b > 0:
        blocks.append([_conv_matrix(py, r_shape), None, -_conv_matrix(p.coeffs, (a + 1, b))])
    widths = [r_shape[0] * r_shape[1], a * (b + 1), (a + 1) * b]
    rows = []
    for block in blocks:
        height = next(x.shape[0] for x in block if x is not None)
        rows.append(
            np.hstack([x if x is not None else np.zeros((height, w)) for x, w in zip(block, widths)])
        )
    system = np.vstack(rows)
    _, sv, vh = linalg.svd(system)
    nullity = system.shape[1] - int(np.sum(sv > 1e-6 * sv[0]))
    if nullity == 0:
        raise NumericalGCDUnstable(
            f"no null vector for the square-free system (smallest singular value {sv[-1]:.2e})"
        )
    if nullity > 1:
        raise NumericalGCDUnstable(
            f"square-free system has a {nullity}-dimensional null space; "
            "the slice GCD degrees overestimate the bidegree"
        )
    r = vh[-1].conj()[: widths[0]].reshape(r_shape)
    return BiPoly._trimmed_grid(r).normalized()
