"""Named inputs with known answers, shared by the test suite and ``gammakit fixtures``."""

import numpy as np

from gammakit.bipoly import BiPoly
from gammakit.decomp import random_gamma_unitary
from gammakit.geometry import symmetrize
from gammakit.models import CommutingPair, ComplexMatrix, Fixture, Point2

BLASCHKE_PARAMETER = 0.8
SCALED_IDENTITY_RADIUS = 0.5


def pair_payload(pair: CommutingPair) -> dict:
    return {
        "S": ComplexMatrix.from_array(pair.S).model_dump(),
        "P": ComplexMatrix.from_array(pair.P).model_dump(),
    }


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


def diagonal_poly() -> BiPoly:
    """``4 z2 - z1**2``; its zero set is the image of the diagonal."""
    return BiPoly.from_terms({(0, 1): 4.0, (2, 0): -1.0})


def blaschke_line(a: float = BLASCHKE_PARAMETER) -> BiPoly:
    """``z1 - a z2 - a``; zeros ``pi(lam, (a - lam) / (1 - a lam))``."""
    return BiPoly.from_terms({(1, 0): 1.0, (0, 1): -a, (0, 0): -a})


def reflected_blaschke_line(a: float = BLASCHKE_PARAMETER) -> BiPoly:
    """``z1 + a z2 + a``, the line of :func:`blaschke_line` with ``-a``."""
    return BiPoly.from_terms({(1, 0): 1.0, (0, 1): a, (0, 0): a})


def boundary_product_poly() -> BiPoly:
    """``z1 (z2 - 1)``: inside Gamma but leaking off the distinguished boundary."""
    return BiPoly.from_terms({(1, 1): 1.0, (1, 0): -1.0})


def second_coordinate_poly() -> BiPoly:
    return BiPoly.monomial(0, 1)


# ---------------------------------------------------------------------------
# Points on factor zero sets
# ---------------------------------------------------------------------------


def diagonal_point(theta: float) -> Point2:
    z = np.exp(1j * theta)
    return symmetrize(z, z)


def blaschke_point(theta: float, a: float = BLASCHKE_PARAMETER) -> Point2:
    """Distinguished-boundary zero of ``z1 - a z2 - a`` over ``lam = e^{i theta}``."""
    lam = np.exp(1j * theta)
    return symmetrize(lam, (a - lam) / (1 - a * lam))


# ---------------------------------------------------------------------------
# Pairs
# ---------------------------------------------------------------------------


def unit_eigenvalue_pair() -> CommutingPair:
    """``(A, 0)`` with ``A`` nilpotent on two coordinates and ``1`` on the third."""
    A = np.array([[0, 2, 0], [0, 0, 0], [0, 0, 1]], dtype=np.complex128)
    return CommutingPair.of(A, np.zeros((3, 3)))


def scaled_identity_pair(r: float = SCALED_IDENTITY_RADIUS, dim: int = 3) -> CommutingPair:
    """``(2r I, r**2 I)``, the image of the scalar pair ``(r, r)``."""
    eye = np.eye(dim, dtype=np.complex128)
    return CommutingPair.of(2 * r * eye, r * r * eye)


def nilpotent_pencil_matrix(c: complex = 0.7) -> np.ndarray:
    """``[[0, 0], [c, 0]]``; its A-first pencil is ``z1**2 - |c|**2 z2``."""
    return np.array([[0, 0], [c, 0]], dtype=np.complex128)


def truncated_shift_pair(d: int = 4, r: float = SCALED_IDENTITY_RADIUS) -> CommutingPair:
    """``(2r W, r**2 W**2)`` with ``W`` the ``d x d`` nilpotent shift."""
    W = np.eye(d, k=-1, dtype=np.complex128)
    return CommutingPair.of(2 * r * W, r * r * W @ W)


def random_pure_gamma_contraction(dim: int, seed: int) -> CommutingPair:
    """``pi(T1, T2)`` for commuting contractions ``T1``, ``T2 = a T1 + b T1**2``.

    With ``||T1|| = 0.5``, ``|a| = 0.6`` and ``|b| = 0.4`` we get ``||T2|| <= 0.4``,
    so ``||T1 T2|| < 1`` and the image is pure.
    """
    rng = np.random.default_rng(seed)
    T1 = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    T1 *= 0.5 / np.linalg.norm(T1, 2)
    a = 0.6 * np.exp(2j * np.pi * rng.uniform())
    b = 0.4 * np.exp(2j * np.pi * rng.uniform())
    T2 = a * T1 + b * T1 @ T1
    return CommutingPair.of(T1 + T2, T1 @ T2, ctol=1e-10)


def two_factor_unitary(seed: int = 7) -> CommutingPair:
    """Gamma-unitary with joint spectrum split between the diagonal and a Blaschke line."""
    return random_gamma_unitary(
        [
            (diagonal_point(0.3), 2),
            (diagonal_point(2.1), 1),
            (blaschke_point(0.9), 1),
            (blaschke_point(-2.4), 2),
        ],
        seed=seed,
    )


def three_factor_unitary(seed: int = 11) -> CommutingPair:
    """Joint spectrum on three factor zero sets, away from their common points."""
    return random_gamma_unitary(
        [
            (diagonal_point(1.2), 1),
            (blaschke_point(0.7), 2),
            (blaschke_point(2.6, -BLASCHKE_PARAMETER), 1),
            (blaschke_point(-1.9, -BLASCHKE_PARAMETER), 1),
        ],
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def _point_fixtures() -> list[Fixture]:
    cases = [
        ("point-origin", Point2(0, 0), "InteriorG2"),
        ("point-distinguished", Point2(2, 1), "DistinguishedBoundary"),
        ("point-other-boundary", Point2(1, 0), "OtherBoundary"),
        ("point-exterior-gamma", Point2(3, 2), "ExteriorGamma"),
        ("point-exterior-e2", Point2(0, 4), "ExteriorSymmetrizedE2"),
        ("point-exterior-other", Point2(2.5, 1), "ExteriorOther"),
    ]
    return [
        Fixture(name=name, kind="point", payload={"point": pt.to_json()}, expected={"tag": tag})
        for name, pt, tag in cases
    ]


def all_fixtures() -> list[Fixture]:
    """Every named fixture, in a stable order."""
    r = SCALED_IDENTITY_RADIUS
    a = 2 * r / (1 + r * r)
    two = two_factor_unitary()
    three = three_factor_unitary()
    return [
        *_point_fixtures(),
        Fixture(
            name="poly-diagonal",
            kind="poly",
            payload=diagonal_poly().to_json(),
            description="4 z2 - z1^2",
            expected={"tag": "GammaDistinguished"},
        ),
        Fixture(
            name="poly-boundary-product",
            kind="poly",
            payload=boundary_product_poly().to_json(),
            description="z1 (z2 - 1)",
            expected={"gammaDistinguished": True, "distinguished": False},
        ),
        Fixture(
            name="poly-second-coordinate",
            kind="poly",
            payload=second_coordinate_poly().to_json(),
            description="z2",
            expected={"tag": "NeitherEvidence"},
        ),
        Fixture(
            name="pair-unit-eigenvalue",
            kind="pair",
            payload=pair_payload(unit_eigenvalue_pair()),
            description="(A, 0) with sigma(A) = {0, 1}",
            expected={"certify": "Pass", "omega": 1.0, "dilation": "Fail"},
        ),
        Fixture(
            name="pair-scaled-identity",
            kind="pair",
            payload=pair_payload(scaled_identity_pair()),
            description=f"(2r I, r^2 I) with r = {r}",
            expected={"certify": "Pass", "fundamental": a, "dilation": "Pass"},
        ),
        Fixture(
            name="pair-truncated-shift",
            kind="pair",
            payload=pair_payload(truncated_shift_pair()),
            description=f"(2r W, r^2 W^2) with r = {r} and W the 4x4 nilpotent shift",
            expected={"certify": "Pass"},
        ),
        Fixture(
            name="matrix-nilpotent-pencil",
            kind="matrix",
            payload={
                "A": ComplexMatrix.from_array(nilpotent_pencil_matrix()).model_dump(),
                "order": "AFirst",
            },
            description="[[0, 0], [c, 0]] with c = 0.7",
            expected={"pencil": BiPoly.from_terms({(2, 0): 1.0, (0, 1): -0.49}).to_json()},
        ),
        Fixture(
            name="decompose-two-factors",
            kind="decomposition",
            payload={
                **pair_payload(two),
                "factors": [diagonal_poly().to_json(), blaschke_line().to_json()],
            },
            expected={"partDims": [3, 3]},
        ),
        Fixture(
            name="decompose-three-factors",
            kind="decomposition",
            payload={
                **pair_payload(three),
                "factors": [
                    diagonal_poly().to_json(),
                    blaschke_line().to_json(),
                    reflected_blaschke_line().to_json(),
                ],
            },
            expected={"partDims": [1, 2, 2]},
        ),
    ]


def fixture_by_name(name: str) -> Fixture:
    """Look up a fixture.

    Raises:
        KeyError: If no fixture has that name.
    """
    for fx in all_fixtures():
        if fx.name == name:
            return fx
    raise KeyError(f"no fixture named {name!r}")
