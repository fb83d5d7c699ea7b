"""Point geometry of the symmetrized bidisc.

Every classification goes through the fiber of the symmetrization map
``pi(z1, z2) = (z1 + z2, z1 z2)``: a point ``(s, p)`` is the image of the two
roots of ``x**2 - s x + p``, and the moduli of those roots decide where the
point sits relative to G2, its closure Gamma, and the distinguished boundary.
"""

import cmath

from gammakit.models import Point2, PointClass, PointTag


def symmetrize(z1: complex, z2: complex) -> Point2:
    """Apply the symmetrization map.

    Args:
        z1 (complex): First coordinate.
        z2 (complex): Second coordinate.

    Returns:
        Point2: ``(z1 + z2, z1 * z2)``.
    """
    z1, z2 = complex(z1), complex(z2)
    return Point2(z1 + z2, z1 * z2)


def _root_key(z: complex) -> tuple[float, float]:
    return (abs(z), cmath.phase(z))


def fiber(pt: Point2) -> tuple[complex, complex]:
    """Invert the symmetrization map.

    The larger-magnitude root comes from the sign choice that avoids
    cancellation; the other is recovered as ``p / root``.

    Args:
        pt (Point2): The point to invert.

    Returns:
        tuple[complex, complex]: Both roots of ``x**2 - s x + p``, with
        multiplicity, ordered by (modulus, argument).
    """
    s, p = pt.s, pt.p
    disc = cmath.sqrt(s * s - 4 * p)
    plus, minus = s + disc, s - disc
    big = plus if abs(plus) >= abs(minus) else minus
    if big == 0:
        return (0j, 0j)
    first = big / 2
    second = p / first
    return tuple(sorted((first, second), key=_root_key))  # type: ignore[return-value]


def classify_point(pt: Point2, tol: float = 1e-9) -> PointClass:
    """Locate a point relative to G2, Gamma and the distinguished boundary.

    Boundary tags are tested before interior and exterior tags, so a fiber
    modulus inside the tolerance band around 1 always lands on the boundary.

    Args:
        pt (Point2): The point to classify.
        tol (float): Half-width of the band around modulus 1.

    Returns:
        PointClass: Tag, fiber and the largest distance of a fiber modulus to 1.

    Raises:
        ValueError: If ``tol`` is not positive.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    roots = fiber(pt)
    r1, r2 = sorted(abs(z) for z in roots)
    near1 = abs(r1 - 1) <= tol
    near2 = abs(r2 - 1) <= tol
    if near1 and near2:
        tag = PointTag.DISTINGUISHED_BOUNDARY
    elif near2 and r1 < 1 - tol:
        tag = PointTag.OTHER_BOUNDARY
    elif near1 and r2 > 1 + tol:
        tag = PointTag.EXTERIOR_GAMMA
    elif r2 < 1 - tol:
        tag = PointTag.INTERIOR_G2
    elif r1 > 1 + tol:
        tag = PointTag.EXTERIOR_SYMMETRIZED_E2
    else:
        tag = PointTag.EXTERIOR_OTHER
    margin = max(abs(r1 - 1), abs(r2 - 1))
    return PointClass(tag=tag, fiber=roots, margin=margin)


def is_in_gamma(pt: Point2, tol: float = 1e-9) -> bool:
    return classify_point(pt, tol).tag.in_gamma


def gamma_contraction_scalar(s: complex, p: complex, tol: float = 1e-9) -> bool:
    """Membership in Gamma through the coordinate inequalities.

    ``(s, p)`` lies in Gamma iff ``|s| <= 2``, ``|p| <= 1`` and
    ``|s - conj(s) p| <= 1 - |p|**2``. Independent of :func:`fiber`, so the
    two tests cross-check each other.

    Args:
        s (complex): First coordinate.
        p (complex): Second coordinate.
        tol (float): Slack added to each inequality.

    Returns:
        bool: Whether ``(s, p)`` satisfies all three inequalities.
    """
    s, p = complex(s), complex(p)
    return (
        abs(s) <= 2 + tol
        and abs(p) <= 1 + tol
        and abs(s - s.conjugate() * p) <= 1 - abs(p) ** 2 + tol
    )


def distinguished_boundary_defect(pt: Point2) -> float:
    """Distance-like measure of how far ``pt`` is from the distinguished boundary.

    Uses the root-free description ``|p| = 1``, ``|s| <= 2``, ``s = conj(s) p``,
    so it stays accurate on the diagonal fiber where :func:`fiber` loses half
    the digits. Zero exactly on the distinguished boundary.

    Args:
        pt (Point2): The point to measure.

    Returns:
        float: The largest violation of the three conditions.
    """
    s, p = pt.s, pt.p
    return max(
        abs(abs(p) - 1.0),
        abs(s - s.conjugate() * p),
        max(abs(s) - 2.0, 0.0),
    )
