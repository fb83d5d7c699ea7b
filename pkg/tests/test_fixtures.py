import numpy as np
import pytest

from gammakit import fixtures as fx
from gammakit.bipoly import BiPoly, PencilOrder, classify_poly, det_pencil, eval_scalar
from gammakit.decomp import decompose_gamma_unitary
from gammakit.geometry import classify_point
from gammakit.models import ComplexMatrix, Point2
from gammakit.opcore import certify_gamma_contraction, fundamental_operator


class TestRegistry:
    def test_names_are_unique(self) -> None:
        names = [f.name for f in fx.all_fixtures()]
        assert len(names) == len(set(names))

    def test_order_is_stable(self) -> None:
        assert [f.name for f in fx.all_fixtures()] == [f.name for f in fx.all_fixtures()]

    def test_lookup(self) -> None:
        assert fx.fixture_by_name("poly-diagonal").kind == "poly"

    def test_unknown_name(self) -> None:
        with pytest.raises(KeyError, match="no fixture"):
            fx.fixture_by_name("nope")

    def test_json_keeps_payload_at_top_level(self) -> None:
        data = fx.fixture_by_name("pair-scaled-identity").to_json()
        assert {"S", "P", "name", "kind", "expected"} <= set(data)


class TestExpectations:
    @pytest.mark.parametrize(
        "fixture", [f for f in fx.all_fixtures() if f.kind == "point"], ids=lambda f: f.name
    )
    def test_point_tags(self, fixture) -> None:
        pt = Point2.from_json(fixture.payload["point"])
        assert str(classify_point(pt).tag) == fixture.expected["tag"]

    def test_diagonal_poly_tag(self) -> None:
        fixture = fx.fixture_by_name("poly-diagonal")
        verdict = classify_poly(BiPoly.from_json(fixture.payload))
        assert str(verdict.tag) == fixture.expected["tag"]

    def test_nilpotent_pencil(self) -> None:
        fixture = fx.fixture_by_name("matrix-nilpotent-pencil")
        A = ComplexMatrix.model_validate(fixture.payload["A"]).to_array()
        expected = BiPoly.from_json(fixture.expected["pencil"])
        assert det_pencil(A, PencilOrder.A_FIRST).allclose(expected, atol=1e-12)

    def test_scaled_identity_fundamental(self) -> None:
        expected = fx.fixture_by_name("pair-scaled-identity").expected["fundamental"]
        solve = fundamental_operator(fx.scaled_identity_pair())
        np.testing.assert_allclose(solve.A, expected * np.eye(3), atol=1e-10)

    @pytest.mark.parametrize("name", ["pair-unit-eigenvalue", "pair-truncated-shift"])
    def test_pairs_certify(self, name: str, cfg) -> None:
        fixture = fx.fixture_by_name(name)
        pair = {
            "pair-unit-eigenvalue": fx.unit_eigenvalue_pair,
            "pair-truncated-shift": fx.truncated_shift_pair,
        }[name]()
        assert str(certify_gamma_contraction(pair, cfg).verdict) == fixture.expected["certify"]

    @pytest.mark.parametrize(
        ("name", "build"),
        [
            ("decompose-two-factors", fx.two_factor_unitary),
            ("decompose-three-factors", fx.three_factor_unitary),
        ],
    )
    def test_decomposition_dims(self, name: str, build) -> None:
        fixture = fx.fixture_by_name(name)
        factors = [BiPoly.from_json(q) for q in fixture.payload["factors"]]
        result = decompose_gamma_unitary(build(), factors)
        assert [part.basis.dim for part in result.parts] == fixture.expected["partDims"]


class TestGenerators:
    @pytest.mark.parametrize("theta", [0.0, 0.9, -2.4])
    def test_blaschke_points_are_zeros(self, theta: float) -> None:
        assert abs(eval_scalar(fx.blaschke_line(), fx.blaschke_point(theta))) <= 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_random_pure_contraction_is_pure(self, seed: int) -> None:
        pair = fx.random_pure_gamma_contraction(4, seed)
        assert np.linalg.norm(pair.P, 2) < 1
