import numpy as np
import pytest
from pydantic import ValidationError

from gammakit.errors import CommutatorTooLarge, GammaError
from gammakit.models import (
    BiPolyPayload,
    Certificate,
    Check,
    CommutingPair,
    ComplexMatrix,
    FactorsFile,
    Fixture,
    PairFile,
    PairRole,
    Point2,
    PointClass,
    PointTag,
    PolyTag,
    PolyVerdict,
    RunConfig,
    SamplerConfig,
    Verdict,
    op_norm,
)


class TestPoint2:
    def test_json_shape(self) -> None:
        assert Point2(1 + 2j, -0.5).to_json() == [[1.0, 2.0], [-0.5, 0.0]]

    def test_from_json(self) -> None:
        assert Point2.from_json([[1.0, 2.0], [-0.5, 0.0]]) == Point2(1 + 2j, -0.5)

    def test_rejects_malformed_json(self) -> None:
        with pytest.raises(ValueError, match="Point2"):
            Point2.from_json([1.0, 2.0, 3.0])

    def test_rejects_nan(self) -> None:
        with pytest.raises(ValueError, match="finite"):
            Point2(float("nan"), 0)


class TestPointTag:
    @pytest.mark.parametrize(
        ("tag", "inside"),
        [
            (PointTag.INTERIOR_G2, True),
            (PointTag.DISTINGUISHED_BOUNDARY, True),
            (PointTag.OTHER_BOUNDARY, True),
            (PointTag.EXTERIOR_GAMMA, False),
            (PointTag.EXTERIOR_SYMMETRIZED_E2, False),
            (PointTag.EXTERIOR_OTHER, False),
        ],
    )
    def test_in_gamma(self, tag: PointTag, inside: bool) -> None:
        assert tag.in_gamma is inside

    def test_point_class_json(self) -> None:
        data = PointClass(tag=PointTag.OTHER_BOUNDARY, fiber=(0j, 1 + 0j), margin=1.0).to_json()
        assert data == {"tag": "OtherBoundary", "fiber": [[0.0, 0.0], [1.0, 0.0]], "margin": 1.0}


class TestCommutingPair:
    def test_accepts_commuting_pair(self) -> None:
        pair = CommutingPair.of(np.eye(2), np.diag([1, 2]))
        assert pair.dim == 2
        assert pair.commutator_norm == 0.0
        assert pair.role is PairRole.GENERIC

    def test_rejects_non_commuting_pair(self) -> None:
        S = np.array([[0, 1], [0, 0]])
        P = np.array([[0, 0], [1, 0]])
        with pytest.raises(CommutatorTooLarge):
            CommutingPair.of(S, P)

    def test_commutator_error_is_a_gamma_error(self) -> None:
        assert issubclass(CommutatorTooLarge, GammaError)
        assert issubclass(GammaError, ValueError)

    def test_rejects_shape_mismatch(self) -> None:
        with pytest.raises(ValueError, match="square"):
            CommutingPair.of(np.eye(2), np.eye(3))

    def test_rejects_nan(self) -> None:
        with pytest.raises(ValueError, match="NaN"):
            CommutingPair.of(np.array([[np.nan]]), np.eye(1))

    def test_scale(self) -> None:
        pair = CommutingPair.of(2 * np.eye(2), 0.5 * np.eye(2))
        assert pair.scale == pytest.approx(3.5)

    def test_with_role_keeps_matrices(self) -> None:
        pair = CommutingPair.of(np.eye(2), np.eye(2))
        tagged = pair.with_role(PairRole.GAMMA_UNITARY)
        assert tagged.role is PairRole.GAMMA_UNITARY
        assert tagged.S is pair.S

    def test_json_keys(self) -> None:
        data = CommutingPair.of(np.eye(1), np.eye(1)).to_json()
        assert set(data) == {"S", "P", "commutatorNorm", "role"}
        assert data["S"] == {"rows": 1, "cols": 1, "data": [(1.0, 0.0)]}

    def test_op_norm_of_empty_matrix(self) -> None:
        assert op_norm(np.zeros((0, 0))) == 0.0


class TestComplexMatrix:
    def test_round_trip_values(self) -> None:
        arr = np.array([[1 + 1j, 2], [3, 4 - 2j]])
        np.testing.assert_array_equal(ComplexMatrix.from_array(arr).to_array(), arr)

    def test_rejects_wrong_length(self) -> None:
        with pytest.raises(ValidationError, match="expected 4"):
            ComplexMatrix(rows=2, cols=2, data=[(1.0, 0.0)])

    def test_rejects_non_finite(self) -> None:
        with pytest.raises(ValidationError, match="finite"):
            ComplexMatrix(rows=1, cols=1, data=[(float("inf"), 0.0)])

    def test_pair_file_builds_pair(self) -> None:
        raw = {
            "S": ComplexMatrix.from_array(np.eye(2)).model_dump(),
            "P": ComplexMatrix.from_array(np.zeros((2, 2))).model_dump(),
        }
        pair = PairFile.model_validate(raw).to_pair(ctol=1e-9)
        assert pair.dim == 2


class TestWirePolynomials:
    def test_payload_checks_grid_shape(self) -> None:
        with pytest.raises(ValidationError, match="2x2"):
            BiPolyPayload(deg=(1, 1), coeffs=[[(1.0, 0.0)]])

    def test_payload_rejects_negative_degree(self) -> None:
        with pytest.raises(ValidationError, match="non-negative"):
            BiPolyPayload(deg=(-1, 0), coeffs=[])

    def test_factors_file_needs_a_factor(self) -> None:
        with pytest.raises(ValidationError):
            FactorsFile(factors=[])


class TestCertificate:
    def test_pass_when_all_checks_hold(self) -> None:
        cert = Certificate.from_checks([Check(name="a", value=0.5, threshold=1.0)])
        assert cert.verdict is Verdict.PASS
        assert cert.passed
        assert cert.failed_checks() == []

    def test_fail_names_the_failed_check(self) -> None:
        cert = Certificate.from_checks(
            [
                Check(name="a", value=0.5, threshold=1.0),
                Check(name="b", value=2.0, threshold=1.0),
            ]
        )
        assert cert.verdict is Verdict.FAIL
        assert cert.failed_checks() == ["b"]

    def test_inconclusive_only_downgrades_a_pass(self) -> None:
        ok = Check(name="a", value=0.0, threshold=1.0)
        bad = Check(name="b", value=2.0, threshold=1.0)
        assert Certificate.from_checks([ok], inconclusive=True).verdict is Verdict.INCONCLUSIVE
        assert Certificate.from_checks([bad], inconclusive=True).verdict is Verdict.FAIL

    def test_serializes_with_camel_case(self) -> None:
        cert = Certificate.from_checks([], witnesses={"spectralRadiusA": 0.5})
        data = cert.model_dump(by_alias=True, mode="json")
        assert data["verdict"] == "Pass"
        assert data["witnesses"] == {"spectralRadiusA": 0.5}


class TestPolyVerdict:
    def test_json_uses_camel_case(self) -> None:
        verdict = PolyVerdict(
            tag=PolyTag.NEITHER_EVIDENCE,
            samples_checked=64,
            worst_violation=None,
            interior_witness=None,
            gamma_distinguished=False,
            distinguished=False,
        )
        data = verdict.to_json()
        assert data["tag"] == "NeitherEvidence"
        assert data["samplesChecked"] == 64
        assert data["worstViolation"] is None
        assert data["gammaDistinguished"] is False


class TestRunConfig:
    def test_defaults(self) -> None:
        cfg = RunConfig()
        assert cfg.tol == 1e-9
        assert cfg.rank_tol == 1e-8
        assert cfg.samples == 512
        assert cfg.truncation == 6
        assert cfg.probe_degree == 2

    def test_serializes_with_camel_case(self) -> None:
        data = RunConfig().model_dump(by_alias=True)
        assert data["rankTol"] == 1e-8
        assert data["probeDegree"] == 2
        assert data["outputPath"] is None

    def test_accepts_camel_case_input(self) -> None:
        assert RunConfig.model_validate({"rankTol": 1e-6}).rank_tol == 1e-6

    def test_every_field_has_a_camel_case_alias(self) -> None:
        assert set(RunConfig().model_dump(by_alias=True)) == {
            "tol",
            "rankTol",
            "samples",
            "seed",
            "truncation",
            "probeDegree",
            "outputPath",
            "samplerTol",
        }

    def test_round_trips_through_aliases(self) -> None:
        cfg = RunConfig(seed=3, output_path="out.json", sampler_tol=1e-5)
        assert RunConfig.model_validate(cfg.model_dump(by_alias=True)) == cfg

    @pytest.mark.parametrize("field", ["tol", "rank_tol", "sampler_tol"])
    def test_rejects_non_positive_tolerance(self, field: str) -> None:
        with pytest.raises(ValidationError, match="positive"):
            RunConfig(**{field: 0.0})

    def test_rejects_too_few_samples(self) -> None:
        with pytest.raises(ValidationError, match="samples"):
            RunConfig(samples=8)

    def test_rejects_truncation_below_probe_degree(self) -> None:
        with pytest.raises(ValidationError, match="truncation"):
            RunConfig(truncation=2, probe_degree=2)

    def test_sampler_settings(self) -> None:
        sampler = RunConfig(samples=64, seed=3, sampler_tol=1e-5).sampler()
        assert sampler == SamplerConfig(samples=64, tol=1e-5, seed=3)


class TestFixture:
    def test_payload_keys_are_top_level(self) -> None:
        fx = Fixture(name="n", kind="poly", payload={"deg": [0, 0]}, expected={"tag": "x"})
        data = fx.to_json()
        assert data["deg"] == [0, 0]
        assert data["name"] == "n"
        assert data["expected"] == {"tag": "x"}
