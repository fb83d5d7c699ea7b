import io
import json
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from pydantic import ValidationError

from gammakit import fixtures as fx
from gammakit import reports
from gammakit.errors import CommutatorTooLarge
from gammakit.models import ComplexMatrix, RunConfig


class TestReadJson:
    def test_reads_file(self, write_json) -> None:
        path = write_json("value.json", {"a": [1, 2]})
        assert reports.read_json(path) == {"a": [1, 2]}

    def test_reads_stdin(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setattr("sys.stdin", io.StringIO('{"deg": [0, 0]}'))
        assert reports.read_json("-") == {"deg": [0, 0]}

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(FileNotFoundError):
            reports.read_json(tmp_path / "absent.json")

    def test_malformed_json_is_a_value_error(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValueError):
            reports.read_json(path)


class TestLoaders:
    def test_load_pair(self, write_json) -> None:
        path = write_json("pair.json", fx.pair_payload(fx.scaled_identity_pair()))
        pair = reports.load_pair(path)
        np.testing.assert_allclose(pair.S, np.eye(3))
        np.testing.assert_allclose(pair.P, 0.25 * np.eye(3))

    def test_load_pair_rejects_non_commuting(self, write_json) -> None:
        S = np.array([[0, 1], [0, 0]])
        payload = {
            "S": ComplexMatrix.from_array(S).model_dump(),
            "P": ComplexMatrix.from_array(S.T).model_dump(),
        }
        with pytest.raises(CommutatorTooLarge):
            reports.load_pair(write_json("pair.json", payload))

    def test_load_pair_from_fixture_file(self, write_json) -> None:
        path = write_json("fx.json", fx.fixture_by_name("pair-unit-eigenvalue").to_json())
        assert reports.load_pair(path).dim == 3

    def test_load_poly(self, write_json) -> None:
        path = write_json("poly.json", fx.diagonal_poly().to_json())
        assert reports.load_poly(path).allclose(fx.diagonal_poly())

    def test_load_factors(self, write_json) -> None:
        factors = [fx.diagonal_poly(), fx.blaschke_line()]
        path = write_json("factors.json", {"factors": [q.to_json() for q in factors]})
        loaded = reports.load_factors(path)
        assert len(loaded) == 2
        assert loaded[1].allclose(fx.blaschke_line())

    def test_load_factors_rejects_empty_list(self, write_json) -> None:
        with pytest.raises(ValidationError):
            reports.load_factors(write_json("factors.json", {"factors": []}))


class TestPayload:
    def test_config_is_camel_case(self) -> None:
        payload = reports.build_payload(RunConfig(seed=5), {"ok": True})
        assert payload["config"]["seed"] == 5
        assert payload["config"]["rankTol"] == 1e-8
        assert payload["result"] == {"ok": True}

    def test_dumps_sorts_keys(self) -> None:
        text = reports.dumps({"b": 1, "a": 2})
        assert text.index('"a"') < text.index('"b"')


class TestWriteReport:
    def test_writes_and_creates_parents(self, tmp_path: Path) -> None:
        target = tmp_path / "nested" / "deeper" / "report.json"
        returned = reports.write_report({"x": 1}, target)
        assert returned == target
        assert json.loads(target.read_text()) == {"x": 1}
        assert list(target.parent.glob("*.tmp")) == []

    def test_overwrites_existing_report(self, tmp_path: Path) -> None:
        target = tmp_path / "report.json"
        reports.write_report({"x": 1}, target)
        reports.write_report({"x": 2}, target)
        assert json.loads(target.read_text()) == {"x": 2}

    def test_cleans_up_temp_file_on_failure(self, tmp_path: Path) -> None:
        target = tmp_path / "report.json"
        with patch("gammakit.reports.os.replace", side_effect=OSError("disk full")):
            with pytest.raises(OSError, match="disk full"):
                reports.write_report({"x": 1}, target)
        assert not target.exists()
        assert list(tmp_path.glob("*.tmp")) == []

    def test_same_payload_same_bytes(self, tmp_path: Path) -> None:
        payload = reports.build_payload(RunConfig(), fx.diagonal_poly().to_json())
        a = reports.write_report(payload, tmp_path / "a.json")
        b = reports.write_report(payload, tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()
