"""
Tests for OutputService.
"""

import json

import numpy as np
import pytest

from sgisim import __version__
from sgisim.services.output_service import MANIFEST_NAME, OutputService, format_value, write_csv


class TestFormatValue:
    """Test cases for CSV cell rendering."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (True, "1"),
            (np.bool_(False), "0"),
            (3, "3"),
            (np.int64(7), "7"),
            (0.1 + 0.2, "0.3"),
            (np.float64(1.23456789012345e-7), "1.23456789e-07"),
            ("Zero", "Zero"),
        ],
    )
    def test_format(self, value, expected):
        """Test the rendering of every cell type."""
        assert format_value(value) == expected


class TestWriteCsv:
    """Test cases for the module-level CSV writer."""

    def test_metadata_before_header(self, tmp_path):
        """Test that metadata comments precede the column header."""
        path = write_csv(tmp_path / "t.csv", ["a", "b_um"], [(1, 2.5), (2, 3.5)], {"seed": 42})

        assert path.read_text().splitlines() == ["# seed: 42", "a,b_um", "1,2.5", "2,3.5"]

    def test_header_only(self, tmp_path):
        """Test that an empty table still writes its header."""
        path = write_csv(tmp_path / "t.csv", ["a", "b"], [])

        assert path.read_text() == "a,b\n"

    def test_row_length_checked(self, tmp_path):
        """Test that a short row raises."""
        with pytest.raises(ValueError, match="expected 2"):
            write_csv(tmp_path / "t.csv", ["a", "b"], [(1,)])


class TestOutputService:
    """Test cases for OutputService."""

    @pytest.fixture
    def service(self, tmp_path):
        return OutputService(tmp_path / "out", "hd-curves", "abc123", seed=42, config_path="run.json")

    def test_metadata(self, service):
        """Test the run metadata and its extension."""
        metadata = service.metadata(scenario="S1")

        assert metadata == {
            "tool_version": __version__,
            "command": "hd-curves",
            "config_hash": "abc123",
            "seed": 42,
            "scenario": "S1",
        }

    def test_files_registered_once(self, service):
        """Test that rewritten files are listed once."""
        service.write_csv("a.csv", ["x"], [(1,)])
        service.write_csv("a.csv", ["x"], [(2,)])
        service.write_json("b.json", {"k": 1})

        assert service.files == ["a.csv", "b.json"]

    def test_csv_header(self, service):
        """Test that output CSVs carry the run metadata."""
        path = service.write_csv("a.csv", ["x"], [(1,)], label="S2")

        lines = path.read_text().splitlines()
        assert lines[:5] == [
            f"# tool_version: {__version__}",
            "# command: hd-curves",
            "# config_hash: abc123",
            "# seed: 42",
            "# label: S2",
        ]

    def test_json_sorted(self, service):
        """Test that JSON sidecars use sorted keys."""
        path = service.write_json("b.json", {"z": 1, "a": 2})

        assert list(json.loads(path.read_text())) == ["a", "z"]
        assert path.read_text().index('"a"') < path.read_text().index('"z"')

    def test_register_external(self, service, tmp_path):
        """Test that files written elsewhere in the directory can be registered."""
        (tmp_path / "out").mkdir()
        path = tmp_path / "out" / "snap.csv"
        path.write_text("z_m,density\n")

        service.register(path)

        assert service.files == ["snap.csv"]

    def test_manifest(self, service):
        """Test that the manifest lists files, failures and the seed."""
        service.write_csv("b.csv", ["x"], [])
        service.write_csv("a.csv", ["x"], [])

        path = service.write_manifest(1.23456, failed_scenarios=["S3"])
        manifest = json.loads(path.read_text())

        assert path.name == MANIFEST_NAME
        assert manifest["files"] == ["a.csv", "b.csv"]
        assert manifest["failed_scenarios"] == ["S3"]
        assert manifest["seed"] == 42
        assert manifest["config_path"] == "run.json"
        assert manifest["duration_s"] == 1.235
        assert manifest["tool_version"] == __version__
