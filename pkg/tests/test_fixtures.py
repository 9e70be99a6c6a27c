"""Tests for the fixture corpus loader and regression runner."""

import json

import pytest

from app.core.config import BUNDLED_FIXTURES
from app.core.exceptions import FixtureError, MalformedInputError
from app.schemas.hecke import Fixture
from app.services.fixtures import (
    ParameterAlignment,
    UnaryCheck,
    find_by_character,
    load_corpus,
    load_fixture,
    report_failed,
    resolve_orbit_name,
    run_corpus,
    run_fixture,
)
from app.services.kspace import GradedContext
from app.services.orbits import build_param, canonical_s
from app.services.rootsys import build, parse_vector, vector


class TestLoading:
    """Test cases for corpus loading."""

    def test_load_copy(self, corpus_copy):
        """Test that fixtures come back sorted by id."""
        fixtures = load_corpus(str(corpus_copy))
        assert [f.id for f in fixtures] == ["form_a2", "form_c2", "gl4", "sp4"]

    def test_missing_directory(self, tmp_path):
        """Test a corpus path that does not exist."""
        with pytest.raises(FixtureError):
            load_corpus(str(tmp_path / "nowhere"))

    def test_empty_directory(self, tmp_path):
        """Test a corpus without fixtures."""
        with pytest.raises(FixtureError) as exc_info:
            load_corpus(str(tmp_path))
        assert "empty" in exc_info.value.message

    def test_corrupt_json(self, corpus_copy):
        """Test that unreadable JSON is reported with the file name."""
        (corpus_copy / "broken.json").write_text("{", encoding="utf-8")
        with pytest.raises(FixtureError) as exc_info:
            load_corpus(str(corpus_copy))
        assert "broken.json" in exc_info.value.message
        assert exc_info.value.exit_code == 6

    def test_invalid_fixture(self, corpus_copy):
        """Test that schema violations carry the validation messages."""
        (corpus_copy / "invalid.json").write_text(
            json.dumps({"id": "invalid", "kind": "form", "cartan": "A2"}),
            encoding="utf-8",
        )
        with pytest.raises(FixtureError) as exc_info:
            load_fixture(corpus_copy / "invalid.json")
        assert exc_info.value.context["errors"]

    def test_duplicate_ids(self, corpus_copy):
        """Test that two files with one id are rejected."""
        (corpus_copy / "copy.json").write_text(
            (corpus_copy / "sp4.json").read_text(encoding="utf-8"), encoding="utf-8"
        )
        with pytest.raises(FixtureError) as exc_info:
            load_corpus(str(corpus_copy))
        assert "sp4" in exc_info.value.message

    def test_table_size_checked(self):
        """Test that a KL table must match the parameter list."""
        with pytest.raises(ValueError):
            Fixture.model_validate(
                {
                    "id": "short",
                    "kind": "bases",
                    "cartan": "A1",
                    "chi": "1,-1",
                    "orbits": [{"label": "0", "dim": 0, "parameters": ["0"]}],
                    "kl": [["1", "0"], ["0", "1"]],
                }
            )


class TestAlignment:
    """Test cases for ParameterAlignment."""

    def test_permutation_found(self):
        """Test that swapped parameters are matched back."""
        check = UnaryCheck("s", ["x", "y"], ["y", "x"])
        aligner = ParameterAlignment([1, 1], [1, 1], ["a", "b"], ["c", "d"], [check])
        assert aligner.solve() == [1, 0]
        assert aligner.best_cost == 0

    def test_dimension_columns_differ(self):
        """Test that no bijection exists across different dimensions."""
        aligner = ParameterAlignment([0, 1], [0, 2], ["a", "b"], ["a", "b"])
        with pytest.raises(FixtureError) as exc_info:
            aligner.solve()
        assert exc_info.value.context["actual"] == [0, 2]


class TestRunner:
    """Test cases for fixture regression runs."""

    def test_single_cell_perturbation(self):
        """Test that one altered KL cell yields exactly one mismatch."""
        fixture = load_fixture(BUNDLED_FIXTURES / "sp4.json")
        kl = [list(row) for row in fixture.kl]
        kl[0][3] = "1+q"
        result = run_fixture(fixture.model_copy(update={"kl": kl}))
        assert result.error is None
        assert len(result.mismatches) == 1
        cell = result.mismatches[0]
        assert (cell.table, cell.row, cell.column) == ("P", "0", "3s")
        assert cell.actual == "q"

    def test_pipeline_error_recorded(self):
        """Test that a failing fixture is reported instead of raised."""
        fixture = Fixture.model_validate(
            {
                "id": "bad_type",
                "kind": "form",
                "cartan": "E6",
                "chi": "0",
                "form": {"labels": ["0"], "rows": [["1"]]},
            }
        )
        result = run_fixture(fixture)
        assert result.error is not None
        assert result.checked == 0

    def test_run_corpus(self, corpus_copy):
        """Test a clean run over the small fixtures."""
        report = run_corpus(str(corpus_copy))
        assert [r.id for r in report.fixtures] == ["form_a2", "form_c2", "gl4", "sp4"]
        assert report.mismatches == 0
        assert report.checked == sum(r.checked for r in report.fixtures)
        assert report_failed(report) == []

    def test_only(self, corpus_copy):
        """Test restricting a run to named fixtures."""
        report = run_corpus(str(corpus_copy), only=["sp4"])
        assert [r.id for r in report.fixtures] == ["sp4"]

    def test_only_unknown(self, corpus_copy):
        """Test that unknown fixture ids are rejected."""
        with pytest.raises(FixtureError):
            run_corpus(str(corpus_copy), only=["sp4", "e8"])

    @pytest.mark.slow
    def test_bundled_corpus(self):
        """Test that the whole bundled corpus is reproduced."""
        report = run_corpus()
        failed = report_failed(report)
        assert failed == []
        assert report.mismatches == 0

    @pytest.mark.slow
    @pytest.mark.parametrize("name,label", [("f4_2110.json", "8"), ("f4_7311.json", "5c")])
    def test_corrected_representatives(self, name, label):
        """Test that corrected orbit representatives grade to their listed dimension."""
        fixture = load_fixture(BUNDLED_FIXTURES / name)
        row = next(o for o in fixture.orbits if o.label == label)
        rs = build(fixture.cartan)
        ctx = GradedContext(rs.full, parse_vector(fixture.chi, rs.ambient_dim))
        s = canonical_s(ctx, parse_vector(row.s, rs.ambient_dim))
        assert build_param(ctx, s).dim == row.dim
        result = run_fixture(fixture)
        assert result.error is None
        assert result.mismatches == []


class TestOrbitNames:
    """Test cases for orbit name resolution."""

    def test_partition_name(self):
        """Test the subregular orbit of sp(4)."""
        rs = build("C2")
        assert resolve_orbit_name(rs, "(22)") == vector((1, 1))

    def test_unknown_name(self):
        """Test that unnamed orbits are rejected."""
        rs = build("C2")
        with pytest.raises(MalformedInputError):
            resolve_orbit_name(rs, "(1111)")

    def test_find_by_character(self):
        """Test lookup of a transcribed bases fixture."""
        rs = build("C2")
        assert find_by_character(rs, vector((1, 1))).id == "sp4"
        assert find_by_character(build("A1"), vector((1, -1))) is None
