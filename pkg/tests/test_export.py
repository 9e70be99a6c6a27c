"""Tests for artifact renderers."""

import csv
import io
import json

import networkx as nx
import pytest

from app.core.exceptions import InvariantViolation
from app.services import export
from app.services.bases import im_involution, kl_matrix, multiplicity_matrix
from app.services.exactfield import rank
from app.services.kspace import gram
from app.services.liealg import chevalley
from app.services.rootsys import build


class TestTables:
    """Test cases for plain text tables."""

    def test_render_table(self):
        """Test column alignment and the header rule."""
        text = export.render_table(["a", "bb"], [["xyz", "1"], ["", "22"]])
        lines = text.splitlines()
        assert lines[0] == "a    bb"
        assert lines[1] == "---  --"
        assert lines[2] == "xyz  1"
        assert lines[3] == "     22"

    def test_wdd_text(self):
        """Test one row per weighted diagram."""
        rs = build("G2")
        doc = export.wdd_document(rs, chevalley(rs).wdd_enumerate(rs.full))
        assert len(doc.diagrams) == 5
        assert len(export.wdd_text(doc).splitlines()) == 7
        assert doc.diagrams[0].values == [0, 0]
        assert doc.diagrams[0].support == 0


class TestFormExport:
    """Test cases for the bilinear form renderers."""

    def test_form_csv(self, a2_context):
        """Test the CSV layout of the Gram matrix."""
        doc = export.form_document(a2_context, len(a2_context) - rank(gram(a2_context)))
        rows = list(csv.reader(io.StringIO(export.form_csv(doc))))
        assert rows[0] == ["", "2,0,-2", "0,2,-2", "2,-2,0", "-2,2,0", "0,-2,2", "-2,0,2"]
        assert len(rows) == 7
        assert rows[1][0] == "2,0,-2"
        assert rows[1][1] == "1"
        assert doc.radical_dim == 2

    def test_form_text(self, c2_context):
        """Test the radical dimension line."""
        doc = export.form_document(c2_context, 0)
        assert export.form_text(doc).endswith("radical dimension: 0\n")
        assert doc.e_mode == "one"


class TestFamilyExport:
    """Test cases for bases and KL renderers."""

    def test_bases_document(self, sp4_family):
        """Test the JSON document of the bases."""
        doc = export.bases_document(sp4_family)
        data = json.loads(doc.model_dump_json())
        assert [p["label"] for p in data["parameters"]] == ["0", "2", "3t", "3s"]
        assert data["z_minus"][0] == {"1,1": "v/(1+v^2)"}
        assert len(data["u_plus"]) == 4

    def test_kl_document(self, sp4_family):
        """Test the KL matrix cells and the IM map."""
        mult = kl_matrix(multiplicity_matrix(sp4_family))
        im = im_involution(sp4_family)
        doc = export.kl_document(sp4_family, mult, im)
        assert doc.P[0][0] == "1"
        assert doc.P[1][0] == "0"
        assert all(row[k] == "1" for k, row in enumerate(doc.P))
        assert set(doc.IM) == {"0", "2", "3t", "3s"}
        text = export.kl_text(doc)
        assert text.startswith("N\n")
        assert "IM\n" in text

    def test_bases_text_sections(self, sp4_family):
        """Test that every family gets a section."""
        text = export.bases_text(sp4_family)
        for title in ("Z-\n", "U-\n", "Z+\n", "U+\n"):
            assert title in text


class TestClosureGraph:
    """Test cases for the closure heuristic."""

    def test_gl4_graph(self, gl4_family):
        """Test the reduced closure order of gl(4) at (2,0,0,-2)."""
        mult = kl_matrix(multiplicity_matrix(gl4_family))
        graph = export.closure_graph(gl4_family, mult)
        assert set(graph.nodes) == {"0", "2a", "2b", "3", "4"}
        assert nx.is_directed_acyclic_graph(graph)
        assert graph.has_edge("0", "2a")
        assert graph.has_edge("2b", "3")
        assert not graph.has_edge("0", "4")
        assert graph.nodes["4"]["dim"] == 4

    def test_cycle_rejected(self, gl4_family):
        """Test that a cyclic order is reported."""
        mult = kl_matrix(multiplicity_matrix(gl4_family))
        mult.p_matrix[4][0] = {0: 1}
        with pytest.raises(InvariantViolation):
            export.closure_graph(gl4_family, mult)

    def test_render_dot(self):
        """Test DOT output ranked by dimension."""
        graph = nx.DiGraph()
        graph.add_node("0", dim=0)
        graph.add_node("1a", dim=1)
        graph.add_node("1b", dim=1)
        graph.add_edge("0", "1b")
        graph.add_edge("0", "1a")
        text = export.render_dot(graph, "A2 closure")
        assert text.startswith('digraph "A2 closure" {\n\trankdir=BT;\n')
        assert '\t{ rank=same; "1a"; "1b"; }\n' in text
        assert text.index('"0" -> "1a"') < text.index('"0" -> "1b"')
        assert text.endswith("}\n")
