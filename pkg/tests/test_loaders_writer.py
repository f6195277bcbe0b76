"""Polygon spec parsing, mesh/field files and the report writers."""

import numpy as np
import pytest

from backend.loaders.mesh_loader import MeshFormatError, parse_mesh, read_field, read_mesh
from backend.loaders.polygon_loader import PolygonSpecError, load_polygon_spec, parse_polygon_spec
from backend.output.pdf_report import RunSummaryWriter
from backend.output.writer import (
    atomic_write,
    format_admissibility,
    format_flux_report,
    format_mesh,
    write_field,
    write_key_values,
    write_mesh,
)
from backend.polygons.admissibility import check_admissible
from backend.polygons.ideal_polygon import EdgeLabel

from .conftest import SQUARE_SPEC


class TestPolygonSpec:
    def test_parses_square(self):
        spec = parse_polygon_spec(SQUARE_SPEC)
        assert spec.curvature == 1.0
        assert [v.degrees for v in spec.polygon.vertices] == pytest.approx([45.0, 135.0, 225.0, 315.0])
        assert spec.polygon.first_edge_label is EdgeLabel.ALPHA

    def test_curvature_and_beta_start(self):
        spec = parse_polygon_spec("curvature 2\nvertex 0\nvertex 90 # east\nvertex 180\nvertex 270\nfirst_edge beta\n")
        assert spec.curvature == 2.0
        assert spec.polygon.first_edge_label is EdgeLabel.BETA
        assert parse_polygon_spec(spec.to_text()) == spec

    @pytest.mark.parametrize("text, line", [
        ("vertex 0\nvertex 90\ncorner 180\n", 3),
        ("vertex 0\nvertex 90\nvertex 80\nvertex 270\n", 3),
        ("vertex 0\nvertex 90\nvertex 180\nvertex 360\n", 4),
        ("vertex zero\n", 1),
        ("curvature -1\nvertex 0\n", 1),
        ("curvature 1\ncurvature 2\n", 2),
        ("vertex 0 90\n", 1),
        ("vertex 0\nvertex 90\nvertex 180\nfirst_edge gamma\n", 4),
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(PolygonSpecError) as err:
            parse_polygon_spec(text, source="bad.poly")
        assert err.value.line_number == line
        assert str(err.value).startswith(f"bad.poly:{line}:")

    def test_odd_vertex_count(self):
        with pytest.raises(PolygonSpecError):
            parse_polygon_spec("vertex 0\nvertex 90\nvertex 180\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(PolygonSpecError):
            load_polygon_spec(tmp_path / "absent.poly")


class TestMeshFiles:
    def test_mesh_and_field_survive_a_file_trip(self, scherk_field, tmp_path):
        mesh_path = write_mesh(scherk_field.mesh, tmp_path / "mesh_L-1.5.txt")
        field_path = write_field(scherk_field, tmp_path / "field_L-1.5.txt")
        mesh = read_mesh(mesh_path)
        field = read_field(field_path, mesh)
        assert np.array_equal(mesh.xy, scherk_field.mesh.xy)
        assert np.array_equal(mesh.triangles, scherk_field.mesh.triangles)
        assert mesh.boundary_tags == scherk_field.mesh.boundary_tags
        assert mesh.chain_lengths == scherk_field.mesh.chain_lengths
        assert mesh.metadata["levels"] == scherk_field.mesh.metadata["levels"]
        assert np.array_equal(field.values, scherk_field.values)

    def test_output_is_deterministic(self, square_mesh):
        assert format_mesh(square_mesh) == format_mesh(square_mesh)

    def test_count_mismatch(self):
        text = "mesh 3 1 3\nv 0 0\nv 0.1 0\nt 0 1 2\nb 0 1 x\nb 1 2 x\nb 2 0 x\n"
        with pytest.raises(MeshFormatError) as err:
            parse_mesh(text)
        assert err.value.line_number == 1

    def test_unknown_line_kind(self):
        with pytest.raises(MeshFormatError) as err:
            parse_mesh("mesh 0 0 0\nq 1 2\n")
        assert err.value.line_number == 2

    def test_missing_vertex_reference(self):
        text = "mesh 3 1 3\nv 0 0\nv 0.1 0\nv 0 0.1\nt 0 1 5\nb 0 1 x\nb 1 2 x\nb 2 0 x\n"
        with pytest.raises(MeshFormatError):
            parse_mesh(text)

    def test_field_size_mismatch(self, square_mesh, tmp_path):
        path = tmp_path / "field.txt"
        path.write_text("field 3\n1\n2\n3\n", encoding="utf-8")
        with pytest.raises(MeshFormatError):
            read_field(path, square_mesh)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MeshFormatError):
            read_mesh(tmp_path / "absent.txt")


class TestWriters:
    def test_atomic_write_leaves_no_temporaries(self, tmp_path):
        target = atomic_write(tmp_path / "sub" / "table.txt", "a 1\n")
        assert target.read_text(encoding="utf-8") == "a 1\n"
        assert [p.name for p in target.parent.iterdir()] == ["table.txt"]

    def test_admissibility_text(self, square):
        text = format_admissibility(check_admissible(square, [0.0, -1.0]))
        assert text.startswith("verdict admissible\n")
        assert "skipped 0" in text
        assert text.count("inscribed ") == 4

    def test_flux_report_text(self, scherk_field):
        from backend.flux import flux_theorem_audit
        text = format_flux_report(flux_theorem_audit(scherk_field))
        assert text.count("arc ") == 8
        assert "violations -" in text

    def test_key_values_with_footer(self, tmp_path):
        path = write_key_values([("gap", 0.25), ("below", True)], tmp_path / "kv.txt", footer="trend only")
        assert path.read_text(encoding="utf-8") == "gap 0.25\nbelow True\n# trend only\n"

    def test_pdf_summary(self, tmp_path):
        writer = RunSummaryWriter(tmp_path / "summary.pdf", "Scherk Lab: test")
        writer.add_key_values("Results", [("verdict", "admissible"), ("balance", 0.0)])
        writer.add_table("Convergence", ["n", "sup"], [[1.5, 0.1], [2.0, 0.05]])
        path = writer.write()
        assert path.read_bytes().startswith(b"%PDF")
