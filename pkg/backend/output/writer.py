"""
Result Writer Module
Deterministic text formats for meshes, fields and experiment tables. Every
file is written to a temporary sibling first and renamed into place, so a
failed run never leaves a partial file behind.
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

from backend.flux.flux_validator import ComparisonWitness, FluxReport
from backend.loaders.mesh_loader import LENGTH_PREFIX
from backend.meshing.triangulation import TriangulatedDomain
from backend.polygons.admissibility import AdmissibilityReport
from backend.solvers.field import ScalarField
from backend.solvers.scherk import ContinuationRow

logger = logging.getLogger(__name__)


def _num(value) -> str:
    """Full-precision, locale-independent float text."""
    if value is None:
        return "-"
    return repr(float(value))


def atomic_write(path: "str | Path", text: str) -> Path:
    """
    Write text to path via a temporary file and an atomic rename.

    Raises:
        OSError: If the directory is not writable
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug(f"Wrote {path}")
    return path


def atomic_write_bytes(path: "str | Path", data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def format_mesh(mesh: TriangulatedDomain) -> str:
    lines = [f"mesh {mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_edges)}"]
    lines.extend(f"v {_num(x)} {_num(y)}" for x, y in mesh.xy)
    lines.extend(f"t {i} {j} {k}" for i, j, k in mesh.triangles)
    lines.extend(f"b {a} {b} {tag}" for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags))
    lines.extend(f"i {a} {b} {tag}" for (a, b), tag in zip(mesh.interface_edges, mesh.interface_tags))
    for key in sorted(mesh.metadata):
        value = str(mesh.metadata[key])
        if value and " " not in value:
            lines.append(f"m {key} {value}")
    for tag in sorted(mesh.chain_lengths):
        lines.append(f"m {LENGTH_PREFIX}{tag} {_num(mesh.chain_lengths[tag])}")
    return "\n".join(lines) + "\n"


def write_mesh(mesh: TriangulatedDomain, path: "str | Path") -> Path:
    return atomic_write(path, format_mesh(mesh))


def format_field(field: ScalarField) -> str:
    return f"field {len(field.values)}\n" + "".join(f"{_num(v)}\n" for v in field.values)


def write_field(field: ScalarField, path: "str | Path") -> Path:
    return atomic_write(path, format_field(field))


def write_convergence(rows: Iterable[tuple[float, float]], path: "str | Path") -> Path:
    """Barrier convergence table: 'n sup_diff' rows."""
    text = "n sup_diff\n" + "".join(f"{n:g} {_num(v)}\n" for n, v in rows)
    return atomic_write(path, text)


def write_continuation(rows: Sequence[ContinuationRow], path: "str | Path") -> Path:
    lines = ["L iterations residual drift"]
    lines.extend(f"{r.L:g} {r.iterations} {_num(r.residual)} {_num(r.drift)}" for r in rows)
    return atomic_write(path, "\n".join(lines) + "\n")


def format_flux_report(report: FluxReport) -> str:
    lines = [
        f"arc {a.tag} flux={_num(a.flux)} length={_num(a.length)} ratio={_num(a.ratio)}"
        for a in report.arcs
    ]
    lines.extend(f"cycle {name} total={_num(value)}" for name, value in report.cycles.items())
    lines.append(
        f"sums alpha={_num(report.sum_alpha)} beta={_num(report.sum_beta)} c={_num(report.sum_c)} "
        f"bound={_num(report.bound)} total={_num(report.total)}"
    )
    violations = report.clause2_violations()
    lines.append(f"violations {','.join(a.tag for a in violations) if violations else '-'}")
    lines.append(f"slack={_num(report.slack_factor * report.h ** 2)}")
    return "\n".join(lines) + "\n"


def write_flux_report(report: FluxReport, path: "str | Path") -> Path:
    return atomic_write(path, format_flux_report(report))


def write_level_table(
    rows: Iterable[tuple[float, float, float, float, Optional[float]]],
    path: "str | Path",
) -> Path:
    """Per-truncation-level flux summary: 'level sum_c bound total alpha_min' rows."""
    text = "level sum_c bound total alpha_min\n" + "".join(
        f"{level:g} {_num(c)} {_num(bound)} {_num(total)} {_num(ratio)}\n"
        for level, c, bound, total, ratio in rows
    )
    return atomic_write(path, text)


def format_admissibility(report: AdmissibilityReport) -> str:
    lines = [
        f"verdict {report.verdict.value}",
        f"balance {_num(report.balance)}",
        f"tolerances balance={report.balance_tol:g} margin={report.margin_tol:g}",
        "tested " + " ".join(f"{s:g}" for s in report.tested_levels),
        "skipped " + (" ".join(f"{s:g}" for s in report.skipped_levels) or "-"),
        "simultaneous " + (" ".join(f"{s:g}" for s in report.simultaneous_levels) or "-"),
    ]
    for audit in report.inscribed:
        worst_a, worst_b = audit.worst
        passing = audit.passing_level
        lines.append(
            f"inscribed {audit.sub.label()} worst_a={_num(worst_a)} worst_b={_num(worst_b)} "
            f"slope_a={audit.slopes[0]:g} slope_b={audit.slopes[1]:g} "
            f"pass={'-' if passing is None else f'{passing:g}'}"
        )
    lines.extend(f"reason {r}" for r in report.reasons)
    return "\n".join(lines) + "\n"


def write_admissibility(report: AdmissibilityReport, path: "str | Path") -> Path:
    return atomic_write(path, format_admissibility(report))


def write_comparison(witness: ComparisonWitness, path: "str | Path") -> Path:
    d = witness.to_dict()
    text = "".join(f"{key} {d[key] if not isinstance(d[key], float) else _num(d[key])}\n" for key in sorted(d))
    return atomic_write(path, text)


def write_key_values(items: Iterable[tuple[str, object]], path: "str | Path", footer: str = "") -> Path:
    """Generic 'key value' report for sweep results and checks."""
    lines = []
    for key, value in items:
        lines.append(f"{key} {_num(value) if isinstance(value, float) else value}")
    if footer:
        lines.append(f"# {footer}")
    return atomic_write(path, "\n".join(lines) + "\n")
