"""
Mesh Loader Module
Reads the mesh and field text formats written by backend.output.writer.

Mesh file:
    mesh <n_vertices> <n_triangles> <n_boundary_edges>
    v <x> <y>
    t <i> <j> <k>
    b <i> <j> <tag>
    i <a> <b> <tag>       (interface edges, optional)
    m <key> <value>       (metadata, optional; 'length.<tag>' keys carry chain lengths)

Field file:
    field <n_vertices>
    <value>               (one per line, mesh vertex order)
"""

import logging
import math
from pathlib import Path
from typing import Optional

import numpy as np

from backend.exceptions import ScherkLabError
from backend.meshing.triangulation import MeshGenerationError, TriangulatedDomain
from backend.solvers.field import ScalarField

logger = logging.getLogger(__name__)

LENGTH_PREFIX = "length."


class MeshFormatError(ScherkLabError, ValueError):
    """Raised when a mesh or field file is malformed or inconsistent."""

    def __init__(self, message: str, line_number: Optional[int] = None, source: str = "<mesh>"):
        self.line_number = line_number
        self.source = source
        where = f"{source}:{line_number}" if line_number is not None else source
        super().__init__(f"{where}: {message}")


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        logger.error(f"File not found: {path}")
        raise MeshFormatError("file not found", None, str(path))
    return path.read_text(encoding="utf-8").splitlines()


def _fields(line: str, count: int, line_number: int, source: str) -> list[str]:
    tokens = line.split()
    if len(tokens) != count:
        raise MeshFormatError(f"expected {count} fields, got {len(tokens)}", line_number, source)
    return tokens


def parse_mesh(text: str, source: str = "<mesh>") -> TriangulatedDomain:
    """
    Parse mesh text.

    Raises:
        MeshFormatError: On syntax errors, count mismatches or an inconsistent mesh
    """
    lines = [(k, raw.strip()) for k, raw in enumerate(text.splitlines(), start=1) if raw.strip()]
    if not lines:
        raise MeshFormatError("empty mesh file", None, source)
    k0, header = lines[0]
    tokens = _fields(header, 4, k0, source)
    if tokens[0] != "mesh":
        raise MeshFormatError("missing 'mesh' header", k0, source)
    try:
        nv, nt, nb = (int(t) for t in tokens[1:])
    except ValueError:
        raise MeshFormatError("header counts must be integers", k0, source) from None

    xy, tris, bedges, btags, iedges, itags = [], [], [], [], [], []
    metadata, lengths = {}, {}
    try:
        for k, line in lines[1:]:
            kind = line.split(maxsplit=1)[0]
            if kind == "v":
                _, x, y = _fields(line, 3, k, source)
                xy.append((float(x), float(y)))
            elif kind == "t":
                _, i, j, m = _fields(line, 4, k, source)
                tris.append((int(i), int(j), int(m)))
            elif kind in ("b", "i"):
                _, a, b, tag = _fields(line, 4, k, source)
                (bedges if kind == "b" else iedges).append((int(a), int(b)))
                (btags if kind == "b" else itags).append(tag)
            elif kind == "m":
                _, key, value = _fields(line, 3, k, source)
                if key.startswith(LENGTH_PREFIX):
                    lengths[key[len(LENGTH_PREFIX):]] = float(value)
                else:
                    metadata[key] = value
            else:
                raise MeshFormatError(f"unknown line kind {kind!r}", k, source)
    except ValueError as e:
        if isinstance(e, MeshFormatError):
            raise
        raise MeshFormatError(f"malformed number: {e}", k, source) from None

    if (len(xy), len(tris), len(bedges)) != (nv, nt, nb):
        raise MeshFormatError(
            f"header announces {nv}/{nt}/{nb} vertices/triangles/boundary edges, "
            f"file has {len(xy)}/{len(tris)}/{len(bedges)}",
            k0, source,
        )
    xy = np.array(xy, dtype=float).reshape(-1, 2)
    tris = np.array(tris, dtype=np.int64).reshape(-1, 3)
    if tris.size and (tris.min() < 0 or tris.max() >= nv):
        raise MeshFormatError("triangle references a missing vertex", None, source)
    if not np.all(np.isfinite(xy)):
        raise MeshFormatError("vertex coordinates must be finite", None, source)

    mesh = TriangulatedDomain(
        xy, tris, np.array(bedges, dtype=np.int64), btags,
        np.array(iedges, dtype=np.int64), itags,
        chain_lengths=lengths, metadata=metadata,
    )
    try:
        mesh.check_conforming()
    except MeshGenerationError as e:
        raise MeshFormatError(str(e), None, source) from e
    return mesh


def read_mesh(file_path: "str | Path") -> TriangulatedDomain:
    """Read a mesh file."""
    path = Path(file_path)
    logger.info(f"Loading mesh: {path}")
    return parse_mesh("\n".join(_read_lines(path)), source=str(path))


def read_field(file_path: "str | Path", mesh: TriangulatedDomain) -> ScalarField:
    """
    Read a field file for the given mesh.

    Raises:
        MeshFormatError: If the file is malformed or its size does not match the mesh
    """
    path = Path(file_path)
    lines = [(k, raw.strip()) for k, raw in enumerate(_read_lines(path), start=1) if raw.strip()]
    if not lines:
        raise MeshFormatError("empty field file", None, str(path))
    k0, header = lines[0]
    tokens = header.split()
    if len(tokens) != 2 or tokens[0] != "field" or not tokens[1].isdigit():
        raise MeshFormatError("expected header 'field <n_vertices>'", k0, str(path))
    n = int(tokens[1])
    if n != mesh.n_vertices:
        raise MeshFormatError(f"field has {n} values but the mesh has {mesh.n_vertices} vertices", k0, str(path))
    if len(lines) - 1 != n:
        raise MeshFormatError(f"header announces {n} values, file has {len(lines) - 1}", k0, str(path))
    values = np.empty(n)
    for idx, (k, line) in enumerate(lines[1:]):
        try:
            values[idx] = float(line)
        except ValueError:
            raise MeshFormatError(f"malformed value {line!r}", k, str(path)) from None
        if not math.isfinite(values[idx]):
            raise MeshFormatError("field values must be finite", k, str(path))
    logger.info(f"Loaded field: {path} ({n} values)")
    return ScalarField(mesh, values)
