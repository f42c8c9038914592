"""Legacy ASCII VTK output for cell fields (lines, triangles, polygons)."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh

__all__ = ["write_vtk"]

_CELL_TYPE_LINE = 3
_CELL_TYPE_TRIANGLE = 5
_CELL_TYPE_POLYGON = 7
_CELL_TYPE_QUAD = 9


def _cell_type(dim: int, n_vertices: int) -> int:
    if dim == 1:
        return _CELL_TYPE_LINE
    if n_vertices == 3:
        return _CELL_TYPE_TRIANGLE
    if n_vertices == 4:
        return _CELL_TYPE_QUAD
    return _CELL_TYPE_POLYGON


def write_vtk(path, mesh: Mesh, cell_data: dict, title: str = "cell field") -> None:
    """Write an unstructured grid with per-cell scalar arrays.

    1-D meshes are embedded in the plane (y = z = 0).  ``cell_data`` maps
    array names to (n_cells,) arrays.
    """
    for name, arr in cell_data.items():
        arr = np.asarray(arr)
        if arr.shape != (mesh.n_cells,):
            raise ValueError(f"cell array {name!r} has shape {arr.shape}")
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID"]
    n_v = len(mesh.vertices)
    lines.append(f"POINTS {n_v} double")
    coords = np.zeros((n_v, 3))
    coords[:, :mesh.dim] = mesh.vertices
    lines.extend(" ".join(f"{c:.17g}" for c in row) for row in coords)

    total = sum(len(c) + 1 for c in mesh.cells)
    lines.append(f"CELLS {mesh.n_cells} {total}")
    lines.extend(f"{len(c)} " + " ".join(str(v) for v in c) for c in mesh.cells)
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines.extend(str(_cell_type(mesh.dim, len(c))) for c in mesh.cells)

    lines.append(f"CELL_DATA {mesh.n_cells}")
    for name, arr in cell_data.items():
        safe = name.replace(" ", "_")
        lines.append(f"SCALARS {safe} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{v:.17g}" for v in np.asarray(arr, dtype=float))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
