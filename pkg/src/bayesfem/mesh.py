"""Interval and triangle meshes, hierarchical refinement, and mesh file parsing.

A refinement step keeps the coarse node indices intact and appends midpoint
nodes in deterministic (element index, local edge index) order, so the
prolongation matrix linking coarse and fine nodal bases is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError, MeshParseError, UnsupportedElementError


@dataclass(frozen=True)
class Mesh:
    """Simplicial mesh: 2-node segments in 1D or CCW 3-node triangles in 2D."""

    dim: int
    nodes: np.ndarray          # (n_nodes, dim)
    elements: np.ndarray       # (n_elems, dim + 1), int
    boundary_tags: dict[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float).reshape(-1, self.dim))
        object.__setattr__(self, "elements", np.asarray(self.elements, dtype=np.intp).reshape(-1, self.dim + 1))
        object.__setattr__(
            self, "boundary_tags", {k: frozenset(v) for k, v in self.boundary_tags.items()}
        )
        n = len(self.nodes)
        if self.dim not in (1, 2):
            raise InvalidArgumentError(f"unsupported dimension {self.dim}")
        if self.elements.size:
            if self.elements.min() < 0 or self.elements.max() >= n:
                raise InvalidArgumentError("element references a node out of range")
            for e, elem in enumerate(self.elements):
                if len(set(elem)) != len(elem):
                    raise InvalidArgumentError(f"element {e} repeats a node")
            if self.dim == 2:
                areas = self.signed_areas()
                if (areas <= 0).any():
                    bad = int(np.argmin(areas))
                    raise InvalidArgumentError(
                        f"triangle {bad} has non-positive signed area {areas[bad]:.3e}"
                    )
        for tag, nodes in self.boundary_tags.items():
            if nodes and (min(nodes) < 0 or max(nodes) >= n):
                raise InvalidArgumentError(f"boundary tag {tag!r} references a node out of range")

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    def signed_areas(self):
        """Signed areas of triangles (2D) or lengths of segments (1D)."""
        if self.dim == 1:
            a = self.nodes[self.elements[:, 0], 0]
            b = self.nodes[self.elements[:, 1], 0]
            return b - a
        p = self.nodes[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class MeshHierarchy:
    """Nested coarse/fine pair with the scalar prolongation over full node sets."""

    coarse: Mesh
    fine: Mesh
    prolongation: sp.csr_matrix   # (n_fine, n_coarse), entry [j, i] = psi_i(x_j)
    parent_map: np.ndarray        # fine element -> coarse parent element


@dataclass(frozen=True)
class DofPartition:
    """Interior / Dirichlet split of the scalar DOF index space."""

    interior: np.ndarray
    dirichlet: np.ndarray
    dofs_per_node: int
    n_dofs: int


def generate_interval_mesh(n_elems, a, b):
    """Uniform 1D mesh on (a, b) with tags "left" and "right" at the ends."""
    if n_elems < 1:
        raise InvalidArgumentError("n_elems must be >= 1")
    if not a < b:
        raise InvalidArgumentError(f"need a < b, got a={a}, b={b}")
    nodes = np.linspace(a, b, n_elems + 1)
    elements = np.column_stack([np.arange(n_elems), np.arange(1, n_elems + 1)])
    return Mesh(
        dim=1,
        nodes=nodes,
        elements=elements,
        boundary_tags={"left": {0}, "right": {n_elems}},
    )


def identity_hierarchy(mesh):
    """Degenerate hierarchy with coarse == fine and an identity prolongation."""
    eye = sp.identity(mesh.n_nodes, format="csr")
    return MeshHierarchy(
        coarse=mesh, fine=mesh, prolongation=eye, parent_map=np.arange(mesh.n_elements)
    )


def refine_hierarchical(coarse, levels):
    """Refine `levels` times (1:2 midpoint split in 1D, 1:4 in 2D).

    The composite prolongation is the product of the per-level ones.
    """
    if levels < 1:
        raise InvalidArgumentError("levels must be >= 1")
    fine = coarse
    P_total = None
    parents = np.arange(coarse.n_elements)
    for _ in range(levels):
        fine, P, parent = _refine_once(fine)
        P_total = P if P_total is None else (P @ P_total).tocsr()
        parents = parents[parent]
    return MeshHierarchy(coarse=coarse, fine=fine, prolongation=P_total.tocsr(), parent_map=parents)


def _refine_once(mesh):
    if mesh.dim == 1:
        return _refine_once_1d(mesh)
    if mesh.dim == 2:
        return _refine_once_2d(mesh)
    raise UnsupportedElementError(f"cannot refine dimension {mesh.dim}")


def _refine_once_1d(mesh):
    n = mesh.n_nodes
    new_nodes = []
    elements = []
    parent = []
    for e, (i, j) in enumerate(mesh.elements):
        k = n + len(new_nodes)
        new_nodes.append(0.5 * (mesh.nodes[i, 0] + mesh.nodes[j, 0]))
        elements.extend([(i, k), (k, j)])
        parent.extend([e, e])
    nodes = np.concatenate([mesh.nodes[:, 0], new_nodes])
    fine = Mesh(dim=1, nodes=nodes, elements=np.array(elements), boundary_tags=mesh.boundary_tags)
    P = _prolongation(n, len(nodes), [(n + m, (mesh.elements[m, 0], mesh.elements[m, 1]))
                                      for m in range(mesh.n_elements)])
    return fine, P, np.asarray(parent)


def _refine_once_2d(mesh):
    n = mesh.n_nodes
    edge_mid = {}
    new_coords = []
    # count edge occurrences to identify boundary edges for tag propagation
    edge_count = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in edge_mid:
            edge_mid[key] = n + len(new_coords)
            new_coords.append(0.5 * (mesh.nodes[i] + mesh.nodes[j]))
        return edge_mid[key]

    elements = []
    parent = []
    for e, (a, b, c) in enumerate(mesh.elements):
        for i, j in ((a, b), (b, c), (c, a)):
            key = (min(i, j), max(i, j))
            edge_count[key] = edge_count.get(key, 0) + 1
        mab = midpoint(a, b)
        mbc = midpoint(b, c)
        mca = midpoint(c, a)
        elements.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])
        parent.extend([e] * 4)

    nodes = np.vstack([mesh.nodes, np.asarray(new_coords).reshape(-1, 2)])
    tags = {}
    for tag, members in mesh.boundary_tags.items():
        new_members = set(members)
        for (i, j), mid in edge_mid.items():
            if edge_count[(i, j)] == 1 and i in members and j in members:
                new_members.add(mid)
        tags[tag] = new_members
    fine = Mesh(dim=2, nodes=nodes, elements=np.array(elements), boundary_tags=tags)
    P = _prolongation(n, len(nodes), [(mid, key) for key, mid in edge_mid.items()])
    return fine, P, np.asarray(parent)


def _prolongation(n_coarse, n_fine, midpoints):
    """Rows: identity for retained coarse nodes, 0.5/0.5 for edge midpoints."""
    rows = list(range(n_coarse))
    cols = list(range(n_coarse))
    vals = [1.0] * n_coarse
    for fine_idx, (i, j) in midpoints:
        rows.extend([fine_idx, fine_idx])
        cols.extend([i, j])
        vals.extend([0.5, 0.5])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_fine, n_coarse))


def partition_dofs(mesh, dirichlet_tags, dofs_per_node=1):
    """Split scalar DOFs into interior and Dirichlet sets, in node order."""
    if dofs_per_node not in (1, 2):
        raise InvalidArgumentError("dofs_per_node must be 1 or 2")
    tagged = set()
    for tag in dirichlet_tags:
        if tag not in mesh.boundary_tags:
            raise InvalidArgumentError(f"unknown boundary tag {tag!r}")
        tagged |= set(mesh.boundary_tags[tag])
    n_dofs = mesh.n_nodes * dofs_per_node
    mask = np.zeros(n_dofs, dtype=bool)
    for node in tagged:
        for comp in range(dofs_per_node):
            mask[node * dofs_per_node + comp] = True
    all_dofs = np.arange(n_dofs)
    return DofPartition(
        interior=all_dofs[~mask],
        dirichlet=all_dofs[mask],
        dofs_per_node=dofs_per_node,
        n_dofs=n_dofs,
    )


def coarse_shape_values(hierarchy, element, points):
    """Evaluate all coarse nodal basis functions at physical points.

    Direct evaluation on one coarse element; used to cross-check the
    interpolation property of the prolongation matrix.
    """
    mesh = hierarchy.coarse
    conn = mesh.elements[element]
    out = np.zeros((len(points), mesh.n_nodes))
    if mesh.dim == 1:
        x0, x1 = mesh.nodes[conn[0], 0], mesh.nodes[conn[1], 0]
        t = (np.asarray(points).reshape(-1) - x0) / (x1 - x0)
        out[:, conn[0]] = 1.0 - t
        out[:, conn[1]] = t
    else:
        p = np.asarray(points).reshape(-1, 2)
        a, b, c = (mesh.nodes[conn[k]] for k in range(3))
        det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
        l1 = ((p[:, 0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[:, 1] - a[1])) / det
        l2 = ((b[0] - a[0]) * (p[:, 1] - a[1]) - (p[:, 0] - a[0]) * (b[1] - a[1])) / det
        out[:, conn[0]] = 1.0 - l1 - l2
        out[:, conn[1]] = l1
        out[:, conn[2]] = l2
    return out


# ---------------------------------------------------------------------------
# Mesh file parsing (Gmsh MSH 2.2 ASCII subset)
# ---------------------------------------------------------------------------

def parse_mesh_file(source):
    """Parse the documented ASCII mesh subset into a 2D Mesh.

    Supported sections: $MeshFormat (2.2 ascii), $PhysicalNames, $Nodes,
    $Elements with element types 1 (2-node line, contributes boundary tags)
    and 2 (3-node triangle).  Anything else raises MeshParseError with the
    offending line number.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()

    phys_names = {}
    node_ids = []
    coords = []
    triangles = []
    tri_lines = []
    tagged_lines = []

    i = 0
    n_lines = len(lines)

    def expect_int(s, lineno, what):
        try:
            return int(s)
        except ValueError:
            raise MeshParseError(f"expected integer {what}, got {s!r}", lineno) from None

    while i < n_lines:
        header = lines[i].strip()
        lineno = i + 1
        i += 1
        if not header:
            continue
        if not header.startswith("$"):
            raise MeshParseError(f"expected section header, got {header!r}", lineno)
        section = header[1:]
        if section == "MeshFormat":
            if i >= n_lines or not lines[i].strip().startswith("2.2"):
                raise MeshParseError("unsupported mesh format version", i + 1)
            i += 1
        elif section == "PhysicalNames":
            count = expect_int(lines[i].strip(), i + 1, "physical name count")
            i += 1
            for _ in range(count):
                parts = lines[i].strip().split(None, 2)
                if len(parts) != 3 or not parts[2].startswith('"'):
                    raise MeshParseError("malformed physical name", i + 1)
                phys_names[expect_int(parts[1], i + 1, "physical tag")] = parts[2].strip('"')
                i += 1
        elif section == "Nodes":
            count = expect_int(lines[i].strip(), i + 1, "node count")
            i += 1
            for _ in range(count):
                parts = lines[i].split()
                if len(parts) != 4:
                    raise MeshParseError("node line must be 'id x y z'", i + 1)
                node_ids.append(expect_int(parts[0], i + 1, "node id"))
                coords.append((float(parts[1]), float(parts[2])))
                i += 1
            if len(node_ids) != count:
                raise MeshParseError("node count mismatch", i)
        elif section == "Elements":
            count = expect_int(lines[i].strip(), i + 1, "element count")
            i += 1
            for _ in range(count):
                parts = [expect_int(p, i + 1, "element field") for p in lines[i].split()]
                if len(parts) < 3:
                    raise MeshParseError("malformed element line", i + 1)
                _, etype, ntags = parts[:3]
                tags = parts[3:3 + ntags]
                conn = parts[3 + ntags:]
                if etype == 1:
                    if len(conn) != 2:
                        raise MeshParseError("line element needs 2 nodes", i + 1)
                    tagged_lines.append((tags[0] if tags else None, conn, i + 1))
                elif etype == 2:
                    if len(conn) != 3:
                        raise MeshParseError("triangle element needs 3 nodes", i + 1)
                    triangles.append(conn)
                    tri_lines.append(i + 1)
                else:
                    raise MeshParseError(f"unsupported element type {etype}", i + 1)
                i += 1
            if len(triangles) + len(tagged_lines) != count:
                raise MeshParseError("element count mismatch", i)
        else:
            raise MeshParseError(f"unknown section {section!r}", lineno)
        # consume the matching $End marker
        while i < n_lines and not lines[i].strip():
            i += 1
        if i < n_lines and lines[i].strip() == f"$End{section}":
            i += 1
        else:
            raise MeshParseError(f"missing $End{section}", i + 1)

    id_map = {nid: k for k, nid in enumerate(node_ids)}

    def resolve(conn, lineno):
        try:
            return [id_map[c] for c in conn]
        except KeyError as exc:
            raise MeshParseError(
                f"element references unknown node {exc.args[0]}", lineno
            ) from None

    elements = []
    nodes = np.asarray(coords).reshape(-1, 2)
    for conn, lineno in zip(triangles, tri_lines):
        tri = resolve(conn, lineno)
        p = nodes[tri]
        area = 0.5 * ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1])
                      - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1]))
        if area <= 0:
            raise MeshParseError(
                f"triangle {conn} has non-positive area {area:.3e}", lineno
            )
        elements.append(tri)
    if not elements:
        raise MeshParseError("mesh contains no triangles", n_lines)

    boundary_tags = {}
    for tag, conn, lineno in tagged_lines:
        if tag is None or tag not in phys_names:
            continue
        name = phys_names[tag]
        boundary_tags.setdefault(name, set()).update(resolve(conn, lineno))

    return Mesh(dim=2, nodes=nodes, elements=np.asarray(elements), boundary_tags=boundary_tags)
