"""One-off generator for the committed perforated-plate coarse mesh.

Plate 4 x 2 with a hole of radius 0.8 centered at (2, 1).  Characteristic
length 0.5 at the left/right edges, graded refinement near the hole: 0.2
below, 0.05 above.  Output: src/bayesfem/data/plate_coarse.msh (MSH 2.2).

Run from the repository root:  python tools/make_plate_mesh.py
"""

import pathlib

import numpy as np
from scipy.spatial import Delaunay, cKDTree

L, H, R = 4.0, 2.0, 0.8
CX, CY = 2.0, 1.0
RNG = np.random.default_rng(20240817)


def h_field(p):
    p = np.atleast_2d(p)
    d = np.abs(np.hypot(p[:, 0] - CX, p[:, 1] - CY) - R)
    t = np.clip((p[:, 1] - 0.6) / 0.8, 0.0, 1.0)
    h_hole = (1.0 - t) * 0.2 + t * 0.05 + 0.6 * d
    return np.minimum(0.5, h_hole)


def walk_edge(p0, p1):
    """Points along a segment with local spacing h, endpoints included."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    length = np.linalg.norm(p1 - p0)
    pts = [p0]
    s = 0.0
    while True:
        h = float(h_field(pts[-1]))
        s_next = s + h
        if s_next >= length - 0.45 * h:
            break
        s = s_next
        pts.append(p0 + (p1 - p0) * (s / length))
    pts.append(p1)
    return np.array(pts)


def circle_points():
    pts = []
    theta = 0.0
    while theta < 2 * np.pi:
        p = np.array([CX + R * np.cos(theta), CY + R * np.sin(theta)])
        pts.append(p)
        theta += float(h_field(p)) / R
    return np.array(pts)


def build_points():
    corners = [np.array([0.0, 0.0]), np.array([L, 0.0]), np.array([L, H]), np.array([0.0, H])]
    edges = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        edges.append(walk_edge(a, b)[:-1])  # drop duplicate corner
    boundary = np.vstack(edges + [circle_points()])

    # graded interior candidates, greedy Poisson-disk acceptance
    nx, ny = 400, 200
    gx, gy = np.meshgrid(np.linspace(0, L, nx), np.linspace(0, H, ny))
    cand = np.column_stack([gx.ravel(), gy.ravel()])
    cand = cand + RNG.uniform(-0.004, 0.004, cand.shape)
    r = np.hypot(cand[:, 0] - CX, cand[:, 1] - CY)
    inside = (cand[:, 0] > 0.02) & (cand[:, 0] < L - 0.02) \
        & (cand[:, 1] > 0.02) & (cand[:, 1] < H - 0.02) & (r > R + 0.02)
    cand = cand[RNG.permutation(np.nonzero(inside)[0])]

    accepted = list(boundary)
    tree_pts = boundary
    tree = cKDTree(tree_pts)
    pending = []
    for p in cand:
        h = float(h_field(p))
        d, _ = tree.query(p)
        if pending:
            d = min(d, np.min(np.linalg.norm(np.asarray(pending) - p, axis=1)))
        if d >= 0.74 * h:
            pending.append(p)
            if len(pending) >= 64:
                accepted.extend(pending)
                tree_pts = np.vstack([tree_pts, pending])
                tree = cKDTree(tree_pts)
                pending = []
    accepted.extend(pending)
    pts = np.vstack(accepted)
    n_bnd = len(boundary)

    # Laplacian smoothing of interior points, boundary fixed
    for _ in range(8):
        tri = Delaunay(pts)
        keep = triangle_mask(pts, tri.simplices)
        simplices = tri.simplices[keep]
        neigh = [[] for _ in range(len(pts))]
        for s in simplices:
            for a in range(3):
                for b in range(3):
                    if a != b:
                        neigh[s[a]].append(s[b])
        new = pts.copy()
        for i in range(n_bnd, len(pts)):
            if neigh[i]:
                new[i] = pts[np.unique(neigh[i])].mean(axis=0)
        # keep interior nodes a fraction of their spacing off the hole chord
        r = np.hypot(new[:, 0] - CX, new[:, 1] - CY)
        margin = R + 0.55 * h_field(new)
        shallow = np.zeros(len(new), dtype=bool)
        shallow[n_bnd:] = r[n_bnd:] < margin[n_bnd:]
        new[shallow] = np.column_stack([
            CX + margin[shallow] * (new[shallow, 0] - CX) / r[shallow],
            CY + margin[shallow] * (new[shallow, 1] - CY) / r[shallow],
        ])
        pts = new
    return pts, n_bnd


def triangle_mask(pts, simplices):
    cent = pts[simplices].mean(axis=1)
    return np.hypot(cent[:, 0] - CX, cent[:, 1] - CY) > R


def main():
    pts, _ = build_points()
    tri = Delaunay(pts)
    simplices = tri.simplices[triangle_mask(pts, tri.simplices)]
    # enforce CCW orientation
    p = pts[simplices]
    areas = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                   - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    flip = areas < 0
    simplices[flip] = simplices[flip][:, ::-1]

    # drop unused points, renumber
    used = np.unique(simplices)
    remap = -np.ones(len(pts), dtype=int)
    remap[used] = np.arange(len(used))
    pts = pts[used]
    simplices = remap[simplices]

    # boundary line elements per rectangle edge
    def edge_nodes(mask):
        return np.nonzero(mask)[0]

    tol = 1e-9
    groups = {
        "left": edge_nodes(np.abs(pts[:, 0]) < tol),
        "right": edge_nodes(np.abs(pts[:, 0] - L) < tol),
        "bottom": edge_nodes(np.abs(pts[:, 1]) < tol),
        "top": edge_nodes(np.abs(pts[:, 1] - H) < tol),
    }
    phys = {"left": 1, "right": 2, "bottom": 3, "top": 4}
    line_elems = []
    for name, nodes in groups.items():
        axis = 1 if name in ("left", "right") else 0
        order = nodes[np.argsort(pts[nodes, axis])]
        for a, b in zip(order[:-1], order[1:]):
            line_elems.append((phys[name], a, b))

    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "bayesfem" / "data" / "plate_coarse.msh"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write("$PhysicalNames\n%d\n" % (len(phys) + 1))
        for name, tag in phys.items():
            fh.write('1 %d "%s"\n' % (tag, name))
        fh.write('2 10 "domain"\n$EndPhysicalNames\n')
        fh.write("$Nodes\n%d\n" % len(pts))
        for i, (x, y) in enumerate(pts, start=1):
            fh.write("%d %.16g %.16g 0\n" % (i, x, y))
        fh.write("$EndNodes\n")
        fh.write("$Elements\n%d\n" % (len(line_elems) + len(simplices)))
        eid = 1
        for tag, a, b in line_elems:
            fh.write("%d 1 2 %d %d %d %d\n" % (eid, tag, tag, a + 1, b + 1))
            eid += 1
        for a, b, c in simplices:
            fh.write("%d 2 2 10 10 %d %d %d\n" % (eid, a + 1, b + 1, c + 1))
            eid += 1
        fh.write("$EndElements\n")
    print(f"wrote {out}: {len(pts)} nodes, {len(simplices)} triangles, "
          f"{len(line_elems)} boundary lines")
    areas = np.abs(areas)
    print(f"min area {areas.min():.3e}, max area {areas.max():.3e}")


if __name__ == "__main__":
    main()
