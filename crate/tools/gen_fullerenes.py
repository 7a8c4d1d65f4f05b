"""Generate fullerene molecule files (topology + rough starting coordinates).

Topology comes from the face-spiral construction; starting coordinates are
topological coordinates (adjacency eigenvectors) scaled to a ~1.4 A bond
length. The engine's minimizer refines them to the force-field equilibrium.

Usage: python3 tools/gen_fullerenes.py data/
"""
import itertools
import sys

import numpy as np


def windup(sizes):
    """Build the dual (face adjacency) graph from a face spiral, or None."""
    nf = len(sizes)
    adj = [set() for _ in range(nf)]
    rem = list(sizes)

    def connect(a, b):
        if b in adj[a]:
            raise ValueError
        adj[a].add(b)
        adj[b].add(a)
        rem[a] -= 1
        rem[b] -= 1

    try:
        connect(0, 1)
        ring = [0, 1]
        for k in range(2, nf - 1):
            connect(k, ring[-1])
            connect(k, ring[0])
            while True:
                if len(ring) > 1 and rem[ring[-1]] == 0:
                    ring.pop()
                    connect(k, ring[-1])
                elif len(ring) > 1 and rem[ring[0]] == 0:
                    ring.pop(0)
                    connect(k, ring[0])
                else:
                    break
            if min(rem) < 0 or rem[k] <= 0:
                return None
            ring.append(k)
        last = nf - 1
        for f in ring:
            connect(last, f)
    except ValueError:
        return None
    if any(r != 0 for r in rem):
        return None
    return adj


def dual_to_cubic(adj):
    tris = set()
    for a in range(len(adj)):
        for b in adj[a]:
            for c in adj[a] & adj[b]:
                tris.add(tuple(sorted((a, b, c))))
    tris = sorted(tris)
    index = {t: i for i, t in enumerate(tris)}
    edge_tris = {}
    for t in tris:
        for e in itertools.combinations(t, 2):
            edge_tris.setdefault(e, []).append(index[t])
    bonds = set()
    for e, ts in edge_tris.items():
        if len(ts) != 2:
            return None, None
        bonds.add(tuple(sorted(ts)))
    return len(tris), sorted(bonds)


def check_cubic(n, bonds):
    deg = [0] * n
    for a, b in bonds:
        deg[a] += 1
        deg[b] += 1
    return all(d == 3 for d in deg) and len(bonds) == 3 * n // 2


def isolated_pentagons(adj, sizes):
    return all(not (sizes[a] == 5 and sizes[b] == 5) for a in range(len(adj)) for b in adj[a])


def from_pentagon_spiral(nf, pentagons):
    sizes = [6] * nf
    for p in pentagons:
        sizes[p - 1] = 5
    adj = windup(sizes)
    if adj is None:
        raise RuntimeError("invalid spiral")
    n, bonds = dual_to_cubic(adj)
    assert check_cubic(n, bonds)
    return adj, sizes, n, bonds


def search_spiral(nf):
    for pent in itertools.combinations(range(1, nf + 1), 12):
        sizes = [6] * nf
        for p in pent:
            sizes[p - 1] = 5
        adj = windup(sizes)
        if adj is None:
            continue
        n, bonds = dual_to_cubic(adj)
        if n is not None and check_cubic(n, bonds):
            return pent, adj, sizes, n, bonds
    raise RuntimeError("no spiral")


def relabel_bfs(n, bonds):
    nbr = [[] for _ in range(n)]
    for a, b in bonds:
        nbr[a].append(b)
        nbr[b].append(a)
    order, seen = [0], {0}
    for v in order:
        for w in sorted(nbr[v]):
            if w not in seen:
                seen.add(w)
                order.append(w)
    new = {old: i for i, old in enumerate(order)}
    return sorted(tuple(sorted((new[a], new[b]))) for a, b in bonds)


def topological_coords(n, bonds, bond_length=1.4):
    a = np.zeros((n, n))
    for i, j in bonds:
        a[i, j] = a[j, i] = 1.0
    w, v = np.linalg.eigh(a)
    order = np.argsort(-w)
    xyz = v[:, order[1:4]].copy()
    for k in range(3):
        lens = [abs(xyz[i, k] - xyz[j, k]) for i, j in bonds]
        xyz[:, k] /= np.sqrt(np.mean(np.square(lens)) * 3.0)
    lens = [np.linalg.norm(xyz[i] - xyz[j]) for i, j in bonds]
    xyz *= bond_length / np.mean(lens)
    xyz -= xyz.mean(axis=0)
    return xyz


def write(path, name, note, n, bonds, xyz):
    with open(path, "w") as f:
        f.write(f"# {note}\n")
        f.write("# Starting coordinates are approximate (topological embedding);\n")
        f.write("# run `mdcli minimize` to obtain the force-field equilibrium.\n")
        f.write(f'name = "{name}"\n')
        f.write("mass = 12.011\n\n")
        f.write("coordinates = [\n")
        for p in xyz:
            f.write(f"  [{p[0]: .10f}, {p[1]: .10f}, {p[2]: .10f}],\n")
        f.write("]\n\n")
        f.write("bonds = [\n")
        for i in range(0, len(bonds), 6):
            row = ", ".join(f"[{a}, {b}]" for a, b in bonds[i:i + 6])
            f.write(f"  {row},\n")
        f.write("]\n")


def main(outdir):
    specs = {
        "c20": (12, list(range(1, 13)), "C20 (Ih dodecahedron), face spiral 1-12."),
        "c60": (32, [1, 7, 9, 11, 13, 15, 18, 20, 22, 24, 26, 32],
                "C60 (Ih truncated icosahedron), face spiral 1 7 9 11 13 15 18 20 22 24 26 32."),
        "c70": (37, [1, 7, 9, 11, 13, 15, 27, 29, 31, 33, 35, 37],
                "C70 (D5h, the unique isolated-pentagon isomer), face spiral 1 7 9 11 13 15 27 29 31 33 35 37."),
    }
    for name, (nf, pent, note) in specs.items():
        adj, sizes, n, bonds = from_pentagon_spiral(nf, pent)
        if name != "c20":
            assert isolated_pentagons(adj, sizes)
        bonds = relabel_bfs(n, bonds)
        write(f"{outdir}/{name}.toml", name, note, n, bonds, topological_coords(n, bonds))
        print(name, n, len(bonds))
    pent, adj, sizes, n, bonds = search_spiral(15)
    spiral = " ".join(map(str, pent))
    bonds = relabel_bfs(n, bonds)
    note = f"C26 (D3h, the only C26 fullerene isomer), face spiral {spiral}."
    write(f"{outdir}/c26.toml", "c26", note, n, bonds, topological_coords(n, bonds))
    print("c26", n, len(bonds), spiral)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
