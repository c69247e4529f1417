"""Generates the figure-eight knot complement fixtures.

Gluing data is the standard two-tetrahedron triangulation (SnapPea census m004).
Face i of a tetrahedron is the face opposite vertex i; perm[v] is the image of
vertex v in the neighbouring tetrahedron.

Shape convention (shared with the Rust code): the shape z of a tetrahedron is
cr(P0, P1, P2, P3) = (P3-P0)(P1-P2) / ((P1-P0)(P3-P2)), so (0, 1, inf, z) has
shape z.  Edge {0,2},{1,3} carry z, edges {0,3},{1,2} carry 1/(1-z), edges
{0,1},{2,3} carry 1-1/z.

The script develops the tetrahedra into the upper half space from the regular
shapes, reads off the face-pairing Moebius maps, normalises them to SL(2,C)
and writes the triangulation, presentation and representation fixtures.
Run: python3 figure8.py <out_dir>
"""
import cmath
import itertools
import sys

import numpy as np

NEIGHBORS = [[1, 1, 1, 1], [0, 0, 0, 0]]
PERMS = [
    [[0, 1, 3, 2], [1, 2, 3, 0], [2, 3, 1, 0], [2, 1, 0, 3]],
    [[0, 1, 3, 2], [3, 2, 0, 1], [3, 0, 1, 2], [2, 1, 0, 3]],
]
N = 2
INF = None


def edge_shape(z, p, q):
    e = frozenset((p, q))
    if e in (frozenset((0, 2)), frozenset((1, 3))):
        return z
    if e in (frozenset((0, 3)), frozenset((1, 2))):
        return 1 / (1 - z)
    return 1 - 1 / z


def edge_classes():
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            x = parent[x]
        return x

    def union(a, b):
        parent[find(a)] = find(b)

    for t in range(N):
        for w in range(4):
            k, s = NEIGHBORS[t][w], PERMS[t][w]
            others = [v for v in range(4) if v != w]
            for p, q in itertools.combinations(others, 2):
                union((t, frozenset((p, q))), (k, frozenset((s[p], s[q]))))
    classes = {}
    for t in range(N):
        for p, q in itertools.combinations(range(4), 2):
            classes.setdefault(find((t, frozenset((p, q)))), []).append((t, (p, q)))
    return list(classes.values())


def mobius_from_points(src, dst):
    """SL(2,C) matrix sending three points src to dst (None is infinity)."""

    def to_std(p):
        # matrix sending p0,p1,p2 -> 0,1,inf
        a, b, c = p
        if a is None:
            m = np.array([[0, -(b - c)], [-1, c]], dtype=complex)
        elif b is None:
            m = np.array([[1, -a], [1, -c]], dtype=complex)
        elif c is None:
            m = np.array([[-1, a], [0, -(b - a)]], dtype=complex)
        else:
            m = np.array([[b - c, -a * (b - c)], [b - a, -c * (b - a)]], dtype=complex)
        return m / cmath.sqrt(np.linalg.det(m))

    m = np.linalg.inv(to_std(dst)) @ to_std(src)
    return m / cmath.sqrt(np.linalg.det(m))


def snap(m):
    """Round entries to the exact lattice (Z + Z*sqrt(-3))/2, sign-normalised."""
    h = 3 ** 0.5 / 2
    out = np.array(
        [[complex(round(2 * float(e.real)) / 2, round(float(e.imag) / h) * h) for e in row] for row in m]
    )
    assert np.abs(out - m).max() < 1e-9
    assert abs(np.linalg.det(out) - 1) < 1e-12
    return out


def apply(m, p):
    if p is None:
        return None if abs(m[1, 0]) < 1e-14 else m[0, 0] / m[1, 0]
    den = m[1, 0] * p + m[1, 1]
    if abs(den) < 1e-14:
        return None
    return (m[0, 0] * p + m[0, 1]) / den


def fourth_vertex(p0, p1, p2, z):
    """P3 such that cr(P0,P1,P2,P3) = z, given three placed vertices."""
    # map (P0,P1,P2) -> (0,1,inf); then P3 -> z; pull back
    m = mobius_from_points([p0, p1, p2], [0, 1, None])
    return apply(np.linalg.inv(m), z)


def main(out):
    z = cmath.exp(1j * cmath.pi / 3)
    for cls in edge_classes():
        total = sum(cmath.log(edge_shape(z, p, q)) for _, (p, q) in cls)
        assert abs(total - 2j * cmath.pi) < 1e-12, total
    # develop: tet 0 at (0, 1, inf, z); tet 1 glued across face 3 (tree face)
    pos = {0: [0, 1, None, z]}
    w = 3
    k, s = NEIGHBORS[0][w], PERMS[0][w]
    placed = [None] * 4
    for v in range(4):
        if v != w:
            placed[s[v]] = pos[0][v]
    missing = s[w]
    rest = list(placed)
    # choose an even ordering (a, b, c, missing) so the cross ratio stays z
    for cand in itertools.permutations(range(4)):
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if cand[i] > cand[j])
        if cand[3] == missing and inv % 2 == 0:
            a, b, c, _ = cand
            break
    target = None
    for val in (z, 1 / (1 - z), 1 - 1 / z):
        trial = list(rest)
        trial[missing] = fourth_vertex(rest[a], rest[b], rest[c], val)
        if abs(cross_ratio(trial) - z) < 1e-12:
            target = trial
            break
    assert target is not None
    pos[1] = target

    # face pairings: P_{j,x} = g_{j,w} P_{k,sigma(x)}
    tree = {(0, 3), (1, PERMS[0][3][3])}
    gens = []
    words = {}
    mats = {}
    for t in range(N):
        for w in range(4):
            k, s = NEIGHBORS[t][w], PERMS[t][w]
            if (t, w) in tree:
                words[(t, w)] = ""
                continue
            partner = (k, s[w])
            if partner in words:
                continue
            src = [pos[k][s[x]] for x in range(4) if x != w]
            dst = [pos[t][x] for x in range(4) if x != w]
            g = snap(mobius_from_points(src, dst))
            name = "xyz"[len(gens)]
            gens.append(name)
            mats[name] = g
            words[(t, w)] = name
            words[partner] = name + "^-1"
    # relators: walk every edge class
    rels = []
    for cls in edge_classes():
        t, (p, q) = cls[0]
        r, s_ = [v for v in range(4) if v not in (p, q)]
        word = []
        cur = (t, p, q, r)
        while True:
            tt, pp, qq, exit_face = cur
            word.append(words[(tt, exit_face)])
            k, sg = NEIGHBORS[tt][exit_face], PERMS[tt][exit_face]
            np_, nq = sg[pp], sg[qq]
            entered = sg[exit_face]
            nxt = [v for v in range(4) if v not in (np_, nq, entered)][0]
            cur = (k, np_, nq, nxt)
            if cur == (t, p, q, r):
                break
        rels.append(" ".join(x for x in word if x))
    ident = np.eye(2)
    for rel in rels:
        m = np.eye(2, dtype=complex)
        for tok in rel.split():
            g = mats[tok[0]]
            m = m @ (np.linalg.inv(g) if tok.endswith("^-1") else g)
        assert min(np.abs(m - ident).max(), np.abs(m + ident).max()) < 1e-12, (rel, m)
    write(out, words, gens, mats, rels, pos, z)


def cross_ratio(p):
    def diff(i, j):
        a, b = p[i], p[j]
        if a is None:
            return 1.0, True
        if b is None:
            return -1.0, True
        return a - b, False

    num = [diff(3, 0), diff(1, 2)]
    den = [diff(1, 0), diff(3, 2)]
    ninf = sum(1 for _, f in num if f)
    dinf = sum(1 for _, f in den if f)
    assert ninf == dinf
    val = num[0][0] * num[1][0] / (den[0][0] * den[1][0])
    return val


def fmt(c):
    return "[{:.17g},{:.17g}]".format(c.real + 0.0, c.imag + 0.0)


def fmt_matrix(m):
    return "[" + ",".join(fmt(complex(m[i, j])) for i in range(2) for j in range(2)) + "]"


def write(out, words, gens, mats, rels, pos, z):
    with open(f"{out}/figure8.pres", "w") as f:
        f.write("mutkit presentation v1\n")
        f.write("generators " + " ".join(gens) + "\n")
        for r in rels:
            f.write("relator " + r + "\n")
    with open(f"{out}/figure8.rep", "w") as f:
        f.write("mutkit representation v1\n")
        f.write("# figure-eight knot complement, holonomy of the complete structure\n")
        f.write("generators " + " ".join(gens) + "\n")
        for r in rels:
            f.write("relator " + r + "\n")
        for g in gens:
            f.write(f"matrix {g} {fmt_matrix(mats[g])}\n")
    # conjugated copy
    rng = np.random.default_rng(7)
    c = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    c = c / cmath.sqrt(np.linalg.det(c))
    ci = np.linalg.inv(c)
    with open(f"{out}/figure8_conjugated.rep", "w") as f:
        f.write("mutkit representation v1\n")
        f.write("# figure8.rep conjugated by a fixed random SL(2,C) element (seed 7)\n")
        f.write("generators " + " ".join(gens) + "\n")
        for r in rels:
            f.write("relator " + r + "\n")
        for g in gens:
            f.write(f"matrix {g} {fmt_matrix(c @ mats[g] @ ci)}\n")
    with open(f"{out}/figure8.tri", "w") as f:
        f.write("mutkit triangulation v1\n")
        f.write("# figure-eight knot complement (census m004)\n")
        f.write(f"tetrahedra {N}\n")
        for t in range(N):
            for w in range(4):
                perm = "".join(str(v) for v in PERMS[t][w])
                word = words[(t, w)] or "1"
                f.write(f"glue {t} {w} {NEIGHBORS[t][w]} {perm} {word}\n")
        for i, cls in enumerate(edge_classes()):
            f.write(f"edge {i} " + " ".join(f"{t}:{p}{q}" for t, (p, q) in cls) + "\n")
        f.write("cusp 0 " + " ".join(f"{t}:{v}" for t in range(N) for v in range(4)) + "\n")
    print("shapes", [cross_ratio(pos[t]) for t in range(N)])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
