//! Combinatorial ideal triangulations: face gluings, edge and cusp classes,
//! orientation, and the cusp link cycles used by the gluing equations.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// The six edges of a tetrahedron as vertex pairs; the index is the edge id.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Index into [`EDGES`] of the edge with endpoints `a != b`.
pub fn edge_index(a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    EDGES.iter().position(|&e| e == (a, b)).expect("distinct vertices below 4")
}

/// Which of the three shape parameters an edge carries:
/// `z` on {02, 13}, `1/(1−z)` on {03, 12}, `1 − 1/z` on {01, 23}.
pub fn edge_shape_kind(edge: usize) -> usize {
    match EDGES[edge] {
        (0, 2) | (1, 3) => 0,
        (0, 3) | (1, 2) => 1,
        _ => 2,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriangulationError {
    #[error("triangulation has no tetrahedra")]
    Empty,
    #[error("`{text}` is not a permutation of 0123")]
    BadPermutation { text: String },
    #[error("tetrahedron {tet} face {face}: neighbour {neighbor} does not exist")]
    UnknownNeighbor { tet: usize, face: usize, neighbor: usize },
    #[error("tetrahedron {tet} face {face} is glued to itself")]
    SelfGluedFace { tet: usize, face: usize },
    #[error(
        "gluing is not an involution: face {tet}:{face} goes to {neighbor}:{neighbor_face}, \
         which goes back to {back_tet}:{back_face}"
    )]
    NotInvolutive {
        tet: usize,
        face: usize,
        neighbor: usize,
        neighbor_face: usize,
        back_tet: usize,
        back_face: usize,
    },
    #[error("face {tet}:{face} and face {neighbor}:{neighbor_face} use permutations that are not mutually inverse")]
    PermutationMismatch {
        tet: usize,
        face: usize,
        neighbor: usize,
        neighbor_face: usize,
    },
    #[error("Euler characteristic check failed: {edges} edge classes for {tetrahedra} tetrahedra")]
    EulerCharacteristic { edges: usize, tetrahedra: usize },
    #[error("cusp {cusp} has a link of Euler characteristic {euler}, expected 0")]
    CuspLink { cusp: usize, euler: i64 },
    #[error("triangulation is not orientable")]
    NonOrientable,
    #[error("declared {what} classes do not match the gluings: {detail}")]
    ClassMismatch { what: &'static str, detail: String },
}

/// A permutation of `{0, 1, 2, 3}`, stored as the images of `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Perm4(pub [u8; 4]);

impl Perm4 {
    pub const IDENTITY: Perm4 = Perm4([0, 1, 2, 3]);

    pub fn new(images: [u8; 4]) -> Result<Self, TriangulationError> {
        let mut seen = [false; 4];
        for &i in &images {
            if i > 3 || seen[i as usize] {
                return Err(TriangulationError::BadPermutation {
                    text: images.iter().map(|d| d.to_string()).collect(),
                });
            }
            seen[i as usize] = true;
        }
        Ok(Self(images))
    }

    /// Parses four digits such as `2310`.
    pub fn parse(text: &str) -> Result<Self, TriangulationError> {
        let bad = || TriangulationError::BadPermutation { text: text.to_string() };
        let digits: Vec<u8> = text
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad))
            .collect::<Result<_, _>>()?;
        let images: [u8; 4] = digits.try_into().map_err(|_| bad())?;
        Self::new(images).map_err(|_| bad())
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn inverse(&self) -> Self {
        let mut out = [0u8; 4];
        for (i, &j) in self.0.iter().enumerate() {
            out[j as usize] = i as u8;
        }
        Self(out)
    }

    pub fn is_even(&self) -> bool {
        permutation_is_even(&self.0.map(usize::from))
    }
}

impl fmt::Display for Perm4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parity of a sequence of distinct integers, by inversion count.
pub fn permutation_is_even(p: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

/// Gluing of one face: face `f` of this tetrahedron is identified with face
/// `perm(f)` of `neighbor`, vertex `x` going to vertex `perm(x)`.
///
/// `word` is the face-pairing word: decorations satisfy
/// `P[tet][x] = ρ(word) · P[neighbor][perm(x)]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceGluing {
    pub neighbor: usize,
    pub perm: Perm4,
    pub word: String,
}

/// A vertex corner `(tetrahedron, vertex)`, i.e. a triangle of a cusp link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Corner {
    pub tet: usize,
    pub vertex: usize,
}

/// One passage of a curve in a cusp link across a face: from corner `from`
/// through its face `face` into corner `to`, entering through `to_face`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkCrossing {
    pub from: Corner,
    pub face: usize,
    pub to: Corner,
    pub to_face: usize,
}

impl LinkCrossing {
    fn reversed(&self) -> Self {
        Self {
            from: self.to,
            face: self.to_face,
            to: self.from,
            to_face: self.face,
        }
    }
}

/// Spanning tree of one cusp link and its fundamental cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspLink {
    pub cusp: usize,
    pub root: Corner,
    /// BFS order of corners with the tree crossing that reached each one
    /// (`None` for the root).
    pub tree: Vec<(Corner, Option<LinkCrossing>)>,
    /// Crossings not in the tree, each closing one fundamental cycle.
    pub chords: Vec<LinkCrossing>,
}

impl CuspLink {
    fn tree_path(&self, target: Corner) -> Vec<LinkCrossing> {
        let mut path = Vec::new();
        let mut at = target;
        while let Some((_, Some(step))) = self.tree.iter().find(|(c, _)| *c == at) {
            path.push(*step);
            at = step.from;
        }
        path.reverse();
        path
    }

    /// Closed walk from the root through `chord` and back, with backtracking
    /// removed.
    pub fn cycle(&self, chord: &LinkCrossing) -> Vec<LinkCrossing> {
        let mut walk = self.tree_path(chord.from);
        walk.push(*chord);
        walk.extend(self.tree_path(chord.to).iter().rev().map(LinkCrossing::reversed));
        let mut reduced: Vec<LinkCrossing> = Vec::with_capacity(walk.len());
        for step in walk {
            match reduced.last() {
                Some(last) if last.reversed() == step => {
                    reduced.pop();
                }
                _ => reduced.push(step),
            }
        }
        while reduced.len() >= 2 && reduced[0].reversed() == reduced[reduced.len() - 1] {
            reduced.pop();
            reduced.remove(0);
        }
        reduced
    }
}

/// Validated ideal triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealTriangulation {
    gluings: Vec<[FaceGluing; 4]>,
    edge_classes: Vec<Vec<(usize, usize)>>,
    cusp_classes: Vec<Vec<Corner>>,
    orientation: Vec<i8>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Classes in order of their smallest member, members ascending.
    fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut index = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if index[r] == usize::MAX {
                index[r] = out.len();
                out.push(Vec::new());
            }
            out[index[r]].push(x);
        }
        out
    }
}

impl IdealTriangulation {
    /// Validates the gluings and derives edge classes, cusp classes and the
    /// orientation of each tetrahedron relative to tetrahedron 0.
    pub fn new(gluings: Vec<[FaceGluing; 4]>) -> Result<Self, TriangulationError> {
        let n = gluings.len();
        if n == 0 {
            return Err(TriangulationError::Empty);
        }
        for (t, faces) in gluings.iter().enumerate() {
            for (f, g) in faces.iter().enumerate() {
                if g.neighbor >= n {
                    return Err(TriangulationError::UnknownNeighbor {
                        tet: t,
                        face: f,
                        neighbor: g.neighbor,
                    });
                }
                let nf = g.perm.apply(f);
                if g.neighbor == t && nf == f {
                    return Err(TriangulationError::SelfGluedFace { tet: t, face: f });
                }
                let back = &gluings[g.neighbor][nf];
                let back_face = back.perm.apply(nf);
                if back.neighbor != t || back_face != f {
                    return Err(TriangulationError::NotInvolutive {
                        tet: t,
                        face: f,
                        neighbor: g.neighbor,
                        neighbor_face: nf,
                        back_tet: back.neighbor,
                        back_face,
                    });
                }
                if back.perm != g.perm.inverse() {
                    return Err(TriangulationError::PermutationMismatch {
                        tet: t,
                        face: f,
                        neighbor: g.neighbor,
                        neighbor_face: nf,
                    });
                }
            }
        }

        let mut edges = UnionFind::new(6 * n);
        let mut cusps = UnionFind::new(4 * n);
        // oriented edge ends (t, a -> b), the link vertices
        let mut ends = UnionFind::new(12 * n);
        let end_id = |t: usize, a: usize, b: usize| 12 * t + 3 * a + if b < a { b } else { b - 1 };
        for (t, faces) in gluings.iter().enumerate() {
            for (f, g) in faces.iter().enumerate() {
                let k = g.neighbor;
                for x in (0..4).filter(|&x| x != f) {
                    cusps.union(4 * t + x, 4 * k + g.perm.apply(x));
                    for y in (0..4).filter(|&y| y != f && y != x) {
                        ends.union(end_id(t, x, y), end_id(k, g.perm.apply(x), g.perm.apply(y)));
                        if x < y {
                            edges.union(
                                6 * t + edge_index(x, y),
                                6 * k + edge_index(g.perm.apply(x), g.perm.apply(y)),
                            );
                        }
                    }
                }
            }
        }
        let edge_classes: Vec<Vec<(usize, usize)>> = edges
            .classes()
            .into_iter()
            .map(|c| c.into_iter().map(|i| (i / 6, i % 6)).collect())
            .collect();
        let cusp_classes: Vec<Vec<Corner>> = cusps
            .classes()
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|i| Corner {
                        tet: i / 4,
                        vertex: i % 4,
                    })
                    .collect()
            })
            .collect();

        if edge_classes.len() != n {
            return Err(TriangulationError::EulerCharacteristic {
                edges: edge_classes.len(),
                tetrahedra: n,
            });
        }
        // each cusp link: V - E + F with F corners and E = 3F/2
        let mut cusp_of = vec![0usize; 4 * n];
        for (ci, class) in cusp_classes.iter().enumerate() {
            for c in class {
                cusp_of[4 * c.tet + c.vertex] = ci;
            }
        }
        let mut link_vertices = vec![0i64; cusp_classes.len()];
        for class in ends.classes() {
            let first = class[0];
            let (t, a) = (first / 12, (first % 12) / 3);
            link_vertices[cusp_of[4 * t + a]] += 1;
        }
        for (ci, class) in cusp_classes.iter().enumerate() {
            let f = class.len() as i64;
            let euler = link_vertices[ci] - 3 * f / 2 + f;
            if 3 * f % 2 != 0 || euler != 0 {
                return Err(TriangulationError::CuspLink { cusp: ci, euler });
            }
        }

        let orientation = orient(&gluings)?;
        Ok(Self {
            gluings,
            edge_classes,
            cusp_classes,
            orientation,
        })
    }

    pub fn tetrahedron_count(&self) -> usize {
        self.gluings.len()
    }

    pub fn gluing(&self, tet: usize, face: usize) -> &FaceGluing {
        &self.gluings[tet][face]
    }

    pub fn gluings(&self) -> &[[FaceGluing; 4]] {
        &self.gluings
    }

    /// Edge classes as `(tetrahedron, edge id)` incidences.
    pub fn edge_classes(&self) -> &[Vec<(usize, usize)>] {
        &self.edge_classes
    }

    pub fn cusp_classes(&self) -> &[Vec<Corner>] {
        &self.cusp_classes
    }

    /// `+1` or `-1` per tetrahedron: whether its vertex order agrees with
    /// the orientation of tetrahedron 0.
    pub fn orientation(&self) -> &[i8] {
        &self.orientation
    }

    /// True when every tetrahedron is positively ordered.
    pub fn is_consistently_ordered(&self) -> bool {
        self.orientation.iter().all(|&s| s == 1)
    }

    /// The corner reached from `c` through face `face` (`face != c.vertex`).
    pub fn cross(&self, c: Corner, face: usize) -> LinkCrossing {
        let g = &self.gluings[c.tet][face];
        LinkCrossing {
            from: c,
            face,
            to: Corner {
                tet: g.neighbor,
                vertex: g.perm.apply(c.vertex),
            },
            to_face: g.perm.apply(face),
        }
    }

    /// BFS spanning tree of the link of `cusp` and its non-tree crossings.
    pub fn cusp_link(&self, cusp: usize) -> CuspLink {
        let class = &self.cusp_classes[cusp];
        let root = class[0];
        let mut tree = vec![(root, None)];
        let mut seen = std::collections::BTreeSet::from([root]);
        let mut used = std::collections::BTreeSet::new();
        let mut chords = Vec::new();
        let mut head = 0;
        while head < tree.len() {
            let c = tree[head].0;
            head += 1;
            for face in (0..4).filter(|&f| f != c.vertex) {
                let step = self.cross(c, face);
                let key = (c, face);
                if used.contains(&key) {
                    continue;
                }
                used.insert(key);
                used.insert((step.to, step.to_face));
                if seen.insert(step.to) {
                    tree.push((step.to, Some(step)));
                } else {
                    chords.push(step);
                }
            }
        }
        CuspLink {
            cusp,
            root,
            tree,
            chords,
        }
    }

    /// Checks declared edge and cusp classes (as sets of incidences) against
    /// the derived ones; declaration order is irrelevant.
    pub fn check_declared_classes(
        &self,
        edges: &[Vec<(usize, usize)>],
        cusps: &[Vec<Corner>],
    ) -> Result<(), TriangulationError> {
        let norm_edges = |cls: &[Vec<(usize, usize)>]| {
            let mut v: Vec<Vec<(usize, usize)>> = cls
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    c.sort();
                    c
                })
                .collect();
            v.sort();
            v
        };
        if !edges.is_empty() && norm_edges(edges) != norm_edges(&self.edge_classes) {
            return Err(TriangulationError::ClassMismatch {
                what: "edge",
                detail: format!("derived {} classes", self.edge_classes.len()),
            });
        }
        let norm_cusps = |cls: &[Vec<Corner>]| {
            let mut v: Vec<Vec<Corner>> = cls
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    c.sort();
                    c
                })
                .collect();
            v.sort();
            v
        };
        if !cusps.is_empty() && norm_cusps(cusps) != norm_cusps(&self.cusp_classes) {
            return Err(TriangulationError::ClassMismatch {
                what: "cusp",
                detail: format!("derived {} classes", self.cusp_classes.len()),
            });
        }
        Ok(())
    }
}

/// Propagates orientations: an odd gluing permutation preserves the relative
/// orientation of the two tetrahedra, an even one reverses it.
fn orient(gluings: &[[FaceGluing; 4]]) -> Result<Vec<i8>, TriangulationError> {
    let n = gluings.len();
    let mut sign = vec![0i8; n];
    sign[0] = 1;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(t) = queue.pop_front() {
        for g in &gluings[t] {
            let s = if g.perm.is_even() { -sign[t] } else { sign[t] };
            match sign[g.neighbor] {
                0 => {
                    sign[g.neighbor] = s;
                    queue.push_back(g.neighbor);
                }
                x if x != s => return Err(TriangulationError::NonOrientable),
                _ => {}
            }
        }
    }
    if sign.contains(&0) {
        // disconnected pieces keep their own vertex order
        for s in sign.iter_mut().filter(|s| **s == 0) {
            *s = 1;
        }
    }
    Ok(sign)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn glue(neighbor: usize, perm: &str, word: &str) -> FaceGluing {
        FaceGluing {
            neighbor,
            perm: Perm4::parse(perm).unwrap(),
            word: word.to_string(),
        }
    }

    pub(crate) fn figure8() -> IdealTriangulation {
        IdealTriangulation::new(vec![
            [glue(1, "0132", "x"), glue(1, "1230", "y"), glue(1, "2310", "z"), glue(1, "2103", "1")],
            [
                glue(0, "0132", "x^-1"),
                glue(0, "3201", "z^-1"),
                glue(0, "3012", "y^-1"),
                glue(0, "2103", "1"),
            ],
        ])
        .unwrap()
    }

    #[test]
    fn figure_eight_classes() {
        let t = figure8();
        assert_eq!(t.edge_classes().len(), 2);
        assert_eq!(t.cusp_classes().len(), 1);
        assert!(t.is_consistently_ordered());
        for class in t.edge_classes() {
            assert_eq!(class.len(), 6);
        }
        let link = t.cusp_link(0);
        assert_eq!(link.tree.len(), 8);
        // 12 link edges, 7 tree edges
        assert_eq!(link.chords.len(), 5);
        for chord in &link.chords {
            let cycle = link.cycle(chord);
            assert!(!cycle.is_empty());
            for pair in cycle.windows(2) {
                assert_eq!(pair[0].to, pair[1].from);
            }
            assert_eq!(cycle[0].from, cycle[cycle.len() - 1].to);
        }
    }

    #[test]
    fn permutation_basics() {
        let p = Perm4::parse("2310").unwrap();
        assert_eq!(p.inverse().inverse(), p);
        assert!(!p.is_even());
        assert!(Perm4::parse("0123").unwrap().is_even());
        assert!(Perm4::parse("0112").is_err());
        assert!(Perm4::parse("012").is_err());
        assert_eq!(p.to_string(), "2310");
    }

    #[test]
    fn broken_involution_is_reported() {
        let err = IdealTriangulation::new(vec![
            [glue(1, "0132", "x"), glue(1, "1230", "y"), glue(1, "2310", "z"), glue(1, "2103", "1")],
            [
                glue(0, "0132", "x^-1"),
                glue(0, "3201", "z^-1"),
                glue(0, "2103", "y^-1"),
                glue(0, "2103", "1"),
            ],
        ])
        .unwrap_err();
        assert!(matches!(err, TriangulationError::NotInvolutive { .. }), "{err}");
    }

    #[test]
    fn declared_classes_are_compared_as_sets() {
        let t = figure8();
        let mut edges: Vec<Vec<(usize, usize)>> = t.edge_classes().to_vec();
        edges.reverse();
        assert!(t.check_declared_classes(&edges, &[]).is_ok());
        edges[0].pop();
        assert!(t.check_declared_classes(&edges, &[]).is_err());
    }

    /// No orientable single-tetrahedron gluing has one edge class, so every
    /// one of them fails validation.
    #[test]
    fn single_tetrahedron_gluings_are_rejected() {
        let odd: Vec<Perm4> = (0..256u32)
            .filter_map(|n| Perm4::new([(n & 3) as u8, (n >> 2 & 3) as u8, (n >> 4 & 3) as u8, (n >> 6) as u8]).ok())
            .filter(|p| !p.is_even())
            .collect();
        let mut tried = 0;
        for [(a, b), (c, d)] in [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]] {
            for p in odd.iter().filter(|p| p.apply(a) == b) {
                for q in odd.iter().filter(|q| q.apply(c) == d) {
                    let mut faces: [FaceGluing; 4] = std::array::from_fn(|_| glue(0, "0123", "1"));
                    faces[a].perm = *p;
                    faces[b].perm = p.inverse();
                    faces[c].perm = *q;
                    faces[d].perm = q.inverse();
                    tried += 1;
                    assert!(IdealTriangulation::new(vec![faces]).is_err());
                }
            }
        }
        assert_eq!(tried, 27);
    }
}
