//! Sampled limit sets, a polygonal Jordan-curve model of them, side
//! classification on the sphere, and sampled checks of the precise-invariance
//! conditions behind the two combination theorems.
//!
//! Every check here is one-sided: a violation is a concrete counterexample on
//! a sampled probe, a pass is evidence only.

use crate::moebius::{classify, fixed_points_tol, ElementKind, MoebiusMatrix, SpherePoint};
use crate::presentation::{GroupWord, Letter};
use crate::representation::MatrixRepresentation;
use crate::scalar::{cx, Cx, Real};
use num_complex::Complex;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitSetError {
    #[error("no non-elliptic element among words of length at most {max_word_length}")]
    EmptySample { max_word_length: usize },
    #[error("need at least 3 sample points to build a curve, got {got}")]
    TooFewPoints { got: usize },
    #[error("chain still has {crossings} self-crossings after repair; sample more densely (larger max word length)")]
    ChainingFailed { crossings: usize },
    #[error("curves come within {distance:e} of each other (separation tolerance {sep_tol:e})")]
    CurvesIntersect { distance: f64, sep_tol: f64 },
    #[error("region identification failed: {0}")]
    RegionIdentification(String),
    #[error("no probes could be placed in region {region}")]
    NoProbes { region: &'static str },
}

type Vec3<T> = [T; 3];

fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dist3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    let d = sub(a, b);
    dot3(d, d).sqrt()
}

/// Euclidean distance in `R³` from `p` to the segment `[a, b]`.
fn segment_distance<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>) -> T {
    let ab = sub(b, a);
    let len2 = dot3(ab, ab);
    let t = if len2 > T::zero() {
        (dot3(sub(p, a), ab) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    dist3(p, [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]])
}

/// Attracting fixed points of words in a generating set, deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSetSample<T: Real> {
    pub points: Vec<SpherePoint<T>>,
    /// For each point, a word (in generator indices) it is a fixed point of.
    pub witnesses: Vec<GroupWord>,
    pub max_word_length: usize,
    pub generators: Vec<MoebiusMatrix<T>>,
    pub dedup_radius: T,
}

/// Enumerates reduced words of length `1..=max_word_length` by length and
/// collects the attracting fixed point of every non-elliptic, nontrivial
/// image. Points closer than `dedup_radius` to an earlier point are dropped,
/// so the sample at length `L` is contained in the sample at any larger
/// length.
pub fn sample_limit_set<T: Real>(
    gens: &[MoebiusMatrix<T>],
    max_word_length: usize,
    dedup_radius: T,
) -> Result<LimitSetSample<T>, LimitSetError> {
    let letters: Vec<Letter> = (0..gens.len())
        .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
        .collect();
    let image = |l: &Letter| {
        if l.inverse {
            gens[l.generator].inverse()
        } else {
            gens[l.generator]
        }
    };
    let kind_tol = T::tol(1e-9);
    let mut dedup = Dedup::new(dedup_radius);
    let mut points = Vec::new();
    let mut witnesses = Vec::new();
    let mut level: Vec<(Vec<Letter>, MoebiusMatrix<T>)> = vec![(Vec::new(), MoebiusMatrix::identity())];
    for _len in 1..=max_word_length {
        level = level
            .par_iter()
            .flat_map_iter(|(w, m)| {
                letters
                    .iter()
                    .filter(move |l| w.last() != Some(&l.inv()))
                    .map(move |l| {
                        let mut w2 = w.clone();
                        w2.push(*l);
                        (w2, *m * image(l))
                    })
            })
            .collect();
        let fixed: Vec<Option<SpherePoint<T>>> = level
            .par_iter()
            .map(|(_, m)| {
                let kind = classify(m, kind_tol).kind;
                if matches!(kind, ElementKind::Elliptic | ElementKind::Identity) {
                    return None;
                }
                fixed_points_tol(m, kind_tol).ok().map(|fp| fp[0])
            })
            .collect();
        for ((w, _), p) in level.iter().zip(fixed) {
            if let Some(p) = p {
                if dedup.insert(p.to_unit_vector()) {
                    points.push(p);
                    witnesses.push(GroupWord::new(w.iter().copied()));
                }
            }
        }
    }
    if points.is_empty() {
        return Err(LimitSetError::EmptySample { max_word_length });
    }
    Ok(LimitSetSample {
        points,
        witnesses,
        max_word_length,
        generators: gens.to_vec(),
        dedup_radius,
    })
}

/// Grid hash over unit vectors for radius-based deduplication.
struct Dedup<T: Real> {
    radius: T,
    cells: HashMap<(i64, i64, i64), Vec<Vec3<T>>>,
}

impl<T: Real> Dedup<T> {
    fn new(radius: T) -> Self {
        Self {
            radius,
            cells: HashMap::new(),
        }
    }

    fn key(&self, x: Vec3<T>) -> (i64, i64, i64) {
        let r = self.radius.max(T::epsilon());
        let k = |c: T| (c / r).floor().to_i64().unwrap_or(0);
        (k(x[0]), k(x[1]), k(x[2]))
    }

    /// Inserts unless within `radius` of a stored point.
    fn insert(&mut self, x: Vec3<T>) -> bool {
        let (i, j, k) = self.key(x);
        for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    if let Some(cell) = self.cells.get(&(i + di, j + dj, k + dk)) {
                        if cell.iter().any(|y| dist3(x, *y) < self.radius) {
                            return false;
                        }
                    }
                }
            }
        }
        self.cells.entry((i, j, k)).or_default().push(x);
        true
    }
}

/// Stereographic chart sending a chosen pole to infinity by a rotation of the
/// sphere, optionally followed by complex conjugation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart<T: Real> {
    pub pole: SpherePoint<T>,
    rotation: MoebiusMatrix<T>,
    pub mirrored: bool,
}

impl<T: Real> Chart<T> {
    pub fn with_pole(pole: SpherePoint<T>, mirrored: bool) -> Self {
        let (u, v) = (pole.u, pole.v);
        let n = (u.norm_sqr() + v.norm_sqr()).sqrt();
        let k = cx(n.recip(), T::zero());
        let rotation = MoebiusMatrix::new_unchecked(u.conj() * k, v.conj() * k, -v * k, u * k);
        Self {
            pole,
            rotation,
            mirrored,
        }
    }

    /// Pole farthest (in chordal distance) from `points` among a fixed
    /// Fibonacci lattice of candidates.
    pub fn avoiding(points: &[Vec3<T>]) -> Self {
        let n = 1500;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let best = (0..n)
            .into_par_iter()
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                let c = [T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z)];
                let d = points.iter().map(|p| dist3(*p, c)).fold(T::infinity(), T::min);
                (i, c, d)
            })
            .reduce(
                || (usize::MAX, [T::zero(); 3], T::neg_infinity()),
                |a, b| {
                    if b.2 > a.2 || (b.2 == a.2 && b.0 < a.0) {
                        b
                    } else {
                        a
                    }
                },
            );
        Self::with_pole(SpherePoint::from_unit_vector(best.1), false)
    }

    /// Chart coordinate, `None` at the pole.
    pub fn coords(&self, p: &SpherePoint<T>) -> Option<Cx<T>> {
        self.rotation.apply(p).to_complex().map(|z| if self.mirrored { z.conj() } else { z })
    }

    pub fn mirror(&self) -> Self {
        Self {
            mirrored: !self.mirrored,
            ..*self
        }
    }
}

/// A closed polygonal chain through the sample, ordered along the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveModel<T: Real> {
    pub points: Vec<SpherePoint<T>>,
    unit: Vec<Vec3<T>>,
    /// Largest chordal distance between consecutive points.
    pub max_gap: T,
}

impl<T: Real> CurveModel<T> {
    /// Wraps an already ordered loop without repair.
    pub fn from_ordered(points: Vec<SpherePoint<T>>) -> Self {
        let unit: Vec<Vec3<T>> = points.iter().map(|p| p.to_unit_vector()).collect();
        let max_gap = max_gap(&unit, &(0..unit.len()).collect::<Vec<_>>());
        Self { points, unit, max_gap }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn unit_vectors(&self) -> &[Vec3<T>] {
        &self.unit
    }

    /// Distance in `R³` from `p` to the chain.
    pub fn distance(&self, p: &SpherePoint<T>) -> T {
        self.distance_unit(p.to_unit_vector())
    }

    /// Signed clearance of `p` from the chain: the minimum over chords of the
    /// distance to the chord minus `max(band_tol, ½·chord length)`. The true
    /// curve between two consecutive samples is only known to stay near the
    /// chord at the scale of the chord, so negative clearance means the side
    /// of `p` cannot be trusted.
    pub fn clearance(&self, p: &SpherePoint<T>, band_tol: T) -> T {
        let x = p.to_unit_vector();
        let n = self.unit.len();
        let half = T::lit(0.5);
        (0..n)
            .map(|i| {
                let (a, b) = (self.unit[i], self.unit[(i + 1) % n]);
                segment_distance(x, a, b) - band_tol.max(half * dist3(a, b))
            })
            .fold(T::infinity(), T::min)
    }

    fn distance_unit(&self, x: Vec3<T>) -> T {
        let n = self.unit.len();
        (0..n)
            .map(|i| segment_distance(x, self.unit[i], self.unit[(i + 1) % n]))
            .fold(T::infinity(), T::min)
    }

    /// Image of the loop under `m`, in the same order.
    pub fn mapped(&self, m: &MoebiusMatrix<T>) -> Self {
        Self::from_ordered(self.points.iter().map(|p| m.apply(p)).collect())
    }
}

fn max_gap<T: Real>(unit: &[Vec3<T>], order: &[usize]) -> T {
    let n = order.len();
    (0..n)
        .map(|i| dist3(unit[order[i]], unit[order[(i + 1) % n]]))
        .fold(T::zero(), T::max)
}

/// Orders the sample into a loop: greedy nearest-neighbour chaining, 2-opt
/// over nearest-neighbour candidate lists in the chordal metric, then
/// removal of self-crossings in a chart that avoids the sample.
pub fn build_curve_model<T: Real>(sample: &LimitSetSample<T>) -> Result<CurveModel<T>, LimitSetError> {
    let n = sample.points.len();
    if n < 3 {
        return Err(LimitSetError::TooFewPoints { got: n });
    }
    let unit: Vec<Vec3<T>> = sample.points.iter().map(|p| p.to_unit_vector()).collect();
    let mut order = greedy_chain(&unit);
    let neighbours = nearest_lists(&unit, 12.min(n - 1));
    two_opt(&unit, &mut order, &neighbours);

    let chart = Chart::avoiding(&unit);
    let planar: Vec<Cx<T>> = sample
        .points
        .iter()
        .map(|p| chart.coords(p).expect("pole avoids the sample"))
        .collect();
    let mut crossings = uncross(&planar, &mut order);
    if crossings > 0 {
        // chordal 2-opt may have undone planar repairs; one more round of each
        two_opt(&unit, &mut order, &neighbours);
        crossings = uncross(&planar, &mut order);
    }
    if crossings > 0 {
        return Err(LimitSetError::ChainingFailed { crossings });
    }
    let points = order.iter().map(|&i| sample.points[i]).collect();
    Ok(CurveModel::from_ordered(points))
}

fn greedy_chain<T: Real>(unit: &[Vec3<T>]) -> Vec<usize> {
    let n = unit.len();
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = 0;
    used[0] = true;
    order.push(0);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !used[j])
            .map(|j| (j, dist3(unit[cur], unit[j])))
            .fold((usize::MAX, T::infinity()), |a, b| if b.1 < a.1 { b } else { a })
            .0;
        used[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

fn nearest_lists<T: Real>(unit: &[Vec3<T>], k: usize) -> Vec<Vec<usize>> {
    (0..unit.len())
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(T, usize)> = (0..unit.len())
                .filter(|&j| j != i)
                .map(|j| (dist3(unit[i], unit[j]), j))
                .collect();
            let k = k.min(d.len());
            d.select_nth_unstable_by(k.saturating_sub(1), |a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            d.truncate(k);
            d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            d.into_iter().map(|x| x.1).collect()
        })
        .collect()
}

/// Reverses `order[i+1..=j]` (cyclic positions, `i < j`).
fn reverse_segment(order: &mut [usize], pos: &mut [usize], i: usize, j: usize) {
    order[i + 1..=j].reverse();
    for (k, &c) in order.iter().enumerate().take(j + 1).skip(i + 1) {
        pos[c] = k;
    }
}

fn two_opt<T: Real>(unit: &[Vec3<T>], order: &mut [usize], neighbours: &[Vec<usize>]) {
    let n = order.len();
    if n < 4 {
        return;
    }
    let mut pos = vec![0; n];
    for (k, &c) in order.iter().enumerate() {
        pos[c] = k;
    }
    let tiny = T::epsilon() * T::lit(16.0);
    for _pass in 0..50 {
        let mut improved = false;
        for i in 0..n {
            let a = order[i];
            let b = order[(i + 1) % n];
            let dab = dist3(unit[a], unit[b]);
            for &c in &neighbours[a] {
                let dac = dist3(unit[a], unit[c]);
                if dac >= dab {
                    break;
                }
                let j = pos[c];
                let d = order[(j + 1) % n];
                if c == b || d == a {
                    continue;
                }
                let gain = dab + dist3(unit[c], unit[d]) - dac - dist3(unit[b], unit[d]);
                if gain > tiny {
                    let i = pos[a];
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    reverse_segment(order, &mut pos, lo, hi);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

fn orient<T: Real>(a: Cx<T>, b: Cx<T>, c: Cx<T>) -> T {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn segments_cross<T: Real>(p1: Cx<T>, p2: Cx<T>, q1: Cx<T>, q2: Cx<T>) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > T::zero() && d2 < T::zero()) || (d1 < T::zero() && d2 > T::zero()))
        && ((d3 > T::zero() && d4 < T::zero()) || (d3 < T::zero() && d4 > T::zero()))
}

/// First crossing pair of non-adjacent edges `(i, j)`, `i < j`.
fn find_crossing<T: Real>(planar: &[Cx<T>], order: &[usize]) -> Option<(usize, usize)> {
    let n = order.len();
    let bbox = |i: usize| {
        let (a, b) = (planar[order[i]], planar[order[(i + 1) % n]]);
        (a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im))
    };
    let boxes: Vec<_> = (0..n).map(bbox).collect();
    (0..n)
        .into_par_iter()
        .filter_map(|i| {
            ((i + 2)..n)
                .filter(|&j| !(i == 0 && j == n - 1))
                .find(|&j| {
                    let (bi, bj) = (boxes[i], boxes[j]);
                    if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                        return false;
                    }
                    segments_cross(
                        planar[order[i]],
                        planar[order[(i + 1) % n]],
                        planar[order[j]],
                        planar[order[(j + 1) % n]],
                    )
                })
                .map(|j| (i, j))
        })
        .min()
}

fn count_crossings<T: Real>(planar: &[Cx<T>], order: &[usize]) -> usize {
    let n = order.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 2)..n)
                .filter(|&j| !(i == 0 && j == n - 1))
                .filter(|&j| {
                    segments_cross(
                        planar[order[i]],
                        planar[order[(i + 1) % n]],
                        planar[order[j]],
                        planar[order[(j + 1) % n]],
                    )
                })
                .count()
        })
        .sum()
}

/// Planar 2-opt on crossing edges; each move shortens the planar length, so
/// the loop terminates. Returns the number of crossings left.
fn uncross<T: Real>(planar: &[Cx<T>], order: &mut [usize]) -> usize {
    let n = order.len();
    let mut pos = vec![0; n];
    for (k, &c) in order.iter().enumerate() {
        pos[c] = k;
    }
    for _ in 0..(4 * n) {
        match find_crossing(planar, order) {
            Some((i, j)) => reverse_segment(order, &mut pos, i, j),
            None => return 0,
        }
    }
    count_crossings(planar, order)
}

/// Label of a point relative to an oriented curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Left of the loop in its traversal direction.
    One,
    Two,
    OnCurve,
}

impl Side {
    pub fn opposite(self) -> Self {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
            Side::OnCurve => Side::OnCurve,
        }
    }
}

/// Winding-number side classification of a [`CurveModel`] in a chart.
#[derive(Debug, Clone)]
pub struct SideClassifier<T: Real> {
    pub curve: CurveModel<T>,
    pub chart: Chart<T>,
    planar: Vec<Cx<T>>,
    ccw: bool,
    /// Absolute part of the ambiguity band; see [`CurveModel::clearance`].
    pub band: T,
}

impl<T: Real> SideClassifier<T> {
    /// Classifier in a chart whose pole avoids the curve.
    pub fn new(curve: CurveModel<T>, band: T) -> Self {
        let chart = Chart::avoiding(curve.unit_vectors());
        Self::with_chart(curve, chart, band)
    }

    /// # Panics
    /// Panics if the chart's pole lies on the sampled curve.
    pub fn with_chart(curve: CurveModel<T>, chart: Chart<T>, band: T) -> Self {
        let planar: Vec<Cx<T>> = curve
            .points
            .iter()
            .map(|p| chart.coords(p).expect("chart pole must avoid the curve"))
            .collect();
        let n = planar.len();
        let area = (0..n).fold(T::zero(), |acc, i| {
            let (a, b) = (planar[i], planar[(i + 1) % n]);
            acc + a.re * b.im - b.re * a.im
        });
        Self {
            curve,
            chart,
            planar,
            ccw: area > T::zero(),
            band,
        }
    }

    pub fn planar(&self) -> &[Cx<T>] {
        &self.planar
    }

    pub fn winding_number(&self, p: &SpherePoint<T>) -> i64 {
        let Some(z) = self.chart.coords(p) else {
            return 0;
        };
        let n = self.planar.len();
        let mut wn = 0;
        for i in 0..n {
            let (a, b) = (self.planar[i], self.planar[(i + 1) % n]);
            if a.im <= z.im {
                if b.im > z.im && orient(a, b, z) > T::zero() {
                    wn += 1;
                }
            } else if b.im <= z.im && orient(a, b, z) < T::zero() {
                wn -= 1;
            }
        }
        wn
    }

    /// Side of `p`, ignoring the band.
    pub fn raw_side(&self, p: &SpherePoint<T>) -> Side {
        if (self.winding_number(p) != 0) == self.ccw {
            Side::One
        } else {
            Side::Two
        }
    }

    /// Side of `p`, or [`Side::OnCurve`] when its clearance is negative.
    pub fn side(&self, p: &SpherePoint<T>) -> Side {
        if self.curve.clearance(p, self.band) < T::zero() {
            Side::OnCurve
        } else {
            self.raw_side(p)
        }
    }
}

/// Outcome of one sampled condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Nothing to check (empty word sample).
    Vacuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness<T: Real> {
    pub word: String,
    pub probe: SpherePoint<T>,
    pub image: SpherePoint<T>,
    pub expected: String,
    pub observed: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport<T: Real> {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Probe images that were classified.
    pub checked: usize,
    /// Probe images inside the ambiguity band, not counted either way.
    pub ambiguous: usize,
    pub violations: usize,
    /// Smallest signed distance to the region boundary (negative on violation).
    pub worst_margin: Option<T>,
    pub witness: Option<Witness<T>>,
}

/// How `A` acts on the two complementary sides of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideAction {
    Preserves,
    Swaps,
    Mixed,
    Undetermined,
}

/// How the side playing `B₁` was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum B1Choice {
    ReferencePoint,
    Automatic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskitOptions<T: Real> {
    /// Minimum distance from the chain for a point to get a side label.
    pub band_tol: T,
    /// Required separation of the two curves in the HNN case.
    pub sep_tol: T,
    /// Allowed distance of `A`-images of curve samples from the chain;
    /// defaults to the curve's maximum gap.
    pub curve_tol: Option<T>,
    pub probes_per_region: usize,
    pub candidate_pool: usize,
    pub seed: u64,
    /// A point known to lie in `B₁`; without one, `B₁` is the side that the
    /// sampled `G₁ − H` (or `G₀ − H`) words move off itself more often.
    pub b1_point: Option<SpherePoint<T>>,
}

impl<T: Real> Default for MaskitOptions<T> {
    fn default() -> Self {
        Self {
            band_tol: T::tol(1e-6),
            sep_tol: T::tol(1e-4),
            curve_tol: None,
            probes_per_region: 64,
            candidate_pool: 4096,
            seed: 0,
            b1_point: None,
        }
    }
}

/// A word sample with its matrix images and printable names.
#[derive(Debug, Clone)]
pub struct WordSample<T: Real> {
    pub names: Vec<String>,
    pub matrices: Vec<MoebiusMatrix<T>>,
}

impl<T: Real> WordSample<T> {
    pub fn from_words(rep: &MatrixRepresentation<T>, words: &[GroupWord]) -> Self {
        Self {
            names: words.iter().map(|w| rep.presentation().format_word(w)).collect(),
            matrices: rep.evaluate_all(words),
        }
    }

    pub fn single(name: impl Into<String>, m: MoebiusMatrix<T>) -> Self {
        Self {
            names: vec![name.into()],
            matrices: vec![m],
        }
    }

    pub fn conjugated_by(&self, a: &MoebiusMatrix<T>, prefix: &str) -> Self {
        Self {
            names: self.names.iter().map(|n| format!("{prefix}({n})")).collect(),
            matrices: self.matrices.iter().map(|m| m.conjugated_by(a)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

fn uniform_candidates<T: Real>(count: usize, seed: u64) -> Vec<SpherePoint<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            SpherePoint::from_unit_vector([T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z)])
        })
        .collect()
}

/// Farthest-point selection: repeatedly takes the candidate maximizing the
/// minimum of its boundary distance and its distance to probes already chosen.
fn farthest_point_probes<T: Real>(candidates: &[(SpherePoint<T>, T)], count: usize) -> Vec<SpherePoint<T>> {
    let mut score: Vec<T> = candidates.iter().map(|c| c.1).collect();
    let unit: Vec<Vec3<T>> = candidates.iter().map(|c| c.0.to_unit_vector()).collect();
    let mut chosen = Vec::new();
    let mut taken = vec![false; candidates.len()];
    for _ in 0..count.min(candidates.len()) {
        let best = (0..candidates.len())
            .filter(|&i| !taken[i])
            .fold(None::<usize>, |acc, i| match acc {
                Some(b) if score[b] >= score[i] => Some(b),
                _ => Some(i),
            });
        let Some(b) = best else { break };
        taken[b] = true;
        chosen.push(candidates[b].0);
        for i in 0..candidates.len() {
            score[i] = score[i].min(dist3(unit[i], unit[b]));
        }
    }
    chosen
}

/// Region structure of the sphere used by a family of checks.
trait Regions<T: Real>: Sync {
    /// Region label and distance to the region boundary; `None` inside the
    /// ambiguity band.
    fn locate(&self, p: &SpherePoint<T>) -> Option<(usize, T)>;
    fn region_name(&self, r: usize) -> &'static str;
}

struct AmalgamRegions<'a, T: Real> {
    classifier: &'a SideClassifier<T>,
    b1: Side,
}

impl<T: Real> Regions<T> for AmalgamRegions<'_, T> {
    fn locate(&self, p: &SpherePoint<T>) -> Option<(usize, T)> {
        let d = self.classifier.curve.clearance(p, self.classifier.band);
        if d < T::zero() {
            return None;
        }
        let s = self.classifier.raw_side(p);
        Some((if s == self.b1 { 0 } else { 1 }, d))
    }

    fn region_name(&self, r: usize) -> &'static str {
        ["B1", "B2"][r]
    }
}

/// Checks that every map in `maps` sends every probe into one of `allowed`.
fn check_maps<T: Real>(
    name: &'static str,
    regions: &dyn Regions<T>,
    maps: &WordSample<T>,
    probes: &[SpherePoint<T>],
    allowed: &[usize],
) -> ConditionReport<T> {
    if maps.is_empty() || probes.is_empty() {
        return ConditionReport {
            name,
            status: CheckStatus::Vacuous,
            checked: 0,
            ambiguous: 0,
            violations: 0,
            worst_margin: None,
            witness: None,
        };
    }
    let results: Vec<(usize, usize, Option<(usize, T)>, SpherePoint<T>)> = (0..maps.matrices.len())
        .into_par_iter()
        .flat_map_iter(|w| {
            probes.iter().enumerate().map(move |(k, p)| {
                let img = maps.matrices[w].apply(p);
                (w, k, regions.locate(&img), img)
            })
        })
        .collect();
    let mut report = ConditionReport {
        name,
        status: CheckStatus::Pass,
        checked: 0,
        ambiguous: 0,
        violations: 0,
        worst_margin: None,
        witness: None,
    };
    let mut worst_violation: Option<T> = None;
    for (w, k, loc, img) in results {
        let Some((region, d)) = loc else {
            report.ambiguous += 1;
            continue;
        };
        report.checked += 1;
        let ok = allowed.contains(&region);
        let margin = if ok { d } else { -d };
        report.worst_margin = Some(report.worst_margin.map_or(margin, |m: T| m.min(margin)));
        if !ok {
            report.violations += 1;
            if worst_violation.is_none_or(|m| margin < m) {
                worst_violation = Some(margin);
                report.witness = Some(Witness {
                    word: maps.names[w].clone(),
                    probe: probes[k],
                    image: img,
                    expected: allowed.iter().map(|&r| regions.region_name(r)).collect::<Vec<_>>().join("|"),
                    observed: regions.region_name(region).to_string(),
                });
            }
        }
    }
    if report.violations > 0 {
        report.status = CheckStatus::Fail;
    } else if report.checked == 0 {
        report.status = CheckStatus::Vacuous;
    }
    report
}

/// Checks that `a` maps every curve sample within `tol` of `target`.
fn check_curve_image<T: Real>(
    name: &'static str,
    source: &CurveModel<T>,
    target: &CurveModel<T>,
    a: &MoebiusMatrix<T>,
    label: &str,
    tol: T,
) -> ConditionReport<T> {
    let dists: Vec<(usize, T)> = source
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, target.distance(&a.apply(p))))
        .collect();
    let violations = dists.iter().filter(|d| !(d.1 <= tol)).count();
    let worst = dists
        .iter()
        .copied()
        .fold((0, T::zero()), |acc, d| if d.1 > acc.1 { d } else { acc });
    let witness = (violations > 0).then(|| Witness {
        word: label.to_string(),
        probe: source.points[worst.0],
        image: a.apply(&source.points[worst.0]),
        expected: "curve".into(),
        observed: "off curve".into(),
    });
    ConditionReport {
        name,
        status: if violations > 0 { CheckStatus::Fail } else { CheckStatus::Pass },
        checked: dists.len(),
        ambiguous: 0,
        violations,
        worst_margin: Some(tol - worst.1),
        witness,
    }
}

/// Measures whether `a` keeps or exchanges the sides of a curve.
fn measure_side_action<T: Real>(
    locate: impl Fn(&SpherePoint<T>) -> Option<Side> + Sync,
    a: &MoebiusMatrix<T>,
    probes: &[(Side, SpherePoint<T>)],
) -> (SideAction, usize, usize) {
    let outcomes: Vec<Option<bool>> = probes
        .par_iter()
        .map(|(s, p)| locate(&a.apply(p)).map(|t| t == *s))
        .collect();
    let kept = outcomes.iter().filter(|o| **o == Some(true)).count();
    let moved = outcomes.iter().filter(|o| **o == Some(false)).count();
    let action = match (kept, moved) {
        (0, 0) => SideAction::Undetermined,
        (_, 0) => SideAction::Preserves,
        (0, _) => SideAction::Swaps,
        _ => SideAction::Mixed,
    };
    (action, kept, moved)
}

fn side_action_report<T: Real>(name: &'static str, action: SideAction, kept: usize, moved: usize) -> ConditionReport<T> {
    ConditionReport {
        name,
        status: match action {
            SideAction::Mixed => CheckStatus::Fail,
            SideAction::Undetermined => CheckStatus::Vacuous,
            _ => CheckStatus::Pass,
        },
        checked: kept + moved,
        ambiguous: 0,
        violations: if action == SideAction::Mixed { kept.min(moved) } else { 0 },
        worst_margin: None,
        witness: None,
    }
}

/// Probes per side of a single curve.
fn side_probes<T: Real>(
    classifier: &SideClassifier<T>,
    opts: &MaskitOptions<T>,
) -> Result<(Vec<SpherePoint<T>>, Vec<SpherePoint<T>>), LimitSetError> {
    let cands = uniform_candidates::<T>(opts.candidate_pool, opts.seed);
    let located: Vec<(Side, SpherePoint<T>, T)> = cands
        .par_iter()
        .map(|p| {
            let d = classifier.curve.clearance(p, classifier.band);
            let s = if d < T::zero() { Side::OnCurve } else { classifier.raw_side(p) };
            (s, *p, d)
        })
        .collect();
    let pick = |side: Side| {
        let pool: Vec<(SpherePoint<T>, T)> = located
            .iter()
            .filter(|c| c.0 == side)
            .map(|c| (c.1, c.2))
            .collect();
        farthest_point_probes(&pool, opts.probes_per_region)
    };
    let one = pick(Side::One);
    let two = pick(Side::Two);
    if one.is_empty() {
        return Err(LimitSetError::NoProbes { region: "side one" });
    }
    if two.is_empty() {
        return Err(LimitSetError::NoProbes { region: "side two" });
    }
    Ok((one, two))
}

/// Counts how often `maps` send probes of `from` off their own side.
fn departure_count<T: Real>(classifier: &SideClassifier<T>, maps: &WordSample<T>, probes: &[SpherePoint<T>], from: Side) -> usize {
    maps.matrices
        .par_iter()
        .map(|m| {
            probes
                .iter()
                .filter(|p| classifier.side(&m.apply(p)) == from.opposite())
                .count()
        })
        .sum()
}

fn pick_b1<T: Real>(
    classifier: &SideClassifier<T>,
    opts: &MaskitOptions<T>,
    movers: &WordSample<T>,
    one: &[SpherePoint<T>],
    two: &[SpherePoint<T>],
) -> Result<(Side, B1Choice), LimitSetError> {
    if let Some(p) = &opts.b1_point {
        return match classifier.side(p) {
            Side::OnCurve => Err(LimitSetError::RegionIdentification(
                "reference point for B1 lies on the curve".into(),
            )),
            s => Ok((s, B1Choice::ReferencePoint)),
        };
    }
    let from_one = departure_count(classifier, movers, one, Side::One);
    let from_two = departure_count(classifier, movers, two, Side::Two);
    Ok((if from_two > from_one { Side::Two } else { Side::One }, B1Choice::Automatic))
}

/// Sampled check of the separating-case hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct AmalgamReport<T: Real> {
    pub conditions: Vec<ConditionReport<T>>,
    pub side_action: SideAction,
    pub b1_side: Side,
    pub b1_choice: B1Choice,
    pub probes_b1: usize,
    pub probes_b2: usize,
    pub max_gap: T,
    pub curve_tol: T,
    pub band: T,
}

impl<T: Real> AmalgamReport<T> {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Sampled precise-invariance checks for the amalgam: (i) `H` keeps each side,
/// (ii) `G₁ − H` maps `B₁` into `B₂`, (iii) `A` maps the curve to itself,
/// (iv) `A` preserves or swaps the sides (measured), (v) `A(G₂ − H)A⁻¹` maps
/// `B₂` into `B₁`.
pub fn check_precise_invariance_amalgam<T: Real>(
    curve: &CurveModel<T>,
    h: &WordSample<T>,
    g1: &WordSample<T>,
    g2: &WordSample<T>,
    a: &MoebiusMatrix<T>,
    opts: &MaskitOptions<T>,
) -> Result<AmalgamReport<T>, LimitSetError> {
    let curve_tol = opts.curve_tol.unwrap_or(curve.max_gap);
    let band = opts.band_tol;
    let classifier = SideClassifier::new(curve.clone(), band);
    let (one, two) = side_probes(&classifier, opts)?;
    let (b1, b1_choice) = pick_b1(&classifier, opts, g1, &one, &two)?;
    let (p1, p2) = if b1 == Side::One { (one, two) } else { (two, one) };
    let regions = AmalgamRegions {
        classifier: &classifier,
        b1,
    };

    let mut conditions = vec![
        check_maps("h_keeps_b1", &regions, h, &p1, &[0]),
        check_maps("h_keeps_b2", &regions, h, &p2, &[1]),
        check_maps("g1_maps_b1_into_b2", &regions, g1, &p1, &[1]),
        check_curve_image("a_maps_curve_to_itself", curve, curve, a, "A", curve_tol),
    ];
    let tagged: Vec<(Side, SpherePoint<T>)> = p1
        .iter()
        .map(|p| (b1, *p))
        .chain(p2.iter().map(|p| (b1.opposite(), *p)))
        .collect();
    let locate = |p: &SpherePoint<T>| match classifier.side(p) {
        Side::OnCurve => None,
        s => Some(s),
    };
    let (side_action, kept, moved) = measure_side_action(locate, a, &tagged);
    conditions.push(side_action_report("a_side_action", side_action, kept, moved));
    let conj = g2.conjugated_by(a, "A");
    conditions.push(check_maps("a_g2_a_inv_maps_b2_into_b1", &regions, &conj, &p2, &[0]));
    Ok(AmalgamReport {
        conditions,
        side_action,
        b1_side: b1,
        b1_choice,
        probes_b1: p1.len(),
        probes_b2: p2.len(),
        max_gap: curve.max_gap,
        curve_tol,
        band,
    })
}

/// Regions `B₁`, `R`, `B₂` cut out by two disjoint curves.
struct HnnRegions<'a, T: Real> {
    w: &'a SideClassifier<T>,
    w2: &'a SideClassifier<T>,
    /// Side of `W` that contains `W₂`.
    w_side_of_w2: Side,
    /// Side of `W₂` that contains `W`.
    w2_side_of_w: Side,
}

impl<T: Real> Regions<T> for HnnRegions<'_, T> {
    fn locate(&self, p: &SpherePoint<T>) -> Option<(usize, T)> {
        let d1 = self.w.curve.clearance(p, self.w.band);
        let d2 = self.w2.curve.clearance(p, self.w2.band);
        if d1 < T::zero() || d2 < T::zero() {
            return None;
        }
        let d = d1.min(d2);
        if self.w.raw_side(p) != self.w_side_of_w2 {
            Some((0, d))
        } else if self.w2.raw_side(p) != self.w2_side_of_w {
            Some((2, d))
        } else {
            Some((1, d))
        }
    }

    fn region_name(&self, r: usize) -> &'static str {
        ["B1", "R", "B2"][r]
    }
}

/// Sampled check of the non-separating-case hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct HnnReport<T: Real> {
    pub conditions: Vec<ConditionReport<T>>,
    pub side_action: SideAction,
    pub separation: T,
    pub probes: [usize; 3],
    pub max_gap: T,
    pub curve_tol: T,
}

impl<T: Real> HnnReport<T> {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Sampled checks for the HNN case with `W₂ = f(W)`: the curves are disjoint,
/// `H` keeps the sides of `W`, `G₀ − H` moves `B₁` off itself, `f` and `fA`
/// map `R ∪ B₂` into `B₂`, and `A` maps `W` to itself (with the side action
/// measured).
pub fn check_precise_invariance_hnn<T: Real>(
    curve_w: &CurveModel<T>,
    f: &MoebiusMatrix<T>,
    a: &MoebiusMatrix<T>,
    h: &WordSample<T>,
    g0: &WordSample<T>,
    opts: &MaskitOptions<T>,
) -> Result<HnnReport<T>, LimitSetError> {
    let curve_w2 = curve_w.mapped(f);
    let separation = curve_w2
        .points
        .par_iter()
        .map(|p| curve_w.distance(p))
        .reduce(T::infinity, T::min)
        .min(curve_w.points.par_iter().map(|p| curve_w2.distance(p)).reduce(T::infinity, T::min));
    if !(separation > opts.sep_tol) {
        return Err(LimitSetError::CurvesIntersect {
            distance: separation.to_f64().unwrap_or(f64::NAN),
            sep_tol: opts.sep_tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    let curve_tol = opts.curve_tol.unwrap_or(curve_w.max_gap);
    let band = opts.band_tol;
    // one chart for both curves keeps the picture consistent; its pole must avoid both
    let both: Vec<Vec3<T>> = curve_w.unit_vectors().iter().chain(curve_w2.unit_vectors()).copied().collect();
    let chart = Chart::avoiding(&both);
    let w = SideClassifier::with_chart(curve_w.clone(), chart, band);
    let w2 = SideClassifier::with_chart(curve_w2.clone(), chart, band);

    let side_of = |cls: &SideClassifier<T>, pts: &[SpherePoint<T>]| -> Result<Side, LimitSetError> {
        let first = cls.raw_side(&pts[0]);
        if pts.iter().all(|p| cls.raw_side(p) == first) {
            Ok(first)
        } else {
            Err(LimitSetError::RegionIdentification(
                "one curve meets both sides of the other".into(),
            ))
        }
    };
    let regions = HnnRegions {
        w_side_of_w2: side_of(&w, &curve_w2.points)?,
        w2_side_of_w: side_of(&w2, &curve_w.points)?,
        w: &w,
        w2: &w2,
    };

    let cands = uniform_candidates::<T>(opts.candidate_pool, opts.seed);
    let located: Vec<Option<(usize, T)>> = cands.par_iter().map(|p| regions.locate(p)).collect();
    let mut probes: [Vec<SpherePoint<T>>; 3] = Default::default();
    for (r, slot) in probes.iter_mut().enumerate() {
        let pool: Vec<(SpherePoint<T>, T)> = cands
            .iter()
            .zip(&located)
            .filter_map(|(p, l)| l.filter(|l| l.0 == r).map(|l| (*p, l.1)))
            .collect();
        *slot = farthest_point_probes(&pool, opts.probes_per_region);
        if slot.is_empty() {
            return Err(LimitSetError::NoProbes {
                region: ["B1", "R", "B2"][r],
            });
        }
    }
    let outer: Vec<SpherePoint<T>> = probes[1].iter().chain(&probes[2]).copied().collect();
    let w_outer: Vec<SpherePoint<T>> = probes[0].clone();

    let mut conditions = vec![ConditionReport {
        name: "curves_disjoint",
        status: CheckStatus::Pass,
        checked: curve_w.len() + curve_w2.len(),
        ambiguous: 0,
        violations: 0,
        worst_margin: Some(separation - opts.sep_tol),
        witness: None,
    }];
    // H keeps the two sides of W: B1 to B1, and R ∪ B2 to R ∪ B2
    conditions.push(check_maps("h_keeps_b1", &regions, h, &w_outer, &[0]));
    conditions.push(check_maps("h_keeps_far_side_of_w", &regions, h, &outer, &[1, 2]));
    conditions.push(check_maps("g0_moves_b1_off_itself", &regions, g0, &w_outer, &[1, 2]));
    let f_sample = WordSample::single("f", *f);
    conditions.push(check_maps("f_maps_r_b2_into_b2", &regions, &f_sample, &outer, &[2]));
    conditions.push(check_curve_image("a_maps_curve_to_itself", curve_w, curve_w, a, "A", curve_tol));
    let tagged: Vec<(Side, SpherePoint<T>)> = w_outer
        .iter()
        .map(|p| (Side::One, *p))
        .chain(outer.iter().map(|p| (Side::Two, *p)))
        .collect();
    let locate = |p: &SpherePoint<T>| match regions.locate(p) {
        None => None,
        Some((0, _)) => Some(Side::One),
        Some(_) => Some(Side::Two),
    };
    let (side_action, kept, moved) = measure_side_action(locate, a, &tagged);
    conditions.push(side_action_report("a_side_action", side_action, kept, moved));
    let fa = WordSample::single("fA", *f * *a);
    conditions.push(check_maps("fa_maps_r_b2_into_b2", &regions, &fa, &outer, &[2]));
    Ok(HnnReport {
        conditions,
        side_action,
        separation,
        probes: [probes[0].len(), probes[1].len(), probes[2].len()],
        max_gap: curve_w.max_gap,
        curve_tol,
    })
}

/// Splits `words` by whether their images map the curve samples to within
/// `tol` of the curve. This is a heuristic test for membership in the
/// curve's stabilizer, used to filter coset samples when none are supplied.
pub fn split_by_curve_invariance<T: Real>(
    rep: &MatrixRepresentation<T>,
    words: &[GroupWord],
    curve: &CurveModel<T>,
    tol: T,
) -> (Vec<GroupWord>, Vec<GroupWord>) {
    let keeps: Vec<bool> = rep
        .evaluate_all(words)
        .par_iter()
        .map(|m| curve.points.iter().all(|p| curve.distance(&m.apply(p)) <= tol))
        .collect();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (w, k) in words.iter().zip(keeps) {
        if k {
            inside.push(w.clone());
        } else {
            outside.push(w.clone());
        }
    }
    (inside, outside)
}

/// All reduced words of length `1..=max_len` in the given generator indices.
pub fn enumerate_words(generators: &[usize], max_len: usize) -> Vec<GroupWord> {
    let letters: Vec<Letter> = generators
        .iter()
        .flat_map(|&g| [Letter::new(g, false), Letter::new(g, true)])
        .collect();
    let mut out = Vec::new();
    let mut level: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        level = level
            .iter()
            .flat_map(|w| {
                letters.iter().filter(|l| w.last() != Some(&l.inv())).map(|l| {
                    let mut w2 = w.clone();
                    w2.push(*l);
                    w2
                })
            })
            .collect();
        out.extend(level.iter().map(|w| GroupWord::new(w.iter().copied())));
    }
    out
}

/// Sphere point from a complex number, for fixtures and tests.
pub fn point<T: Real>(re: f64, im: f64) -> SpherePoint<T> {
    SpherePoint::from_complex(Complex::new(T::lit(re), T::lit(im)))
}

/// Cayley transform sending the upper half-plane to the unit disk.
pub fn cayley<T: Real>() -> MoebiusMatrix<T> {
    let one = Complex::<T>::one();
    let i = Complex::new(T::zero(), T::one());
    MoebiusMatrix::normalized(one, -i, one, i)
}
