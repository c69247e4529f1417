//! Line-oriented text formats. Every file starts with a header line
//! `mutkit <kind> v1`; `#` starts a comment; each remaining line is a keyword
//! followed by its arguments. Errors carry the 1-based line they refer to.

use crate::moebius::{MoebiusMatrix, MoebiusTolerances, SpherePoint};
use crate::presentation::{FinitePresentation, GroupWord, PresentationError, SurfaceInclusion};
use crate::representation::{MatrixRepresentation, MutationSpec, RepresentationError, Splitting};
use crate::volume::{
    Corner, FaceGluing, IdealTriangulation, Perm4, SurfaceCycle, SurfaceVertex, TriangulationError, VolumeError,
};
use num_complex::Complex;
use std::fmt;
use thiserror::Error;

/// A message tied to a line of the input (line 0 means the whole file).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct FormatError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.diagnostics.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            diagnostics: vec![Diagnostic {
                line,
                message: message.into(),
            }],
        }
    }
}

/// The kinds of file, named by the second word of the header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Presentation,
    Representation,
    Triangulation,
    Mutation,
    Maskit,
    Surface,
    Cover,
}

impl FileKind {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "presentation" => Self::Presentation,
            "representation" => Self::Representation,
            "triangulation" => Self::Triangulation,
            "mutation" => Self::Mutation,
            "maskit" => Self::Maskit,
            "surface" => Self::Surface,
            "cover" => Self::Cover,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Presentation => "presentation",
            Self::Representation => "representation",
            Self::Triangulation => "triangulation",
            Self::Mutation => "mutation",
            Self::Maskit => "maskit",
            Self::Surface => "surface",
            Self::Cover => "cover",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        const REP: &[&str] = &["generators", "relator", "matrix"];
        match self {
            Self::Presentation => &["generators", "relator"],
            Self::Representation => REP,
            Self::Triangulation => &["tetrahedra", "glue", "edge", "cusp"],
            Self::Mutation => &[
                "generators",
                "relator",
                "matrix",
                "surface",
                "tau",
                "order",
                "splitting",
                "side1",
                "side1-relator",
                "side1-embed",
                "side2",
                "side2-relator",
                "side2-embed",
                "complement",
                "complement-relator",
                "complement-embed",
                "phi1",
                "phi2",
                "alpha",
                "extending",
                "stable",
            ],
            Self::Maskit => &[
                "generators",
                "relator",
                "matrix",
                "case",
                "surface",
                "h",
                "g1",
                "g2",
                "g0",
                "stable",
                "conjugator",
                "tau",
                "order",
                "dedup",
                "b1-point",
            ],
            Self::Surface => &["generators", "relator", "matrix", "circle", "steps", "vertex", "triangle"],
            Self::Cover => &["triangulation", "representation", "translate", "degree"],
        }
    }
}

#[derive(Debug, Clone)]
struct Line<'a> {
    no: usize,
    key: &'a str,
    rest: &'a str,
}

struct Document<'a> {
    lines: Vec<Line<'a>>,
}

impl<'a> Document<'a> {
    fn parse(text: &'a str, expected: Option<FileKind>) -> Result<(FileKind, Self), FormatError> {
        let mut header: Option<(usize, &str)> = None;
        let mut lines = Vec::new();
        let mut diags = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if header.is_none() {
                header = Some((no, content));
                continue;
            }
            let (key, rest) = match content.split_once(char::is_whitespace) {
                Some((k, r)) => (k, r.trim()),
                None => (content, ""),
            };
            lines.push(Line { no, key, rest });
        }
        let (hline, htext) = header.ok_or_else(|| FormatError::at(0, "empty file"))?;
        let words: Vec<&str> = htext.split_whitespace().collect();
        let kind = match words.as_slice() {
            ["mutkit", kind, "v1"] => FileKind::from_name(kind)
                .ok_or_else(|| FormatError::at(hline, format!("unknown file kind `{kind}`")))?,
            ["mutkit", _, version] => {
                return Err(FormatError::at(hline, format!("unsupported schema version `{version}`")))
            }
            _ => {
                return Err(FormatError::at(
                    hline,
                    "expected header `mutkit <kind> v1`",
                ))
            }
        };
        if let Some(e) = expected {
            if e != kind {
                return Err(FormatError::at(
                    hline,
                    format!("expected a {} file, found {}", e.name(), kind.name()),
                ));
            }
        }
        for l in &lines {
            if !kind.keys().contains(&l.key) {
                diags.push(Diagnostic {
                    line: l.no,
                    message: format!("unknown keyword `{}` in a {} file", l.key, kind.name()),
                });
            }
        }
        if !diags.is_empty() {
            return Err(FormatError { diagnostics: diags });
        }
        Ok((kind, Self { lines }))
    }

    fn all(&self, key: &str) -> Vec<&Line<'a>> {
        self.lines.iter().filter(|l| l.key == key).collect()
    }

    fn single(&self, key: &str) -> Result<Option<&Line<'a>>, FormatError> {
        let found = self.all(key);
        match found.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            [_, second, ..] => Err(FormatError::at(second.no, format!("`{key}` given more than once"))),
        }
    }

    fn required(&self, key: &str) -> Result<&Line<'a>, FormatError> {
        self.single(key)?
            .ok_or_else(|| FormatError::at(0, format!("missing `{key}` line")))
    }
}

fn names(line: &Line<'_>) -> Vec<String> {
    line.rest.split_whitespace().map(str::to_string).collect()
}

fn parse_word_at(pres: &FinitePresentation, line: &Line<'_>, text: &str) -> Result<GroupWord, FormatError> {
    pres.parse_word(text).map_err(|e| FormatError::at(line.no, e.to_string()))
}

fn presentation_from(
    doc: &Document<'_>,
    gen_key: &str,
    rel_key: &str,
) -> Result<(FinitePresentation, usize), FormatError> {
    let gens = doc.required(gen_key)?;
    let names = names(gens);
    let base = FinitePresentation::new(names.clone(), vec![]).map_err(|e| FormatError::at(gens.no, e.to_string()))?;
    let mut relators = Vec::new();
    let mut diags = Vec::new();
    for l in doc.all(rel_key) {
        match base.parse_word(l.rest) {
            Ok(w) => relators.push(w),
            Err(e) => diags.push(Diagnostic {
                line: l.no,
                message: e.to_string(),
            }),
        }
    }
    if !diags.is_empty() {
        return Err(FormatError { diagnostics: diags });
    }
    let pres = FinitePresentation::new(names, relators).map_err(|e| FormatError::at(gens.no, e.to_string()))?;
    Ok((pres, gens.no))
}

/// Parses `[[re,im],[re,im],[re,im],[re,im]]` (row-major `a b c d`).
pub fn parse_matrix(text: &str) -> Result<MoebiusMatrix<f64>, String> {
    let entries: Vec<[f64; 2]> =
        serde_json::from_str(text).map_err(|e| format!("matrix must be [[re,im] x 4]: {e}"))?;
    let e: [[f64; 2]; 4] = entries
        .try_into()
        .map_err(|v: Vec<[f64; 2]>| format!("matrix needs 4 entries, got {}", v.len()))?;
    let c = |i: usize| Complex::new(e[i][0], e[i][1]);
    MoebiusMatrix::new(c(0), c(1), c(2), c(3), MoebiusTolerances::<f64>::default().det_tol).map_err(|e| e.to_string())
}

/// Inverse of [`parse_matrix`], exact for every finite `f64`.
pub fn format_matrix(m: &MoebiusMatrix<f64>) -> String {
    let e: Vec<String> = m.entries().iter().map(|z| format!("[{:?},{:?}]", z.re, z.im)).collect();
    format!("[{}]", e.join(","))
}

fn representation_from(doc: &Document<'_>) -> Result<MatrixRepresentation<f64>, FormatError> {
    let (pres, gens_line) = presentation_from(doc, "generators", "relator")?;
    let mut images: Vec<Option<MoebiusMatrix<f64>>> = vec![None; pres.generator_count()];
    let mut diags = Vec::new();
    for l in doc.all("matrix") {
        let Some((name, body)) = l.rest.split_once(char::is_whitespace) else {
            diags.push(Diagnostic {
                line: l.no,
                message: "expected `matrix <generator> [[re,im],...]`".into(),
            });
            continue;
        };
        let Some(index) = pres.index_of(name) else {
            diags.push(Diagnostic {
                line: l.no,
                message: format!("unknown generator `{name}`"),
            });
            continue;
        };
        if images[index].is_some() {
            diags.push(Diagnostic {
                line: l.no,
                message: format!("second matrix for `{name}`"),
            });
            continue;
        }
        match parse_matrix(body.trim()) {
            Ok(m) => images[index] = Some(m),
            Err(message) => diags.push(Diagnostic { line: l.no, message }),
        }
    }
    for (name, img) in pres.generator_names().iter().zip(&images) {
        if img.is_none() {
            diags.push(Diagnostic {
                line: gens_line,
                message: format!("no matrix for generator `{name}`"),
            });
        }
    }
    if !diags.is_empty() {
        return Err(FormatError { diagnostics: diags });
    }
    let images = images.into_iter().flatten().collect();
    MatrixRepresentation::new(pres, images, MoebiusTolerances::<f64>::default().det_tol)
        .map_err(|e| FormatError::at(gens_line, e.to_string()))
}

pub fn parse_presentation(text: &str) -> Result<FinitePresentation, FormatError> {
    let (_, doc) = Document::parse(text, Some(FileKind::Presentation))?;
    Ok(presentation_from(&doc, "generators", "relator")?.0)
}

/// Parses a representation. Relator residuals are not checked here.
pub fn parse_representation(text: &str) -> Result<MatrixRepresentation<f64>, FormatError> {
    let (_, doc) = Document::parse(text, Some(FileKind::Representation))?;
    representation_from(&doc)
}

pub fn write_presentation(p: &FinitePresentation) -> String {
    let mut out = String::from("mutkit presentation v1\n");
    out.push_str(&format!("generators {}\n", p.generator_names().join(" ")));
    for r in p.relators() {
        out.push_str(&format!("relator {}\n", p.format_word(r)));
    }
    out
}

pub fn write_representation(rep: &MatrixRepresentation<f64>) -> String {
    let p = rep.presentation();
    let mut out = String::from("mutkit representation v1\n");
    out.push_str(&format!("generators {}\n", p.generator_names().join(" ")));
    for r in p.relators() {
        out.push_str(&format!("relator {}\n", p.format_word(r)));
    }
    for (name, m) in p.generator_names().iter().zip(rep.images()) {
        out.push_str(&format!("matrix {name} {}\n", format_matrix(m)));
    }
    out
}

fn parse_usize(line: &Line<'_>, text: &str) -> Result<usize, FormatError> {
    text.parse()
        .map_err(|_| FormatError::at(line.no, format!("expected a non-negative integer, got `{text}`")))
}

/// Parses `t:pq` edge incidences or `t:v` cusp corners.
fn parse_incidence(line: &Line<'_>, item: &str, digits: usize) -> Result<(usize, Vec<usize>), FormatError> {
    let bad = || FormatError::at(line.no, format!("malformed incidence `{item}`"));
    let (t, v) = item.split_once(':').ok_or_else(bad)?;
    let t = t.parse().map_err(|_| bad())?;
    let vs: Vec<usize> = v
        .chars()
        .map(|c| c.to_digit(10).filter(|&d| d < 4).map(|d| d as usize).ok_or_else(bad))
        .collect::<Result<_, _>>()?;
    if vs.len() != digits || (digits == 2 && vs[0] == vs[1]) {
        return Err(bad());
    }
    Ok((t, vs))
}

pub fn parse_triangulation(text: &str) -> Result<IdealTriangulation, FormatError> {
    let (_, doc) = Document::parse(text, Some(FileKind::Triangulation))?;
    let count_line = doc.required("tetrahedra")?;
    let n = parse_usize(count_line, count_line.rest)?;
    let mut faces: Vec<[Option<FaceGluing>; 4]> = vec![Default::default(); n];
    let mut glue_lines = std::collections::BTreeMap::new();
    let mut diags = Vec::new();
    for l in doc.all("glue") {
        let parts: Vec<&str> = l.rest.splitn(5, char::is_whitespace).collect();
        let parsed = (|| {
            if parts.len() != 5 {
                return Err(FormatError::at(
                    l.no,
                    "expected `glue <tet> <face> <neighbour> <perm> <word>`",
                ));
            }
            let t = parse_usize(l, parts[0])?;
            let f = parse_usize(l, parts[1])?;
            let k = parse_usize(l, parts[2])?;
            if t >= n || f >= 4 {
                return Err(FormatError::at(l.no, format!("face {t}:{f} does not exist")));
            }
            let perm = Perm4::parse(parts[3]).map_err(|e| FormatError::at(l.no, e.to_string()))?;
            if faces[t][f].is_some() {
                return Err(FormatError::at(l.no, format!("face {t}:{f} glued twice")));
            }
            Ok((t, f, FaceGluing {
                neighbor: k,
                perm,
                word: parts[4].trim().to_string(),
            }))
        })();
        match parsed {
            Ok((t, f, g)) => {
                faces[t][f] = Some(g);
                glue_lines.insert((t, f), l.no);
            }
            Err(e) => diags.extend(e.diagnostics),
        }
    }
    for (t, fs) in faces.iter().enumerate() {
        for (f, g) in fs.iter().enumerate() {
            if g.is_none() && diags.is_empty() {
                diags.push(Diagnostic {
                    line: count_line.no,
                    message: format!("face {t}:{f} has no gluing"),
                });
            }
        }
    }
    let mut edges = Vec::new();
    for l in doc.all("edge") {
        let mut items = l.rest.split_whitespace();
        items.next();
        let class: Result<Vec<(usize, usize)>, FormatError> = items
            .map(|it| parse_incidence(l, it, 2).map(|(t, v)| (t, crate::volume::edge_index(v[0], v[1]))))
            .collect();
        match class {
            Ok(c) => edges.push(c),
            Err(e) => diags.extend(e.diagnostics),
        }
    }
    let mut cusps = Vec::new();
    for l in doc.all("cusp") {
        let mut items = l.rest.split_whitespace();
        items.next();
        let class: Result<Vec<Corner>, FormatError> = items
            .map(|it| parse_incidence(l, it, 1).map(|(tet, v)| Corner { tet, vertex: v[0] }))
            .collect();
        match class {
            Ok(c) => cusps.push(c),
            Err(e) => diags.extend(e.diagnostics),
        }
    }
    if !diags.is_empty() {
        return Err(FormatError { diagnostics: diags });
    }
    let gluings: Vec<[FaceGluing; 4]> = faces.into_iter().map(|fs| fs.map(|g| g.expect("checked"))).collect();
    let anchor = |e: &TriangulationError| -> usize {
        match e {
            TriangulationError::UnknownNeighbor { tet, face, .. }
            | TriangulationError::SelfGluedFace { tet, face }
            | TriangulationError::NotInvolutive { tet, face, .. }
            | TriangulationError::PermutationMismatch { tet, face, .. } => {
                glue_lines.get(&(*tet, *face)).copied().unwrap_or(0)
            }
            TriangulationError::ClassMismatch { what, .. } => doc
                .lines
                .iter()
                .find(|l| l.key == *what)
                .map(|l| l.no)
                .unwrap_or(0),
            _ => count_line.no,
        }
    };
    let tri = IdealTriangulation::new(gluings).map_err(|e| FormatError::at(anchor(&e), e.to_string()))?;
    tri.check_declared_classes(&edges, &cusps)
        .map_err(|e| FormatError::at(anchor(&e), e.to_string()))?;
    Ok(tri)
}

fn surface_names(count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("h{i}")).collect()
}

fn words_at(pres: &FinitePresentation, lines: &[&Line<'_>]) -> Result<Vec<GroupWord>, FormatError> {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    for l in lines {
        match parse_word_at(pres, l, l.rest) {
            Ok(w) => out.push(w),
            Err(e) => diags.extend(e.diagnostics),
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(FormatError { diagnostics: diags })
    }
}

/// Surface words, `τ_*` and its order, shared by mutation and Maskit files.
fn inclusion_from(
    doc: &Document<'_>,
    ambient: &FinitePresentation,
) -> Result<(Vec<GroupWord>, Option<(Vec<GroupWord>, u32, usize)>), FormatError> {
    let surface = words_at(ambient, &doc.all("surface"))?;
    if surface.is_empty() {
        return Err(FormatError::at(0, "missing `surface` lines"));
    }
    let h = FinitePresentation::free(&surface_names(surface.len())).expect("fresh names");
    let tau_lines = doc.all("tau");
    if tau_lines.is_empty() {
        return Ok((surface, None));
    }
    let tau = words_at(&h, &tau_lines)?;
    if tau.len() != surface.len() {
        return Err(FormatError::at(
            tau_lines[0].no,
            format!("{} surface generators but {} tau images", surface.len(), tau.len()),
        ));
    }
    let order_line = doc.required("order")?;
    let order: u32 = order_line
        .rest
        .parse()
        .map_err(|_| FormatError::at(order_line.no, format!("bad order `{}`", order_line.rest)))?;
    Ok((surface, Some((tau, order, order_line.no))))
}

/// A mutation: ambient representation, surface inclusion, and optionally the
/// splitting data needed to build the mutant group.
pub fn parse_mutation(text: &str) -> Result<MutationSpec<f64>, FormatError> {
    let (_, doc) = Document::parse(text, Some(FileKind::Mutation))?;
    let rep = representation_from(&doc)?;
    let ambient = rep.presentation().clone();
    let (surface, tau) = inclusion_from(&doc, &ambient)?;
    let (tau, order, order_no) = tau.ok_or_else(|| FormatError::at(0, "missing `tau` lines"))?;
    let n = surface.len();
    let inclusion =
        SurfaceInclusion::new(surface, tau, order).map_err(|e| FormatError::at(order_no, e.to_string()))?;
    let splitting = match doc.single("splitting")? {
        None => None,
        Some(l) => Some(match l.rest {
            "separating" => separating_from(&doc, &ambient, n)?,
            "non-separating" => non_separating_from(&doc, &ambient, n)?,
            other => {
                return Err(FormatError::at(
                    l.no,
                    format!("splitting must be `separating` or `non-separating`, got `{other}`"),
                ))
            }
        }),
    };
    MutationSpec::new(rep, inclusion, splitting).map_err(|e| FormatError::at(0, e.to_string()))
}

fn piece_from(
    doc: &Document<'_>,
    prefix: &str,
    ambient: &FinitePresentation,
) -> Result<(FinitePresentation, Vec<GroupWord>), FormatError> {
    let (pres, line) = presentation_from(doc, prefix, &format!("{prefix}-relator"))?;
    let embedding = words_at(ambient, &doc.all(&format!("{prefix}-embed")))?;
    if embedding.len() != pres.generator_count() {
        return Err(FormatError::at(
            line,
            format!(
                "{} has {} generators but {} `{prefix}-embed` lines",
                prefix,
                pres.generator_count(),
                embedding.len()
            ),
        ));
    }
    Ok((pres, embedding))
}

fn phi_from(
    doc: &Document<'_>,
    key: &str,
    pres: &FinitePresentation,
    n: usize,
) -> Result<Vec<GroupWord>, FormatError> {
    let lines = doc.all(key);
    let words = words_at(pres, &lines)?;
    if words.len() != n {
        return Err(FormatError::at(
            lines.first().map(|l| l.no).unwrap_or(0),
            format!("expected {n} `{key}` lines, got {}", words.len()),
        ));
    }
    Ok(words)
}

fn separating_from(doc: &Document<'_>, ambient: &FinitePresentation, n: usize) -> Result<Splitting, FormatError> {
    let (side1, side1_embedding) = piece_from(doc, "side1", ambient)?;
    let (side2, side2_embedding) = piece_from(doc, "side2", ambient)?;
    let phi1 = phi_from(doc, "phi1", &side1, n)?;
    let phi2 = phi_from(doc, "phi2", &side2, n)?;
    Ok(Splitting::Separating {
        side1,
        side2,
        side1_embedding,
        side2_embedding,
        phi1,
        phi2,
    })
}

fn non_separating_from(doc: &Document<'_>, ambient: &FinitePresentation, n: usize) -> Result<Splitting, FormatError> {
    let (complement, embedding) = piece_from(doc, "complement", ambient)?;
    let phi1 = phi_from(doc, "phi1", &complement, n)?;
    let phi2 = phi_from(doc, "phi2", &complement, n)?;
    let h = FinitePresentation::free(&surface_names(n)).expect("fresh names");
    let alpha = phi_from(doc, "alpha", &h, n)?;
    let ext = doc.required("extending")?;
    let extending_word = parse_word_at(ambient, ext, ext.rest)?;
    let stable_name = doc.single("stable")?.map(|l| l.rest.to_string()).unwrap_or_else(|| "u".into());
    Ok(Splitting::NonSeparating {
        complement,
        embedding,
        phi1,
        phi2,
        alpha,
        extending_word,
        stable_name,
    })
}

/// Where the conjugator of a Maskit check comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ConjugatorSource {
    Matrix(MoebiusMatrix<f64>),
    /// Solve `ρ(τ_* h) = A ρ(h) A⁻¹` on the surface generators.
    Solve { tau: Vec<GroupWord>, order: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskitCase {
    Amalgam,
    Hnn,
}

/// Input of a sampled Maskit check.
#[derive(Debug, Clone)]
pub struct MaskitConfig {
    pub case: MaskitCase,
    pub representation: MatrixRepresentation<f64>,
    /// Generators of `H`, whose limit set is sampled.
    pub surface: Vec<GroupWord>,
    /// Sampled elements of `H` (defaults to `surface`).
    pub h: Vec<GroupWord>,
    pub g1: Vec<GroupWord>,
    pub g2: Vec<GroupWord>,
    pub g0: Vec<GroupWord>,
    pub stable: Option<GroupWord>,
    pub conjugator: ConjugatorSource,
    pub dedup: f64,
    pub b1_point: Option<SpherePoint<f64>>,
}

pub fn parse_maskit(text: &str) -> Result<MaskitConfig, FormatError> {
    let (_, doc) = Document::parse(text, Some(FileKind::Maskit))?;
    let rep = representation_from(&doc)?;
    let pres = rep.presentation().clone();
    let case_line = doc.required("case")?;
    let case = match case_line.rest {
        "amalgam" => MaskitCase::Amalgam,
        "hnn" => MaskitCase::Hnn,
        other => {
            return Err(FormatError::at(
                case_line.no,
                format!("case must be `amalgam` or `hnn`, got `{other}`"),
            ))
        }
    };
    let (surface, tau) = inclusion_from(&doc, &pres)?;
    let conjugator = match (doc.single("conjugator")?, tau) {
        (Some(l), None) => ConjugatorSource::Matrix(parse_matrix(l.rest).map_err(|m| FormatError::at(l.no, m))?),
        (None, Some((tau, order, order_no))) => {
            crate::presentation::check_periodic(&tau, order).map_err(|e| FormatError::at(order_no, e.to_string()))?;
            ConjugatorSource::Solve { tau, order }
        }
        (Some(l), Some(_)) => {
            return Err(FormatError::at(l.no, "give either `conjugator` or `tau`/`order`, not both"))
        }
        (None, None) => return Err(FormatError::at(0, "missing `conjugator` or `tau` lines")),
    };
    let mut h = words_at(&pres, &doc.all("h"))?;
    if h.is_empty() {
        h = surface.clone();
    }
    let stable = match doc.single("stable")? {
        Some(l) => Some(parse_word_at(&pres, l, l.rest)?),
        None => None,
    };
    if case == MaskitCase::Hnn && stable.is_none() {
        return Err(FormatError::at(case_line.no, "the hnn case needs a `stable` word"));
    }
    let dedup = match doc.single("dedup")? {
        Some(l) => l
            .rest
            .parse::<f64>()
            .ok()
            .filter(|d| *d > 0.0)
            .ok_or_else(|| FormatError::at(l.no, format!("dedup must be positive, got `{}`", l.rest)))?,
        None => 1e-3,
    };
    let b1_point = match doc.single("b1-point")? {
        Some(l) => {
            let v: Vec<f64> = l.rest.split_whitespace().filter_map(|s| s.parse().ok()).collect();
            match v.as_slice() {
                [re, im] => Some(SpherePoint::from_complex(Complex::new(*re, *im))),
                _ => return Err(FormatError::at(l.no, "expected `b1-point <re> <im>`")),
            }
        }
        None => None,
    };
    Ok(MaskitConfig {
        case,
        surface,
        h,
        g1: words_at(&pres, &doc.all("g1"))?,
        g2: words_at(&pres, &doc.all("g2"))?,
        g0: words_at(&pres, &doc.all("g0"))?,
        stable,
        conjugator,
        dedup,
        b1_point,
        representation: rep,
    })
}

/// A closed triangulated surface over a representation, with the word of the
/// circle direction of the product `Σ × S¹`.
#[derive(Debug, Clone)]
pub struct SurfaceFile {
    pub representation: MatrixRepresentation<f64>,
    pub surface: SurfaceCycle,
    pub circle: GroupWord,
    pub steps: usize,
}

pub fn parse_surface(text: &str) -> Result<SurfaceFile, FormatError> {
    let (_, doc) = Document::parse(text, Some(FileKind::Surface))?;
    let rep = representation_from(&doc)?;
    let pres = rep.presentation().clone();
    let circle_line = doc.required("circle")?;
    let circle = parse_word_at(&pres, circle_line, circle_line.rest)?;
    let steps = match doc.single("steps")? {
        Some(l) => parse_usize(l, l.rest)?,
        None => 4,
    };
    let mut vertices = Vec::new();
    for l in doc.all("vertex") {
        let v = match l.rest.split_once(char::is_whitespace) {
            Some(("cusp", w)) => SurfaceVertex::Cusp(parse_word_at(&pres, l, w.trim())?),
            None if l.rest == "interior" => SurfaceVertex::Interior,
            _ => return Err(FormatError::at(l.no, "expected `vertex cusp <word>` or `vertex interior`")),
        };
        vertices.push(v);
    }
    let mut triangles = Vec::new();
    let mut triangle_lines = Vec::new();
    for l in doc.all("triangle") {
        let idx: Vec<usize> = l
            .rest
            .split_whitespace()
            .map(|s| parse_usize(l, s))
            .collect::<Result<_, _>>()?;
        let t: [usize; 3] = idx
            .try_into()
            .map_err(|_| FormatError::at(l.no, "a triangle needs three vertex indices"))?;
        triangles.push(t);
        triangle_lines.push(l.no);
    }
    let surface = SurfaceCycle::new(vertices, triangles).map_err(|e| {
        let line = match &e {
            VolumeError::SurfaceTriangle { index } => triangle_lines[*index],
            _ => 0,
        };
        FormatError::at(line, e.to_string())
    })?;
    Ok(SurfaceFile {
        representation: rep,
        surface,
        circle,
        steps,
    })
}

/// A cyclic cover check: the cover cycle is the union of `translate^k` images
/// of the developed base cycle for `k < degree`. Paths are relative to the
/// cover file.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverConfig {
    pub triangulation: String,
    pub representation: String,
    pub translate: MoebiusMatrix<f64>,
    pub degree: usize,
}

pub fn parse_cover(text: &str) -> Result<CoverConfig, FormatError> {
    let (_, doc) = Document::parse(text, Some(FileKind::Cover))?;
    let tl = doc.required("translate")?;
    let dl = doc.required("degree")?;
    let degree = parse_usize(dl, dl.rest)?;
    if degree == 0 {
        return Err(FormatError::at(dl.no, "degree must be positive"));
    }
    Ok(CoverConfig {
        triangulation: doc.required("triangulation")?.rest.to_string(),
        representation: doc.required("representation")?.rest.to_string(),
        translate: parse_matrix(tl.rest).map_err(|m| FormatError::at(tl.no, m))?,
        degree,
    })
}

/// Kind named by the header, if the header is well formed.
pub fn detect_kind(text: &str) -> Result<FileKind, FormatError> {
    Document::parse(text, None).map(|(k, _)| k)
}

/// Schema and semantic diagnostics for any supported file; empty when the
/// file is well formed.
pub fn validate(text: &str) -> Vec<Diagnostic> {
    let kind = match detect_kind(text) {
        Ok(k) => k,
        Err(e) => return e.diagnostics,
    };
    let result = match kind {
        FileKind::Presentation => parse_presentation(text).map(|_| ()),
        FileKind::Representation => parse_representation(text).map(|_| ()),
        FileKind::Triangulation => parse_triangulation(text).map(|_| ()),
        FileKind::Mutation => parse_mutation(text).map(|_| ()),
        FileKind::Maskit => parse_maskit(text).map(|_| ()),
        FileKind::Surface => parse_surface(text).map(|_| ()),
        FileKind::Cover => parse_cover(text).map(|_| ()),
    };
    result.err().map(|e| e.diagnostics).unwrap_or_default()
}

impl From<PresentationError> for FormatError {
    fn from(e: PresentationError) -> Self {
        FormatError::at(0, e.to_string())
    }
}

impl From<RepresentationError> for FormatError {
    fn from(e: RepresentationError) -> Self {
        FormatError::at(0, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG8_TRI: &str = include_str!("../fixtures/figure8.tri");
    const FIG8_REP: &str = include_str!("../fixtures/figure8.rep");

    #[test]
    fn fixtures_parse() {
        let tri = parse_triangulation(FIG8_TRI).unwrap();
        assert_eq!(tri.tetrahedron_count(), 2);
        let rep = parse_representation(FIG8_REP).unwrap();
        assert_eq!(rep.presentation().generator_count(), 3);
        assert!(validate(FIG8_TRI).is_empty());
        assert!(validate(FIG8_REP).is_empty());
    }

    #[test]
    fn representation_round_trip() {
        let rep = parse_representation(FIG8_REP).unwrap();
        let again = parse_representation(&write_representation(&rep)).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn unknown_generator_in_relator() {
        let text = "mutkit presentation v1\ngenerators a b\nrelator a b c\n";
        let d = validate(text);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].line, 3);
        assert!(d[0].message.contains('c'), "{}", d[0].message);
    }

    #[test]
    fn non_involutive_gluing_names_both_faces() {
        let text = FIG8_TRI.replace("glue 1 2 0 3012 y^-1", "glue 1 2 0 2103 y^-1");
        let d = validate(&text);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].message.contains("1:2") && d[0].message.contains("0:"), "{}", d[0].message);
        assert!(d[0].line > 0);
    }

    #[test]
    fn bad_header() {
        assert_eq!(validate("mutkit triangulation v2\n")[0].line, 1);
        assert_eq!(validate("hello\n")[0].line, 1);
        assert_eq!(validate("")[0].line, 0);
    }

    #[test]
    fn unknown_keyword() {
        let d = validate("mutkit presentation v1\ngenerators a\nrelatr a\n");
        assert_eq!(d[0].line, 3);
    }

    #[test]
    fn declared_class_mismatch() {
        let text = FIG8_TRI.replace("edge 0 0:01 0:13", "edge 0 0:02 0:13");
        assert!(!validate(&text).is_empty());
    }

    #[test]
    fn matrix_format_is_exact() {
        let m = MoebiusMatrix::normalized(
            Complex::new(0.1, 1.0 / 3.0),
            Complex::new(2.0, 0.0),
            Complex::new(-1.0, 0.7),
            Complex::new(5.0, -1e-17),
        );
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }
}
