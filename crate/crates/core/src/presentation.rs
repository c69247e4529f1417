//! Finite presentations, freely reduced words and the mutation constructions:
//! the extended group with the letter `t`, the mutant amalgam, the mutant HNN
//! extension, and the cyclic cover of the extended group.

use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresentationError {
    #[error("unknown generator `{name}`")]
    UnknownGenerator { name: String },
    #[error("malformed word token `{token}`")]
    Syntax { token: String },
    #[error("generator index {index} out of range for {count} generators")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("relator {index} is trivial after free reduction")]
    EmptyRelator { index: usize },
    #[error("duplicate generator name `{name}`")]
    DuplicateGenerator { name: String },
    #[error("invalid generator name `{name}`")]
    InvalidName { name: String },
    #[error("{what}: expected {expected} words, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("tau^{order} does not fix surface generator {generator} (got `{got}`)")]
    NotPeriodic {
        generator: usize,
        order: u32,
        got: String,
    },
    #[error("order must be positive")]
    ZeroOrder,
    #[error("cover homomorphism is not surjective: generator {t_index} is not in the presentation")]
    NotSurjective { t_index: usize },
}

/// One letter `g^e` with `e = ±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Self {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    pub fn exponent(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }
}

/// A freely reduced word in numbered generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    /// Builds the reduced form of an arbitrary letter sequence.
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self { letters: out }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn generator(g: usize) -> Self {
        Self {
            letters: vec![Letter::new(g, false)],
        }
    }

    /// `g^k`.
    pub fn power(g: usize, k: i64) -> Self {
        let l = Letter::new(g, k < 0);
        Self {
            letters: vec![l; k.unsigned_abs() as usize],
        }
    }

    /// Word from `(generator, ±1)` pairs, reduced.
    pub fn from_pairs(pairs: &[(usize, i8)]) -> Self {
        Self::new(pairs.iter().map(|&(g, e)| {
            assert!(e == 1 || e == -1, "exponents are ±1");
            Letter::new(g, e < 0)
        }))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self.letters.iter().rev().map(|l| l.inv()).collect(),
        }
    }

    /// Reduced product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.letters.iter().chain(&other.letters).copied())
    }

    /// Reduced product of several words.
    pub fn product<'a>(words: impl IntoIterator<Item = &'a GroupWord>) -> Self {
        Self::new(words.into_iter().flat_map(|w| w.letters.iter().copied()))
    }

    /// Applies the homomorphism sending generator `i` to `images[i]`.
    pub fn substitute(&self, images: &[GroupWord]) -> Result<Self, PresentationError> {
        let mut parts = Vec::with_capacity(self.len());
        for l in &self.letters {
            let img = images.get(l.generator).ok_or(PresentationError::IndexOutOfRange {
                index: l.generator,
                count: images.len(),
            })?;
            parts.push(if l.inverse { img.inverse() } else { img.clone() });
        }
        Ok(Self::product(&parts))
    }

    /// Renumbers every generator by adding `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            letters: self
                .letters
                .iter()
                .map(|l| Letter::new(l.generator + offset, l.inverse))
                .collect(),
        }
    }

    pub fn exponent_sum(&self, generator: usize) -> i64 {
        self.letters
            .iter()
            .filter(|l| l.generator == generator)
            .map(|l| l.exponent())
            .sum()
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.generator).max()
    }

    fn check_range(&self, count: usize) -> Result<(), PresentationError> {
        match self.max_generator() {
            Some(index) if index >= count => Err(PresentationError::IndexOutOfRange { index, count }),
            _ => Ok(()),
        }
    }
}

/// Free reduction of a letter sequence; same as [`GroupWord::new`].
pub fn free_reduce(letters: &[Letter]) -> GroupWord {
    GroupWord::new(letters.iter().copied())
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "1"
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

/// Parses a word such as `"t a t^-1 a"`. Tokens are separated by whitespace;
/// a token is a generator name with an optional integer exponent `^k`.
/// The empty word is written `1`.
pub fn parse_word(text: &str, names: &[String]) -> Result<GroupWord, PresentationError> {
    let mut letters = Vec::new();
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens == ["1"] {
        return Ok(GroupWord::identity());
    }
    for token in tokens {
        let (name, exp) = match token.split_once('^') {
            Some((n, e)) => {
                let k: i64 = e.parse().map_err(|_| PresentationError::Syntax {
                    token: token.to_string(),
                })?;
                (n, k)
            }
            None => (token, 1),
        };
        if !valid_name(name) {
            return Err(PresentationError::Syntax {
                token: token.to_string(),
            });
        }
        let g = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| PresentationError::UnknownGenerator {
                name: name.to_string(),
            })?;
        let l = Letter::new(g, exp < 0);
        letters.extend(std::iter::repeat_n(l, exp.unsigned_abs() as usize));
    }
    Ok(GroupWord::new(letters))
}

/// Prints a word in the grammar accepted by [`parse_word`].
pub fn format_word(word: &GroupWord, names: &[String]) -> String {
    if word.is_empty() {
        return "1".to_string();
    }
    word.letters
        .iter()
        .map(|l| {
            let name = names
                .get(l.generator)
                .cloned()
                .unwrap_or_else(|| format!("g{}", l.generator));
            if l.inverse {
                format!("{name}^-1")
            } else {
                name
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// `<generators | relators>` with validated names and reduced, nonempty relators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePresentation {
    generator_names: Vec<String>,
    relators: Vec<GroupWord>,
}

impl FinitePresentation {
    pub fn new(generator_names: Vec<String>, relators: Vec<GroupWord>) -> Result<Self, PresentationError> {
        let mut seen = HashSet::new();
        for name in &generator_names {
            if !valid_name(name) {
                return Err(PresentationError::InvalidName { name: name.clone() });
            }
            if !seen.insert(name.as_str()) {
                return Err(PresentationError::DuplicateGenerator { name: name.clone() });
            }
        }
        let count = generator_names.len();
        let mut reduced = Vec::with_capacity(relators.len());
        for (index, r) in relators.into_iter().enumerate() {
            let r = GroupWord::new(r.letters);
            r.check_range(count)?;
            if r.is_empty() {
                return Err(PresentationError::EmptyRelator { index });
            }
            reduced.push(r);
        }
        Ok(Self {
            generator_names,
            relators: reduced,
        })
    }

    /// Free group on the given names.
    pub fn free<S: AsRef<str>>(names: &[S]) -> Result<Self, PresentationError> {
        Self::new(names.iter().map(|s| s.as_ref().to_string()).collect(), Vec::new())
    }

    /// Builds from relator strings in the word grammar.
    pub fn parse<S: AsRef<str>, R: AsRef<str>>(names: &[S], relators: &[R]) -> Result<Self, PresentationError> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let words = relators
            .iter()
            .map(|r| parse_word(r.as_ref(), &names))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(names, words)
    }

    pub fn generator_names(&self) -> &[String] {
        &self.generator_names
    }

    pub fn relators(&self) -> &[GroupWord] {
        &self.relators
    }

    pub fn generator_count(&self) -> usize {
        self.generator_names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.generator_names.iter().position(|n| n == name)
    }

    pub fn parse_word(&self, text: &str) -> Result<GroupWord, PresentationError> {
        parse_word(text, &self.generator_names)
    }

    pub fn format_word(&self, word: &GroupWord) -> String {
        format_word(word, &self.generator_names)
    }

    pub fn check_word(&self, word: &GroupWord) -> Result<(), PresentationError> {
        word.check_range(self.generator_count())
    }
}

impl fmt::Display for FinitePresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rels: Vec<String> = self.relators.iter().map(|r| self.format_word(r)).collect();
        write!(f, "<{} | {}>", self.generator_names.join(", "), rels.join(", "))
    }
}

/// A surface subgroup given by words in an ambient presentation together with
/// the induced automorphism `τ_*` and its order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceInclusion {
    /// Images of the surface generators, as words in the ambient generators.
    pub surface_generators: Vec<GroupWord>,
    /// `τ_*(h_j)` as a word in the surface generators.
    pub tau_star: Vec<GroupWord>,
    pub order_m: u32,
}

impl SurfaceInclusion {
    pub fn new(
        surface_generators: Vec<GroupWord>,
        tau_star: Vec<GroupWord>,
        order_m: u32,
    ) -> Result<Self, PresentationError> {
        let inc = Self {
            surface_generators,
            tau_star,
            order_m,
        };
        check_periodic(&inc.tau_star, inc.order_m)?;
        Ok(inc)
    }

    pub fn genus_generators(&self) -> usize {
        self.surface_generators.len()
    }

    /// Checks indices against an ambient presentation.
    pub fn validate(&self, ambient: &FinitePresentation) -> Result<(), PresentationError> {
        for w in &self.surface_generators {
            ambient.check_word(w)?;
        }
        check_periodic(&self.tau_star, self.order_m)
    }

    /// `τ_*(h_j)` as a word in the ambient generators.
    pub fn tau_image(&self, j: usize) -> GroupWord {
        self.tau_star[j]
            .substitute(&self.surface_generators)
            .expect("tau words checked against surface generator count")
    }
}

/// Checks that `tau` is an endomorphism of the free group on `tau.len()`
/// generators with `tau^m = id` on each generator.
pub fn check_periodic(tau: &[GroupWord], order: u32) -> Result<(), PresentationError> {
    if order == 0 {
        return Err(PresentationError::ZeroOrder);
    }
    let n = tau.len();
    for w in tau {
        w.check_range(n)?;
    }
    let mut iterate: Vec<GroupWord> = (0..n).map(GroupWord::generator).collect();
    for _ in 0..order {
        iterate = iterate
            .iter()
            .map(|w| w.substitute(tau))
            .collect::<Result<_, _>>()?;
    }
    for (j, w) in iterate.iter().enumerate() {
        if *w != GroupWord::generator(j) {
            let names: Vec<String> = (0..n).map(|i| format!("h{}", i + 1)).collect();
            return Err(PresentationError::NotPeriodic {
                generator: j,
                order,
                got: format_word(w, &names),
            });
        }
    }
    Ok(())
}

fn fresh_name(existing: &[String], base: &str) -> String {
    let mut name = base.to_string();
    while existing.contains(&name) {
        name.push('_');
    }
    name
}

/// `<S, t | R, t h_j t⁻¹ τ_*(h_j)⁻¹>`. The new letter is last and named `t`
/// (with underscores appended if that name is taken).
pub fn build_extended_presentation(
    m_pres: &FinitePresentation,
    inc: &SurfaceInclusion,
) -> Result<FinitePresentation, PresentationError> {
    inc.validate(m_pres)?;
    let t = m_pres.generator_count();
    let mut names = m_pres.generator_names().to_vec();
    names.push(fresh_name(&names, "t"));
    let tw = GroupWord::generator(t);
    let mut relators = m_pres.relators().to_vec();
    for (j, h) in inc.surface_generators.iter().enumerate() {
        relators.push(GroupWord::product([&tw, h, &tw.inverse(), &inc.tau_image(j).inverse()]));
    }
    FinitePresentation::new(names, relators)
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), PresentationError> {
    if expected == got {
        Ok(())
    } else {
        Err(PresentationError::LengthMismatch { what, expected, got })
    }
}

/// Abstract amalgam `<S1, S2 | R1, R2, φ1(τ_* h_j) φ2(h_j)⁻¹>`; generators of
/// `p2` follow those of `p1`.
pub fn build_mutant_amalgam(
    p1: &FinitePresentation,
    p2: &FinitePresentation,
    phi1: &[GroupWord],
    phi2: &[GroupWord],
    tau_star: &[GroupWord],
) -> Result<FinitePresentation, PresentationError> {
    let g = phi1.len();
    check_len("phi2", g, phi2.len())?;
    check_len("tau", g, tau_star.len())?;
    for w in phi1 {
        p1.check_word(w)?;
    }
    for w in phi2 {
        p2.check_word(w)?;
    }
    for w in tau_star {
        w.check_range(g)?;
    }
    let off = p1.generator_count();
    let mut names = p1.generator_names().to_vec();
    names.extend(p2.generator_names().iter().cloned());
    let mut relators = p1.relators().to_vec();
    relators.extend(p2.relators().iter().map(|r| r.shifted(off)));
    for j in 0..g {
        let left = tau_star[j].substitute(phi1)?;
        let right = phi2[j].shifted(off);
        relators.push(left.mul(&right.inverse()));
    }
    FinitePresentation::new(names, relators)
}

/// HNN extension `<S_N, u | R_N, u φ1(h_j) u⁻¹ φ2(ατ_*(h_j))⁻¹>` with the
/// stable letter appended last under `stable_name`.
pub fn build_mutant_hnn(
    p_n: &FinitePresentation,
    phi1: &[GroupWord],
    phi2: &[GroupWord],
    alpha_then_tau: &[GroupWord],
    stable_name: &str,
) -> Result<FinitePresentation, PresentationError> {
    let g = phi1.len();
    check_len("phi2", g, phi2.len())?;
    check_len("alpha", g, alpha_then_tau.len())?;
    for w in phi1.iter().chain(phi2) {
        p_n.check_word(w)?;
    }
    for w in alpha_then_tau {
        w.check_range(g)?;
    }
    let u = p_n.generator_count();
    let mut names = p_n.generator_names().to_vec();
    names.push(stable_name.to_string());
    let uw = GroupWord::generator(u);
    let mut relators = p_n.relators().to_vec();
    for j in 0..g {
        let target = alpha_then_tau[j].substitute(phi2)?;
        relators.push(GroupWord::product([&uw, &phi1[j], &uw.inverse(), &target.inverse()]));
    }
    FinitePresentation::new(names, relators)
}

/// Exponent sum of `t_index` in `w`, reduced into `0..modulus`.
pub fn cover_homomorphism_value(w: &GroupWord, t_index: usize, modulus: u32) -> u32 {
    assert!(modulus > 0, "modulus must be positive");
    w.exponent_sum(t_index).rem_euclid(modulus as i64) as u32
}

/// A kernel generator `t^k s t^{-k}` (`generator = Some(s)`) or `t^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelGenerator {
    pub coset: u32,
    pub generator: Option<usize>,
    pub word: GroupWord,
}

/// Reidemeister–Schreier data for the kernel of the cyclic quotient sending
/// `t ↦ 1` and every other generator to 0, with transversal `{t^k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverData {
    pub degree: u32,
    pub t_index: usize,
    pub coset_representatives: Vec<GroupWord>,
    pub kernel_generators: Vec<KernelGenerator>,
    /// `coset_table[k][g]`: coset of `t^k · g`.
    pub coset_table: Vec<Vec<u32>>,
}

impl CoverData {
    pub fn words(&self) -> Vec<GroupWord> {
        self.kernel_generators.iter().map(|k| k.word.clone()).collect()
    }
}

pub fn kernel_presentation_generators(
    x_pres: &FinitePresentation,
    t_index: usize,
    modulus: u32,
) -> Result<CoverData, PresentationError> {
    if t_index >= x_pres.generator_count() {
        return Err(PresentationError::NotSurjective { t_index });
    }
    if modulus == 0 {
        return Err(PresentationError::ZeroOrder);
    }
    let reps: Vec<GroupWord> = (0..modulus).map(|k| GroupWord::power(t_index, k as i64)).collect();
    let mut gens = Vec::new();
    for (k, rep) in reps.iter().enumerate() {
        for s in (0..x_pres.generator_count()).filter(|&s| s != t_index) {
            gens.push(KernelGenerator {
                coset: k as u32,
                generator: Some(s),
                word: GroupWord::product([rep, &GroupWord::generator(s), &rep.inverse()]),
            });
        }
    }
    gens.push(KernelGenerator {
        coset: 0,
        generator: None,
        word: GroupWord::power(t_index, modulus as i64),
    });
    let coset_table = (0..modulus)
        .map(|k| {
            (0..x_pres.generator_count())
                .map(|g| if g == t_index { (k + 1) % modulus } else { k })
                .collect()
        })
        .collect();
    Ok(CoverData {
        degree: modulus,
        t_index,
        coset_representatives: reps,
        kernel_generators: gens,
        coset_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    fn w(text: &str, n: &[String]) -> GroupWord {
        parse_word(text, n).unwrap()
    }

    #[test]
    fn parse_and_print() {
        let n = names(&["t", "a"]);
        let word = w("t a t^-1 a", &n);
        assert_eq!(word.len(), 4);
        assert_eq!(format_word(&word, &n), "t a t^-1 a");
        assert_eq!(w("a a^-1", &n), GroupWord::identity());
        assert_eq!(format_word(&GroupWord::identity(), &n), "1");
        assert_eq!(w("1", &n), GroupWord::identity());
        assert_eq!(w("a^3 t^-2", &n).len(), 5);
        assert_eq!(
            parse_word("a b", &n),
            Err(PresentationError::UnknownGenerator { name: "b".into() })
        );
        assert!(matches!(parse_word("a^x", &n), Err(PresentationError::Syntax { .. })));
    }

    #[test]
    fn presentation_validation() {
        assert!(matches!(
            FinitePresentation::parse(&["a", "a"], &[] as &[&str]),
            Err(PresentationError::DuplicateGenerator { .. })
        ));
        assert!(matches!(
            FinitePresentation::parse(&["a"], &["a a^-1"]),
            Err(PresentationError::EmptyRelator { index: 0 })
        ));
        assert!(matches!(
            FinitePresentation::new(names(&["a"]), vec![GroupWord::generator(3)]),
            Err(PresentationError::IndexOutOfRange { index: 3, count: 1 })
        ));
    }

    fn sanov_inclusion(tau: &[&str], m: u32) -> (FinitePresentation, SurfaceInclusion) {
        let p = FinitePresentation::free(&["a", "b"]).unwrap();
        let h = names(&["h1", "h2"]);
        let inc = SurfaceInclusion::new(
            vec![GroupWord::generator(0), GroupWord::generator(1)],
            tau.iter().map(|t| w(t, &h)).collect(),
            m,
        )
        .unwrap();
        (p, inc)
    }

    #[test]
    fn extended_presentation_inversion() {
        let (p, inc) = sanov_inclusion(&["h1^-1", "h2^-1"], 2);
        let x = build_extended_presentation(&p, &inc).unwrap();
        assert_eq!(x.generator_names(), names(&["a", "b", "t"]).as_slice());
        let rels: Vec<String> = x.relators().iter().map(|r| x.format_word(r)).collect();
        assert_eq!(rels, ["t a t^-1 a", "t b t^-1 b"]);
        for r in x.relators() {
            assert_eq!(cover_homomorphism_value(r, 2, 4), 0);
        }
    }

    #[test]
    fn extended_presentation_identity_and_counts() {
        let (p, inc) = sanov_inclusion(&["h1", "h2"], 1);
        let x = build_extended_presentation(&p, &inc).unwrap();
        let rels: Vec<String> = x.relators().iter().map(|r| x.format_word(r)).collect();
        assert_eq!(rels, ["t a t^-1 a^-1", "t b t^-1 b^-1"]);

        let m = FinitePresentation::parse(&["x", "y", "z"], &["z x^-1 y z^-1 x", "y x^-1 y^-1 z"]).unwrap();
        let h = names(&["h1"]);
        let inc = SurfaceInclusion::new(vec![w("x y", m.generator_names())], vec![w("h1", &h)], 1).unwrap();
        let x = build_extended_presentation(&m, &inc).unwrap();
        assert_eq!(x.generator_count(), 4);
        assert_eq!(x.relators().len(), 3);
    }

    #[test]
    fn non_periodic_tau_rejected() {
        let h = names(&["h1", "h2"]);
        let err = SurfaceInclusion::new(
            vec![GroupWord::generator(0), GroupWord::generator(1)],
            vec![w("h1 h2", &h), w("h2", &h)],
            3,
        );
        assert!(matches!(err, Err(PresentationError::NotPeriodic { generator: 0, .. })));
        // swap has order 2, not 1
        let err = SurfaceInclusion::new(
            vec![GroupWord::generator(0), GroupWord::generator(1)],
            vec![w("h2", &h), w("h1", &h)],
            1,
        );
        assert!(err.is_err());
    }

    #[test]
    fn amalgam_examples() {
        let p1 = FinitePresentation::free(&["x"]).unwrap();
        let p2 = FinitePresentation::free(&["y"]).unwrap();
        let h = names(&["h"]);
        let out = build_mutant_amalgam(
            &p1,
            &p2,
            &[w("x^2", p1.generator_names())],
            &[w("y^3", p2.generator_names())],
            &[w("h^-1", &h)],
        )
        .unwrap();
        assert_eq!(out.relators().len(), 1);
        assert_eq!(out.format_word(&out.relators()[0]), "x^-1 x^-1 y^-1 y^-1 y^-1");

        let out = build_mutant_amalgam(
            &p1,
            &p2,
            &[w("x", p1.generator_names())],
            &[w("y", p2.generator_names())],
            &[w("h", &h)],
        )
        .unwrap();
        assert_eq!(out.format_word(&out.relators()[0]), "x y^-1");
        assert!(matches!(
            build_mutant_amalgam(&p1, &p2, &[GroupWord::generator(0)], &[], &[]),
            Err(PresentationError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn amalgam_counts() {
        let p1 = FinitePresentation::parse(&["a", "b"], &["a b a^-1 b^-1"]).unwrap();
        let p2 = FinitePresentation::parse(&["c", "d"], &["c^2", "d^3"]).unwrap();
        let h = names(&["h1", "h2"]);
        let out = build_mutant_amalgam(
            &p1,
            &p2,
            &[GroupWord::generator(0), GroupWord::generator(1)],
            &[GroupWord::generator(0), GroupWord::generator(1)],
            &[w("h2", &h), w("h1", &h)],
        )
        .unwrap();
        assert_eq!(out.relators().len(), 1 + 2 + 2);
        assert_eq!(out.generator_count(), 4);
        assert_eq!(out.format_word(&out.relators()[3]), "b c^-1");
    }

    #[test]
    fn hnn_examples() {
        let pn = FinitePresentation::free(&["x"]).unwrap();
        let h = names(&["h"]);
        let x = GroupWord::generator(0);
        let out = build_mutant_hnn(&pn, std::slice::from_ref(&x), std::slice::from_ref(&x), &[w("h^-1", &h)], "u").unwrap();
        assert_eq!(out.generator_names(), names(&["x", "u"]).as_slice());
        assert_eq!(out.format_word(&out.relators()[0]), "u x u^-1 x");

        let out = build_mutant_hnn(&pn, std::slice::from_ref(&x), std::slice::from_ref(&x), &[w("h", &h)], "u").unwrap();
        assert_eq!(out.format_word(&out.relators()[0]), "u x u^-1 x^-1");
        assert_eq!(out.relators().len(), 1);
    }

    #[test]
    fn cover_values() {
        let n = names(&["a", "t"]);
        assert_eq!(cover_homomorphism_value(&w("t^3 a t^-1", &n), 1, 4), 2);
        assert_eq!(cover_homomorphism_value(&w("a a", &n), 1, 4), 0);
        assert_eq!(cover_homomorphism_value(&w("t^-1", &n), 1, 4), 3);
    }

    #[test]
    fn kernel_generators_rank_two_free() {
        let p = FinitePresentation::free(&["a", "t"]).unwrap();
        let cover = kernel_presentation_generators(&p, 1, 2).unwrap();
        let printed: Vec<String> = cover.words().iter().map(|k| p.format_word(k)).collect();
        assert_eq!(printed, ["a", "t a t^-1", "t t"]);
        assert_eq!(cover.coset_table, vec![vec![0, 1], vec![1, 0]]);

        let cover = kernel_presentation_generators(&p, 1, 1).unwrap();
        let printed: Vec<String> = cover.words().iter().map(|k| p.format_word(k)).collect();
        assert_eq!(printed, ["a", "t"]);

        let p3 = FinitePresentation::free(&["a", "b", "c", "t"]).unwrap();
        let cover = kernel_presentation_generators(&p3, 3, 6).unwrap();
        assert_eq!(cover.kernel_generators.len(), 6 * 3 + 1);
        assert!(cover.words().iter().all(|k| cover_homomorphism_value(k, 3, 6) == 0));

        assert_eq!(
            kernel_presentation_generators(&p, 5, 2),
            Err(PresentationError::NotSurjective { t_index: 5 })
        );
    }

    fn arb_letters(gens: usize, max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec((0..gens, any::<bool>()).prop_map(|(g, i)| Letter::new(g, i)), 0..max_len)
    }

    proptest! {
        #[test]
        fn reduction_idempotent_and_shortening(letters in arb_letters(3, 30)) {
            let r = free_reduce(&letters);
            prop_assert!(r.len() <= letters.len());
            prop_assert_eq!(free_reduce(r.letters()), r.clone());
            for pair in r.letters().windows(2) {
                prop_assert!(pair[0] != pair[1].inv());
            }
        }

        #[test]
        fn print_parse_round_trip(letters in arb_letters(3, 20)) {
            let n = names(&["a", "b", "t"]);
            let word = free_reduce(&letters);
            prop_assert_eq!(parse_word(&format_word(&word, &n), &n).unwrap(), word);
        }

        #[test]
        fn cover_value_is_homomorphism(l1 in arb_letters(3, 20), l2 in arb_letters(3, 20), m in 1u32..6) {
            let (w1, w2) = (free_reduce(&l1), free_reduce(&l2));
            let n = 2 * m;
            let lhs = cover_homomorphism_value(&w1.mul(&w2), 2, n);
            let rhs = (cover_homomorphism_value(&w1, 2, n) + cover_homomorphism_value(&w2, 2, n)) % n;
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn inverse_cancels(letters in arb_letters(3, 20)) {
            let word = free_reduce(&letters);
            prop_assert!(word.mul(&word.inverse()).is_empty());
        }
    }
}
