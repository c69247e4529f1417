//! The pipelines behind each subcommand. Input problems are returned as
//! errors; mathematical outcomes, including failed computations, become
//! checks in the report.

use crate::report::{combined_digest, matrix_json, point_json, volume_string, Check, InputDigest, Report, SCHEMA};
use crate::svg::{curves_svg, Layer};
use anyhow::{anyhow, bail, Context, Result};
use mutkit_core::formats::{
    parse_cover, parse_maskit, parse_mutation, parse_representation, parse_surface, parse_triangulation,
    write_presentation, write_representation, ConjugatorSource, FormatError, MaskitCase,
};
use mutkit_core::limit_set::{ConditionReport, CurveModel};
use mutkit_core::volume::{
    product_cycle_volume, volume_of_decorated_cycle, ProductCycleOptions, VolumeError,
};
use mutkit_core::{
    build_curve_model, build_mutant_representation, build_rho_X, check_precise_invariance_amalgam,
    check_precise_invariance_hnn, classify, cover_volume_check, develop_cycle, fixed_points_tol, jorgensen_test,
    sample_limit_set, solve_assumption, solve_gluing_equations, verify_mutation_volume, LiftMode, MaskitOptions,
    MatrixRepresentation, MoebiusTolerances, MutationSpec, RepTolerances, SolvedConjugator,
    SurfaceInclusion, WordSample,
};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Settings {
    pub tol: Option<f64>,
    pub seed: u64,
    pub max_word_length: usize,
    pub lift: LiftMode,
    pub force: bool,
    pub emit_image: Option<PathBuf>,
    pub rep_tol: f64,
}

/// State collected while one job runs.
pub struct Run<'a> {
    settings: &'a Settings,
    inputs: Vec<InputDigest>,
    warnings: Vec<String>,
    tolerances: BTreeMap<&'static str, f64>,
}

fn format_error(path: &Path, e: FormatError) -> anyhow::Error {
    let lines: Vec<String> = e
        .diagnostics
        .iter()
        .map(|d| format!("{}:{}: {}", path.display(), d.line, d.message))
        .collect();
    anyhow!(lines.join("\n"))
}

impl<'a> Run<'a> {
    pub fn new(settings: &'a Settings) -> Self {
        let mut tolerances = BTreeMap::new();
        tolerances.insert("rep_tol", settings.rep_tol);
        Self {
            settings,
            inputs: Vec::new(),
            warnings: Vec::new(),
            tolerances,
        }
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: crate::report::sha256_hex(&bytes),
        });
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    /// `--tol` if given, else `default`; recorded under `name`.
    fn tol(&mut self, name: &'static str, default: f64) -> f64 {
        let t = self.settings.tol.unwrap_or(default);
        self.tolerances.insert(name, t);
        t
    }

    fn fixed_tol(&mut self, name: &'static str, value: f64) -> f64 {
        self.tolerances.insert(name, value);
        value
    }

    fn rep_tolerances(&self) -> RepTolerances<f64> {
        RepTolerances {
            rep_tol: self.settings.rep_tol,
            lift: self.settings.lift,
            moebius: MoebiusTolerances::default(),
        }
    }

    /// Refuses representations whose relators miss the identity by more than
    /// `rep_tol`, unless `--force`.
    fn check_rep(&mut self, rep: &MatrixRepresentation<f64>, path: &Path) -> Result<()> {
        let r = rep.max_residual(self.settings.lift);
        if r.is_nan() || r > self.settings.rep_tol {
            let msg = format!(
                "{}: relator residual {r:e} exceeds rep_tol {:e} ({} lift)",
                path.display(),
                self.settings.rep_tol,
                self.settings.lift
            );
            if !self.settings.force {
                bail!("{msg}; pass --force to continue anyway");
            }
            self.warnings.push(msg);
        }
        Ok(())
    }

    fn finish(self, command: &'static str, checks: Vec<Check>, result: Value) -> Report {
        Report {
            schema: SCHEMA,
            command,
            inputs_digest: combined_digest(&self.inputs),
            inputs: self.inputs,
            seed: self.settings.seed,
            lift: self.settings.lift,
            tolerances: self.tolerances,
            passed: checks.iter().all(|c| c.passed),
            checks,
            warnings: self.warnings,
            result,
        }
    }
}

fn load_mutation(run: &mut Run<'_>, path: &Path) -> Result<MutationSpec<f64>> {
    let text = run.read(path)?;
    let spec = parse_mutation(&text).map_err(|e| format_error(path, e))?;
    run.check_rep(&spec.ambient, path)?;
    Ok(spec)
}

fn conjugator_checks(run: &mut Run<'_>, c: &SolvedConjugator<f64>, checks: &mut Vec<Check>) -> Value {
    let tol = run.tol("conjugation_residual", 1e-10);
    checks.push(Check::bounded("conjugation_residual", c.diagnostics.residual, tol));
    checks.push(Check::bounded("finite_order", c.certificate.distance, tol));
    checks.push(Check::bounded("double_order_identity", c.certificate.double_order_distance, tol));
    json!({
        "conjugator": matrix_json(&c.matrix),
        "order": c.certificate.order,
        "power_sign": c.certificate.sign,
        "nullspace_dimension": c.diagnostics.nullspace_dimension,
        "singular_values": c.diagnostics.singular_values,
        "smallest_retained": c.diagnostics.smallest_retained,
        "largest_discarded": c.diagnostics.largest_discarded,
        "residual": c.diagnostics.residual,
        "residual_warning": c.diagnostics.residual_warning,
    })
}

pub fn solve_conjugator(settings: &Settings, path: &Path) -> Result<Report> {
    let mut run = Run::new(settings);
    let spec = load_mutation(&mut run, path)?;
    let mut checks = Vec::new();
    let result = match solve_assumption(&spec, &run.rep_tolerances()) {
        Ok(solved) => {
            let c = solved.conjugator.expect("solved spec carries its conjugator");
            conjugator_checks(&mut run, &c, &mut checks)
        }
        Err(e) => {
            checks.push(Check::failed("solve_assumption", &e));
            Value::Null
        }
    };
    Ok(run.finish("solve-conjugator", checks, result))
}

pub fn build_mutant(settings: &Settings, path: &Path) -> Result<Report> {
    let mut run = Run::new(settings);
    let spec = load_mutation(&mut run, path)?;
    if spec.splitting.is_none() {
        bail!("{}: build-mutant needs a `splitting` section", path.display());
    }
    let rep_tol = settings.rep_tol;
    let tols = run.rep_tolerances();
    let mut checks = Vec::new();
    let solved = match solve_assumption(&spec, &tols) {
        Ok(s) => s,
        Err(e) => {
            checks.push(Check::failed("solve_assumption", &e));
            return Ok(run.finish("build-mutant", checks, Value::Null));
        }
    };
    let c = solved.conjugator.clone().expect("solved spec carries its conjugator");
    let conjugator = conjugator_checks(&mut run, &c, &mut checks);
    let mut result = json!({ "conjugator": conjugator });
    match build_rho_X(&solved, &tols) {
        Ok(x) => {
            checks.push(Check::bounded("extended_relators", x.max_residual(settings.lift), rep_tol));
            result["extended_presentation"] = Value::String(write_presentation(x.presentation()));
        }
        Err(e) => checks.push(Check::failed("extended_relators", &e)),
    }
    match build_mutant_representation(&solved, &tols) {
        Ok(m) => {
            checks.push(Check::bounded("mutant_relators", m.max_residual(settings.lift), rep_tol));
            result["mutant_representation"] = Value::String(write_representation(&m));
        }
        Err(e) => checks.push(Check::failed("mutant_relators", &e)),
    }
    Ok(run.finish("build-mutant", checks, result))
}

fn condition_check(c: &ConditionReport<f64>) -> Check {
    let mut check = Check::flag(c.name, c.status != mutkit_core::CheckStatus::Fail);
    check.value = c.worst_margin;
    let witness = c.witness.as_ref().map(|w| {
        json!({
            "word": w.word,
            "probe": point_json(&w.probe),
            "image": point_json(&w.image),
            "expected": w.expected,
            "observed": w.observed,
        })
    });
    check.with_detail(json!({
        "status": c.status,
        "checked": c.checked,
        "ambiguous": c.ambiguous,
        "violations": c.violations,
        "witness": witness,
    }))
}

pub fn check_maskit(settings: &Settings, path: &Path) -> Result<Report> {
    let mut run = Run::new(settings);
    let text = run.read(path)?;
    let cfg = parse_maskit(&text).map_err(|e| format_error(path, e))?;
    let rep = &cfg.representation;
    run.check_rep(rep, path)?;
    let mut checks = Vec::new();
    let mut result = json!({
        "case": cfg.case,
        "max_word_length": settings.max_word_length,
    });

    let a = match &cfg.conjugator {
        ConjugatorSource::Matrix(m) => *m,
        ConjugatorSource::Solve { tau, order } => {
            let inclusion = SurfaceInclusion::new(cfg.surface.clone(), tau.clone(), *order)
                .map_err(|e| anyhow!("{}: {e}", path.display()))?;
            let spec = MutationSpec::new(rep.clone(), inclusion, None).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            match solve_assumption(&spec, &run.rep_tolerances()) {
                Ok(s) => {
                    let c = s.conjugator.expect("solved spec carries its conjugator");
                    result["solved_conjugator"] = conjugator_checks(&mut run, &c, &mut checks);
                    c.matrix
                }
                Err(e) => {
                    checks.push(Check::failed("solve_assumption", &e));
                    return Ok(run.finish("check-maskit", checks, result));
                }
            }
        }
    };
    result["conjugator"] = matrix_json(&a);

    let defaults = MaskitOptions::<f64>::default();
    let opts = MaskitOptions {
        band_tol: run.tol("band_tol", defaults.band_tol),
        sep_tol: run.fixed_tol("sep_tol", defaults.sep_tol),
        seed: settings.seed,
        b1_point: cfg.b1_point,
        ..defaults
    };
    run.fixed_tol("dedup_radius", cfg.dedup);
    let generators = rep.evaluate_all(&cfg.surface);
    let curve = match sample_limit_set(&generators, settings.max_word_length, cfg.dedup)
        .and_then(|s| build_curve_model(&s))
    {
        Ok(c) => c,
        Err(e) => {
            checks.push(Check::failed("curve_model", &e));
            return Ok(run.finish("check-maskit", checks, result));
        }
    };
    result["sample_points"] = json!(curve.len());
    result["max_gap"] = json!(curve.max_gap);

    let h = WordSample::from_words(rep, &cfg.h);
    let mut layers: Vec<(&'static str, &'static str, bool, CurveModel<f64>)> =
        vec![("W", "black", false, curve.clone()), ("A(W)", "red", true, curve.mapped(&a))];
    match cfg.case {
        MaskitCase::Amalgam => {
            let g1 = WordSample::from_words(rep, &cfg.g1);
            let g2 = WordSample::from_words(rep, &cfg.g2);
            match check_precise_invariance_amalgam(&curve, &h, &g1, &g2, &a, &opts) {
                Ok(r) => {
                    checks.extend(r.conditions.iter().map(condition_check));
                    result["side_action"] = json!(r.side_action);
                    result["b1_side"] = json!(r.b1_side);
                    result["b1_choice"] = json!(r.b1_choice);
                    result["probes"] = json!([r.probes_b1, r.probes_b2]);
                    result["curve_tol"] = json!(r.curve_tol);
                    result["band"] = json!(r.band);
                }
                Err(e) => checks.push(Check::failed("precise_invariance", &e)),
            }
        }
        MaskitCase::Hnn => {
            let f = rep.evaluate(cfg.stable.as_ref().expect("parser requires a stable word in the hnn case"));
            let g0 = WordSample::from_words(rep, &cfg.g0);
            layers.push(("f(W)", "blue", false, curve.mapped(&f)));
            match check_precise_invariance_hnn(&curve, &f, &a, &h, &g0, &opts) {
                Ok(r) => {
                    checks.extend(r.conditions.iter().map(condition_check));
                    result["side_action"] = json!(r.side_action);
                    result["separation"] = json!(r.separation);
                    result["probes"] = json!(r.probes);
                    result["curve_tol"] = json!(r.curve_tol);
                }
                Err(e) => checks.push(Check::failed("precise_invariance", &e)),
            }
        }
    }
    if let Some(out) = &settings.emit_image {
        let layers: Vec<Layer<'_>> = layers
            .iter()
            .map(|(label, color, dashed, c)| Layer {
                label,
                color,
                dashed: *dashed,
                points: &c.points,
            })
            .collect();
        std::fs::write(out, curves_svg(&layers)).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(run.finish("check-maskit", checks, result))
}

fn load_pair(
    run: &mut Run<'_>,
    tri_path: &Path,
    rep_path: &Path,
) -> Result<(mutkit_core::IdealTriangulation, MatrixRepresentation<f64>)> {
    let tri_text = run.read(tri_path)?;
    let tri = parse_triangulation(&tri_text).map_err(|e| format_error(tri_path, e))?;
    let rep_text = run.read(rep_path)?;
    let rep = parse_representation(&rep_text).map_err(|e| format_error(rep_path, e))?;
    run.check_rep(&rep, rep_path)?;
    Ok((tri, rep))
}

pub fn volume(settings: &Settings, tri_path: &Path, rep_path: &Path) -> Result<Report> {
    let mut run = Run::new(settings);
    let (tri, rep) = load_pair(&mut run, tri_path, rep_path)?;
    let agree_tol = run.tol("path_agreement", 1e-9);
    let mismatch_tol = run.fixed_tol("decoration_mismatch", 1e-8);
    let mut checks = Vec::new();
    let mut result = json!({});

    let cycle_volume = match develop_cycle(&tri, &rep) {
        Ok(d) => {
            let v = volume_of_decorated_cycle(&d.cycle);
            checks.push(Check::bounded("decoration_mismatch", d.max_mismatch, mismatch_tol));
            result["cycle_volume"] = json!(volume_string(v.volume));
            result["degenerate_simplices"] = json!(v.degenerate);
            result["cone_points"] = Value::Array(d.cone_points.iter().map(point_json).collect());
            result["peripheral_words"] = json!(d
                .peripheral_words
                .iter()
                .map(|ws| ws.iter().map(|w| rep.presentation().format_word(w)).collect::<Vec<_>>())
                .collect::<Vec<_>>());
            Some(v.volume)
        }
        Err(e) => {
            checks.push(Check::failed("develop", &e));
            None
        }
    };
    let gluing_volume = match solve_gluing_equations::<f64>(&tri) {
        Ok(s) => {
            checks.push(Check::flag("positively_oriented", s.is_positively_oriented()).with_detail(json!({
                "flat_or_negative": s.flat_or_negative,
            })));
            result["gluing_volume"] = json!(volume_string(s.volume()));
            result["gluing_iterations"] = json!(s.iterations);
            result["gluing_residual"] = json!(s.max_residual());
            result["shapes"] = json!(s.shapes.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
            Some(s.volume())
        }
        Err(VolumeError::NotConsistentlyOrdered) => {
            run.warnings
                .push("triangulation is not consistently ordered; gluing-equation path skipped".into());
            None
        }
        Err(e) => {
            checks.push(Check::failed("gluing_equations", &e));
            None
        }
    };
    if let (Some(c), Some(g)) = (cycle_volume, gluing_volume) {
        checks.push(Check::bounded("paths_agree", (c - g).abs(), agree_tol));
        result["difference"] = json!(volume_string((c - g).abs()));
    }
    Ok(run.finish("volume", checks, result))
}

pub fn verify_mutation(
    settings: &Settings,
    tri: &Path,
    rep: &Path,
    mutant_tri: &Path,
    mutant_rep: &Path,
) -> Result<Report> {
    let mut run = Run::new(settings);
    let original = load_pair(&mut run, tri, rep)?;
    let mutant = load_pair(&mut run, mutant_tri, mutant_rep)?;
    let tol = run.tol("volume_difference", 1e-9);
    let mut checks = Vec::new();
    let result = match verify_mutation_volume((&original.0, &original.1), (&mutant.0, &mutant.1), tol) {
        Ok(r) => {
            checks.push(Check::bounded("volume_difference", r.difference, tol));
            for (name, est) in [("original_paths_agree", &r.original), ("mutant_paths_agree", &r.mutant)] {
                if let Some(d) = est.gluing_difference {
                    checks.push(Check::bounded(name, d, tol));
                }
            }
            let side = |e: &mutkit_core::volume::VolumeEstimate<f64>| {
                json!({
                    "cycle_volume": volume_string(e.cycle_volume),
                    "gluing_volume": e.gluing_volume.map(volume_string),
                    "degenerate_simplices": e.degenerate_simplices,
                    "max_mismatch": e.max_mismatch,
                })
            };
            json!({
                "original": side(&r.original),
                "mutant": side(&r.mutant),
                "difference": volume_string(r.difference),
            })
        }
        Err(e) => {
            checks.push(Check::failed("volumes", &e));
            Value::Null
        }
    };
    Ok(run.finish("verify-mutation", checks, result))
}

pub fn cover_check(settings: &Settings, cover: Option<&Path>, surface: Option<&Path>) -> Result<Report> {
    if cover.is_none() && surface.is_none() {
        bail!("cover-check needs --cover and/or --surface");
    }
    let mut run = Run::new(settings);
    let mut checks = Vec::new();
    let mut result = json!({});
    if let Some(path) = cover {
        let text = run.read(path)?;
        let cfg = parse_cover(&text).map_err(|e| format_error(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let (tri, rep) = load_pair(&mut run, &dir.join(&cfg.triangulation), &dir.join(&cfg.representation))?;
        let tol = run.tol("cover_multiplicativity", 1e-10);
        match develop_cycle(&tri, &rep) {
            Ok(d) => {
                let base = volume_of_decorated_cycle(&d.cycle).volume;
                let r = cover_volume_check(base, cfg.degree, &d.cycle.translates(&cfg.translate, cfg.degree), tol);
                checks.push(Check::bounded("cover_multiplicativity", r.difference, tol));
                result["cover"] = json!({
                    "degree": r.degree,
                    "base_volume": volume_string(r.base_volume),
                    "cover_volume": volume_string(r.cover_volume),
                    "expected": volume_string(r.expected),
                    "difference": r.difference,
                });
            }
            Err(e) => checks.push(Check::failed("cover_multiplicativity", &e)),
        }
    }
    if let Some(path) = surface {
        let text = run.read(path)?;
        let s = parse_surface(&text).map_err(|e| format_error(path, e))?;
        run.check_rep(&s.representation, path)?;
        let tol = run.tol("product_cycle", 1e-8);
        let opts = ProductCycleOptions {
            circle_steps: s.steps,
            seed: settings.seed,
            ..Default::default()
        };
        match product_cycle_volume(&s.surface, &s.representation, &s.circle, &opts) {
            Ok(r) => {
                checks.push(Check::bounded("product_cycle_vanishes", r.volume.abs(), tol));
                result["product"] = json!({
                    "volume": volume_string(r.volume),
                    "absolute": volume_string(r.absolute),
                    "simplices": r.simplices,
                    "degenerate": r.degenerate,
                    "circle_steps": r.circle_steps,
                    "holonomy_distance": r.holonomy_distance,
                });
            }
            Err(e) => checks.push(Check::failed("product_cycle_vanishes", &e)),
        }
    }
    Ok(run.finish("cover-check", checks, result))
}

pub fn classify_generators(settings: &Settings, path: &Path) -> Result<Report> {
    let mut run = Run::new(settings);
    let text = run.read(path)?;
    let rep = parse_representation(&text).map_err(|e| format_error(path, e))?;
    run.check_rep(&rep, path)?;
    let tol = run.tol("classify", 1e-10);
    let names = rep.presentation().generator_names();
    let images = rep.images();
    let elements: Vec<Value> = names
        .iter()
        .zip(images)
        .map(|(n, m)| {
            let c = classify(m, tol);
            let fixed: Vec<Value> = fixed_points_tol(m, tol)
                .map(|ps| ps.iter().map(point_json).collect())
                .unwrap_or_default();
            json!({
                "generator": n,
                "kind": c.kind,
                "trace": [c.trace.re, c.trace.im],
                "fixed_points": fixed,
            })
        })
        .collect();
    let mut checks = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..images.len() {
        for j in 0..images.len() {
            if i == j {
                continue;
            }
            let (g, h) = (&images[i], &images[j]);
            let comm = *g * *h * g.inverse() * h.inverse();
            let elementary = (comm.trace() - num_complex::Complex::new(2.0, 0.0)).norm() <= tol;
            let name = format!("jorgensen({},{})", names[i], names[j]);
            if elementary {
                pairs.push(json!({ "pair": name, "elementary": true }));
                continue;
            }
            let r = jorgensen_test(g, h, tol);
            pairs.push(json!({ "pair": name, "elementary": false, "lhs": r.lhs }));
            let mut c = Check::flag(name, r.passes);
            c.value = Some(r.lhs);
            c.limit = Some(1.0 - tol);
            c.margin = Some(r.lhs - (1.0 - tol));
            checks.push(c);
        }
    }
    Ok(run.finish(
        "classify",
        checks,
        json!({ "elements": elements, "jorgensen": pairs }),
    ))
}

