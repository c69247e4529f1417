use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn mutkit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mutkit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .current_dir(fixtures())
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report_path(o: &Output) -> PathBuf {
    let s = stdout(o);
    let line = s.lines().find_map(|l| l.strip_prefix("report: ")).expect("report line");
    PathBuf::from(line)
}

fn report(o: &Output) -> (Value, String) {
    let text = std::fs::read_to_string(report_path(o)).unwrap();
    (serde_json::from_str(&text).unwrap(), text)
}

#[test]
fn solve_conjugator_finds_the_inverting_involution() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(&["solve-conjugator", "sanov_inverting.mut"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let (r, _) = report(&o);
    let a = &r["result"]["conjugator"];
    let entry = |i: usize| (a[i][0].as_f64().unwrap(), a[i][1].as_f64().unwrap());
    // ±diag(i, −i)
    let (re, im) = entry(0);
    assert!(re.abs() < 1e-12 && (im.abs() - 1.0).abs() < 1e-12);
    assert!(entry(1).0.abs() < 1e-12 && entry(1).1.abs() < 1e-12);
    assert!(entry(2).0.abs() < 1e-12 && entry(2).1.abs() < 1e-12);
    assert!((entry(3).1 + im).abs() < 1e-12);
    assert_eq!(r["result"]["power_sign"], -1);
    assert_eq!(r["seed"], 0);
    assert_eq!(r["passed"], true);
}

#[test]
fn volume_of_the_figure_eight() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(&["volume", "figure8.tri", "figure8.rep"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let (r, text) = report(&o);
    assert!(text.contains("2.029883212819"));
    assert_eq!(r["result"]["cycle_volume"], "2.029883212819");
    assert_eq!(r["result"]["gluing_volume"], "2.029883212819");
}

#[test]
fn identity_mutation_has_zero_difference() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(
        &["verify-mutation", "figure8.tri", "figure8.rep", "figure8.tri", "figure8.rep"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let (r, _) = report(&o);
    assert_eq!(r["result"]["difference"], "0.000000000000");
}

#[test]
fn report_is_named_by_its_digest() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(&["classify", "figure8.rep"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let path = report_path(&o);
    let bytes = std::fs::read(&path).unwrap();
    let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let name = path.file_name().unwrap().to_string_lossy().into_owned();
    assert_eq!(name, format!("classify-{}.json", &digest[..16]));
    let (r, _) = report(&o);
    assert_eq!(r["inputs"][0]["path"], "figure8.rep");
    assert_eq!(r["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn maskit_failure_exits_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(&["check-maskit", "maskit_hnn_swap.maskit"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let (r, _) = report(&o);
    let failed: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "fa_maps_r_b2_into_b2");
    assert!(failed[0]["detail"]["witness"]["probe"].is_array());
    assert_eq!(r["result"]["side_action"], "swaps");
}

#[test]
fn unsolvable_triangulation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(&["volume", "folded_edge.tri", "figure8.rep"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL gluing_equations"));
}

#[test]
fn emit_image_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("curve.svg");
    let o = mutkit(
        &["check-maskit", "maskit_hnn.maskit", "--emit-image", svg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<polygon").count(), 3);
}

#[test]
fn product_cycle_and_cover() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(
        &["cover-check", "--cover", "figure8_cyclic.cover", "--surface", "pants.surf"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let (r, _) = report(&o);
    // cover file, then the triangulation and representation it names, then the surface
    assert_eq!(r["inputs"].as_array().unwrap().len(), 4);
    assert_eq!(r["result"]["cover"]["degree"], 4);
}

#[test]
fn build_mutant_reports_the_mutant_representation() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(&["build-mutant", "non_separating.mut"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let (r, _) = report(&o);
    let text = r["result"]["mutant_representation"].as_str().unwrap();
    let rep = mutkit_core::formats::parse_representation(text).unwrap();
    assert_eq!(rep.presentation().generator_names(), ["x", "y", "u"]);
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_reports_unknown_generator() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.pres", "mutkit presentation v1\ngenerators a b\nrelator a q b\n");
    let o = mutkit(&["validate", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.contains(":3:") && out.contains("`q`"), "{out}");
}

#[test]
fn validate_reports_non_involutive_gluing() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixtures().join("figure8.tri"))
        .unwrap()
        .replace("glue 1 2 0 3012 y^-1", "glue 1 2 0 2103 y^-1");
    let p = write(dir.path(), "bad.tri", &text);
    let o = mutkit(&["validate", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1, "{out}");
    assert!(out.contains("0:1") && out.contains("1:2"), "{out}");
}

#[test]
fn validate_accepts_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(&["validate", "figure8.tri", "figure8.rep", "sanov_swap.mut", "pants.surf"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.rep", "mutkit representation v1\ngenerators a\n");
    let o = mutkit(&["classify", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("no matrix for generator `a`"), "{err}");
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| e.unwrap().path() == p));
}

#[test]
fn residual_gate_and_force() {
    let dir = tempfile::tempdir().unwrap();
    // relator a^2 fails badly for a parabolic
    let p = write(
        dir.path(),
        "off.rep",
        "mutkit representation v1\ngenerators a\nrelator a^2\nmatrix a [[1,0],[1,0],[0,0],[1,0]]\n",
    );
    let o = mutkit(&["classify", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    let o = mutkit(&["classify", p.to_str().unwrap(), "--force"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let (r, _) = report(&o);
    assert_eq!(r["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn strict_lift_rejects_minus_one() {
    let dir = tempfile::tempdir().unwrap();
    // t^2 = -1 is accepted projectively only
    let p = write(
        dir.path(),
        "t.rep",
        "mutkit representation v1\ngenerators t\nrelator t^2\nmatrix t [[0,1],[0,0],[0,0],[0,-1]]\n",
    );
    assert_eq!(mutkit(&["classify", p.to_str().unwrap()], dir.path()).status.code(), Some(0));
    let o = mutkit(&["classify", p.to_str().unwrap(), "--strict-sl-lift"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mutkit(&["cover-check"], dir.path()).status.code(), Some(2));
    assert_eq!(mutkit(&["build-mutant", "sanov_swap.mut"], dir.path()).status.code(), Some(2));
    assert_eq!(mutkit(&["volume", "figure8.tri", "figure8.rep", "--tol", "-1"], dir.path()).status.code(), Some(2));
    assert_eq!(mutkit(&["volume", "missing.tri", "figure8.rep"], dir.path()).status.code(), Some(2));
}

#[test]
fn tolerance_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = mutkit(&["volume", "figure8.tri", "figure8.rep", "--tol", "1e-6"], dir.path());
    let (r, _) = report(&o);
    assert_eq!(r["tolerances"]["path_agreement"], 1e-6);
}

#[test]
fn seed_is_recorded_and_changes_probes() {
    let dir = tempfile::tempdir().unwrap();
    let a = mutkit(&["cover-check", "--surface", "pants.surf", "--seed", "3"], dir.path());
    let b = mutkit(&["cover-check", "--surface", "pants.surf", "--seed", "4"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let (ra, ta) = report(&a);
    let (_, tb) = report(&b);
    assert_eq!(ra["seed"], 3);
    assert_ne!(ta, tb);
}
