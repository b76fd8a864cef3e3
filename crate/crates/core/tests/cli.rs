mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::assert_matches_schema;
use groupfair::example1;
use serde_json::Value;
use tempfile::TempDir;

fn groupfair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupfair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Example1Files {
    _dir: TempDir,
    population: PathBuf,
    group_fair: PathBuf,
}

fn example1_files() -> Example1Files {
    let dir = TempDir::new().unwrap();
    let population = write(&dir, "pop.csv", &example1::population().to_csv_string());
    let group_fair = write(
        &dir,
        "fair.json",
        r#"{"type":"randomized","attribute":"sex","rates":{"M":["3/4","1/10"],"F":["3/4","1/10"]}}"#,
    );
    Example1Files {
        _dir: dir,
        population,
        group_fair,
    }
}

#[test]
fn audit_reproduces_the_example_tables() {
    let f = example1_files();
    let out = groupfair(&[
        "audit",
        "--population",
        s(&f.population),
        "--procedure",
        s(&f.group_fair),
        "--attribute",
        "sex",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert_matches_schema("audit_report", &v);
    assert_eq!(v["fair"], true);
    assert_eq!(v["overall_class"], "ImperfectlyJust");
    let totals = &v["contingency"]["totals"];
    assert_eq!(totals[0]["expected_convictions"]["exact"], "1875");
    assert_eq!(totals[1]["expected_convictions"]["exact"], "750");
    let m = &v["justice"]["groups"][0];
    assert_eq!(m["value"], "M");
    assert_eq!(m["convictions"]["exact"], "1900");
    assert_eq!(m["mistaken_convictions"]["exact"], "400");
}

#[test]
fn audit_csv() {
    let f = example1_files();
    let out = groupfair(&[
        "audit",
        "--population",
        s(&f.population),
        "--procedure",
        s(&f.group_fair),
        "--attribute",
        "sex",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("group,merit,count,"));
    assert!(text.contains("F,guilty,500,3/4,0.75000000,375,125"), "{text}");
    assert!(text.contains("all,innocent,7500,1/10,0.10000000,750,6750"), "{text}");
}

#[test]
fn missing_procedure_file_fails() {
    let f = example1_files();
    let out = groupfair(&[
        "audit",
        "--population",
        s(&f.population),
        "--procedure",
        "/no/such/file.json",
        "--attribute",
        "sex",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error"));
    assert!(stdout(&out).is_empty());
}

#[test]
fn malformed_population_names_the_line() {
    let dir = TempDir::new().unwrap();
    let pop = write(&dir, "p.csv", "id,J,X,attrs\na,1,1,\nb,3,0,\n");
    let out = groupfair(&["witness", "--population", s(&pop)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn zero_tolerance_on_simulated_rates_warns() {
    let f = example1_files();
    let base = [
        "audit",
        "--population",
        s(&f.population),
        "--procedure",
        s(&f.group_fair),
        "--attribute",
        "sex",
    ];
    let mut args = base.to_vec();
    args.extend(["--trials", "3", "--seed", "5", "--tolerance", "0"]);
    let out = groupfair(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
    let v = json(&out);
    assert_matches_schema("audit_report", &v);
    assert_eq!(v["empirical"], true);

    let mut args = base.to_vec();
    args.extend(["--trials", "3"]);
    let out = groupfair(&args);
    assert!(!stderr(&out).contains("warning"));
    assert_eq!(json(&out)["tolerance"], 1e-9);
}

#[test]
fn classify_prints_the_class() {
    let out = groupfair(&["classify", "--h", "0.75", "--k", "0.1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "ImperfectlyJust\n");
    let out = groupfair(&["classify", "--h", "1", "--k", "1", "--format", "json"]);
    let v = json(&out);
    assert_matches_schema("classification", &v);
    assert_eq!(v["class"], "EveryoneConvicted");
    assert_eq!(v["merit_agnostic"], true);
    let out = groupfair(&["classify", "--h", "1.5", "--k", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = groupfair(&["classify", "--h", "0.5", "--k", "0", "--eps", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn witness_exit_codes() {
    let dir = TempDir::new().unwrap();
    let perfect = write(&dir, "perfect.csv", "id,J,X,attrs\na,1,1,\nb,0,0,\nc,1,1,\n");
    let out = groupfair(&["witness", "--population", s(&perfect)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("no violation"));

    let imperfect = write(&dir, "imperfect.csv", "id,J,X,attrs\na,1,1,\nb,1,0,\nc,0,0,\n");
    let out = groupfair(&["witness", "--population", s(&imperfect), "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_matches_schema("witness_output", &v);
    assert_eq!(v["witness"]["violated_merit_classes"][0], "Innocent");
    assert_eq!(v["exhaustive"]["contains_witness"], true);

    let out = groupfair(&["witness", "--population", s(&imperfect), "--max-n", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("skipping exhaustive search"));

    let no_x = write(&dir, "nox.csv", "id,J,X,attrs\na,1,,\n");
    let out = groupfair(&["witness", "--population", s(&no_x)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn roc_export_writes_svg() {
    let dir = TempDir::new().unwrap();
    let points = write(&dir, "pts.csv", "label,h,k\nA,1,0\nex1,3/4,1/10\n");
    let out = groupfair(&["roc-export", "--points", s(&points)]);
    assert!(out.status.success());
    let svg = stdout(&out);
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains("<svg"));
    assert!(svg.contains(">ex1</text>"));

    let out = groupfair(&["roc-export", "--points", s(&points), "--format", "json"]);
    let v = json(&out);
    assert_matches_schema("diagram_points", &v);
    assert_eq!(v[1]["class"], "ImperfectlyJust");

    let out = groupfair(&["roc-export", "--format", "csv"]);
    assert_eq!(stdout(&out), "label,h,k,x,y,class\n");

    let dup = write(&dir, "dup.csv", "label,h,k\nA,1,0\nA,0,0\n");
    assert_eq!(groupfair(&["roc-export", "--points", s(&dup)]).status.code(), Some(1));
}

#[test]
fn roc_export_to_file() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("fig.svg");
    let out = groupfair(&["roc-export", "--out", s(&target)]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    assert!(std::fs::read_to_string(&target).unwrap().contains(r#"id="segment-a""#));
}

#[test]
fn simulate_is_deterministic() {
    let f = example1_files();
    let dir = TempDir::new().unwrap();
    let global = write(&dir, "g.json", r#"{"type":"randomized","rates":{"global":[0.75,0.1]}}"#);
    let args = [
        "simulate",
        "--population",
        s(&f.population),
        "--procedure",
        s(&global),
        "--seed",
        "11",
        "--trials",
        "5",
        "--attribute",
        "sex",
    ];
    let a = groupfair(&args);
    let b = groupfair(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_matches_schema("simulation_report", &v);
    assert_eq!(v["groups"].as_array().unwrap().len(), 3);
    assert_eq!(v["groups"][0]["empirical"]["support"]["guilty"], 2500 * 5);
    assert_eq!(v["groups"][0]["exact"]["h"]["exact"], "3/4");

    let det = write(&dir, "d.json", r#"{"type":"deterministic"}"#);
    let out = groupfair(&["simulate", "--population", s(&f.population), "--procedure", s(&det)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn example1_is_reproducible_in_every_format() {
    let a = groupfair(&["example1"]);
    let b = groupfair(&["example1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("GUILTY CONVICTED      1875"));
    assert!(text.contains("NOT GUILTY CONVICTED  750"));
    assert!(text.contains("375/725"));
    assert!(text.contains("12000"));

    let csv = stdout(&groupfair(&["example1", "--format", "csv"]));
    assert!(csv.contains("global,all,2500,7500,1875,750,2625,5/7"));
    assert!(csv.contains("group-fair,M,2000,4000,1500,400,1900,15/19"));
    assert!(csv.contains("group-fair,F,500,3500,375,350,725,15/29"));

    let v = json(&groupfair(&["example1", "--format", "json"]));
    assert_matches_schema("example1_report", &v);
    assert_eq!(v["population_size"], 10000);
    assert_eq!(v["stated_population_size"], 12000);
    for stage in v["stages"].as_array().unwrap() {
        assert_matches_schema("procedure", &stage["procedure"]);
        assert_eq!(stage["verdict"]["fair"], true);
    }
}

#[test]
fn unsupported_format_is_an_error() {
    let out = groupfair(&["example1", "--format", "svg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("does not support"));
}

#[test]
fn usage_errors_are_operational_failures() {
    assert_eq!(groupfair(&["classify", "--h", "0.5"]).status.code(), Some(1));
    assert_eq!(groupfair(&["bogus"]).status.code(), Some(1));
    assert_eq!(groupfair(&["--help"]).status.code(), Some(0));
}
