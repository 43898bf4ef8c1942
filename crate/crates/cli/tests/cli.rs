//! End-to-end tests of the `subeq` binary: exit codes, file formats and output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use subeq::field::{GridFunction, GridGeometry};

fn subeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subeq"))
        .args(args)
        .env_remove("SUBEQ_TOL_PROFILE")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn write_jet(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn check_reports_membership_through_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let inside = write_jet(dir.path(), "in.json", r#"{"flavor":"real","r":0,"p":[1,2],"A":[2,1,1,2]}"#);
    let outside = write_jet(dir.path(), "out.json", r#"{"flavor":"real","r":0,"p":[0,0],"A":[1,0,0,-1]}"#);

    let out = subeq(&["check", "--jet", &inside, "--spec", "poscone:2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["member"], true);

    let out = subeq(&["check", "--jet", &outside, "--spec", "poscone:2"]);
    assert_eq!(code(&out), 1);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["member"], false);
}

#[test]
fn product_of_cones_decides_the_full_hessian() {
    let dir = tempfile::tempdir().unwrap();
    // [[1, 2], [2, 1]] has eigenvalues 3 and -1, while both diagonal entries are positive.
    let indefinite = write_jet(dir.path(), "j.json", r#"{"flavor":"real","r":0,"p":[0,0],"A":[1,2,2,1]}"#);
    let definite = write_jet(dir.path(), "k.json", r#"{"flavor":"real","r":0,"p":[0,0],"A":[2,1,1,2]}"#);
    let args = |j: &str| vec!["product", "--jet", j, "--f", "poscone:1", "--g", "poscone:1"].into_iter().map(String::from).collect::<Vec<_>>();
    let run = |j: &str| {
        let a = args(j);
        subeq(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    assert_eq!(code(&run(&indefinite)), 1);
    assert_eq!(code(&run(&definite)), 0);
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let jet = write_jet(dir.path(), "j.json", r#"{"flavor":"real","r":0,"p":[0],"A":[1]}"#);
    let broken = write_jet(dir.path(), "b.json", "{not json");

    assert_eq!(code(&subeq(&["check", "--jet", &broken, "--spec", "poscone:1"])), 2);
    assert_eq!(code(&subeq(&["check", "--jet", &jet, "--spec", "nosuch:1"])), 2);
    assert_eq!(code(&subeq(&["check", "--jet", &jet, "--spec", "poscone:2"])), 2);
    assert_eq!(code(&subeq(&["check", "--jet", "/nonexistent/j.json", "--spec", "poscone:1"])), 2);
    assert_eq!(code(&subeq(&["marginal", "--field", "unknown-field"])), 2);
    assert_eq!(code(&subeq(&["frobnicate"])), 2);
}

#[test]
fn marginal_tsv_lists_every_base_node() {
    let out = subeq(&["marginal", "--field", "quad:n=1,coupling=1", "--format", "tsv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x0\tg\tg_discrete\tgamma\tinterior");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split('\t').take(4).map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    for row in rows {
        // g <= g_discrete, and the marginal of x^2 + (y - x)^2 is x^2.
        assert!(row[1] <= row[2]);
        assert!((row[1] - row[0] * row[0]).abs() < 1e-9, "{row:?}");
    }
}

#[test]
fn regularisers_round_trip_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let geometry = GridGeometry::spanning(&[-1.0, -1.0], &[1.0, 1.0], &[17, 17]).unwrap();
    let f = GridFunction::<f64>::from_fn(geometry, |x| x[0].abs() + x[1] * x[1]).unwrap();
    let input = dir.path().join("input");
    f.save(&input).unwrap();
    let input = input.with_extension("json");

    let sup = dir.path().join("sup");
    let out = subeq(&["supconv", "--grid", input.to_str().unwrap(), "--eps", "0.05", "--save", sup.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = GridFunction::<f64>::load(&sup).unwrap();
    assert_eq!(s.geometry, f.geometry);
    assert!(s.values.iter().zip(&f.values).all(|(a, b)| a >= b));

    let moll = dir.path().join("moll");
    let out = subeq(&["mollify", "--grid", input.to_str().unwrap(), "--eps", "0.25", "--save", moll.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = GridFunction::<f64>::load(&moll).unwrap();
    assert!(m.active_count() > 0 && m.active_count() < m.len());

    assert_eq!(code(&subeq(&["mollify", "--grid", input.to_str().unwrap(), "--eps", "0.01", "--save", moll.to_str().unwrap()])), 2);
}

#[test]
fn selftest_output_does_not_depend_on_thread_count() {
    let one = subeq(&["--threads", "1", "selftest", "--seed", "3", "--no-determinism"]);
    let many = subeq(&["--threads", "4", "selftest", "--seed", "3", "--no-determinism"]);
    assert_eq!(code(&one), 0, "{}", stdout(&one));
    assert_eq!(code(&many), 0);
    assert_eq!(one.stdout, many.stdout);
}
