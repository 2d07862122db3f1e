use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_maxkcut-lab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_k4(dir: &Path) -> String {
    let path = dir.join("k4.txt");
    fs::write(&path, "4\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    path.to_str().unwrap().to_owned()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn zero_angles_give_random_value() {
    let out = run(&["qaoa-expect", "--k", "3", "--degree", "3", "--p", "1", "--mixer", "grover", "--gammas", "0", "--betas", "0"]);
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-12);
    assert!(stdout(&out).starts_with("0.666666"));
}

#[test]
fn bkkt_layers_take_several_betas() {
    let out = run(&[
        "qaoa-expect", "--k", "4", "--degree", "3", "--p", "2", "--mixer", "bkkt", "--gammas", "0,0", "--betas", "0,0,0;0,0,0",
    ]);
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 0.75).abs() < 1e-12);
}

#[test]
fn heuristic_on_k4() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_k4(dir.path());
    let four = stdout(&run(&["--no-timing", "heuristic", "--k", "4", "--graph", &g, "--improve"]));
    assert!(four.starts_with("# maxkcut-lab v1\nalgorithm,k,degree,n,p,seed,cut_fraction,wall_time_s\n"));
    let row = &data_rows(&four)[0];
    assert_eq!(row[0], "heuristic");
    assert_eq!(row[6].parse::<f64>().unwrap(), 1.0);

    let three = stdout(&run(&["--no-timing", "heuristic", "--k", "3", "--graph", &g, "--improve"]));
    let x: f64 = data_rows(&three)[0][6].parse().unwrap();
    assert!((x - 5.0 / 6.0).abs() < 1e-12);
}

#[test]
fn gen_graph_and_girth() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let p = path.to_str().unwrap();
    stdout(&run(&["gen-graph", "--n", "30", "--degree", "3", "--seed", "4", "--out", p]));
    let first = fs::read_to_string(&path).unwrap();
    stdout(&run(&["gen-graph", "--n", "30", "--degree", "3", "--seed", "4", "--out", p]));
    assert_eq!(first, fs::read_to_string(&path).unwrap());
    let g: usize = stdout(&run(&["girth", "--graph", p])).trim().parse().unwrap();
    assert!(g >= 3);

    let k4 = write_k4(dir.path());
    assert_eq!(stdout(&run(&["girth", "--graph", &k4])).trim(), "3");
}

#[test]
fn sdp_is_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_k4(dir.path());
    let gram = dir.path().join("y.csv");
    let args = ["--no-timing", "sdp", "--k", "3", "--graph", &g, "--seed", "5", "--gram-out", gram.to_str().unwrap()];
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    let x: f64 = data_rows(&a)[0][6].parse().unwrap();
    assert!(x <= 5.0 / 6.0 + 1e-12 && x > 0.0);
    let b = stdout(&run(&["--no-timing", "sdp", "--k", "3", "--graph", &g, "--seed", "5", "--gram-in", gram.to_str().unwrap()]));
    assert_eq!(data_rows(&a)[0][6], data_rows(&b)[0][6]);
}

#[test]
fn optimize_and_sweep_write_angles() {
    let dir = tempfile::tempdir().unwrap();
    let angles = dir.path().join("a.json");
    let out = stdout(&run(&[
        "--no-timing", "qaoa-optimize", "--k", "2", "--degree", "3", "--p", "1", "--seed", "1",
        "--angles-out", angles.to_str().unwrap(),
    ]));
    let x: f64 = data_rows(&out)[0][6].parse().unwrap();
    assert!((x - (0.5 + 1.0 / (3.0 * 3f64.sqrt()))).abs() < 1e-4);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&angles).unwrap()).unwrap();
    assert_eq!(json["D"], 3);
    assert_eq!(json["mixer"], "grover");

    let adir = dir.path().join("angles");
    fs::create_dir(&adir).unwrap();
    let sweep = stdout(&run(&[
        "--no-timing", "depth-sweep", "--k", "3", "--degree", "3", "--p-max", "2", "--seed", "1",
        "--restarts", "1", "--angles-dir", adir.to_str().unwrap(),
    ]));
    let rows = data_rows(&sweep);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[3] == "∞"));
    assert!(rows[1][6].parse::<f64>().unwrap() >= rows[0][6].parse::<f64>().unwrap() - 1e-10);
    assert!(adir.join("angles_k3_D3_p2_grover.json").exists());
}

#[test]
fn fit_reports_json() {
    let pts: Vec<String> = (1..=6)
        .map(|p| format!("{p}:{}", -0.3 / ((p as f64).powf(0.8) + 1.0) + 1.0))
        .collect();
    let out = stdout(&run(&["fit", "--points", &pts.join(","), "--target", "0.95"]));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((json["b"].as_f64().unwrap() - 1.0).abs() < 0.05);
    assert!(json["p_th"].as_f64().unwrap() > 6.0);
}

#[test]
fn compare_is_deterministic() {
    let args = [
        "--no-timing", "compare", "--k", "3", "--degrees", "3", "--p", "1", "--n", "40", "--instances", "2",
        "--rounds", "3", "--seed", "9", "--restarts", "1", "--max-evals", "300",
    ];
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    let algs: Vec<String> = data_rows(&a).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(algs, ["heuristic", "heuristic", "qaoa", "sdp", "sdp"]);
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(run(&["qaoa-expect", "--k", "3"]).status.code(), Some(2));
    assert_eq!(
        run(&["qaoa-expect", "--k", "3", "--degree", "3", "--p", "2", "--gammas", "0", "--betas", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["gen-graph", "--n", "11", "--degree", "3", "--seed", "1"]).status.code(), Some(2));
    // solver errors name the failing op
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "3\n0 1\n1 7\n").unwrap();
    let out = run(&["heuristic", "--k", "3", "--graph", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph::load_edge_list"));
}

#[test]
fn report_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    fs::write(&one, "# maxkcut-lab v1\nalgorithm,k,degree,n,p,seed,cut_fraction,wall_time_s\nsdp,3,3,10,,1,0.8,0.1\n").unwrap();
    let s = stdout(&run(&["report", one.to_str().unwrap()]));
    assert_eq!(s, "algorithm,k,degree,count,mean,stdev\nsdp,3,3,1,0.800000,0.000000\n");
    let s = stdout(&run(&["report", one.to_str().unwrap(), one.to_str().unwrap()]));
    assert_eq!(s, "algorithm,k,degree,count,mean,stdev\nsdp,3,3,2,0.800000,0.000000\n");

    let unversioned = dir.path().join("old.csv");
    fs::write(&unversioned, "algorithm,k\nsdp,3\n").unwrap();
    assert_eq!(run(&["report", unversioned.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn report_matches_golden_summary() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let out = stdout(&run(&["report", fixtures.join("golden.csv").to_str().unwrap()]));
    assert_eq!(out, fs::read_to_string(fixtures.join("golden_summary.csv")).unwrap());
}
