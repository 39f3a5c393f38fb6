use std::path::Path;

use crate::run_with;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn spinchain(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(
        std::iter::once("spinchain").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn stdout(out: &Output) -> String {
    out.stdout.clone()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn ops_builds_the_cycle_and_checks_its_order() {
    let out = spinchain(&["ops", "--n", "3", "--gens", "P12,P23"]);
    assert_eq!(out.code, 0);
    let text = stdout(&out);
    assert!(text.contains("order: 3 (U^3 = Id: true)"), "{text}");
    assert!(text.contains("involution: false"));

    let out = spinchain(&["ops", "--n", "3", "--gens", "P12,P23", "--format", "csv"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 64);
    let ones: Vec<(usize, usize)> = rows
        .iter()
        .filter(|r| r[2].parse::<f64>().unwrap() == 1.0)
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(
        ones,
        vec![
            (0, 0),
            (1, 2),
            (2, 3),
            (3, 1),
            (4, 5),
            (5, 6),
            (6, 4),
            (7, 7)
        ]
    );
}

#[test]
fn ops_swap_grid_and_trivial_product() {
    let text = stdout(&spinchain(&["ops", "--n", "2", "--gens", "P12"]));
    assert!(
        text.contains("1 0 0 0\n0 0 1 0\n0 1 0 0\n0 0 0 1\n"),
        "{text}"
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&spinchain(&[
        "ops", "--n", "3", "--gens", "P12,P12", "--format", "json",
    ])))
    .unwrap();
    assert_eq!(json["order"], 1);
    assert_eq!(json["matrix"]["flags"]["permutation"], true);
}

#[test]
fn bad_generators_report_the_position() {
    let out = spinchain(&["ops", "--n", "3", "--gens", "P12,Q23"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("position 4"));
    assert_eq!(spinchain(&["ops", "--n", "3", "--gens", "P14"]).code, 2);
}

#[test]
fn bch_exit_status_follows_the_report() {
    assert_eq!(spinchain(&["bch", "--tol", "1e-20"]).code, 1);
    assert_eq!(spinchain(&["bch", "--tol", "1e-10"]).code, 1);
    assert_eq!(
        spinchain(&["bch", "--tol", "1e-10", "--kappa", "swapped"]).code,
        0
    );
    assert_eq!(spinchain(&["bch", "--tol", "0"]).code, 2);

    let out = spinchain(&["bch", "--tol", "1e-6", "--format", "csv"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);

    let json: serde_json::Value = serde_json::from_str(&stdout(&spinchain(&["bch"]))).unwrap();
    assert!(json["residuals"]["lhs_vs_cycle"].as_f64().unwrap() < 1e-14);
}

#[test]
fn spectrum_lists_cube_roots_of_unity() {
    let out = spinchain(&[
        "spectrum", "--model", "cogwheel", "--states", "3", "--format", "csv",
    ]);
    assert_eq!(out.code, 0);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let (re, im): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((re.hypot(im) - 1.0).abs() < 1e-12);
    }
    let json: serde_json::Value = serde_json::from_str(&stdout(&spinchain(&["spectrum"]))).unwrap();
    assert_eq!(json["eigenvalues"].as_array().unwrap().len(), 8);
    assert!(json["residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn sweep_emits_one_row_per_epsilon_and_output() {
    let out = spinchain(&[
        "sweep",
        "--scheme",
        "exact-hamiltonian",
        "--eps",
        "0.01,0.05,0.1",
        "--in",
        "uud",
    ]);
    assert_eq!(out.code, 0);
    let text = stdout(&out);
    assert!(text.starts_with("epsilon,config_in,config_out,re,im,prob\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 24);
    for chunk in rows.chunks(8) {
        let total: f64 = chunk.iter().map(|r| r[5].parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    for field in rows.iter().flat_map(|r| [&r[3], &r[4], &r[5]]) {
        let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{field}");
    }
}

#[test]
fn zero_epsilon_leaves_a_fixed_point_alone() {
    let rows = csv_rows(&stdout(&spinchain(&[
        "sweep",
        "--scheme",
        "exact-hamiltonian",
        "--eps",
        "0",
        "--in",
        "uuu",
    ])));
    let occupied: Vec<&Vec<String>> = rows
        .iter()
        .filter(|r| r[5].parse::<f64>().unwrap() > 1e-15)
        .collect();
    assert_eq!(occupied.len(), 1);
    assert_eq!(occupied[0][2], "uuu");
    assert!((occupied[0][5].parse::<f64>().unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn diagonal_sweep_spreads_over_the_sector() {
    let rows = csv_rows(&stdout(&spinchain(&[
        "sweep",
        "--scheme",
        "diagonal",
        "--c",
        "0,0.1,0.2,0.3,0,0,0,0",
        "--in",
        "uud",
    ])));
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[0].is_empty()));
    let occupied = rows
        .iter()
        .filter(|r| r[5].parse::<f64>().unwrap() > 1e-6)
        .count();
    assert_eq!(occupied, 3);
}

#[test]
fn sweep_usage_errors() {
    let out = spinchain(&["sweep", "--scheme", "bogus", "--eps", "0.1", "--in", "uud"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("hamiltonian-first-order"));
    assert_eq!(
        spinchain(&["sweep", "--scheme", "operator-exact", "--in", "uud"]).code,
        2
    );
    assert_eq!(
        spinchain(&[
            "sweep",
            "--scheme",
            "operator-exact",
            "--eps",
            "3",
            "--in",
            "uud"
        ])
        .code,
        2
    );
    assert_eq!(
        spinchain(&[
            "sweep",
            "--scheme",
            "operator-exact",
            "--eps",
            "3",
            "--in",
            "uud",
            "--unchecked"
        ])
        .code,
        0
    );
    assert_eq!(
        spinchain(&["sweep", "--scheme", "diagonal", "--c", "0,1", "--in", "uud"]).code,
        2
    );
}

#[test]
fn perturb_json_matches_the_closed_form() {
    let out = spinchain(&[
        "perturb",
        "--scheme",
        "exact-hamiltonian",
        "--eps",
        "0.1",
        "--in",
        "uud",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let duu = json["amplitudes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["config"] == "duu")
        .unwrap();
    assert!((duu["re"].as_f64().unwrap() - 0.963897686125469).abs() < 1e-12);
    assert!((duu["im"].as_f64().unwrap() + 0.20488277796451984).abs() < 1e-12);
    assert_eq!(json["classical"], false);
    assert_eq!(json["epsilon"], 0.1);
}

#[test]
fn sample_nodes_and_reconstruction() {
    let rows = csv_rows(&stdout(&spinchain(&[
        "sample",
        "--omega-max",
        "2",
        "--window",
        "3",
    ])));
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[3][0], "0");
    let out = spinchain(&[
        "sample",
        "--omega-max",
        "2",
        "--window",
        "400",
        "--at",
        "0.3,-0.7",
    ]);
    let rows = csv_rows(&stdout(&out));
    for r in rows {
        assert!(r[3].parse::<f64>().unwrap() < 1e-2, "{r:?}");
    }
    let out = spinchain(&[
        "sample",
        "--omega-max",
        "1",
        "--omega0",
        "3",
        "--grid",
        "0:1:2",
    ]);
    assert_eq!(out.code, 0);
    assert!(out.stderr.contains("exceeds omega_max"));
}

#[test]
fn payloads_are_byte_identical_across_runs() {
    for args in crate::commands::DETERMINISM_PROBES {
        assert_eq!(
            spinchain(args).stdout,
            spinchain(args).stdout,
            "{}",
            args.join(" ")
        );
    }
}

#[test]
fn relative_output_goes_to_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let out = spinchain(&[
        "sweep",
        "--scheme",
        "operator-exact",
        "--eps",
        "0.1",
        "--in",
        "uud",
        "-o",
        "runs/a.csv",
        "--output-dir",
        root,
    ]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(dir.path().join(Path::new("runs/a.csv"))).unwrap();
    assert_eq!(csv_rows(&written).len(), 8);
}

#[test]
fn negative_epsilon_lists_parse() {
    let out = spinchain(&[
        "sweep",
        "--scheme",
        "operator-first-order",
        "--eps",
        "-0.1,0.1",
        "--in",
        "uud,udu",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(csv_rows(&out.stdout).len(), 32);
}

#[test]
fn help_is_not_an_error() {
    let out = spinchain(&["--help"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("verify-all"));
}
