use std::fs;

use moran::Graph;
use moran_cli::run_command;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run_with_stdin(args: &[&str], stdin: &str) -> Run {
    let argv = std::iter::once("moran").chain(args.iter().copied());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_command(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn run(args: &[&str]) -> Run {
    run_with_stdin(args, "")
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn gen_double_star_prints_graph_text() {
    let r = run(&["gen", "--family", "double_star", "--k", "4"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let g = Graph::from_text(&r.out).unwrap();
    assert_eq!((g.n(), g.m(), g.max_degree()), (10, 9, 5));
}

#[test]
fn exact_on_k2_matches_hand_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k2.txt");
    fs::write(&path, run(&["gen", "--family", "complete", "--n", "2"]).out).unwrap();
    let r = run(&["exact", "--graph", path.to_str().unwrap(), "--r", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = json(&r.out);
    assert!((v["fixation"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["n_states"], 4);
    assert!(v["absorption_time"].as_f64().is_some());
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn estimate_rejects_fitness_at_most_one() {
    let r = run(&["estimate", "--family", "cycle", "--n", "5", "--r", "0.5", "--eps", "0.1"]);
    assert_eq!(r.code, 1);
    assert!(r.out.is_empty());
    let r = run(&["estimate", "--family", "cycle", "--n", "5", "--r", "1", "--eps", "1/10"]);
    assert_eq!(r.code, 1);
}

#[test]
fn estimate_reports_fields_and_is_reproducible() {
    let args = ["estimate", "--family", "double_star", "--k", "3", "--r", "2", "--eps", "1/4", "--seed", "17"];
    let a = run(&args);
    assert_eq!(a.code, 0, "{}", a.err);
    let v = json(&a.out);
    for key in ["value", "n_runs", "p_threshold_num", "p_threshold_den", "total_active_steps", "capped", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["seed"], 17);
    assert_eq!(v["capped"], false);
    let one_thread: Vec<&str> = args.iter().copied().chain(["--jobs", "1"]).collect();
    let three_threads: Vec<&str> = args.iter().copied().chain(["--jobs", "3"]).collect();
    assert_eq!(run(&one_thread).out, a.out);
    assert_eq!(run(&three_threads).out, a.out);
}

#[test]
fn simulate_output_is_independent_of_thread_count() {
    let base = ["simulate", "--family", "cycle", "--n", "12", "--r", "3/2", "--runs", "40", "--seed", "5"];
    let a = run(&base.iter().copied().chain(["--jobs", "1"]).collect::<Vec<_>>());
    let b = run(&base.iter().copied().chain(["--jobs", "4"]).collect::<Vec<_>>());
    assert_eq!(a.code, 0, "{}", a.err);
    assert_eq!(a.out, b.out);
    assert_eq!(a.out.lines().count(), 41);
    assert!(a.out.starts_with("run,result,active_steps,naive_steps,final_mutants,final_phi\n"));
}

#[test]
fn trace_has_one_line_per_active_step() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let r = run(&[
        "simulate",
        "--family",
        "double_star",
        "--k",
        "3",
        "--r",
        "2",
        "--seed",
        "2",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let steps: usize = r.out.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,spawner,target,n_mut,phi_num_scaled"));
    let rows: Vec<Vec<u64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), steps);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i as u64 + 1);
        assert!((1..=8).contains(&row[1]) && (1..=8).contains(&row[2]));
    }
}

#[test]
fn trace_needs_a_single_run() {
    let r = run(&["simulate", "--family", "cycle", "--n", "4", "--r", "2", "--runs", "2", "--trace", "x.csv"]);
    assert_eq!(r.code, 1);
}

#[test]
fn group_sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let groups = dir.path().join("g.groups");
    let r = run(&["gen", "--family", "dir_suppressor", "--k", "3", "--a", "2", "--groups", groups.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.err);
    fs::write(&graph, &r.out).unwrap();
    assert!(fs::read_to_string(&groups).unwrap().contains("X_3:"));
    let from_file = run(&[
        "exact",
        "--graph",
        graph.to_str().unwrap(),
        "--groups",
        groups.to_str().unwrap(),
        "--r",
        "2",
        "--start",
        "X_3",
    ]);
    let from_family =
        run(&["exact", "--family", "dir_suppressor", "--k", "3", "--a", "2", "--r", "2", "--start", "X_3"]);
    assert_eq!(from_file.code, 0, "{}", from_file.err);
    assert_eq!(from_file.out, from_family.out);
    let missing = run(&["exact", "--graph", graph.to_str().unwrap(), "--r", "2", "--start", "X_3"]);
    assert_eq!(missing.code, 2);
}

#[test]
fn graph_can_come_from_stdin() {
    let text = run(&["gen", "--family", "star", "--k", "3"]).out;
    let r = run_with_stdin(&["info", "--graph", "-"], &text);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = json(&r.out);
    assert_eq!(v["n"], 4);
    assert_eq!(v["average_degree"], "3/2");
    assert_eq!(v["phi_total"], "10/3");
}

#[test]
fn drift_lists_every_proper_subset() {
    let r = run(&["drift", "--family", "cycle", "--n", "4"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let lines: Vec<&str> = r.out.lines().collect();
    assert_eq!(lines[0], "subset_bitmask,drift_num,drift_den,is_barrier");
    assert_eq!(lines.len(), 1 + 14);
    // {1} on C_4: two boundary edges of weight 1/4
    assert_eq!(lines[1], "1,1,2,false");
}

#[test]
fn barrier_without_barriers_is_header_only() {
    let r = run(&["barrier", "--family", "path", "--n", "4"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out, "subset_bitmask,drift_num,drift_den,is_barrier\n");
}

#[test]
fn drift_refuses_large_graphs() {
    let r = run(&["drift", "--family", "cycle", "--n", "30"]);
    assert_eq!(r.code, 2);
}

#[test]
fn exact_refuses_too_many_states() {
    let r = run(&["exact", "--family", "cycle", "--n", "21", "--r", "2"]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("too large"));
}

#[test]
fn bench_absorption_rows_and_slope() {
    let r = run(&["bench-absorption", "--family", "double_star", "--sizes", "2,4,8", "--r", "2", "--runs", "200"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let lines: Vec<&str> = r.out.lines().collect();
    assert_eq!(lines[0], "size,n,runs,mean,stderr,loglog_slope");
    assert_eq!(lines.len(), 4);
    let slope: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!(slope > 1.5 && slope < 4.0, "{slope}");
}

#[test]
fn suppressor_audit_passes_at_construction_parameters() {
    // a = ⌈7r²/2⌉ = 14 at r = 2
    let r = run(&["suppressor-audit", "--family", "undir_suppressor", "--a", "14", "--k", "28", "--samples", "10"]);
    assert_eq!(r.code, 0, "{}{}", r.out, r.err);
    assert_eq!(r.out.lines().count(), 11);
    let r = run(&["suppressor-audit", "--family", "dir_suppressor", "--k", "12", "--a", "8", "--runs", "500"]);
    assert_eq!(r.out.lines().count(), 4);
    assert_eq!(r.code, 0, "{}{}", r.out, r.err);
    assert!(r.out.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn format_flag_switches_reports() {
    let r = run(&["exact", "--family", "complete", "--n", "3", "--r", "2", "--format", "csv"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("fixation,absorption_time,n_states,residual\n"));
    let r = run(&["drift", "--family", "path", "--n", "3", "--format", "json"]);
    let first = json(r.out.lines().next().unwrap());
    assert_eq!(first["subset_bitmask"], 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["nonsense"]).code, 1);
    assert_eq!(run(&["exact", "--family", "cycle", "--n", "4", "--r", "2", "--bogus"]).code, 1);
    assert_eq!(run(&["exact", "--family", "cycle", "--r", "2"]).code, 1);
    assert_eq!(run(&["gen", "--family", "hexagon", "--n", "4"]).code, 1);
    assert_eq!(run(&["gen", "--family", "cycle", "--n", "5/2"]).code, 1);
}

#[test]
fn help_exits_zero() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("suppressor-audit"));
}

#[test]
fn bad_graph_text_is_an_input_error() {
    let r = run_with_stdin(&["info", "--graph", "-"], "moran-graph v1\ndirected 0\n2 1 1\n1: 1 2\n2: 1 2\n");
    assert_eq!(r.code, 2);
}

#[test]
fn suppressor_audit_flags_violations() {
    // a = 3 is below ⌈7r²/2⌉, where the sigma bound is not promised
    let r = run(&["suppressor-audit", "--family", "undir_suppressor", "--a", "3", "--k", "4", "--samples", "10"]);
    assert_eq!(r.code, 4, "{}{}", r.out, r.err);
    assert!(r.out.lines().skip(1).any(|l| l.ends_with(",false")));
}
