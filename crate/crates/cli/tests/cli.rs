use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qnbench() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qnbench"));
    cmd.env_remove("QNBENCH_OUT_DIR");
    cmd
}

fn run_ok(args: &[&str]) -> Output {
    let out = qnbench().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "qnbench {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Data rows (header and metadata stripped), split into cells.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(path: &Path, idx: usize) -> Vec<f64> {
    rows(path).iter().map(|r| r[idx].parse().unwrap()).collect()
}

const TAU: usize = 4;

fn listed(out: &Output) -> Vec<PathBuf> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(PathBuf::from)
        .collect()
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn small_matrix_run_finishes_in_d_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "run",
        "--experiment",
        "matrix_approx",
        "--d",
        "4",
        "--seeds",
        "0",
        "--output",
        tmp.path().to_str().unwrap(),
    ]);
    let files = listed(&out);
    assert_eq!(files.len(), 2, "one trace and one summary");
    let tau = column(&files[0], TAU);
    assert_eq!(tau.len(), 5);
    assert!(tau[4] <= 1e-10 * tau[0], "{tau:?}");
}

#[test]
fn exact_start_converges_in_one_step() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "run",
        "--experiment",
        "quadratic",
        "--d",
        "6",
        "--set",
        "g0=exact",
        "--output",
        tmp.path().to_str().unwrap(),
    ]);
    let trace = &listed(&out)[0];
    assert_eq!(rows(trace).len(), 2);
}

#[test]
fn bad_arguments_exit_with_usage_code() {
    let out = qnbench().args(["run", "--experiment", "spline"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = qnbench().args(["run", "--set", "bogus=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = qnbench()
        .args(["run", "--rule", "sr1", "--direction", "random_sphere", "--scaled", "true"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        run_ok(&[
            "run",
            "--experiment",
            "logsumexp",
            "--d",
            "6",
            "--m",
            "10",
            "--rule",
            "bfgs",
            "--direction",
            "random_sphere",
            "--seeds",
            "0..4",
            "--max-iters",
            "15",
            "--output",
            dir.path().to_str().unwrap(),
        ]);
    }
    let (x, y) = (dir_contents(a.path()), dir_contents(b.path()));
    assert_eq!(x.len(), 5);
    assert_eq!(x, y);
}

#[test]
fn summary_is_the_seed_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "run",
        "--experiment",
        "matrix_approx",
        "--d",
        "8",
        "--kappa",
        "30",
        "--direction",
        "random_sphere",
        "--seeds",
        "0..6",
        "--output",
        tmp.path().to_str().unwrap(),
    ]);
    let files = listed(&out);
    let (summary, traces) = files.split_last().unwrap();
    let per_seed: Vec<Vec<f64>> = traces.iter().map(|p| column(p, TAU)).collect();
    let mean = column(summary, TAU);
    for (k, m) in mean.iter().enumerate() {
        let want = per_seed.iter().map(|t| t[k]).sum::<f64>() / per_seed.len() as f64;
        assert!((m - want).abs() <= 1e-12 * want.abs().max(1e-300), "k = {k}: {m} vs {want}");
    }
}

#[test]
fn compare_accepts_greedy_traces_and_rejects_no_input() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "run",
        "--experiment",
        "matrix_approx",
        "--d",
        "12",
        "--kappa",
        "100",
        "--output",
        tmp.path().to_str().unwrap(),
    ]);
    let trace = listed(&out)[0].clone();
    let cmp = run_ok(&["compare", "--envelope", "sr1_matrix", trace.to_str().unwrap()]);
    let text = String::from_utf8(cmp.stdout).unwrap();
    assert!(text.contains("# violations = 0"), "{text}");
    assert!(text.contains("# deterministic = true"), "{text}");

    let out = qnbench().args(["compare", "--envelope", "sr1_matrix"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = qnbench().args(["compare", "--envelope", "nonsense", trace.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn environment_overrides_output_directory() {
    let configured = tempfile::tempdir().unwrap();
    let forced = tempfile::tempdir().unwrap();
    let out = qnbench()
        .env("QNBENCH_OUT_DIR", forced.path())
        .args(["run", "--d", "3", "--output", configured.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(dir_contents(configured.path()).len(), 0);
    assert_eq!(dir_contents(forced.path()).len(), 2);
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    let out_dir = tmp.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "# small run\nexperiment = matrix_approx\nd = 5\nrule = broyden:0.5\ndirection = greedy_broyden\nsteps = 7\noutput = {}\n",
            out_dir.display()
        ),
    )
    .unwrap();
    // The flag wins over the file.
    let out = run_ok(&["run", "--config", cfg.to_str().unwrap(), "--steps", "3"]);
    let files = listed(&out);
    assert!(files[0].starts_with(&out_dir));
    assert!(files[0].to_string_lossy().contains("broyden0.5_greedy_broyden"));
    assert_eq!(rows(&files[0]).len(), 4);
    let meta = std::fs::read_to_string(&files[0]).unwrap();
    assert!(meta.contains("# rule = broyden:0.5"));
    assert!(meta.contains("# steps = 3"));
}
