use std::fs;
use std::path::Path;
use std::process::Command;

use saddle_sa::{load_config_str, run_experiment, CliError};

fn config(text: &str, out: &Path) -> saddle_sa::ExperimentConfig {
    let mut cfg = load_config_str(text).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn single_step_single_trial() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("experiment=bilinear\nN_list=1\ntrials=1", tmp.path());
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.trace_files.len(), 1);
    let trace = fs::read_to_string(&out.trace_files[0]).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "k,gamma,minimax_gap,dist_to_saddle");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1,1,"));
    assert!(out.aggregate(1, "minimax_gap").is_some());
    assert!(tmp.path().join("aggregate.csv").exists());
    assert!(tmp.path().join("summary.csv").exists());
}

#[test]
fn bilinear_summary_has_distance_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        "experiment=bilinear\nalgorithm=saps\nn=3\nN_list=100,1000,10000\ntrials=20",
        tmp.path(),
    );
    let out = run_experiment(&cfg).unwrap();
    let fit = out
        .fit("dist_to_saddle", "mean")
        .expect("slope for dist_to_saddle");
    assert!(fit.slope < 0.0, "{fit:?}");
    let summary = fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert!(summary.contains("fit,dist_to_saddle,mean_slope,,"));
}

#[test]
fn reruns_are_byte_identical() {
    for text in [
        "experiment=bilinear\nregularizer=max\nN_list=50,200\ntrials=4\nparallel=3",
        "experiment=tanh\nN_list=30\ntrials=2\npool_size=50",
        "experiment=neyman_pearson\nN_list=20\ntrials=2\npoints_per_class=20\nn=4",
        "experiment=neyman_pearson\nalgorithm=laam\nN_list=10\ntrials=1\nm_classes=2\nn=3",
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&config(text, a.path())).unwrap();
        let mut cfg_b = config(text, b.path());
        cfg_b.parallel = 1;
        run_experiment(&cfg_b).unwrap();
        assert_eq!(csv_bodies(a.path()), csv_bodies(b.path()), "{text}");
    }
}

#[test]
fn seed_changes_the_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&config(
        "experiment=bilinear\nN_list=20\ntrials=1",
        a.path(),
    ))
    .unwrap();
    run_experiment(&config(
        "experiment=bilinear\nN_list=20\ntrials=1\nseed=9",
        b.path(),
    ))
    .unwrap();
    assert_ne!(csv_bodies(a.path()), csv_bodies(b.path()));
}

#[test]
fn timings_add_a_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&config(
        "experiment=bilinear\nN_list=5\ntrials=1\ntimings=true",
        tmp.path(),
    ))
    .unwrap();
    let trace = fs::read_to_string(&out.trace_files[0]).unwrap();
    assert!(trace.lines().next().unwrap().ends_with(",elapsed_ms"));
}

#[test]
fn missing_dataset_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        "experiment=neyman_pearson\ndataset_path=/nonexistent/data.libsvm\nN_list=5",
        tmp.path(),
    );
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, CliError::Io(_)), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn dataset_file_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.libsvm");
    fs::write(
        &data,
        "1 1:0.5 2:-1\n1 1:0.2\n2 2:1.5\n2 1:-0.3 2:0.4\n3 1:1 2:1\n3 2:-0.7\n",
    )
    .unwrap();
    let text = format!(
        "experiment=neyman_pearson\ndataset_path={}\nN_list=10\ntrials=2\nobjective_label=2",
        data.display()
    );
    let out = run_experiment(&config(&text, &tmp.path().join("out"))).unwrap();
    assert_eq!(out.trace_files.len(), 2);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_saddle-sa"))
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.cfg");
    fs::write(&good, "experiment=bilinear\nN_list=10\ntrials=1\n").unwrap();
    let status = binary()
        .args([
            "run",
            good.to_str().unwrap(),
            "--seed",
            "3",
            "--set",
            "trials=2",
        ])
        .env("SADDLE_SA_OUT", tmp.path().join("env-out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(tmp.path().join("env-out/traces/N10/trial0001.csv").exists());

    let out = binary()
        .args(["run", good.to_str().unwrap(), "--set", "bogus=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'bogus'"));

    let diverging = tmp.path().join("div.cfg");
    fs::write(
        &diverging,
        "experiment=bilinear\nmu=0\nschedule=inv_sqrt_k\ntheta=1e14\nN_list=10\ntrials=2\n",
    )
    .unwrap();
    let status = binary()
        .args(["run", diverging.to_str().unwrap(), "--out"])
        .arg(tmp.path().join("div-out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let summary = fs::read_to_string(tmp.path().join("div-out/summary.csv")).unwrap();
    assert!(summary.contains("runs,,diverged,10,2"));

    let bad = tmp.path().join("bad.libsvm");
    fs::write(&bad, "1 1:0.5\n1 3:1 2:2\n").unwrap();
    let out = binary()
        .args(["check-data", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn diagnose_prints_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("np.cfg");
    fs::write(
        &cfg,
        "experiment=neyman_pearson\nN_list=100\npoints_per_class=30\n",
    )
    .unwrap();
    let out = binary()
        .args(["diagnose", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("source,quantity,N,value\n"));
    assert!(text.contains("analytic,delta1,100,"));
    assert!(text.contains("estimated,beta0,,"));
}
