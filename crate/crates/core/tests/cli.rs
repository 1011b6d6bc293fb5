use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn infcomp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infcomp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn step_by_step_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&infcomp(
        &[
            "generate", "--nodes", "300", "--seed", "3", "--out", "g.txt",
        ],
        d,
    ));
    ok(&infcomp(
        &[
            "embed", "--graph", "g.txt", "--dim", "4", "--epochs", "5", "--out", "emb.txt",
        ],
        d,
    ));
    ok(&infcomp(
        &[
            "recover",
            "--graph",
            "g.txt",
            "--embeddings",
            "emb.txt",
            "--connect-target",
            "0.05",
            "--out",
            "rec.txt",
        ],
        d,
    ));
    assert!(fs::read_to_string(d.join("rec.txt"))
        .unwrap()
        .contains("# latent"));
    ok(&infcomp(
        &[
            "simulate",
            "--graph",
            "rec.txt",
            "--a",
            "1",
            "--b",
            "2",
            "--seeds",
            "4,6",
            "--replications",
            "4",
            "--seed",
            "9",
            "--analytic",
            "--out",
            "sim",
        ],
        d,
    ));
    for f in ["sim/mean.csv", "sim/summary.txt", "sim/run_0000.csv"] {
        assert!(d.join(f).exists(), "{f}");
    }
    ok(&infcomp(
        &[
            "solve", "--a", "1", "--b", "2", "--seeds", "4,6", "--end", "300", "--out", "mf.csv",
        ],
        d,
    ));
    assert!(fs::read_to_string(d.join("mf.csv"))
        .unwrap()
        .lines()
        .any(|l| l == "t,x1,x2,share1,share2"));
    let report = ok(&infcomp(
        &[
            "compare",
            "--empirical",
            "sim/mean.csv",
            "--analytic",
            "mf.csv",
        ],
        d,
    ));
    assert!(report.contains("mae"), "{report}");

    let before = fs::read(d.join("sim/summary.txt")).unwrap();
    fs::remove_file(d.join("sim/summary.txt")).unwrap();
    ok(&infcomp(&["summarize", "sim"], d));
    assert_eq!(fs::read(d.join("sim/summary.txt")).unwrap(), before);
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.txt"),
        "nodes = 200\ndim = 4\nepochs = 5\nconnect_target = 0.05\n\
         a = 1\nb = 2\nseeds = 4,6\ncapacity = 5\ndecay = 1\nreplications = 3\n",
    )
    .unwrap();
    for out in ["one", "two"] {
        ok(&infcomp(
            &["experiment", "exp.txt", "--seed", "7", "--out", out],
            d,
        ));
    }
    for f in [
        "summary.txt",
        "mean.csv",
        "analytic.csv",
        "runs/run_0002.csv",
    ] {
        assert_eq!(
            fs::read(d.join("one").join(f)).unwrap(),
            fs::read(d.join("two").join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(!d.join("one/runs/run_0003.csv").exists());
}

#[test]
fn failures_are_stage_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.txt"), "0 1\n1 x\n").unwrap();
    fs::write(
        d.join("exp.txt"),
        "graph = bad.txt\nconnect_target = 0.1\nreplications = 1\n",
    )
    .unwrap();
    let out = infcomp(&["experiment", "exp.txt"], d);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("graph"), "{err}");
    assert!(err.contains("bad.txt:2"), "{err}");
    assert!(!d.join("out").exists());

    fs::write(
        d.join("typo.txt"),
        "nodes = 50\nrange = 1\nreplicatons = 3\n",
    )
    .unwrap();
    let out = infcomp(&["experiment", "typo.txt"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicatons"));

    let out = infcomp(&["solve", "--a", "0", "--b", "1", "--end", "100"], d);
    assert!(!out.status.success());
}

#[test]
fn help_lists_experiment_keys() {
    let dir = tempfile::tempdir().unwrap();
    let help = ok(&infcomp(&["experiment", "--help"], dir.path()));
    for key in ["connect_target", "capacity", "replications", "strategy"] {
        assert!(help.contains(key), "{key}");
    }
}
