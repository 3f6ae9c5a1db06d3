use std::path::Path;
use std::process::{Command, Output};

fn sgdiv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgdiv"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_spectrum_diversity_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&sgdiv(d, &["gen", "--2d", "8", "--seed", "7", "-o", "inst.txt"]));
    ok(&sgdiv(d, &["spectrum", "inst.txt", "--ar", "0.01", "-o", "spec.txt"]));
    let spec = std::fs::read_to_string(d.join("spec.txt")).unwrap();
    assert!(spec.contains("states "));
    let out = sgdiv(d, &["diversity", "inst.txt", "spec.txt", "--R", "0.125", "-o", "seeds.txt"]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("D = "));
    let out = sgdiv(d, &["anneal", "inst.txt", "--sweeps", "20", "--restarts", "3", "--beta", "4", "--slices", "8", "--seeds", "seeds.txt"]);
    ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn single_state_spectrum_has_diversity_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&sgdiv(d, &["gen", "--quasi1d", "12", "--range", "2", "--seed", "3", "-o", "inst.txt"]));
    // a tiny ratio keeps only the ground pair; the spin-flip merge leaves one basin
    ok(&sgdiv(d, &["spectrum", "inst.txt", "--ar", "1e-9", "-o", "spec.txt"]));
    let out = sgdiv(d, &["diversity", "inst.txt", "spec.txt", "--R", "0.125", "--exact"]);
    ok(&out);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("D = 1"), "{err}");
}

#[test]
fn bench_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("exp.toml"),
        "generator = \"quasi1d\"\nn = 10\nrange = 2\ninstances = 2\nseed_ar = 0.05\nsolver_ar = 0.1\n\
         sweeps = [4, 8]\nrestarts = 4\nbeta = 4.0\nslices = 8\nmaster_seed = 9\noutput_dir = \"out\"\n",
    )
    .unwrap();
    ok(&sgdiv(d, &["bench", "exp.toml"]));
    for f in ["report.json", "quantiles.csv", "scatter.csv", "ttd_curves.csv", "instance_000/runs.log"] {
        assert!(d.join("out").join(f).is_file(), "{f}");
    }
    ok(&sgdiv(d, &["report", "out/report.json", "-o", "rendered"]));
    let a = std::fs::read(d.join("out/quantiles.csv")).unwrap();
    let b = std::fs::read(d.join("rendered/quantiles.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_numbers_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = sgdiv(dir.path(), &["gen", "--2d", "eight"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--2d"));
    let out = sgdiv(dir.path(), &["spectrum", "missing.txt", "--ar", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--ar"));
    let out = sgdiv(dir.path(), &["spectrum", "missing.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
}
