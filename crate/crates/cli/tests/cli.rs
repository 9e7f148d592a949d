use std::io::Write;
use std::process::{Command, Output};

fn ersa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ersa"))
        .args(args)
        .env_remove("ERSA_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const H: &[&str] = &["estimate-h", "--n", "6", "--lambda", "1.2", "--p", "0.4", "--delta", "0.3", "--trials", "3000"];

#[test]
fn output_does_not_depend_on_workers() {
    let runs: Vec<String> = ["1", "3", "8"]
        .iter()
        .map(|w| {
            let mut a = H.to_vec();
            a.extend(["--workers", w, "--seed", "42"]);
            let o = ersa(&a);
            assert!(o.status.success());
            stdout(&o)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn csv_carries_provenance() {
    let o = ersa(H);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# command=estimate-h");
    assert_eq!(lines[1], "# seed=1");
    assert!(lines.contains(&"# lambda=1.2"));
    let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    assert!(lines[header].starts_with("n,rho,lambda,p,delta,h,"));
    assert_eq!(lines.len(), header + 2);
    // the same provenance goes to stderr
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed=1"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ersa(&["estimate-h", "--n", "4", "--lambda", "1", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(ersa(&["estimate-h", "--n", "4", "--lambda", "-1", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(ersa(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(ersa(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_fourier_passes() {
    let o = ersa(&["verify", "--suite", "fourier"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("[PASS]")));
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn config_values_yield_to_flags() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, r#"{{"n": 5, "lambda": 2, "p": 0.5, "trials": 500, "seed": 3}}"#).unwrap();
    let path = f.path().to_str().unwrap();
    let from_file = stdout(&ersa(&["--config", path, "estimate-h"]));
    assert!(from_file.contains("# seed=3") && from_file.contains("# n=5") && from_file.contains("# lambda=2"));
    let overridden = stdout(&ersa(&["--config", path, "estimate-h", "--lambda", "0.5", "--seed", "4"]));
    assert!(overridden.contains("# lambda=0.5") && overridden.contains("# seed=4"));
    assert!(overridden.contains("# n=5"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let mut a = H.to_vec();
    let p = path.to_str().unwrap();
    a.extend(["--out", p]);
    let o = ersa(&a);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&ersa(H)));
}
