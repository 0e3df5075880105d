use std::path::Path;
use std::process::{Command, Output};

fn repeaterlab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_repeaterlab"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const PURIFICATION_GRID: &str = "\
# purification depth comparison at tau_c = 0.1 s, 1 - T = 0.1%
code = unencoded [3,1,3] [7,1,3]
k = 0 1 2
tau_c = 0.1
one_minus_T = 0.001
F = 0.6:0.99:14
";

#[test]
fn rate_sweep_writes_full_grid_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "grid.cfg", PURIFICATION_GRID);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let plot = dir.path().join("a.dat");
    let o = repeaterlab(
        &[
            "rate-sweep",
            "--config",
            &cfg,
            "--out",
            a.to_str().unwrap(),
            "--gnuplot",
            plot.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = repeaterlab(&["rate-sweep", "--config", &cfg, "--out", b.to_str().unwrap()], &[("REPEATERLAB_THREADS", "1")]);
    assert!(o.status.success());

    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "code,family,k,tau_c_s,one_minus_T,L_km,L0_km,F,F_final,P0,P_k,rate_hz_per_memory"
    );
    assert_eq!(lines.count(), 3 * 3 * 14);
    assert!(text.contains("\"[7,1,3]\",css,2,"));

    let plot = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(plot.matches("\n# ").count(), 9);
}

#[test]
fn bad_segment_ratio_fails_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "code = [3,1,3]\nL = 1280\nL0 = 30\n");
    let o = repeaterlab(&["rate-sweep", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 3") && e.contains("42.67"), "{e}");
}

#[test]
fn unknown_key_fails_closed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "code = [3,1,3]\nlength = 3\n");
    let o = repeaterlab(&["fidelity", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2: length: unknown key"));
}

#[test]
fn row_errors_give_nonzero_exit() {
    let o = repeaterlab(&["fidelity", "--set", "code=[3,1,3]", "--set", "alpha=0.5 -1"], &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("alpha"));
}

#[test]
fn operating_point_report() {
    let o = repeaterlab(&["operating-point"], &[]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("repetition_low_loss,\"[3,1,3]\""));
    assert!(rows[4].starts_with("golay_throughput"));
}

#[test]
fn emitted_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "grid.cfg", PURIFICATION_GRID);
    let first = repeaterlab(&["rate-sweep", "--config", &cfg, "--emit-config"], &[]);
    assert!(first.status.success());
    let emitted = write(dir.path(), "emitted.cfg", &stdout(&first));
    let second = repeaterlab(&["rate-sweep", "--config", &emitted, "--emit-config"], &[]);
    assert_eq!(stdout(&first), stdout(&second));

    let a = repeaterlab(&["rate-sweep", "--config", &cfg], &[]);
    let b = repeaterlab(&["rate-sweep", "--config", &emitted], &[]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn montecarlo_is_seed_reproducible_across_thread_counts() {
    let args = [
        "montecarlo",
        "--set",
        "code=[3,1,3]",
        "--set",
        "F=0.9",
        "--set",
        "blocks=1000",
        "--trials",
        "2000",
        "--seed",
        "5",
    ];
    let one = repeaterlab(&args, &[("REPEATERLAB_THREADS", "1")]);
    let four = repeaterlab(&args, &[("REPEATERLAB_THREADS", "4")]);
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(stdout(&one), stdout(&four));
    let text = stdout(&one);
    assert!(text.lines().next().unwrap().ends_with("rate_std_err_hz,analytic_rate_hz,within_3_sigma,trials,blocks,seed,rng"));
    assert!(text.contains("ChaCha8Rng"));
}

#[test]
fn qubus_and_oracle_subcommands() {
    let o = repeaterlab(&["qubus-check", "--set", "n=3 11", "--set", "beta=90000"], &[]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("n=11 theta=0.01") && text.contains("infeasible"));
    let p: f64 = text
        .lines()
        .find(|l| l.starts_with("homodyne:"))
        .and_then(|l| l.rsplit_once("P_error="))
        .and_then(|(_, v)| v.parse().ok())
        .expect("homodyne line");
    assert!(p > 3.0e-6 && p < 1.0e-5, "{p}");

    let o = repeaterlab(&["oracle-verify", "--set", "samples=10"], &[]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("z_control_x_target_before"));
}
