//! Subcommand drivers. Each writes its table to `out`, per-row diagnostics
//! to `diag`, and reports how many rows failed.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use repeaterlab::bell;
use repeaterlab::codes::{self, CodeSpec};
use repeaterlab::montecarlo::{self, McConfig};
use repeaterlab::oracle::{self, GateErrorVariant};
use repeaterlab::pipeline::{self, OperatingPoint, ProtocolConfig, SweepPoint};
use repeaterlab::qubus::{self, QubusPlan};
use repeaterlab::HardwareParams;

use crate::config::{Case, CaseProtocol};
use crate::error::CliError;
use crate::output::{self, fmt_sig, MONTECARLO_EXTRA, REPORT_HEADER, SWEEP_HEADER};

/// Rows that failed; nonzero maps to a nonzero exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outcome {
    pub failed_rows: usize,
}

fn note<W: Write + ?Sized>(diag: &mut W, msg: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(diag, "{msg}").map_err(|e| CliError::io("stderr", e))
}

fn line<W: Write + ?Sized>(out: &mut W, msg: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{msg}").map_err(|e| CliError::io("output", e))
}

/// `(protocol, F)` points of every case, in file order.
fn points(cases: &[Case]) -> Result<Vec<(CaseProtocol, f64)>, CliError> {
    let mut out = Vec::new();
    for case in cases {
        for p in case.protocols()? {
            for f in case.initial_fidelities(p)? {
                out.push((p.clone(), f));
            }
        }
    }
    Ok(out)
}

fn describe(p: &CaseProtocol, f: f64) -> String {
    format!(
        "{} k={} tau_c={} 1-T={} F={}",
        p.config.code(),
        p.config.rounds(),
        p.tau_c_s,
        p.one_minus_t,
        fmt_sig(f)
    )
}

/// Rate and final fidelity over every case grid.
pub fn rate_sweep(
    cases: &[Case],
    out: &mut dyn Write,
    diag: &mut dyn Write,
    gnuplot: Option<&mut dyn Write>,
) -> Result<Outcome, CliError> {
    let pts = points(cases)?;
    let grid: Vec<SweepPoint> = pts
        .iter()
        .map(|(p, f)| SweepPoint {
            config: p.config.clone(),
            fidelity: *f,
        })
        .collect();
    let rows = pipeline::sweep(&grid);
    let mut records = Vec::new();
    let mut outcome = Outcome::default();
    let mut series: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for (i, ((p, f), row)) in pts.iter().zip(&rows).enumerate() {
        match &row.outcome {
            Ok(r) => {
                records.push(output::sweep_record(p, r));
                let label = format!(
                    "{} k={} tau_c={} 1-T={}",
                    p.config.code(),
                    p.config.rounds(),
                    p.tau_c_s,
                    p.one_minus_t
                );
                if series.last().map(|s| &s.0) != Some(&label) {
                    series.push((label, Vec::new()));
                }
                let entry = series.last_mut().expect("series just pushed");
                entry.1.push(vec![r.final_fidelity, r.rate_per_memory_hz, r.fidelity]);
            }
            Err(e) => {
                outcome.failed_rows += 1;
                note(diag, format!("row {}: {}: {e}", i + 1, describe(p, *f)))?;
            }
        }
    }
    output::write_csv(out, &SWEEP_HEADER, &records)?;
    if let Some(g) = gnuplot {
        output::write_gnuplot(g, &["F_final", "rate_hz_per_memory", "F"], &series)?;
    }
    Ok(outcome)
}

/// Final fidelity only, optionally from channel parameters via `alpha`.
pub fn fidelity(cases: &[Case], out: &mut dyn Write, diag: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut records = Vec::new();
    let mut outcome = Outcome::default();
    for case in cases {
        for p in case.protocols()? {
            let fs = match case.initial_fidelities(p) {
                Ok(fs) => fs,
                Err(e) => {
                    outcome.failed_rows += 1;
                    note(diag, e)?;
                    continue;
                }
            };
            for f in fs {
                match pipeline::final_fidelity(&p.config, f) {
                    Ok(ff) => records.push(vec![
                        p.config.code().label().to_string(),
                        p.config.rounds().to_string(),
                        fmt_sig(p.tau_c_s),
                        fmt_sig(p.one_minus_t),
                        fmt_sig(p.q_g()),
                        fmt_sig(f),
                        fmt_sig(ff),
                    ]),
                    Err(e) => {
                        outcome.failed_rows += 1;
                        note(diag, format!("{}: {e}", describe(p, f)))?;
                    }
                }
            }
        }
    }
    output::write_csv(
        out,
        &["code", "k", "tau_c_s", "one_minus_T", "q_g", "F", "F_final"],
        &records,
    )?;
    Ok(outcome)
}

/// One line of the operating-point table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub query: String,
    pub protocol: CaseProtocol,
    pub target: f64,
    pub outcome: Result<OperatingPoint, repeaterlab::Error>,
    /// Value quoted for comparison, in `unit`.
    pub reference: Option<f64>,
}

/// Memories per half node in the throughput consistency check.
pub const GOLAY_MEMORIES: f64 = 166.0;
pub const TARGET_THROUGHPUT_BITS_PER_S: f64 = 1000.0;

fn canonical_protocol(code: CodeSpec, tau_c: f64, one_minus_t: f64) -> CaseProtocol {
    let hw = HardwareParams::new(1.0 - one_minus_t, tau_c).expect("canonical hardware");
    let config = ProtocolConfig::new(
        pipeline::CANONICAL_DISTANCE_KM,
        pipeline::CANONICAL_SEGMENT_KM,
        code,
        2,
        hw,
    )
    .expect("canonical config");
    CaseProtocol {
        config,
        tau_c_s: tau_c,
        one_minus_t,
    }
}

/// The three reference operating points at a 0.95 target.
pub fn report_operating_points() -> Vec<ReportRow> {
    let queries = [
        ("repetition_low_loss", CodeSpec::repetition(3).unwrap(), 0.01, 1e-4, 24.0),
        ("golay", CodeSpec::css(23, 7).unwrap(), 0.1, 1e-3, 6.0),
        ("steane_long_memory", CodeSpec::css(7, 3).unwrap(), 1.0, 1e-3, 14.0),
    ];
    queries
        .into_iter()
        .map(|(query, code, tau_c, omt, reference)| {
            let protocol = canonical_protocol(code, tau_c, omt);
            let outcome = pipeline::operating_point(&protocol.config, 0.95);
            ReportRow {
                query: query.to_string(),
                protocol,
                target: 0.95,
                outcome,
                reference: Some(reference),
            }
        })
        .collect()
}

fn report_record(row: &ReportRow, value: Option<f64>, unit: &str, query: &str) -> Vec<String> {
    let p = &row.protocol;
    let (f, ff) = match &row.outcome {
        Ok(OperatingPoint::Feasible(r)) => (fmt_sig(r.fidelity), fmt_sig(r.final_fidelity)),
        Ok(OperatingPoint::Infeasible {
            max_final_fidelity, ..
        }) => ("infeasible".to_string(), fmt_sig(*max_final_fidelity)),
        Err(_) => ("error".to_string(), String::new()),
    };
    vec![
        query.to_string(),
        p.config.code().label().to_string(),
        fmt_sig(p.tau_c_s),
        fmt_sig(p.one_minus_t),
        fmt_sig(row.target),
        f,
        ff,
        value.map(fmt_sig).unwrap_or_default(),
        unit.to_string(),
        row.reference.map(fmt_sig).unwrap_or_default(),
    ]
}

fn rate_of(row: &ReportRow) -> Option<f64> {
    match &row.outcome {
        Ok(OperatingPoint::Feasible(r)) => Some(r.rate_per_memory_hz),
        _ => None,
    }
}

/// Operating points for every protocol in `cases`, or the reference report
/// (with the throughput row) when `cases` is `None`. Infeasible targets are
/// shown in-row; only evaluation errors count as failures.
pub fn operating_point(
    cases: Option<&[Case]>,
    out: &mut dyn Write,
    diag: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let rows: Vec<ReportRow> = match cases {
        None => report_operating_points(),
        Some(cases) => {
            let mut rows = Vec::new();
            for (ci, case) in cases.iter().enumerate() {
                for (pi, p) in case.protocols()?.iter().enumerate() {
                    rows.push(ReportRow {
                        query: format!("case{}.{}", ci + 1, pi + 1),
                        protocol: p.clone(),
                        target: case.target,
                        outcome: pipeline::operating_point(&p.config, case.target),
                        reference: None,
                    });
                }
            }
            rows
        }
    };
    let mut outcome = Outcome::default();
    let mut records = Vec::new();
    for row in &rows {
        if let Err(e) = &row.outcome {
            outcome.failed_rows += 1;
            note(diag, format!("{}: {e}", row.query))?;
        }
        records.push(report_record(row, rate_of(row), "Hz/memory", &row.query));
    }
    if cases.is_none() {
        let golay = rows.iter().find(|r| r.query == "golay").expect("golay query");
        let throughput = ReportRow {
            reference: Some(TARGET_THROUGHPUT_BITS_PER_S),
            ..golay.clone()
        };
        records.push(report_record(
            &throughput,
            rate_of(golay).map(|r| r * GOLAY_MEMORIES),
            "bits/s (x166 memories)",
            "golay_throughput",
        ));
    }
    output::write_csv(out, &REPORT_HEADER, &records)?;
    Ok(outcome)
}

/// Density-matrix and enumeration checks of the closed forms.
pub fn oracle_verify(case: &Case, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
    let mut outcome = Outcome::default();

    let mut worst_pur = 0.0f64;
    let mut worst_swap = 0.0f64;
    for _ in 0..case.samples {
        let s = oracle::sample_bell_diagonal(&mut rng);
        let sim =
            oracle::simulate_purification_round(&s, 0.0, GateErrorVariant::ZControlXTargetBefore)?;
        let closed = bell::purify_ideal(&s);
        worst_pur = worst_pur
            .max(sim.state.max_abs_diff(&closed.state))
            .max((sim.success_prob - closed.success_prob).abs());
        worst_swap = worst_swap.max(oracle::simulate_swapping(&s)?.max_abs_diff(&bell::swap_ideal(&s)));
    }
    let ok = worst_pur <= 1e-12 && worst_swap <= 1e-12;
    outcome.failed_rows += usize::from(!ok);
    line(out, "check,detail,max_deviation,verdict".to_string())?;
    line(
        out,
        format!(
            "noiseless_purification,{} states,{},{}",
            case.samples,
            fmt_sig(worst_pur),
            verdict(worst_pur <= 1e-12)
        ),
    )?;
    line(
        out,
        format!(
            "noiseless_swapping,{} states,{},{}",
            case.samples,
            fmt_sig(worst_swap),
            verdict(worst_swap <= 1e-12)
        ),
    )?;

    let mut samples = Vec::new();
    for &q in &case.q_g {
        for _ in 0..case.samples {
            samples.push((oracle::sample_bell_diagonal(&mut rng), q));
        }
    }
    let report = oracle::match_gate_variant(&samples)?;
    for row in &report.rows {
        line(
            out,
            format!(
                "gate_variant,{},{},{}",
                row.variant,
                fmt_sig(row.max_deviation),
                if row.max_deviation <= report.tolerance { "match" } else { "differs" }
            ),
        )?;
    }
    let any = !report.matching().is_empty();
    outcome.failed_rows += usize::from(!any);
    line(
        out,
        format!(
            "gate_variant_best,{},{},{}",
            report.best().variant,
            fmt_sig(report.best().max_deviation),
            verdict(any)
        ),
    )?;

    for code in codes::code_catalog()
        .into_iter()
        .filter(|c| c.n() <= oracle::MAX_ENUMERATION_QUBITS && !c.is_unencoded())
    {
        let mut worst = 0.0f64;
        for q in [0.01, 0.05, 0.1, 0.3] {
            let brute = oracle::enumerate_logical_error(&code, q)?;
            worst = worst.max((brute - codes::logical_error_prob(&code, q)).abs());
        }
        outcome.failed_rows += usize::from(worst > 1e-12);
        line(
            out,
            format!(
                "logical_error,\"{}\",{},{}",
                code,
                fmt_sig(worst),
                verdict(worst <= 1e-12)
            ),
        )?;
    }
    Ok(outcome)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Largest `n` whose phase tables are printed in full.
pub const PRINTED_TABLE_QUBITS: usize = 6;

fn print_plan(out: &mut dyn Write, plan: &QubusPlan) -> Result<(), CliError> {
    for p in 0..plan.patterns() {
        let units: Vec<String> = plan.phase_units(p).iter().map(|u| format!("{u:+}")).collect();
        line(
            out,
            format!(
                "  {} {:<8} {}",
                qubus::pattern_bits(p, plan.n()),
                plan.scheme().as_str(),
                units.join(" ")
            ),
        )?;
    }
    Ok(())
}

/// Phase tables, feasibility verdicts and homodyne error.
pub fn qubus_check(case: &Case, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let theta = case.theta;
    for &n in &case.qubus_n {
        let f = qubus::feasibility(n, theta)?;
        line(
            out,
            format!(
                "n={n} theta={theta}: max phase {} rad = {:.3} pi, collision {}, {}",
                fmt_sig(f.max_phase_rad),
                f.max_phase_rad / std::f64::consts::PI,
                f.collision,
                if f.feasible { "feasible" } else { "infeasible" }
            ),
        )?;
        if n <= PRINTED_TABLE_QUBITS {
            line(out, "  pattern scheme   phase/theta per probe")?;
            print_plan(out, &qubus::single_qubus_phases(n, theta)?)?;
            print_plan(out, &qubus::chained_qubus_phases(n, theta)?)?;
        }
    }
    if let Some(beta) = case.beta {
        line(
            out,
            format!(
                "homodyne: beta={} beta*theta^2={} P_error={}",
                fmt_sig(beta),
                fmt_sig(beta * theta * theta),
                fmt_sig(qubus::homodyne_error(beta, theta)?)
            ),
        )?;
    }
    let needed = qubus::min_beta(theta, case.error_target)?;
    line(
        out,
        format!(
            "min beta for P_error <= {}: {} (beta*theta^2 = {})",
            fmt_sig(case.error_target),
            fmt_sig(needed),
            fmt_sig(needed * theta * theta)
        ),
    )?;
    Ok(Outcome::default())
}

/// Stochastic rate estimates next to the closed-form values. Row `i` uses
/// seed `seed + i`.
pub fn montecarlo(cases: &[Case], out: &mut dyn Write, diag: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut records = Vec::new();
    let mut outcome = Outcome::default();
    let mut row_index = 0u64;
    for case in cases {
        for p in case.protocols()? {
            for f in case.initial_fidelities(p)? {
                let seed = case.seed.wrapping_add(row_index);
                row_index += 1;
                let run = || -> Result<_, repeaterlab::Error> {
                    let mc = McConfig::for_protocol(&p.config, f, case.blocks, case.trials, seed)?;
                    let est = montecarlo::simulate_rate(&p.config, f, &mc)?;
                    let analytic = pipeline::evaluate(&p.config, f)?;
                    Ok((est, analytic))
                };
                match run() {
                    Ok((est, analytic)) => {
                        let mut rec = output::sweep_record(
                            p,
                            &pipeline::SweepResult {
                                rate_per_memory_hz: est.rate_hz,
                                ..analytic
                            },
                        );
                        rec.extend([
                            fmt_sig(est.std_err_hz),
                            fmt_sig(est.analytic_hz),
                            est.within_3_sigma.to_string(),
                            est.trials.to_string(),
                            est.blocks.to_string(),
                            est.seed.to_string(),
                            est.rng.to_string(),
                        ]);
                        records.push(rec);
                    }
                    Err(e) => {
                        outcome.failed_rows += 1;
                        note(diag, format!("{}: {e}", describe(p, f)))?;
                    }
                }
            }
        }
    }
    let header: Vec<&str> = SWEEP_HEADER.iter().chain(MONTECARLO_EXTRA.iter()).copied().collect();
    output::write_csv(out, &header, &records)?;
    Ok(outcome)
}
