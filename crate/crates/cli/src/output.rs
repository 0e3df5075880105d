//! CSV and gnuplot emission. Numbers are written with eight significant
//! digits and a dot decimal separator regardless of locale.

use std::io::Write;

use repeaterlab::pipeline::SweepResult;

use crate::config::CaseProtocol;
use crate::error::CliError;

pub const SWEEP_HEADER: [&str; 12] = [
    "code",
    "family",
    "k",
    "tau_c_s",
    "one_minus_T",
    "L_km",
    "L0_km",
    "F",
    "F_final",
    "P0",
    "P_k",
    "rate_hz_per_memory",
];

/// Extra columns appended to sweep rows by the Monte Carlo command.
pub const MONTECARLO_EXTRA: [&str; 7] = [
    "rate_std_err_hz",
    "analytic_rate_hz",
    "within_3_sigma",
    "trials",
    "blocks",
    "seed",
    "rng",
];

pub const REPORT_HEADER: [&str; 10] = [
    "query",
    "code",
    "tau_c_s",
    "one_minus_T",
    "target",
    "F",
    "F_final",
    "value",
    "unit",
    "reference",
];

/// Eight significant digits; scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.7e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("exponent in formatted float");
    if (-4..15).contains(&exp) {
        let decimals = (7 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

pub fn sweep_record(p: &CaseProtocol, r: &SweepResult) -> Vec<String> {
    let cfg = &p.config;
    vec![
        cfg.code().label().to_string(),
        cfg.code().family().as_str().to_string(),
        cfg.rounds().to_string(),
        fmt_sig(p.tau_c_s),
        fmt_sig(p.one_minus_t),
        fmt_sig(cfg.total_distance_km()),
        fmt_sig(cfg.segment_km()),
        fmt_sig(r.fidelity),
        fmt_sig(r.final_fidelity),
        fmt_sig(r.p0),
        fmt_sig(r.p_k),
        fmt_sig(r.rate_per_memory_hz),
    ]
}

/// Writes a header and rows; the header is present even without rows.
pub fn write_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row)?;
    }
    out.flush().map_err(|e| CliError::io("csv output", e))?;
    Ok(())
}

/// Whitespace-separated blocks, one per series, separated by two blank
/// lines so gnuplot's `index` selects them.
pub fn write_gnuplot<W: Write>(
    mut w: W,
    columns: &[&str],
    series: &[(String, Vec<Vec<f64>>)],
) -> Result<(), CliError> {
    let io = |e| CliError::io("gnuplot output", e);
    writeln!(w, "# {}", columns.join(" ")).map_err(io)?;
    for (i, (label, points)) in series.iter().enumerate() {
        if i > 0 {
            writeln!(w, "\n").map_err(io)?;
        }
        writeln!(w, "# {label}").map_err(io)?;
        for p in points {
            let line: Vec<String> = p.iter().map(|v| fmt_sig(*v)).collect();
            writeln!(w, "{}", line.join(" ")).map_err(io)?;
        }
    }
    Ok(())
}
