//! Fixed-precision CSV rendering of reports.

use std::io::Write;

use pvlab_core::predictor::EvalReport;
use pvlab_core::OracleReport;

/// Shortest `%.12g` rendering: 12 significant digits, trailing zeros
/// trimmed, exponent form outside `[1e-4, 1e12)`.
pub fn fmt_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g12).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

pub const ORACLE_COLUMNS: [&str; 7] = ["chain_kind", "T", "d", "context_set", "L_star", "gap_to_prev", "equality_flag"];

pub const EVAL_COLUMNS: [&str; 13] = [
    "chain_kind",
    "T",
    "d",
    "k",
    "n_train",
    "n_test",
    "mse",
    "oracle_lstar",
    "psnr_db",
    "mean_gap",
    "cov_frobenius_gap",
    "teacher_forced",
    "seed",
];

pub fn write_oracle_csv<W: Write>(out: W, reports: &[OracleReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ORACLE_COLUMNS)?;
    for r in reports {
        for row in &r.rows {
            w.write_record([
                r.chain_kind.clone(),
                r.n_frames.to_string(),
                r.dim.to_string(),
                row.context.label(),
                fmt_g12(row.l_star),
                opt(row.gap_to_prev),
                opt_bool(row.equality),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_eval_csv<W: Write>(out: W, report: &EvalReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVAL_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.chain_kind.clone(),
            r.n_frames.to_string(),
            r.dim.to_string(),
            r.k.to_string(),
            r.n_train.to_string(),
            r.n_test.to_string(),
            fmt_g12(r.mse),
            opt(r.oracle_lstar),
            fmt_g12(r.psnr_db),
            opt(r.mean_gap),
            opt(r.cov_frobenius_gap),
            opt_bool(r.teacher_forced),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
