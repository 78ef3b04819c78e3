//! Validation harness and report formatting for the `incore` CLI:
//! measurement files, corpus runs, RPE histograms, and the text/TSV
//! renderers the commands share.

pub mod harness;
pub mod report;

pub use harness::{
    histogram, parse_measurements, run_corpus, summarize, Histogram, KernelResult, Measurement,
    ValidationSummary,
};

/// Format with 6 significant digits, `.` decimal separator.
pub fn fmt_sig(v: f64) -> String {
    format_sig(v, 6)
}

pub fn format_sig(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if exp >= sig as i32 || exp < -4 {
        format!("{:.*e}", sig - 1, v)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, v)
    }
}
