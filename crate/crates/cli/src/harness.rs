//! Corpus validation: predict every measured kernel, compute relative
//! prediction errors, and aggregate them into the bucket histogram and
//! summary statistics.

use std::collections::BTreeMap;
use std::path::Path;

use incore::asm_frontend::parse_listing;
use incore::machine_model::MachineModel;
use incore::predictor;
use incore::rat;

/// One measured data point of the validation corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub kernel_id: String,
    pub compiler: String,
    pub flags: String,
    pub measured_cy_per_iter: f64,
}

#[derive(Debug)]
pub enum HarnessError {
    Malformed { line: usize, msg: String },
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Malformed { line, msg } => write!(f, "line {line}: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

/// Parse a measurement TSV: header
/// `kernel_id<TAB>compiler<TAB>flags<TAB>measured_cy_per_iter`, one row
/// per test. The (kernel, compiler, flags) triple must be unique.
pub fn parse_measurements(text: &str) -> Result<Vec<Measurement>, HarnessError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(HarnessError::Malformed {
            line: 1,
            msg: "empty file".into(),
        });
    };
    let expect = ["kernel_id", "compiler", "flags", "measured_cy_per_iter"];
    let cols: Vec<&str> = header.trim_end().split('\t').collect();
    if cols != expect {
        return Err(HarnessError::Malformed {
            line: 1,
            msg: format!("header must be {}", expect.join("\\t")),
        });
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 4 {
            return Err(HarnessError::Malformed {
                line: line_no,
                msg: format!("expected 4 columns, got {}", cells.len()),
            });
        }
        let measured: f64 = cells[3]
            .trim()
            .parse()
            .map_err(|_| HarnessError::Malformed {
                line: line_no,
                msg: format!("bad cycle count `{}`", cells[3]),
            })?;
        if measured.is_nan() || measured <= 0.0 {
            return Err(HarnessError::Malformed {
                line: line_no,
                msg: "measured cycles must be positive".into(),
            });
        }
        let key = (
            cells[0].to_string(),
            cells[1].to_string(),
            cells[2].to_string(),
        );
        if !seen.insert(key.clone()) {
            return Err(HarnessError::Malformed {
                line: line_no,
                msg: format!("duplicate measurement for {key:?}"),
            });
        }
        out.push(Measurement {
            kernel_id: key.0,
            compiler: key.1,
            flags: key.2,
            measured_cy_per_iter: measured,
        });
    }
    Ok(out)
}

/// RPE histogram: half-open buckets `[k·w, (k+1)·w)` plus a collector for
/// everything at or below −1.0 (prediction slower by 2x or worse).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub width: f64,
    pub buckets: BTreeMap<i32, usize>,
    pub collector: usize,
}

pub fn histogram(errors: &[f64], width: f64) -> Histogram {
    assert!(width > 0.0);
    let mut buckets = BTreeMap::new();
    let mut collector = 0;
    for &e in errors {
        if e <= -1.0 {
            collector += 1;
        } else {
            let k = (e / width).floor() as i32;
            *buckets.entry(k).or_insert(0) += 1;
        }
    }
    Histogram {
        width,
        buckets,
        collector,
    }
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.collector + self.buckets.values().sum::<usize>()
    }

    /// TSV rows `(bucket_low, count)`, collector first as `-inf`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bucket_low\tcount\n");
        out.push_str(&format!("-inf\t{}\n", self.collector));
        for (k, count) in &self.buckets {
            out.push_str(&format!(
                "{}\t{count}\n",
                crate::fmt_sig(*k as f64 * self.width)
            ));
        }
        out
    }
}

/// Per-measurement outcome of a corpus run.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelResult {
    pub kernel_id: String,
    pub compiler: String,
    pub flags: String,
    pub measured: f64,
    pub predicted: f64,
    pub rpe: f64,
}

/// Aggregated validation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub results: Vec<KernelResult>,
    /// (kernel id, error message) for entries that failed to analyze; the
    /// run continues past them.
    pub failures: Vec<(String, String)>,
    pub errors: Vec<f64>,
    pub buckets: Histogram,
    /// Percent of measurements with 0 <= RPE < 0.10.
    pub pct_within_10: f64,
    /// Percent of measurements with 0 <= RPE < 0.20.
    pub pct_within_20: f64,
    /// Mean RPE over the under-predictions (RPE > 0) only.
    pub mean_rpe_underpredictions: f64,
    pub mean_abs_rpe: f64,
}

/// Aggregate per-kernel results into the summary statistics.
pub fn summarize(results: Vec<KernelResult>, failures: Vec<(String, String)>) -> ValidationSummary {
    let errors: Vec<f64> = results.iter().map(|r| r.rpe).collect();
    let n = errors.len();
    let frac = |pred: &dyn Fn(f64) -> bool| {
        if n == 0 {
            0.0
        } else {
            100.0 * errors.iter().filter(|e| pred(**e)).count() as f64 / n as f64
        }
    };
    let positives: Vec<f64> = errors.iter().copied().filter(|e| *e > 0.0).collect();
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    ValidationSummary {
        buckets: histogram(&errors, 0.1),
        pct_within_10: frac(&|e| (0.0..0.1).contains(&e)),
        pct_within_20: frac(&|e| (0.0..0.2).contains(&e)),
        mean_rpe_underpredictions: mean(&positives),
        mean_abs_rpe: mean(&abs),
        errors,
        results,
        failures,
    }
}

/// Analyze every measured kernel against its fixture in `corpus_dir`
/// (`<kernel_id>.s`, dialect from the model) and aggregate RPEs.
/// Per-entry failures are recorded and the run continues.
///
/// Kernels are analyzed concurrently (the model is immutable and shared
/// by reference); report assembly is serialized and sorted by
/// (kernel, compiler, flags), so output is deterministic regardless of
/// execution order.
pub fn run_corpus(
    corpus_dir: &Path,
    measurements: &[Measurement],
    model: &MachineModel,
) -> ValidationSummary {
    let mut ids: Vec<&str> = measurements.iter().map(|m| m.kernel_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();

    let predict_one = |id: &str| -> Result<f64, String> {
        let path = corpus_dir.join(format!("{id}.s"));
        let text = std::fs::read_to_string(&path)
            .map_err(|e| format!("missing fixture {}: {e}", path.display()))?;
        let ir = parse_listing(&text, model.isa).map_err(|e| e.to_string())?;
        let report = predictor::predict(&ir, model).map_err(|e| e.to_string())?;
        Ok(rat::to_f64(report.prediction))
    };

    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let predictions: BTreeMap<String, Result<f64, String>> = if workers > 1 && ids.len() > 1 {
        std::thread::scope(|s| {
            let chunk = ids.len().div_ceil(workers);
            let handles: Vec<_> = ids
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || {
                        part.iter()
                            .map(|id| (id.to_string(), predict_one(id)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("analysis thread"))
                .collect()
        })
    } else {
        ids.iter()
            .map(|id| (id.to_string(), predict_one(id)))
            .collect()
    };

    let mut sorted: Vec<&Measurement> = measurements.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.kernel_id, &a.compiler, &a.flags).cmp(&(&b.kernel_id, &b.compiler, &b.flags))
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for m in sorted {
        match &predictions[&m.kernel_id] {
            Ok(p) => {
                let rpe = (m.measured_cy_per_iter - p) / m.measured_cy_per_iter;
                results.push(KernelResult {
                    kernel_id: m.kernel_id.clone(),
                    compiler: m.compiler.clone(),
                    flags: m.flags.clone(),
                    measured: m.measured_cy_per_iter,
                    predicted: *p,
                    rpe,
                });
            }
            Err(e) => failures.push((m.kernel_id.clone(), e.clone())),
        }
    }
    summarize(results, failures)
}

impl ValidationSummary {
    /// Per-kernel TSV: one row per measurement.
    pub fn results_tsv(&self) -> String {
        let mut out = String::from("kernel_id\tcompiler\tflags\tmeasured\tpredicted\trpe\n");
        for r in &self.results {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.kernel_id,
                r.compiler,
                r.flags,
                crate::fmt_sig(r.measured),
                crate::fmt_sig(r.predicted),
                crate::fmt_sig(r.rpe),
            ));
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("measurements\t{}\n", self.errors.len()));
        out.push_str(&format!("failures\t{}\n", self.failures.len()));
        out.push_str(&format!(
            "pct_within_10\t{}\n",
            crate::fmt_sig(self.pct_within_10)
        ));
        out.push_str(&format!(
            "pct_within_20\t{}\n",
            crate::fmt_sig(self.pct_within_20)
        ));
        out.push_str(&format!(
            "mean_rpe_underpredictions\t{}\n",
            crate::fmt_sig(self.mean_rpe_underpredictions)
        ));
        out.push_str(&format!(
            "mean_abs_rpe\t{}\n",
            crate::fmt_sig(self.mean_abs_rpe)
        ));
        out
    }
}
