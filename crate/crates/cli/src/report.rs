//! Text and TSV renderers for analysis reports and WA ratio tables.
//! All output is deterministic: port order follows the model's port list,
//! numbers print with 6 significant digits (rationals exactly).

use incore::machine_model::MachineModel;
use incore::predictor::PredictionReport;
use incore::rat;
use incore::wa_traffic::{self, WaMode};

use crate::fmt_sig;

/// Human-readable analysis report.
pub fn render_text(
    kernel_id: &str,
    ir: &incore::KernelIR,
    report: &PredictionReport,
    model: &MachineModel,
    cores: Option<u32>,
    work: (f64, f64, f64),
) -> String {
    let mut out = String::new();
    out.push_str(&format!("kernel: {kernel_id}\n"));
    out.push_str(&format!(
        "machine: {} ({}), {} ports, issue width {}\n",
        model.name,
        model.isa,
        model.port_count(),
        model.issue_width
    ));
    out.push_str(&format!("instructions: {}\n", ir.instructions.len()));
    out.push_str(&format!("vector class: {}\n", report.vclass.token()));
    out.push('\n');
    out.push_str("bound          cy/iter\n");
    out.push_str(&format!("t_port         {}\n", rat::display(report.t_port)));
    out.push_str(&format!(
        "t_issue        {}\n",
        rat::display(report.t_issue)
    ));
    out.push_str(&format!("lcd            {}\n", rat::display(report.lcd)));
    out.push_str(&format!(
        "critical path  {}\n",
        rat::display(report.critical_path)
    ));
    out.push_str(&format!(
        "prediction     {}  (bottleneck: {})\n",
        rat::display(report.prediction),
        report.bottleneck
    ));
    out.push('\n');
    out.push_str("per-port load [cy]:\n");
    for (i, name) in model.ports.iter().enumerate() {
        out.push_str(&format!(
            "  {name:<4} {}\n",
            rat::display(report.port_pressure.per_port_load[i])
        ));
    }
    let (flops, loaded, stored) = work;
    out.push_str(&format!(
        "\nwork/iter: {} flops, {} B loaded, {} B stored\n",
        fmt_sig(flops),
        fmt_sig(loaded),
        fmt_sig(stored)
    ));
    if let Some(cores) = cores {
        if let Ok(freq) = model.sustained_frequency(report.vclass, cores) {
            let t = rat::to_f64(report.prediction) / freq;
            out.push_str(&format!(
                "time/iter: {} ns at {} GHz ({} cores)\n",
                fmt_sig(t * 1e9),
                fmt_sig(freq / 1e9),
                cores
            ));
        }
    }
    for d in &report.diagnostics {
        out.push_str(&format!("note: {d}\n"));
    }
    out
}

/// One TSV row per kernel: id and the component bounds.
pub fn render_tsv_header() -> &'static str {
    "kernel_id\tt_port\tt_issue\tlcd\tprediction\tbottleneck\n"
}

pub fn render_tsv_row(kernel_id: &str, report: &PredictionReport) -> String {
    format!(
        "{kernel_id}\t{}\t{}\t{}\t{}\t{}\n",
        fmt_sig(rat::to_f64(report.t_port)),
        fmt_sig(rat::to_f64(report.t_issue)),
        fmt_sig(rat::to_f64(report.lcd)),
        fmt_sig(rat::to_f64(report.prediction)),
        report.bottleneck
    )
}

/// WA ratio table over core counts; `modes` become columns.
pub fn render_wa_table(model: &MachineModel, modes: &[(String, WaMode)]) -> String {
    let mut out = String::from("cores");
    for (label, _) in modes {
        out.push('\t');
        out.push_str(label);
    }
    out.push('\n');
    for cores in 1..=model.cores_per_chip {
        out.push_str(&cores.to_string());
        for (_, mode) in modes {
            out.push('\t');
            out.push_str(&fmt_sig(wa_traffic::traffic_ratio(mode, model, cores)));
        }
        out.push('\n');
    }
    out
}

/// `model show` summary.
pub fn render_model_show(model: &MachineModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("name: {}\n", model.name));
    out.push_str(&format!("isa: {}\n", model.isa));
    out.push_str(&format!(
        "ports ({}): {}\n",
        model.port_count(),
        model.ports.join(" ")
    ));
    out.push_str(&format!("issue width: {} µ-ops/cy\n", model.issue_width));
    out.push_str(&format!("simd: {} B\n", model.simd_bytes));
    out.push_str(&format!(
        "loads: {} x {} B/cy, stores: {} x {} B/cy\n",
        model.load_units.0, model.load_units.1, model.store_units.0, model.store_units.1
    ));
    out.push_str(&format!(
        "cores: {} ({} ccNUMA domains), base {} GHz, max {} GHz\n",
        model.cores_per_chip,
        model.ccnuma_domains,
        fmt_sig(model.base_freq / 1e9),
        fmt_sig(model.max_freq / 1e9)
    ));
    out.push_str(&format!(
        "memory bandwidth: {} GB/s (measured)\n",
        fmt_sig(model.mem_bandwidth / 1e9)
    ));
    for (cls, curve) in &model.freq_curves {
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|(c, f)| format!("{c}:{} GHz", fmt_sig(f / 1e9)))
            .collect();
        out.push_str(&format!("freq[{}]: {}\n", cls.token(), pts.join(" ")));
    }
    out.push_str(&format!(
        "instruction forms: {}\n",
        model.instructions.len()
    ));
    let peak = model.theoretical_peak_flops(model.max_freq, model.cores_per_chip);
    out.push_str(&format!(
        "theoretical DP peak: {} Tflop/s\n",
        fmt_sig(peak / 1e12)
    ));
    out
}
