//! Acceptance suite: every criterion below prints one PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use incore::asm_frontend::{parse_listing, Dialect};
use incore::dep_graph;
use incore::machine_model::{
    expectations_for, load_model, MachineModel, PortSet, ThroughputUnit, VectorClass,
};
use incore::port_scheduler::min_makespan;
use incore::predictor;
use incore::rat::{self, Rat};
use incore::synth;
use incore::wa_traffic::{self, ActivationCurve, WaMode};

fn repo(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../")
        .join(path)
}

fn model(name: &str) -> MachineModel {
    load_model(repo(&format!("models/{name}.mm"))).unwrap()
}

fn criterion(n: u32, name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    let result = std::panic::catch_unwind(body);
    match &result {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(_) => println!("criterion {n} ({name}): FAIL"),
    }
    if let Err(e) = result {
        std::panic::resume_unwind(e);
    }
}

/// Small deterministic PRNG for randomized criteria.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 11
    }
    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
    fn f64(&mut self) -> f64 {
        (self.next() % (1 << 53)) as f64 / (1u64 << 53) as f64
    }
}

// 1. Every measured (instruction, machine) throughput/latency data point
//    is reproduced exactly by a single-instruction synthetic loop run
//    through the real analyzer path.
#[test]
fn criterion_1_instruction_table_reproduction() {
    criterion(
        1,
        "instruction throughput/latency table reproduction",
        || {
            let start = Instant::now();
            let mut cells = 0;
            for name in ["gcs", "spr", "genoa"] {
                let m = model(name);
                let rows = expectations_for(&m.name);
                assert!(!rows.is_empty());
                for row in rows {
                    let kernel = synth::kernel_of(&m, &row.form, 1);
                    let pressure = incore::port_scheduler::port_pressure(&kernel, &m)
                        .unwrap_or_else(|e| panic!("{name}/{}: {e}", row.form));
                    let desc = m.lookup(&kernel.instructions[0]).unwrap();
                    let tp = match row.unit {
                        ThroughputUnit::DpElementsPerCycle => {
                            Rat::from_integer(i64::from(desc.dp_elems)) / pressure.t_port
                        }
                        ThroughputUnit::CacheLinesPerCycle => {
                            Rat::from_integer(1) / pressure.t_port
                        }
                    };
                    assert_eq!(
                        tp,
                        row.throughput,
                        "{name}/{}: throughput {} != {}",
                        row.form,
                        rat::display(tp),
                        rat::display(row.throughput)
                    );
                    assert_eq!(desc.latency, row.latency, "{name}/{}: latency", row.form);
                    cells += 1;
                }
            }
            assert_eq!(cells, 27, "9 instructions x 3 machines");
            assert!(start.elapsed().as_secs() < 5, "must finish in under 5 s");
        },
    );
}

// 2. Chip-level theoretical DP peaks from the shipped models at max
//    frequency, within 1%.
#[test]
fn criterion_2_peak_flops() {
    criterion(2, "theoretical peak flops within 1%", || {
        let cases = [("gcs", 3.92e12), ("spr", 6.32e12), ("genoa", 8.52e12)];
        for (name, expected) in cases {
            let m = model(name);
            let peak = m.theoretical_peak_flops(m.max_freq, m.cores_per_chip);
            let rel = (peak - expected).abs() / expected;
            assert!(rel < 0.01, "{name}: {peak:.5e} vs {expected:.5e}");
        }
    });
}

// 3. Scheduler matches a brute-force fractional-assignment oracle on
//    1000+ random instances (≤ 6 µ-ops, ≤ 4 ports, occupancies in
//    {0.5, 1, 2, 5}) within 1e-6, in under a minute.
#[test]
fn criterion_3_scheduler_oracle() {
    criterion(3, "port scheduler vs brute-force oracle", || {
        let start = Instant::now();
        let occupancies = [rat::ratio(1, 2), rat::rat(1), rat::rat(2), rat::rat(5)];
        let mut rng = Lcg(0x5eed_0001);
        for _ in 0..1500 {
            let ports = 1 + rng.below(4) as usize;
            let n = rng.below(7) as usize;
            let uops: Vec<(PortSet, Rat)> = (0..n)
                .map(|_| {
                    let mask = 1 + rng.below((1 << ports) - 1) as u32;
                    (PortSet(mask), occupancies[rng.below(4) as usize])
                })
                .collect();
            let got = rat::to_f64(min_makespan(&uops, ports));
            // Brute force: density bound over every nonempty port subset.
            let mut oracle = 0.0f64;
            for s in 1u32..(1 << ports) {
                let occ: f64 = uops
                    .iter()
                    .filter(|(m, _)| m.0 & !s == 0)
                    .map(|(_, o)| rat::to_f64(*o))
                    .sum();
                oracle = oracle.max(occ / s.count_ones() as f64);
            }
            assert!((got - oracle).abs() < 1e-6, "{uops:?}: {got} vs {oracle}");
        }
        assert!(start.elapsed().as_secs() < 60);
    });
}

// 4. Loop-carried dependency: random single-cycle graphs equal the direct
//    latency sum, and the self-recurrent vector FMA predicts exactly 4
//    cycles per iteration.
#[test]
fn criterion_4_lcd_correctness() {
    criterion(4, "loop-carried dependency bound", || {
        let mut rng = Lcg(0x5eed_0002);
        for _ in 0..300 {
            let k = 2 + rng.below(6) as usize;
            let lats: Vec<u32> = (0..k).map(|_| 1 + rng.below(9) as u32).collect();
            let intra: Vec<dep_graph::Edge> = (0..k - 1)
                .map(|i| dep_graph::Edge {
                    from: i,
                    to: i + 1,
                    latency: lats[i],
                })
                .collect();
            let cross = vec![dep_graph::Edge {
                from: k - 1,
                to: 0,
                latency: lats[k - 1],
            }];
            let g = dep_graph::DependencyGraph {
                node_count: k,
                intra_edges: intra,
                cross_edges: cross,
                node_latency: lats.clone(),
            };
            let r = dep_graph::loop_carried(&g).unwrap();
            assert_eq!(r.lcd, lats.iter().sum::<u32>());
        }

        let gcs = model("gcs");
        let form = incore::machine_model::InstructionForm {
            mnemonic: "fmla".into(),
            operands: vec![incore::machine_model::OperandClass::Vector(16); 3],
        };
        let kernel = synth::self_recurrent_kernel(&gcs, &form);
        let report = predictor::predict(&kernel, &gcs).unwrap();
        assert_eq!(report.prediction, rat::rat(4));
        assert_eq!(report.bottleneck, predictor::Bottleneck::Lcd);
    });
}

// 5. Sustained-frequency endpoints are reproduced exactly.
#[test]
fn criterion_5_frequency_endpoints() {
    criterion(5, "sustained frequency endpoints", || {
        let gcs = model("gcs");
        for class in [
            VectorClass::Scalar,
            VectorClass::NarrowVector,
            VectorClass::WideVector512,
        ] {
            assert_eq!(gcs.sustained_frequency(class, 72).unwrap(), 3.4e9);
        }
        let spr = model("spr");
        assert_eq!(
            spr.sustained_frequency(VectorClass::WideVector512, 52)
                .unwrap(),
            2.0e9
        );
        assert_eq!(
            spr.sustained_frequency(VectorClass::NarrowVector, 52)
                .unwrap(),
            3.0e9
        );
        let genoa = model("genoa");
        assert_eq!(
            genoa
                .sustained_frequency(VectorClass::WideVector512, 96)
                .unwrap(),
            3.1e9
        );
    });
}

// 6. Write-allocate traffic ratios: exact endpoints and the [1, 2] band
//    under randomized inputs.
#[test]
fn criterion_6_wa_ratios() {
    criterion(6, "write-allocate traffic ratios", || {
        let gcs = model("gcs");
        let spr = model("spr");
        assert_eq!(
            wa_traffic::traffic_ratio(&WaMode::AutoEvasion, &gcs, 72),
            1.0
        );
        assert_eq!(wa_traffic::traffic_ratio(&WaMode::FullWa, &gcs, 72), 2.0);
        let speci2m = WaMode::SpecI2m {
            max_reduction: 0.25,
            activation: ActivationCurve::default_gate(),
        };
        assert_eq!(wa_traffic::traffic_ratio(&speci2m, &spr, 13), 1.75);
        assert_eq!(
            wa_traffic::traffic_ratio(&WaMode::NtResidual { residual: 0.10 }, &spr, 13),
            1.10
        );

        let mut rng = Lcg(0x5eed_0003);
        for _ in 0..2000 {
            let cores = 1 + rng.below(u64::from(spr.cores_per_chip)) as u32;
            let mode = match rng.below(5) {
                0 => WaMode::FullWa,
                1 => WaMode::AutoEvasion,
                2 => WaMode::NtPerfect,
                3 => WaMode::NtResidual {
                    residual: rng.f64(),
                },
                _ => WaMode::SpecI2m {
                    max_reduction: rng.f64(),
                    activation: ActivationCurve::default_gate(),
                },
            };
            let r = wa_traffic::traffic_ratio(&mode, &spr, cores);
            assert!((1.0..=2.0).contains(&r), "{mode:?} at {cores}: {r}");
        }
    });
}

// 7. The shipped 13-kernel corpus parses and predicts on all three
//    models; `analyze` output is byte-identical across runs.
#[test]
fn criterion_7_corpus_smoke_and_determinism() {
    criterion(7, "corpus smoke + deterministic output", || {
        let cases = [
            ("gcs", Dialect::Aarch64, "corpus/aarch64"),
            ("spr", Dialect::X86Att, "corpus/x86"),
            ("genoa", Dialect::X86Att, "corpus/x86"),
        ];
        for (name, dialect, dir) in cases {
            let m = model(name);
            let mut fixtures: Vec<PathBuf> = std::fs::read_dir(repo(dir))
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            fixtures.sort();
            assert_eq!(fixtures.len(), 13, "{dir}");
            for path in &fixtures {
                let text = std::fs::read_to_string(path).unwrap();
                let ir = parse_listing(&text, dialect).unwrap();
                predictor::predict(&ir, &m)
                    .unwrap_or_else(|e| panic!("{name} {}: {e}", path.display()));
            }
        }

        // Byte-identical reports across process runs, both formats.
        let arch = repo("models/gcs.mm");
        for fixture in ["stream_triad.s", "gs2d5p.s", "jacobi3d27p.s"] {
            let file = repo("corpus/aarch64").join(fixture);
            for format in ["text", "tsv"] {
                let run = || {
                    std::process::Command::new(env!("CARGO_BIN_EXE_incore"))
                        .args([
                            "analyze",
                            "--arch",
                            arch.to_str().unwrap(),
                            "--file",
                            file.to_str().unwrap(),
                            "--format",
                            format,
                            "--dump-ir",
                            "--dump-deps",
                            "--cores",
                            "72",
                        ])
                        .output()
                        .unwrap()
                };
                let (a, b) = (run(), run());
                assert!(a.status.success(), "{fixture}");
                assert_eq!(a.stdout, b.stdout, "{fixture} {format}");
            }
        }
    });
}

// 8. RPE methodology: bucket, collector, and positive-side statistics
//    definitions hold on synthetic error sets; the emitted TSV is
//    self-consistent with the summary.
#[test]
fn criterion_8_rpe_methodology() {
    criterion(8, "RPE histogram and summary definitions", || {
        use incore_cli::{histogram, summarize, KernelResult};

        // Bucket placement.
        let h = histogram(&[0.05, 0.15, -1.5], 0.1);
        assert_eq!(h.buckets.get(&0), Some(&1));
        assert_eq!(h.buckets.get(&1), Some(&1));
        assert_eq!(h.collector, 1);
        assert_eq!(h.total(), 3);

        let h = histogram(&[0.0], 0.1);
        assert_eq!(h.buckets.get(&0), Some(&1));
        let h = histogram(&[-1.0001], 0.1);
        assert_eq!(h.collector, 1);
        let h = histogram(&[-1.0], 0.1);
        assert_eq!(h.collector, 1, "exactly -1.0 goes to the collector");
        let h = histogram(&[], 0.1);
        assert_eq!(h.total(), 0);

        // Positive-side statistics.
        let results: Vec<KernelResult> = [0.2, 0.4, -0.3]
            .iter()
            .enumerate()
            .map(|(i, rpe)| KernelResult {
                kernel_id: format!("k{i}"),
                compiler: "c".into(),
                flags: "-O3".into(),
                measured: 1.0,
                predicted: 1.0 - rpe,
                rpe: *rpe,
            })
            .collect();
        let s = summarize(results, vec![]);
        assert!((s.mean_rpe_underpredictions - 0.3).abs() < 1e-12);
        assert!((s.mean_abs_rpe - 0.3).abs() < 1e-12);
        assert_eq!(s.buckets.total(), s.errors.len());

        // Predicted == measured: all RPE zero, 100% within 10%.
        let gcs = model("gcs");
        let mut ms = Vec::new();
        for entry in std::fs::read_dir(repo("corpus/aarch64")).unwrap() {
            let path = entry.unwrap().path();
            let id = path.file_stem().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&path).unwrap();
            let ir = parse_listing(&text, Dialect::Aarch64).unwrap();
            let p = rat::to_f64(predictor::predict(&ir, &gcs).unwrap().prediction);
            ms.push(incore_cli::Measurement {
                kernel_id: id,
                compiler: "exact".into(),
                flags: "-O3".into(),
                measured_cy_per_iter: p,
            });
        }
        let summary = incore_cli::run_corpus(&repo("corpus/aarch64"), &ms, &gcs);
        assert!(summary.failures.is_empty());
        assert!(summary.errors.iter().all(|e| *e == 0.0));
        assert_eq!(summary.pct_within_10, 100.0);
        assert_eq!(summary.pct_within_20, 100.0);

        // TSV self-consistency: statistics recomputed from the emitted
        // per-kernel rows match the summary.
        let text = std::fs::read_to_string(repo("corpus/measurements.sample.tsv")).unwrap();
        let ms = incore_cli::parse_measurements(&text).unwrap();
        let summary = incore_cli::run_corpus(&repo("corpus/aarch64"), &ms, &gcs);
        let tsv = summary.results_tsv();
        let rpes: Vec<f64> = tsv
            .lines()
            .skip(1)
            .map(|l| l.split('\t').nth(5).unwrap().parse().unwrap())
            .collect();
        assert_eq!(rpes.len(), summary.errors.len());
        let n = rpes.len() as f64;
        let within10 = 100.0 * rpes.iter().filter(|e| (0.0..0.1).contains(*e)).count() as f64 / n;
        assert!((within10 - summary.pct_within_10).abs() < 1e-9);
        let recomputed = incore_cli::histogram(&rpes, 0.1);
        assert_eq!(recomputed.buckets, summary.buckets.buckets);
        assert_eq!(recomputed.collector, summary.buckets.collector);
    });
}

// 9. Roofline law: p_roof = min(p_core, intensity × bandwidth), with the
//    memory-bound classification flipping exactly at the ridge.
#[test]
fn criterion_9_roofline_law() {
    criterion(9, "roofline min law and ridge point", || {
        let gcs = model("gcs");
        let text = std::fs::read_to_string(repo("corpus/aarch64/stream_triad.s")).unwrap();
        let ir = parse_listing(&text, Dialect::Aarch64).unwrap();
        let report = predictor::predict(&ir, &gcs).unwrap();

        let mut rng = Lcg(0x5eed_0009);
        for _ in 0..2000 {
            let flops = rng.f64() * 64.0;
            let bytes = rng.f64() * 256.0 + 1e-3;
            let cores = 1 + rng.below(72) as u32;
            let rl = predictor::roofline(&report, flops, bytes, &gcs, cores).unwrap();
            assert_eq!(rl.p_roof, rl.p_core.min(rl.p_mem));
            assert!(rl.p_roof <= rl.p_core && rl.p_roof <= rl.p_mem);
        }

        // Ridge: intensity where the bandwidth ceiling meets the in-core
        // ceiling. Slightly below is memory bound, slightly above is not.
        let flops = 2.0;
        let probe = predictor::roofline(&report, flops, 1.0, &gcs, 72).unwrap();
        let ridge_intensity = probe.p_core / gcs.mem_bandwidth;
        let below =
            predictor::roofline(&report, flops, flops / (ridge_intensity * 0.999), &gcs, 72)
                .unwrap();
        let above =
            predictor::roofline(&report, flops, flops / (ridge_intensity * 1.001), &gcs, 72)
                .unwrap();
        assert!(below.memory_bound());
        assert!(!above.memory_bound());
    });
}
