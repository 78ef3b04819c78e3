//! Write-allocate regimes: ratio endpoints, gating, linearity, and TSV
//! curve ingest.

use incore::machine_model::{load_model, MachineModel};
use incore::wa_traffic::{
    compare_curve, default_nt_mode, default_store_mode, effective_traffic, ingest_ratio_curves,
    traffic_ratio, ActivationCurve, TrafficError, TrafficSpec, WaMode,
};
use proptest::prelude::*;

fn model(name: &str) -> MachineModel {
    let path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../models/{name}.mm"));
    load_model(path).unwrap()
}

fn speci2m() -> WaMode {
    WaMode::SpecI2m {
        max_reduction: 0.25,
        activation: ActivationCurve::default_gate(),
    }
}

#[test]
fn ratio_endpoints() {
    let gcs = model("gcs");
    let spr = model("spr");

    for cores in [1, 13, 36, 72] {
        assert_eq!(traffic_ratio(&WaMode::AutoEvasion, &gcs, cores), 1.0);
        assert_eq!(traffic_ratio(&WaMode::FullWa, &gcs, cores), 2.0);
    }
    // One saturated 13-core ccNUMA domain activates the full 25% cut.
    assert_eq!(traffic_ratio(&speci2m(), &spr, 13), 1.75);
    assert_eq!(traffic_ratio(&speci2m(), &spr, 52), 1.75);
    // Below half utilization nothing is evaded.
    assert_eq!(traffic_ratio(&speci2m(), &spr, 6), 2.0);
    assert_eq!(
        traffic_ratio(&WaMode::NtResidual { residual: 0.10 }, &spr, 13),
        1.10
    );
    assert_eq!(traffic_ratio(&WaMode::NtPerfect, &spr, 13), 1.0);
}

#[test]
fn default_modes_per_machine() {
    let gcs = model("gcs");
    let spr = model("spr");
    let genoa = model("genoa");
    assert_eq!(default_store_mode(&gcs).token(), "auto-evasion");
    assert_eq!(default_store_mode(&spr).token(), "speci2m");
    assert_eq!(default_store_mode(&genoa).token(), "full-wa");
    // NT stores leave a residue on Golden Cove except at tiny core counts.
    assert_eq!(default_nt_mode(&spr, 2).token(), "nt-perfect");
    assert_eq!(default_nt_mode(&spr, 4).token(), "nt-residual");
    assert_eq!(default_nt_mode(&genoa, 96).token(), "nt-perfect");
}

proptest! {
    #[test]
    fn ratios_stay_in_unit_band(
        cores in 1u32..=96,
        reduction in 0.0f64..=1.0,
        residual in 0.0f64..=1.0,
    ) {
        let spr = model("spr");
        let modes = [
            WaMode::FullWa,
            WaMode::AutoEvasion,
            WaMode::NtPerfect,
            WaMode::NtResidual { residual },
            WaMode::SpecI2m { max_reduction: reduction, activation: ActivationCurve::default_gate() },
        ];
        for mode in &modes {
            let r = traffic_ratio(mode, &spr, cores.min(spr.cores_per_chip));
            prop_assert!((1.0..=2.0).contains(&r), "{mode:?} -> {r}");
        }
    }

    #[test]
    fn speci2m_nonincreasing_others_constant(cores in 1u32..52) {
        let spr = model("spr");
        let next = cores + 1;
        let s = speci2m();
        prop_assert!(traffic_ratio(&s, &spr, next) <= traffic_ratio(&s, &spr, cores));
        for mode in [WaMode::FullWa, WaMode::AutoEvasion, WaMode::NtPerfect, WaMode::NtResidual { residual: 0.1 }] {
            prop_assert_eq!(traffic_ratio(&mode, &spr, next), traffic_ratio(&mode, &spr, cores));
        }
    }

    #[test]
    fn effective_traffic_linear_in_store_bytes(store in 1.0f64..64.0, k in 1.0f64..4.0) {
        let spr = model("spr");
        let spec = |s| TrafficSpec { load_bytes_per_iter: 16.0, store_bytes_per_iter: s, streaming: true };
        let mode = speci2m();
        let t1 = effective_traffic(&spec(store), &mode, &spr, 26) - 16.0;
        let tk = effective_traffic(&spec(store * k), &mode, &spr, 26) - 16.0;
        prop_assert!((tk - k * t1).abs() < 1e-9);
    }
}

#[test]
fn effective_traffic_examples() {
    let gcs = model("gcs");
    let genoa = model("genoa");
    let init = TrafficSpec {
        load_bytes_per_iter: 0.0,
        store_bytes_per_iter: 8.0,
        streaming: true,
    };
    assert_eq!(
        effective_traffic(&init, &WaMode::AutoEvasion, &gcs, 72),
        8.0
    );
    assert_eq!(effective_traffic(&init, &WaMode::FullWa, &gcs, 72), 16.0);

    let triad = TrafficSpec {
        load_bytes_per_iter: 16.0,
        store_bytes_per_iter: 8.0,
        streaming: true,
    };
    assert_eq!(
        effective_traffic(&triad, &default_store_mode(&genoa), &genoa, 96),
        32.0
    );

    // Partial-line stores cannot claim lines: evasion degrades to full WA.
    let partial = TrafficSpec {
        load_bytes_per_iter: 0.0,
        store_bytes_per_iter: 8.0,
        streaming: false,
    };
    assert_eq!(
        effective_traffic(&partial, &WaMode::AutoEvasion, &gcs, 72),
        16.0
    );
}

#[test]
fn ratio_curve_ingest() {
    let two_point = "cores\tspr\n1\t2.0\n13\t1.75\n";
    let curves = ingest_ratio_curves(two_point).unwrap();
    assert_eq!(curves.len(), 1);
    assert_eq!(curves[0].label, "spr");
    assert_eq!(curves[0].points, vec![(1, 2.0), (13, 1.75)]);

    assert!(matches!(ingest_ratio_curves(""), Err(TrafficError::Empty)));
    assert!(matches!(
        ingest_ratio_curves("cores\tspr\n"),
        Err(TrafficError::Empty)
    ));
    assert!(matches!(
        ingest_ratio_curves("cores\tspr\n1\t3.0\n"),
        Err(TrafficError::RatioOutOfRange { .. })
    ));
    assert!(matches!(
        ingest_ratio_curves("cores\tspr\n1\n"),
        Err(TrafficError::Malformed { .. })
    ));
}

#[test]
fn curve_comparison_reports_max_deviation() {
    let spr = model("spr");
    let text = "cores\tspr\n1\t2.0\n6\t2.0\n13\t1.75\n52\t1.75\n";
    let curves = ingest_ratio_curves(text).unwrap();
    let dev = compare_curve(&curves[0], &speci2m(), &spr);
    assert!(dev < 1e-12, "model reproduces its own gate: {dev}");

    let off = ingest_ratio_curves("cores\tspr\n13\t1.9\n").unwrap();
    let dev = compare_curve(&off[0], &speci2m(), &spr);
    assert!((dev - 0.15).abs() < 1e-12);
}

#[test]
fn mode_tokens_round_trip() {
    for token in ["full-wa", "auto-evasion", "speci2m", "nt-perfect"] {
        assert_eq!(WaMode::from_token(token).unwrap().token(), token);
    }
    match WaMode::from_token("nt-residual:0.25") {
        Some(WaMode::NtResidual { residual }) => assert_eq!(residual, 0.25),
        other => panic!("{other:?}"),
    }
    assert!(WaMode::from_token("bogus").is_none());
    assert!(WaMode::from_token("nt-residual:7").is_none());
}

#[test]
fn ingest_requires_increasing_core_counts() {
    let unsorted = "cores\tspr\n13\t1.75\n1\t2.0\n";
    assert!(matches!(
        ingest_ratio_curves(unsorted),
        Err(TrafficError::Malformed { line: 3, .. })
    ));
    let duplicate = "cores\tspr\n13\t1.75\n13\t1.75\n";
    assert!(ingest_ratio_curves(duplicate).is_err());
}
