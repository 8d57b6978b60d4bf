use proptest::prelude::*;
use stoquant::functional::{lsi_marginal_check, TestFunctionFamily};
use stoquant::harness::{emit_report, preset_config, ExperimentConfig, Preset, ReportFormat, RunManifest};
use stoquant::numerics::derive_seed;
use stoquant::potentials::PotentialSpec;
use stoquant::schrodinger::{ground_state, ZGrid};
use stoquant::spde::{LatticeField, LatticeGeometry, Boundary, NormKind, weighted_norm, WeightSpec};

fn preset() -> impl Strategy<Value = Preset> {
    prop_oneof![
        Just(Preset::FreeField),
        Just(Preset::AbsNorm),
        Just(Preset::ExpPhi),
        Just(Preset::Trig)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_json_round_trips(p in preset(), seed in any::<u64>(), dt in 1e-4f64..1e-2, r in 0.05f64..2.0) {
        let mut c = preset_config(p);
        c.seed = seed;
        c.spde.dt = dt;
        c.weight = WeightSpec::with_rate(r).unwrap();
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.hash().unwrap(), c.hash().unwrap());
        prop_assert_eq!(back, c);
    }

    #[test]
    fn hash_ignores_output_location(p in preset(), name in "[a-z]{1,12}") {
        let c = preset_config(p);
        let moved = ExperimentConfig { output_dir: Some(name.into()), ..c.clone() };
        prop_assert_eq!(moved.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn seed_streams_are_pairwise_distinct(base in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        let labels = ["coupling", "invariance-noise", "gibbs-replica", "heat-lsi", "acf-start"];
        for a in labels {
            for b in labels {
                if (a, i) != (b, j) {
                    prop_assert_ne!(derive_seed(base, a, i), derive_seed(base, b, j));
                }
            }
        }
    }

    #[test]
    fn h_norm_is_a_norm(vals in prop::collection::vec(-5.0f64..5.0, 40), c in -3.0f64..3.0) {
        let g = LatticeGeometry::new(2.0, 40, Boundary::Neumann).unwrap();
        let w = WeightSpec::with_rate(0.5).unwrap();
        let x = LatticeField::new(g, vals.clone()).unwrap();
        let y = LatticeField::new(g, vals.iter().map(|v| c * v).collect()).unwrap();
        for kind in [NormKind::H, NormKind::E] {
            let nx = weighted_norm(&x, &w, kind);
            prop_assert!((weighted_norm(&y, &w, kind) - c.abs() * nx).abs() <= 1e-12 * (1.0 + nx));
        }
    }
}

#[test]
fn marginal_lsi_holds_across_masses() {
    let grid = ZGrid::new(10.0, 1024).unwrap();
    for m in [0.5, 1.0, 1.5, 2.0] {
        let spec = PotentialSpec::free_field(m);
        let r = lsi_marginal_check(&ground_state(&spec, &grid).unwrap(), spec.k1, &TestFunctionFamily::standard()).unwrap();
        assert!(r.pass, "m = {m}: {}", r.min_slack);
    }
}

#[test]
fn text_report_of_an_empty_manifest_is_header_only() {
    let m = RunManifest {
        name: "empty".into(),
        tool_version: "0".into(),
        config_hash: "00".into(),
        seed: 0,
        checks: vec![],
        all_pass: true,
        wall_clock_s: 0.0,
    };
    let text = emit_report(&m, ReportFormat::Text).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#') || l.starts_with("check")));
    assert_eq!(RunManifest::from_json(&emit_report(&m, ReportFormat::Json).unwrap()).unwrap(), m);
}
