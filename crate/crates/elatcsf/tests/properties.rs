//! Property-based invariants: things that must hold for whole input families,
//! not just the frozen reference points.

use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use elatcsf::applications::{lighting_sensitivity_curve, LightingCondition};
use elatcsf::data::{filter_for_training, load_points, write_points_csv, CSV_HEADER};
use elatcsf::fitting;
use elatcsf::quadrature::gauss_legendre;
use elatcsf::summation;
use elatcsf::tcsf::FREQUENCY_SCALE_MIN_LUMINANCE;
use elatcsf::{
    DataPoint, Dataset, DatasetRole, Field, FieldShape, FitConfig, Geometry, Measure, ModelParams,
    QuadRule, QuadratureSpec, Stimulus,
};

fn fast_quad(nodes: usize) -> QuadratureSpec {
    QuadratureSpec {
        rule: QuadRule::GaussLegendre,
        nodes_radial: nodes,
        nodes_angular: nodes,
        adaptive: false,
        ..QuadratureSpec::default()
    }
}

/// Analytic integral of sum(c_k x^k) over [-1, 1]: odd powers vanish.
fn poly_integral(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k % 2 == 0 {
                2.0 * c / (k as f64 + 1.0)
            } else {
                0.0
            }
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// An n-point rule integrates every polynomial of degree <= 2n-1 exactly.
    #[test]
    fn gauss_legendre_is_exact_on_polynomials(
        n in 5usize..24,
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..10),
    ) {
        let (nodes, weights) = gauss_legendre(n);
        let estimate: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| {
                let fx: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * x.powi(k as i32))
                    .sum();
                w * fx
            })
            .sum();
        let exact = poly_integral(&coeffs);
        prop_assert!(
            (estimate - exact).abs() < 1e-11 * (1.0 + exact.abs()),
            "n = {n}: {estimate} vs {exact}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// A centered rectangle is mirror-symmetric, so swapping its sides
    /// cannot change the pooled sensitivity.
    #[test]
    fn foveal_rect_sensitivity_is_orientation_free(
        w in 0.5f64..40.0,
        h in 0.5f64..40.0,
        omega in 1.0f64..60.0,
        lum_log in -0.5f64..2.5,
    ) {
        let p = ModelParams::fitted();
        let quad = fast_quad(32);
        let luminance = 10f64.powf(lum_log);
        let s = |width: f64, height: f64| {
            summation::sensitivity(
                &p,
                &Stimulus {
                    field: Field {
                        geometry: Geometry::rect(width, height, 0.0),
                        luminance,
                    },
                    frequency: omega,
                },
                &quad,
            )
            .unwrap()
        };
        let (a, b) = (s(w, h), s(h, w));
        prop_assert!(((a - b) / a).abs() < 1e-12, "{a} vs {b}");
    }

    /// Growing the patch can only add positive energy: sensitivity is
    /// non-decreasing in radius at any center.
    #[test]
    fn disc_sensitivity_grows_with_radius(
        r1 in 0.1f64..3.0,
        factor in 1.05f64..4.0,
        ecc in 0.0f64..30.0,
        omega in 1.0f64..60.0,
        lum_log in -0.5f64..2.5,
    ) {
        let p = ModelParams::fitted();
        let quad = fast_quad(32);
        let luminance = 10f64.powf(lum_log);
        let s = |radius: f64| {
            summation::sensitivity(
                &p,
                &Stimulus {
                    field: Field {
                        geometry: Geometry::disc(radius, ecc),
                        luminance,
                    },
                    frequency: omega,
                },
                &quad,
            )
            .unwrap()
        };
        let (small, big) = (s(r1), s(r1 * factor));
        prop_assert!(big >= small * (1.0 - 1e-9), "S({r1}) = {small} > S({}) = {big}", r1 * factor);
    }
}

/// A data point that passes every schema rule, with shape and measure
/// chosen by the strategy.
fn arb_point() -> impl Strategy<Value = DataPoint> {
    let shape = prop_oneof![
        (0.05f64..200.0).prop_map(|area| FieldShape::Disc { area }),
        ((0.1f64..60.0), (0.1f64..60.0)).prop_map(|(w, h)| FieldShape::Rect {
            width: w,
            height: h
        }),
    ];
    (
        shape,
        0.0f64..3.0,     // spatial frequency, straddles the 1 cpd filter edge
        0.0f64..45.0,    // eccentricity
        0.01f64..1000.0, // luminance, straddles the 0.1 cd/m^2 filter floor
        0.01f64..1.0,    // contrast
        prop::bool::ANY, // sensitivity or CFF row
        1.0f64..500.0,   // sensitivity value
        8.0f64..190.0,   // CFF value
        0.5f64..80.0,    // flicker frequency for sensitivity rows
    )
        .prop_map(
            |(shape, spat, ecc, lum, contrast, is_cff, s_value, cff_value, freq)| {
                if is_cff {
                    DataPoint {
                        temp_freq: None,
                        spat_freq: spat,
                        eccentricity: ecc,
                        luminance: lum,
                        shape,
                        contrast,
                        measure: Measure::Cff,
                        value: cff_value,
                    }
                } else {
                    DataPoint {
                        temp_freq: Some(freq),
                        spat_freq: spat,
                        eccentricity: ecc,
                        luminance: lum,
                        shape,
                        contrast,
                        measure: Measure::Sensitivity,
                        value: s_value,
                    }
                }
            },
        )
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("elatcsf-prop-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Filtering is idempotent: a filtered dataset passes through unchanged.
    #[test]
    fn training_filter_is_idempotent(points in prop::collection::vec(arb_point(), 1..40)) {
        let keeps = points.iter().any(|p| {
            p.luminance >= FREQUENCY_SCALE_MIN_LUMINANCE && p.spat_freq <= 1.0
        });
        let ds = Dataset {
            name: "prop".into(),
            points,
            role: DatasetRole::TrainAndTest,
            fixed_scale: false,
            e_thr_override: None,
        };
        let Ok(once) = filter_for_training(&ds) else {
            prop_assert!(!keeps, "filter errored although points survive");
            return Ok(());
        };
        let twice = filter_for_training(&once.dataset).unwrap();
        prop_assert_eq!(twice.dropped_dim, 0);
        prop_assert_eq!(twice.dropped_spatial, 0);
        prop_assert_eq!(&twice.dataset.points, &once.dataset.points);
    }

    /// Writing and re-reading a CSV reproduces every field exactly; the
    /// writer uses shortest-round-trip float formatting.
    #[test]
    fn csv_round_trip_is_exact(points in prop::collection::vec(arb_point(), 1..30)) {
        let path = scratch("csv").join("round-trip.csv");
        write_points_csv(&path, &points).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        prop_assert!(text.starts_with(&CSV_HEADER.join(",")));
        let back = load_points(&path).unwrap();
        prop_assert_eq!(back, points);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The loss is a sum over named datasets: feeding them in any order
    /// must give bitwise-identical results.
    #[test]
    fn loss_ignores_dataset_order(
        seed_points in prop::collection::vec(arb_point(), 4..8),
        flip in prop::bool::ANY,
    ) {
        // Keep only rows the model can evaluate.
        let usable: Vec<DataPoint> = seed_points
            .into_iter()
            .filter(|p| p.luminance >= FREQUENCY_SCALE_MIN_LUMINANCE)
            .collect();
        prop_assume!(usable.len() >= 2);
        let half = usable.len() / 2;
        let mk = |name: &str, pts: &[DataPoint]| Dataset {
            name: name.into(),
            points: pts.to_vec(),
            role: DatasetRole::TrainAndTest,
            fixed_scale: false,
            e_thr_override: None,
        };
        let a = mk("alpha", &usable[..half]);
        let b = mk("beta", &usable[half..]);
        let cfg = FitConfig {
            quadrature: fast_quad(16),
            ..FitConfig::default()
        };
        let scales: BTreeMap<String, f64> =
            [("alpha".to_string(), 1.3), ("beta".to_string(), 0.8)].into();
        let forward = fitting::loss(&ModelParams::fitted(), &[a.clone(), b.clone()], &scales, &cfg);
        let reversed = fitting::loss(&ModelParams::fitted(), &[b, a], &scales, &cfg);
        let ordered = if flip { (reversed, forward) } else { (forward, reversed) };
        match ordered {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "order changed the outcome: {other:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// A lighting curve normalized against its own condition peaks at
    /// exactly 1 and stays in (0, 1].
    #[test]
    fn self_normalized_lighting_curve_peaks_at_one(
        area in 10.0f64..2000.0,
        ecc in 0.0f64..25.0,
        lum_log in 0.0f64..3.0,
    ) {
        let p = ModelParams::fitted();
        let condition = LightingCondition {
            area_deg2: area,
            eccentricity_deg: ecc,
            luminance_cdm2: 10f64.powf(lum_log),
        };
        let freqs: Vec<f64> = (1..=24).map(|i| 2.0 * i as f64).collect();
        let curve = lighting_sensitivity_curve(
            &p,
            &condition,
            &condition,
            &freqs,
            &fast_quad(32),
        )
        .unwrap();
        let max = curve.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!((max - 1.0).abs() < 1e-12);
        prop_assert!(curve.iter().all(|&v| v > 0.0 && v <= 1.0));
    }
}

/// The shipped preset files must stay in lockstep with the built-in
/// constants and schemas.
#[test]
fn presets_match_builtins() {
    let presets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let loaded = ModelParams::load_toml(&presets.join("fitted.toml")).unwrap();
    assert_eq!(loaded, ModelParams::fitted());

    let headsets = elatcsf::applications::load_headsets(&presets.join("headsets.toml")).unwrap();
    assert!(headsets.len() >= 2);

    let text = std::fs::read_to_string(presets.join("display-27in.toml")).unwrap();
    let display: elatcsf::DisplaySpec = toml::from_str(&text).unwrap();
    display.validate().unwrap();
    let (w, h) = display.field_of_view().unwrap();
    assert!(w > h && w < 60.0);
}
