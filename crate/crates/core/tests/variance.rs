mod common;

use common::*;
use memfuse::matrix::Matrix;
use memfuse::model::*;
use memfuse::synth::{generate, SynthSpec};
use memfuse::variance::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn response(p: usize, v: usize, y: f64) -> ViewerResponse {
    ViewerResponse {
        participant_id: ParticipantId(format!("p{p}")),
        video_id: VideoId(format!("v{v}")),
        induced: PadTriple::new(y, -y / 2.0, 0.1).unwrap(),
        memories: vec![MemoryRecord {
            text: "a day at the lake".into(),
            affect: PadTriple::new(y / 2.0, 0.2, -0.1).unwrap(),
        }],
        context: ViewerContext {
            age: 20 + p as u32,
            gender: if p.is_multiple_of(2) { "female" } else { "male" }.into(),
            nationality: ["DE", "IN", "UK"][p % 3].into(),
            hexaco: [3.0, 2.5, 4.0, 3.5, 3.0, 4.5],
            mood: PadTriple::new(0.1 * p as f64, 0.0, -0.2).unwrap(),
        },
    }
}

fn toy() -> Dataset {
    let mut rs = Vec::new();
    for p in 0..4 {
        for v in 1..=3 {
            rs.push(response(p, v, ((p * 3 + v) as f64 * 0.7).sin()));
        }
    }
    Dataset::new(rs).unwrap()
}

#[test]
fn video_block_columns() {
    let d = build_design(&toy(), &BlockSpec::parse("Vid").unwrap()).unwrap();
    assert_eq!(d.cols(), 3 - 1 + 1);
    assert_eq!(d.names, ["(intercept)", "vid[v2]", "vid[v3]"]);
    assert_eq!(d.x.row(0), [1.0, 0.0, 0.0]);
    assert_eq!(d.x.row(2), [1.0, 0.0, 1.0]);
}

#[test]
fn full_design_layout() {
    let d = build_design(&toy(), &BlockSpec::parse("(Vid+De+Pe+Mo+Ma)").unwrap()).unwrap();
    // intercept + 2 vid + age + 1 gender + 2 nationality + 6 hexaco + 3 mood + 3 ma
    assert_eq!(d.cols(), 1 + 2 + 4 + 6 + 3 + 3);
    let age = d.column_index("age").unwrap();
    let mean: f64 = d.x.col(age).iter().sum::<f64>() / d.rows() as f64;
    assert!(mean.abs() < 1e-12);
    assert!(d.column_index("ma[p]").is_some());
    assert!(d.column_index("gender[male]").is_some());
    assert!(BlockSpec::parse("Vid+Xy").is_err());

    let no_memory = Dataset::new(
        toy()
            .responses()
            .iter()
            .cloned()
            .map(|mut r| {
                r.memories.clear();
                r
            })
            .collect(),
    )
    .unwrap();
    assert!(build_design(&no_memory, &BlockSpec::new([Block::Ma])).is_err());
}

#[test]
fn profile_matches_dense_likelihood() {
    let d = random_intercept_data(12, 4, 0.7, 1.0, false, 3);
    for (i, &lambda) in [0.0, 0.05, 0.7, 3.0, 40.0].iter().enumerate() {
        for (method, reml) in [(Method::Reml, true), (Method::Ml, false)] {
            let ours = profile_loglik(&d.y, &d.design, &d.groups, lambda, method).unwrap();
            let dense = dense_loglik(&d.y, &d.design.x, &d.groups, lambda, reml);
            assert!((ours - dense).abs() < 1e-8, "#{i} {method:?}: {ours} vs {dense}");
        }
    }
    // intercept-only model
    let x1 = DesignMatrix {
        names: vec!["(intercept)".into()],
        blocks: Vec::new(),
        x: Matrix::new(d.y.len(), 1, vec![1.0; d.y.len()]).unwrap(),
    };
    let fit = fit_lmm(&d.y, &x1, &d.groups, Method::Reml).unwrap();
    let dense = dense_loglik(&d.y, &x1.x, &d.groups, fit.lambda, true);
    assert!((fit.loglik - dense).abs() < 1e-8);
}

#[test]
fn optimum_beats_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for seed in 0..3 {
        let d = random_intercept_data(30, 5, 0.5, 1.0, false, seed);
        for method in [Method::Reml, Method::Ml] {
            let fit = fit_lmm(&d.y, &d.design, &d.groups, method).unwrap();
            for _ in 0..50 {
                let lambda = 10f64.powf(rng.random_range(-5.0..3.0));
                let ll = profile_loglik(&d.y, &d.design, &d.groups, lambda, method).unwrap();
                assert!(fit.loglik >= ll - 1e-9, "{method:?} λ={lambda}: {ll} > {}", fit.loglik);
            }
            let at_zero = profile_loglik(&d.y, &d.design, &d.groups, 0.0, method).unwrap();
            assert!(fit.loglik >= at_zero - 1e-9);
        }
    }
}

#[test]
fn no_group_variance_gives_ols() {
    for seed in 0..5 {
        let d = random_intercept_data(40, 5, 0.0, 1.0, true, seed);
        let beta = ols(&d.design.x, &d.y);
        for method in [Method::Reml, Method::Ml] {
            let fit = fit_lmm(&d.y, &d.design, &d.groups, method).unwrap();
            assert!(fit.sigma2_u <= 1e-3 * fit.sigma2_e, "{fit:?}");
            for (a, b) in fit.fixed_coefs.iter().zip(&beta) {
                assert!((a - b).abs() < 1e-6, "{:?} vs {beta:?}", fit.fixed_coefs);
            }
        }
        // with σ²_u = 0 and ML, marginal R² is the OLS R²
        let fit = fit_lmm(&d.y, &d.design, &d.groups, Method::Ml).unwrap();
        let pred: Vec<f64> = d
            .design
            .x
            .iter_rows()
            .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum())
            .collect();
        assert!((fit.marginal_r2 - r2(&d.y, &pred)).abs() < 1e-6);
    }
}

#[test]
fn marginal_r2_edge_cases() {
    let d = random_intercept_data(20, 5, 1.0, 1.0, false, 1);
    let mut fit = fit_lmm(&d.y, &d.design, &d.groups, Method::Reml).unwrap();
    assert!((marginal_r2(&fit, &d.design).unwrap() - fit.marginal_r2).abs() < 1e-15);
    fit.fixed_coefs = vec![0.0; fit.fixed_coefs.len()];
    assert_eq!(marginal_r2(&fit, &d.design).unwrap(), 0.0);
    let bad = DesignMatrix {
        names: vec!["other".into()],
        blocks: Vec::new(),
        x: Matrix::new(d.y.len(), 1, vec![1.0; d.y.len()]).unwrap(),
    };
    assert!(marginal_r2(&fit, &bad).is_err());
}

#[test]
fn nested_comparison() {
    let d = random_intercept_data(30, 5, 0.5, 1.0, false, 2);
    let ml = fit_lmm(&d.y, &d.design, &d.groups, Method::Ml).unwrap();
    let same = compare_nested(&ml, &ml, &d.design, &d.design).unwrap();
    assert_eq!((same.delta_r2m, same.lr, same.df, same.p_value), (0.0, 0.0, 0, 1.0));

    let small = DesignMatrix {
        names: vec!["(intercept)".into()],
        blocks: Vec::new(),
        x: Matrix::new(d.y.len(), 1, vec![1.0; d.y.len()]).unwrap(),
    };
    let ml_small = fit_lmm(&d.y, &small, &d.groups, Method::Ml).unwrap();
    let c = compare_nested(&ml_small, &ml, &small, &d.design).unwrap();
    assert_eq!(c.df, 2);
    assert!(c.lr > 0.0 && c.p_value < 0.001, "{c:?}");
    // not nested the other way round
    assert!(compare_nested(&ml, &ml_small, &d.design, &small).is_err());
    let reml = fit_lmm(&d.y, &d.design, &d.groups, Method::Reml).unwrap();
    assert!(compare_nested(&ml_small, &reml, &small, &d.design).is_err());
}

#[test]
fn strong_memory_affect_is_significant() {
    let spec = SynthSpec {
        n_participants: 120,
        audio_dim: 4,
        frame_dim: 4,
        seed: 7,
        ..Default::default()
    };
    let ds = memory_subset(&generate(&spec).unwrap().dataset);
    let r = analyze(&ds, Method::Reml).unwrap();
    let p = r.row(Dim::P).unwrap();
    assert!(p.tests[1].p_value < 0.001, "{p:?}");
    assert!(p.delta_r2m[2] > 0.1);
    assert_eq!(r.models.len(), 3);
    for row in &r.rows {
        assert!(row.r2m.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{row:?}");
    }
    let table = render_variance_table(&r);
    assert!(table.contains("<.001"));
}

#[test]
fn singleton_groups_pin_group_variance() {
    let d = random_intercept_data(40, 1, 1.0, 1.0, false, 4);
    let fit = fit_lmm(&d.y, &d.design, &d.groups, Method::Reml).unwrap();
    assert_eq!(fit.sigma2_u, 0.0);
    assert_eq!(fit.lambda, 0.0);
}

#[test]
fn dependent_columns_are_dropped() {
    let d = random_intercept_data(20, 5, 1.0, 1.0, false, 5);
    let rows: Vec<Vec<f64>> = d
        .design
        .x
        .iter_rows()
        .map(|r| vec![r[0], r[1], r[2], 2.0 * r[1] - r[2]])
        .collect();
    let wide = DesignMatrix {
        names: vec!["(intercept)".into(), "x1".into(), "x2".into(), "combo".into()],
        blocks: Vec::new(),
        x: Matrix::from_rows(&rows).unwrap(),
    };
    let a = fit_lmm(&d.y, &d.design, &d.groups, Method::Reml).unwrap();
    let b = fit_lmm(&d.y, &wide, &d.groups, Method::Reml).unwrap();
    assert_eq!(b.dropped, ["combo"]);
    assert_eq!(b.names, a.names);
    for (x, y) in a.fixed_coefs.iter().zip(&b.fixed_coefs) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn too_few_groups_or_rows() {
    let d = random_intercept_data(1, 10, 1.0, 1.0, false, 6);
    assert!(fit_lmm(&d.y, &d.design, &d.groups, Method::Reml).is_err());
    let d = random_intercept_data(3, 1, 1.0, 1.0, false, 6);
    assert!(fit_lmm(&d.y, &d.design, &d.groups, Method::Reml).is_err());
}
