mod common;

use amdreg::evaluation::*;
use amdreg::grid::Grid;
use amdreg::image::BinaryMask;
use amdreg::registration::RegistrationConfig;
use amdreg::transform::*;
use proptest::prelude::*;
use rand::Rng;

fn points(r: &mut impl Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n).map(|_| [r.random_range(-20.0..20.0), r.random_range(-20.0..20.0), r.random_range(-20.0..20.0)]).collect()
}

#[test]
fn landmark_errors_match_direct_sums() {
    let mut r = common::rng(1);
    for _ in 0..20 {
        let (lr, lf) = (points(&mut r, 12), points(&mut r, 12));
        let t = AffineTransform::new(
            [[1.1, 0.1, 0.0], [0.0, 0.9, 0.2], [-0.1, 0.0, 1.0]],
            [1.0, -2.0, 0.5],
            [r.random_range(0.0..5.0), 0.0, 0.0],
        );
        let mut ae = 0.0;
        let mut ame = 0.0;
        for i in 0..12 {
            let m = t.apply(&lf[i]);
            ae += ((lr[i][0] - m[0]).powi(2) + (lr[i][1] - m[1]).powi(2) + (lr[i][2] - m[2]).powi(2)).sqrt();
            let nearest = lf
                .iter()
                .map(|f| {
                    let m = t.apply(f);
                    ((lr[i][0] - m[0]).powi(2) + (lr[i][1] - m[1]).powi(2) + (lr[i][2] - m[2]).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            ame += nearest;
        }
        assert!((average_error(&t, &lr, &lf).unwrap() - ae / 12.0).abs() < 1e-12);
        assert!((average_minimal_error(&t, &lr, &lf).unwrap() - ame / 12.0).abs() < 1e-12);
        assert!(average_minimal_error(&t, &lr, &lf).unwrap() <= average_error(&t, &lr, &lf).unwrap() + 1e-12);
    }
}

#[test]
fn parity_classes_split_the_outer_error() {
    let l = vec![[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]];
    let par = vec![Parity::Odd, Parity::Even, Parity::Odd, Parity::Even];
    let set = LandmarkSet::with_parity(l.clone(), par).unwrap();
    let t = AffineTransform::translation_only([0.0, 3.0]);
    let direct = ame_outer(&t, &[l[0], l[2]], &[l[0], l[2]], &[l[1], l[3]], &[l[1], l[3]]).unwrap();
    assert_eq!(ame_outer_sets(&t, &set, &set).unwrap(), direct);
    assert_eq!(direct, 3.0);
    assert!(ame_outer_sets(&t, &LandmarkSet::new(l.clone()), &LandmarkSet::new(l)).is_err());
}

proptest! {
    #[test]
    fn ae_is_invariant_under_a_common_rigid_motion(seed in any::<u64>(), ang in -3.0f64..3.0, tx in -9.0f64..9.0) {
        let mut r = common::rng(seed);
        let lr: Vec<[f64; 2]> = (0..8).map(|_| [r.random_range(0.0..30.0), r.random_range(0.0..30.0)]).collect();
        let lf: Vec<[f64; 2]> = (0..8).map(|_| [r.random_range(0.0..30.0), r.random_range(0.0..30.0)]).collect();
        let t = AffineTransform::translation_only([1.0, -2.0]);
        let g = RigidTransform::new(&[ang], [tx, 0.5], [3.0, 4.0]).unwrap().to_affine();
        let moved: Vec<[f64; 2]> = lr.iter().map(|p| g.apply(p)).collect();
        let a = average_error(&t, &lr, &lf).unwrap();
        let b = average_error(&g.compose(&t), &moved, &lf).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn sym_sr_never_exceeds_sr(errs in proptest::collection::vec((0.0f64..3.0, 0.0f64..3.0), 1..60), thr in 0.0f64..3.0) {
        let s = success_metrics(&errs, thr).unwrap();
        prop_assert!(s.sym_sr <= s.sr);
        let n = errs.len() as f64;
        prop_assert_eq!(s.sr, errs.iter().filter(|e| e.0 <= thr).count() as f64 / n);
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded(s1 in any::<u64>(), s2 in any::<u64>(), d in 0.0f64..1.0) {
        let g = Grid::unit([7, 6]).unwrap();
        let (a, b) = (common::random_mask(g, d, s1), common::random_mask(g, d, s2));
        let j = jaccard(&a, &b).unwrap();
        prop_assert_eq!(j, jaccard(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn cumulative_histogram_is_monotone(errs in proptest::collection::vec(0.0f64..4.0, 1..40)) {
        let th: Vec<f64> = (0..=20).map(|k| k as f64 * 0.2).collect();
        let h = cumulative_histogram(&errs, &th);
        prop_assert!(h.windows(2).all(|w| w[1].1 >= w[0].1));
        prop_assert_eq!(h.last().unwrap().1, 1.0);
    }
}

#[test]
fn inverse_pair_has_no_consistency_error() {
    let t = AffineTransform::new([[1.2, 0.3], [-0.1, 0.8]], [4.0, -1.0], [10.0, 10.0]);
    let pts = Grid::unit([20, 20]).unwrap().points();
    assert!(inverse_consistency_error(&t, &t.inverse().unwrap(), &pts).unwrap() < 1e-12);
    let off = AffineTransform::translation_only([0.5, 0.0]).compose(&t.inverse().unwrap());
    assert!((inverse_consistency_error(&t, &off, &pts).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn jaccard_examples() {
    let g = Grid::unit([4, 1]).unwrap();
    let a = BinaryMask::new(g, vec![true, true, false, false]).unwrap();
    let b = BinaryMask::new(g, vec![false, true, true, false]).unwrap();
    assert_eq!(jaccard(&a, &b).unwrap(), 1.0 / 3.0);
    assert_eq!(jaccard(&BinaryMask::empty(g), &BinaryMask::empty(g)).unwrap(), 1.0);
}

#[test]
fn synthetic_reports_are_reproducible() {
    let g = Grid::unit([32, 32]).unwrap();
    let cfg = SyntheticConfig {
        trials: 3,
        symmetric: true,
        ice_stride: 4,
        seed: 5,
        registration: RegistrationConfig {
            factors: vec![2, 1],
            sigmas: vec![1.0, 0.0],
            ..Default::default()
        },
        ..Default::default()
    };
    let base = smooth_phantom(g);
    let a = run_synthetic_experiment(&base, &cfg).unwrap();
    let b = run_synthetic_experiment(&base, &cfg).unwrap();
    assert_eq!(a.summary_json(), b.summary_json());
    assert_eq!(a.trials_csv(), b.trials_csv());
    assert!(a.sym_sr.unwrap() <= a.sr);
    assert_eq!(a.trials.len(), 3);
}
