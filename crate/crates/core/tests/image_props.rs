mod common;

use amdreg::grid::Grid;
use amdreg::image::*;
use amdreg::pyramid::build_pyramid;
use proptest::prelude::*;

proptest! {
    #[test]
    fn quantize_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, l in 1usize..20) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize_membership(lo, l) <= quantize_membership(hi, l));
        prop_assert!(quantize_membership(hi, l) <= l);
    }

    #[test]
    fn quantize_hits_its_own_levels(l in 1usize..40) {
        let levels = AlphaLevels::equally_spaced(l).unwrap();
        for i in 0..=l {
            prop_assert_eq!(quantize_membership(i as f64 / l as f64, l), i);
            prop_assert_eq!(levels.quantize(levels.alpha(i)), i);
        }
    }

    #[test]
    fn alpha_cuts_are_nested(seed in any::<u64>(), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
        let img = common::random_image(Grid::unit([7, 5]).unwrap(), seed);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(alpha_cut(&img, hi).is_subset_of(&alpha_cut(&img, lo)));
    }

    #[test]
    fn complement_involution_and_strict_cut(seed in any::<u64>(), a in 0.01f64..=1.0) {
        let img = common::random_image(Grid::unit([6, 6]).unwrap(), seed);
        let c = complement(&img);
        let cc = complement(&c);
        for (x, y) in cc.values().iter().zip(img.values()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
        let cut = alpha_cut(&c, a);
        for (i, &v) in img.values().iter().enumerate() {
            prop_assert_eq!(cut.get(i), 1.0 - v >= a);
        }
    }

    #[test]
    fn normalization_at_zero_percentile_is_idempotent(seed in any::<u64>()) {
        let img = common::random_image(Grid::unit([9, 4]).unwrap(), seed);
        let once = normalize_percentile(&img, 0.0).unwrap().image;
        let twice = normalize_percentile(&once, 0.0).unwrap().image;
        prop_assert_eq!(once.values(), twice.values());
        prop_assert!(once.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn pyramid_shapes(w in 3usize..40, h in 3usize..40, f in 1usize..4, sx in 0.5f64..2.0) {
        let g = Grid::new([w, h], [sx, 1.0]).unwrap();
        let img = FuzzyImage::filled(g, 0.5);
        let levels = build_pyramid(&img, &BinaryMask::full(g), &WeightMap::ones(g), &[f, 1], &[1.0, 0.0]).unwrap();
        let coarse = levels[0].image.grid();
        prop_assert_eq!(coarse.dims(), [w.div_ceil(f), h.div_ceil(f)]);
        prop_assert_eq!(coarse.spacing(), [sx * f as f64, f as f64]);
        prop_assert_eq!(levels[1].image.values(), img.values());
    }
}

#[test]
fn noise_mean_over_a_million_draws() {
    let n = gaussian_noise(1_000_000, 0.1, 42);
    let mean = n.iter().sum::<f64>() / n.len() as f64;
    assert!(mean.abs() < 1e-3, "{mean}");
    let g = Grid::unit([8, 8]).unwrap();
    let img = common::random_image(g, 1);
    assert_eq!(add_gaussian_noise(&img, 0.0, 9).unwrap(), img);
    assert_eq!(add_gaussian_noise(&img, 0.2, 9).unwrap(), add_gaussian_noise(&img, 0.2, 9).unwrap());
}
