//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.
//!
//! Run a subset with `cargo test -p amdreg --test acceptance -- 3 8`.

mod common;

use std::time::{Duration, Instant};

use amdreg::amd::*;
use amdreg::baseline::{mi, pcc, ssd};
use amdreg::dt::{discrete_gradient, euclidean_dt, squared_euclidean_dt};
use amdreg::evaluation::*;
use amdreg::grid::Grid;
use amdreg::image::*;
use amdreg::optimizer::*;
use amdreg::pyramid::{build_pyramid, gaussian_smooth};
use amdreg::registration::{Measure, RegistrationConfig};
use amdreg::stack::*;
use amdreg::transform::*;
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- 1

/// Whether the EDT of one random mask equals the oracle bit for bit, and the EDT time.
fn random_dt_case<const D: usize>(r: &mut impl Rng, max_side: usize) -> (bool, Duration) {
    let mut dims = [1; D];
    let mut spacing = [1.0; D];
    for k in 0..D {
        dims[k] = r.random_range(1..=max_side);
        spacing[k] = r.random_range(0.2..3.0);
    }
    let g = Grid::new(dims, spacing).unwrap();
    let m = common::random_mask(g, r.random_range(0.0..0.3), r.random());
    let start = Instant::now();
    let fast = squared_euclidean_dt(&m);
    let dt = euclidean_dt(&m, f64::INFINITY);
    let took = start.elapsed();
    let ok = fast == common::brute_sq_dt(&m) && dt.distances().iter().zip(&fast).all(|(d, s)| *d == s.sqrt());
    (ok, took)
}

fn dt_exactness() -> Verdict {
    let mut r = common::rng(1001);
    let mut time = Duration::ZERO;
    let mut bad = 0;
    for i in 0..200 {
        let (ok, took) = match i % 3 {
            0 => random_dt_case::<1>(&mut r, 16),
            1 => random_dt_case::<2>(&mut r, 16),
            _ => random_dt_case::<3>(&mut r, 16),
        };
        bad += !ok as usize;
        time += took;
    }
    verdict(
        bad == 0 && time < Duration::from_secs(10),
        format!("{} of 200 masks differ from the brute-force oracle; EDT time {:.3} s", bad, time.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- 2

fn stack_correctness() -> Verdict {
    let levels = AlphaLevels::equally_spaced(7).unwrap();
    let a = levels.levels();
    let mut worst = 0.0f64;
    let mut identity_broken = 0;
    for seed in 0..50 {
        let g = Grid::new([8, 8], [1.0, 0.5 + (seed % 5) as f64 * 0.25]).unwrap();
        let img = common::random_image(g, seed);
        let mask = common::random_mask(g, 0.9, seed + 500);
        let d_max = 5.0;
        let stack = build_alpha_dt(&img, &mask, &levels, d_max).unwrap();
        let mut acc = vec![0.0; g.len()];
        for h in 0..=7 {
            if h > 0 {
                let cut = alpha_cut(&img, a[h - 1]).intersect(&mask).unwrap();
                let dt = common::brute_dt(&cut, d_max);
                let step = a[h - 1] - if h > 1 { a[h - 2] } else { 0.0 };
                acc.iter_mut().zip(&dt).for_each(|(s, d)| *s += step * d);
            }
            for i in 0..g.len() {
                worst = worst.max((stack.distance(h, i) - acc[i]).abs());
            }
        }
        let out = build_alpha_dt_complement(&img, &mask, &levels, d_max).unwrap();
        let bd = build_alpha_dt_bidirectional(&img, &mask, &levels, d_max).unwrap();
        for i in 0..=7 {
            for v in 0..g.len() {
                if bd.distance(i, v) != stack.distance(i, v) + out.distance(7 - i, v) {
                    identity_broken += 1;
                }
            }
        }
    }
    verdict(
        worst <= 1e-12 && identity_broken == 0,
        format!("max deviation from per-level oracle {worst:.1e}; {identity_broken} bidirectional mismatches"),
    )
}

// ---------------------------------------------------------------- 3

/// Sum of a few random Gaussian blobs, rescaled to `[0, 1]`.
fn blob_image<const D: usize>(g: Grid<D>, r: &mut impl Rng) -> FuzzyImage<D> {
    let size = g.size();
    let scale = size.iter().cloned().fold(f64::INFINITY, f64::min);
    let blobs: Vec<([f64; D], f64, f64)> = (0..3)
        .map(|_| {
            let mut c = [0.0; D];
            for k in 0..D {
                c[k] = r.random_range(0.2..0.8) * size[k];
            }
            (c, r.random_range(0.15..0.35) * scale, r.random_range(0.3..1.0))
        })
        .collect();
    let img = FuzzyImage::from_fn(g, |p| {
        blobs
            .iter()
            .map(|(c, s, a)| a * (-(0..D).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>() / (2.0 * s * s)).exp())
            .sum::<f64>()
    });
    normalize_percentile(&img, 0.0).unwrap().image
}

/// Relative error `‖∇ − ∇_fd‖ / ‖∇_fd‖` on one random instance, over the
/// samples whose lookups stay clear of level edges under every perturbation.
fn gradient_instance<const D: usize>(n: usize, seed: u64) -> f64 {
    let mut r = common::rng(seed);
    let g = Grid::unit([n; D]).unwrap();
    let levels = AlphaLevels::equally_spaced(7).unwrap();
    let a = AmdImage::plain(&blob_image(g, &mut r), &levels, 1000.0, true).unwrap();
    let b = AmdImage::plain(&blob_image(g, &mut r), &levels, 1000.0, true).unwrap();
    let angles: Vec<f64> = (0..if D == 2 { 1 } else { 3 }).map(|_| r.random_range(-0.2..0.2)).collect();
    let mut tr = [0.0; D];
    tr.iter_mut().for_each(|v| *v = r.random_range(-2.0..2.0));
    let t = RigidTransform::new(&angles, tr, g.center()).unwrap();
    let h = 1e-4;
    let p = t.params();
    let mut fwd = vec![t.clone()];
    let mut rev = vec![t.inverse().unwrap()];
    for i in 0..p.len() {
        for s in [-1.0, 1.0] {
            let mut q = p.clone();
            q[i] += s * h;
            let tq = t.with_params(&q).unwrap();
            rev.push(tq.inverse().unwrap());
            fwd.push(tq);
        }
    }
    let sa = stable_samples(&a, &b, &fwd, &SampleSet::full(&a), 0.01, 0.0);
    let sb = stable_samples(&b, &a, &rev, &SampleSet::full(&b), 0.01, 0.0);
    let eval = |m: &RigidTransform<D>| symmetric_amd(&a, &b, m, &sa, &sb, Interpolation::Linear).unwrap();
    let analytic = eval(&t).grad;
    let fd: Vec<f64> = (0..p.len())
        .map(|i| {
            let (mut qp, mut qm) = (p.clone(), p.clone());
            qp[i] += h;
            qm[i] -= h;
            (eval(&t.with_params(&qp).unwrap()).d - eval(&t.with_params(&qm).unwrap()).d) / (2.0 * h)
        })
        .collect();
    let diff = analytic.iter().zip(&fd).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    diff / fd.iter().map(|y| y * y).sum::<f64>().sqrt()
}

/// Pass fraction, median and 90th percentile. An instance without stable
/// samples (NaN) counts as a failure and sorts last.
fn summarize_errors(mut e: Vec<f64>) -> (f64, f64, f64) {
    let pass = e.iter().filter(|&&x| x <= 2e-3).count() as f64 / e.len() as f64;
    e.iter_mut().filter(|x| x.is_nan()).for_each(|x| *x = f64::INFINITY);
    e.sort_by(f64::total_cmp);
    (pass, e[e.len() / 2], e[e.len() * 9 / 10])
}

fn gradient_fidelity() -> Verdict {
    let start = Instant::now();
    let e2: Vec<f64> = (0..500).map(|s| gradient_instance::<2>(64, s)).collect();
    let e3: Vec<f64> = (0..100).map(|s| gradient_instance::<3>(24, 10_000 + s)).collect();
    let took = start.elapsed();
    let (p2, m2, q2) = summarize_errors(e2);
    let (p3, m3, q3) = summarize_errors(e3);
    verdict(
        p2 >= 0.95 && p3 >= 0.90 && took < Duration::from_secs(60),
        format!(
            "2-D {:.1}% within 2e-3 (median {m2:.1e}, p90 {q2:.1e}); 3-D {:.1}% (median {m3:.1e}, p90 {q3:.1e}); {:.1} s",
            100.0 * p2,
            100.0 * p3,
            took.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 4

fn symmetry() -> Verdict {
    let mut r = common::rng(4004);
    let levels = AlphaLevels::equally_spaced(7).unwrap();
    let mut worst = 0.0f64;
    let mut worst_ice = 0.0f64;
    for i in 0..100u64 {
        let g = Grid::new([14, 12], [1.0, r.random_range(0.6..1.6)]).unwrap();
        let image = |r: &mut common::Rng64, s| {
            let mask = common::random_mask(g, 0.95, s);
            let w = WeightMap::new(g, (0..g.len()).map(|_| r.random_range(0.2..1.0)).collect()).unwrap();
            AmdImage::new(&common::smooth_random_image(g, 1.5, s), &mask, &w, &levels, 6.0, i % 2 == 0).unwrap()
        };
        let a = image(&mut r, 2 * i);
        let b = image(&mut r, 2 * i + 1);
        let mut m = [[0.0; 2]; 2];
        for (p, row) in m.iter_mut().enumerate() {
            for (q, v) in row.iter_mut().enumerate() {
                *v = if p == q { 1.0 } else { 0.0 } + r.random_range(-0.1..0.1);
            }
        }
        let t = AffineTransform::new(m, [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)], g.center());
        let inv = t.inverse().unwrap();
        let (fa, fb) = (SampleSet::full(&a), SampleSet::full(&b));
        let x = symmetric_amd(&a, &b, &t, &fa, &fb, Interpolation::Linear).unwrap().d;
        let y = symmetric_amd(&b, &a, &inv, &fb, &fa, Interpolation::Linear).unwrap().d;
        worst = worst.max(common::rel_err(x, y));
        worst_ice = worst_ice.max(inverse_consistency_error(&t, &inv, &g.points()).unwrap());
    }
    verdict(
        worst <= 1e-12 && worst_ice < 1e-10,
        format!("max relative asymmetry {worst:.1e}; max ICE of inverse pairs {worst_ice:.1e}"),
    )
}

// ---------------------------------------------------------------- 5-7

fn synthetic(class: TransformClass, trials: usize, fraction: f64, measure: Measure) -> (EvaluationReport, Duration) {
    let base = smooth_phantom(Grid::unit([64, 64]).unwrap());
    let cfg = SyntheticConfig {
        class,
        trials,
        noise_sigma: 0.1,
        model: ModelKind::Affine,
        registration: RegistrationConfig {
            sampling_fraction: fraction,
            measure,
            ..Default::default()
        },
        seed: 1,
        ..Default::default()
    };
    let start = Instant::now();
    let report = run_synthetic_experiment(&base, &cfg).unwrap();
    (report, start.elapsed())
}

fn synthetic_recovery(sr: &mut Option<f64>) -> Verdict {
    let (rep, took) = synthetic(TransformClass::Small, 50, 1.0, Measure::AlphaAmd);
    *sr = Some(rep.sr);
    let ae = rep.mean_success_ae.unwrap_or(f64::INFINITY);
    verdict(
        rep.sr >= 0.9 && ae <= 0.5 && took < Duration::from_secs(300),
        format!("SR {:.3}, mean successful AE {ae:.4} px, {:.1} s", rep.sr, took.as_secs_f64()),
    )
}

fn subsampling(full_sr: Option<f64>) -> Verdict {
    let full = full_sr.unwrap_or_else(|| synthetic(TransformClass::Small, 50, 1.0, Measure::AlphaAmd).0.sr);
    let (tenth, _) = synthetic(TransformClass::Small, 50, 0.1, Measure::AlphaAmd);
    let (hundredth, _) = synthetic(TransformClass::Small, 50, 0.01, Measure::AlphaAmd);
    verdict(
        (tenth.sr - full).abs() <= 0.1 + 1e-12 && hundredth.sr >= 0.7,
        format!("SR {:.3} at f=0.1 (full {full:.3}), {:.3} at f=0.01", tenth.sr, hundredth.sr),
    )
}

fn catch_basin() -> Verdict {
    let sr = |m| synthetic(TransformClass::Large, 30, 1.0, m).0.sr;
    let amd = sr(Measure::AlphaAmd);
    let (s, p, m) = (sr(Measure::Ssd), sr(Measure::Pcc), sr(Measure::Mi));
    verdict(
        amd >= s && amd >= p && amd >= m,
        format!("SR alpha-AMD {amd:.3}, SSD {s:.3}, PCC {p:.3}, MI {m:.3}"),
    )
}

// ---------------------------------------------------------------- 8

fn min_time(reps: usize, mut f: impl FnMut()) -> f64 {
    (0..reps)
        .map(|_| {
            let s = Instant::now();
            f();
            s.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn complexity() -> Verdict {
    let g = Grid::unit([128, 128]).unwrap();
    let img = smooth_phantom(g);
    let shifted = warp_image(&img, &AffineTransform::translation_only([1.5, -2.0]));
    let t = AffineTransform::identity(g.center());
    let per_eval = |count: usize| {
        let levels = AlphaLevels::equally_spaced(count).unwrap();
        let a = AmdImage::plain(&img, &levels, 30.0, true).unwrap();
        let b = AmdImage::plain(&shifted, &levels, 30.0, true).unwrap();
        let mut cost = AmdCost::new(&a, &b, t.clone(), Interpolation::Linear, 1.0, 0).unwrap();
        let p = t.params();
        min_time(15, || {
            for _ in 0..10 {
                std::hint::black_box(cost.cost(&p).unwrap());
            }
        }) / 10.0
    };
    let (t3, t15) = (per_eval(3), per_eval(15));
    let level_ratio = t15 / t3;

    let levels = AlphaLevels::equally_spaced(7).unwrap();
    let build = |dims: [usize; 2]| {
        let g = Grid::unit(dims).unwrap();
        let im = smooth_phantom(g);
        let mask = BinaryMask::full(g);
        min_time(7, || {
            std::hint::black_box(build_alpha_dt_bidirectional(&im, &mask, &levels, 30.0).unwrap());
        })
    };
    let (small, large) = (build([128, 128]), build([128, 256]));
    let scale = large / (2.0 * small);
    verdict(
        (level_ratio - 1.0).abs() < 0.2 && scale <= 1.5,
        format!(
            "evaluation {:.3} ms at 3 levels vs {:.3} ms at 15 (ratio {level_ratio:.3}); stack build t(2N)/2t(N) = {scale:.3}",
            1e3 * t3,
            1e3 * t15
        ),
    )
}

// ---------------------------------------------------------------- 9

fn trivial_examples() -> Verdict {
    let mut failed: Vec<&str> = Vec::new();
    let mut check = |ok: bool, name: &'static str| {
        if !ok {
            failed.push(name);
        }
    };
    let g1 = Grid::unit([11]).unwrap();
    let g = Grid::unit([8, 8]).unwrap();
    let id2 = AffineTransform::identity([0.0, 0.0]);

    // normalization
    let n = normalize_percentile(&FuzzyImage::filled(g, 0.7), 0.05).unwrap();
    check(n.degenerate && n.image.values().iter().all(|&v| v == 0.0), "constant image normalizes to zeros");
    let ramp = FuzzyImage::from_fn(g1, |p| p[0] / 10.0);
    check(normalize_percentile(&ramp, 0.0).unwrap().image == ramp, "ramp normalizes to itself");

    // quantization, cuts, complement
    check(quantize_membership(0.5, 7) == 4, "quantize 0.5 at 7 levels");
    check(quantize_membership(0.0, 7) == 0, "quantize 0");
    check(quantize_membership(1.0, 7) == 7, "quantize 1");
    check(alpha_cut(&FuzzyImage::filled(g, 1.0), 1.0).count() == 64, "cut of ones at 1");
    check(alpha_cut(&FuzzyImage::filled(g, 0.0), 0.3).count() == 0, "cut of zeros");
    check(complement(&FuzzyImage::filled(g, 0.0)) == FuzzyImage::filled(g, 1.0), "complement of zeros");
    let dyadic = FuzzyImage::from_fn(Grid::unit([9]).unwrap(), |p| p[0] / 8.0);
    check(complement(&complement(&dyadic)) == dyadic, "complement involution");
    check(
        complement(&complement(&ramp)).values().iter().zip(ramp.values()).all(|(a, b)| (a - b).abs() <= 1e-16),
        "complement involution up to rounding",
    );
    check((complement(&FuzzyImage::filled(g, 0.3)).values()[0] - 0.7).abs() < 1e-15, "complement 0.3");

    // pyramid
    let rnd = common::random_image(g, 3);
    let full = BinaryMask::full(g);
    let ones = WeightMap::ones(g);
    let lv = build_pyramid(&rnd, &full, &ones, &[1, 2], &[0.0, 0.0]).unwrap();
    check(lv[0].image == rnd, "factor 1 sigma 0 keeps the image");
    check(
        lv[1].image.grid().dims() == [4, 4] && lv[1].image.grid().spacing() == [2.0, 2.0],
        "factor 2 halves the shape",
    );
    check(gaussian_smooth(&rnd, 0.0) == rnd, "sigma 0 smoothing is the identity");

    // Hann window
    let gw = Grid::unit([21]).unwrap();
    let w = hann_window_weights(gw, [10.0], 10.0, false).unwrap();
    check(w.weights()[10] == 1.0 && w.weights()[0] == 0.0, "window centre and rim");
    check((w.weights()[5] - 0.5).abs() < 1e-15, "window at half radius");

    // noise
    check(gaussian_noise(100, 0.1, 7) == gaussian_noise(100, 0.1, 7), "noise determinism");
    check(add_gaussian_noise(&rnd, 0.0, 1).unwrap() == rnd, "zero noise is the identity");

    // distance transforms
    check(euclidean_dt(&full, 10.0).distances().iter().all(|&v| v == 0.0), "full mask DT");
    check(euclidean_dt(&BinaryMask::empty(g), 10.0).distances().iter().all(|&v| v == 10.0), "empty mask DT");
    let flat = euclidean_dt(&full, 10.0);
    check(discrete_gradient(&flat).vectors().iter().all(|v| *v == [0.0, 0.0]), "constant field gradient");
    let line = BinaryMask::new(Grid::unit([4]).unwrap(), vec![true, false, false, false]).unwrap();
    let d = euclidean_dt(&line, 100.0);
    check(d.distances() == [0.0, 1.0, 2.0, 3.0], "1-D ramp distances");
    let gr = discrete_gradient(&d);
    check(gr.vectors()[2] == [1.0] && gr.vectors()[0] == [0.0], "1-D ramp gradient and gate");

    // stacks
    let levels = AlphaLevels::equally_spaced(7).unwrap();
    let fg = common::random_mask(g, 0.3, 5);
    let bin = FuzzyImage::new(g, fg.bits().iter().map(|&b| b as u8 as f64).collect()).unwrap();
    let s = build_alpha_dt(&bin, &full, &levels, 4.0).unwrap();
    let crisp = euclidean_dt(&fg, 4.0);
    check(
        (0..64).all(|i| (s.distance(7, i) - crisp.distances()[i]).abs() < 1e-12),
        "binary image top level is the crisp DT",
    );
    let low = FuzzyImage::filled(g, 5.0 / 7.0);
    let s = build_alpha_dt(&low, &full, &levels, 4.0).unwrap();
    check(
        (0..64).all(|i| (s.distance(7, i) - s.distance(6, i) - 4.0 / 7.0).abs() < 1e-12),
        "empty top cut adds its mass times d_max",
    );
    let zero = FuzzyImage::filled(g, 0.0);
    let bd = build_alpha_dt_bidirectional(&zero, &full, &levels, 4.0).unwrap();
    let inw = build_alpha_dt(&zero, &full, &levels, 4.0).unwrap();
    check(
        (0..64).all(|i| bd.distance(0, i) == 0.0 && (inw.distance(7, i) - 4.0).abs() < 1e-12),
        "zero image: saturated inward part, zero complement at level 0",
    );

    // interpolation
    let g2 = Grid::unit([3]).unwrap();
    let two = BinaryMask::new(g2, vec![true, false, false]).unwrap();
    let st = build_alpha_dt(
        &FuzzyImage::new(g2, vec![1.0, 0.0, 0.0]).unwrap(),
        &two,
        &AlphaLevels::equally_spaced(1).unwrap(),
        100.0,
    )
    .unwrap();
    check(st.interpolate(1, &[2.0], Interpolation::Nearest).unwrap().0 == 2.0, "on-grid nearest lookup");
    check(st.interpolate(1, &[2.0], Interpolation::Linear).unwrap().0 == 2.0, "on-grid linear lookup");
    check(st.interpolate(1, &[1.5], Interpolation::Linear).unwrap().0 == 1.5, "linear midpoint");

    // transforms
    let x = [3.0, 4.0];
    check(id2.apply(&x) == x, "identity apply");
    check(AffineTransform::translation_only([1.0, 2.0]).apply(&[0.0, 0.0]) == [1.0, 2.0], "translation apply");
    let q = RigidTransform::new(&[std::f64::consts::FRAC_PI_2], [0.0; 2], [0.0; 2]).unwrap().apply(&[1.0, 0.0]);
    check(q[0].abs() < 1e-15 && (q[1] - 1.0).abs() < 1e-15, "quarter turn");
    check(id2.inverse().unwrap() == id2, "identity inverse");
    check(
        AffineTransform::translation_only([1.0, 2.0]).inverse().unwrap() == AffineTransform::translation_only([-1.0, -2.0]),
        "translation inverse",
    );
    let jac = id2.param_jacobian(&x);
    check(jac[4] == [1.0, 0.0] && jac[0] == [3.0, 0.0], "affine parameter Jacobian");
    let rid = RigidTransform::identity([0.0; 2]).unwrap();
    check(rid.param_jacobian(&[1.0, 0.0])[0] == [0.0, 1.0], "rotation derivative");
    let ij = AffineTransform::translation_only([1.0, 2.0]).inverse_param_jacobian().unwrap();
    check(ij[4][4] == -1.0 && ij[5][5] == -1.0 && ij[4][5] == 0.0, "translation inverse Jacobian");
    check(
        sample_random_transform(TransformClass::Small, &g, 3).unwrap() == sample_random_transform(TransformClass::Small, &g, 3).unwrap(),
        "sampling determinism",
    );

    // point and set distances
    let single = AmdImage::plain(&FuzzyImage::from_fn(g, |p| (p == [2.0, 2.0]) as u8 as f64), &levels, 9.0, false).unwrap();
    let far = AffineTransform::translation_only([100.0, 0.0]);
    let r = point_to_set_distance(&[0.0, 0.0], 1.0, 1.0, &far, &full, single.stack(), &levels, Interpolation::Linear);
    check(r.d == 0.0 && r.w == 0.0 && r.grad.iter().all(|&v| v == 0.0), "point outside the mask");
    let r = point_to_set_distance(&[0.0, 0.0], 0.0, 1.0, &id2, &full, single.stack(), &levels, Interpolation::Linear);
    check(r.d == 0.0, "level-zero point");
    let r = point_to_set_distance(&[2.0, 2.0], 1.0, 1.0, &id2, &full, single.stack(), &levels, Interpolation::Linear);
    check(r.d == 0.0 && r.grad.iter().all(|&v| v == 0.0), "foreground over foreground");
    let sub = AmdImage::plain(&FuzzyImage::from_fn(g, |p| (p[0] < 3.0) as u8 as f64), &levels, 9.0, false).unwrap();
    let sup = AmdImage::plain(&FuzzyImage::from_fn(g, |p| (p[0] < 5.0) as u8 as f64), &levels, 9.0, false).unwrap();
    check(asymmetric_amd(&sub, &sup, &id2, &SampleSet::full(&sub), Interpolation::Linear).d == 0.0, "subset distance");
    let dup = AmdImage::new(
        sub.image(),
        &full,
        &WeightMap::new(g, vec![2.0; 64]).unwrap(),
        &levels,
        9.0,
        false,
    )
    .unwrap();
    let once = asymmetric_amd(&sup, &sub, &id2, &SampleSet::full(&sup), Interpolation::Linear).d;
    let sup2 = AmdImage::new(sup.image(), &full, dup.weights(), &levels, 9.0, false).unwrap();
    check(asymmetric_amd(&sup2, &sub, &id2, &SampleSet::full(&sup2), Interpolation::Linear).d == once, "duplicated samples");
    let sm = AmdImage::plain(&common::smooth_random_image(g, 1.5, 4), &levels, 9.0, true).unwrap();
    let fs = SampleSet::full(&sm);
    let tc = AffineTransform::identity(g.center());
    check(symmetric_amd(&sm, &sm, &tc, &fs, &fs, Interpolation::Linear).unwrap().d == 0.0, "self distance");
    let full_val = symmetric_amd(&sm, &sup.clone(), &tc, &fs, &SampleSet::full(&sup), Interpolation::Linear);
    let one = subsampled_amd(&sm, &sup, &tc, 1.0, 5, Interpolation::Linear);
    check(full_val.unwrap().d == one.unwrap().d, "fraction one equals full sampling");
    check(
        subsampled_amd(&sm, &sup, &tc, 0.3, 5, Interpolation::Linear).unwrap()
            == subsampled_amd(&sm, &sup, &tc, 0.3, 5, Interpolation::Linear).unwrap(),
        "subsampling determinism",
    );

    // baselines
    let smooth = common::smooth_random_image(g, 1.5, 9);
    check(ssd(&smooth, &smooth, &tc, &full).value == 0.0, "SSD of equal images");
    check(ssd(&FuzzyImage::filled(g, 0.0), &FuzzyImage::filled(g, 1.0), &tc, &full).value == 1.0, "SSD of 0 vs 1");
    check((pcc(&smooth, &smooth, &tc, &full).value - 1.0).abs() < 1e-12, "PCC of equal images");
    check((pcc(&smooth, &complement(&smooth), &tc, &full).value + 1.0).abs() < 1e-12, "PCC of complement");
    let cells = FuzzyImage::from_fn(g, |p| ((p[0] + 8.0 * p[1]) as usize % 4) as f64 / 4.0 + 0.1);
    let h_a = {
        let n = 64.0;
        -4.0 * (16.0 / n) * (16.0f64 / n).ln()
    };
    check((mi(&cells, &cells, &tc, &full, 32).value - h_a).abs() < 1e-12, "MI of an image with itself");
    check(
        (mi(&cells, &cells.map(|v| v * 0.5), &tc, &full, 32).value - h_a).abs() < 1e-12,
        "MI under a bin-preserving map",
    );

    // optimizer
    let flat = |x: &[f64]| {
        Ok(CostValue {
            value: 0.0,
            grad: vec![0.0; x.len()],
            non_overlap: false,
        })
    };
    let r = minimize(flat, &[1.0, 2.0], &OptimizerConfig::default()).unwrap();
    check(r.trace.reason == StopReason::GradientMagnitude && r.trace.records.len() == 1, "zero-gradient start");

    // metrics
    let l = vec![[0.0, 0.0], [5.0, 1.0], [2.0, 7.0]];
    let t34 = AffineTransform::translation_only([3.0, 4.0]);
    check(average_error(&id2, &l, &l).unwrap() == 0.0, "AE identity");
    check(average_error(&t34, &l, &l).unwrap() == 5.0, "AE 3-4-5");
    check(average_minimal_error(&t34, &l[..1], &l[..1]).unwrap() == 5.0, "AME single landmark");
    check(average_minimal_error(&t34, &l, &l).unwrap() <= 5.0, "AME below AE");
    check(ame_outer(&id2, &l, &l, &l, &l).unwrap() == 0.0, "AME outer identity");
    check(ame_outer(&t34, &l[..1], &l[..1], &l[1..2], &l[1..2]).unwrap() == 5.0, "AME outer equal classes");
    let s = success_metrics(&[(5.0, 5.0), (6.0, 0.1)], 1.0).unwrap();
    check(s.sr == 0.0 && s.sym_sr == 0.0, "all failures");
    let s = success_metrics(&[(0.5, 5.0)], 1.0).unwrap();
    check(s.sr == 1.0 && s.sym_sr == 0.0, "forward-only success");
    let pts = g.points();
    check(inverse_consistency_error(&t34, &t34.inverse().unwrap(), &pts).unwrap() < 1e-10, "ICE of exact inverse");
    let ice = inverse_consistency_error(&id2, &AffineTransform::translation_only([3.0, 4.0]), &pts).unwrap();
    check((ice - 5.0).abs() < 1e-12, "ICE of identity vs translation");
    let sq = |x0: f64| BinaryMask::from_fn(g, move |p| p[0] >= x0 && p[0] < x0 + 4.0 && p[1] < 4.0);
    check(jaccard(&sq(0.0), &sq(0.0)).unwrap() == 1.0, "Jaccard identical");
    check(jaccard(&sq(0.0), &sq(4.0)).unwrap() == 0.0, "Jaccard disjoint");
    check(jaccard(&sq(0.0), &sq(2.0)).unwrap() == 1.0 / 3.0, "Jaccard half overlap");

    verdict(
        failed.is_empty(),
        if failed.is_empty() {
            "all library examples hold exactly (file-format and command-line examples are tested in the cli crate)".into()
        } else {
            format!("failed: {}", failed.join("; "))
        },
    )
}

// ---------------------------------------------------------------- 10

fn optimizer_termination() -> Verdict {
    let d = OptimizerConfig::default();
    let defaults = d.gradient_tolerance == 1e-4 && d.min_step_length == 1e-4 && d.relaxation == 0.99;
    let target = [2.0, -1.0, 0.5];
    let bowl = |x: &[f64]| {
        let r: Vec<f64> = x.iter().zip(&target).map(|(a, b)| a - b).collect();
        Ok(CostValue {
            value: r.iter().map(|v| v * v).sum(),
            grad: r.iter().map(|v| 2.0 * v).collect(),
            non_overlap: false,
        })
    };
    let r = minimize(bowl, &[0.0; 3], &d).unwrap();
    let iters = r.trace.records.len();
    let err = r.params.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let monotone = r.trace.records.windows(2).all(|w| w[1].step <= w[0].step);
    verdict(
        defaults && iters <= 500 && err < 1e-3 && monotone,
        format!(
            "defaults GMT {} MSL {} r {}; bowl solved to {err:.1e} in {iters} iterations ({:?}); steps monotone: {monotone}",
            d.gradient_tolerance,
            d.min_step_length,
            d.relaxation,
            r.trace.reason
        ),
    )
}

fn main() {
    let filters: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| filters.is_empty() || filters.contains(&n);
    let mut full_sr = None;
    let mut failures = 0;
    let mut run = |n: usize, name: &str, f: &mut dyn FnMut() -> Verdict| {
        if !wanted(n) {
            return;
        }
        let v = f();
        println!("criterion {n:>2} {name}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failures += !v.pass as usize;
    };
    run(1, "distance transform exactness", &mut dt_exactness);
    run(2, "stack correctness", &mut stack_correctness);
    run(3, "gradient fidelity", &mut gradient_fidelity);
    run(4, "symmetry", &mut symmetry);
    run(5, "synthetic recovery", &mut || synthetic_recovery(&mut full_sr));
    run(6, "subsampling robustness", &mut || subsampling(full_sr));
    run(7, "catch basin", &mut catch_basin);
    run(8, "complexity", &mut complexity);
    run(9, "closed-form examples", &mut trivial_examples);
    run(10, "optimizer termination", &mut optimizer_termination);
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
