use crate::grid::Grid;
use crate::image::FuzzyImage;

fn blob<const D: usize>(p: &[f64; D], c: &[f64; D], sigma: &[f64; D]) -> f64 {
    let mut e = 0.0;
    for k in 0..D {
        e += ((p[k] - c[k]) / sigma[k]).powi(2);
    }
    (-0.5 * e).exp()
}

/// Smooth asymmetric test object: anisotropic Gaussian blobs of different
/// brightness scattered over the whole field on a dark background.
pub fn smooth_phantom<const D: usize>(grid: Grid<D>) -> FuzzyImage<D> {
    // (centre fraction, sigma fraction, amplitude) per axis, cycled for D > 3
    const BLOBS: [([f64; 3], [f64; 3], f64); 8] = [
        ([0.30, 0.35, 0.40], [0.10, 0.06, 0.08], 1.0),
        ([0.70, 0.25, 0.62], [0.05, 0.08, 0.06], 0.8),
        ([0.22, 0.75, 0.30], [0.06, 0.05, 0.07], 0.6),
        ([0.55, 0.55, 0.55], [0.08, 0.08, 0.05], 0.9),
        ([0.80, 0.72, 0.78], [0.06, 0.09, 0.05], 0.7),
        ([0.45, 0.85, 0.20], [0.07, 0.04, 0.06], 0.5),
        ([0.15, 0.18, 0.70], [0.04, 0.04, 0.05], 0.75),
        ([0.86, 0.45, 0.35], [0.04, 0.06, 0.04], 0.55),
    ];
    let size = grid.size();
    let origin = grid.origin();
    FuzzyImage::from_fn(grid, |p| {
        let mut v = 0.0f64;
        for (cf, sf, amp) in BLOBS {
            let mut c = [0.0; D];
            let mut s = [0.0; D];
            for k in 0..D {
                c[k] = origin[k] + cf[k % 3] * size[k];
                s[k] = sf[k % 3] * size[k];
            }
            v = v.max(amp * blob(&p, &c, &s));
        }
        v
    })
}

/// `folds` identical round blobs equally spaced on a circle about the image
/// centre (in the plane of the first two axes), so the pattern repeats every
/// `2π / folds` radians.
pub fn ring_phantom<const D: usize>(grid: Grid<D>, folds: usize) -> FuzzyImage<D> {
    let c = grid.center();
    let size = grid.size();
    let span = size.iter().take(2).fold(f64::INFINITY, |m, &v| m.min(v));
    let radius = 0.3 * span;
    let sigma = [0.045 * span; D];
    let centres: Vec<[f64; D]> = (0..folds)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / folds as f64;
            let mut q = c;
            q[0] += radius * th.cos();
            if D > 1 {
                q[1] += radius * th.sin();
            }
            q
        })
        .collect();
    FuzzyImage::from_fn(grid, |p| centres.iter().map(|q| blob(&p, q, &sigma)).fold(0.0, f64::max))
}
