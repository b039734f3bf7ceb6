//! Separable Gaussian filtering with symmetric (half-sample) reflection at the borders.

/// Maps an out-of-range index back into `0..n` by mirroring about the edges
/// (`d c b a | a b c d | d c b a`).
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

pub(crate) fn kernel_radius(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

/// Normalized Gaussian taps for offsets `-r..=r`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = kernel_radius(sigma) as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Half of an antisymmetric Gaussian-derivative kernel: `d[i-1]` weighs
/// `v[x+i] - v[x-i]` for `i = 1..=r`. Scaled so a unit ramp differentiates to exactly 1.
pub(crate) fn derivative_half_kernel(sigma: f64) -> Vec<f64> {
    let r = kernel_radius(sigma);
    let mut taps: Vec<f64> = (1..=r)
        .map(|i| {
            let x = i as f64;
            x * (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let ramp: f64 = taps
        .iter()
        .enumerate()
        .map(|(k, d)| 2.0 * (k + 1) as f64 * d)
        .sum();
    taps.iter_mut().for_each(|t| *t /= ramp);
    taps
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Axis {
    X,
    Y,
}

/// Correlates a `width x height` plane with a symmetric kernel along one axis.
pub(crate) fn smooth_axis(src: &[f64], width: usize, height: usize, axis: Axis, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in taps.iter().enumerate() {
                let o = k as isize - r;
                let v = match axis {
                    Axis::X => src[y * width + reflect(x as isize + o, width)],
                    Axis::Y => src[reflect(y as isize + o, height) * width + x],
                };
                acc += w * v;
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Gaussian-derivative along one axis using the paired form, so constant
/// input yields exactly zero.
pub(crate) fn derive_axis(src: &[f64], width: usize, height: usize, axis: Axis, half: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in half.iter().enumerate() {
                let o = k as isize + 1;
                let (fwd, back) = match axis {
                    Axis::X => (
                        src[y * width + reflect(x as isize + o, width)],
                        src[y * width + reflect(x as isize - o, width)],
                    ),
                    Axis::Y => (
                        src[reflect(y as isize + o, height) * width + x],
                        src[reflect(y as isize - o, height) * width + x],
                    ),
                };
                acc += w * (fwd - back);
            }
            out[y * width + x] = acc;
        }
    }
    out
}

pub(crate) fn gaussian_blur(src: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let taps = gaussian_kernel(sigma);
    let tmp = smooth_axis(src, width, height, Axis::X, &taps);
    smooth_axis(&tmp, width, height, Axis::Y, &taps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_mirrors_about_edges() {
        assert_eq!(reflect(-1, 4), 0);
        assert_eq!(reflect(-2, 4), 1);
        assert_eq!(reflect(4, 4), 3);
        assert_eq!(reflect(5, 4), 2);
        assert_eq!(reflect(9, 4), 1);
        assert_eq!(reflect(2, 4), 2);
        assert_eq!(reflect(-3, 1), 0);
    }

    #[test]
    fn gaussian_kernel_sums_to_one() {
        let k = gaussian_kernel(1.5);
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_ramp_is_one() {
        let (w, h) = (32, 8);
        let src: Vec<f64> = (0..w * h).map(|i| (i % w) as f64).collect();
        let d = derive_axis(&src, w, h, Axis::X, &derivative_half_kernel(1.5));
        for y in 0..h {
            for x in 6..w - 6 {
                assert!((d[y * w + x] - 1.0).abs() < 1e-12);
            }
        }
        let dy = derive_axis(&src, w, h, Axis::Y, &derivative_half_kernel(1.5));
        assert!(dy.iter().all(|&v| v == 0.0));
    }
}
