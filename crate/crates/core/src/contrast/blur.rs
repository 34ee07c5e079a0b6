/// `FWHM = 2·sqrt(2·ln 2)·σ`, rounded as used throughout the renderer.
pub const FWHM_PER_SIGMA: f64 = 2.3548;

/// Normalized 1D Gaussian taps for offsets `-r..=r`, `r = ⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= sum;
    }
    taps
}

/// In-place separable Gaussian blur with clamp-to-edge boundaries.
/// A non-positive `fwhm_vox` leaves the data untouched.
pub fn gaussian_blur(data: &mut [f64], dims: [usize; 3], fwhm_vox: f64) {
    if fwhm_vox.is_nan() || fwhm_vox <= 0.0 {
        return;
    }
    let kernel = gaussian_kernel(fwhm_vox / FWHM_PER_SIGMA);
    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut line = Vec::new();
    for axis in 0..3 {
        convolve_axis(data, dims, strides, axis, &kernel, &mut line);
    }
}

fn convolve_axis(
    data: &mut [f64],
    dims: [usize; 3],
    strides: [usize; 3],
    axis: usize,
    kernel: &[f64],
    line: &mut Vec<f64>,
) {
    let n = dims[axis];
    let stride = strides[axis];
    let radius = (kernel.len() / 2) as isize;
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for j in 0..dims[b] {
        for i in 0..dims[a] {
            let start = i * strides[a] + j * strides[b];
            line.clear();
            line.extend((0..n).map(|k| data[start + k * stride]));
            for k in 0..n {
                let mut acc = 0.0;
                for (t, w) in kernel.iter().enumerate() {
                    let src = (k as isize + t as isize - radius).clamp(0, n as isize - 1) as usize;
                    acc += w * line[src];
                }
                data[start + k * stride] = acc;
            }
        }
    }
}
