//! Peak analysis and smoothing primitives for uniformly sampled series.
//!
//! Peaks are local maxima (plateaus report their midpoint). Prominence is
//! the height of a peak above the higher of the two valley floors reached
//! before a strictly taller sample (or the series edge) on each side, and
//! widths are measured at `peak - prominence * rel_height` with linear
//! interpolation between samples. All positions are in samples; callers
//! convert to time.

/// One detected peak with its prominence and width geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub value: f64,
    pub prominence: f64,
    /// Index of the valley sample bounding the prominence on each side.
    pub left_base: usize,
    pub right_base: usize,
    /// Width in samples at the evaluation height, and its interpolated
    /// interval endpoints.
    pub width: f64,
    pub width_height: f64,
    pub left_ip: f64,
    pub right_ip: f64,
}

/// Indices of interior local maxima; a plateau yields its midpoint
/// (rounded down). Series edges are never maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let mut i = 1;
    while i < n - 1 {
        if values[i - 1] < values[i] {
            let mut i_ahead = i + 1;
            while i_ahead < n - 1 && values[i_ahead] == values[i] {
                i_ahead += 1;
            }
            if values[i_ahead] < values[i] {
                out.push((i + i_ahead - 1) / 2);
                i = i_ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Peaks with prominence at least `min_prominence`, widths evaluated at
/// `rel_height` of the prominence below the peak, sorted by index.
pub fn find_peaks(values: &[f64], min_prominence: f64, rel_height: f64) -> Vec<Peak> {
    assert!((0.0..=1.0).contains(&rel_height), "rel_height must be in [0, 1]");
    local_maxima(values)
        .into_iter()
        .filter_map(|index| {
            let (prominence, left_base, right_base) = prominence_at(values, index);
            if prominence < min_prominence {
                return None;
            }
            let width_height = values[index] - prominence * rel_height;
            let (left_ip, right_ip) =
                width_interval(values, index, left_base, right_base, width_height);
            Some(Peak {
                index,
                value: values[index],
                prominence,
                left_base,
                right_base,
                width: right_ip - left_ip,
                width_height,
                left_ip,
                right_ip,
            })
        })
        .collect()
}

/// Walks outward from the peak on each side until a strictly taller sample
/// (or the edge), tracking the lowest sample reached; the prominence is the
/// peak height above the higher of the two minima.
fn prominence_at(values: &[f64], peak: usize) -> (f64, usize, usize) {
    let top = values[peak];

    let mut left_min = top;
    let mut left_base = peak;
    let mut i = peak as isize;
    while i >= 0 && values[i as usize] <= top {
        if values[i as usize] < left_min {
            left_min = values[i as usize];
            left_base = i as usize;
        }
        i -= 1;
    }

    let mut right_min = top;
    let mut right_base = peak;
    let mut i = peak;
    while i < values.len() && values[i] <= top {
        if values[i] < right_min {
            right_min = values[i];
            right_base = i;
        }
        i += 1;
    }

    (top - left_min.max(right_min), left_base, right_base)
}

/// Interpolated crossings of `height` nearest the peak on each side, bounded
/// by the prominence bases.
fn width_interval(
    values: &[f64],
    peak: usize,
    left_base: usize,
    right_base: usize,
    height: f64,
) -> (f64, f64) {
    let mut i = peak;
    while left_base < i && height < values[i] {
        i -= 1;
    }
    let mut left_ip = i as f64;
    if values[i] < height {
        left_ip += (height - values[i]) / (values[i + 1] - values[i]);
    }

    let mut i = peak;
    while i < right_base && height < values[i] {
        i += 1;
    }
    let mut right_ip = i as f64;
    if values[i] < height {
        right_ip -= (height - values[i]) / (values[i - 1] - values[i]);
    }

    (left_ip, right_ip)
}

/// Discrete Gaussian kernel of the given radius, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let mut kernel: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|j| (-(j as f64 * j as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Correlates `values` with a (symmetric) kernel under edge-inclusive
/// reflection at the boundaries, so a unit-sum kernel preserves both
/// constants and total mass.
pub fn reflect_convolve(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    assert!(kernel.len() % 2 == 1, "kernel length must be odd");
    if values.is_empty() {
        return Vec::new();
    }
    let radius = (kernel.len() / 2) as isize;
    (0..values.len() as isize)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, &w)| w * values[reflect_index(i + k as isize - radius, values.len())])
                .sum()
        })
        .collect()
}

/// Maps any integer onto 0..n by the edge-inclusive reflection pattern
/// `... 1 0 | 0 1 .. n-1 | n-1 .. 1 0 | ...` (period 2n).
fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let mut i = i.rem_euclid(period);
    if i >= n as isize {
        i = period - 1 - i;
    }
    i as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxima_basics_and_plateaus() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.0]), vec![1]);
        assert_eq!(local_maxima(&[1.0, 0.0, 1.0]), Vec::<usize>::new());
        assert_eq!(local_maxima(&[0.0, 1.0, 1.0, 0.0]), vec![1]);
        assert_eq!(local_maxima(&[0.0, 1.0, 1.0, 1.0, 0.0]), vec![2]);
        // A plateau touching the edge never resolves into a peak.
        assert_eq!(local_maxima(&[0.0, 1.0, 1.0]), Vec::<usize>::new());
        assert_eq!(local_maxima(&[0.0, 2.0, 1.0, 2.0, 0.0]), vec![1, 3]);
        assert_eq!(local_maxima(&[]), Vec::<usize>::new());
        assert_eq!(local_maxima(&[3.0, 3.0]), Vec::<usize>::new());
    }

    #[test]
    fn staircase_prominences() {
        // Successively taller teeth: each prominence is the drop to the
        // deeper of the two adjacent valleys capped by the first taller bar.
        let x = [0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0];
        let peaks = find_peaks(&x, 0.0, 0.5);
        let proms: Vec<f64> = peaks.iter().map(|p| p.prominence).collect();
        assert_eq!(proms, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn frozen_prominence_and_width_geometry() {
        let x = [0.0, 2.0, 1.0, 3.0, 0.0, 1.5, 0.5];
        let peaks = find_peaks(&x, 0.0, 0.5);
        assert_eq!(peaks.len(), 3);

        assert_eq!(peaks[0].index, 1);
        assert_eq!(peaks[0].prominence, 1.0);
        assert_eq!((peaks[0].left_base, peaks[0].right_base), (0, 2));
        assert!((peaks[0].left_ip - 0.75).abs() < 1e-12);
        assert!((peaks[0].right_ip - 1.5).abs() < 1e-12);
        assert!((peaks[0].width - 0.75).abs() < 1e-12);

        assert_eq!(peaks[1].index, 3);
        assert_eq!(peaks[1].prominence, 3.0);
        assert_eq!((peaks[1].left_base, peaks[1].right_base), (0, 4));
        assert!((peaks[1].left_ip - 2.25).abs() < 1e-12);
        assert!((peaks[1].right_ip - 3.5).abs() < 1e-12);
        assert!((peaks[1].width - 1.25).abs() < 1e-12);

        assert_eq!(peaks[2].index, 5);
        assert_eq!(peaks[2].prominence, 1.0);
        assert_eq!((peaks[2].left_base, peaks[2].right_base), (4, 6));
        assert!((peaks[2].left_ip - (4.0 + 2.0 / 3.0)).abs() < 1e-12);
        assert!((peaks[2].right_ip - 5.5).abs() < 1e-12);
        assert!((peaks[2].width - (5.5 - 4.0 - 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn equal_height_neighbours_see_through_each_other() {
        // The prominence walk passes through samples of equal height, so
        // twin peaks both reach the outer floor.
        let x = [0.0, 2.0, 1.0, 2.0, 0.0];
        let peaks = find_peaks(&x, 0.0, 0.5);
        assert_eq!(peaks.iter().map(|p| p.prominence).collect::<Vec<_>>(), vec![2.0, 2.0]);
    }

    #[test]
    fn prominence_filter_drops_small_peaks() {
        let x = [0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0];
        let peaks = find_peaks(&x, 1.5, 0.5);
        assert_eq!(peaks.iter().map(|p| p.index).collect::<Vec<_>>(), vec![3, 5]);
    }

    #[test]
    fn prominence_against_slice_minimum_oracle() {
        // Independent check: for each side, locate the nearest strictly
        // taller sample (or edge), then take the plain minimum of the
        // enclosed slice.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let n = 3 + (next() * 60.0) as usize;
            let x: Vec<f64> = (0..n).map(|_| (next() * 8.0).round() / 2.0).collect();
            for p in find_peaks(&x, 0.0, 0.5) {
                let i = p.index;
                let left_stop = (0..i).rev().find(|&j| x[j] > x[i]).map_or(0, |j| j + 1);
                let right_stop =
                    (i + 1..n).find(|&j| x[j] > x[i]).map_or(n - 1, |j| j - 1);
                let left_min =
                    x[left_stop..=i].iter().cloned().fold(f64::INFINITY, f64::min);
                let right_min =
                    x[i..=right_stop].iter().cloned().fold(f64::INFINITY, f64::min);
                let expected = x[i] - left_min.max(right_min);
                assert!(
                    (p.prominence - expected).abs() < 1e-12,
                    "peak {i} in {x:?}: {} vs {expected}",
                    p.prominence
                );
            }
        }
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(2.5, 10);
        assert_eq!(k.len(), 21);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..10 {
            assert_eq!(k[j], k[20 - j]);
        }
        assert!(k[10] > k[9] && k[9] > k[8]);
    }

    #[test]
    fn reflection_pattern_is_edge_inclusive() {
        let expected = [0usize, 1, 2, 2, 1, 0, 0, 1, 2];
        for (off, &want) in expected.iter().enumerate() {
            assert_eq!(reflect_index(off as isize, 3), want, "index {off}");
        }
        assert_eq!(reflect_index(-1, 3), 0);
        assert_eq!(reflect_index(-3, 3), 2);
        assert_eq!(reflect_index(-4, 3), 2);
        assert_eq!(reflect_index(-6, 3), 0);
    }

    #[test]
    fn smoothing_preserves_constants_and_mass() {
        let k = gaussian_kernel(3.0, 12);
        let c = reflect_convolve(&[4.2; 17], &k);
        for v in &c {
            assert!((v - 4.2).abs() < 1e-12);
        }

        // Mass conservation holds exactly under edge-inclusive reflection
        // with a symmetric unit-sum kernel.
        let x: Vec<f64> = (0..40).map(|i| ((i * 37 + 11) % 17) as f64 - 5.0).collect();
        let y = reflect_convolve(&x, &k);
        assert!((x.iter().sum::<f64>() - y.iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn impulse_response_reproduces_the_kernel() {
        let k = gaussian_kernel(1.5, 6);
        let mut x = vec![0.0; 31];
        x[15] = 1.0;
        let y = reflect_convolve(&x, &k);
        for j in 0..=6usize {
            assert!((y[15 + j] - k[6 + j]).abs() < 1e-15);
            assert!((y[15 - j] - k[6 - j]).abs() < 1e-15);
        }
        assert_eq!(y[4], 0.0);
    }
}
