//! Spectrum comparisons, the measurement-noise sweep and power spectra.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dmd::{centered_dmd, exact_dmd, split_snapshots, DmdModel};
use crate::error::{invalid, Result};
use crate::linalg::{self, RankMethod};
use crate::synth::{self, LinearSystemSpec, NoiseSpec};
use crate::{Complex64, RealMatrix, RealVector};

/// Distances from estimated eigenvalues to their nearest true eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub matched_distance: f64,
    pub excluded_near_unity: bool,
    pub n_estimated: usize,
    pub n_true: usize,
    pub per_eigen_distances: Vec<f64>,
}

/// Index of the entry closest to `target`; ties go to the lowest index.
pub fn nearest_index(values: &[Complex64], target: Complex64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in values.iter().enumerate() {
        let d = (z - target).norm();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Sum over estimated eigenvalues of the distance to the nearest true one.
/// With `exclude_near_unity` the estimate closest to 1 is dropped first.
pub fn spectral_distance(estimated: &[Complex64], truth: &[Complex64], exclude_near_unity: bool) -> Result<SpectrumReport> {
    if truth.is_empty() {
        return invalid("the true spectrum is empty");
    }
    let mut est = estimated.to_vec();
    if exclude_near_unity {
        if let Some(i) = nearest_index(&est, Complex64::new(1.0, 0.0)) {
            est.remove(i);
        }
    }
    let per: Vec<f64> = est
        .iter()
        .map(|z| {
            let j = nearest_index(truth, *z).expect("truth is nonempty");
            (z - truth[j]).norm()
        })
        .collect();
    Ok(SpectrumReport {
        matched_distance: per.iter().sum(),
        excluded_near_unity: exclude_near_unity,
        n_estimated: est.len(),
        n_true: truth.len(),
        per_eigen_distances: per,
    })
}

/// One-to-one pairing minimizing the summed distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `pairs[i] = j` pairs `a[i]` with `b[j]`.
    pub pairs: Vec<usize>,
    pub distances: Vec<f64>,
    pub total: f64,
    pub max: f64,
}

/// Optimal assignment between two equally sized eigenvalue lists.
pub fn optimal_matching(a: &[Complex64], b: &[Complex64]) -> Result<Matching> {
    if a.len() != b.len() {
        return invalid(format!("cannot match lists of length {} and {}", a.len(), b.len()));
    }
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let pairs = hungarian(&cost);
    let distances: Vec<f64> = pairs.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    Ok(Matching {
        total: distances.iter().sum(),
        max: distances.iter().copied().fold(0.0, f64::max),
        pairs,
        distances,
    })
}

/// Shortest augmenting path assignment with row/column potentials, `O(n^3)`.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // 1-based arrays; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            pairs[owner[j] - 1] = j - 1;
        }
    }
    pairs
}

/// Append zeros until the list has `len` entries (the rest of a rank-deficient operator's spectrum).
pub fn pad_with_zeros(values: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = values.to_vec();
    out.resize(len.max(values.len()), Complex64::new(0.0, 0.0));
    out
}

/// Copy of `values` with the entry nearest `target` replaced by `with`.
pub fn replace_nearest(values: &[Complex64], target: Complex64, with: Complex64) -> Vec<Complex64> {
    let mut out = values.to_vec();
    if let Some(i) = nearest_index(&out, target) {
        out[i] = with;
    }
    out
}

/// Largest distance from an eigenvalue to the nearest `order`-th root of unity.
pub fn roots_of_unity_distance(eigenvalues: &[Complex64], order: usize) -> Result<f64> {
    if order < 2 {
        return invalid("order must be at least 2");
    }
    let step = 2.0 * PI / order as f64;
    Ok(eigenvalues
        .iter()
        .map(|z| {
            let k = (z.arg() / step).round();
            (z - Complex64::from_polar(1.0, k * step)).norm()
        })
        .fold(0.0, f64::max))
}

/// `X - mu 1^T` with `mu` the mean over all columns of `X`.
pub fn total_mean_subtracted(x: &RealMatrix) -> RealMatrix {
    let mu = x.column_mean();
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col -= &mu;
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("slope needs two equally long lists with at least 2 points");
    }
    if x.iter().chain(y).any(|&v| v.is_nan() || v <= 0.0) {
        return invalid("log-log slope needs positive values");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweepConfig {
    pub etas: Vec<f64>,
    pub realizations: usize,
    /// Number of snapshot pairs.
    pub t: usize,
    pub base_seed: u64,
}

/// `count` values evenly spaced in log between `lo` and `hi`.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSweepResult {
    pub etas: Vec<f64>,
    pub median_distance_centered: Vec<f64>,
    pub median_distance_uncentered: Vec<f64>,
    pub realizations: usize,
    pub rank_centered: usize,
    pub rank_uncentered: usize,
}

/// Median eigenvalue error of centered and uncentered DMD under measurement noise.
///
/// Each method runs at the exact rank of its noiseless input (uncentered or
/// centered `X1`), so only perturbation of the eigenvalues is measured. The
/// uncentered spectrum has its eigenvalue nearest 1 excluded.
pub fn noise_sweep(spec: &LinearSystemSpec, x1: &RealVector, cfg: &NoiseSweepConfig) -> Result<NoiseSweepResult> {
    if cfg.realizations == 0 {
        return invalid("at least one realization is required");
    }
    if cfg.etas.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
        return invalid("noise levels must be finite and nonnegative");
    }
    let clean = synth::simulate(spec, x1, cfg.t, None)?;
    let clean_pair = split_snapshots(&clean)?;
    let rank_uncentered = linalg::effective_rank(clean_pair.x1(), RankMethod::exact(), None)?.r;
    let centered_x1 = {
        let mut c = clean_pair.x1().clone();
        let mu = c.column_mean();
        c.column_iter_mut().for_each(|mut col| col -= &mu);
        c
    };
    let rank_centered = linalg::effective_rank(&centered_x1, RankMethod::exact(), None)?.r;

    let cells: Vec<(usize, usize)> =
        (0..cfg.etas.len()).flat_map(|i| (0..cfg.realizations).map(move |k| (i, k))).collect();
    let results: Vec<Result<(f64, f64)>> = cells
        .par_iter()
        .map(|&(i, k)| {
            let seed = synth::derive_seed(cfg.base_seed, i as u64, k as u64);
            let y = synth::add_noise(&clean, &NoiseSpec::gaussian(cfg.etas[i], seed))?;
            let pair = split_snapshots(&y)?;
            let cent = centered_dmd(&pair, Some(rank_centered))?;
            let unc = exact_dmd(&pair, Some(rank_uncentered))?;
            let dc = spectral_distance(&cent.base.eigenvalues, &spec.eigenvalues, false)?.matched_distance;
            let du = spectral_distance(&unc.eigenvalues, &spec.eigenvalues, true)?.matched_distance;
            Ok((dc, du))
        })
        .collect();

    let mut med_c = Vec::with_capacity(cfg.etas.len());
    let mut med_u = Vec::with_capacity(cfg.etas.len());
    for row in results.chunks(cfg.realizations) {
        let mut dc = Vec::with_capacity(row.len());
        let mut du = Vec::with_capacity(row.len());
        for cell in row {
            let (c, u) = cell.as_ref().map_err(|e| crate::DmdError::InvalidInput(e.to_string()))?;
            dc.push(*c);
            du.push(*u);
        }
        med_c.push(median(&dc));
        med_u.push(median(&du));
    }
    Ok(NoiseSweepResult {
        etas: cfg.etas.clone(),
        median_distance_centered: med_c,
        median_distance_uncentered: med_u,
        realizations: cfg.realizations,
        rank_centered,
        rank_uncentered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Dft,
    Dmd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSpectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub method: SpectrumMethod,
}

impl PowerSpectrum {
    /// Total power in bins within `half_width` Hz of `f`.
    pub fn power_near(&self, f: f64, half_width: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.power)
            .filter(|(fr, _)| (*fr - f).abs() <= half_width)
            .map(|(_, p)| p)
            .sum()
    }

    /// Frequency of the largest power entry.
    pub fn peak_frequency(&self) -> Option<f64> {
        self.power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.frequencies[i])
    }
}

/// One-sided power of the `1/N`-normalized temporal DFT, summed over channels.
/// Bins sum to the mean square of the signal summed over channels.
pub fn dft_power_spectrum(x: &RealMatrix, fs: f64) -> Result<PowerSpectrum> {
    let n = x.ncols();
    if n < 2 {
        return invalid("the DFT needs at least 2 samples");
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return invalid("sampling rate must be positive");
    }
    linalg::ensure_finite(x, "signal")?;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let half = n / 2;
    let mut power = vec![0.0; half + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for row in x.row_iter() {
        for (b, v) in buf.iter_mut().zip(row.iter()) {
            *b = Complex64::new(*v, 0.0);
        }
        fft.process(&mut buf);
        for (k, p) in power.iter_mut().enumerate() {
            let mag = buf[k].norm_sqr() / (n * n) as f64;
            let mirrored = k != 0 && !(n.is_multiple_of(2) && k == half);
            *p += if mirrored { 2.0 * mag } else { mag };
        }
    }
    let frequencies = (0..=half).map(|k| k as f64 * fs / n as f64).collect();
    Ok(PowerSpectrum { frequencies, power, method: SpectrumMethod::Dft })
}

/// Each eigenvalue becomes a line at `|arg lambda| / (2 pi dt)` Hz with power
/// `|a|^2 ||phi||^2`; lines at the same frequency (conjugate pairs) are summed.
pub fn dmd_power_spectrum(model: &DmdModel, dt: f64) -> Result<PowerSpectrum> {
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid("dt must be positive");
    }
    let mut lines: Vec<(f64, f64)> = model
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, lam)| {
            let f = lam.arg().abs() / (2.0 * PI * dt);
            let p = model.amplitudes[i].norm_sqr() * model.modes.column(i).norm_squared();
            (f, p)
        })
        .collect();
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut frequencies: Vec<f64> = Vec::new();
    let mut power: Vec<f64> = Vec::new();
    for (f, p) in lines {
        match frequencies.last() {
            Some(&last) if (f - last).abs() <= 1e-9 * f.abs().max(1.0) => *power.last_mut().unwrap() += p,
            _ => {
                frequencies.push(f);
                power.push(p);
            }
        }
    }
    Ok(PowerSpectrum { frequencies, power, method: SpectrumMethod::Dmd })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identical_spectra_have_zero_distance() {
        let t = [c(0.9, 0.0), c(0.0, 0.5), c(0.0, -0.5)];
        assert_eq!(spectral_distance(&t, &t, false).unwrap().matched_distance, 0.0);
    }

    #[test]
    fn unit_eigenvalue_is_excluded() {
        let r = spectral_distance(&[c(1.0, 0.0), c(0.9, 0.0)], &[c(0.9, 0.0)], true).unwrap();
        assert_eq!(r.matched_distance, 0.0);
        assert_eq!(r.n_estimated, 1);
    }

    #[test]
    fn nearest_distance_hand_example() {
        let r = spectral_distance(&[c(0.91, 0.0), c(0.49, 0.0)], &[c(0.9, 0.0), c(0.5, 0.0)], false).unwrap();
        assert!((r.matched_distance - 0.02).abs() < 1e-12);
        assert!(spectral_distance(&[c(1.0, 0.0)], &[], false).is_err());
    }

    #[test]
    fn matching_beats_greedy() {
        // Greedy would pair 0 with 0.1 and leave 1.0 for 0.2.
        let a = [c(0.1, 0.0), c(1.0, 0.0)];
        let b = [c(0.2, 0.0), c(0.0, 0.0)];
        let m = optimal_matching(&a, &b).unwrap();
        assert_eq!(m.pairs, vec![1, 0]);
        assert!((m.total - 0.9).abs() < 1e-12);
    }

    #[test]
    fn roots_of_unity() {
        let eighth: Vec<Complex64> = (0..8).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 8.0)).collect();
        assert!(roots_of_unity_distance(&eighth, 8).unwrap() < 1e-15);
        assert!((roots_of_unity_distance(&[c(0.9, 0.0)], 8).unwrap() - 0.1).abs() < 1e-12);
        assert!(roots_of_unity_distance(&eighth, 1).is_err());
    }

    #[test]
    fn dft_of_constant_signal() {
        let x = RealMatrix::from_element(2, 10, 3.0);
        let s = dft_power_spectrum(&x, 10.0).unwrap();
        assert!((s.power[0] - 18.0).abs() < 1e-12);
        assert!(s.power[1..].iter().all(|&p| p < 1e-24));
    }

    #[test]
    fn loglog_slope_of_line() {
        let x = [1.0, 10.0, 100.0];
        let y = [2.0, 20.0, 200.0];
        assert!((loglog_slope(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn padding_and_replacement() {
        let v = pad_with_zeros(&[c(1.0, 0.0)], 3);
        assert_eq!(v.len(), 3);
        let w = replace_nearest(&[c(0.5, 0.0), c(0.99, 0.0)], c(1.0, 0.0), c(0.0, 0.0));
        assert_eq!(w, vec![c(0.5, 0.0), c(0.0, 0.0)]);
    }
}
