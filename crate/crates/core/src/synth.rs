//! Data generators: linear and affine systems with a chosen spectrum, forcing,
//! measurement noise, the Lorenz system and two synthetic surrogates (a
//! surveillance-style video and multichannel recordings with line noise).
//!
//! Every generator is a deterministic function of its seed.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, DmdError, Result};
use crate::linalg;
use crate::{Complex64, ComplexMatrix, ComplexVector, RealMatrix, RealVector};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mix a base seed with two indices into an independent stream seed.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a simple combination
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `A = V diag(lambda) V^+` with an optional constant bias `b`.
#[derive(Debug, Clone)]
pub struct LinearSystemSpec {
    pub n: usize,
    pub r: usize,
    pub eigenvalues: Vec<Complex64>,
    /// `n x r`, unit-norm columns, conjugate-closed.
    pub eigenvectors: ComplexMatrix,
    pub bias: Option<RealVector>,
    pub seed: u64,
}

const MIN_SEPARATION: f64 = 1e-6;

fn is_conjugate_closed(vals: &[Complex64], tol: f64) -> bool {
    vals.iter().all(|a| vals.iter().any(|b| (a.conj() - b).norm() <= tol))
}

fn check_spectrum(vals: &[Complex64]) -> Result<()> {
    if vals.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return invalid("eigenvalues must be finite");
    }
    for (i, a) in vals.iter().enumerate() {
        if vals[..i].iter().any(|b| (a - b).norm() <= MIN_SEPARATION) {
            return invalid(format!("eigenvalue {a} is repeated"));
        }
    }
    if !is_conjugate_closed(vals, 1e-12) {
        return invalid("eigenvalues must be closed under conjugation");
    }
    Ok(())
}

impl LinearSystemSpec {
    /// Build from an explicit eigendecomposition.
    pub fn from_eigen(eigenvalues: Vec<Complex64>, eigenvectors: ComplexMatrix, bias: Option<RealVector>) -> Result<Self> {
        let n = eigenvectors.nrows();
        let r = eigenvalues.len();
        if n == 0 {
            return invalid("state dimension must be at least 1");
        }
        if eigenvectors.ncols() != r {
            return invalid(format!("{} eigenvectors for {} eigenvalues", eigenvectors.ncols(), r));
        }
        if r > n {
            return invalid(format!("rank {r} exceeds dimension {n}"));
        }
        check_spectrum(&eigenvalues)?;
        if let Some(b) = &bias {
            if b.len() != n {
                return invalid(format!("bias has length {}, expected {n}", b.len()));
            }
        }
        if r > 0 {
            let est = linalg::effective_rank(&eigenvectors, linalg::RankMethod::exact(), None)?;
            if est.r < r {
                return invalid("eigenvector matrix must have full column rank");
            }
        }
        let spec = Self { n, r, eigenvalues, eigenvectors, bias, seed: 0 };
        let a = spec.operator_complex()?;
        let peak = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        if a.iter().any(|z| z.im.abs() > 1e-9 * peak) {
            return invalid("eigenvectors are not conjugate-closed: the operator is not real");
        }
        Ok(spec)
    }

    pub fn with_bias(mut self, bias: RealVector) -> Result<Self> {
        if bias.len() != self.n {
            return invalid(format!("bias has length {}, expected {}", bias.len(), self.n));
        }
        self.bias = Some(bias);
        Ok(self)
    }

    /// Attach a standard normal bias drawn from `seed`.
    pub fn with_random_bias(self, seed: u64) -> Result<Self> {
        let mut g = rng(seed);
        let b = DVector::from_fn(self.n, |_, _| g.sample::<f64, _>(StandardNormal));
        self.with_bias(b)
    }

    fn operator_complex(&self) -> Result<ComplexMatrix> {
        if self.r == 0 {
            return Ok(ComplexMatrix::zeros(self.n, self.n));
        }
        let v = &self.eigenvectors;
        let mut vl = v.clone();
        for (j, mut col) in vl.column_iter_mut().enumerate() {
            col *= self.eigenvalues[j];
        }
        Ok(vl * linalg::pinv(v, linalg::EXACT_REL_TOL)?)
    }

    /// The real propagator `A`.
    pub fn operator(&self) -> Result<RealMatrix> {
        Ok(self.operator_complex()?.map(|z| z.re))
    }

    /// `c` with `c = A c + b`, when the bias is set and `I - A` is invertible.
    pub fn fixed_point(&self) -> Result<Option<RealVector>> {
        let Some(b) = &self.bias else { return Ok(None) };
        let m = RealMatrix::identity(self.n, self.n) - self.operator()?;
        Ok(m.lu().solve(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    /// Moduli uniform in `[0.8, 1.05]`, angles uniform.
    UnitAnnulus,
    /// Half the moduli in `[0.5, 0.95]`, the rest in `[1.05, 1.3]`.
    MixedStableUnstable,
    /// As `UnitAnnulus` with one eigenvalue exactly 1.
    UnitAnnulusWithUnit,
    /// A fixed, conjugate-closed list of length `r`.
    Prescribed(Vec<Complex64>),
}

/// Separation enforced between random eigenvalues, from each other, from
/// their conjugates and from 1.
const DRAW_SEPARATION: f64 = 0.05;
const MAX_COND: f64 = 100.0;
const MAX_TRIES: usize = 10_000;

fn draw_modulus(g: &mut ChaCha8Rng, placement: &Placement, k: usize) -> f64 {
    match placement {
        Placement::MixedStableUnstable if (k / 2).is_multiple_of(2) => g.random_range(0.5..0.95),
        Placement::MixedStableUnstable => g.random_range(1.05..1.3),
        _ => g.random_range(0.8..1.05),
    }
}

fn random_spectrum(r: usize, placement: &Placement, g: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
    if let Placement::Prescribed(vals) = placement {
        if vals.len() != r {
            return invalid(format!("{} prescribed eigenvalues for rank {r}", vals.len()));
        }
        check_spectrum(vals)?;
        return Ok(vals.clone());
    }
    let mut vals: Vec<Complex64> = Vec::with_capacity(r);
    if *placement == Placement::UnitAnnulusWithUnit && r > 0 {
        vals.push(Complex64::new(1.0, 0.0));
    }
    let n_real = (r - vals.len()) % 2;
    let far = |z: Complex64, vals: &[Complex64]| {
        (z - 1.0).norm() >= DRAW_SEPARATION && vals.iter().all(|w| (z - w).norm() >= DRAW_SEPARATION)
    };
    let mut tries = 0;
    while vals.len() < r {
        tries += 1;
        if tries > MAX_TRIES {
            return Err(DmdError::NoConvergence("eigenvalue placement"));
        }
        let k = vals.len();
        let modulus = draw_modulus(g, placement, k);
        let remaining = r - vals.len();
        if remaining <= n_real {
            let z = Complex64::new(if g.random::<bool>() { modulus } else { -modulus }, 0.0);
            if far(z, &vals) {
                vals.push(z);
            }
        } else {
            let z = Complex64::from_polar(modulus, g.random_range(0.0..PI));
            if z.im >= DRAW_SEPARATION / 2.0 && far(z, &vals) && far(z.conj(), &vals) {
                vals.push(z);
                vals.push(z.conj());
            }
        }
    }
    Ok(vals)
}

fn gaussian_unit(g: &mut ChaCha8Rng, n: usize) -> RealVector {
    let v = DVector::from_fn(n, |_, _| g.sample::<f64, _>(StandardNormal));
    let norm = v.norm();
    v / norm
}

fn random_eigenvectors(n: usize, vals: &[Complex64], g: &mut ChaCha8Rng) -> Result<ComplexMatrix> {
    let r = vals.len();
    for _ in 0..MAX_TRIES {
        let mut v = ComplexMatrix::zeros(n, r);
        let mut j = 0;
        while j < r {
            if vals[j].im == 0.0 {
                v.set_column(j, &gaussian_unit(g, n).map(|x| Complex64::new(x, 0.0)));
                j += 1;
            } else {
                let (a, b) = (gaussian_unit(g, n), gaussian_unit(g, n));
                let mut col = ComplexVector::from_fn(n, |i, _| Complex64::new(a[i], b[i]));
                let norm = col.norm();
                col.unscale_mut(norm);
                let partner = vals[j + 1..].iter().position(|z| *z == vals[j].conj()).map(|p| p + j + 1);
                v.set_column(j, &col);
                match partner {
                    Some(p) if p == j + 1 => {
                        v.set_column(j + 1, &col.map(|z| z.conj()));
                        j += 2;
                    }
                    _ => return invalid("complex eigenvalues must be listed next to their conjugate"),
                }
            }
        }
        if r == 0 {
            return Ok(v);
        }
        let s = linalg::svd(&v)?.s;
        let smin = s[r - 1];
        if smin > 0.0 && s[0] / smin <= MAX_COND {
            return Ok(v);
        }
    }
    Err(DmdError::NoConvergence("well-conditioned eigenvector draw"))
}

/// Random real system of dimension `n` and rank `r`, no bias.
pub fn random_linear_system(n: usize, r: usize, placement: Placement, seed: u64) -> Result<LinearSystemSpec> {
    if n == 0 {
        return invalid("state dimension must be at least 1");
    }
    if r > n {
        return invalid(format!("rank {r} exceeds dimension {n}"));
    }
    let mut g = rng(seed);
    let vals = random_spectrum(r, &placement, &mut g)?;
    let vecs = random_eigenvectors(n, &vals, &mut g)?;
    let mut spec = LinearSystemSpec::from_eigen(vals, vecs, None)?;
    spec.seed = seed;
    Ok(spec)
}

/// Initial state whose coefficients on every eigenvector are nonzero.
///
/// The state is `c + V alpha` (just `V alpha` without a fixed point), with
/// `|alpha_i|` in `[0.5, 1.5]`, so the trajectory stays in an affine copy of
/// the range of `A`.
pub fn initial_state(spec: &LinearSystemSpec, seed: u64) -> Result<RealVector> {
    let mut g = rng(seed);
    let offset = spec.fixed_point()?.unwrap_or_else(|| RealVector::zeros(spec.n));
    for _ in 0..MAX_TRIES {
        let mut alpha = vec![Complex64::new(0.0, 0.0); spec.r];
        let mut j = 0;
        while j < spec.r {
            let m = g.random_range(0.5..1.5);
            if spec.eigenvalues[j].im == 0.0 {
                alpha[j] = Complex64::new(if g.random::<bool>() { m } else { -m }, 0.0);
                j += 1;
            } else {
                let z = Complex64::from_polar(m, g.random_range(0.0..2.0 * PI));
                alpha[j] = z;
                alpha[j + 1] = z.conj();
                j += 2;
            }
        }
        let fluct = &spec.eigenvectors * ComplexVector::from_vec(alpha);
        let x = &offset + fluct.map(|z| z.re);
        let xn = x.norm();
        let ok = (0..spec.r).all(|i| {
            let v = spec.eigenvectors.column(i);
            let dot: Complex64 = v.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
            dot.norm() > 1e-3 * xn * v.norm()
        });
        if ok {
            return Ok(x);
        }
    }
    Err(DmdError::NoConvergence("initial state draw"))
}

/// Initial state `d + V alpha` for a forced system, where `d = (lambda I - A)^-1 b`
/// is the particular solution, so the trajectory has rank `r + 1`.
pub fn initial_state_forced(spec: &LinearSystemSpec, forcing: Complex64, seed: u64) -> Result<ComplexVector> {
    let Some(b) = &spec.bias else { return invalid("forcing requires a bias vector") };
    let a = spec.operator_complex()?;
    let m = ComplexMatrix::identity(spec.n, spec.n) * forcing - a;
    let d = m
        .lu()
        .solve(&b.map(|v| Complex64::new(v, 0.0)))
        .ok_or_else(|| DmdError::InvalidInput("forcing eigenvalue is an eigenvalue of A".into()))?;
    let unforced = LinearSystemSpec { bias: None, ..spec.clone() };
    let fluct = initial_state(&unforced, seed)?;
    Ok(d + fluct.map(|v| Complex64::new(v, 0.0)))
}

fn check_sim_args(spec: &LinearSystemSpec, x1_len: usize, t: usize, forcing: Option<Complex64>) -> Result<()> {
    if t == 0 {
        return invalid("T must be at least 1");
    }
    if x1_len != spec.n {
        return invalid(format!("initial state has length {x1_len}, expected {}", spec.n));
    }
    if forcing.is_some() && spec.bias.is_none() {
        return invalid("forcing requires a bias vector");
    }
    Ok(())
}

/// Complex trajectory `x_{j+1} = A x_j + b lambda^(j-1)` (or `+ b`, or no bias).
pub fn simulate_complex(
    spec: &LinearSystemSpec,
    x1: &ComplexVector,
    t: usize,
    forcing: Option<Complex64>,
) -> Result<ComplexMatrix> {
    check_sim_args(spec, x1.len(), t, forcing)?;
    let a = spec.operator_complex()?;
    let b = spec.bias.as_ref().map(|b| b.map(|v| Complex64::new(v, 0.0)));
    let mut x = ComplexMatrix::zeros(spec.n, t + 1);
    x.set_column(0, x1);
    let mut pow = Complex64::new(1.0, 0.0);
    for j in 0..t {
        let mut next = &a * x.column(j);
        if let Some(b) = &b {
            next += b * forcing.map_or(Complex64::new(1.0, 0.0), |_| pow);
        }
        x.set_column(j + 1, &next);
        if let Some(l) = forcing {
            pow *= l;
        }
    }
    Ok(x)
}

/// Real trajectory with `T + 1` columns. Fails if a complex forcing would make the data complex.
pub fn simulate(spec: &LinearSystemSpec, x1: &RealVector, t: usize, forcing: Option<Complex64>) -> Result<RealMatrix> {
    check_sim_args(spec, x1.len(), t, forcing)?;
    match forcing {
        Some(l) if l.im != 0.0 => {
            let xc = simulate_complex(spec, &x1.map(|v| Complex64::new(v, 0.0)), t, forcing)?;
            let peak = xc.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            if xc.iter().any(|z| z.im.abs() > 1e-10 * peak) {
                return invalid("a non-real forcing eigenvalue gives complex data; use simulate_complex");
            }
            Ok(xc.map(|z| z.re))
        }
        _ => {
            let a = spec.operator()?;
            let mut x = RealMatrix::zeros(spec.n, t + 1);
            x.set_column(0, x1);
            let mut pow = 1.0;
            for j in 0..t {
                let mut next = &a * x.column(j);
                if let Some(b) = &spec.bias {
                    next += b * pow;
                }
                x.set_column(j + 1, &next);
                if let Some(l) = forcing {
                    pow *= l.re;
                }
            }
            Ok(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseDistribution {
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub eta: f64,
    pub seed: u64,
    pub distribution: NoiseDistribution,
}

impl NoiseSpec {
    pub fn gaussian(eta: f64, seed: u64) -> Self {
        Self { eta, seed, distribution: NoiseDistribution::Gaussian }
    }
}

/// `Y = X + eta Z` with i.i.d. standard normal `Z`, drawn in column-major order.
pub fn add_noise(x: &RealMatrix, noise: &NoiseSpec) -> Result<RealMatrix> {
    if !(noise.eta >= 0.0 && noise.eta.is_finite()) {
        return invalid("noise level must be finite and nonnegative");
    }
    if noise.eta == 0.0 {
        return Ok(x.clone());
    }
    let mut g = rng(noise.seed);
    let mut y = x.clone();
    match noise.distribution {
        NoiseDistribution::Gaussian => {
            for v in y.iter_mut() {
                *v += noise.eta * g.sample::<f64, _>(StandardNormal);
            }
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    /// Number of stored states, including the initial one.
    pub steps: usize,
    pub x0: [f64; 3],
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0, dt: 0.001, steps: 4800, x0: [6.7673, 6.1253, 25.8706] }
    }
}

impl LorenzParams {
    pub fn fixed_point(&self) -> [f64; 3] {
        let s = (self.beta * (self.rho - 1.0)).sqrt();
        [s, s, self.rho - 1.0]
    }

    fn field(&self, x: [f64; 3]) -> [f64; 3] {
        [
            self.sigma * (x[1] - x[0]),
            x[0] * (self.rho - x[2]) - x[1],
            x[0] * x[1] - self.beta * x[2],
        ]
    }
}

fn axpy3(x: [f64; 3], h: f64, k: [f64; 3]) -> [f64; 3] {
    [x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]]
}

/// Classical fourth-order Runge-Kutta; returns `3 x steps` with `x0` first.
pub fn lorenz_rk4(p: &LorenzParams) -> Result<RealMatrix> {
    if !(p.dt > 0.0 && p.dt.is_finite()) {
        return invalid("dt must be positive");
    }
    if p.steps == 0 {
        return invalid("steps must be at least 1");
    }
    let mut out = RealMatrix::zeros(3, p.steps);
    let mut x = p.x0;
    let h = p.dt;
    for j in 0..p.steps {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DmdError::IntegrationOverflow { step: j });
        }
        out.column_mut(j).copy_from_slice(&x);
        let k1 = p.field(x);
        let k2 = p.field(axpy3(x, h / 2.0, k1));
        let k3 = p.field(axpy3(x, h / 2.0, k2));
        let k4 = p.field(axpy3(x, h, k3));
        for i in 0..3 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(out)
}

/// Static scene with a bright block cycling through `period` positions.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoConfig {
    pub height: usize,
    pub width: usize,
    /// Number of snapshot pairs; the video has `t + 1` frames.
    pub t: usize,
    pub period: usize,
    pub block: usize,
    pub block_intensity: f64,
    pub moving_block: bool,
    pub noise: f64,
    pub seed: u64,
}

impl Default for VideoConfig {
    fn default() -> Self {
        Self {
            height: 24,
            width: 32,
            t: 39,
            period: 5,
            block: 4,
            block_intensity: 0.8,
            moving_block: true,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// Frames as columns, pixels in row-major order.
pub fn synth_video(cfg: &VideoConfig) -> Result<RealMatrix> {
    let (h, w) = (cfg.height, cfg.width);
    if cfg.t < 2 {
        return invalid("the video needs at least 3 frames");
    }
    if h == 0 || w == 0 {
        return invalid("frame size must be positive");
    }
    if cfg.moving_block && (cfg.period == 0 || cfg.block == 0 || cfg.block > h || cfg.block * cfg.period > w) {
        return invalid("block positions must fit side by side in the frame width");
    }
    let mut g = rng(cfg.seed);
    // Smooth background: offset plus a few low spatial frequencies.
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                g.random_range(0.05..0.2),
                g.random_range(0.5..2.0),
                g.random_range(0.5..2.0),
                g.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let background = DVector::from_fn(h * w, |p, _| {
        let (y, x) = ((p / w) as f64 / h as f64, (p % w) as f64 / w as f64);
        0.5 + waves.iter().map(|&(a, fy, fx, ph)| a * (2.0 * PI * (fy * y + fx * x) + ph).cos()).sum::<f64>()
    });
    let row0 = g.random_range(0..=h - cfg.block.min(h));
    let gap = if cfg.moving_block { (w - cfg.block * cfg.period) / cfg.period } else { 0 };

    let mut out = RealMatrix::zeros(h * w, cfg.t + 1);
    for j in 0..=cfg.t {
        let mut frame = background.clone();
        if cfg.moving_block {
            let col0 = (j % cfg.period) * (cfg.block + gap);
            for dy in 0..cfg.block {
                for dx in 0..cfg.block {
                    frame[(row0 + dy) * w + col0 + dx] += cfg.block_intensity;
                }
            }
        }
        out.set_column(j, &frame);
    }
    add_noise(&out, &NoiseSpec::gaussian(cfg.noise, derive_seed(cfg.seed, 1, 0)))
}

/// Multichannel recording: low-frequency oscillations, a common line tone and white noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LineNoiseConfig {
    pub channels: usize,
    pub fs: f64,
    pub duration: f64,
    pub f0: f64,
    pub oscillators: usize,
    pub line_amplitude: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for LineNoiseConfig {
    fn default() -> Self {
        Self { channels: 64, fs: 1000.0, duration: 5.0, f0: 60.0, oscillators: 3, line_amplitude: 1.0, noise: 0.05, seed: 0 }
    }
}

impl LineNoiseConfig {
    pub fn samples(&self) -> usize {
        (self.fs * self.duration).round() as usize
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fs
    }

    /// The line tone's one-step eigenvalue `exp(2 pi i f0 dt)`.
    pub fn line_eigenvalue(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.f0 / self.fs)
    }
}

pub fn synth_line_noise(cfg: &LineNoiseConfig) -> Result<RealMatrix> {
    if !(cfg.fs > 0.0 && cfg.duration > 0.0 && cfg.f0 >= 0.0) {
        return invalid("sampling rate, duration and line frequency must be positive");
    }
    if cfg.f0 >= cfg.fs / 2.0 {
        return invalid(format!("line frequency {} Hz is not below the Nyquist frequency {} Hz", cfg.f0, cfg.fs / 2.0));
    }
    let samples = cfg.samples();
    if cfg.channels == 0 || samples < 2 {
        return invalid("need at least one channel and two samples");
    }
    let mut g = rng(cfg.seed);
    // (frequency, per-channel amplitude and phase)
    let mut components: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    let draw = |g: &mut ChaCha8Rng, lo: f64, hi: f64| -> Vec<(f64, f64)> {
        (0..cfg.channels).map(|_| (g.random_range(lo..hi), g.random_range(0.0..2.0 * PI))).collect()
    };
    for _ in 0..cfg.oscillators {
        let f = g.random_range(3.0..30.0);
        let per = draw(&mut g, 0.5, 1.5);
        components.push((f, per));
    }
    let line = draw(&mut g, 0.5 * cfg.line_amplitude, 1.5 * cfg.line_amplitude);
    components.push((cfg.f0, line));

    let mut x = RealMatrix::zeros(cfg.channels, samples);
    for (f, per) in &components {
        let omega = 2.0 * PI * f / cfg.fs;
        for (ch, &(amp, phase)) in per.iter().enumerate() {
            for k in 0..samples {
                x[(ch, k)] += amp * (omega * k as f64 + phase).cos();
            }
        }
    }
    add_noise(&x, &NoiseSpec::gaussian(cfg.noise, derive_seed(cfg.seed, 2, 0)))
}
