//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use centered_dmd::analysis::{
    dft_power_spectrum, logspace, loglog_slope, nearest_index, noise_sweep, optimal_matching, pad_with_zeros,
    replace_nearest, roots_of_unity_distance, spectral_distance, total_mean_subtracted, NoiseSweepConfig,
};
use centered_dmd::dmd::{
    centered_dmd, companion_dmd, consistency_residual, exact_dmd, frequency_subtracted_dmd, split_snapshots,
    subtract_frequencies,
};
use centered_dmd::linalg::{self, centered_pinv_update, effective_rank, RankMethod, UpdateBranch};
use centered_dmd::synth::{
    self, add_noise, initial_state, initial_state_forced, lorenz_rk4, random_linear_system, simulate,
    simulate_complex, synth_line_noise, synth_video, LineNoiseConfig, LinearSystemSpec, LorenzParams, NoiseSpec,
    Placement, VideoConfig,
};
use centered_dmd::{Complex64, ComplexMatrix, RealMatrix};
use nalgebra::{dmatrix, dvector};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn affine_system(n: usize, r: usize, placement: Placement, seed: u64) -> LinearSystemSpec {
    random_linear_system(n, r, placement, seed).unwrap().with_random_bias(seed ^ 0xB1A5).unwrap()
}

fn trajectory(spec: &LinearSystemSpec, t: usize, seed: u64) -> RealMatrix {
    let x1 = initial_state(spec, seed ^ 0x5EED).unwrap();
    simulate(spec, &x1, t, None).unwrap()
}

fn centered_columns(x: &RealMatrix) -> RealMatrix {
    let mu = x.column_mean();
    let mut out = x.clone();
    out.column_iter_mut().for_each(|mut col| col -= &mu);
    out
}

fn golden_example() -> Outcome {
    let spec = LinearSystemSpec::from_eigen(vec![c(2.0, 0.0), c(3.0, 0.0)], ComplexMatrix::identity(2, 2), Some(dvector![1.0, 2.0]))
        .unwrap();
    let x = simulate(&spec, &dvector![1.0, 1.0], 3, None).unwrap();
    let pair = split_snapshots(&x).unwrap();
    let data_ok = *pair.x1() == dmatrix![1.0, 3.0, 7.0; 1.0, 5.0, 17.0]
        && *pair.x2() == dmatrix![3.0, 7.0, 15.0; 5.0, 17.0, 53.0];
    let residual = consistency_residual(&pair).unwrap();
    let model = centered_dmd(&pair, None).unwrap();
    let eig_err = optimal_matching(&model.base.eigenvalues, &[c(2.0, 0.0), c(3.0, 0.0)]).unwrap().max;
    let bias_err = (&model.bias - dvector![1.0, 2.0]).amax();
    // Oracle: solve (I - A) c = b directly.
    let oracle = (RealMatrix::identity(2, 2) - dmatrix![2.0, 0.0; 0.0, 3.0]).lu().solve(&dvector![1.0, 2.0]).unwrap();
    let c_err = model.fixed_point.as_ref().map_or(f64::INFINITY, |fp| (fp - &oracle).amax());
    let passed = data_ok && residual > 1e-3 && eig_err < 1e-10 && bias_err < 1e-10 && c_err < 1e-10;
    Outcome::new(
        passed,
        format!("data exact={data_ok} residual={residual:.3e} eig_err={eig_err:.1e} bias_err={bias_err:.1e} c_err={c_err:.1e}"),
    )
}

fn theorem_spectra() -> Outcome {
    let mut worst_unit: f64 = 0.0;
    let mut worst_plain: f64 = 0.0;
    let mut certificate_ok = true;
    for seed in 0..100u64 {
        // Alternate between n < T and n > T.
        let (n, r, t) = if seed % 2 == 0 { (10, 6, 20) } else { (30, 6, 15) };
        for (with_unit, worst) in [(true, &mut worst_unit), (false, &mut worst_plain)] {
            let placement = if with_unit { Placement::UnitAnnulusWithUnit } else { Placement::UnitAnnulus };
            let spec = random_linear_system(n, r, placement, seed).unwrap();
            let x = trajectory(&spec, t, seed);
            let pair = split_snapshots(&x).unwrap();
            let cert = linalg::unit_eigenvalue_certificate(pair.x1(), &x, 1e-8).unwrap();
            certificate_ok &= cert == with_unit;
            let unc = exact_dmd(&pair, None).unwrap();
            let cen = centered_dmd(&pair, None).unwrap();
            let mut expected = pad_with_zeros(&unc.eigenvalues, n);
            if with_unit {
                expected = replace_nearest(&expected, c(1.0, 0.0), c(0.0, 0.0));
            }
            let got = pad_with_zeros(&cen.base.eigenvalues, n);
            let d = optimal_matching(&expected, &got).unwrap().total;
            *worst = worst.max(d);
        }
    }
    let passed = certificate_ok && worst_unit < 1e-8 && worst_plain < 1e-8;
    Outcome::new(
        passed,
        format!("certificates agree={certificate_ok} worst matched distance: unit={worst_unit:.1e} no-unit={worst_plain:.1e}"),
    )
}

fn full_rank_affine() -> Outcome {
    let mut worst_err: f64 = 0.0;
    let mut min_rel_residual = f64::INFINITY;
    for seed in 0..100u64 {
        let spec = affine_system(6, 6, Placement::UnitAnnulus, seed);
        let x = trajectory(&spec, 20, seed);
        let pair = split_snapshots(&x).unwrap();
        let cen = centered_dmd(&pair, None).unwrap();
        worst_err = worst_err.max(optimal_matching(&cen.base.eigenvalues, &spec.eigenvalues).unwrap().max);
        let rel = consistency_residual(&pair).unwrap() / pair.x2().norm();
        min_rel_residual = min_rel_residual.min(rel);
    }
    let passed = worst_err < 1e-8 && min_rel_residual > 1e-8;
    Outcome::new(passed, format!("worst eigenvalue error={worst_err:.1e} smallest relative residual={min_rel_residual:.2e}"))
}

fn undersampled_reconstruction() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let spec = affine_system(20, 12, Placement::UnitAnnulus, seed);
        let x = trajectory(&spec, 8, seed);
        let pair = split_snapshots(&x).unwrap();
        let x1 = x.column(0).into_owned();
        let steps = x.ncols();
        let unc = exact_dmd(&pair, None).unwrap();
        let cen = centered_dmd(&pair, None).unwrap();
        let rel = |m: RealMatrix, target: &RealMatrix| (m - target).norm() / target.norm();
        worst = worst
            .max(rel(unc.iterate(&x1, steps).unwrap(), &x))
            .max(rel(cen.iterate(&x1, steps).unwrap(), &x))
            .max(rel(unc.predict_step(pair.x1()), pair.x2()))
            .max(rel(cen.predict_step(pair.x1()), pair.x2()));
    }
    Outcome::new(worst < 1e-8, format!("worst relative reconstruction error={worst:.1e} over 20 systems with T < r"))
}

fn noise_scaling() -> Outcome {
    // Linear system with a unit eigenvalue; the uncentered spectrum drops its eigenvalue nearest 1.
    let spec = random_linear_system(10, 7, Placement::UnitAnnulusWithUnit, 3).unwrap();
    let x1 = initial_state(&spec, 3).unwrap();
    let sweep = noise_sweep(
        &spec,
        &x1,
        &NoiseSweepConfig { etas: logspace(1e-6, 1e-2, 9), realizations: 100, t: 30, base_seed: 11 },
    )
    .unwrap();
    let slope_c = loglog_slope(&sweep.etas, &sweep.median_distance_centered).unwrap();
    let slope_u = loglog_slope(&sweep.etas, &sweep.median_distance_uncentered).unwrap();
    let mid = noise_sweep(&spec, &x1, &NoiseSweepConfig { etas: vec![0.005], realizations: 100, t: 30, base_seed: 12 })
        .unwrap();
    let ratio = mid.median_distance_centered[0] / mid.median_distance_uncentered[0];
    let passed = (slope_c - 1.0).abs() <= 0.15 && (slope_u - 1.0).abs() <= 0.15 && (0.5..=2.0).contains(&ratio);
    Outcome::new(
        passed,
        format!(
            "slopes centered={slope_c:.3} uncentered={slope_u:.3}; medians at 0.005: {:.3e} vs {:.3e} (ratio {ratio:.2}); ranks {}/{}",
            mid.median_distance_centered[0], mid.median_distance_uncentered[0], sweep.rank_centered, sweep.rank_uncentered
        ),
    )
}

fn dft_dichotomy() -> Outcome {
    let (n, r, t) = (10, 5, 7);
    let spec = affine_system(n, r, Placement::UnitAnnulus, 4);
    let x = trajectory(&spec, t, 4);
    let order = t + 1;

    let xt = total_mean_subtracted(&x);
    let rank = |m: &RealMatrix| effective_rank(m, RankMethod::exact(), None).unwrap().r;
    let rank_x1 = rank(&x.columns(0, t).into_owned());
    let rank_centered = rank(&xt.columns(0, t).into_owned());
    let clean = companion_dmd(&xt).unwrap();
    let clean_rou = roots_of_unity_distance(&clean.eigenvalues, order).unwrap();

    let eta = 1e-3;
    let y = add_noise(&x, &NoiseSpec::gaussian(eta, 40)).unwrap();
    let noisy = companion_dmd(&total_mean_subtracted(&y)).unwrap();
    let noisy_rou = roots_of_unity_distance(&noisy.eigenvalues, order).unwrap();
    let noisy_truth = spectral_distance(&noisy.eigenvalues, &spec.eigenvalues, false).unwrap().matched_distance;
    let cen = centered_dmd(&split_snapshots(&y).unwrap(), Some(r)).unwrap();
    let cen_dist = spectral_distance(&cen.base.eigenvalues, &spec.eigenvalues, false).unwrap().matched_distance;

    let passed = rank_centered + 1 == rank_x1
        && clean_rou > 1e-3
        && noisy_rou <= 1e-8
        && noisy_truth > 1e-2
        && cen_dist < 10.0 * eta;
    Outcome::new(
        passed,
        format!(
            "rank {rank_x1} -> {rank_centered}; noiseless roots-of-unity distance={clean_rou:.2e}; noisy: roots-of-unity distance={noisy_rou:.1e}, distance to truth={noisy_truth:.2e}, centered distance={cen_dist:.2e} (bound {:.0e})", 10.0 * eta
        ),
    )
}

fn fixed_frequency() -> Outcome {
    let lambda = c(0.0, -1.0);
    // The forcing eigenvalue must not be an eigenvalue of A.
    let (seed, spec) = (0u64..)
        .map(|s| (s, affine_system(10, 5, Placement::UnitAnnulus, s)))
        .find(|(_, sp)| sp.eigenvalues.iter().all(|z| (z - lambda).norm() > 0.05))
        .unwrap();
    let x1 = initial_state_forced(&spec, lambda, seed).unwrap();
    let x = simulate_complex(&spec, &x1, 9, Some(lambda)).unwrap();
    let pair = split_snapshots(&x).unwrap();

    let fixed = frequency_subtracted_dmd(&pair, &[lambda], None).unwrap();
    let fixed_err = if fixed.base.eigenvalues.len() == 5 {
        optimal_matching(&fixed.base.eigenvalues, &spec.eigenvalues).unwrap().max
    } else {
        f64::INFINITY
    };

    let plain = exact_dmd(&pair, None).unwrap();
    let i = nearest_index(&plain.eigenvalues, lambda).unwrap();
    let forcing_err = (plain.eigenvalues[i] - lambda).norm();
    let mut rest = plain.eigenvalues.clone();
    rest.remove(i);
    let rest_err = optimal_matching(&rest, &spec.eigenvalues).map_or(f64::INFINITY, |m| m.max);
    let passed = plain.rank_used == 6 && fixed_err < 1e-8 && forcing_err < 1e-8 && rest_err < 1e-8;
    Outcome::new(
        passed,
        format!(
            "subtracted: error={fixed_err:.1e}; plain rank {}: |lambda + i|={forcing_err:.1e}, remaining error={rest_err:.1e}",
            plain.rank_used
        ),
    )
}

fn rank_one_update() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut branches = [0usize; 2];
    for seed in 0..100u64 {
        let x1: RealMatrix = match seed % 4 {
            0 | 1 => {
                let placement = if seed % 4 == 0 { Placement::UnitAnnulusWithUnit } else { Placement::UnitAnnulus };
                let spec = random_linear_system(10, 5, placement, seed).unwrap();
                trajectory(&spec, 12, seed).columns(0, 12).into_owned()
            }
            2 => synth::add_noise(&RealMatrix::zeros(12, 6), &NoiseSpec::gaussian(1.0, seed)).unwrap(),
            _ => synth::add_noise(&RealMatrix::zeros(5, 12), &NoiseSpec::gaussian(1.0, seed)).unwrap(),
        };
        let update = centered_pinv_update(&x1).unwrap();
        branches[(update.branch == UpdateBranch::OnesOutsideRowSpace) as usize] += 1;
        let direct = linalg::pinv(&centered_columns(&x1), linalg::EXACT_REL_TOL).unwrap();
        worst = worst.max((&update.pinv - &direct).norm() / direct.norm());
    }
    let passed = worst < 1e-9 && branches[0] > 0 && branches[1] > 0;
    Outcome::new(
        passed,
        format!("worst relative error={worst:.1e}; branch counts in-row-space={} outside={}", branches[0], branches[1]),
    )
}

fn lorenz() -> Outcome {
    let params = LorenzParams::default();
    let x = lorenz_rk4(&params).unwrap();
    let clean = exact_dmd(&split_snapshots(&x).unwrap(), None).unwrap();
    let near_one = clean.eigenvalues.iter().map(|z| (z - 1.0).norm()).fold(f64::INFINITY, f64::min);

    let radius = |v: &[Complex64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut centered_outside = 0;
    let mut exact_inside = 0;
    for seed in 0..100u64 {
        let y = add_noise(&x, &NoiseSpec::gaussian(0.03, seed)).unwrap();
        let pair = split_snapshots(&y).unwrap();
        if radius(&centered_dmd(&pair, None).unwrap().base.eigenvalues) > 1.0 {
            centered_outside += 1;
        }
        if radius(&exact_dmd(&pair, None).unwrap().eigenvalues) < 1.0 {
            exact_inside += 1;
        }
    }
    let passed = near_one < 0.01 && centered_outside > 50 && exact_inside > 50;
    Outcome::new(
        passed,
        format!(
            "noiseless distance of nearest eigenvalue to 1={near_one:.2e}; noisy runs: centered max|lambda|>1 in {centered_outside}/100, exact max|lambda|<1 in {exact_inside}/100"
        ),
    )
}

fn video_background() -> Outcome {
    let x = synth_video(&VideoConfig::default()).unwrap();
    let pair = split_snapshots(&x).unwrap();
    let unc = exact_dmd(&pair, None).unwrap();
    let cen = centered_dmd(&pair, None).unwrap();
    let i = nearest_index(&unc.eigenvalues, c(1.0, 0.0)).unwrap();
    let stationary = unc.modes.column(i).into_owned();
    let mode_err = match &cen.fixed_point {
        Some(fp) => {
            let mut v = fp.map(|x| c(x, 0.0));
            linalg::canonicalize(&mut v);
            (stationary - v).norm()
        }
        None => f64::INFINITY,
    };
    let mut rest = unc.eigenvalues.clone();
    rest.remove(i);
    let spec_err = optimal_matching(&rest, &cen.base.eigenvalues).map_or(f64::INFINITY, |m| m.max);
    Outcome::new(
        mode_err < 1e-6 && spec_err < 1e-8,
        format!("stationary mode vs fixed point={mode_err:.1e}; non-background spectra difference={spec_err:.1e}"),
    )
}

fn line_noise() -> Outcome {
    let cfg = LineNoiseConfig::default();
    let x = synth_line_noise(&cfg).unwrap();
    let lam = cfg.line_eigenvalue();
    let fixed = [lam, lam.conj()];

    let before = dft_power_spectrum(&x, cfg.fs).unwrap();
    let cleaned: RealMatrix = subtract_frequencies(&x, &fixed).unwrap().map(|z| z.re);
    let after = dft_power_spectrum(&cleaned, cfg.fs).unwrap();
    let bin = cfg.fs / x.ncols() as f64;
    let (p_before, p_after) = (before.power_near(cfg.f0, bin / 2.0), after.power_near(cfg.f0, bin / 2.0));
    let reduction = p_before / p_after.max(f64::MIN_POSITIVE);

    let pair = split_snapshots(&x).unwrap();
    let projected: RealMatrix = subtract_frequencies(pair.x1(), &fixed).unwrap().map(|z| z.re);
    let r = effective_rank(&projected, RankMethod::OptimalHardThreshold, None).unwrap().r;
    let model = frequency_subtracted_dmd(&pair, &fixed, Some(r)).unwrap();
    let closest = model
        .base
        .eigenvalues
        .iter()
        .map(|z| (z - lam).norm().min((z - lam.conj()).norm()))
        .fold(f64::INFINITY, f64::min);
    Outcome::new(
        reduction >= 10.0 && closest > 1e-3,
        format!("60 Hz power {p_before:.3e} -> {p_after:.3e} (x{reduction:.1e}); rank {r}; nearest eigenvalue to the line pair at {closest:.2e}"),
    )
}

/// Name, check and optional wall-clock budget.
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("golden affine example", golden_example, Some(Duration::from_secs(1))),
        ("centered vs uncentered spectra on linear data", theorem_spectra, Some(Duration::from_secs(10))),
        ("full-rank affine recovery", full_rank_affine, None),
        ("undersampled data reconstruction", undersampled_reconstruction, None),
        ("noise scaling", noise_scaling, Some(Duration::from_secs(120))),
        ("mean subtraction vs temporal DFT", dft_dichotomy, Some(Duration::from_secs(1))),
        ("fixed-frequency subtraction", fixed_frequency, Some(Duration::from_secs(1))),
        ("centered pseudoinverse update", rank_one_update, Some(Duration::from_secs(5))),
        ("Lorenz stability", lorenz, Some(Duration::from_secs(60))),
        ("video background", video_background, None),
        ("line-noise removal", line_noise, Some(Duration::from_secs(30))),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Outcome::new(false, "panicked"));
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = outcome.passed && in_time;
        if !passed {
            failures += 1;
        }
        let budget_note = budget.map_or(String::new(), |b| format!(" / {:.0?}", b));
        println!(
            "[{}] {:>2}. {name}: {} ({:.2?}{budget_note})",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
