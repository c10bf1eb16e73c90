//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. Tolerances are pinned below.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;

use faer::Mat;
use fusion_spectra::kernel::{kernel_stack, pairwise_sq_dists};
use fusion_spectra::linalg::{median, numerical_rank, row_sum_defect, spectral_norm};
use fusion_spectra::model::{derive_seed, generate};
use fusion_spectra::reference::{build_reference, build_sh, surrogate_error};
use fusion_spectra::regime::{run_experiment, sweep, BandwidthConfig, SweepResult};
use fusion_spectra::rmt::{free_multiplicative_convolution, mc_free_conv, MpConvention, SolverOptions};
use fusion_spectra::{ExperimentConfig, MatrixKind, Measure, ModelConfig, ModelScalars};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROOT_SEED: u64 = 20240611;
const SWEEP_NS: [usize; 3] = [250, 500, 1000];

const C1_MEDIAN_REL: f64 = 0.02;
const C2_MEDIAN_REL: f64 = 0.07;
const C3_MAX_SLOPE: f64 = -0.3;
const C4_MAX_SLOPE: f64 = -0.35;
const C4_TAIL_CONST: f64 = 10.0;
const C5_MAX_NORM: f64 = 1e-6;
const C6_MAX_SLOPE: f64 = -0.35;
const C6_TAIL_CONST: f64 = 10.0;
const C7_ABS_CONST: f64 = 10.0;
const C7_EXTREME_REL: f64 = 0.07;
const C8_STOCHASTIC: f64 = 1e-10;
const C8_INEQ_SLACK: f64 = 1e-10;
const C8_RANK_TOL: f64 = 1e-8;
const C8_SURROGATE_K: f64 = 2.0;
const C8_MOMENT_REL: f64 = 0.01;
const C8_ROUND_TRIP: f64 = 1e-8;

type Check = (bool, String);
type Criterion = (&'static str, fn() -> Check);

fn geometry(n: usize, z1: f64, z2: f64) -> ModelConfig {
    ModelConfig::single_spike(n, 2 * n, 3 * n, z1, z2, 0)
}

fn classic(model: ModelConfig, trials: usize) -> ExperimentConfig {
    ExperimentConfig::new(model, BandwidthConfig::default(), trials, ROOT_SEED)
}

fn both_low_sweep() -> &'static SweepResult {
    static CELL: OnceLock<SweepResult> = OnceLock::new();
    CELL.get_or_init(|| sweep(&classic(geometry(500, 0.0, 0.0), 5), &SWEEP_NS, MatrixKind::Ncca).expect("sweep"))
}

fn criterion_1() -> Check {
    let n = 400;
    let scalars = ModelScalars::from_parts(1.0, [400.0, 800.0, 1200.0], [1.0, 1.0], [800.0, 1200.0]);
    let mu1 = scalars.nu_tilde(1, MpConvention::Gram).unwrap();
    let mu2 = scalars.nu_tilde(2, MpConvention::Gram).unwrap();
    let analytic = free_multiplicative_convolution(&mu1, &mu2, n, &SolverOptions::default()).unwrap();
    let mc = mc_free_conv(&mu1, &mu2, n, 50, ROOT_SEED).unwrap();
    let lo = (0.05 * n as f64).ceil() as usize;
    let hi = (0.95 * n as f64).floor() as usize;
    let rel: Vec<f64> = (lo..=hi)
        .map(|j| (analytic.quantiles[j - 1] - mc[j - 1]).abs() / analytic.quantiles[j - 1])
        .collect();
    let m = median(&rel).unwrap();
    (m <= C1_MEDIAN_REL, format!("median rel. deviation analytic vs Monte-Carlo = {m:.4} (≤ {C1_MEDIAN_REL})"))
}

fn criterion_2() -> Check {
    let r = both_low_sweep().reports.iter().find(|r| r.n == 500).unwrap();
    let s = r.summary_stat("free_convolution:median_rel").unwrap();
    let idx = &r.trials[0].comparisons[0].indices;
    let ok_idx = idx.first() == Some(&9) && idx.last() == Some(&475);
    (
        s.mean <= C2_MEDIAN_REL && ok_idx,
        format!(
            "n=500, 5 trials: mean median rel. error = {:.4} (≤ {C2_MEDIAN_REL}), indices {}..={}",
            s.mean,
            idx[0],
            idx[idx.len() - 1]
        ),
    )
}

fn criterion_3() -> Check {
    let sw = both_low_sweep();
    let f = sw.rate("free_convolution:median_rel").unwrap();
    (
        f.slope <= C3_MAX_SLOPE,
        format!("errors {:?} at n={:?}: slope = {:.3} (≤ {C3_MAX_SLOPE})", fmt(&f.values), f.ns, f.slope),
    )
}

fn fmt(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.3e}")).collect()
}

fn high_snr_sweep(z: f64, bandwidth: BandwidthConfig, norm: &str, max_slope: f64, tail_bound: impl Fn(f64) -> f64) -> Check {
    let cfg = ExperimentConfig::new(geometry(500, z, z), bandwidth, 2, ROOT_SEED);
    let sw = sweep(&cfg, &SWEEP_NS, MatrixKind::Ncca).unwrap();
    let f = sw.rate(norm).unwrap();
    let mut ok = f.slope <= max_slope;
    let mut tails = vec![];
    for r in &sw.reports {
        let t = r.summary_stat("tilde_s_tilde_s:tail").unwrap().max;
        let b = tail_bound(r.n as f64);
        ok &= t <= b;
        tails.push(format!("n={}: {t:.2e} ≤ {b:.2e}", r.n));
    }
    (
        ok,
        format!(
            "‖N − ref‖ = {:?}, slope = {:.3} (≤ {max_slope}); tails [{}]",
            fmt(&f.values),
            f.slope,
            tails.join(", ")
        ),
    )
}

fn criterion_4() -> Check {
    high_snr_sweep(1.5, BandwidthConfig::default(), "tilde_s_tilde_s", C4_MAX_SLOPE, |n| {
        C4_TAIL_CONST * n.powf((1.5 - 3.0) / 2.0)
    })
}

fn criterion_5() -> Check {
    let cfg = classic(geometry(300, 4.0, 4.0), 1);
    let n = run_experiment(&cfg, MatrixKind::Ncca).unwrap();
    let a = run_experiment(&cfg, MatrixKind::Ad).unwrap();
    let vn = n.summary_stat("identity").unwrap().max;
    let va = a.summary_stat("identity").unwrap().max;
    // Supplementary, not part of the verdict: two latent dimensions.
    let mut planar = geometry(300, 4.0, 4.0);
    planar.d1 = 2;
    planar.d2 = 2;
    planar.zeta1 = vec![4.0, 4.0];
    planar.zeta2 = vec![4.0, 4.0];
    let d2 = run_experiment(&classic(planar, 1), MatrixKind::Ncca).unwrap();
    let v2 = d2.summary_stat("identity").unwrap().max;
    (
        vn <= C5_MAX_NORM && va <= C5_MAX_NORM,
        format!(
            "regime {:?}: ‖N − I‖ = {vn:.3e}, ‖A − I‖ = {va:.3e} (≤ {C5_MAX_NORM:e}); supplementary d=2: ‖N − I‖ = {v2:.3e}",
            n.thresholds.regime
        ),
    )
}

fn criterion_6() -> Check {
    high_snr_sweep(2.5, BandwidthConfig::percentile(0.5), "s_s", C6_MAX_SLOPE, |n| C6_TAIL_CONST / n)
}

fn criterion_7() -> Check {
    let n = 500usize;
    let r = run_experiment(&classic(geometry(n, 1.5, 0.0), 2), MatrixKind::Ncca).unwrap();
    let abs = r.summary_stat("n_tilde:median_abs").unwrap().mean;
    let bound = C7_ABS_CONST / (n as f64).sqrt();
    let x = run_experiment(&classic(geometry(n, 6.0, 0.0), 2), MatrixKind::Ncca).unwrap();
    let rel = x.summary_stat("nu2_quantiles:median_rel").unwrap().mean;
    (
        abs <= bound && rel <= C7_EXTREME_REL && x.thresholds.extreme,
        format!(
            "ζ=(1.5,0): median |λ(nN) − λ(Ñ)| = {abs:.4} (≤ {bound:.4}); ζ=(6,0): median rel. error vs e^(2υ)γ = {rel:.4} (≤ {C7_EXTREME_REL})"
        ),
    )
}

fn criterion_8_stochastic() -> Check {
    let mut worst: f64 = 0.0;
    for (z1, z2) in [(0.0, 0.0), (1.5, 0.5), (2.5, 2.5)] {
        let mut m = geometry(150, z1, z2);
        m.seed = derive_seed(ROOT_SEED, 8);
        let pair = generate(&m).unwrap();
        let (h1, h2) = (m.p1 as f64, m.p2 as f64);
        let st = kernel_stack(pair.x.as_ref(), pair.y.as_ref(), h1, h2, 1.0).unwrap();
        let r = build_reference(&pair, &m, h1, h2).unwrap();
        for a in [&st.a1, &st.a2, &st.a_fused] {
            worst = worst.max(row_sum_defect(a.as_ref()));
        }
        for s in &r.sensors {
            for a in [&s.a_s, &s.a_tilde_s, &s.a_tilde_c] {
                worst = worst.max(row_sum_defect(a.as_ref()));
            }
        }
    }
    (worst <= C8_STOCHASTIC, format!("max row-sum defect = {worst:.2e} (≤ {C8_STOCHASTIC:e})"))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, nonneg: bool) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = if nonneg { rng.random::<f64>() } else { rng.random::<f64>() * 2.0 - 1.0 };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    let g = random_sym(rng, n, false);
    let mut s = &g * g.transpose();
    for i in 0..n {
        s[(i, i)] += 0.1;
    }
    s
}

fn sym_eigs_desc(m: &Mat<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

fn criterion_8_inequalities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(ROOT_SEED);
    let mut violations = 0;
    let trials = 300;
    for _ in 0..trials {
        let n = rng.random_range(2..=20);
        let l = random_sym(&mut rng, n, true);
        let e = random_sym(&mut rng, n, false);
        let emax = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| e[(i, j)].abs()).fold(0.0, f64::max);
        let had = Mat::from_fn(n, n, |i, j| l[(i, j)] * e[(i, j)]);
        let lhs = spectral_norm(had.as_ref());
        let rhs = emax * spectral_norm(l.as_ref());
        if lhs > rhs * (1.0 + C8_INEQ_SLACK) {
            violations += 1;
        }

        let a = random_spd(&mut rng, n);
        let b = random_spd(&mut rng, n);
        let la = sym_eigs_desc(&a);
        let lb = sym_eigs_desc(&b);
        let ab = &a * &b;
        let mut lab: Vec<f64> = ab.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        lab.sort_by(|x, y| y.total_cmp(x));
        for k in 0..n {
            let lo = la[k] * lb[n - 1];
            let hi = la[k] * lb[0];
            let tol = C8_INEQ_SLACK * hi.abs().max(1.0);
            if lab[k] < lo - tol || lab[k] > hi + tol {
                violations += 1;
            }
        }
    }
    (violations == 0, format!("{trials} random instances (n ≤ 20), {violations} violations of the Hadamard and product-eigenvalue bounds"))
}

fn criterion_8_ranks() -> Check {
    let mut ok = true;
    let mut notes = vec![];
    for z in [0.0, 0.6] {
        let mut m = geometry(200, z, z);
        m.seed = derive_seed(ROOT_SEED, 81);
        let pair = generate(&m).unwrap();
        let sh = build_sh(&pair, &m, 1).unwrap();
        let r0 = numerical_rank(sh.sh0.as_ref(), C8_RANK_TOL);
        let sum = &sh.sh0 + &sh.sh1 + &sh.sh2;
        let r012 = numerical_rank(sum.as_ref(), C8_RANK_TOL);
        ok &= r0 == 1 && r012 <= 3;
        let rd = sh.sh_d.as_ref().map(|d| numerical_rank(d.as_ref(), C8_RANK_TOL));
        if let Some(rd) = rd {
            ok &= rd <= 4usize.pow(sh.depth as u32);
        }
        ok &= (z < 0.5) == sh.sh_d.is_none();
        notes.push(format!("ζ={z}: rank Sh0 = {r0}, rank(Sh0+Sh1+Sh2) = {r012}, rank Sh_d = {rd:?}"));
    }
    (ok, notes.join("; "))
}

fn criterion_8_surrogate() -> Check {
    let n = 400;
    let mut ok = true;
    let mut notes = vec![];
    for z in [0.0f64, 0.6] {
        let e1 = (z - 1.0) * ((1.0 / (1.0 - z)).ceil() + 1.0) + 1.0;
        let bound = C8_SURROGATE_K * (n as f64).powf(f64::max(e1, -0.5) + 0.1);
        let mut worst: f64 = 0.0;
        for t in 0..10 {
            let mut m = geometry(n, z, z);
            m.p1 = 800;
            m.seed = derive_seed(ROOT_SEED + 53, t);
            let pair = generate(&m).unwrap();
            let sq = pairwise_sq_dists(pair.x.as_ref()).unwrap();
            let w = fusion_spectra::kernel::affinity(sq.as_ref(), m.p1 as f64, m.upsilon).unwrap();
            let sh = build_sh(&pair, &m, 1).unwrap();
            worst = worst.max(surrogate_error(w.as_ref(), &sh));
        }
        ok &= worst <= bound;
        notes.push(format!("ζ={z}: max ‖W − K₁‖ = {worst:.3} (≤ {bound:.3})"));
    }
    (ok, format!("n=400, 10 trials: {}", notes.join("; ")))
}

fn criterion_8_moments() -> Check {
    let (n, p) = (400usize, 800usize);
    let s2 = 0.7;
    let mu = Measure::mp(n as f64 / p as f64, s2, MpConvention::Gram).unwrap();
    let q = mu.quantile_table(20000).unwrap();
    let m1: f64 = q.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / 20000.0;
    let m2: f64 = q.windows(2).map(|w| (0.5 * (w[0] + w[1])).powi(2)).sum::<f64>() / 20000.0;
    let mut rng = ChaCha8Rng::seed_from_u64(ROOT_SEED);
    let (mut e1, mut e2) = (0.0, 0.0);
    let trials = 5;
    for _ in 0..trials {
        let z = Mat::<f64>::from_fn(p, n, |_, _| rng.sample(rand_distr::StandardNormal));
        let g = (z.transpose() * &z) * faer::Scale(s2 / p as f64);
        let ev = g.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        e1 += ev.iter().sum::<f64>() / n as f64;
        e2 += ev.iter().map(|v| v * v).sum::<f64>() / n as f64;
    }
    e1 /= trials as f64;
    e2 /= trials as f64;
    let r1 = (m1 - e1).abs() / e1;
    let r2 = (m2 - e2).abs() / e2;
    (
        r1 <= C8_MOMENT_REL && r2 <= C8_MOMENT_REL,
        format!("MP(c=0.5, s²=0.7): first moment rel. dev. {r1:.4}, second {r2:.4} (≤ {C8_MOMENT_REL})"),
    )
}

fn criterion_8_round_trips() -> Check {
    let mut worst: f64 = 0.0;
    let measures = [
        Measure::mp(0.5, 0.3, MpConvention::Gram).unwrap(),
        Measure::mp(1.0 / 3.0, 1.0, MpConvention::Gram).unwrap().shifted(0.6),
        Measure::mp(2.0, 0.5, MpConvention::Gram).unwrap().scaled(3.0),
    ];
    let n = 500;
    for mu in &measures {
        let atom = mu.atom_at_zero();
        for j in 1..n {
            let t = 1.0 - j as f64 / n as f64;
            if t <= atom {
                continue;
            }
            let x = mu.quantile(j, n).unwrap();
            worst = worst.max((mu.cdf(x) - t).abs());
        }
    }
    (worst <= C8_ROUND_TRIP, format!("max |F(γ(j)) − (1 − j/n)| = {worst:.2e} (≤ {C8_ROUND_TRIP:e})"))
}

fn main() -> ExitCode {
    let checks: Vec<Criterion> = vec![
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8a stochasticity", criterion_8_stochastic),
        ("8b matrix inequalities", criterion_8_inequalities),
        ("8c shift-matrix ranks", criterion_8_ranks),
        ("8d Taylor surrogate", criterion_8_surrogate),
        ("8e MP moments", criterion_8_moments),
        ("8f quantile round trips", criterion_8_round_trips),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, f) in checks {
        if !filter.is_empty() && !filter.iter().any(|p| id.starts_with(p.as_str())) {
            continue;
        }
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        if !pass {
            failed += 1;
        }
        println!("[criterion {id}] {} {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
