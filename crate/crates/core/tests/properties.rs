use faer::Mat;
use fusion_spectra::bandwidth::{percentile_bandwidth, nearest_rank};
use fusion_spectra::kernel::{affinity, fuse, kernel_stack, pairwise_sq_dists, spectrum};
use fusion_spectra::linalg::{row_sum_defect, spectral_norm};
use fusion_spectra::regime::{classify, RegimeParams};
use fusion_spectra::rmt::MpConvention;
use fusion_spectra::{Measure, Scale};
use num_complex::Complex64;
use proptest::prelude::*;

fn cloud(rows: usize, cols: usize, vals: &[f64]) -> Mat<f64> {
    Mat::from_fn(rows, cols, |i, j| vals[(j * rows + i) % vals.len()] + 0.01 * (i * 7 + j * 3) as f64)
}

fn vals() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 16..64)
}

fn sym(n: usize, v: &[f64], nonneg: bool) -> Mat<f64> {
    let mut m = Mat::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            let x = v[k % v.len()] + 0.013 * k as f64;
            let x = if nonneg { x.abs() } else { x };
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

fn spd(n: usize, v: &[f64]) -> Mat<f64> {
    let g = sym(n, v, false);
    let mut s = &g * g.transpose();
    for i in 0..n {
        s[(i, i)] += 0.5;
    }
    s
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transition_matrices_are_row_stochastic(v in vals(), n in 3usize..25, p in 2usize..12, h in 0.5f64..20.0) {
        let x = cloud(p, n, &v);
        let y = cloud(p + 1, n, &v[3..]);
        let st = kernel_stack(x.as_ref(), y.as_ref(), h, 2.0 * h, 1.0).unwrap();
        for a in [&st.a1, &st.a2, &st.a_fused] {
            prop_assert!(row_sum_defect(a.as_ref()) < 1e-10);
        }
    }

    #[test]
    fn hadamard_norm_bound(v in vals(), w in vals(), n in 2usize..=20) {
        let l = sym(n, &v, true);
        let e = sym(n, &w, false);
        let emax = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| e[(i, j)].abs()).fold(0.0, f64::max);
        let had = Mat::from_fn(n, n, |i, j| l[(i, j)] * e[(i, j)]);
        prop_assert!(spectral_norm(had.as_ref()) <= emax * spectral_norm(l.as_ref()) * (1.0 + 1e-9));
    }

    #[test]
    fn product_eigenvalues_are_sandwiched(v in vals(), w in vals(), n in 2usize..=20) {
        let a = spd(n, &v);
        let b = spd(n, &w);
        let la = sorted_desc(a.self_adjoint_eigenvalues(faer::Side::Lower).unwrap());
        let lb = sorted_desc(b.self_adjoint_eigenvalues(faer::Side::Lower).unwrap());
        let ab = &a * &b;
        let lab = sorted_desc(ab.eigenvalues().unwrap().iter().map(|z| z.re).collect());
        for k in 0..n {
            let tol = 1e-9 * la[k] * lb[0];
            prop_assert!(lab[k] >= la[k] * lb[n - 1] - tol);
            prop_assert!(lab[k] <= la[k] * lb[0] + tol);
        }
    }

    #[test]
    fn ncca_matches_reversed_product(v in vals(), n in 3usize..20) {
        let x = cloud(5, n, &v);
        let y = cloud(7, n, &v[5..]);
        let st = kernel_stack(x.as_ref(), y.as_ref(), 5.0, 7.0, 1.0).unwrap();
        let rev = st.a2.transpose() * &st.a1;
        let e1 = spectrum(st.n.as_ref(), Scale::One).unwrap().eigen_real;
        let e2 = spectrum(rev.as_ref(), Scale::One).unwrap().eigen_real;
        for (a, b) in e1.iter().zip(&e2) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn stieltjes_maps_upper_half_plane(c in 0.1f64..3.0, s2 in 0.05f64..3.0, shift in 0.0f64..2.0,
                                       re in -2.0f64..10.0, im in 1e-3f64..5.0) {
        let z = Complex64::new(re, im);
        for mu in [Measure::mp(c, s2, MpConvention::Gram).unwrap(), Measure::mp(c, s2, MpConvention::Gram).unwrap().shifted(shift)] {
            prop_assert!(mu.stieltjes(z).im > 0.0);
        }
    }

    #[test]
    fn quantiles_are_nonincreasing(c in 0.1f64..3.0, s2 in 0.05f64..3.0, n in 2usize..200) {
        let mu = Measure::mp(c, s2, MpConvention::Gram).unwrap();
        let q = mu.quantile_table(n).unwrap();
        prop_assert!(q.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((q[0] - mu.upper_edge()).abs() < 1e-9 * mu.upper_edge());
    }

    #[test]
    fn percentile_bandwidth_is_monotone(v in vals(), n in 3usize..30, o1 in 0.01f64..1.0, o2 in 0.01f64..1.0) {
        let x = cloud(4, n, &v);
        let (lo, hi) = if o1 <= o2 { (o1, o2) } else { (o2, o1) };
        prop_assert!(percentile_bandwidth(x.as_ref(), lo).unwrap() <= percentile_bandwidth(x.as_ref(), hi).unwrap());
    }

    #[test]
    fn affinity_is_scale_equivariant(v in vals(), n in 3usize..20, a in 0.1f64..10.0, h in 0.5f64..10.0) {
        let x = cloud(3, n, &v);
        let xs = Mat::from_fn(3, n, |i, j| a * x[(i, j)]);
        let w = affinity(pairwise_sq_dists(x.as_ref()).unwrap().as_ref(), h, 1.0).unwrap();
        let ws = affinity(pairwise_sq_dists(xs.as_ref()).unwrap().as_ref(), a * a * h, 1.0).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((w[(i, j)] - ws[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn regime_labels_ignore_sensor_order(z1 in 0.0f64..6.0, z2 in 0.0f64..6.0, n in 50usize..2000, classic in any::<bool>()) {
        let p = RegimeParams::default();
        let a = classify(z1, z2, n, classic, &p);
        let b = classify(z2, z1, n, classic, &p);
        prop_assert_eq!(a.regime, b.regime);
        prop_assert_eq!(a.t, b.t);
        prop_assert_eq!(a.r, b.r);
    }

    #[test]
    fn nearest_rank_returns_a_sample(mut v in prop::collection::vec(0.0f64..100.0, 1..50), omega in 0.0f64..=1.0) {
        let orig = v.clone();
        let r = nearest_rank(&mut v, omega);
        prop_assert!(orig.contains(&r));
    }
}

#[test]
fn fused_matrix_of_identical_points_is_rank_one() {
    let x = Mat::<f64>::zeros(3, 6);
    let w1 = affinity(pairwise_sq_dists(x.as_ref()).unwrap().as_ref(), 1.0, 1.0).unwrap();
    let st = fuse(w1.clone(), w1, 1.0, 1.0).unwrap();
    let e = spectrum(st.n.as_ref(), Scale::One).unwrap().eigen_real;
    assert!((e[0] - 1.0).abs() < 1e-12);
    assert!(e[1..].iter().all(|v| v.abs() < 1e-12));
}
