//! Acceptance gate. Each check prints one PASS/FAIL line; the binary exits
//! nonzero if any check fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use hsdcov::experiments::DataModel;
use hsdcov::matrix::{DenseMatrix, SymmetricMatrix};
use hsdcov::simgen::derive_stream;
use hsdcov::*;
use rand::Rng;
use rand_distr::StandardNormal;

type Check = std::result::Result<String, String>;

fn verdict(pass: bool, detail: String) -> Check {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn oracle_equivalence() -> Check {
    let mut rng = derive_stream(101, 0).rng();
    let dims = [1usize, 2, 5];
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(4..=8);
        let p = dims[rng.random_range(0..3)];
        let q = dims[rng.random_range(0..3)];
        let sample = PairedSample::new(normal_matrix(&mut rng, n, p), normal_matrix(&mut rng, n, q)).unwrap();
        let fast = dcov_star(&sample).unwrap();
        let slow = dcov_ustat_oracle(&sample).unwrap();
        worst = worst.max((fast - slow).abs() / (1.0 + fast.abs()));
    }
    verdict(worst <= 1e-10, format!("max scaled error {worst:.2e} (tol 1e-10) over 100 datasets"))
}

fn u_centering_rows() -> Check {
    let mut rng = derive_stream(102, 0).rng();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(4..=40);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.sample::<f64, _>(StandardNormal) * 10.0;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let c = u_center(&SymmetricMatrix::new(m).unwrap()).unwrap();
        let scale = 1.0 + c.matrix().as_dense().max_abs();
        for k in 0..n {
            let row: f64 = (0..n).filter(|&l| l != k).map(|l| c.matrix()[(k, l)]).sum();
            worst = worst.max(row.abs() / scale);
        }
    }
    verdict(worst <= 1e-9, format!("max scaled row sum {worst:.2e} (tol 1e-9) over 100 matrices"))
}

fn random_blocks(rng: &mut impl Rng, p: usize, q: usize) -> CovarianceBlocks {
    let d = p + q;
    let a = normal_matrix(rng, d, d);
    let full = a.matmul(&a.transpose()).unwrap().scaled(1.0 / d as f64).add(&DenseMatrix::identity(d).scaled(0.1)).unwrap();
    let sym = |m: DenseMatrix| {
        let t = m.transpose();
        SymmetricMatrix::new(m.add(&t).unwrap().scaled(0.5)).unwrap()
    };
    CovarianceBlocks::new(
        sym(full.block(0, 0, p, p)),
        sym(full.block(p, p, q, q)),
        full.block(0, p, p, q),
    )
    .unwrap()
}

fn hoeffding_identity() -> Check {
    let mut rng = derive_stream(103, 0).rng();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = rng.random_range(4..=10);
        let p = rng.random_range(1..=6);
        let q = rng.random_range(1..=6);
        let blocks = random_blocks(&mut rng, p, q);
        let sample = sample_gaussian(&blocks, n, derive_stream(103, k + 1)).unwrap();
        let a = tbar_fluctuation(&sample, &blocks).unwrap();
        let b = hoeffding_sum(&sample, &blocks).unwrap();
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
    }
    verdict(worst <= 1e-10, format!("max relative error {worst:.2e} (tol 1e-10) over 50 datasets"))
}

fn variance_closed_forms() -> Check {
    let mut worst = 0.0f64;
    for p in [1usize, 10, 50, 200] {
        for n in [4usize, 100, 1000] {
            for rho in [0.0, 0.05, 0.3, 0.9] {
                let blocks = CovarianceBlocks::identity_blocks(p, p, rho).unwrap();
                let v = sigma_bar_sq(&blocks, n).unwrap();
                let (pf, nf) = (p as f64, n as f64);
                let s1 = (rho.powi(2) - 0.75 * rho.powi(4) + 0.25 * rho.powi(6)) / (nf * pf);
                let s2 = (1.0 + rho.powi(4)) / (2.0 * nf * (nf - 1.0));
                let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / b.abs() };
                worst = worst.max(rel(v.sigma1_sq, s1)).max(rel(v.sigma2_sq, s2)).max(rel(v.total, s1 + s2));
                if rho == 0.0 {
                    worst = worst.max(rel(v.total, 1.0 / (2.0 * nf * (nf - 1.0))));
                }
            }
        }
    }
    verdict(worst <= 1e-12, format!("max relative error {worst:.2e} (tol 1e-12)"))
}

fn factor_model(n: usize, p: usize, rho: f64, dist: NoiseDist) -> DataModel {
    DataModel::Factor(SimScenario { n, p, rho, dist })
}

fn clt_config(model: DataModel, reps: usize, seed: u64) -> CltConfig {
    CltConfig {
        model,
        kernel: KernelSpec::Identity,
        bandwidth: BandwidthSpec::Fixed(1.0),
        reps,
        standardization: Standardization::EmpiricalSigma,
        center: Center::EmpiricalMean,
        seed,
        threads: 0,
    }
}

fn moments_run() -> &'static CltResult {
    static RUN: OnceLock<CltResult> = OnceLock::new();
    RUN.get_or_init(|| {
        let blocks = CovarianceBlocks::identity_blocks(50, 50, 0.2).unwrap();
        run_clt(&clt_config(DataModel::Gaussian { sigma: blocks, n: 100 }, 2000, 105)).unwrap()
    })
}

fn sample_mean_var(xs: &[f64]) -> (f64, f64) {
    let b = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / b;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1.0))
}

fn mean_expansion_check() -> Check {
    let r = moments_run();
    let (m, v) = sample_mean_var(&r.raw);
    let se = (v / r.raw.len() as f64).sqrt();
    let tol = 0.1 * r.theory_mean + 3.0 * se;
    let gap = (m - r.theory_mean).abs();
    verdict(
        gap <= tol,
        format!("mean {m:.5}, leading term {:.5}, gap {gap:.2e} (tol {tol:.2e})", r.theory_mean),
    )
}

fn variance_expansion_check() -> Check {
    let r = moments_run();
    let (_, v) = sample_mean_var(&r.raw);
    let ratio = v / r.theory_variance;
    verdict(
        (0.75..=1.25).contains(&ratio),
        format!("sample variance {v:.3e}, closed form {:.3e}, ratio {ratio:.3} (allowed 0.75..1.25)", r.theory_variance),
    )
}

fn clt_check() -> Check {
    let mut lines = Vec::new();
    let mut pass = true;
    for (k, rho) in [0.0, 0.1].into_iter().enumerate() {
        let r = run_clt(&clt_config(factor_model(200, 50, rho, NoiseDist::StdNormal), 300, 107 + k as u64)).unwrap();
        pass &= r.ks_distance <= 0.08;
        lines.push(format!("rho={rho}: KS {:.4}", r.ks_distance));
    }
    verdict(pass, format!("{} (tol 0.08)", lines.join(", ")))
}

/// Shared power grid at `(n, p, q) = (200, 50, 50)`: the null plus `A = n rho^2` in {1, 2.5, 5}.
fn power_run() -> &'static PowerResult {
    static RUN: OnceLock<PowerResult> = OnceLock::new();
    RUN.get_or_init(|| {
        let n = 200usize;
        let rhos = std::iter::once(0.0)
            .chain([1.0, 2.5, 5.0].map(|a: f64| (a / n as f64).sqrt()))
            .collect();
        run_power(&PowerConfig {
            n,
            p: 50,
            dist: NoiseDist::StdNormal,
            rhos,
            kernels: vec![KernelSpec::Identity, KernelSpec::Gaussian, KernelSpec::Laplace],
            bandwidths: [0.5, 1.0, std::f64::consts::SQRT_2, 5.0].map(BandwidthSpec::RhoTarget).to_vec(),
            alpha: 0.05,
            reps: 500,
            seed: 109,
            threads: 0,
        })
        .unwrap()
    })
}

fn size_check() -> Check {
    let cell = &power_run().cells[0];
    assert_eq!((cell.rho, cell.kernel.as_str()), (0.0, "identity"));
    let rate = cell.empirical_power;
    verdict((0.02..=0.08).contains(&rate), format!("rejection rate {rate:.3} at alpha 0.05 (allowed 0.02..0.08)"))
}

fn power_formula_check() -> Check {
    let mut pass = true;
    let mut lines = Vec::new();
    for c in power_run().cells.iter().filter(|c| c.rho > 0.0 && c.kernel == "identity" && c.bandwidth == "rho:1") {
        let gap = (c.empirical_power - c.theoretical_power).abs();
        pass &= gap <= 0.06;
        lines.push(format!(
            "A={:.1}: {:.3} vs {:.3}",
            c.a, c.empirical_power, c.theoretical_power
        ));
    }
    verdict(pass, format!("{} (tol 0.06)", lines.join(", ")))
}

fn universality_check() -> Check {
    let cells = &power_run().cells;
    let mut pass = true;
    let mut lines = Vec::new();
    let mut rhos: Vec<f64> = cells.iter().map(|c| c.rho).filter(|r| *r > 0.0).collect();
    rhos.dedup();
    for rho in rhos {
        let row: Vec<_> = cells.iter().filter(|c| c.rho == rho).collect();
        let lo = row.iter().min_by(|a, b| a.empirical_power.total_cmp(&b.empirical_power)).unwrap();
        let hi = row.iter().max_by(|a, b| a.empirical_power.total_cmp(&b.empirical_power)).unwrap();
        let gap = hi.empirical_power - lo.empirical_power;
        pass &= gap <= 0.06;
        lines.push(format!(
            "A={:.1}: gap {gap:.3} ({} {} {:.3} vs {} {} {:.3})",
            lo.a, lo.kernel, lo.bandwidth, lo.empirical_power, hi.kernel, hi.bandwidth, hi.empirical_power
        ));
    }
    verdict(pass, format!("{} (tol 0.06)", lines.join("; ")))
}

fn non_gaussian_check() -> Check {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut seed = 111;
    for dist in [NoiseDist::UniformSqrt3, NoiseDist::ScaledT4] {
        for rho in [0.0, 0.1] {
            let r = run_clt(&clt_config(factor_model(100, 100, rho, dist), 200, seed)).unwrap();
            seed += 1;
            pass &= r.ks_distance <= 0.10;
            lines.push(format!("{dist} rho={rho}: KS {:.4}", r.ks_distance));
        }
    }
    verdict(pass, format!("{} (tol 0.10)", lines.join(", ")))
}

fn eigen_identity_check() -> Check {
    let mut rng = derive_stream(113, 0).rng();
    let mut worst = 0.0f64;
    let mut max_count = 0;
    for p in [4usize, 6, 8] {
        let a = 1.0 / (4.0 * (p * p) as f64);
        for _ in 0..50 {
            let mut signs = |len: usize| -> Vec<f64> {
                (0..len).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
            };
            let (u1, u2, v1, v2) = (signs(p), signs(p), signs(p), signs(p));
            let r = minimax_eigencheck((&u1, &u2), (&v1, &v2), a).unwrap();
            worst = worst.max(r.max_identity_error);
            max_count = max_count.max(r.nontrivial_eigencount);
        }
    }
    verdict(
        worst <= 1e-8 && max_count <= 4,
        format!("max identity error {worst:.2e} (tol 1e-8), most nontrivial eigenvalues {max_count} (max 4)"),
    )
}

fn determinism_check() -> Check {
    let clt = |threads| {
        let mut cfg = clt_config(factor_model(60, 20, 0.1, NoiseDist::ScaledT4), 40, 115);
        cfg.kernel = KernelSpec::Gaussian;
        cfg.bandwidth = BandwidthSpec::MedianHeuristic;
        cfg.threads = threads;
        serde_json::to_string(&run_clt(&cfg).unwrap()).unwrap()
    };
    let power = |threads| {
        let cfg = PowerConfig {
            n: 40,
            p: 10,
            dist: NoiseDist::UniformSqrt3,
            rhos: vec![0.0, 0.3],
            kernels: vec![KernelSpec::Identity, KernelSpec::Laplace],
            bandwidths: vec![BandwidthSpec::MedianHeuristic, BandwidthSpec::RhoTarget(1.0)],
            alpha: 0.05,
            reps: 40,
            seed: 116,
            threads,
        };
        serde_json::to_string(&run_power(&cfg).unwrap()).unwrap()
    };
    let (c1, c4, c1b) = (clt(1), clt(4), clt(1));
    let (p1, p4, p1b) = (power(1), power(4), power(1));
    verdict(
        c1 == c4 && c1 == c1b && p1 == p4 && p1 == p1b,
        format!(
            "clt identical across threads {}, across runs {}; power identical across threads {}, across runs {}",
            c1 == c4,
            c1 == c1b,
            p1 == p4,
            p1 == p1b
        ),
    )
}

type NamedCheck = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let checks: [NamedCheck; 13] = [
        ("oracle equivalence", oracle_equivalence),
        ("u-centering row sums", u_centering_rows),
        ("hoeffding identity", hoeffding_identity),
        ("closed-form variance", variance_closed_forms),
        ("mean expansion", mean_expansion_check),
        ("variance expansion", variance_expansion_check),
        ("clt (gaussian)", clt_check),
        ("size", size_check),
        ("power formula", power_formula_check),
        ("power universality", universality_check),
        ("clt (uniform, t4)", non_gaussian_check),
        ("eigenvalue identity", eigen_identity_check),
        ("determinism", determinism_check),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>().map(String::as_str).or(e.downcast_ref::<&str>().copied()))));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("[PASS] {:>2} {name}: {d} [{secs:.1}s]", k + 1),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {d} [{secs:.1}s]", k + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
