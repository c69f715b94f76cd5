use std::path::{Path, PathBuf};

use clap::Args;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hsdcov::matrix::{DenseMatrix, SymmetricMatrix};
use hsdcov::{
    dcor_test, derive_stream, minimax_eigencheck, run_clt, run_power, theory_report, BandwidthSpec, Center,
    CltConfig, CovarianceBlocks, DataModel, KernelSpec, NoiseDist, PairedSample, PowerConfig, SimScenario,
    Standardization, TestConfig,
};

use crate::config::{self, fill_from, parse, parse_list, required};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, read_matrix, to_json, write_csv, write_json};

const MIN_ROWS: usize = 4;

#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct TestArgs {
    /// CSV file with the X observations (one row per observation).
    #[arg(value_name = "X.csv")]
    x: Option<PathBuf>,
    /// CSV file with the Y observations.
    #[arg(value_name = "Y.csv")]
    y: Option<PathBuf>,
    /// Both files start with a header row.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    header: Option<bool>,
    #[arg(long)]
    alpha: Option<f64>,
    /// identity, gaussian or laplace.
    #[arg(long)]
    kernel: Option<String>,
    /// fixed:<gamma>, median or rho:<rho_target> (tau estimated from the data).
    #[arg(long)]
    bandwidth: Option<String>,
}

pub fn test(mut args: TestArgs, cfg: Option<&Path>) -> CliResult<()> {
    let mut file: TestArgs = config::load(cfg)?;
    fill_from!(args, file; x, y, header, alpha, kernel, bandwidth);
    let x_path = required("X.csv", args.x.clone())?;
    let y_path = required("Y.csv", args.y.clone())?;
    let header = *args.header.get_or_insert(false);
    let alpha = *args.alpha.get_or_insert(0.05);
    let kernel: KernelSpec = parse("kernel", args.kernel.as_deref().unwrap_or("identity"))?;
    let bandwidth: BandwidthSpec = parse("bandwidth", args.bandwidth.as_deref().unwrap_or("median"))?;
    args.kernel = Some(kernel.label().to_string());
    args.bandwidth = Some(bandwidth.to_string());

    let x = read_matrix(&x_path, header)?;
    let y = read_matrix(&y_path, header)?;
    if x.rows() != y.rows() {
        return Err(CliError::Domain(format!(
            "{} has {} rows but {} has {}",
            x_path.display(),
            x.rows(),
            y_path.display(),
            y.rows()
        )));
    }
    if x.rows() < MIN_ROWS {
        return Err(CliError::Domain(format!(
            "{}: need at least {MIN_ROWS} observations, found {}",
            x_path.display(),
            x.rows()
        )));
    }
    let sample = PairedSample::new(x, y)?;
    let r = dcor_test(&sample, &TestConfig::kernel(alpha, kernel, bandwidth))?;
    write_json(
        None,
        &json!({
            "statistic": r.statistic,
            "threshold": r.threshold,
            "p_value": r.p_value,
            "reject": r.reject,
            "kernel": r.kernel_label,
            "bandwidth": [r.bandwidth_used.0, r.bandwidth_used.1],
            "degenerate": r.degenerate,
            "config": args,
        }),
    )
}

/// Sends the CSV to `--out` (stdout if absent) and the JSON summary to
/// `--summary`, falling back to stdout when the CSV went to a file and to
/// stderr otherwise.
fn emit(out: Option<&Path>, summary: Option<&Path>, header: &[&str], rows: &[Vec<String>], meta: &Value) -> CliResult<()> {
    write_csv(out, header, rows)?;
    match (out, summary) {
        (_, Some(s)) => write_json(Some(s), meta),
        (Some(_), None) => write_json(None, meta),
        (None, None) => {
            eprintln!("{}", to_json(meta)?);
            Ok(())
        }
    }
}

#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct CltArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Dimension of both X and Y.
    #[arg(long)]
    p: Option<usize>,
    /// Factor loading in [0, 1); Sigma_XY = rho I.
    #[arg(long)]
    rho: Option<f64>,
    /// normal, uniform or t4.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    /// fixed:<gamma>, median or rho:<rho_target> (population tau).
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// theory, null or empirical.
    #[arg(long)]
    standardize: Option<String>,
    /// theory or empirical.
    #[arg(long)]
    center: Option<String>,
    /// Worker threads (0 = all cores); never changes the output.
    #[arg(long)]
    #[serde(skip_serializing)]
    threads: Option<usize>,
    /// Quantile CSV destination (default stdout).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// JSON summary destination.
    #[arg(long)]
    #[serde(skip)]
    summary: Option<PathBuf>,
}

pub fn clt(mut args: CltArgs, cfg: Option<&Path>) -> CliResult<()> {
    let mut file: CltArgs = config::load(cfg)?;
    fill_from!(args, file; n, p, rho, dist, kernel, bandwidth, reps, seed, standardize, center, threads);
    let dist: NoiseDist = parse("dist", args.dist.as_deref().unwrap_or("normal"))?;
    let kernel: KernelSpec = parse("kernel", args.kernel.as_deref().unwrap_or("identity"))?;
    let bandwidth: BandwidthSpec = parse("bandwidth", args.bandwidth.as_deref().unwrap_or("rho:1"))?;
    let standardization: Standardization = parse("standardize", args.standardize.as_deref().unwrap_or("empirical"))?;
    let center: Center = parse("center", args.center.as_deref().unwrap_or("theory"))?;
    let scenario = SimScenario {
        n: *args.n.get_or_insert(200),
        p: *args.p.get_or_insert(50),
        rho: *args.rho.get_or_insert(0.0),
        dist,
    };
    let run = CltConfig {
        model: DataModel::Factor(scenario),
        kernel: kernel.clone(),
        bandwidth,
        reps: *args.reps.get_or_insert(300),
        standardization,
        center,
        seed: config::seed(args.seed)?,
        threads: args.threads.unwrap_or(0),
    };
    args.seed = Some(run.seed);
    args.dist = Some(dist.to_string());
    args.kernel = Some(kernel.label().to_string());
    args.bandwidth = Some(bandwidth.to_string());
    args.standardize = Some(standardization.to_string());
    args.center = Some(match center {
        Center::TheoryMean => "theory".into(),
        Center::EmpiricalMean => "empirical".into(),
    });
    scenario.validate()?;

    let r = run_clt(&run)?;
    let rows: Vec<Vec<String>> = r
        .probs
        .iter()
        .zip(&r.normal_quantiles)
        .zip(&r.sample_quantiles)
        .map(|((p, z), s)| vec![fmt_f64(*p), fmt_f64(*z), fmt_f64(*s)])
        .collect();
    emit(
        args.out.as_deref(),
        args.summary.as_deref(),
        &["prob", "normal_quantile", "sample_quantile"],
        &rows,
        &json!({ "ks_distance": r.ks_distance, "config": args }),
    )
}

#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct PowerArgs {
    /// Comma-separated factor loadings, e.g. 0,0.05,0.1.
    #[arg(long)]
    rho_grid: Option<String>,
    /// Comma-separated kernels.
    #[arg(long)]
    kernels: Option<String>,
    /// Comma-separated bandwidth policies (rho: uses the population tau).
    #[arg(long)]
    bandwidths: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing)]
    threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    summary: Option<PathBuf>,
}

fn join<T, F: Fn(&T) -> String>(items: &[T], f: F) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

pub fn power(mut args: PowerArgs, cfg: Option<&Path>) -> CliResult<()> {
    let mut file: PowerArgs = config::load(cfg)?;
    fill_from!(args, file; rho_grid, kernels, bandwidths, alpha, reps, seed, n, p, dist, threads);
    let rhos: Vec<f64> = parse_list("rho-grid", args.rho_grid.as_deref().unwrap_or("0"))?;
    let kernels: Vec<KernelSpec> = parse_list("kernels", args.kernels.as_deref().unwrap_or("identity"))?;
    let bandwidths: Vec<BandwidthSpec> = parse_list("bandwidths", args.bandwidths.as_deref().unwrap_or("rho:1"))?;
    let dist: NoiseDist = parse("dist", args.dist.as_deref().unwrap_or("normal"))?;
    let run = PowerConfig {
        n: *args.n.get_or_insert(200),
        p: *args.p.get_or_insert(50),
        dist,
        rhos: rhos.clone(),
        kernels: kernels.clone(),
        bandwidths: bandwidths.clone(),
        alpha: *args.alpha.get_or_insert(0.05),
        reps: *args.reps.get_or_insert(500),
        seed: config::seed(args.seed)?,
        threads: args.threads.unwrap_or(0),
    };
    args.seed = Some(run.seed);
    args.rho_grid = Some(join(&rhos, |r| fmt_f64(*r)));
    args.kernels = Some(join(&kernels, |k| k.label().to_string()));
    args.bandwidths = Some(join(&bandwidths, |b| b.to_string()));
    args.dist = Some(dist.to_string());
    for &rho in &rhos {
        SimScenario { n: run.n, p: run.p, rho, dist }.validate()?;
    }

    let r = run_power(&run)?;
    let rows: Vec<Vec<String>> = r
        .cells
        .iter()
        .map(|c| {
            vec![
                c.kernel.clone(),
                c.bandwidth.clone(),
                fmt_f64(c.rho),
                fmt_f64(c.empirical_power),
                fmt_f64(c.theoretical_power),
                fmt_f64(c.std_err),
            ]
        })
        .collect();
    emit(
        args.out.as_deref(),
        args.summary.as_deref(),
        &["kernel", "bandwidth", "rho", "empirical_power", "theoretical_power", "std_err"],
        &rows,
        &json!({ "config": args }),
    )
}

#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct TheoryArgs {
    /// Identity-block shorthand: Sigma_X = I_p.
    #[arg(long)]
    p: Option<usize>,
    /// Identity-block shorthand: Sigma_Y = I_q.
    #[arg(long)]
    q: Option<usize>,
    /// Identity-block shorthand: Sigma_XY = rho_xy on the leading diagonal.
    #[arg(long)]
    rho_xy: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// CSV file with Sigma_X (replaces the shorthand; needs all three blocks).
    #[arg(long)]
    sigma_x: Option<PathBuf>,
    #[arg(long)]
    sigma_y: Option<PathBuf>,
    #[arg(long)]
    sigma_xy: Option<PathBuf>,
    /// Block files start with a header row.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    header: Option<bool>,
}

fn symmetric_block(path: &Path, header: bool) -> CliResult<SymmetricMatrix> {
    SymmetricMatrix::new(read_matrix(path, header)?).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

pub fn theory(mut args: TheoryArgs, cfg: Option<&Path>) -> CliResult<()> {
    let mut file: TheoryArgs = config::load(cfg)?;
    fill_from!(args, file; p, q, rho_xy, n, alpha, sigma_x, sigma_y, sigma_xy, header);
    let n = required("n", args.n)?;
    let alpha = *args.alpha.get_or_insert(0.05);
    let sigma = match (&args.sigma_x, &args.sigma_y, &args.sigma_xy) {
        (None, None, None) => {
            let p = required("p", args.p)?;
            let q = *args.q.get_or_insert(p);
            let rho = *args.rho_xy.get_or_insert(0.0);
            CovarianceBlocks::identity_blocks(p, q, rho).map_err(|e| CliError::Domain(e.to_string()))?
        }
        (Some(sx), Some(sy), Some(sxy)) => {
            let header = *args.header.get_or_insert(false);
            let blocks = (symmetric_block(sx, header)?, symmetric_block(sy, header)?, read_matrix(sxy, header)?);
            CovarianceBlocks::new(blocks.0, blocks.1, blocks.2).map_err(|e| CliError::Domain(e.to_string()))?
        }
        _ => {
            return Err(CliError::Input(
                "--sigma-x, --sigma-y and --sigma-xy must be given together".into(),
            ))
        }
    };
    let report = theory_report(&sigma, n, alpha).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut out = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    out["config"] = serde_json::to_value(&args).map_err(|e| CliError::Io(e.to_string()))?;
    write_json(None, &out)
}

#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EigenArgs {
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    /// Perturbation size (default 1/(4pq)); |a| p q must be below 1.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV with two rows of p signs (u1, u2); replaces the random draw.
    #[arg(long)]
    u_signs: Option<PathBuf>,
    /// CSV with two rows of q signs (v1, v2).
    #[arg(long)]
    v_signs: Option<PathBuf>,
}

fn sign_rows(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let m: DenseMatrix = read_matrix(path, false)?;
    if m.rows() != 2 {
        return Err(CliError::Domain(format!("{}: expected 2 rows of signs, found {}", path.display(), m.rows())));
    }
    Ok((m.row(0).to_vec(), m.row(1).to_vec()))
}

pub fn eigencheck(mut args: EigenArgs, cfg: Option<&Path>) -> CliResult<()> {
    let mut file: EigenArgs = config::load(cfg)?;
    fill_from!(args, file; p, q, a, seed, u_signs, v_signs);
    let (u, v) = match (&args.u_signs, &args.v_signs) {
        (Some(u), Some(v)) => {
            let (u, v) = (sign_rows(u)?, sign_rows(v)?);
            args.p = Some(u.0.len());
            args.q = Some(v.0.len());
            (u, v)
        }
        (None, None) => {
            let p = required("p", args.p)?;
            let q = *args.q.get_or_insert(p);
            let seed = config::seed(args.seed)?;
            args.seed = Some(seed);
            let mut rng = derive_stream(seed, 0).rng();
            let mut draw = |len: usize| -> Vec<f64> {
                (0..len).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
            };
            ((draw(p), draw(p)), (draw(q), draw(q)))
        }
        _ => return Err(CliError::Input("--u-signs and --v-signs must be given together".into())),
    };
    let pq = (u.0.len() * v.0.len()) as f64;
    let a = *args.a.get_or_insert(1.0 / (4.0 * pq));
    if a.is_nan() || a.abs() * pq >= 1.0 {
        return Err(CliError::Domain(format!("|a| p q = {} must be below 1", a.abs() * pq)));
    }
    let r = minimax_eigencheck((&u.0, &u.1), (&v.0, &v.1), a).map_err(|e| CliError::Domain(e.to_string()))?;
    write_json(
        None,
        &json!({
            "max_identity_error": r.max_identity_error,
            "nontrivial_eigencount": r.nontrivial_eigencount,
            "lambda_values": r.lambda_values,
            "predicted_product": r.predicted_product,
            "config": args,
        }),
    )
}
