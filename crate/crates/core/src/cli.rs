//! Command-line front end.
//!
//! ```text
//! pointerlab density      --model continuous --theta-i 0 --weakness 0.03 --out maps/h
//! pointerlab curve        --model trotter90 --n 6 --theta-i 0 --theta-i 1.5708 --out f.csv
//! pointerlab compare      --n-list 1,2,4,8,16,32 --weakness 0.3 --out dev.csv
//! pointerlab oracle-check --points 20 --seed 7 --weakness 0.3
//! ```
//!
//! Exit status is 0 on success, 1 on a numerical or I/O failure, 2 on a
//! usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::continuous::{momentum_oracle_state, post_state, prob_density, relative_discrepancy};
use crate::density_map::{default_half_width, with_suffix, write_atomic, DensityMap};
use crate::error::{Error, Result};
use crate::estimation::{fidelity_curve, log_spaced};
use crate::model::{DiagonalSign, Geometry, MeasurementConfig, QubitState};
use crate::trotter::{evolve, DensityEvaluator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Weakness values rendered when `density` is run without `--weakness`.
pub const DENSITY_PRESETS: [f64; 3] = [0.03, 0.15, 0.3];

/// Oracle agreement required by `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "pointerlab", version, about = "Simultaneous weak measurement of σz and σx")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Outcome density on a grid, as CSV and 16-bit PGM.
    Density(DensityArgs),
    /// Average guessing fidelity against weakness.
    Curve(CurveArgs),
    /// Maximum density deviation of Trotter90 from the continuous model per depth.
    Compare(CompareArgs),
    /// Dawson closed form against the momentum-space integral at random points.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Continuous,
    Trotter90,
    Trotter45,
}

impl From<ModelArg> for Geometry {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Continuous => Geometry::Continuous,
            ModelArg::Trotter90 => Geometry::Orthogonal90,
            ModelArg::Trotter45 => Geometry::Diagonal45,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Positive,
    Negative,
}

#[derive(Debug, Args)]
pub struct ModelFlags {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Trotter depth; required for trotter models, rejected for continuous.
    #[arg(long)]
    pub n: Option<usize>,
    /// Branch the σx = +1 eigenvector takes in the 45° geometry.
    #[arg(long, value_enum, default_value = "positive")]
    pub diagonal_sign: SignArg,
}

impl ModelFlags {
    fn config(&self, weakness: f64) -> Result<MeasurementConfig> {
        let geometry = Geometry::from(self.model);
        let depth = match (geometry.is_trotter(), self.n) {
            (true, Some(n)) => n,
            (true, None) => return Err(Error::invalid(format!("--n is required for {geometry}"))),
            (false, Some(_)) => return Err(Error::invalid("--n only applies to trotter models")),
            (false, None) => 1,
        };
        let sign = match self.diagonal_sign {
            SignArg::Positive => DiagonalSign::Positive,
            SignArg::Negative => {
                if geometry != Geometry::Diagonal45 {
                    return Err(Error::invalid("--diagonal-sign only applies to trotter45"));
                }
                DiagonalSign::Negative
            }
        };
        Ok(MeasurementConfig::new(weakness, 1.0, geometry, depth)?.with_diagonal_sign(sign))
    }
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta_i: f64,
    /// Δ/δ; without it one map is written per preset as `<out>-w<weakness>`.
    #[arg(long)]
    pub weakness: Option<f64>,
    #[arg(long, default_value_t = 256)]
    pub res: usize,
    /// Half-width of the square window; defaults to reach + 5Δ.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Output stem; `.csv` and `.pgm` are appended.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long = "theta-i", allow_negative_numbers = true, default_values_t = [0.0])]
    pub theta_i: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub wmin: f64,
    #[arg(long, default_value_t = 3.0)]
    pub wmax: f64,
    #[arg(long, default_value_t = 40)]
    pub wcount: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 16, 32])]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub weakness: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta_i: f64,
    /// Probes per axis; the probe set is a square grid over ±(δ + 2Δ).
    #[arg(long, default_value_t = 21)]
    pub probe_count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3)]
    pub weakness: f64,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Reports go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.exit_code() {
                0 => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = match &cli.command {
        Command::Density(a) => cmd_density(a).map(|_| EXIT_OK),
        Command::Curve(a) => cmd_curve(a).map(|_| EXIT_OK),
        Command::Compare(a) => cmd_compare(a).map(|_| EXIT_OK),
        Command::OracleCheck(a) => cmd_oracle_check(a).map(|report| {
            print!("{}", report.text);
            if report.passed {
                EXIT_OK
            } else {
                EXIT_NUMERICAL
            }
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Geometry { .. } => EXIT_USAGE,
                _ => EXIT_NUMERICAL,
            }
        }
    }
}

fn check_theta(theta: f64) -> Result<QubitState> {
    QubitState::new(theta).map_err(|_| Error::invalid(format!("--theta-i must be finite, got {theta}")))
}

/// Writes the density maps requested by `args` and returns the stems used.
pub fn cmd_density(args: &DensityArgs) -> Result<Vec<PathBuf>> {
    let psi = check_theta(args.theta_i)?;
    if args.res == 0 || args.res > 8192 {
        return Err(Error::invalid(format!("--res must be in 1..=8192, got {}", args.res)));
    }
    let jobs: Vec<(f64, PathBuf)> = match args.weakness {
        Some(w) => vec![(w, args.out.clone())],
        None => DENSITY_PRESETS
            .iter()
            .map(|&w| (w, preset_stem(&args.out, w)))
            .collect(),
    };
    // Validate everything before computing anything.
    let mut planned = Vec::with_capacity(jobs.len());
    for (w, stem) in jobs {
        let cfg = args.model.config(w)?;
        let half = match args.half_width {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => return Err(Error::invalid(format!("--half-width must be positive, got {h}"))),
            None => default_half_width(&cfg),
        };
        planned.push((cfg, half, stem));
    }
    let mut written = Vec::new();
    for (cfg, half, stem) in planned {
        let map = DensityMap::compute(&psi, &cfg, (-half, half), (-half, half), args.res, args.res)?;
        if let Err(e) = map.write(&stem) {
            let _ = std::fs::remove_file(with_suffix(&stem, "csv"));
            return Err(e);
        }
        written.push(stem);
    }
    Ok(written)
}

fn preset_stem(out: &Path, w: f64) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(format!("-w{w}"));
    s.into()
}

/// Writes `weakness,theta_i,f_avg` rows sorted by `(theta_i, weakness)`.
pub fn cmd_curve(args: &CurveArgs) -> Result<()> {
    let grid = log_spaced(args.wmin, args.wmax, args.wcount)?;
    let base = args.model.config(grid[0])?;
    let mut states = args
        .theta_i
        .iter()
        .map(|&t| check_theta(t))
        .collect::<Result<Vec<_>>>()?;
    states.sort_by(|a, b| a.theta().total_cmp(&b.theta()));
    states.dedup();
    let mut csv = String::from("weakness,theta_i,f_avg\n");
    for psi in &states {
        let curve = fidelity_curve(psi, &base, &grid)?;
        for (w, f) in curve.samples {
            let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e}", w, psi.theta(), f);
        }
    }
    write_atomic(&args.out, csv.as_bytes())
}

/// `k × k` probe grid over the square of half-width `half`, endpoints included.
pub fn probe_grid(k: usize, half: f64) -> Vec<(f64, f64)> {
    if k == 1 {
        return vec![(0.0, 0.0)];
    }
    let step = 2.0 * half / (k - 1) as f64;
    (0..k)
        .flat_map(|i| (0..k).map(move |j| (-half + j as f64 * step, -half + i as f64 * step)))
        .collect()
}

/// Maximum `|P_trotter90 - P_continuous|` over `probes` for each depth.
pub fn trotter_deviations(
    psi: &QubitState,
    weakness: f64,
    depths: &[usize],
    probes: &[(f64, f64)],
) -> Result<Vec<f64>> {
    let cont = MeasurementConfig::continuous(weakness)?;
    let reference: Vec<f64> = probes
        .par_iter()
        .map(|&(z, x)| prob_density(z, x, psi, &cont))
        .collect::<Result<_>>()?;
    depths
        .iter()
        .map(|&n| {
            let cfg = MeasurementConfig::orthogonal(weakness, n)?;
            let eval = DensityEvaluator::new(&evolve(psi, &cfg)?);
            Ok(probes
                .par_iter()
                .zip(reference.par_iter())
                .map(|(&(z, x), &p)| (eval.density(z, x) - p).abs())
                .reduce(|| 0.0, f64::max))
        })
        .collect()
}

/// Writes `n,max_deviation` rows in the order given.
pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let psi = check_theta(args.theta_i)?;
    if args.n_list.is_empty() || args.n_list.contains(&0) {
        return Err(Error::invalid("--n-list needs positive depths"));
    }
    if args.probe_count == 0 {
        return Err(Error::invalid("--probe-count must be positive"));
    }
    let cfg = MeasurementConfig::continuous(args.weakness)?;
    let probes = probe_grid(args.probe_count, cfg.coupling + 2.0 * cfg.spread);
    let dev = trotter_deviations(&psi, args.weakness, &args.n_list, &probes)?;
    let mut csv = String::from("n,max_deviation\n");
    for (n, d) in args.n_list.iter().zip(dev) {
        let _ = writeln!(csv, "{n},{d:.16e}");
    }
    write_atomic(&args.out, csv.as_bytes())
}

/// Outcome of `oracle-check`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub max_relative_error: f64,
    pub passed: bool,
    pub text: String,
}

/// Random test points `(z, x, θ)` with `z, x` uniform over `±(δ + 3Δ)`.
pub fn oracle_points(count: usize, seed: u64, cfg: &MeasurementConfig) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = cfg.coupling + 3.0 * cfg.spread;
    (0..count)
        .map(|_| {
            let z = rng.random_range(-half..half);
            let x = rng.random_range(-half..half);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            (z, x, t)
        })
        .collect()
}

/// Largest relative discrepancy between [`post_state`] and
/// [`momentum_oracle_state`] over the seeded points, with its location.
pub fn oracle_max_error(count: usize, seed: u64, weakness: f64) -> Result<(f64, (f64, f64, f64))> {
    let cfg = MeasurementConfig::continuous(weakness)?;
    let pts = oracle_points(count, seed, &cfg);
    let mut worst = (0.0, (0.0, 0.0, 0.0));
    for &(z, x, t) in &pts {
        let psi = QubitState::new(t)?;
        let closed = post_state(z, x, &psi, &cfg)?;
        let oracle = momentum_oracle_state(z, x, &psi, &cfg)?;
        let e = relative_discrepancy(&closed, &oracle.state, &cfg);
        if e.is_nan() || e > worst.0 {
            worst = (e, (z, x, t));
        }
    }
    Ok(worst)
}

pub fn cmd_oracle_check(args: &OracleArgs) -> Result<OracleReport> {
    if args.points == 0 {
        return Err(Error::invalid("--points must be positive"));
    }
    let (err, (z, x, t)) = oracle_max_error(args.points, args.seed, args.weakness)?;
    let passed = err <= ORACLE_TOLERANCE;
    let mut text = format!(
        "points={} seed={} weakness={}\nmax relative error: {:.6e}\n",
        args.points, args.seed, args.weakness, err
    );
    if passed {
        text.push_str("PASS\n");
    } else {
        let _ = writeln!(
            text,
            "FAIL worst point z={z:.16e} x={x:.16e} theta_i={t:.16e} (tolerance {ORACLE_TOLERANCE:e})"
        );
    }
    Ok(OracleReport {
        max_relative_error: err,
        passed,
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("pointerlab").chain(args.iter().copied()))
    }

    #[test]
    fn flag_combinations() {
        let c = parse(&["density", "--model", "continuous", "--out", "a"]).unwrap();
        let Command::Density(d) = c.command else { panic!() };
        assert!(d.model.config(0.1).is_ok());

        let c = parse(&["density", "--model", "trotter90", "--out", "a"]).unwrap();
        let Command::Density(d) = c.command else { panic!() };
        assert!(matches!(d.model.config(0.1), Err(Error::InvalidArgument(_))));

        let c = parse(&["density", "--model", "continuous", "--n", "3", "--out", "a"]).unwrap();
        let Command::Density(d) = c.command else { panic!() };
        assert!(d.model.config(0.1).is_err());

        assert!(parse(&["density", "--model", "nope", "--out", "a"]).is_err());
        assert!(parse(&["density", "--model", "continuous"]).is_err());
    }

    #[test]
    fn curve_flags() {
        let c = parse(&[
            "curve", "--model", "trotter45", "--n", "6", "--theta-i", "0", "--theta-i", "-1.5", "--out", "f.csv",
        ])
        .unwrap();
        let Command::Curve(a) = c.command else { panic!() };
        assert_eq!(a.theta_i, vec![0.0, -1.5]);
        assert_eq!(a.wcount, 40);
    }

    #[test]
    fn compare_flags() {
        let c = parse(&["compare", "--n-list", "1,4,9", "--out", "d.csv"]).unwrap();
        let Command::Compare(a) = c.command else { panic!() };
        assert_eq!(a.n_list, vec![1, 4, 9]);
        assert_eq!(a.probe_count, 21);
    }

    #[test]
    fn probe_grid_shape() {
        let g = probe_grid(3, 1.0);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], (-1.0, -1.0));
        assert_eq!(g[4], (0.0, 0.0));
        assert_eq!(g[8], (1.0, 1.0));
    }

    #[test]
    fn oracle_points_are_seeded() {
        let cfg = MeasurementConfig::continuous(0.3).unwrap();
        assert_eq!(oracle_points(5, 3, &cfg), oracle_points(5, 3, &cfg));
        assert_ne!(oracle_points(5, 3, &cfg), oracle_points(5, 4, &cfg));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["pointerlab", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["pointerlab", "oracle-check", "--points", "0"]), EXIT_USAGE);
        assert_eq!(run(["pointerlab", "oracle-check", "--weakness", "-1"]), EXIT_USAGE);
    }

    #[test]
    fn weak_deviation_is_tiny() {
        let probes = probe_grid(9, 1.0 + 20.0);
        let d = trotter_deviations(&QubitState::new(0.4).unwrap(), 10.0, &[2], &probes).unwrap();
        assert!(d[0] < 1e-3, "{d:?}");
    }
}
