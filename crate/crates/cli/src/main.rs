#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod measures;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwt_core::calderon::{invert_potential, reproduce, CompositeTransform, InversionJob, Reconstruction};
use cwt_core::cone::{cone_beta, cone_gamma, siegel_gamma_monte_carlo, verify_unit_mass, ConeScale};
use cwt_core::parabolic::{invert_parabolic, parabolic_potential, ParabolicGrid, ParabolicSpec};
use cwt_core::potential::{potential_multiplier, potential_semigroup, PotentialSpec, TimeQuadrature};
use cwt_core::radon::{radon_forward, radon_invert};
use cwt_core::semigroup::SemigroupFamily;
use cwt_core::testfn::{odd_bump, space_time_bump, Phantom};
use cwt_core::validation::{run_criterion, CRITERIA};
use cwt_core::{Error, GridFunction, GridSpec};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_INVALID: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "cwt",
    version,
    about = "Composite wavelet transforms, potential inversion and Radon reconstruction"
)]
struct Cli {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true, env = "CWT_THREADS")]
    threads: Option<usize>,

    /// Seed for stochastic steps.
    #[arg(long, global = true, default_value_t = 20260101)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Radial profile of a semigroup kernel as CSV.
    KernelDump(KernelDumpArgs),
    /// Riesz, Bessel, Flett or Beta potential of a grid function.
    Potential(PotentialArgs),
    /// Invert a potential with a composite wavelet transform.
    Invert(InvertArgs),
    /// Calderón's reproducing formula.
    Reproduce(ReproduceArgs),
    /// Invert a parabolic potential.
    Parabolic(ParabolicArgs),
    /// Radon transform of a phantom and its wavelet reconstruction.
    Radon(RadonArgs),
    /// Siegel gamma and beta functions and Monte-Carlo checks on matrix space.
    Cone(ConeArgs),
    /// Run the built-in numbered self-checks.
    Check(CheckArgs),
    /// Run a subcommand described by a JSON file.
    Run(RunArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FamilyName {
    Poisson,
    Gw,
    Meta,
    Beta,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "poisson")]
    family: FamilyName,
    /// Exponent of the Beta semigroup.
    #[arg(long)]
    beta: Option<f64>,
}

impl FamilyArgs {
    fn family(&self) -> Result<SemigroupFamily, Error> {
        Ok(match self.family {
            FamilyName::Poisson => SemigroupFamily::Poisson,
            FamilyName::Gw => SemigroupFamily::GaussWeierstrass,
            FamilyName::Meta => SemigroupFamily::Metaharmonic,
            FamilyName::Beta => {
                let beta = self
                    .beta
                    .ok_or_else(|| Error::InvalidInput("--family beta needs --beta".into()))?;
                SemigroupFamily::beta(beta)?
            }
        })
    }
}

/// Phantom sampled on a cube when no input grid is given.
#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value = "dog")]
    phantom: String,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Points per axis.
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// Half width of the box.
    #[arg(long, default_value_t = 20.0)]
    l: f64,
    /// Support radius of bump phantoms.
    #[arg(long, default_value_t = 6.0)]
    scale: f64,
}

impl SynthArgs {
    fn sample(&self) -> Result<GridFunction, Error> {
        let spec = GridSpec::cube(self.dim, self.n, self.l)?;
        Ok(self.phantom.parse::<Phantom>()?.sample(&spec, self.scale))
    }
}

/// Convergence report and assertion shared by the inversion commands.
#[derive(Args, Debug)]
struct ReportArgs {
    /// Convergence CSV; printed to standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Reconstruction at the best truncation parameter (binary grid).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 unless the error at the smallest epsilon is within --tol.
    #[arg(long)]
    assert: bool,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum KindName {
    Riesz,
    Bessel,
    Flett,
    Beta,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum RouteName {
    Multiplier,
    Semigroup,
}

#[derive(Args, Debug)]
struct KernelDumpArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 10.0)]
    r_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PotentialArgs {
    #[arg(long, value_enum)]
    kind: KindName,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum, default_value = "multiplier")]
    route: RouteName,
    /// Input grid; a phantom is sampled when absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InvertArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value = "fd1")]
    measure: String,
    /// Order of the potential.
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
    epsilons: Vec<f64>,
    /// Potential to invert; without it a phantom is sampled and its
    /// potential is inverted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    measure: String,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
    epsilons: Vec<f64>,
    /// Function to reproduce; an odd bump on [-32, 32) is used when absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args, Debug)]
struct ParabolicArgs {
    #[arg(long)]
    alpha: f64,
    /// Use the weighted symbol |ξ|² + iτ + 1.
    #[arg(long)]
    inhomogeneous: bool,
    #[arg(long, default_value = "fd1")]
    measure: String,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5])]
    epsilons: Vec<f64>,
    /// Potential to invert, last axis time; a space-time bump is used when absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args, Debug)]
struct RadonArgs {
    #[arg(long, default_value = "dog")]
    phantom: String,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = 16.0)]
    l: f64,
    #[arg(long, default_value_t = 6.0)]
    scale: f64,
    #[arg(long, default_value_t = 720)]
    angles: usize,
    /// Offsets per angle; defaults to --n.
    #[arg(long)]
    offsets: Option<usize>,
    #[arg(long, default_value = "fd2")]
    measure: String,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
    epsilons: Vec<f64>,
    #[arg(long)]
    sinogram: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ConeOp {
    Gamma,
    Beta,
    GammaMc,
    Unitmass,
}

#[derive(Args, Debug)]
struct ConeArgs {
    #[arg(long, value_enum)]
    op: ConeOp,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Diagonal of the scale matrix for unitmass; identity when absent.
    #[arg(long, value_delimiter = ',')]
    scale: Option<Vec<f64>>,
    #[arg(long)]
    assert: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Run only this check; all of them when absent.
    #[arg(long)]
    criterion: Option<u32>,
    #[arg(long)]
    assert: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

/// How a command ended when it did not succeed.
enum Failure {
    Invalid(String),
    Tolerance(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Tolerance(_) => EXIT_TOLERANCE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Tolerance(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

/// Maps a library error; with `--assert` the numerical failures become
/// tolerance failures.
fn classify(asserting: bool) -> impl Fn(Error) -> Failure {
    move |e| {
        let numerical = matches!(
            e,
            Error::NotAdmissible(_)
                | Error::ZeroConstant(_)
                | Error::DivergentConstant(_)
                | Error::DivergentTail(_)
                | Error::QuadratureUnderresolved(_)
                | Error::SupportOverflow(_)
                | Error::InsufficientDecay { .. }
        );
        if asserting && numerical {
            Failure::Tolerance(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

fn invalid(e: Error) -> Failure {
    Failure::Invalid(e.to_string())
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cwt: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn execute(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Invalid("--threads must be positive".into()));
        }
        // A second call in the same process (nested `run`) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::KernelDump(a) => kernel_dump(a),
        Command::Potential(a) => potential(a),
        Command::Invert(a) => invert(a),
        Command::Reproduce(a) => reproduce_cmd(a),
        Command::Parabolic(a) => parabolic(a),
        Command::Radon(a) => radon(a),
        Command::Cone(a) => cone(a, cli.seed),
        Command::Check(a) => check(a),
        Command::Run(a) => {
            let argv = config::load_argv(&a.config).map_err(Failure::Invalid)?;
            let inner = Cli::try_parse_from(argv).map_err(|e| Failure::Invalid(e.to_string()))?;
            if matches!(inner.command, Command::Run(_)) {
                return Err(Failure::Invalid("a run configuration cannot start another run".into()));
            }
            execute(inner)
        }
    }
}

fn write_text(path: Option<&PathBuf>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Failure::Invalid(e.to_string()))
        }
    }
}

fn kernel_dump(a: KernelDumpArgs) -> Outcome {
    let family = a.family.family().map_err(invalid)?;
    if a.points < 2 || !(a.r_max > 0.0) {
        return Err(Failure::Invalid("need --points >= 2 and --r-max > 0".into()));
    }
    let radii: Vec<f64> = (0..a.points)
        .map(|i| a.r_max * i as f64 / (a.points - 1) as f64)
        .collect();
    let values = family.radial_profile(a.dim, a.t, &radii).map_err(invalid)?;
    let mut csv = String::from("radius,value\n");
    for (r, v) in radii.iter().zip(&values) {
        csv.push_str(&format!("{},{}\n", fmt17(*r), fmt17(*v)));
    }
    write_text(a.out.as_ref(), &csv)
}

fn potential_spec(kind: KindName, alpha: f64, beta: Option<f64>) -> Result<PotentialSpec, Error> {
    Ok(match kind {
        KindName::Riesz => PotentialSpec::riesz(alpha),
        KindName::Bessel => PotentialSpec::bessel(alpha),
        KindName::Flett => PotentialSpec::flett(alpha),
        KindName::Beta => {
            let beta = beta.ok_or_else(|| Error::InvalidInput("--kind beta needs --beta".into()))?;
            PotentialSpec::bessel_beta(alpha, beta)
        }
    })
}

fn load_or_synth(input: Option<&PathBuf>, synth: &SynthArgs) -> Result<GridFunction, Error> {
    match input {
        Some(p) => GridFunction::load(p),
        None => synth.sample(),
    }
}

fn potential(a: PotentialArgs) -> Outcome {
    let spec = potential_spec(a.kind, a.alpha, a.beta).map_err(invalid)?;
    let f = load_or_synth(a.input.as_ref(), &a.synth).map_err(invalid)?;
    let phi = match a.route {
        RouteName::Multiplier => potential_multiplier(&spec, &f),
        RouteName::Semigroup => potential_semigroup(&spec, &f, &TimeQuadrature::default()),
    }
    .map_err(invalid)?;
    phi.save(&a.out).map_err(invalid)
}

/// Degree of the semigroup symbol in `|ξ|`, which converts a potential
/// order into the exponent of the scale integral.
fn symbol_degree(family: &SemigroupFamily) -> f64 {
    match *family {
        SemigroupFamily::Poisson | SemigroupFamily::Metaharmonic => 1.0,
        SemigroupFamily::GaussWeierstrass => 2.0,
        SemigroupFamily::Beta { beta } => beta,
    }
}

/// The potential a family and `a` invert.
fn matching_potential(family: &SemigroupFamily, a: f64, alpha: f64) -> Result<PotentialSpec, Error> {
    Ok(match (*family, a) {
        (SemigroupFamily::Metaharmonic, 0.0) => PotentialSpec::bessel(alpha),
        (SemigroupFamily::Beta { beta }, 0.0) => {
            PotentialSpec::new(cwt_core::potential::PotentialKind::Riesz, alpha, Some(beta))
        }
        (_, 0.0) => PotentialSpec::riesz(alpha),
        (SemigroupFamily::Poisson, 1.0) => PotentialSpec::flett(alpha),
        (SemigroupFamily::GaussWeierstrass, 1.0) => PotentialSpec::bessel(alpha),
        (SemigroupFamily::Beta { beta }, 1.0) => PotentialSpec::bessel_beta(alpha, beta),
        _ => {
            return Err(Error::InvalidInput(
                "no built-in potential for this family and a; pass --in".into(),
            ))
        }
    })
}

fn finish(rec: &Reconstruction, args: &ReportArgs, default_tol: f64, has_reference: bool) -> Outcome {
    write_text(args.report.as_ref(), &rec.record.to_csv())?;
    if let Some(out) = &args.out {
        rec.estimate.save(out).map_err(invalid)?;
    }
    if args.assert {
        if !has_reference {
            return Err(Failure::Invalid("--assert needs a reference function".into()));
        }
        let tol = args.tol.unwrap_or(default_tol);
        let last = rec
            .record
            .last()
            .ok_or_else(|| Failure::Invalid("empty convergence record".into()))?;
        if !(last.rel_l2 <= tol) {
            return Err(Failure::Tolerance(format!(
                "relative L2 error {:e} at epsilon {:e} exceeds {tol:e}",
                last.rel_l2, last.epsilon
            )));
        }
    }
    Ok(())
}

fn invert(a: InvertArgs) -> Outcome {
    let classify = classify(a.report.assert);
    let family = a.family.family().map_err(invalid)?;
    let mu = measures::resolve(&a.measure).map_err(invalid)?;
    let (phi, reference) = match &a.input {
        Some(p) => {
            let phi = GridFunction::load(p).map_err(invalid)?;
            let reference = a
                .reference
                .as_ref()
                .map(GridFunction::load)
                .transpose()
                .map_err(invalid)?;
            (phi, reference)
        }
        None => {
            let f = a.synth.sample().map_err(invalid)?;
            let spec = matching_potential(&family, a.a, a.alpha).map_err(invalid)?;
            (potential_multiplier(&spec, &f).map_err(invalid)?, Some(f))
        }
    };
    let ct = CompositeTransform::new(family, mu, a.a).map_err(invalid)?;
    let job = InversionJob::new(a.alpha / symbol_degree(&family), a.epsilons.clone());
    let rec = invert_potential(&ct, &phi, &job, reference.as_ref()).map_err(&classify)?;
    finish(&rec, &a.report, 1e-2, reference.is_some())
}

fn reproduce_cmd(a: ReproduceArgs) -> Outcome {
    let classify = classify(a.report.assert);
    let family = a.family.family().map_err(invalid)?;
    let mu = measures::resolve(&a.measure).map_err(invalid)?;
    let f = match &a.input {
        Some(p) => GridFunction::load(p).map_err(invalid)?,
        None => odd_bump(&GridSpec::cube(1, 1024, 32.0).map_err(invalid)?, 8.0),
    };
    let ct = CompositeTransform::new(family, mu, a.a).map_err(invalid)?;
    let job = InversionJob::new(0.0, a.epsilons.clone());
    let rec = reproduce(&ct, &f, &job).map_err(&classify)?;
    finish(&rec, &a.report, 1e-3, true)
}

fn parabolic(a: ParabolicArgs) -> Outcome {
    let classify = classify(a.report.assert);
    let spec = ParabolicSpec::new(!a.inhomogeneous, a.alpha);
    let mu = measures::resolve(&a.measure).map_err(invalid)?;
    let (phi, reference) = match &a.input {
        Some(p) => {
            let phi = GridFunction::load(p).map_err(invalid)?;
            let reference = a
                .reference
                .as_ref()
                .map(GridFunction::load)
                .transpose()
                .map_err(invalid)?;
            (phi, reference)
        }
        None => {
            let grid = ParabolicGrid::cube(1, 64, 8.0, 64, 10.0).map_err(invalid)?;
            let mut f = space_time_bump(grid.spec(), 3.0, 4.0);
            if !a.inhomogeneous {
                f = f.without_mean();
            }
            (parabolic_potential(&spec, &f).map_err(invalid)?, Some(f))
        }
    };
    let rec = invert_parabolic(&spec, &mu, &phi, &a.epsilons, reference.as_ref()).map_err(&classify)?;
    finish(&rec, &a.report, 1e-2, reference.is_some())
}

fn radon(a: RadonArgs) -> Outcome {
    let classify = classify(a.report.assert);
    let mu = measures::resolve(&a.measure).map_err(invalid)?;
    let spec = GridSpec::cube(2, a.n, a.l).map_err(invalid)?;
    let f = a.phantom.parse::<Phantom>().map_err(invalid)?.sample(&spec, a.scale);
    let sino = radon_forward(&f, a.angles, a.offsets.unwrap_or(a.n)).map_err(&classify)?;
    if let Some(p) = &a.sinogram {
        sino.write_csv(p).map_err(invalid)?;
    }
    let rec = radon_invert(&sino, &spec, &mu, &a.epsilons, Some(&f)).map_err(&classify)?;
    finish(&rec, &a.report, 5e-2, true)
}

fn cone(a: ConeArgs, seed: u64) -> Outcome {
    let classify = classify(a.assert);
    let mut csv = String::from("quantity,value,stderr\n");
    match a.op {
        ConeOp::Gamma => {
            let g = cone_gamma(a.m, a.alpha).map_err(invalid)?;
            csv.push_str(&format!("gamma,{},0\n", fmt17(g)));
        }
        ConeOp::Beta => {
            let b = cone_beta(a.m, a.alpha, a.beta).map_err(invalid)?;
            csv.push_str(&format!("beta,{},0\n", fmt17(b)));
        }
        ConeOp::GammaMc => {
            let exact = cone_gamma(a.m, a.alpha).map_err(invalid)?;
            let mc = siegel_gamma_monte_carlo(a.m, a.alpha, a.samples, seed).map_err(&classify)?;
            csv.push_str(&format!("gamma_mc,{},{}\n", fmt17(mc.estimate), fmt17(mc.stderr)));
            csv.push_str(&format!("gamma,{},0\n", fmt17(exact)));
            write_text(None, &csv)?;
            return covers(a.assert, mc.estimate, mc.stderr, exact);
        }
        ConeOp::Unitmass => {
            let scale = match &a.scale {
                Some(d) => ConeScale::diagonal(d).map_err(invalid)?,
                None => ConeScale::identity(a.m),
            };
            let mc = verify_unit_mass(a.n, &scale, a.samples, seed).map_err(&classify)?;
            csv.push_str(&format!("unit_mass,{},{}\n", fmt17(mc.estimate), fmt17(mc.stderr)));
            write_text(None, &csv)?;
            return covers(a.assert, mc.estimate, mc.stderr, 1.0);
        }
    }
    write_text(None, &csv)
}

/// With `--assert`, the estimate must lie within three standard errors.
fn covers(asserting: bool, estimate: f64, stderr: f64, exact: f64) -> Outcome {
    if asserting && !((estimate - exact).abs() <= 3.0 * stderr) {
        return Err(Failure::Tolerance(format!(
            "estimate {estimate} is more than 3 standard errors ({stderr:e}) from {exact}"
        )));
    }
    Ok(())
}

fn check(a: CheckArgs) -> Outcome {
    let ids: Vec<u32> = match a.criterion {
        Some(id) if CRITERIA.contains(&id) => vec![id],
        Some(id) => return Err(Failure::Invalid(format!("no check numbered {id}"))),
        None => CRITERIA.collect(),
    };
    let mut csv = String::from("criterion,check,value,bound,pass\n");
    let mut failed = Vec::new();
    for id in ids {
        let report = run_criterion(id).map_err(invalid)?;
        eprintln!(
            "[{}] {} {} ({:.2} s)",
            if report.passed() { "PASS" } else { "FAIL" },
            id,
            report.title,
            report.seconds
        );
        for line in report.to_csv().lines().skip(1) {
            csv.push_str(line);
            csv.push('\n');
        }
        if !report.passed() {
            failed.push(id);
        }
    }
    write_text(a.out.as_ref(), &csv)?;
    if a.assert && !failed.is_empty() {
        return Err(Failure::Tolerance(format!("checks failed: {failed:?}")));
    }
    Ok(())
}
