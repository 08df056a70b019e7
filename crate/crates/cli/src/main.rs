use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use siegel_core::arith::{brjuno_sum, const_c, const_cdoubleprime, const_cprime};
use siegel_core::cf::{
    cf_of_exact, convergents, default_tail, parse_exact, special_sequence_main, theta_sequence, CFExpansion, Exact,
    RationalForm,
};
use siegel_core::comb::{
    condition_bdd_search, degenerate_probe, main_lemma_probe, plot_pairs, scan_r, smooth_disk_driver, CondBddParams,
    DriverParams, Estimators, MainLemmaParams, ScanParams,
};
use siegel_core::error::Error;
use siegel_core::germs::{lift_of_germ, lipschitz_estimate, GermFamily};
use siegel_core::io::{emit_json, emit_scan_csv, parse_grid, Config, IoError, RunManifest};
use siegel_core::linearize::{
    compose_check, compose_check_passes, estimate_radius, hadamard_radius, linearization_coeffs,
    pole_cancellation_probe, robust_linearization, EscapeParams,
};
use siegel_core::param::Param;
use siegel_core::renorm::{
    build_hj, find_y0, h_of_lift, renormalized_rotation_number, return_map, HeightParams, RenormSetup, Y0Params,
};
use siegel_core::series::C64;

#[derive(Parser, Debug)]
#[command(name = "siegel", version, about = "Siegel disk radii, renormalization and parameter scans")]
struct Cli {
    /// TOML configuration file; `SIEGEL_<KEY>` environment variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Progress and diagnostics on standard error.
    #[arg(long, global = true)]
    trace: bool,
    /// Write the run manifest (JSON) here.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Germ family: rotation, quadratic, flow or polynomial (overrides the config).
    #[arg(long, global = true)]
    family: Option<String>,
    /// Restriction radius of the family (overrides the config).
    #[arg(long, global = true)]
    s: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Variant {
    Short,
    Long,
}

impl From<Variant> for RationalForm {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Short => RationalForm::Short,
            Variant::Long => RationalForm::Long,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Continued fractions.
    #[command(subcommand)]
    Cf(CfCmd),
    /// Brjuno sum with its tail certificate.
    Brjuno {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 200)]
        depth: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// The constants C, C' and C''.
    Const {
        #[arg(value_enum)]
        which: ConstName,
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        q: u64,
    },
    /// Linearization series.
    #[command(subcommand)]
    Lin(LinCmd),
    /// Radius estimators.
    #[command(subcommand)]
    Radius(RadiusCmd),
    /// Half-plane lifts.
    #[command(subcommand)]
    Lift(LiftCmd),
    /// Sector renormalization of the lift.
    #[command(subcommand)]
    Renorm(RenormCmd),
    /// Radius scan over a grid of parameters.
    Scan {
        /// `farey:Q=n` or `list:x1|x2|...`.
        #[arg(long)]
        grid: String,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Escape)]
        estimators: EstimatorArg,
        /// Also write `(alpha_float, r_lower)` pairs to this file.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Staged smooth-disk construction.
    Construct {
        #[arg(long, default_value = "[0;(1)]")]
        theta0: String,
        /// Target radius; defaults to `rho_factor` times the lower radius estimate at `theta0`.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        rho_factor: f64,
        #[arg(long, default_value_t = 3)]
        stages: usize,
    },
    /// Probes in parameter space.
    #[command(subcommand)]
    Probe(ProbeCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ConstName {
    #[value(name = "C")]
    C,
    #[value(name = "Cprime")]
    Cprime,
    #[value(name = "Cdoubleprime")]
    Cdoubleprime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Escape,
    Hadamard,
    Both,
}

#[derive(Subcommand, Debug)]
enum CfCmd {
    /// Canonical expansion of an exact value.
    Expand {
        #[arg(long)]
        alpha: String,
        #[arg(long, value_enum, default_value_t = Variant::Short)]
        variant: Variant,
    },
    /// Exact value of an expansion.
    Eval {
        #[arg(long)]
        alpha: String,
    },
    Convergents {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Term `n` of the special sequence.
    SpecialSeq {
        #[arg(long)]
        alpha: String,
        #[arg(long, value_enum, default_value_t = Variant::Short)]
        variant: Variant,
        #[arg(long)]
        n: usize,
        /// Tail appended after the modified prefix (default `1 + sqrt 2`).
        #[arg(long)]
        tail: Option<String>,
    },
    /// Term `n` of the golden-tail sequence.
    ThetaSeq {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum LinCmd {
    Coeffs {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 32)]
        order: usize,
    },
    ComposeCheck {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 64)]
        order: usize,
    },
    /// Numerator behaviour of the recursion near `p/q` at index `n` (`q | n - 1`).
    PoleProbe {
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum RadiusCmd {
    Hadamard {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 128)]
        window: usize,
    },
    Escape {
        #[arg(long)]
        alpha: String,
    },
}

#[derive(Subcommand, Debug)]
enum LiftCmd {
    /// Height above which orbits stay in the upper half-plane.
    H {
        #[arg(long)]
        alpha: String,
    },
    /// Lift coefficients and factorization residual.
    Build {
        #[arg(long)]
        alpha: String,
    },
}

#[derive(Args, Debug)]
struct RenormArgs {
    /// Expansion of the rotation number, e.g. `[0;(1)]`.
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
}

#[derive(Subcommand, Debug)]
enum RenormCmd {
    Setup(RenormArgs),
    /// One return of the point `re,im` (in straightened coordinates relative to `y0`).
    Return {
        #[command(flatten)]
        args: RenormArgs,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Measured rotation number of the renormalized map.
    Rotnum {
        #[command(flatten)]
        args: RenormArgs,
        #[arg(long, default_value_t = 1000)]
        returns: usize,
        /// Start height is `y0 + height_factor * |beta|`.
        #[arg(long, default_value_t = 20.0)]
        height_factor: f64,
    },
}

#[derive(Subcommand, Debug)]
enum ProbeCmd {
    MainLemma {
        /// Rational `p/q`.
        #[arg(long)]
        alpha: String,
        #[arg(long, value_enum, default_value_t = Variant::Short)]
        variant: Variant,
        #[arg(long, default_value_t = 12)]
        n: usize,
    },
    Degenerate {
        /// Irrational parameters separated by `|`.
        #[arg(long, default_value = "[0;(1)]|[0;(2)]|[0;3,(3)]")]
        t: String,
    },
    CondBdd {
        #[arg(long, default_value = "[0;(1)]")]
        alpha: String,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        rho_factor: f64,
    },
}

struct Ctx {
    cfg: Config,
    format: Option<Format>,
    workers: usize,
    trace: bool,
    run: String,
}

impl Ctx {
    fn family(&self) -> Result<GermFamily, Error> {
        Ok(self.cfg.family()?)
    }
    fn order(&self) -> Result<usize, Error> {
        Ok(self.cfg.usize_or("order", 512)?)
    }
    fn escape(&self) -> Result<EscapeParams, Error> {
        Ok(self.cfg.escape_params()?)
    }
    fn note(&self, msg: impl AsRef<str>) {
        if self.trace {
            eprintln!("[trace] {}", msg.as_ref());
        }
    }
    fn json(&self, schema: &str, v: &impl serde::Serialize) -> Result<String, Error> {
        Ok(emit_json(schema, v, Some(&self.run))?)
    }
}

fn exact(s: &str) -> Result<Exact, Error> {
    Ok(parse_exact(s)?)
}

fn param(s: &str) -> Result<Param, Error> {
    Ok(s.parse::<Param>()?)
}

fn cf_text(x: &Exact) -> String {
    cf_of_exact(x, RationalForm::Short).to_string()
}

fn complex_pairs(c: &[C64]) -> Vec<[f64; 2]> {
    c.iter().map(|z| [z.re, z.im]).collect()
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Io(IoError::Config(msg.into()))
}

fn setup(ctx: &Ctx, a: &RenormArgs) -> Result<RenormSetup, Error> {
    let cf: CFExpansion = a.alpha.parse().map_err(Error::Cf)?;
    let g = ctx.family()?.family_at(&Param::Exact(cf.value()));
    let lift = lift_of_germ(&g, ctx.cfg.usize_or("lift_order", 256)?)?;
    let s = build_hj(lift, &cf, a.k)?;
    let y = find_y0(&s, &Y0Params::default())?;
    ctx.note(format!("y0 = {}, analytic bound {}", y.y0, y.y0_analytic));
    Ok(s.with_y0(y.y0))
}

fn setup_json(s: &RenormSetup) -> Value {
    json!({
        "k": s.k,
        "p_k": s.p_k.to_string(),
        "q_k": s.q_k.to_string(),
        "p_km1": s.p_km1.to_string(),
        "q_km1": s.q_km1.to_string(),
        "beta": s.beta,
        "beta_prime": s.beta_prime,
        "q_next_beta": s.q_next_beta,
        "y0": s.y0,
        "expected_alpha_prime": s.expected_alpha_prime(),
        "hop_budget": s.hop_budget(),
    })
}

fn run_cf(ctx: &Ctx, cmd: &CfCmd) -> Result<String, Error> {
    let out = match cmd {
        CfCmd::Expand { alpha, variant } => {
            let x = exact(alpha)?;
            json!({"alpha": alpha, "cf": cf_of_exact(&x, (*variant).into()).to_string(), "float": x.to_f64()})
        }
        CfCmd::Eval { alpha } => {
            let x = exact(alpha)?;
            json!({"cf": cf_text(&x), "value": x.to_string(), "float": x.to_f64()})
        }
        CfCmd::Convergents { alpha, n } => {
            let cf = cf_of_exact(&exact(alpha)?, RationalForm::Short);
            let n = match cf.last_index() {
                Some(last) => (*n).min(last),
                None => *n,
            };
            let conv = convergents(&cf, n)?;
            if ctx.format == Some(Format::Csv) {
                let mut s = String::from("index,p,q\n");
                for c in &conv {
                    s.push_str(&format!("{},{},{}\n", c.index, c.p, c.q));
                }
                return Ok(s);
            }
            let rows: Vec<Value> =
                conv.iter().map(|c| json!({"index": c.index, "p": c.p.to_string(), "q": c.q.to_string()})).collect();
            json!({"cf": cf.to_string(), "convergents": rows})
        }
        CfCmd::SpecialSeq { alpha, variant, n, tail } => {
            let cf = cf_of_exact(&exact(alpha)?, (*variant).into());
            let tail = match tail {
                Some(t) => exact(t)?,
                None => default_tail(),
            };
            let t = special_sequence_main(&cf, *n, &tail)?;
            json!({"n": n, "cf": t.cf.to_string(), "value": t.value.to_string(), "float": t.value.to_f64()})
        }
        CfCmd::ThetaSeq { alpha, n } => {
            let cf = cf_of_exact(&exact(alpha)?, RationalForm::Short);
            let t = theta_sequence(&cf, *n)?;
            json!({"n": n, "cf": t.cf.to_string(), "value": t.value.to_string(), "float": t.value.to_f64()})
        }
    };
    ctx.json("cf", &out)
}

fn run_lin(ctx: &Ctx, cmd: &LinCmd) -> Result<String, Error> {
    let fam = ctx.family()?;
    match cmd {
        LinCmd::Coeffs { alpha, order } => {
            let g = fam.family_at(&param(alpha)?);
            let phi = linearization_coeffs(&g, *order)?;
            let out = json!({
                "alpha": g.alpha.text(),
                "order": phi.order(),
                "coefficients": complex_pairs(&phi.a),
                "compose_residual": compose_check(&g, &phi, phi.order()),
            });
            ctx.json("lin_coeffs", &out)
        }
        LinCmd::ComposeCheck { alpha, order } => {
            let g = fam.family_at(&param(alpha)?);
            let phi = robust_linearization(&g, *order)?;
            let out = json!({
                "alpha": g.alpha.text(),
                "order": phi.order(),
                "residual": compose_check(&g, &phi, phi.order()),
                "passes": compose_check_passes(&g, &phi),
                "pole_at": phi.pole_at,
            });
            ctx.json("compose_check", &out)
        }
        LinCmd::PoleProbe { p, q, n } => {
            if *q < 1 || *n < 2 || (*n - 1) % (*q as usize) != 0 {
                return Err(usage(format!("pole-probe needs q >= 1 and q | n - 1 (got q = {q}, n = {n})")));
            }
            let offsets: Vec<f64> = (3..=7).map(|j| 10f64.powi(-j)).collect();
            ctx.json("pole_probe", &pole_cancellation_probe(&fam, *p, *q, *n, &offsets))
        }
    }
}

fn run_renorm(ctx: &Ctx, cmd: &RenormCmd) -> Result<String, Error> {
    match cmd {
        RenormCmd::Setup(a) => {
            let s = setup(ctx, a)?;
            ctx.json("renorm_setup", &setup_json(&s))
        }
        RenormCmd::Return { args, z } => {
            let s = setup(ctx, args)?;
            let parts: Vec<f64> = z
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| usage(format!("bad point {z:?}; expected re,im")))?;
            let [re, im] = parts[..] else { return Err(usage(format!("bad point {z:?}; expected re,im"))) };
            ctx.json("return_sample", &return_map(&s, C64::new(re, s.y0 + im))?)
        }
        RenormCmd::Rotnum { args, returns, height_factor } => {
            let s = setup(ctx, args)?;
            let height = s.y0 + height_factor * s.beta.abs();
            let report = renormalized_rotation_number(&s, height, *returns, &ctx.cfg.constants()?);
            ctx.json("renorm_report", &report)
        }
    }
}

fn run_probe(ctx: &Ctx, cmd: &ProbeCmd) -> Result<String, Error> {
    let fam = ctx.family()?;
    let order = ctx.order()?;
    let escape = ctx.escape()?;
    match cmd {
        ProbeCmd::MainLemma { alpha, variant, n } => {
            let Exact::Rational(r) = exact(alpha)? else {
                return Err(usage("main-lemma needs a rational p/q"));
            };
            let v = r.to_f64();
            let k = lipschitz_estimate(&fam, (v - 0.05, v + 0.05), 8, 64);
            ctx.note(format!("Lipschitz estimate {k}"));
            let p = MainLemmaParams {
                n_terms: *n,
                tail_window: (*n / 2).max(1),
                order,
                escape,
                constants: ctx.cfg.constants()?,
            };
            ctx.json("main_lemma", &main_lemma_probe(&fam, &r, (*variant).into(), k, &p)?)
        }
        ProbeCmd::Degenerate { t } => {
            let ts: Vec<Exact> = t.split('|').map(|x| exact(x.trim())).collect::<Result<_, _>>()?;
            ctx.json("degenerate", &degenerate_probe(&fam, &ts, order, &escape)?)
        }
        ProbeCmd::CondBdd { alpha, rho, rho_factor } => {
            let a = exact(alpha)?;
            let rho = match rho {
                Some(r) => *r,
                None => rho_factor * estimate_radius(&fam.family_at(&Param::Exact(a.clone())), order, &escape)?.lower,
            };
            let p = CondBddParams {
                q_max: ctx.cfg.u64_or("q_max", 8)?,
                order,
                escape,
                constants: ctx.cfg.constants()?,
                ..CondBddParams::default()
            };
            ctx.json("cond_bdd", &condition_bdd_search(&fam, &a, rho, &p)?)
        }
    }
}

fn run(cli: &Cli, ctx: &Ctx) -> Result<(String, Option<String>), Error> {
    let text = match &cli.command {
        Command::Cf(cmd) => run_cf(ctx, cmd)?,
        Command::Brjuno { alpha, depth, tol } => {
            let cf = cf_of_exact(&exact(alpha)?, RationalForm::Short);
            ctx.json("brjuno", &brjuno_sum(&cf, *depth, *tol))?
        }
        Command::Const { which, k, q } => {
            let cfg = ctx.cfg.constants()?;
            let v = match which {
                ConstName::C => const_c(*k, *q, &cfg)?,
                ConstName::Cprime => const_cprime(*k, *q, &cfg)?,
                ConstName::Cdoubleprime => const_cdoubleprime(*k, *q, &cfg)?,
            };
            format!("{v}\n")
        }
        Command::Lin(cmd) => run_lin(ctx, cmd)?,
        Command::Radius(cmd) => {
            let fam = ctx.family()?;
            match cmd {
                RadiusCmd::Hadamard { alpha, window } => {
                    let g = fam.family_at(&param(alpha)?);
                    let phi = robust_linearization(&g, ctx.order()?)?;
                    ctx.json("radius", &hadamard_radius(&phi, *window)?)?
                }
                RadiusCmd::Escape { alpha } => {
                    let g = fam.family_at(&param(alpha)?);
                    let est = estimate_radius(&g, ctx.order()?, &ctx.escape()?)?;
                    ctx.note(&est.diagnostics);
                    ctx.json("radius", &est)?
                }
            }
        }
        Command::Lift(cmd) => {
            let fam = ctx.family()?;
            let order = ctx.cfg.usize_or("lift_order", 256)?;
            match cmd {
                LiftCmd::H { alpha } => {
                    let lift = lift_of_germ(&fam.family_at(&param(alpha)?), order)?;
                    let hp = HeightParams { max_iter: ctx.escape()?.max_iter, ..HeightParams::default() };
                    ctx.json("lift_height", &h_of_lift(&lift, &hp)?)?
                }
                LiftCmd::Build { alpha } => {
                    let lift = lift_of_germ(&fam.family_at(&param(alpha)?), order)?;
                    let out = json!({
                        "alpha": lift.alpha,
                        "residual": lift.residual,
                        "h_coeffs": complex_pairs(&lift.h_coeffs),
                    });
                    ctx.json("lift", &out)?
                }
            }
        }
        Command::Renorm(cmd) => run_renorm(ctx, cmd)?,
        Command::Scan { grid, estimators, plot } => {
            let fam = ctx.family()?;
            let alphas: Vec<Param> = parse_grid(grid)?.into_iter().map(Param::Exact).collect();
            ctx.note(format!("scanning {} parameters on {} workers", alphas.len(), ctx.workers));
            let p = ScanParams {
                order: ctx.order()?,
                escape: ctx.escape()?,
                estimators: match estimators {
                    EstimatorArg::Escape => Estimators::Escape,
                    EstimatorArg::Hadamard => Estimators::Hadamard,
                    EstimatorArg::Both => Estimators::Both,
                },
                hadamard_window: ctx.cfg.usize_or("hadamard_window", 128)?,
                record_time: false,
            };
            let rows = scan_r(&fam, &alphas, &p, ctx.workers)?;
            let plot_text = plot.as_ref().map(|_| plot_pairs(&rows));
            let text = match ctx.format {
                Some(Format::Json) => ctx.json("scan_rows", &rows)?,
                _ => emit_scan_csv(&rows, Some(&ctx.run))?,
            };
            return Ok((text, plot_text));
        }
        Command::Construct { theta0, rho, rho_factor, stages } => {
            let fam = ctx.family()?;
            let th = exact(theta0)?;
            let p = DriverParams { escape: ctx.escape()?, ..DriverParams::default() };
            let rho = match rho {
                Some(r) => *r,
                None => rho_factor * estimate_radius(&fam.family_at(&Param::Exact(th.clone())), p.order, &p.escape)?.lower,
            };
            ctx.note(format!("target radius {rho}"));
            ctx.json("construction", &smooth_disk_driver(&fam, &th, rho, *stages, &p)?)?
        }
        Command::Probe(cmd) => run_probe(ctx, cmd)?,
    };
    Ok((text, None))
}

/// Command line without flags that only affect presentation or scheduling.
fn canonical_command(args: &[String]) -> String {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        let key = a.split('=').next().unwrap_or("");
        match key {
            "--out" | "--manifest" | "--workers" | "--plot" => skip = !a.contains('='),
            "--trace" => {}
            _ => out.push(a.clone()),
        }
    }
    out.join(" ")
}

fn build_config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| IoError::Io(format!("{}: {e}", path.display())))?;
            Config::from_toml(&text)?
        }
        None => Config::default(),
    };
    cfg = cfg.with_env(std::env::vars());
    if let Some(f) = &cli.family {
        cfg.set("family", f.clone());
    }
    if let Some(s) = cli.s {
        cfg.set("s", s.to_string());
    }
    Ok(cfg)
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(IoError::Io(format!("{}: {e}", p.display())))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<(), Error> {
    let cfg = build_config(cli)?;
    let workers = match cli.workers {
        Some(w) => w,
        None => cfg.usize_or("workers", 1)?,
    };
    if workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let seed = cfg.u64_or("seed", 0)?;
    let mut manifest = RunManifest::new(canonical_command(argv), &cfg, seed);
    let ctx = Ctx { cfg, format: cli.format, workers, trace: cli.trace, run: manifest.digest() };
    let (text, plot) = run(cli, &ctx)?;
    write_output(&cli.out, &text)?;
    if let Some(p) = &cli.out {
        manifest.record_artifact(p.display().to_string(), text.as_bytes());
    }
    if let (Some(path), Some(plot)) = (match &cli.command {
        Command::Scan { plot, .. } => plot.clone(),
        _ => None,
    }, plot)
    {
        write_output(&Some(path.clone()), &plot)?;
        manifest.record_artifact(path.display().to_string(), plot.as_bytes());
    }
    if let Some(path) = &cli.manifest {
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| IoError::Parse(e.to_string()))? + "\n";
        write_output(&Some(path.clone()), &text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            match e {
                Error::Io(IoError::Config(_)) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
