use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reeb_core::flowcore::{conserved_drift, integrate, IntegratorOptions};
use reeb_core::horseshoe::{
    certify_horseshoe, detect_strips, detect_transverse_homoclinic, entropy_separated_sets, semiconjugacy_check,
    verify_moser_conditions, EntropyOptions, GraphArc, MoserOptions, StripOptions,
};
use reeb_core::indices::{cz_index_refined, SpectrumOptions};
use reeb_core::models::{
    HenonHeiles, LinearKind, LocalModelParams, ModelDocument, ModelKind, SyntheticPassage, DEFAULT_ENERGY_CAP,
};
use reeb_core::orbits::{find_lyapunov_triple, find_periodic_orbit, OrbitOptions, PeriodicOrbit};
use reeb_core::transition::{
    compose_lifts, find_twist_periodic_points, CertificateOptions, GlobalLift, LocalLift, TransitionLift,
    TwistSearchOptions,
};
use reeb_core::{ReebError, Result};
use reeb_lab::json::{to_canonical, write_atomic};
use reeb_lab::pipeline::random_words;
use reeb_lab::{emit_plot_data, run_pipeline, run_pipeline_with_workers, PlotKind, RunConfig, StageStatus};
use serde::Serialize;

/// Periodic orbits, indices, transition lifts and horseshoes of Reeb flows.
#[derive(Parser)]
#[command(name = "reeb-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model document or print a template.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Integrate a flow and print the trajectory as CSV.
    Flow {
        #[arg(long)]
        model: PathBuf,
        /// Start state, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        state: Vec<f64>,
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Locate periodic orbits (the Lyapunov triple for Hénon-Heiles models).
    Orbits(OrbitArgs),
    /// Conley-Zehnder indices of the located orbits.
    Index {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, default_value_t = 128)]
        grid: usize,
    },
    /// Passage-time ladders, composed-lift certificates and homoclinic spirals.
    Transition {
        #[command(subcommand)]
        action: TransitionAction,
    },
    /// Strip detection and horseshoe checks for a planar map.
    Horseshoe {
        #[command(subcommand)]
        action: HorseshoeAction,
    },
    /// Separated-set entropy estimate of a planar map.
    Entropy {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        max_iterate: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon_base: f64,
        #[arg(long, default_value_t = 0.5)]
        column: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the staged pipeline of a configuration file.
    Run {
        config: PathBuf,
        /// Overrides the configured output directory and the environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Extract CSV plot data from a stage artifact.
    PlotData {
        artifact: PathBuf,
        /// section-scatter, spiral, strips or entropy-curve.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ModelAction {
    /// Parse and build a model document.
    Validate { path: PathBuf },
    /// Print a model document with default parameters.
    Template { kind: String },
}

#[derive(Args)]
struct OrbitArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    guess: Option<Vec<f64>>,
    #[arg(long)]
    period: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LocalArgs {
    /// Coefficients of `u(w)`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    u: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    period: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl LocalArgs {
    fn lift(&self) -> Result<LocalLift> {
        LocalLift::new(self.u.clone(), self.period, self.delta)
    }
}

#[derive(Subcommand)]
enum TransitionAction {
    /// Passage times at radii `δ/2^m`.
    Ladder {
        #[command(flatten)]
        local: LocalArgs,
        #[arg(long, default_value_t = 15)]
        steps: usize,
    },
    /// Certificate of the local lift composed with a trigonometric global passage.
    Certify {
        #[command(flatten)]
        local: LocalArgs,
        #[arg(long, default_value_t = 0.3)]
        shift: f64,
        #[arg(long, default_value_t = 0.05)]
        amp: f64,
        #[arg(long, default_value_t = 0.3)]
        radial_amp: f64,
        #[arg(long, default_value_t = 1)]
        k_min: i64,
        #[arg(long, default_value_t = 8)]
        k_max: i64,
    },
    /// Intersections of the twisted arc `t = γ` with `t = β`.
    Homoclinic {
        #[command(flatten)]
        local: LocalArgs,
        #[arg(long, default_value_t = 10)]
        turns: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
    },
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, default_value_t = 65)]
    lines: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl MapArgs {
    fn strip_options(&self) -> StripOptions {
        StripOptions {
            n_max: self.n_max,
            lines: self.lines,
            ..StripOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum HorseshoeAction {
    /// Horizontal and vertical strips.
    Detect(MapArgs),
    /// Moser conditions on the detected strips.
    Verify {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Full certificate: strips, Moser conditions and invariant cones.
    Cones {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 0.4)]
        mu: f64,
        #[arg(long, default_value_t = 41)]
        samples: usize,
    },
    /// Entropy lower bound `ln N` of a certified horseshoe.
    Entropy {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 0.4)]
        mu: f64,
    },
    /// Realize random words and check the itinerary shift.
    Words {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Word length; 0 uses `n_max`.
        #[arg(long, default_value_t = 0)]
        length: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = to_canonical(value)?;
    match output {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn template(kind: &str) -> Result<ModelDocument> {
    let k = match kind {
        "henon-heiles" => ModelKind::HenonHeiles {
            energy: 1.0 / 6.0 + 1e-3,
            energy_cap: DEFAULT_ENERGY_CAP,
        },
        "isotropic-oscillator" => ModelKind::IsotropicOscillator { energy: 0.5 },
        "local-model" => ModelKind::LocalModel(LocalModelParams::constant(1.0, 1.0, 1.0)),
        "linear-reeb" => ModelKind::LinearReeb {
            kind: LinearKind::Hyperbolic { turns: 1, rate: 0.5 },
            period: 1.0,
        },
        "synthetic-passage" => ModelKind::SyntheticPassage(SyntheticPassage {
            alpha: 0.2,
            beta: 0.5,
            kappa: 0.3,
        }),
        "affine-horseshoe" => ModelKind::AffineHorseshoe {
            expansion: 3.0,
            n_branches: 2,
        },
        "rotation" => ModelKind::Rotation { angle: 0.3 },
        "spiral-horseshoe" => ModelKind::SpiralHorseshoe(reeb_core::horseshoe::SpiralHorseshoe::standard()),
        other => return Err(ReebError::InvalidParameter(format!("unknown model kind '{other}'"))),
    };
    ModelDocument::new(kind, k)
}

fn locate_orbits(args: &OrbitArgs) -> Result<(ModelDocument, Vec<PeriodicOrbit>)> {
    let doc = ModelDocument::load(&args.model)?;
    let flow = doc.build_flow()?;
    let opts = OrbitOptions::default();
    let orbits = match (&doc.kind, &args.guess) {
        (ModelKind::HenonHeiles { energy, energy_cap }, None) => {
            find_lyapunov_triple(&HenonHeiles::with_cap(*energy, *energy_cap)?, &opts)?.orbits
        }
        (_, Some(guess)) => {
            let period = args
                .period
                .ok_or_else(|| ReebError::InvalidParameter("--period is required with --guess".into()))?;
            vec![find_periodic_orbit(flow.as_ref(), guess, period, &opts)?]
        }
        (_, None) => return Err(ReebError::InvalidParameter("--guess and --period are required for this model".into())),
    };
    Ok((doc, orbits))
}

fn load_map(path: &Path) -> Result<Box<dyn reeb_core::models::PlanarMap>> {
    ModelDocument::load(path)?.build_map()
}

#[derive(Serialize)]
struct IndexRow {
    orbit: usize,
    period: f64,
    index: i64,
    eigenvalue_shift: f64,
    degenerate: bool,
}

#[derive(Serialize)]
struct LadderRow {
    m: usize,
    r: f64,
    delta_t: f64,
    raw_delta_t: f64,
}

#[derive(Serialize)]
struct EntropyBound {
    map: String,
    symbols: usize,
    certified: bool,
    lower_bound: Option<f64>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Model { action } => match action {
            ModelAction::Validate { path } => {
                let doc = ModelDocument::load(&path)?;
                if doc.is_map() {
                    doc.build_map()?;
                } else {
                    doc.build_flow()?;
                }
                println!("{}: valid {} ({})", doc.name, if doc.is_map() { "map" } else { "flow" }, doc.frame_spec);
                Ok(())
            }
            ModelAction::Template { kind } => emit(&template(&kind)?, None),
        },
        Command::Flow {
            model,
            state,
            time,
            tol,
            output,
        } => {
            let flow = ModelDocument::load(&model)?.build_flow()?;
            if state.len() != flow.dim() {
                return Err(ReebError::InvalidParameter(format!(
                    "state has {} components, model needs {}",
                    state.len(),
                    flow.dim()
                )));
            }
            let traj = integrate(flow.as_ref(), &state, 0.0, time, &IntegratorOptions::with_tol(tol))?;
            let drift = conserved_drift(flow.as_ref(), &traj);
            eprintln!("steps {} conserved drift {:?}", traj.len(), drift);
            let csv = traj.to_csv();
            match output {
                Some(p) => write_atomic(&p, csv.as_bytes()),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::Orbits(args) => {
            let (_, orbits) = locate_orbits(&args)?;
            emit(&orbits, args.output.as_deref())
        }
        Command::Index { orbit, grid } => {
            let (doc, orbits) = locate_orbits(&orbit)?;
            let flow = doc.build_flow()?;
            let mut rows = Vec::new();
            for (i, o) in orbits.iter().enumerate() {
                let r = cz_index_refined(o, flow.as_ref(), grid, &SpectrumOptions::default())?;
                rows.push(IndexRow {
                    orbit: i,
                    period: o.period,
                    index: r.fine.index,
                    eigenvalue_shift: r.eigenvalue_shift,
                    degenerate: r.fine.degenerate,
                });
            }
            emit(&rows, orbit.output.as_deref())?;
            if let Some(row) = rows.iter().find(|r| r.degenerate) {
                return Err(ReebError::Undetermined(format!(
                    "orbit {} is degenerate; the index is the generalized one",
                    row.orbit
                )));
            }
            Ok(())
        }
        Command::Transition { action } => match action {
            TransitionAction::Ladder { local, steps } => {
                let lift = local.lift()?;
                let rows: Vec<LadderRow> = (1..=steps)
                    .map(|m| {
                        let r = local.delta / 2f64.powi(m as i32);
                        LadderRow {
                            m,
                            r,
                            delta_t: lift.delta_t(r),
                            raw_delta_t: lift.raw_delta_t(r),
                        }
                    })
                    .collect();
                emit(&rows, local.output.as_deref())
            }
            TransitionAction::Certify {
                local,
                shift,
                amp,
                radial_amp,
                k_min,
                k_max,
            } => {
                let lift = local.lift()?;
                let global = GlobalLift::trigonometric(shift, amp, 0.5, 1.0, radial_amp, lift.domain())?;
                let composed = compose_lifts(
                    vec![TransitionLift::LocalExterior(lift), TransitionLift::Global(global)],
                    &CertificateOptions::default(),
                )?;
                let levels = find_twist_periodic_points(&composed, k_min..=k_max, &TwistSearchOptions::default())?;
                emit(&serde_json::json!({ "lift": composed, "twist_levels": levels }), local.output.as_deref())
            }
            TransitionAction::Homoclinic {
                local,
                turns,
                gamma,
                beta,
                lambda,
            } => {
                let lift = local.lift()?;
                let report = detect_transverse_homoclinic(
                    &lift,
                    &GraphArc::constant(gamma, lift.domain()),
                    &GraphArc::constant(beta, lift.domain()),
                    turns,
                    lambda,
                    1e-12,
                )?;
                emit(&report, local.output.as_deref())?;
                if !report.tangential.is_empty() {
                    return Err(ReebError::Undetermined(format!(
                        "{} crossings have margin inside the tolerance",
                        report.tangential.len()
                    )));
                }
                Ok(())
            }
        },
        Command::Horseshoe { action } => horseshoe(action),
        Command::Entropy {
            model,
            samples,
            max_iterate,
            epsilon_base,
            column,
            output,
        } => {
            let map = load_map(&model)?;
            let opts = EntropyOptions {
                column,
                samples,
                max_iterate,
                epsilon_base,
                ..EntropyOptions::default()
            };
            emit(&entropy_separated_sets(map.as_ref(), &opts)?, output.as_deref())
        }
        Command::Run {
            config,
            output_dir,
            workers,
        } => {
            let mut cfg = RunConfig::load(&config)?.with_env_override();
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let manifest = match workers {
                Some(n) => run_pipeline_with_workers(&cfg, n)?,
                None => run_pipeline(&cfg)?,
            };
            for s in &manifest.stages {
                let status = serde_json::to_string(&s.status)?;
                match &s.reason {
                    Some(r) => eprintln!("{:<12} {} ({r})", s.stage, status.trim_matches('"')),
                    None => eprintln!("{:<12} {}", s.stage, status.trim_matches('"')),
                }
            }
            println!("{}", cfg.output_dir.join(reeb_lab::manifest::MANIFEST_FILE).display());
            if let Some(f) = manifest.stages.iter().find(|s| s.status == StageStatus::Failed) {
                let reason = format!("stage {}: {}", f.stage, f.reason.clone().unwrap_or_default());
                return Err(match f.exit_code {
                    Some(2) => ReebError::InvalidParameter(reason),
                    Some(4) => ReebError::Undetermined(reason),
                    _ => ReebError::Numerical(reason),
                });
            }
            Ok(())
        }
        Command::PlotData { artifact, kind, out } => {
            let path = emit_plot_data(&artifact, kind.parse::<PlotKind>()?, &out)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn horseshoe(action: HorseshoeAction) -> Result<()> {
    match action {
        HorseshoeAction::Detect(m) => {
            let map = load_map(&m.model)?;
            emit(&detect_strips(map.as_ref(), &m.strip_options())?, m.output.as_deref())
        }
        HorseshoeAction::Verify { map: m, tol, seed } => {
            let map = load_map(&m.model)?;
            let strips = detect_strips(map.as_ref(), &m.strip_options())?;
            let opts = MoserOptions {
                tol,
                seed,
                ..MoserOptions::default()
            };
            let report = verify_moser_conditions(map.as_ref(), &strips, &opts);
            emit(&report, m.output.as_deref())?;
            if !report.passed {
                return Err(ReebError::Numerical(format!(
                    "Moser conditions fail: {}",
                    serde_json::to_string(&report.witnesses.first())?
                )));
            }
            Ok(())
        }
        HorseshoeAction::Cones { map: m, mu, samples } => {
            let map = load_map(&m.model)?;
            let cert = certify_horseshoe(map.as_ref(), &m.strip_options(), &MoserOptions::default(), mu, samples)?;
            emit(&cert, m.output.as_deref())?;
            if !cert.passed {
                return Err(ReebError::Numerical(format!(
                    "certificate fails: moser {}, cones {} (violation {})",
                    cert.moser.passed,
                    cert.cones.passed,
                    serde_json::to_string(&cert.cones.violation)?
                )));
            }
            Ok(())
        }
        HorseshoeAction::Entropy { map: m, mu } => {
            let map = load_map(&m.model)?;
            let cert = certify_horseshoe(map.as_ref(), &m.strip_options(), &MoserOptions::default(), mu, 41)?;
            let bound = EntropyBound {
                map: map.name().to_string(),
                symbols: cert.symbols,
                certified: cert.passed,
                lower_bound: cert.passed.then(|| cert.entropy_lower_bound),
            };
            emit(&bound, m.output.as_deref())
        }
        HorseshoeAction::Words {
            map: m,
            count,
            length,
            seed,
        } => {
            let map = load_map(&m.model)?;
            let strips = detect_strips(map.as_ref(), &m.strip_options())?;
            let len = if length == 0 { m.n_max } else { length };
            let words = random_words(seed, strips.symbols, len, count);
            let report = semiconjugacy_check(map.as_ref(), &strips, &words);
            emit(&report, m.output.as_deref())?;
            if !report.passed {
                return Err(ReebError::Numerical(format!(
                    "{} of {} words realized; failures {:?}",
                    report.realized, report.words, report.failures
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
