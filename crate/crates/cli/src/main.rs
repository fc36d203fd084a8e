use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sta_core::fast_forward::ff_potential;
use sta_core::formats::{Kind, ProtocolDoc};
use sta_core::pipeline::{self, Axis, ScanRequest, Settings, Summary};
use sta_core::StaError;

#[derive(Parser, Debug)]
#[command(name = "sta", version, about = "Design and verify shortcuts to adiabaticity")]
struct Cli {
    /// Spatial grid points for wave propagation (power of two).
    #[arg(long, global = true)]
    grid_nx: Option<usize>,
    /// Time step override.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a protocol file.
    #[command(subcommand)]
    Design(DesignKind),
    /// Simulate a protocol file and check its fidelity contract.
    Verify { file: PathBuf },
    /// Evaluate a grid of perturbations or durations.
    Scan(ScanArgs),
    /// Summarize a protocol file and export its schedules as CSV.
    Report { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum DesignKind {
    Expansion {
        #[arg(long)]
        omega0: f64,
        #[arg(long)]
        omegaf: f64,
        #[arg(long)]
        tf: f64,
        #[arg(long, default_value_t = 2000)]
        intervals: usize,
        /// Straight-line frequency ramp instead of the shortcut.
        #[arg(long)]
        linear: bool,
    },
    Transport {
        #[arg(long)]
        d: f64,
        #[arg(long)]
        tf: f64,
        #[arg(long)]
        omega0: f64,
        #[arg(long, default_value_t = 0.0)]
        g: f64,
        #[arg(long, default_value_t = 2000)]
        intervals: usize,
    },
    Twolevel {
        #[arg(long)]
        family: String,
        #[arg(long = "T")]
        duration: f64,
        /// Order of the systematic-optimal family.
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 2000)]
        intervals: usize,
    },
    CdIsing {
        #[arg(long, default_value_t = 8)]
        modes: usize,
        #[arg(long, default_value_t = 2.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda1: f64,
        #[arg(long)]
        tf: f64,
    },
    FfSplit {
        #[arg(long, default_value_t = 1.0)]
        a0: f64,
        #[arg(long)]
        xf: f64,
        #[arg(long)]
        tf: f64,
        #[arg(long, default_value_t = 16.0)]
        half_width: f64,
        #[arg(long, default_value_t = 512)]
        nx: usize,
        #[arg(long, default_value_t = 600)]
        nt: usize,
        #[arg(long, default_value_t = 0.0)]
        g1: f64,
    },
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// expansion, transport, twolevel, cd-ising or ff-split.
    kind: String,
    /// `name=start:stop:n`, `name=value` or `name=` (empty).
    #[arg(long = "axis")]
    axes: Vec<String>,
    /// `name=value`
    #[arg(long = "param")]
    params: Vec<String>,
}

fn exit_code(e: &StaError) -> u8 {
    match e {
        StaError::VerificationFailed { .. } => 2,
        StaError::SchemaError { .. } | StaError::InvalidSpec(_) => 3,
        StaError::BudgetExceeded { .. }
        | StaError::StepTooLarge { .. }
        | StaError::BoxTooSmall { .. }
        | StaError::NoConvergence { .. }
        | StaError::StepUnderflow { .. } => 4,
        _ => 1,
    }
}

fn write(path: &Path, text: &str) -> Result<(), StaError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn stem(file: &Path) -> String {
    file.file_stem().and_then(|s| s.to_str()).unwrap_or("protocol").to_string()
}

fn load(file: &Path) -> Result<ProtocolDoc, StaError> {
    ProtocolDoc::parse(&fs::read_to_string(file)?)
}

fn split_pair<'a>(what: &str, s: &'a str) -> Result<(&'a str, &'a str), StaError> {
    s.split_once('=')
        .ok_or_else(|| StaError::schema(what, format!("expected name=value, got {s:?}")))
}

fn design(cli: &Cli, kind: &DesignKind) -> Result<(), StaError> {
    let (doc, summary): (ProtocolDoc, Summary) = match *kind {
        DesignKind::Expansion {
            omega0,
            omegaf,
            tf,
            intervals,
            linear,
        } => pipeline::design_expansion_doc(omega0, omegaf, tf, intervals, linear)?,
        DesignKind::Transport {
            d,
            tf,
            omega0,
            g,
            intervals,
        } => pipeline::design_transport_doc(d, tf, omega0, g, intervals)?,
        DesignKind::Twolevel {
            ref family,
            duration,
            n,
            intervals,
        } => pipeline::design_twolevel_doc(family, duration, n, intervals)?,
        DesignKind::CdIsing {
            modes,
            lambda0,
            lambda1,
            tf,
        } => pipeline::design_ising_doc(modes, lambda0, lambda1, tf)?,
        DesignKind::FfSplit {
            a0,
            xf,
            tf,
            half_width,
            nx,
            nt,
            g1,
        } => pipeline::design_split_doc(a0, xf, tf, half_width, cli.grid_nx.unwrap_or(nx), nt, g1)?,
    };
    let path = cli.out.join(format!("{}.json", doc.kind().name()));
    write(&path, &doc.to_json())?;
    print!("{}", summary.render());
    println!("wrote {}", path.display());
    Ok(())
}

fn verify(cli: &Cli, file: &Path) -> Result<(), StaError> {
    let doc = load(file)?;
    let settings = Settings {
        grid_nx: cli.grid_nx,
        dt: cli.dt,
    };
    let v = pipeline::verify(&doc, &settings)?;
    let path = cli.out.join(format!("{}_report.csv", stem(file)));
    write(&path, &v.report_csv)?;
    println!(
        "{} {} {} = {:.10} (threshold {})",
        if v.passed { "PASS" } else { "FAIL" },
        v.kind.name(),
        v.metric,
        v.measured,
        v.threshold
    );
    println!("wrote {}", path.display());
    if v.passed {
        Ok(())
    } else {
        Err(StaError::VerificationFailed {
            what: v.metric.into(),
            measured: v.measured,
            threshold: v.threshold,
        })
    }
}

fn scan(cli: &Cli, args: &ScanArgs) -> Result<(), StaError> {
    let kind = Kind::parse(&args.kind)?;
    let mut req = ScanRequest::new(kind);
    req.settings = Settings {
        grid_nx: cli.grid_nx,
        dt: cli.dt,
    };
    for a in &args.axes {
        let (name, spec) = split_pair("axis", a)?;
        req = req.axis(name, Axis::parse(&format!("axis.{name}"), spec)?);
    }
    for p in &args.params {
        let (name, v) = split_pair("param", p)?;
        let v: f64 = v
            .parse()
            .map_err(|_| StaError::schema(format!("param.{name}"), format!("not a number: {v:?}")))?;
        req = req.param(name, v);
    }
    let csv = pipeline::scan(&req)?;
    let path = cli.out.join(format!("scan_{}.csv", kind.name()));
    write(&path, &csv)?;
    println!("{} rows", csv.lines().count().saturating_sub(1));
    println!("wrote {}", path.display());
    Ok(())
}

fn report(cli: &Cli, file: &Path) -> Result<(), StaError> {
    let doc = load(file)?;
    let mut lines = vec![format!("kind = {}", doc.kind().name())];
    let csv = match &doc {
        ProtocolDoc::Expansion(d) => {
            let p = d.to_protocol()?;
            lines.push(format!("gamma = {:.6e}", p.gamma()));
            lines.push(format!("min_omega2 = {:.6e}", p.omega2.min()));
            lines.push(format!("imaginary_frequency = {}", p.imaginary));
            p.to_csv()
        }
        ProtocolDoc::Transport(d) => {
            let p = d.to_protocol()?;
            lines.push(format!("variant = {}", p.variant.name()));
            lines.push(format!("max_excursion = {:.6e}", p.max_excursion));
            lines.push(format!("leaves_interval = {}", p.leaves_interval));
            p.to_csv()
        }
        ProtocolDoc::TwoLevel(d) => {
            let p = d.to_protocol()?;
            lines.push(format!("family = {}", p.family));
            lines.push(format!("max_rabi = {:.6e}", p.max_rabi()));
            lines.push(format!("pulse_area = {:.6e}", p.pulse_area()));
            p.to_csv()
        }
        ProtocolDoc::ModeSet(d) => {
            let m = d.to_modes();
            lines.push(format!("modes = {}", m.ks.len()));
            let mut out = String::from("t,lambda\n");
            for i in 0..=200 {
                let t = d.tf * i as f64 / 200.0;
                out.push_str(&format!("{:.16e},{:.16e}\n", t, m.ramp.at(t, 0)));
            }
            out
        }
        ProtocolDoc::Split(d) => {
            let ff = ff_potential(&d.to_design()?, d.g1, d.grid.nt)?;
            lines.push(format!("max_phase_residual = {:.6e}", ff.max_residual()));
            lines.push(format!("clamped_fraction = {:.6e}", ff.clamped));
            ff.to_csv()
        }
    };
    let path = cli.out.join(format!("{}_protocol.csv", stem(file)));
    write(&path, &csv)?;
    for l in lines {
        println!("{l}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), StaError> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| StaError::InvalidSpec(e.to_string()))?;
    }
    match &cli.command {
        Command::Design(kind) => design(cli, kind),
        Command::Verify { file } => verify(cli, file),
        Command::Scan(args) => scan(cli, args),
        Command::Report { file } => report(cli, file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
