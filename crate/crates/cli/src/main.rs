#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{RunConfig, SensorKind};
use dsd_core::sensors::{
    calibrate_operating_point, probe_slope, sensor_response_curve, CalibrationReport,
    CalibrationScan, FieldSensorModel, MassSensorModel, SensorModel,
};
use dsd_core::sweeps::{line_cut, max_slope, sweep_2d};
use dsd_core::propagator::propagate_with_trajectory;
use dsd_core::{tau_min, ComplexState3, DetuningPair, PulseSchedule};

#[derive(Parser)]
#[command(name = "dsd", version, about = "Three-level STIRAP with dressed-states driving")]
struct Cli {
    /// TOML config, or a previous output file to re-run from its echo block.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set tau_over_taum=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0, global = true)]
    parallel: usize,
    /// Also write a gnuplot script next to `--out`.
    #[arg(long, global = true)]
    gnuplot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run from |1⟩ with a population trajectory.
    Transfer,
    /// Final-population map over (δ1, δ2).
    Sweep,
    /// P3 along the degenerate or non-degenerate axis.
    Cut,
    /// Sensor response curve P3(X).
    Sensor { kind: Kind },
    /// Choose an operating offset for a sensor.
    Calibrate { kind: Kind },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Mass,
    Field,
}

impl From<Kind> for SensorKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Mass => SensorKind::Mass,
            Kind::Field => SensorKind::Field,
        }
    }
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<dsd_core::Error> for Failure {
    fn from(e: dsd_core::Error) -> Self {
        match e {
            dsd_core::Error::Io(io) => Failure::Io(io.to_string()),
            e if e.is_numerical() => Failure::Numerical(e.to_string()),
            e => Failure::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("dsd: configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("dsd: numerical error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("dsd: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.gnuplot && cli.out.is_none() {
        return Err(Failure::Config("--gnuplot requires --out".into()));
    }
    let sensor = match cli.command {
        Command::Sensor { kind } | Command::Calibrate { kind } => Some(kind.into()),
        _ => None,
    };
    let cfg = config::load(cli.config.as_deref(), &cli.set)?.resolve(sensor)?;
    let label = match &cli.command {
        Command::Transfer => "transfer".to_string(),
        Command::Sweep => "sweep".to_string(),
        Command::Cut => "cut".to_string(),
        Command::Sensor { kind } => format!("sensor {}", kind_name(*kind)),
        Command::Calibrate { kind } => format!("calibrate {}", kind_name(*kind)),
    };

    // Everything is computed before the output file is opened, so a failed
    // run never leaves a partial file behind.
    let mut body = Vec::new();
    body.extend_from_slice(cfg.echo(&label).as_bytes());
    let plot = match &cli.command {
        Command::Transfer => transfer(&cfg, &mut body)?,
        Command::Sweep => sweep(&cfg, cli.parallel, &mut body)?,
        Command::Cut => cut(&cfg, cli.parallel, &mut body)?,
        Command::Sensor { kind } => sensor_curve(&cfg, (*kind).into(), cli.parallel, &mut body)?,
        Command::Calibrate { kind } => calibrate(&cfg, (*kind).into(), cli.parallel, &mut body)?,
    };

    match &cli.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(&body)?;
            f.flush()?;
            if cli.gnuplot {
                write_gnuplot(path, &plot)?;
            }
        }
        None => io::stdout().lock().write_all(&body)?,
    }
    Ok(())
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Mass => "mass",
        Kind::Field => "field",
    }
}

fn build_model(cfg: &RunConfig, kind: SensorKind) -> Result<Box<dyn SensorModel>, Failure> {
    let units = cfg.units()?;
    Ok(match kind {
        SensorKind::Mass => Box::new(MassSensorModel::new(
            std::f64::consts::TAU * cfg.omega_m_ghz * 1e9,
            cfg.m_resonator_g,
            units,
            cfg.tau(),
        )?),
        SensorKind::Field => {
            let mut m = FieldSensorModel::new(units, cfg.tau())?;
            m.gamma_e_mhz_per_gauss = cfg.gamma_e_mhz_per_gauss;
            Box::new(m)
        }
    })
}

/// What the gnuplot script should draw.
enum Plot {
    Lines { x: &'static str, y: &'static str, cols: Vec<(usize, &'static str)> },
    Map,
    None,
}

fn transfer(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Plot, Failure> {
    let tau = cfg.tau() * tau_min(1.0)?;
    let schedule = PulseSchedule::new(cfg.scheme()?, cfg.amplitude, tau)?
        .with_window_multiplier(cfg.window_multiplier)?;
    let r = propagate_with_trajectory(
        &schedule,
        DetuningPair::new(cfg.delta1, cfg.delta2),
        &ComplexState3::basis(1),
        &cfg.integrator(),
        cfg.trajectory_samples,
    )?;
    let [p1, p2, p3] = r.populations;
    writeln!(out, "# final_populations = {p1},{p2},{p3}")?;
    writeln!(out, "# norm_drift = {}", r.norm_drift)?;
    writeln!(out, "# step = {}", r.step)?;
    r.write_trajectory_csv(&mut *out)?;
    eprintln!("P1 = {p1:.9}  P2 = {p2:.9}  P3 = {p3:.9}");
    Ok(Plot::Lines {
        x: "t (1/Omega0)",
        y: "population",
        cols: vec![(2, "P1"), (3, "P2"), (4, "P3")],
    })
}

fn sweep(cfg: &RunConfig, threads: usize, out: &mut Vec<u8>) -> Result<Plot, Failure> {
    let map = sweep_2d(
        cfg.scheme()?,
        cfg.tau(),
        cfg.delta_range(cfg.grid_n),
        &cfg.integrator(),
        threads,
    )?;
    map.write_csv(&mut *out)?;
    Ok(Plot::Map)
}

fn cut(cfg: &RunConfig, threads: usize, out: &mut Vec<u8>) -> Result<Plot, Failure> {
    let integrator = cfg.integrator();
    let scheme = cfg.scheme()?;
    let c = line_cut(
        scheme,
        cfg.tau(),
        cfg.cut_axis()?,
        cfg.delta_range(cfg.cut_n),
        &integrator,
        threads,
    )?;
    let s = max_slope(&c)?;
    writeln!(out, "# max_slope = {}", s.slope)?;
    writeln!(out, "# max_slope_delta = {}", s.delta)?;
    c.write_csv(&mut *out, scheme, &integrator)?;
    Ok(Plot::Lines {
        x: "delta (Omega0)",
        y: "P3",
        cols: vec![(2, "P3")],
    })
}

fn quantity_range(cfg: &RunConfig) -> (f64, f64) {
    (cfg.x_min.unwrap_or(0.0), cfg.x_max.unwrap_or(1.0))
}

fn sensor_curve(
    cfg: &RunConfig,
    kind: SensorKind,
    threads: usize,
    out: &mut Vec<u8>,
) -> Result<Plot, Failure> {
    let model = build_model(cfg, kind)?;
    let integrator = cfg.integrator();
    // Range problems are reported before any calibration work.
    let (lo, hi) = quantity_range(cfg);
    model.detuning(lo, cfg.offset)?;
    model.detuning(hi, cfg.offset)?;
    let offset = if cfg.calibrate {
        let point = run_calibration(cfg, model.as_ref(), threads, out)?;
        point.detuning_offset
    } else {
        cfg.offset
    };
    let curve = sensor_response_curve(model.as_ref(), offset, (lo, hi), cfg.x_n, &integrator, threads)?;
    curve.write_csv(&mut *out)?;
    Ok(Plot::Lines {
        x: match kind {
            SensorKind::Mass => "delta m (g)",
            SensorKind::Field => "B (G)",
        },
        y: "P3",
        cols: vec![(2, "P3")],
    })
}

fn run_calibration(
    cfg: &RunConfig,
    model: &dyn SensorModel,
    threads: usize,
    out: &mut Vec<u8>,
) -> Result<dsd_core::sensors::OperatingPoint, Failure> {
    let integrator = cfg.integrator();
    let measured = match cfg.measured_p3 {
        Some(p) => p,
        None => {
            let prop_p3 = dsd_core::transfer_population(
                &model.schedule()?,
                model.axis().pair(cfg.offset),
                &integrator,
            )?;
            prop_p3.clamp(0.0, 1.0)
        }
    };
    let scan = CalibrationScan {
        range: cfg.delta_range(cfg.cut_n),
        threads,
    };
    let point = calibrate_operating_point(model, cfg.offset, measured, cfg.threshold, &integrator, &scan)?;
    let report = CalibrationReport {
        point: &point,
        threshold: cfg.threshold,
        measured_p3: measured,
        axis: model.axis(),
    };
    for line in report.to_string().lines() {
        writeln!(out, "# calibration.{line}")?;
    }
    Ok(point)
}

fn calibrate(
    cfg: &RunConfig,
    kind: SensorKind,
    threads: usize,
    out: &mut Vec<u8>,
) -> Result<Plot, Failure> {
    let model = build_model(cfg, kind)?;
    let point = run_calibration(cfg, model.as_ref(), threads, out)?;
    let slope = probe_slope(model.as_ref(), point.detuning_offset, &cfg.integrator())?;
    writeln!(out, "# probe_slope = {slope}")?;
    writeln!(out, "round,offset,slope")?;
    writeln!(out, "{},{},{}", point.round, point.detuning_offset, point.slope_at_point)?;
    eprintln!(
        "round {}: offset {} Omega0, slope {}",
        point.round, point.detuning_offset, point.slope_at_point
    );
    Ok(Plot::None)
}

fn write_gnuplot(data: &Path, plot: &Plot) -> io::Result<()> {
    let mut script = data.as_os_str().to_owned();
    script.push(".gp");
    let name = data.display();
    let mut f = BufWriter::new(File::create(PathBuf::from(script))?);
    writeln!(f, "set datafile separator ','")?;
    writeln!(f, "set key autotitle columnhead")?;
    match plot {
        Plot::Lines { x, y, cols } => {
            writeln!(f, "set xlabel '{x}'")?;
            writeln!(f, "set ylabel '{y}'")?;
            let parts: Vec<String> = cols
                .iter()
                .map(|(c, t)| format!("'{name}' using 1:{c} with lines title '{t}'"))
                .collect();
            writeln!(f, "plot {}", parts.join(", \\\n     "))?;
        }
        Plot::Map => {
            writeln!(f, "set xlabel 'delta2 (Omega0)'")?;
            writeln!(f, "set ylabel 'delta1 (Omega0)'")?;
            writeln!(f, "set view map")?;
            writeln!(f, "set cbrange [0:1]")?;
            writeln!(f, "plot '{name}' using 2:1:5 with image title 'P3'")?;
        }
        Plot::None => {
            writeln!(f, "set key off")?;
            writeln!(f, "plot '{name}' using 2:3 with points pt 7")?;
        }
    }
    writeln!(f, "pause mouse close")?;
    f.flush()
}
