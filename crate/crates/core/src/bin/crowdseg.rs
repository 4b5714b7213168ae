use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crowdseg::flowfield::{flow_spectrum, FlowField};
use crowdseg::io;
use crowdseg::pipeline::{
    self, advect_stage, flow_on_grid, flow_stage, ftle_offset, ftle_stage, mean_stage,
    particle_grid, render_overlay, run_pipeline, segment_stage, PipelineInput,
};
use crowdseg::synthetic::{gen_field, gen_frames, ScenarioKind, ScenarioSpec};
use crowdseg::{Error, PipelineConfig, Result};

/// Crowd flow segmentation: optical flow, particle advection, FTLE and
/// watershed segmentation.
#[derive(Parser)]
#[command(name = "crowdseg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage and write all artefacts.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Optical flow between consecutive frames, plus their mean.
    Flow {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Forward and backward flow maps from .flo fields.
    Advect {
        #[arg(long, num_args = 1.., required = true)]
        flo: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Smoothed FTLE fields from a pair of flow maps.
    Ftle {
        #[arg(long)]
        forward: PathBuf,
        #[arg(long)]
        backward: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Watershed segmentation and clean-up of an FTLE field.
    Segment {
        /// Combined FTLE field (SFLD).
        #[arg(long)]
        ftle: PathBuf,
        /// Flow fields the FTLE was computed from.
        #[arg(long, num_args = 1.., required = true)]
        flo: Vec<PathBuf>,
        /// Frame to draw the overlay on; defaults to the flow magnitude.
        #[arg(long)]
        frame: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate a synthetic scenario: frames, analytic field and masks.
    Synth(SynthArgs),
    /// Log-magnitude and phase images of a flow field's 2-D spectrum.
    Spectrum {
        #[arg(long)]
        flo: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// Directory of PGM/PNG frames, read in lexicographic filename order.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Precomputed .flo fields, used in the given order.
    #[arg(long, num_args = 1..)]
    flo: Option<Vec<PathBuf>>,
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set seg.mergeBand=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long = "T", value_name = "FRAMES")]
    duration: Option<f64>,
    #[arg(long = "h")]
    step: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    smoothness: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long)]
    combine: Option<String>,
    #[arg(long)]
    min_area: Option<usize>,
    #[arg(long)]
    vacuum_threshold: Option<f64>,
    #[arg(long)]
    merge_angle: Option<f64>,
    #[arg(long)]
    merge_band: Option<usize>,
}

impl ConfigArgs {
    /// Config file, then `--set` pairs, then the named flags.
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set {pair}: expected KEY=VALUE")))?;
            cfg.set(k.trim(), v)?;
        }
        let named = [
            ("advect.T", self.duration.map(|v| v.to_string())),
            ("advect.h", self.step.map(|v| v.to_string())),
            ("advect.gridStep", self.grid_step.map(|v| v.to_string())),
            ("advect.mode", self.mode.clone()),
            ("flow.window", self.window.clone()),
            ("flow.smoothness", self.smoothness.map(|v| v.to_string())),
            ("flow.iterations", self.iterations.map(|v| v.to_string())),
            ("ftle.sigma", self.sigma.map(|v| v.to_string())),
            ("ftle.margin", self.margin.map(|v| v.to_string())),
            ("ftle.combine", self.combine.clone()),
            ("seg.minArea", self.min_area.map(|v| v.to_string())),
            (
                "seg.vacuumThreshold",
                self.vacuum_threshold.map(|v| v.to_string()),
            ),
            ("seg.mergeAngleDeg", self.merge_angle.map(|v| v.to_string())),
            ("seg.mergeBand", self.merge_band.map(|v| v.to_string())),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Uniform,
    Rotation,
    Saddle,
    DoubleGyre,
    CounterFlow,
    Annulus,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    frames: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Uniform velocity, px/frame.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    u: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    v: f64,
    /// Counter-flow and annulus speed, px/frame.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Rotation rate, rad/frame.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    omega: f64,
    /// Saddle strain rate, 1/frame.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    rate: f64,
    /// Annulus radii, px; default to 0.15 and 0.4 of the smaller side.
    #[arg(long)]
    inner: Option<f64>,
    #[arg(long)]
    outer: Option<f64>,
}

impl SynthArgs {
    fn spec(&self) -> Result<ScenarioSpec> {
        let center = (
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        );
        let side = self.width.min(self.height) as f64;
        let kind = match self.kind {
            Kind::Uniform => ScenarioKind::Uniform {
                u: self.u,
                v: self.v,
            },
            Kind::Rotation => ScenarioKind::Rotation {
                omega: self.omega,
                center,
            },
            Kind::Saddle => ScenarioKind::Saddle {
                rate: self.rate,
                center,
            },
            Kind::DoubleGyre => ScenarioSpec::double_gyre(self.width, self.height).kind,
            Kind::CounterFlow => ScenarioKind::CounterFlow { speed: self.speed },
            Kind::Annulus => ScenarioKind::Annulus {
                speed: self.speed,
                inner: self.inner.unwrap_or(0.15 * side),
                outer: self.outer.unwrap_or(0.4 * side),
                center,
            },
        };
        ScenarioSpec::new(kind, self.width, self.height, self.frames)
    }
}

fn load_flows(paths: &[PathBuf]) -> Result<Vec<FlowField>> {
    match PipelineInput::from_flo_files(paths)? {
        PipelineInput::Flows(f) => Ok(f),
        PipelineInput::Frames(_) => unreachable!(),
    }
}

fn out_dir(path: &Path) -> Result<&Path> {
    pipeline::create_dir(path)?;
    Ok(path)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Pipeline { input, out, config } => {
            let cfg = config.resolve()?;
            let input = match (input.frames, input.flo) {
                (Some(dir), _) => PipelineInput::from_frames_dir(&dir)?,
                (None, Some(files)) => PipelineInput::from_flo_files(&files)?,
                (None, None) => unreachable!("clap enforces one input"),
            };
            let result = run_pipeline(&input, &cfg)?;
            pipeline::write_pipeline_artifacts(&out, &result, &cfg)?;
            eprintln!(
                "crowdseg: {} segment(s) written to {}",
                result.segments.labels.count(),
                out.display()
            );
        }
        Command::Flow {
            frames,
            out,
            config,
        } => {
            let cfg = config.resolve()?;
            let frames = io::load_frames(&frames)?;
            let fields = flow_stage(&frames, &cfg)?;
            let mean = mean_stage(&fields, &cfg)?;
            pipeline::write_flow_artifacts(out_dir(&out)?, &fields, &mean)?;
        }
        Command::Advect { flo, out, config } => {
            let cfg = config.resolve()?;
            let fields = load_flows(&flo)?;
            let (forward, backward) = advect_stage(&fields, &cfg)?;
            pipeline::write_advect_artifacts(out_dir(&out)?, &forward, &backward)?;
        }
        Command::Ftle {
            forward,
            backward,
            out,
            config,
        } => {
            let cfg = config.resolve()?;
            let forward = io::read_fmap(&io::read_file(&forward)?, cfg.advect_grid_step)?;
            let backward = io::read_fmap(&io::read_file(&backward)?, cfg.advect_grid_step)?;
            let ftle = ftle_stage(&forward, &backward, &cfg)?;
            pipeline::write_ftle_artifacts(out_dir(&out)?, &ftle)?;
        }
        Command::Segment {
            ftle,
            flo,
            frame,
            out,
            config,
        } => {
            let cfg = config.resolve()?;
            let height = io::read_sfld(&io::read_file(&ftle)?)?.with_offset(ftle_offset(&cfg));
            let fields = load_flows(&flo)?;
            let mean = mean_stage(&fields, &cfg)?;
            let grid = particle_grid(mean.width(), mean.height(), &cfg)?;
            let grid_flow = flow_on_grid(&mean, &grid)?;
            let seg = segment_stage(&height, &grid_flow, &cfg)?;
            let base = frame.as_deref().map(io::load_frame).transpose()?;
            let overlay = render_overlay(&seg.labels, &grid, &mean, base.as_ref())?;
            pipeline::write_segment_artifacts(out_dir(&out)?, &seg, &overlay)?;
            eprintln!("crowdseg: {} segment(s)", seg.labels.count());
        }
        Command::Synth(args) => {
            let spec = args.spec()?;
            let dir = out_dir(&args.out)?;
            // Frames get their own directory so it can be passed to --frames as is.
            let frames = dir.join("frames");
            pipeline::create_dir(&frames)?;
            for (i, frame) in gen_frames(&spec, args.seed)?.iter().enumerate() {
                io::save_frame_pgm(&frames.join(format!("frame_{i:04}.pgm")), frame)?;
            }
            io::write_file(
                &dir.join("field.flo"),
                &io::write_flo(&gen_field(&spec, 0.0)?),
            )?;
            if matches!(spec.kind, ScenarioKind::DoubleGyre { .. }) {
                for t in 0..spec.frames {
                    let f = gen_field(&spec, t as f64)?;
                    io::write_file(&dir.join(format!("field_{t:04}.flo")), &io::write_flo(&f))?;
                }
            }
            if let Some(mask) = spec.ground_truth() {
                io::write_file(
                    &dir.join("mask.pgm"),
                    &io::write_pgm8(spec.width, spec.height, &mask),
                )?;
            }
        }
        Command::Spectrum { flo, out } => {
            let field = io::read_flo(&io::read_file(&flo)?)?;
            let spectrum = flow_spectrum(&field);
            let dir = out_dir(&out)?;
            io::write_file(
                &dir.join("spectrum_magnitude.png"),
                &io::render_scalar_png(&spectrum.log_magnitude)?,
            )?;
            io::write_file(
                &dir.join("spectrum_phase.png"),
                &io::render_scalar_png(&spectrum.phase)?,
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crowdseg: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
