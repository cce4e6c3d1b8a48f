use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use foveacodec::foveation::Gaze;
use foveacodec_cli::{
    cmd_decode, cmd_encode, cmd_map, cmd_metrics, cmd_rd_sweep, CliError, EncodeConfig, Fmsc, GazeSource,
    DEFAULT_SWEEP,
};

#[derive(Parser)]
#[command(name = "foveacodec", version, about = "Gaze-contingent foveated video codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Gaze: `center` or a CSV track of `frame_idx,x,y` rows. Frames before
    /// the first row look at the center; later gaps hold the last gaze.
    #[arg(long, default_value = "center")]
    gaze: GazeSource,
    /// Accept a gaze track that ends before the clip, holding its last gaze.
    #[arg(long)]
    hold_gaze: bool,
    /// Physical screen width in meters.
    #[arg(long, default_value_t = 0.02)]
    screen_width: f64,
    /// Viewing distance in meters.
    #[arg(long, default_value_t = 0.012)]
    distance: f64,
    /// Number of foveation levels.
    #[arg(long, default_value_t = 16)]
    levels: u8,
    /// Quantizer step at the finest level.
    #[arg(long, default_value_t = 4)]
    qbase: u16,
}

impl Shared {
    fn config(&self, fmsc: Fmsc) -> EncodeConfig {
        EncodeConfig {
            fmsc,
            gaze: self.gaze.clone(),
            hold_gaze: self.hold_gaze,
            q_base: self.qbase,
            levels: self.levels,
            screen_width: self.screen_width,
            viewing_distance: self.distance,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode a 4:2:0 Y4M clip.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Gaussian map width as `H/k` or pixels; `csf` (default) uses the
        /// eccentricity model.
        #[arg(long, default_value = "csf")]
        fmsc: Fmsc,
        #[command(flatten)]
        shared: Shared,
    },
    /// Decode an .fmvc stream to Y4M.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Encode at several gaussian map widths and write a rate/quality CSV.
    RdSweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Map widths (`H/k` or pixels); defaults to H/10,H/8,H/6,H/4,H/3,H/2.
        #[arg(long, value_delimiter = ',')]
        fmsc_set: Vec<Fmsc>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Per-frame quality of a Y4M or .fmvc test clip against a reference.
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Gaze override; by default an .fmvc test uses its recorded gaze.
        #[arg(long)]
        gaze: Option<GazeSource>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        hold_gaze: bool,
        #[arg(long, default_value_t = 0.02)]
        screen_width: f64,
        #[arg(long, default_value_t = 0.012)]
        distance: f64,
    },
    /// Write a foveation map as PGM.
    Map {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        /// Gaze as `x,y`; the frame center when absent.
        #[arg(long, value_parser = parse_point)]
        at: Option<(usize, usize)>,
        #[arg(long, default_value = "csf")]
        fmsc: Fmsc,
        /// Write the quantized level map instead of the continuous one.
        #[arg(long)]
        quantized: bool,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 16)]
        levels: u8,
        #[arg(long, default_value_t = 0.02)]
        screen_width: f64,
        #[arg(long, default_value_t = 0.012)]
        distance: f64,
    },
}

fn parse_point(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    Ok((
        x.trim().parse().map_err(|_| format!("bad x {x:?}"))?,
        y.trim().parse().map_err(|_| format!("bad y {y:?}"))?,
    ))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Encode {
            input,
            output,
            fmsc,
            shared,
        } => {
            let s = cmd_encode(&input, &output, &shared.config(fmsc))?;
            println!(
                "{} frames {}x{}, {} bytes, {:.4} bpp",
                s.frames, s.width, s.height, s.bytes_written, s.bpp
            );
            for (i, b) in s.frame_bits.iter().enumerate() {
                println!("frame {i}: {b} bits");
            }
        }
        Command::Decode { input, output } => {
            let s = cmd_decode(&input, &output)?;
            println!("{} frames {}x{}, {} bytes written", s.frames, s.width, s.height, s.bytes_written);
        }
        Command::RdSweep {
            input,
            out,
            fmsc_set,
            shared,
        } => {
            let set = if fmsc_set.is_empty() {
                DEFAULT_SWEEP.iter().map(|&k| Fmsc::Divisor(k)).collect()
            } else {
                fmsc_set
            };
            let rows = cmd_rd_sweep(&input, &out, &set, &shared.config(Fmsc::Csf))?;
            println!("{} points written to {}", rows.len(), out.display());
        }
        Command::Metrics {
            reference,
            test,
            gaze,
            out,
            hold_gaze,
            screen_width,
            distance,
        } => {
            let cfg = EncodeConfig {
                hold_gaze,
                screen_width,
                viewing_distance: distance,
                ..EncodeConfig::default()
            };
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    cmd_metrics(&reference, &test, gaze.as_ref(), &cfg, &mut buf)?;
                    std::fs::write(&path, buf).map_err(|source| CliError::Io { path, source })?;
                }
                None => {
                    cmd_metrics(&reference, &test, gaze.as_ref(), &cfg, std::io::stdout().lock())?;
                }
            }
        }
        Command::Map {
            width,
            height,
            at,
            fmsc,
            quantized,
            output,
            levels,
            screen_width,
            distance,
        } => {
            let gaze = at.map_or(Gaze::center(width, height), |(x, y)| Gaze::new(x, y));
            let cfg = EncodeConfig {
                levels,
                screen_width,
                viewing_distance: distance,
                ..EncodeConfig::default()
            };
            cmd_map(width, height, gaze, fmsc, quantized, &cfg, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
