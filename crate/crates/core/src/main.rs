use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use miquel::generators::{generate, GeneratorKind, GeneratorSpec};
use miquel::io::{self, IoError, NumberFormat, PatternFile, Provenance};
use miquel::lattice::Color;
use miquel::miquel::Direction;
use miquel::projective::Moebius;
use miquel::reconstruct::{complete_map_from_pcolor, reconstruct_from_x, reconstruct_from_y, CONCYCLIC_TOL};
use miquel::svg::{render_layer, RenderOptions};
use miquel::variables::{field, gamma_field, VarKind};
use miquel::verify::{run_suite, Suite, VerifyError, VerifyOptions};

#[derive(Parser)]
#[command(name = "miquel", version, about = "Circle patterns under Miquel dynamics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Fwd,
    Bwd,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum VarArg {
    Y,
    Xb,
    Xw,
    Wb,
    Ww,
    Gamma,
}

impl VarArg {
    fn kind(self) -> Option<VarKind> {
        Some(match self {
            VarArg::Y => VarKind::Y,
            VarArg::Xb => VarKind::Xb,
            VarArg::Xw => VarKind::Xw,
            VarArg::Wb => VarKind::Wb,
            VarArg::Ww => VarKind::Ww,
            VarArg::Gamma => return None,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Y,
    Xb,
    Xw,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a level-0 circle pattern.
    Generate {
        #[arg(long, value_parser = parse_kind)]
        kind: GeneratorKind,
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturbation strength; 0 gives the regular member of the class.
        #[arg(long, default_value_t = 0.15)]
        scale: f64,
        /// Möbius coefficients a,b,c,d as 4 reals or 8 reals (re,im pairs).
        #[arg(long, allow_hyphen_values = true)]
        moebius: Option<String>,
        /// Write decimal numbers instead of hex floats.
        #[arg(long)]
        decimal: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Apply Miquel steps.
    Evolve {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Dir::Fwd)]
        direction: Dir,
        #[arg(long)]
        decimal: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Export a variable field as CSV.
    Vars {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: VarArg,
        #[arg(long, allow_hyphen_values = true)]
        layer: Option<i64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run verification suites; exits 1 unless every check passes.
    Verify {
        #[arg(short, long)]
        input: PathBuf,
        /// Comma-separated suites, or all / general / subvarieties.
        #[arg(long, default_value = "general")]
        suite: String,
        #[arg(long, env = "MIQUEL_TOL_SCALE", default_value_t = 1.0)]
        tol_scale: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Rebuild centers from Y or points from X.
    Reconstruct {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long, value_enum)]
        from: Source,
        #[arg(long)]
        decimal: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Draw one layer as SVG.
    Render {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        layer: i64,
        #[arg(long)]
        show_points: bool,
        #[arg(long)]
        show_centers: bool,
        #[arg(long, value_enum)]
        label_vars: Option<VarArg>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Verification(String),
    Io(IoError),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Io(e)
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn number_format(decimal: bool) -> NumberFormat {
    if decimal {
        NumberFormat::Decimal
    } else {
        NumberFormat::Hex
    }
}

fn parse_moebius(s: &str) -> Result<Moebius, Failure> {
    let xs: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(usage)?;
    let cs: Vec<Complex64> = match xs.len() {
        4 => xs.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        8 => xs.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect(),
        _ => return Err(Failure::Usage("--moebius takes 4 or 8 numbers".into())),
    };
    Moebius::new(cs[0], cs[1], cs[2], cs[3]).map_err(usage)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|source| Failure::Io(IoError::File { path: path.display().to_string(), source }))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Generate { kind, rows, cols, seed, scale, moebius, decimal, output } => {
            let mut spec = GeneratorSpec::new(kind, cols, rows, seed).with_scale(scale);
            if let Some(m) = moebius {
                spec = spec.with_moebius(&parse_moebius(&m)?);
            }
            let map = generate(&spec).map_err(usage)?;
            let file = PatternFile { map, provenance: Provenance { generator: Some(spec), ..Default::default() } };
            io::save_map(&output, &file, number_format(decimal))?;
        }
        Cmd::Evolve { input, steps, direction, decimal, output } => {
            let file = io::load_map(&input)?;
            let direction = match direction {
                Dir::Fwd => Direction::Forward,
                Dir::Bwd => Direction::Backward,
            };
            let map = file.map.evolve(steps, direction).map_err(usage)?;
            let file = PatternFile { map, provenance: file.provenance.evolved(steps, direction) };
            io::save_map(&output, &file, number_format(decimal))?;
        }
        Cmd::Vars { input, kind, layer, output } => {
            let map = io::load_map(&input)?.map;
            let text = match kind.kind() {
                Some(k) => {
                    let f = field(&map, k);
                    let f = match layer {
                        Some(l) => f.layer(l),
                        None => f,
                    };
                    io::values_to_csv(&f.values)
                }
                None => {
                    let levels: Vec<i64> = match (layer, map.point_levels()) {
                        (Some(l), _) => vec![l],
                        (None, Some((lo, hi))) => (lo..=hi).collect(),
                        (None, None) => Vec::new(),
                    };
                    let mut rows = Vec::new();
                    for k in levels {
                        let l = map.layer(k).map_err(usage)?;
                        rows.push((k, gamma_field(&l)));
                    }
                    io::gamma_to_csv(&rows)
                }
            };
            io::write_file(&output, &text)?;
        }
        Cmd::Verify { input, suite, tol_scale, output } => {
            let map = io::load_map(&input)?.map;
            let suites = Suite::parse_list(&suite).map_err(usage)?;
            if !(tol_scale > 0.0 && tol_scale.is_finite()) {
                return Err(Failure::Usage("--tol-scale must be positive".into()));
            }
            let opts = VerifyOptions { tol_scale, ..Default::default() };
            let report = match run_suite(&map, &suites, &opts) {
                Ok(r) => r,
                Err(e @ VerifyError::WindowTooSmall(_)) => return Err(Failure::Verification(e.to_string())),
                Err(e) => return Err(usage(e)),
            };
            let mut text = report.to_json();
            text.push('\n');
            io::write_file(&output, &text)?;
            let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))));
            }
        }
        Cmd::Reconstruct { input, boundary, from, decimal, output } => {
            let values = io::values_from_csv(&read_text(&input)?)?;
            let bnd = io::points_from_csv(&read_text(&boundary)?)?;
            match from {
                Source::Y => {
                    let y = miquel::variables::VariableField { kind: VarKind::Y, values };
                    let rec = reconstruct_from_y(&y, &bnd).map_err(usage)?;
                    report_unreached(rec.unreached.len());
                    io::write_file(&output, &io::values_to_csv(&rec.values))?;
                }
                Source::Xb | Source::Xw => {
                    let (color, kind) = match from {
                        Source::Xb => (Color::Black, VarKind::Xb),
                        _ => (Color::White, VarKind::Xw),
                    };
                    let x = miquel::variables::VariableField { kind, values };
                    let rec = reconstruct_from_x(&x, &bnd, color).map_err(usage)?;
                    report_unreached(rec.unreached.len());
                    let points: BTreeMap<_, _> = rec.values;
                    let map = complete_map_from_pcolor(&points, color, CONCYCLIC_TOL).map_err(usage)?;
                    io::save_map(&output, &PatternFile { map, provenance: Provenance::default() }, number_format(decimal))?;
                }
            }
        }
        Cmd::Render { input, layer, show_points, show_centers, label_vars, output } => {
            let map = io::load_map(&input)?.map;
            let l = map.layer(layer).map_err(usage)?;
            let labels = match label_vars {
                Some(VarArg::Gamma) => return Err(Failure::Usage("labels take a site variable, not gamma".into())),
                Some(k) => k.kind().map(|k| field(&map, k)),
                None => None,
            };
            io::write_file(&output, &render_layer(&l, &RenderOptions { show_points, show_centers, labels }))?;
        }
    }
    Ok(())
}

fn report_unreached(n: usize) {
    if n > 0 {
        eprintln!("note: {n} sites in the slab could not be reached from the given boundary");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
