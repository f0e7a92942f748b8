use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cli3d_core::descriptor::{DEFAULT_K_MAX, DEFAULT_MIN_AREA_FRACTION, DEFAULT_SEED};
use cli3d_core::hu::ScalingMode;
use cli3d_core::mesh::write_off;
use cli3d_core::normalize_pose;
use cli3d_core::raster::DEFAULT_RESOLUTION;
use cli3d_core::shapes::synthetic_corpus;
use cli3d_core::slicer::{extract_level_images, DEFAULT_PLANES};
use cli3d_engine::build::load_mesh;
use cli3d_engine::config::parse_kinds;
use cli3d_engine::eval::write_pr_csv;
use cli3d_engine::{build_index, evaluate_all, query_by_id, query_mesh, read_labels, Index, PipelineConfig};
use log::warn;

#[derive(Parser)]
#[command(name = "cli3d", version, about = "Level-image 3D shape retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Describe every OFF model in a directory and write an index.
    Index {
        dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// CSV of `model_id,class_label` rows.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Rank indexed models against an indexed id or an OFF file.
    Query {
        index: PathBuf,
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        id: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value = "10")]
        top: usize,
        #[arg(long, default_value = "cli")]
        kind: String,
        /// Pipeline config the query file must be processed with; it has to
        /// match the index. Defaults to the index's own config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Average 11-point precision over all labeled queries.
    Eval {
        index: PathBuf,
        #[arg(long)]
        kinds: Option<String>,
        /// Keep the query in its own ranking.
        #[arg(long)]
        keep_self: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write the level images of one model as PGM files.
    Slice {
        model: PathBuf,
        #[arg(long)]
        dump_slices: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PLANES)]
        planes: usize,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        /// Also write the pose-normalized mesh as OFF.
        #[arg(long)]
        dump_mesh: Option<PathBuf>,
    },
    /// Write the labelled synthetic corpus (OFF files plus labels.csv).
    Synth {
        dir: PathBuf,
        #[arg(long, default_value = "8")]
        per_class: usize,
        #[arg(long, default_value = "0.01")]
        jitter: f64,
        #[arg(long, default_value = "1")]
        seed: u64,
    },
    /// Print the canonical pipeline config for the given options.
    Config {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value = "cli,zernike,surface")]
    kinds: String,
    #[arg(long, default_value_t = DEFAULT_PLANES)]
    planes: usize,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    kmax: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    voxel: usize,
    #[arg(long, default_value_t = 8)]
    order: usize,
    #[arg(long, default_value = "signed_log")]
    scaling: String,
    /// Ignore level images smaller than this fraction of the largest one.
    #[arg(long, default_value_t = DEFAULT_MIN_AREA_FRACTION)]
    min_area: f64,
    /// File of surface-moment invariant expressions.
    #[arg(long)]
    surface_invariants: Option<PathBuf>,
}

impl PipelineArgs {
    fn to_config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig {
            kinds: parse_kinds(&self.kinds)?,
            voxel_resolution: self.voxel,
            zernike_order: self.order,
            ..Default::default()
        };
        cfg.cli.n_planes = self.planes;
        cfg.cli.resolution = self.resolution;
        cfg.cli.k_max = self.kmax;
        cfg.cli.seed = self.seed;
        cfg.cli.min_area_fraction = self.min_area;
        cfg.cli.scaling = self.scaling.parse::<ScalingMode>()?;
        if let Some(path) = &self.surface_invariants {
            cfg.surface_invariants =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index { dir, output, labels, pipeline } => {
            let config = pipeline.to_config()?;
            let labels = labels.map(|p| read_labels(&p)).transpose()?;
            let (index, report) = build_index(&dir, labels.as_ref(), &config)?;
            index.write(&output)?;
            eprintln!(
                "indexed {} models ({} skipped) into {}",
                report.indexed.len(),
                report.skipped.len(),
                output.display()
            );
        }
        Command::Query { index, id, file, top, kind, config } => {
            let index = Index::read(&index)?;
            let kind = kind.parse()?;
            let ranked = match (id, file) {
                (Some(id), _) => query_by_id(&index, &id, kind, Some(top))?,
                (None, Some(file)) => {
                    let cfg = match config {
                        Some(path) => {
                            let text = fs::read_to_string(&path)
                                .with_context(|| format!("reading {}", path.display()))?;
                            Some(PipelineConfig::from_canonical(&text)?)
                        }
                        None => None,
                    };
                    query_mesh(&index, &load_mesh(&file)?, kind, Some(top), cfg.as_ref())?
                }
                (None, None) => unreachable!("clap requires --id or --file"),
            };
            let mut out = io::stdout().lock();
            for (rank, hit) in ranked.hits.iter().enumerate() {
                writeln!(out, "{}\t{}\t{}", rank + 1, hit.model_id, hit.distance)?;
            }
        }
        Command::Eval { index, kinds, keep_self, output } => {
            let index = Index::read(&index)?;
            let kinds = match kinds {
                Some(list) => parse_kinds(&list)?,
                None => index.kinds(),
            };
            let summaries = evaluate_all(&index, &kinds, keep_self)?;
            for s in &summaries {
                if s.skipped > 0 {
                    warn!("{}: {} of {} queries skipped", s.kind, s.skipped, s.skipped + s.queries);
                }
            }
            write_pr_csv(&summaries, create(&output)?)?;
        }
        Command::Slice { model, dump_slices, planes, resolution, dump_mesh } => {
            let mesh = load_mesh(&model)?;
            let (normalized, _) = normalize_pose(&mesh)?;
            if let Some(path) = dump_mesh {
                write_off(&normalized, create(&path)?)?;
            }
            let images = extract_level_images(&normalized, planes, resolution)?;
            fs::create_dir_all(&dump_slices).with_context(|| format!("creating {}", dump_slices.display()))?;
            let id = mesh.source_id();
            for l in &images {
                let path = dump_slices.join(format!("{id}_{:03}_{:+.4}.pgm", l.plane, l.x));
                l.image.write_pgm(create(&path)?)?;
            }
            eprintln!("wrote {} level images to {}", images.len(), dump_slices.display());
        }
        Command::Synth { dir, per_class, jitter, seed } => {
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut labels = create(&dir.join("labels.csv"))?;
            writeln!(labels, "# model_id,class_label")?;
            for model in synthetic_corpus(per_class, jitter, seed) {
                write_off(&model.mesh, create(&dir.join(format!("{}.off", model.id)))?)?;
                writeln!(labels, "{},{}", model.id, model.class)?;
            }
        }
        Command::Config { pipeline } => print!("{}", pipeline.to_config()?.canonical()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
