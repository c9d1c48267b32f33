use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use welfarecast::config::{parse_lambda_grid, scenario_from_key_values, KeyValues, RunConfig};
use welfarecast::pipeline::{self, Staging};
use welfarecast::{formats, tiles, Error, Result, EXIT_CODES};
use welfarecast_core::composite::{center_crop, median_composite};
use welfarecast_core::gridmap::{GridSpec, DEFAULT_CELL_SIZE};
use welfarecast_core::regress::FeatureSet;
use welfarecast_core::synth::{generate_scenario, ScenarioConfig};
use welfarecast_core::welfare::TargetKind;
use welfarecast_core::Date;

const SCHEMAS: &str = "\
Input files (CSV with header):
  visits.csv       ea_id,wave,visit,end_date,lat,lon
  households.csv   hh_id,ea_id,wave,visit,total_expenditure,household_size
  assets.csv       hh_id,source,survey_year,ea_id,<asset>... (0/1, empty = not asked)
  weather.csv      cell_id,date,precip_total_mm,temp_mean_c
  features.csv     ea_id,wave,visit,f0001..f1024 (f0001..f0512 MS, f0513..f1024 NL)
predict-grid --features-dir:
  image_features.csv    lat,lon,period,f0001..f1024
  weather_features.csv  lat,lon,period,w01..w48
Outputs of `run`: targets.csv, weather_features.csv, model.json, cv_table.csv,
performance.csv, wss_tss.csv, ecdf.csv.
WELFARECAST_THREADS caps the worker threads.";

#[derive(Parser)]
#[command(name = "welfarecast", version, about = "Welfare prediction from satellite-image features and weather")]
#[command(after_long_help = format!("{SCHEMAS}\n\n{EXIT_CODES}"))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario's input files.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate and fit one ridge model; writes model.json and cv_table.csv.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model on a dataset; writes a one-row performance table.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict on every cell of a bounding box; writes a CSV raster.
    PredictGrid {
        #[arg(long)]
        model: PathBuf,
        /// lat_min,lon_min,lat_max,lon_max
        #[arg(long)]
        bbox: String,
        #[arg(long, default_value_t = DEFAULT_CELL_SIZE)]
        cell: f64,
        /// One or more comma-separated period labels.
        #[arg(long)]
        period: String,
        #[arg(long)]
        features_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Within/total sum-of-squares ratios; writes wss_tss.csv and ecdf.csv.
    Diagnostics {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median cloud-free composite of a tile stack.
    Composite {
        #[arg(long)]
        stack: PathBuf,
        #[arg(long)]
        end_date: Date,
        /// Keep the full tile instead of the 224 px center crop.
        #[arg(long)]
        no_crop: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value run configuration.
    #[arg(long, required_unless_present = "data")]
    config: Option<PathBuf>,
    /// Directory with the standard input file names.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    target: Option<TargetKind>,
    /// e.g. ms,nl,weather
    #[arg(long)]
    features: Option<FeatureSet>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `default` or comma-separated values.
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long)]
    min_days: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match (&self.config, &self.data) {
            (Some(p), _) => RunConfig::from_key_values(KeyValues::read(p)?)?,
            (None, Some(d)) => RunConfig::for_data_dir(d),
            (None, None) => return Err(Error::Config("--config or --data is required".into())),
        };
        if let (Some(_), Some(d)) = (&self.config, &self.data) {
            let fresh = RunConfig::for_data_dir(d);
            c.visits_file = fresh.visits_file;
            c.households_file = fresh.households_file;
            c.assets_file = fresh.assets_file;
            c.weather_file = fresh.weather_file;
            c.features_file = fresh.features_file;
        }
        if let Some(t) = self.target {
            c.target = t;
        }
        if let Some(f) = self.features {
            c.features = f;
        }
        if let Some(f) = self.folds {
            c.folds = f;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(g) = &self.lambda_grid {
            c.lambda_grid = parse_lambda_grid(g)?;
        }
        if let Some(m) = self.min_days {
            c.min_days_per_window = m;
        }
        if let Some(t) = self.test_fraction {
            c.test_fraction = t;
        }
        Ok(c)
    }
}

fn parse_bbox(s: &str, cell: f64) -> Result<GridSpec> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Config(format!("bad --bbox `{s}`")))?;
    let [lat_min, lon_min, lat_max, lon_max] = v[..] else {
        return Err(Error::Config(format!("--bbox needs 4 values, got {}", v.len())));
    };
    Ok(GridSpec {
        lat_min,
        lat_max,
        lon_min,
        lon_max,
        cell_size: cell,
    })
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("WELFARECAST_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("WELFARECAST_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn synth(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut c = match config {
        Some(p) => scenario_from_key_values(KeyValues::read(p)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        c.seed = s;
    }
    let scenario = generate_scenario(&c)?;
    let stage = Staging::new(out)?;
    formats::write_scenario(&stage.path(""), &scenario)?;
    stage.promote_dir()?;
    info!("wrote scenario with {} visits to {}", scenario.visits.len(), out.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Synth { config, seed, out } => synth(config.as_deref(), seed, &out),
        Command::Train { run, out } => {
            let cfg = run.resolve()?;
            let fit = pipeline::train_from_config(&cfg)?;
            let stage = Staging::new(&out)?;
            formats::write_model(&stage.path("model.json"), &fit.model)?;
            formats::write_cv_table(&stage.path("cv_table.csv"), &fit.cv.table)?;
            stage.promote_dir()
        }
        Command::Evaluate { model, run, out } => {
            let cfg = run.resolve()?;
            let m = formats::read_model(&model)?;
            let report = pipeline::evaluate_model(&m, &cfg)?;
            let stage = Staging::new(&out)?;
            formats::write_performance(&stage.path("performance.csv"), &[report])?;
            stage.promote_file("performance.csv")
        }
        Command::PredictGrid {
            model,
            bbox,
            cell,
            period,
            features_dir,
            out,
        } => {
            let spec = parse_bbox(&bbox, cell)?;
            let m = formats::read_model(&model)?;
            let periods: Vec<String> = period.split(',').map(|p| p.trim().to_owned()).collect();
            let layers = pipeline::grid_layers(&m, &features_dir, &spec, &periods)?;
            let stage = Staging::new(&out)?;
            formats::export_raster(&stage.path("raster.csv"), &layers)?;
            stage.promote_file("raster.csv")
        }
        Command::Diagnostics { run, out } => {
            let cfg = run.resolve()?;
            cfg.validate()?;
            let d = pipeline::diagnostics(&pipeline::load_inputs(&cfg)?)?;
            let stage = Staging::new(&out)?;
            formats::write_wss_tss(&stage.path("wss_tss.csv"), &d.wss_tss)?;
            formats::write_ecdf(&stage.path("ecdf.csv"), &d.ecdf)?;
            stage.promote_dir()
        }
        Command::Run { run, out } => {
            let mut cfg = run.resolve()?;
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            pipeline::run_pipeline(&cfg)
        }
        Command::Composite {
            stack,
            end_date,
            no_crop,
            out,
        } => {
            let s = tiles::read_stack(&stack)?;
            let mut tile = median_composite(&s, end_date)?;
            if !no_crop {
                tile = center_crop(&tile)?;
            }
            let stage = Staging::new(&out)?;
            tiles::write_composite(&stage.path(""), &tile)?;
            stage.promote_dir()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = e.exit_code();
            let msg = e.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
            eprintln!("error code={code} kind={kind} message=\"{msg}\"");
            ExitCode::from(code)
        }
    }
}
