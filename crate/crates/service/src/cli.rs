//! The `minecast` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 validation failure, 64 usage
//! error.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use minecast::ingest::{clean_monthly, write_monthly, FormatOptions, DEFAULT_K};
use minecast::pipeline::{run_diagnostics, run_forecast_with, PipelineOptions, DEFAULT_REPLICATES};
use minecast::diagnostics::DEFAULT_ALPHA;
use minecast::{parse_annual, CleaningReport};
use serde::Serialize;

use crate::charts::build_chart;
use crate::error::ApiError;
use crate::query::{parse_chart, parse_forecast, ChartType, Params};
use crate::state::{AppState, DataPaths, Datasets, LoadError, DEFAULT_CACHE_SIZE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const DEFAULT_MONTHLY: &str = "data/produccion_mensual_2020_2022.csv";
pub const DEFAULT_ANNUAL: &str = "data/produccion_anual_1980_2022.csv";
pub const DEFAULT_GEO: &str = "data/departamentos.geojson";

#[derive(Debug, Parser)]
#[command(name = "minecast", version, about = "Mining production analytics and forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Monthly production table (21-column CSV).
    #[arg(long, env = "MINECAST_MONTHLY", default_value = DEFAULT_MONTHLY)]
    monthly: PathBuf,
    /// Annual production table (AÑO plus MINERAL(UNIT) columns).
    #[arg(long, env = "MINECAST_ANNUAL", default_value = DEFAULT_ANNUAL)]
    annual: PathBuf,
    /// Neighbours used to impute monthly gaps.
    #[arg(long, env = "MINECAST_K", default_value_t = DEFAULT_K)]
    k: usize,
}

#[derive(Debug, Args)]
struct RequestArgs {
    /// annual, mineral or department.
    #[arg(long)]
    level: String,
    /// Mineral (annual and mineral levels) or department name.
    #[arg(long)]
    target: String,
    /// Mineral within a department; defaults to its top mineral.
    #[arg(long)]
    mineral: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// arima, statespace or best.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    confidence: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Significance level for the residual diagnostics.
    #[arg(long, env = "MINECAST_ALPHA", default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
}

impl RequestArgs {
    fn params(&self) -> Params {
        let mut p = Params::new();
        p.insert("level".into(), self.level.clone());
        p.insert("target".into(), self.target.clone());
        for (key, value) in [
            ("mineral", &self.mineral),
            ("horizon", &self.horizon),
            ("model", &self.model),
            ("confidence", &self.confidence),
            ("seed", &self.seed),
        ] {
            if let Some(v) = value {
                p.insert(key.into(), v.clone());
            }
        }
        p
    }

    fn options(&self) -> Result<PipelineOptions, ApiError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ApiError::invalid("alpha", "alpha must lie strictly between 0 and 1"));
        }
        Ok(PipelineOptions { alpha: self.alpha, replicates: DEFAULT_REPLICATES })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, clean and impute a monthly table; write the normalized CSV.
    Ingest {
        input: PathBuf,
        /// Destination of the cleaned table.
        #[arg(long)]
        out: PathBuf,
        /// Also write the cleaning report here (it always goes to stdout).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Check a table and print the cleaning report without writing anything.
    Validate {
        input: PathBuf,
        /// Treat the input as the annual table.
        #[arg(long)]
        annual: bool,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Fit, diagnose and forecast one series.
    Forecast {
        #[command(flatten)]
        request: RequestArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Fit one series and report residual diagnostics.
    Diagnose {
        #[command(flatten)]
        request: RequestArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Chart payloads: bar, pie or polygon.
    Charts {
        kind: String,
        #[arg(long)]
        group_by: Option<String>,
        #[arg(long)]
        mineral: Option<String>,
        #[arg(long)]
        department: Option<String>,
        #[arg(long)]
        year: Option<String>,
        #[arg(long)]
        bins: Option<String>,
        #[arg(long)]
        threshold: Option<String>,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "MINECAST_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "MINECAST_HOST", default_value = "127.0.0.1")]
        host: String,
        /// Department boundaries (GeoJSON with a NOMBDEP property).
        #[arg(long, env = "MINECAST_GEO", default_value = DEFAULT_GEO)]
        geo: PathBuf,
        #[arg(long, env = "MINECAST_ALPHA", default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, env = "MINECAST_CACHE_SIZE", default_value_t = DEFAULT_CACHE_SIZE)]
        cache_size: usize,
        #[command(flatten)]
        data: DataArgs,
    },
}

/// Output of a failed command: what to print and the exit code.
struct Failure {
    code: i32,
    stdout: Option<String>,
    message: String,
}

impl Failure {
    fn from_api(e: ApiError) -> Self {
        let code = if e.is_client_error() { EXIT_INVALID } else { EXIT_RUNTIME };
        let body = serde_json::to_string_pretty(&e.body).unwrap_or_default();
        Failure { code, stdout: Some(body), message: e.to_string() }
    }

    fn from_load(e: LoadError) -> Self {
        let code = match e {
            LoadError::Io { .. } => EXIT_RUNTIME,
            _ => EXIT_INVALID,
        };
        Failure { code, stdout: Some(pretty(&e.report())), message: e.to_string() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure { code: EXIT_RUNTIME, stdout: None, message: message.into() }
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("payload serializes")
}

fn load(data: &DataArgs) -> Result<Datasets, Failure> {
    Datasets::load(&data.monthly, &data.annual, data.k).map_err(Failure::from_load)
}

#[derive(Serialize)]
struct Validation<'a> {
    valid: bool,
    error: Option<String>,
    report: &'a CleaningReport,
}

fn validate(input: &Path, annual: bool, k: usize) -> (i32, String) {
    let file = match File::open(input) {
        Ok(f) => f,
        Err(e) => {
            let report = CleaningReport::default();
            let v = Validation { valid: false, error: Some(format!("cannot read {}: {e}", input.display())), report: &report };
            return (EXIT_RUNTIME, pretty(&v));
        }
    };
    let outcome = if annual {
        parse_annual(file).map(|records| CleaningReport { rows_read: records.len(), rows_kept: records.len(), ..Default::default() })
    } else {
        clean_monthly(file, FormatOptions::default(), k).map(|(_, report)| report)
    };
    match outcome {
        Ok(report) => {
            let valid = report.rows_dropped == 0;
            let error = (!valid).then(|| format!("{} row(s) dropped", report.rows_dropped));
            let code = if valid { EXIT_OK } else { EXIT_INVALID };
            (code, pretty(&Validation { valid, error, report: &report }))
        }
        Err(e) => {
            let report = CleaningReport::default();
            (EXIT_INVALID, pretty(&Validation { valid: false, error: Some(e.to_string()), report: &report }))
        }
    }
}

fn execute(command: Command) -> Result<String, Failure> {
    match command {
        Command::Ingest { input, out, report, k } => {
            let file = File::open(&input).map_err(|e| Failure::runtime(format!("cannot read {}: {e}", input.display())))?;
            let (records, cleaning) = clean_monthly(file, FormatOptions::default(), k).map_err(|error| {
                Failure::from_load(LoadError::Ingest { path: input.clone(), error, report: CleaningReport::default() })
            })?;
            let dest = File::create(&out).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", out.display())))?;
            write_monthly(&records, dest).map_err(|e| Failure::runtime(e.to_string()))?;
            let text = pretty(&cleaning);
            if let Some(path) = report {
                std::fs::write(&path, &text).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(text)
        }
        Command::Validate { .. } => unreachable!("handled by run"),
        Command::Forecast { request, data } => {
            let req = parse_forecast(&request.params()).map_err(Failure::from_api)?;
            let options = request.options().map_err(Failure::from_api)?;
            let d = load(&data)?;
            let result = run_forecast_with(&req, &d.monthly, &d.annual, options).map_err(|e| Failure::from_api(e.into()))?;
            Ok(pretty(&result))
        }
        Command::Diagnose { request, data } => {
            let req = parse_forecast(&request.params()).map_err(Failure::from_api)?;
            let options = request.options().map_err(Failure::from_api)?;
            let d = load(&data)?;
            let result = run_diagnostics(&req, &d.monthly, &d.annual, options).map_err(|e| Failure::from_api(e.into()))?;
            Ok(pretty(&result))
        }
        Command::Charts { kind, group_by, mineral, department, year, bins, threshold, data } => {
            let kind: ChartType = kind.parse().map_err(Failure::from_api)?;
            let mut p = Params::new();
            for (key, value) in [
                ("group_by", group_by),
                ("mineral", mineral),
                ("department", department),
                ("year", year),
                ("bins", bins),
                ("threshold", threshold),
            ] {
                if let Some(v) = value {
                    p.insert(key.into(), v);
                }
            }
            let query = parse_chart(&p).map_err(Failure::from_api)?;
            let d = load(&data)?;
            Ok(pretty(&build_chart(kind, &query, &d.monthly).map_err(Failure::from_api)?))
        }
        Command::Serve { port, host, geo, alpha, cache_size, data } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Failure::from_api(ApiError::invalid("alpha", "alpha must lie strictly between 0 and 1")));
            }
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Failure::from_api(ApiError::invalid("host", format!("bad address {host}:{port}: {e}"))))?;
            let paths = DataPaths { monthly: data.monthly, annual: data.annual, geo: Some(geo) };
            let options = PipelineOptions { alpha, replicates: DEFAULT_REPLICATES };
            let state = AppState::load(&paths, data.k, options, cache_size).map_err(Failure::from_load)?;
            log::info!(
                "loaded {} monthly records ({} dropped, {} imputed), {} annual rows",
                state.monthly().len(),
                state.report().rows_dropped,
                state.report().values_imputed,
                state.annual().len()
            );
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::runtime(e.to_string()))?;
            runtime
                .block_on(crate::serve(Arc::new(state), addr))
                .map_err(|e| Failure::runtime(format!("server error on {addr}: {e}")))?;
            Ok(String::new())
        }
    }
}

/// Runs the CLI with the given arguments (program name first) and returns
/// the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    if let Command::Validate { input, annual, k } = &cli.command {
        let (code, text) = validate(input, *annual, *k);
        let _ = writeln!(stdout, "{text}");
        return code;
    }
    match execute(cli.command) {
        Ok(text) => {
            if !text.is_empty() {
                let _ = writeln!(stdout, "{text}");
            }
            EXIT_OK
        }
        Err(f) => {
            if let Some(body) = f.stdout {
                let _ = writeln!(stdout, "{body}");
            }
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
