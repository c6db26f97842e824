//! Command-line front end: analyze, transform, report, launch-script.
//!
//! Exit codes: 0 success, 1 action-required diagnostics present under
//! `--strict`, 2 on errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use walkdir::WalkDir;

use acc2dc::report::{compare_modes, MigrationReport};
use acc2dc::transform::transform_file;
use acc2dc::{directive_census, CensusReport, Mode, MpiFlavor, SourceFile, ToolConfig};

#[derive(Parser)]
#[command(
    name = "acc2dc",
    version,
    about = "Analyze and rewrite free-form Fortran with OpenACC directives into do-concurrent code versions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct CommonOpts {
    /// Configuration file (purity whitelist, derived types, array shapes).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output format for the summary printed to stdout.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Exit with code 1 when any action-required diagnostic is emitted.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Count OpenACC directive lines per category.
    Analyze {
        /// Files or directories with free-form Fortran sources.
        paths: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write the census here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite sources for one code version into an output tree.
    Transform {
        paths: Vec<PathBuf>,
        /// Code version: A, AD, ADU, AD2XU, D2XU, or D2XAd.
        #[arg(long)]
        mode: Option<String>,
        /// Output directory (transformed files are never written in place).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Transform in memory across all six modes and compare.
    Report {
        paths: Vec<PathBuf>,
        /// Comma-separated mode list, or `all`.
        #[arg(long, default_value = "all")]
        modes: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Emit the MPI launch script that binds each rank to one GPU.
    LaunchScript {
        /// MPI flavor: openmpi, mpich, or slurm-srun.
        #[arg(long, default_value = "openmpi")]
        mpi: String,
        /// Write the script here (marked executable) instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Free-form extensions picked up when walking directories.
const FREE_FORM_EXTENSIONS: &[&str] = &["f90", "f95", "f03", "f08", "f18"];

fn collect_sources(paths: &[PathBuf]) -> Result<Vec<(PathBuf, PathBuf)>> {
    if paths.is_empty() {
        bail!("no input files given");
    }
    let mut out: Vec<(PathBuf, PathBuf)> = Vec::new();
    for path in paths {
        if path.is_dir() {
            for entry in WalkDir::new(path).sort_by_file_name() {
                let entry = entry.with_context(|| format!("walking {}", path.display()))?;
                if !entry.file_type().is_file() {
                    continue;
                }
                let p = entry.path();
                let ext = p
                    .extension()
                    .and_then(|e| e.to_str())
                    .map(|e| e.to_ascii_lowercase());
                if ext.as_deref().is_some_and(|e| FREE_FORM_EXTENSIONS.contains(&e)) {
                    let rel = p.strip_prefix(path).unwrap_or(p).to_path_buf();
                    out.push((p.to_path_buf(), rel));
                }
            }
        } else if path.is_file() {
            let rel = PathBuf::from(path.file_name().context("input path has no file name")?);
            out.push((path.clone(), rel));
        } else {
            bail!("{}: no such file or directory", path.display());
        }
    }
    if out.is_empty() {
        bail!("no free-form Fortran sources found under the given paths");
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn load_config(path: &Option<PathBuf>) -> Result<ToolConfig> {
    match path {
        Some(p) => Ok(ToolConfig::load(p)?),
        None => Ok(ToolConfig::default()),
    }
}

fn parse_modes(spec: &str) -> Result<Vec<Mode>> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(Mode::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let mode: Mode = part.parse()?;
        if !out.contains(&mode) {
            out.push(mode);
        }
    }
    if out.is_empty() {
        bail!("no modes selected");
    }
    Ok(out)
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run_analyze(paths: &[PathBuf], format: Format, out: &Option<PathBuf>) -> Result<u8> {
    let sources = collect_sources(paths)?;
    let mut census = CensusReport::default();
    for (path, _) in &sources {
        let src = SourceFile::load(path)?;
        census.merge(&directive_census(&src)?);
    }
    let text = match format {
        Format::Json => format!("{}\n", serde_json_pretty(&census)?),
        Format::Table => render_census_table(&census),
    };
    write_or_print(out, &text)?;
    Ok(0)
}

fn serde_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn render_census_table(c: &CensusReport) -> String {
    let mut s = String::new();
    let mut row = |name: &str, n: usize| s.push_str(&format!("{name:<24} {n:>8}\n"));
    row("parallel, loop", c.parallel_loop);
    row("data management", c.data_management);
    row("  enter data", c.data_management_detail.enter);
    row("  exit data", c.data_management_detail.exit);
    row("  update", c.data_management_detail.update);
    row("  host_data", c.data_management_detail.host_data);
    row("  declare", c.data_management_detail.declare);
    row("atomic", c.atomic);
    row("routine", c.routine);
    row("kernels", c.kernels);
    row("wait", c.wait);
    row("set device_num", c.set_device_num);
    row("continuation (!$acc&)", c.continuation);
    row("total", c.total);
    s
}

fn run_transform(
    paths: &[PathBuf],
    mode_arg: &Option<String>,
    out_arg: &Option<PathBuf>,
    common: &CommonOpts,
) -> Result<u8> {
    let config = load_config(&common.config)?;
    let mode: Mode = match (mode_arg, config.mode) {
        (Some(s), _) => s.parse()?,
        (None, Some(m)) => m,
        (None, None) => bail!("--mode is required (or set `mode` in the config file)"),
    };
    let out_dir = match (out_arg, &config.output_dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => d.clone(),
        (None, None) => bail!("--out is required (or set `output_dir` in the config file)"),
    };

    let sources = collect_sources(paths)?;
    let mut results = Vec::new();
    for (path, rel) in &sources {
        let src = SourceFile::load(path)?;
        let result = transform_file(&src, mode, &config)?;
        let dest = out_dir.join(rel);
        if let Some(dir) = dest.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&dest, result.output.emit())
            .with_context(|| format!("writing {}", dest.display()))?;
        results.push(result);
    }

    let mut by_mode = BTreeMap::new();
    by_mode.insert(mode, results);
    let report = MigrationReport::build(&by_mode)?;
    fs::write(out_dir.join("migration_report.json"), report.to_json())?;

    match common.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Table => print!("{}", report.render_table()),
    }
    Ok(exit_for(common.strict, report.action_required()))
}

fn run_report(paths: &[PathBuf], modes: &str, common: &CommonOpts) -> Result<u8> {
    let config = load_config(&common.config)?;
    let modes = parse_modes(modes)?;
    let sources = collect_sources(paths)?;

    let mut by_mode: BTreeMap<Mode, Vec<_>> = BTreeMap::new();
    for (path, _) in &sources {
        let src = SourceFile::load(path)?;
        for &mode in &modes {
            by_mode.entry(mode).or_default().push(transform_file(&src, mode, &config)?);
        }
    }
    let report = MigrationReport::build(&by_mode)?;
    let ordering = compare_modes(&report);

    match common.format {
        Format::Json => {
            let mut value = serde_json::to_value(&report)?;
            value["ordering_check"] = serde_json::to_value(&ordering)?;
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
        Format::Table => {
            print!("{}", report.render_table());
            match ordering.violation {
                None => println!("ordering check: pass"),
                Some((a, b)) => println!("ordering check: FAIL ({a} < {b})"),
            }
        }
    }
    Ok(exit_for(common.strict, report.action_required()))
}

fn run_launch_script(mpi: &str, out: &Option<PathBuf>) -> Result<u8> {
    let flavor: MpiFlavor = mpi.parse()?;
    let script = acc2dc::generate_launch_script(flavor);
    write_or_print(out, &script)?;
    if let Some(path) = out {
        mark_executable(path)?;
    }
    Ok(0)
}

#[cfg(unix)]
fn mark_executable(path: &Path) -> Result<()> {
    use std::os::unix::fs::PermissionsExt;
    let mut perms = fs::metadata(path)?.permissions();
    perms.set_mode(perms.mode() | 0o755);
    fs::set_permissions(path, perms)?;
    Ok(())
}

#[cfg(not(unix))]
fn mark_executable(_path: &Path) -> Result<()> {
    Ok(())
}

fn exit_for(strict: bool, action_required: usize) -> u8 {
    if strict && action_required > 0 {
        1
    } else {
        0
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze { paths, format, out } => run_analyze(paths, *format, out),
        Command::Transform { paths, mode, out, common } => run_transform(paths, mode, out, common),
        Command::Report { paths, modes, common } => run_report(paths, modes, common),
        Command::LaunchScript { mpi, out } => run_launch_script(mpi, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
