use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use maxcorr::stats::{
    correlation_matrix, l_statistic, read_csv_path, standardize_columns, t_statistic, w_statistic,
    write_corr_csv_with_columns, DataMatrix, HeaderMode, MaxEntry, ZeroVariancePolicy,
};

use crate::exit;
use crate::manifest::{self, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// Largest absolute off-diagonal sample correlation
    L,
    /// Largest absolute cross product over pairs i < j
    W,
    /// Largest absolute cross product between U and V over pairs i != j
    T,
    /// Upper triangle of the correlation matrix as CSV
    Corr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroVariance {
    /// Fail with exit code 3
    Error,
    /// Drop constant columns and report them
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Header {
    /// Header if any field of the first row is not a number
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Args, Serialize)]
pub struct StatArgs {
    /// Input CSV, one sample per row and one variable per column
    pub input: PathBuf,

    /// Statistic to compute
    #[arg(long, short, value_enum, ignore_case = true, default_value = "l")]
    pub statistic: Statistic,

    /// CSV holding the second array V, required for T
    #[arg(long, value_name = "CSV")]
    pub with: Option<PathBuf>,

    /// Handling of constant columns for L and corr
    #[arg(long, value_enum, default_value = "error")]
    pub zero_variance: ZeroVariance,

    /// Whether the first row is a header
    #[arg(long, value_enum, default_value = "auto")]
    pub header: Header,

    /// Write the corr CSV here (with a .manifest.json next to it) instead of stdout
    #[arg(long, short, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn header_mode(h: Header) -> HeaderMode {
    match h {
        Header::Auto => HeaderMode::Auto,
        Header::Present => HeaderMode::Present,
        Header::Absent => HeaderMode::Absent,
    }
}

fn read(path: &Path, header: Header) -> Result<DataMatrix> {
    let (m, _) = read_csv_path(path, header_mode(header)).with_context(|| format!("reading {}", path.display()))?;
    if m.n() < 2 || m.p() < 2 {
        return Err(maxcorr::Error::ShapeMismatch(format!(
            "{} is {} x {}; need at least 2 rows and 2 columns",
            path.display(),
            m.n(),
            m.p()
        ))
        .into());
    }
    Ok(m)
}

/// Columns left after applying the zero-variance policy, as a new matrix
/// and their original indices.
fn non_constant(m: &DataMatrix, policy: ZeroVariance) -> Result<(DataMatrix, Vec<usize>)> {
    let policy = match policy {
        ZeroVariance::Error => ZeroVariancePolicy::Error,
        ZeroVariance::Drop => ZeroVariancePolicy::Drop,
    };
    let (_, report) = standardize_columns(m, policy)?;
    if !report.dropped.is_empty() {
        let cols: Vec<String> = report.dropped.iter().map(|c| (c + 1).to_string()).collect();
        eprintln!("dropped constant columns: {}", cols.join(","));
    }
    let values: Vec<f64> = report.kept.iter().flat_map(|&c| m.column(c).iter().copied()).collect();
    Ok((DataMatrix::from_col_major(m.n(), report.kept.len(), values)?, report.kept))
}

fn print_entry(name: &str, e: MaxEntry, columns: Option<&[usize]>) {
    let (i, j) = match columns {
        Some(c) => (c[e.i], c[e.j]),
        None => (e.i, e.j),
    };
    println!("statistic {name}");
    println!("value {:?}", e.value);
    println!("pair {} {}", i + 1, j + 1);
}

pub fn run(args: &StatArgs) -> Result<u8> {
    if args.with.is_some() != (args.statistic == Statistic::T) {
        bail!("--with is required for T and only allowed with T");
    }
    let x = read(&args.input, args.header)?;
    match args.statistic {
        Statistic::L => {
            let (kept, cols) = non_constant(&x, args.zero_variance)?;
            if kept.p() < 2 {
                bail!(maxcorr::Error::ZeroVariance { columns: dropped_of(&x, &cols) });
            }
            print_entry("L", l_statistic(&kept)?, Some(&cols));
        }
        Statistic::W => print_entry("W", w_statistic(&x)?, None),
        Statistic::T => {
            let v = read(args.with.as_ref().expect("checked above"), args.header)?;
            print_entry("T", t_statistic(&x, &v)?, None);
        }
        Statistic::Corr => {
            let (kept, cols) = non_constant(&x, args.zero_variance)?;
            let corr = correlation_matrix(&kept)?;
            match &args.out {
                None => {
                    let stdout = std::io::stdout();
                    write_corr_csv_with_columns(&corr, &cols, stdout.lock())?;
                }
                Some(path) => {
                    let mut buf = Vec::new();
                    write_corr_csv_with_columns(&corr, &cols, &mut buf)?;
                    std::fs::File::create(path)
                        .and_then(|mut f| f.write_all(&buf))
                        .with_context(|| format!("writing {}", path.display()))?;
                    let side = manifest::sidecar(path);
                    RunManifest::new("stat", args, None, vec![manifest::file_name(path), manifest::file_name(&side)])
                        .write(&side)?;
                    println!("wrote {}", path.display());
                }
            }
        }
    }
    Ok(exit::OK)
}

fn dropped_of(x: &DataMatrix, kept: &[usize]) -> Vec<usize> {
    (0..x.p()).filter(|c| !kept.contains(c)).map(|c| c + 1).collect()
}
