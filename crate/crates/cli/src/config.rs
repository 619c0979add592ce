//! Command-line flags, key-value config files and their merge into an
//! [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use roompass_core::{BoundaryCondition, DomainParams, TailPolicy};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "roompass", version, about = "Spectral experiments on rooms-and-passages domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandName,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandName {
    /// Sweep of normalized second terms with reference constants
    Asymptotics,
    /// Bracketing counts at a single lambda
    Brackets,
    /// Truncation depth M(lambda) and tail area
    Tail,
    /// Singular-sequence decay table
    Essential,
    /// Skeleton geometry as JSON and polylines
    Skeleton,
    /// Per-edge Sturm-Liouville eigenvalues
    SlSpectrum,
    /// Finite-difference spectra and the sandwich report
    Oracle,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Asymptotics => "asymptotics",
            CommandName::Brackets => "brackets",
            CommandName::Tail => "tail",
            CommandName::Essential => "essential",
            CommandName::Skeleton => "skeleton",
            CommandName::SlSpectrum => "sl-spectrum",
            CommandName::Oracle => "oracle",
        }
    }
}

/// Every flag is optional so that a config file can supply it.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Flags {
    /// Plain `key = value` file; flags win on conflict
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Geometric ratio C in (0, 1)
    #[arg(long = "C", global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub k: Option<f64>,
    /// Number of pieces for domain-based commands
    #[arg(long, global = true)]
    pub pieces: Option<usize>,
    #[arg(long, global = true)]
    pub lmin: Option<f64>,
    #[arg(long, global = true)]
    pub lmax: Option<f64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Linear instead of logarithmic lambda spacing
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub linear: Option<bool>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Truncation depth; defaults to M(lambda) from the tail policy
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// neumann or dirichlet
    #[arg(long, global = true)]
    pub bc: Option<String>,
    /// Tail constant c in K(T_2M) <= c C^((3 - alpha) M)
    #[arg(long = "c-tail", global = true)]
    pub c_tail: Option<f64>,
    #[arg(long, global = true)]
    pub jmin: Option<usize>,
    #[arg(long, global = true)]
    pub jmax: Option<usize>,
    /// Room side for a single-room skeleton
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Passage height on both sides of a single room
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Samples per edge in skeleton dumps
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Cells per edge for the Sturm-Liouville discretization
    #[arg(long = "n-grid", global = true)]
    pub n_grid: Option<usize>,
    /// Eigenvalues per edge
    #[arg(long, global = true)]
    pub eigs: Option<usize>,
    /// FD eigenvalues per boundary condition
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Coarsest FD grid, cells per unit length
    #[arg(long, global = true)]
    pub base: Option<usize>,
    #[arg(long, global = true)]
    pub levels: Option<u32>,
    /// Number of generic lambdas in the sandwich check
    #[arg(long, global = true)]
    pub lambdas: Option<usize>,
    /// Main output file; stdout when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Whitespace-separated plot data
    #[arg(long = "plot-data", global = true)]
    pub plot_data: Option<PathBuf>,
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Machine-readable check report
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Sandwich report JSON (oracle)
    #[arg(long, global = true)]
    pub sandwich: Option<PathBuf>,
    /// Isometry defect JSON (sl-spectrum)
    #[arg(long, global = true)]
    pub isometry: Option<PathBuf>,
    /// Override a check tolerance, `name=value`; repeatable
    #[arg(long, global = true)]
    pub tol: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub lmin: f64,
    pub lmax: f64,
    pub points: usize,
    pub log: bool,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.lmin];
        }
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    return self.lmax;
                }
                let t = i as f64 / (n - 1) as f64;
                if self.log {
                    self.lmin * (self.lmax / self.lmin).powf(t)
                } else {
                    self.lmin + (self.lmax - self.lmin) * t
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    pub m: usize,
    pub count: usize,
    pub base: usize,
    pub levels: u32,
    pub lambdas: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: CommandName,
    pub c: f64,
    pub alpha: f64,
    pub k: f64,
    pub pieces: Option<usize>,
    pub sweep: Sweep,
    pub lambda: Option<f64>,
    pub m: Option<usize>,
    pub bc: BoundaryCondition,
    pub tail: TailPolicy,
    pub jmin: usize,
    pub jmax: usize,
    pub h: Option<f64>,
    pub delta: Option<f64>,
    pub samples: usize,
    pub n_grid: usize,
    pub eigs: usize,
    pub oracle: OracleGrid,
    pub out: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub sandwich: Option<PathBuf>,
    pub isometry: Option<PathBuf>,
    pub tol: Vec<(String, f64)>,
}

/// `key = value` lines; `#` starts a comment. Keys may use `-` or `_`.
pub fn parse_kv(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().replace('-', "_");
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("config line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(map)
}

struct Merge {
    file: BTreeMap<String, String>,
}

impl Merge {
    fn take<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        let from_file = self.file.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        match from_file {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }

    fn path(&mut self, key: &str, flag: Option<PathBuf>, base: &Path) -> Option<PathBuf> {
        let from_file = self.file.remove(key).map(|v| base.join(v));
        flag.or(from_file)
    }
}

fn parse_bc(s: &str) -> CliResult<BoundaryCondition> {
    match s.to_ascii_lowercase().as_str() {
        "neumann" | "n" => Ok(BoundaryCondition::Neumann),
        "dirichlet" | "d" => Ok(BoundaryCondition::Dirichlet),
        other => Err(CliError::Config(format!("unknown boundary condition `{other}`"))),
    }
}

fn parse_tol(s: &str) -> CliResult<(String, f64)> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--tol expects name=value, got `{s}`")))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("--tol {name}: cannot parse `{value}`")))?;
    Ok((name.trim().to_string(), v))
}

impl ExperimentConfig {
    /// Merges flags over the config file (if any) and fills defaults.
    pub fn resolve(command: CommandName, flags: Flags) -> CliResult<Self> {
        let (file, base) = match &flags.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (parse_kv(&text)?, dir)
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        let mut m = Merge { file };
        // `C` is also accepted in lower case in files
        let c_file = m.file.remove("c");
        if let Some(v) = c_file {
            m.file.entry("C".into()).or_insert(v);
        }
        let f = flags;
        let bc = m.take::<String>("bc", f.bc)?;
        let depth = m.take("m", f.m)?;
        let mut tol = Vec::new();
        if let Some(t) = m.file.remove("tol") {
            for part in t.split(',').filter(|s| !s.trim().is_empty()) {
                tol.push(parse_tol(part)?);
            }
        }
        for t in &f.tol {
            let (name, v) = parse_tol(t)?;
            tol.retain(|(n, _)| *n != name);
            tol.push((name, v));
        }
        let cfg = Self {
            command,
            c: m.take("C", f.c)?.unwrap_or(0.5),
            alpha: m.take("alpha", f.alpha)?.unwrap_or(2.0),
            k: m.take("k", f.k)?.unwrap_or(1.0 / 16.0),
            pieces: m.take("pieces", f.pieces)?,
            sweep: Sweep {
                lmin: m.take("lmin", f.lmin)?.unwrap_or(1e3),
                lmax: m.take("lmax", f.lmax)?.unwrap_or(1e6),
                points: m.take("points", f.points)?.unwrap_or(40),
                log: !m.take("linear", f.linear)?.unwrap_or(false),
            },
            lambda: m.take("lambda", f.lambda)?,
            m: depth,
            bc: bc.as_deref().map(parse_bc).transpose()?.unwrap_or(BoundaryCondition::Neumann),
            tail: TailPolicy::new(m.take("c_tail", f.c_tail)?.unwrap_or(1.0)).map_err(CliError::invalid)?,
            jmin: m.take("jmin", f.jmin)?.unwrap_or(3),
            jmax: m.take("jmax", f.jmax)?.unwrap_or(8),
            h: m.take("h", f.h)?,
            delta: m.take("delta", f.delta)?,
            samples: m.take("samples", f.samples)?.unwrap_or(64),
            n_grid: m.take("n_grid", f.n_grid)?.unwrap_or(64),
            eigs: m.take("eigs", f.eigs)?.unwrap_or(5),
            oracle: OracleGrid {
                m: depth.unwrap_or(2),
                count: m.take("count", f.count)?.unwrap_or(20),
                base: m.take("base", f.base)?.unwrap_or(64),
                levels: m.take("levels", f.levels)?.unwrap_or(3),
                lambdas: m.take("lambdas", f.lambdas)?.unwrap_or(30),
            },
            out: m.path("out", f.out, &base),
            plot_data: m.path("plot_data", f.plot_data, &base),
            svg: m.path("svg", f.svg, &base),
            report: m.path("report", f.report, &base),
            sandwich: m.path("sandwich", f.sandwich, &base),
            isometry: m.path("isometry", f.isometry, &base),
            tol,
        };
        if let Some(key) = m.file.keys().next() {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self, pieces: usize) -> CliResult<DomainParams> {
        DomainParams::new(self.c, self.alpha, self.k, pieces).map_err(CliError::invalid)
    }

    /// Checks the preconditions of the selected command.
    pub fn validate(&self) -> CliResult<()> {
        use CommandName::*;
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some(p) = self.pieces {
            if p == 0 || p % 2 != 0 {
                return bad(format!("pieces = {p} must be even and positive"));
            }
        }
        let allowed_side: &[(&str, bool)] = &[
            ("plot-data", matches!(self.command, Asymptotics | Tail | Essential | Skeleton)),
            ("svg", matches!(self.command, Asymptotics | Tail | Essential | Skeleton)),
            ("sandwich", self.command == Oracle),
            ("isometry", self.command == SlSpectrum),
        ];
        for (name, ok) in allowed_side {
            let given = match *name {
                "plot-data" => self.plot_data.is_some(),
                "svg" => self.svg.is_some(),
                "sandwich" => self.sandwich.is_some(),
                _ => self.isometry.is_some(),
            };
            if given && !ok {
                return bad(format!("--{name} is not produced by `{}`", self.command.as_str()));
            }
        }
        let single_room = self.h.is_some() || self.delta.is_some();
        if !(single_room && matches!(self.command, Skeleton | SlSpectrum)) {
            self.params(self.pieces.unwrap_or(2))?;
        }
        match self.command {
            Asymptotics | Tail => {
                let s = &self.sweep;
                if s.points == 0 {
                    return bad("empty sweep: points must be at least 1".into());
                }
                if !(s.lmin > 0.0) || !s.lmin.is_finite() || !s.lmax.is_finite() || s.lmax < s.lmin {
                    return bad(format!("need 0 < lmin <= lmax, got lmin = {}, lmax = {}", s.lmin, s.lmax));
                }
                if self.alpha >= 3.0 {
                    return bad(format!("alpha = {} >= 3: the tail has no Poincare control", self.alpha));
                }
                if let Some(m) = self.m {
                    if m == 0 || m > 512 {
                        return bad(format!("m = {m} must lie in 1..=512"));
                    }
                }
            }
            Brackets => {
                match self.lambda {
                    Some(l) if l > 0.0 && l.is_finite() => {}
                    Some(l) => return bad(format!("lambda = {l} must be positive")),
                    None => return bad("brackets needs --lambda".into()),
                }
                if self.m.is_none() && self.alpha >= 3.0 {
                    return bad("without --m the depth M(lambda) needs alpha < 3".into());
                }
                if let Some(m) = self.m {
                    if m == 0 || m > 512 {
                        return bad(format!("m = {m} must lie in 1..=512"));
                    }
                }
            }
            Essential => {
                if self.jmin == 0 || self.jmax < self.jmin {
                    return bad(format!("need 1 <= jmin <= jmax, got {}..{}", self.jmin, self.jmax));
                }
                if self.jmax > 64 {
                    return bad(format!("jmax = {} exceeds 64", self.jmax));
                }
            }
            Skeleton | SlSpectrum => {
                if single_room {
                    let (Some(h), Some(d)) = (self.h, self.delta) else {
                        return bad("a single-room skeleton needs both --h and --delta".into());
                    };
                    if !(h > 0.0) || !(d >= 0.0) || d >= h {
                        return bad(format!("need 0 <= delta < h, got h = {h}, delta = {d}"));
                    }
                }
                if self.samples < 2 {
                    return bad("samples must be at least 2".into());
                }
                if self.command == SlSpectrum && (self.n_grid < 8 || self.eigs == 0) {
                    return bad(format!("need n-grid >= 8 and eigs >= 1, got {} and {}", self.n_grid, self.eigs));
                }
            }
            Oracle => {
                let o = &self.oracle;
                if o.m == 0 || o.m > 2 {
                    return bad(format!("oracle needs M in 1..=2, got {}", o.m));
                }
                if o.levels < 3 {
                    return bad(format!("Richardson needs at least 3 levels, got {}", o.levels));
                }
                if o.levels > 6 {
                    return bad(format!("levels = {} exceeds 6", o.levels));
                }
                if o.count < 2 || o.base == 0 || o.lambdas == 0 {
                    return bad("oracle needs count >= 2, base >= 1 and lambdas >= 1".into());
                }
            }
        }
        Ok(())
    }
}
