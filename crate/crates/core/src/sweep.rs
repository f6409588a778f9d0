//! Parameter sweeps, the fiber attenuation law, per-link chain statistics,
//! self-describing run records and `key=value` config files.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{link_figures, LinkFigures};
use crate::error::{invalid, Error, Result};
use crate::link::LinkParams;
use crate::oracle::{estimate_link, LinkEstimate};

pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.17;
/// Group velocity in fiber, m/s.
pub const DEFAULT_FIBER_SPEED: f64 = 2.0e8;
pub const TOOL_NAME: &str = "sqlink";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const MAX_GRID_POINTS: usize = 1_000_000;

/// Power transmittance `η² = 10^{−loss·L/10}` of a fiber span.
pub fn eta_from_length(length_km: f64, loss_db_per_km: f64) -> Result<f64> {
    if !length_km.is_finite() || length_km < 0.0 {
        return Err(invalid("length_km", length_km, "fiber length must be non-negative"));
    }
    if !loss_db_per_km.is_finite() || loss_db_per_km < 0.0 {
        return Err(invalid("loss_db_per_km", loss_db_per_km, "attenuation must be non-negative"));
    }
    Ok(10f64.powf(-loss_db_per_km * length_km / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PC,
    EtaSq,
    R,
    Theta,
    Zeta,
    Alpha,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PC => "p_c",
            SweepVariable::EtaSq => "eta_sq",
            SweepVariable::R => "r",
            SweepVariable::Theta => "theta",
            SweepVariable::Zeta => "zeta",
            SweepVariable::Alpha => "alpha",
        }
    }

    pub fn set(self, params: &mut LinkParams, value: f64) {
        match self {
            SweepVariable::PC => params.p_c = value,
            SweepVariable::EtaSq => params.eta_sq = value,
            SweepVariable::R => params.r = value,
            SweepVariable::Theta => params.theta = value,
            SweepVariable::Zeta => params.zeta = value,
            SweepVariable::Alpha => params.alpha = value,
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "p_c" | "pc" => Ok(SweepVariable::PC),
            "eta_sq" => Ok(SweepVariable::EtaSq),
            "r" => Ok(SweepVariable::R),
            "theta" => Ok(SweepVariable::Theta),
            "zeta" => Ok(SweepVariable::Zeta),
            "alpha" => Ok(SweepVariable::Alpha),
            _ => Err(Error::Config(format!("unknown sweep variable `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub fixed: LinkParams,
}

impl SweepSpec {
    /// Default window grid 0.02, 0.04, …, 1.0.
    pub fn fig2(fixed: LinkParams) -> Self {
        SweepSpec {
            variable: SweepVariable::PC,
            start: 0.02,
            stop: 1.0,
            step: 0.02,
            fixed,
        }
    }

    /// Grid values `start + i·step` up to `stop` inclusive, trimmed to 13
    /// significant digits.
    pub fn grid(&self) -> Result<Vec<f64>> {
        for (name, v) in [("start", self.start), ("stop", self.stop), ("step", self.step)] {
            if !v.is_finite() {
                return Err(invalid(name, v, "must be finite"));
            }
        }
        if self.step <= 0.0 {
            return Err(invalid("step", self.step, "must be positive"));
        }
        if self.start > self.stop {
            return Err(invalid("stop", self.stop, "must not be below start"));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() + 1.0;
        if count > MAX_GRID_POINTS as f64 {
            return Err(invalid("step", self.step, "grid has too many points"));
        }
        Ok((0..count as usize)
            .map(|i| {
                let v = self.start + i as f64 * self.step;
                format!("{v:.12e}").parse().expect("formatted float parses")
            })
            .collect())
    }

    /// One validated parameter set per grid point.
    pub fn points(&self) -> Result<Vec<LinkParams>> {
        self.grid()?
            .into_iter()
            .map(|v| {
                let mut p = self.fixed;
                self.variable.set(&mut p, v);
                p.validate().map(|_| p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub params: LinkParams,
    pub figures: LinkFigures,
    pub monte_carlo: Option<LinkEstimate>,
}

/// Evaluates every grid point, in parallel, returning rows in grid order.
/// With `mc = Some((n, seed))` each point also gets a Monte Carlo estimate
/// seeded with `seed + index`.
pub fn run_sweep(spec: &SweepSpec, mc: Option<(u64, u64)>) -> Result<Vec<SweepRow>> {
    let points = spec.points()?;
    let values = spec.grid()?;
    points
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (params, &value))| {
            let monte_carlo = match mc {
                Some((n, seed)) => Some(estimate_link(params, n, seed.wrapping_add(i as u64))?),
                None => None,
            };
            Ok(SweepRow {
                value,
                params: *params,
                figures: link_figures(params)?,
                monte_carlo,
            })
        })
        .collect()
}

/// `pc,ps,fidelity` table.
pub fn write_fig2_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "pc,ps,fidelity")?;
    for row in rows {
        writeln!(out, "{},{},{}", row.params.p_c, row.figures.p_s, row.figures.fidelity)?;
    }
    Ok(())
}

/// Gnuplot script drawing both panels from the table at `data_path`.
pub fn write_fig2_gnuplot<W: Write>(data_path: &str, mut out: W) -> io::Result<()> {
    writeln!(out, "set datafile separator ','")?;
    writeln!(out, "set key autotitle columnhead")?;
    writeln!(out, "set multiplot layout 1,2")?;
    writeln!(out, "set xlabel 'p_c'")?;
    writeln!(out, "set ylabel 'P_s'")?;
    writeln!(out, "plot '{data_path}' using 1:2 with lines")?;
    writeln!(out, "set ylabel 'F'")?;
    writeln!(out, "plot '{data_path}' using 1:3 with lines")?;
    writeln!(out, "unset multiplot")?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(variable: SweepVariable, rows: &[SweepRow], mut out: W) -> io::Result<()> {
    let with_mc = rows.iter().any(|r| r.monte_carlo.is_some());
    write!(out, "{variable},alpha,r,theta,eta_sq,zeta,p_c,ps,fidelity,b_m1,b_0,b_p1")?;
    if with_mc {
        write!(out, ",ps_hat,ps_err,fidelity_hat,fidelity_err,n,seed")?;
    }
    writeln!(out)?;
    for row in rows {
        let p = &row.params;
        let f = &row.figures;
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.value, p.alpha, p.r, p.theta, p.eta_sq, p.zeta, p.p_c, f.p_s, f.fidelity, f.b[0], f.b[1], f.b[2]
        )?;
        if let Some(mc) = &row.monte_carlo {
            write!(
                out,
                ",{},{},{},{},{},{}",
                mc.p_s_hat,
                mc.std_err_ps,
                opt(mc.fidelity_hat),
                opt(mc.std_err_f),
                mc.n_samples,
                mc.seed
            )?;
        } else if with_mc {
            write!(out, ",,,,,,")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Geometry of a repeater chain with equally spaced stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_links: u32,
    pub spacing_km: f64,
    pub loss_db_per_km: f64,
    pub fiber_speed_m_per_s: f64,
    pub overhead_s: f64,
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            n_links: 1,
            spacing_km: 10.0,
            loss_db_per_km: DEFAULT_LOSS_DB_PER_KM,
            fiber_speed_m_per_s: DEFAULT_FIBER_SPEED,
            overhead_s: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub link: u32,
    pub spacing_km: f64,
    pub eta_sq: f64,
    pub p_s: f64,
    pub fidelity: f64,
    pub expected_attempts: f64,
    pub period_s: f64,
    pub rate_hz: f64,
}

/// Per-link attempt statistics: each link's transmittance follows from the
/// spacing, and an attempt takes one fiber transit plus a fixed overhead.
/// No fidelity is composed across links.
pub fn chain_rate(spec: &ChainSpec, params: &LinkParams) -> Result<Vec<ChainRow>> {
    if spec.n_links == 0 {
        return Err(invalid("n_links", 0.0, "need at least one link"));
    }
    if !(spec.fiber_speed_m_per_s > 0.0 && spec.fiber_speed_m_per_s.is_finite()) {
        return Err(invalid("fiber_speed", spec.fiber_speed_m_per_s, "must be positive"));
    }
    if !(spec.overhead_s >= 0.0 && spec.overhead_s.is_finite()) {
        return Err(invalid("overhead_s", spec.overhead_s, "must be non-negative"));
    }
    let eta_sq = eta_from_length(spec.spacing_km, spec.loss_db_per_km)?;
    let link = LinkParams { eta_sq, ..*params };
    let figures = link_figures(&link)?;
    if figures.p_s <= 0.0 {
        return Err(Error::EmptyPostselection);
    }
    let period_s = spec.spacing_km * 1e3 / spec.fiber_speed_m_per_s + spec.overhead_s;
    if period_s <= 0.0 {
        return Err(invalid("overhead_s", spec.overhead_s, "attempt period must be positive"));
    }
    Ok((1..=spec.n_links)
        .map(|link| ChainRow {
            link,
            spacing_km: spec.spacing_km,
            eta_sq,
            p_s: figures.p_s,
            fidelity: figures.fidelity,
            expected_attempts: 1.0 / figures.p_s,
            period_s,
            rate_hz: figures.p_s / period_s,
        })
        .collect())
}

pub fn write_chain_csv<W: Write>(rows: &[ChainRow], mut out: W) -> io::Result<()> {
    writeln!(out, "link,spacing_km,eta_sq,ps,fidelity,expected_attempts,period_s,rate_hz")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.link, r.spacing_km, r.eta_sq, r.p_s, r.fidelity, r.expected_attempts, r.period_s, r.rate_hz
        )?;
    }
    Ok(())
}

/// Everything needed to reproduce one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub params: LinkParams,
    pub r_prime: f64,
    pub d: f64,
    pub figures: LinkFigures,
    pub monte_carlo: Option<LinkEstimate>,
    pub seed: Option<u64>,
}

impl RunRecord {
    pub fn analytic(params: &LinkParams) -> Result<Self> {
        Ok(RunRecord {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            params: *params,
            r_prime: params.r_prime()?,
            d: params.d(),
            figures: link_figures(params)?,
            monte_carlo: None,
            seed: None,
        })
    }

    pub fn with_monte_carlo(params: &LinkParams, n: u64, seed: u64) -> Result<Self> {
        let mut rec = Self::analytic(params)?;
        rec.monte_carlo = Some(estimate_link(params, n, seed)?);
        rec.seed = Some(seed);
        Ok(rec)
    }

    /// Recomputes the record from its own inputs.
    pub fn replay(&self) -> Result<Self> {
        let mut rec = match &self.monte_carlo {
            Some(mc) => Self::with_monte_carlo(&self.params, mc.n_samples, mc.seed)?,
            None => Self::analytic(&self.params)?,
        };
        rec.version = self.version.clone();
        Ok(rec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records contain only finite numbers")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("bad run record: {e}")))
    }
}

/// Flat `key = value` settings; `#` starts a comment. Keys accept `-` or `_`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "alpha",
    "r",
    "theta",
    "eta_sq",
    "zeta",
    "p_c",
    "seed",
    "n",
    "length_km",
    "loss_db_per_km",
];

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("cannot parse `{key}` = `{v}`"))),
        }
    }

    /// Overwrites the link parameters named in the file. A `length_km`
    /// entry sets `eta_sq` through the fiber law unless `eta_sq` is given.
    pub fn apply(&self, params: &mut LinkParams) -> Result<()> {
        if let Some(v) = self.get("alpha")? {
            params.alpha = v;
        }
        if let Some(v) = self.get("r")? {
            params.r = v;
        }
        if let Some(v) = self.get("theta")? {
            params.theta = v;
        }
        if let Some(v) = self.get("zeta")? {
            params.zeta = v;
        }
        if let Some(v) = self.get("p_c")? {
            params.p_c = v;
        }
        if let Some(len) = self.get::<f64>("length_km")? {
            let loss = self.get("loss_db_per_km")?.unwrap_or(DEFAULT_LOSS_DB_PER_KM);
            params.eta_sq = eta_from_length(len, loss)?;
        }
        if let Some(v) = self.get("eta_sq")? {
            params.eta_sq = v;
        }
        Ok(())
    }
}
