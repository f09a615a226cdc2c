//! SNR sweeps behind the `bounds` and `simulate` subcommands, and their CSV / terminal rendering.
//!
//! Every `(point, trial)` cell of a simulation draws from its own RNG streams, so results do not
//! depend on thread count or scheduling. Rows are aggregated in grid order.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bounds::{
    asymptote, awgn_capacity, bound_new, bound_original, db_to_linear, linear_to_db, NoiseModel, RatePoint,
};
use crate::channel::gen_channel;
use crate::error::{Error, Result};
use crate::modulo::Modulus;
use crate::precoder::{synthesize_zf, PrecoderKind};
use crate::rates::{exact_modt_rate, per_user_rate_sim_with, ChainConfig};
use crate::rng::{Purpose, RngStream};

pub const CSV_HEADER: &str =
    "snr_db,c_awgn_bits,bound_original_bits,bound_new_bits,asymptote_bits,exact_modt_bits,mc_rate_bits,snr_prime_db,sigma_s2";

/// Grid sizes above this are rejected as configuration errors.
pub const MAX_GRID_POINTS: usize = 100_000;
/// Channel redraws allowed per cell before a singular channel is reported as an error.
pub const MAX_REDRAWS: usize = 1000;
/// Per-stream transmit power of the simulated system; `t = sqrt(12 P_T)`.
pub const SIM_POWER: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub users: usize,
    pub tx_antennas: usize,
    pub trials: usize,
    pub samples: usize,
    pub seed: u64,
    pub clamp_zero: bool,
    pub chain: ChainConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_start_db: -10.0,
            snr_stop_db: 30.0,
            snr_step_db: 1.0,
            users: 4,
            tx_antennas: 4,
            trials: 100,
            samples: 1_000_000,
            seed: 1,
            clamp_zero: false,
            chain: ChainConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if ![self.snr_start_db, self.snr_stop_db, self.snr_step_db]
            .iter()
            .all(|x| x.is_finite())
        {
            return bad("SNR grid values must be finite".into());
        }
        if self.snr_start_db > self.snr_stop_db {
            return bad(format!(
                "snr start {} exceeds stop {}",
                self.snr_start_db, self.snr_stop_db
            ));
        }
        if !(self.snr_step_db > 0.0) {
            return bad(format!("snr step must be > 0, got {}", self.snr_step_db));
        }
        if (self.snr_stop_db - self.snr_start_db) / self.snr_step_db >= MAX_GRID_POINTS as f64 {
            return bad(format!("SNR grid exceeds {MAX_GRID_POINTS} points"));
        }
        if self.users == 0 || self.users > self.tx_antennas {
            return bad(format!(
                "need 1 <= users <= tx antennas, got {} users, {} antennas",
                self.users, self.tx_antennas
            ));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        self.chain.estimator.validate()
    }

    /// `start, start + step, ...` up to `stop` inclusive (with a 1e-9 step tolerance).
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.snr_start_db + i as f64 * self.snr_step_db)
            .collect()
    }

    fn echo(&self) -> String {
        format!(
            "snr_start={} snr_stop={} snr_step={} users={} tx_antennas={} trials={} samples={} bins={} strata={} miller_madow={} precoder={} inflation={} residual_trials={} clamp_zero={}",
            fmt_g(self.snr_start_db),
            fmt_g(self.snr_stop_db),
            fmt_g(self.snr_step_db),
            self.users,
            self.tx_antennas,
            self.trials,
            self.samples,
            self.chain.estimator.bins,
            self.chain.estimator.strata,
            self.chain.estimator.miller_madow,
            precoder_name(self.chain.precoder),
            self.chain.inflation.name(),
            self.chain.residual_trials,
            self.clamp_zero,
        )
    }
}

pub fn precoder_name(kind: PrecoderKind) -> &'static str {
    match kind {
        PrecoderKind::ZeroForcing => "zf",
        PrecoderKind::Mmse => "mmse",
    }
}

/// Rows of a sweep plus the comment lines written around them.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub points: Vec<RatePoint>,
    pub header_comments: Vec<String>,
    pub footer_comments: Vec<String>,
    pub clamp_zero: bool,
}

// plot marker, legend label, column accessor
type Series = (char, &'static str, Box<dyn Fn(&RatePoint) -> Option<f64>>);

impl RateCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.header_comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        let rate = |x: f64| if self.clamp_zero { x.max(0.0) } else { x };
        let opt = |x: Option<f64>, clamp: bool| match x {
            Some(v) => fmt_g(if clamp { rate(v) } else { v }),
            None => String::new(),
        };
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                fmt_g(p.snr_db),
                fmt_g(rate(p.c_awgn)),
                fmt_g(rate(p.bound_original)),
                fmt_g(rate(p.bound_new)),
                fmt_g(rate(p.asymptote)),
                opt(p.exact_modt, true),
                opt(p.mc_rate, true),
                opt(p.snr_prime_db, false),
                opt(p.sigma_s2, false),
            );
        }
        for c in &self.footer_comments {
            let _ = writeln!(out, "# {c}");
        }
        out
    }

    /// Terminal chart of the rate columns against `snr_db`.
    pub fn ascii_plot(&self, width: usize, height: usize) -> String {
        let (width, height) = (width.max(10), height.max(5));
        let series: [Series; 6] = [
            ('C', "awgn capacity", Box::new(|p| Some(p.c_awgn))),
            ('N', "bound new", Box::new(|p| Some(p.bound_new))),
            ('O', "bound original", Box::new(|p| Some(p.bound_original))),
            ('.', "asymptote", Box::new(|p| Some(p.asymptote))),
            ('E', "exact mod-t", Box::new(|p| p.exact_modt)),
            ('x', "monte carlo", Box::new(|p| p.mc_rate)),
        ];
        let vals: Vec<f64> = self
            .points
            .iter()
            .flat_map(|p| series.iter().filter_map(move |(_, _, f)| f(p)))
            .map(|v| if self.clamp_zero { v.max(0.0) } else { v })
            .filter(|v| v.is_finite())
            .collect();
        if self.points.is_empty() || vals.is_empty() {
            return String::from("(no data)\n");
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(lo + 1e-9);
        let x0 = self.points[0].snr_db;
        let x1 = self.points[self.points.len() - 1].snr_db.max(x0 + 1e-9);
        let mut grid = vec![vec![' '; width]; height];
        let zero_row = ((hi / (hi - lo)) * (height - 1) as f64).round() as usize;
        if zero_row < height {
            grid[zero_row].iter_mut().for_each(|c| *c = '-');
        }
        // later series overwrite earlier ones, so draw in reverse priority
        for (mark, _, f) in series.iter().rev() {
            for p in &self.points {
                if let Some(v) = f(p).map(|v| if self.clamp_zero { v.max(0.0) } else { v }) {
                    let col = ((p.snr_db - x0) / (x1 - x0) * (width - 1) as f64).round() as usize;
                    let row = ((hi - v) / (hi - lo) * (height - 1) as f64).round() as usize;
                    grid[row.min(height - 1)][col.min(width - 1)] = *mark;
                }
            }
        }
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let label = hi - (hi - lo) * i as f64 / (height - 1) as f64;
            let _ = writeln!(out, "{label:>7.2} |{}", row.iter().collect::<String>());
        }
        let _ = writeln!(out, "{:>7} +{}", "bits", "-".repeat(width));
        let _ = writeln!(
            out,
            "{:>9}{:<w$}{:>8}",
            "",
            format!("{x0} dB"),
            format!("{x1} dB"),
            w = width - 8
        );
        let legend: Vec<String> = series.iter().map(|(m, name, _)| format!("{m} {name}")).collect();
        let _ = writeln!(out, "          {}", legend.join("   "));
        out
    }
}

/// C `%.12g`: 12 significant digits, trailing zeros dropped, exponent form outside `[1e-4, 1e12)`.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn header(command: &str, cfg: &SweepConfig) -> Vec<String> {
    vec![
        format!("thp {} {}", env!("CARGO_PKG_VERSION"), command),
        format!("seed={}", cfg.seed),
        format!("config: {}", cfg.echo()),
    ]
}

/// Analytic curves over the grid. `snr_prime_db` and `sigma_s2` stay empty.
pub fn cmd_bounds(cfg: &SweepConfig) -> Result<RateCurve> {
    cfg.validate()?;
    Ok(RateCurve {
        points: cfg.grid().into_iter().map(RatePoint::analytic).collect(),
        header_comments: header("bounds", cfg),
        footer_comments: Vec::new(),
        clamp_zero: cfg.clamp_zero,
    })
}

/// Per-user outcome of one simulated channel.
#[derive(Debug, Clone, PartialEq)]
struct CellResult {
    users: Vec<UserCell>,
    redraws: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct UserCell {
    snr_prime: f64,
    sigma_s2: f64,
    mc_bits: f64,
    mc_se: f64,
    exact_bits: f64,
}

fn simulate_cell(cfg: &SweepConfig, point: usize, snr_db: f64, trial: usize) -> Result<CellResult> {
    let m = Modulus::from_power(SIM_POWER)?;
    let noise = NoiseModel::from_snr(db_to_linear(snr_db), &m)?;
    let (p, t) = (point as u64, trial as u64);
    let mut ch_rng = RngStream::for_cell(cfg.seed, p, t, Purpose::Channel);
    let mut redraws = 0;
    let h = loop {
        let h = gen_channel(cfg.users, cfg.tx_antennas, &mut ch_rng)?;
        // both precoders factor the same rows, so ZF synthesis is the singularity probe
        match synthesize_zf(&h) {
            Ok(_) => break h,
            Err(Error::Singular { .. }) if redraws < MAX_REDRAWS => redraws += 1,
            Err(e) => return Err(e),
        }
    };
    let mut resid_rng = RngStream::for_cell(cfg.seed, p, t, Purpose::Residual);
    let mut sim_rng = RngStream::for_cell(cfg.seed, p, t, Purpose::Symbols);
    let users = per_user_rate_sim_with(&h, &noise, &m, cfg.samples, &cfg.chain, &mut resid_rng, &mut sim_rng)?;
    let users = users
        .into_iter()
        .map(|u| {
            let nm = NoiseModel::new(m.p_t(), 0.0, m.p_t() / u.noise.snr_prime())?;
            let exact = exact_modt_rate(nm.alpha(), nm.sigma(), &m)?;
            Ok(UserCell {
                snr_prime: u.noise.snr_prime(),
                sigma_s2: u.noise.sigma_s2(),
                mc_bits: u.rate.bits,
                mc_se: u.rate.std_error,
                exact_bits: exact.bits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellResult { users, redraws })
}

/// Full-chain simulation over the grid.
///
/// Per point, `trials` channels are drawn and each user's rate is estimated. All rate columns are
/// averages over users and trials. The bound and capacity columns are evaluated at each user's
/// measured SNR′ and then averaged, so they compare directly with `mc_rate_bits`.
/// `snr_prime_db` is the mean of the per-user SNR′ in dB.
pub fn cmd_simulate(cfg: &SweepConfig) -> Result<RateCurve> {
    cfg.validate()?;
    let grid = cfg.grid();
    let cells: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let results: Vec<Result<CellResult>> = cells
        .par_iter()
        .map(|&(p, t)| simulate_cell(cfg, p, grid[p], t))
        .collect();
    let mut points = Vec::with_capacity(grid.len());
    let mut redraws = 0;
    for (p, chunk) in results.chunks(cfg.trials).enumerate() {
        let mut acc = PointAccumulator::default();
        for r in chunk {
            let r = r.as_ref().map_err(clone_error)?;
            redraws += r.redraws;
            r.users.iter().for_each(|u| acc.push(u));
        }
        points.push(acc.finish(grid[p]));
    }
    let mut footer = vec![format!("resampled_singular_draws={redraws}")];
    if points.iter().any(|p| p.mc_std_error.is_some()) {
        footer.push("mc_rate_bits is the mean over users and trials of the per-user plug-in estimate".into());
    }
    Ok(RateCurve {
        points,
        header_comments: header("simulate", cfg),
        footer_comments: footer,
        clamp_zero: cfg.clamp_zero,
    })
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Domain(s) => Error::Domain(s.clone()),
        Error::Singular { row, pivot } => Error::Singular {
            row: *row,
            pivot: *pivot,
        },
        Error::Quadrature {
            value,
            abs_error,
            panels,
        } => Error::Quadrature {
            value: *value,
            abs_error: *abs_error,
            panels: *panels,
        },
        Error::Config(s) => Error::Config(s.clone()),
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), io.to_string())),
    }
}

#[derive(Default)]
struct PointAccumulator {
    n: usize,
    c_awgn: f64,
    bound_original: f64,
    bound_new: f64,
    asymptote: f64,
    exact: f64,
    mc: f64,
    mc_var: f64,
    snr_prime_db: f64,
    sigma_s2: f64,
}

impl PointAccumulator {
    fn push(&mut self, u: &UserCell) {
        let s = u.snr_prime;
        self.n += 1;
        self.c_awgn += awgn_capacity(s);
        self.bound_original += bound_original(s);
        self.bound_new += bound_new(s);
        self.asymptote += asymptote(s);
        self.exact += u.exact_bits;
        self.mc += u.mc_bits;
        self.mc_var += u.mc_se * u.mc_se;
        self.snr_prime_db += linear_to_db(s);
        self.sigma_s2 += u.sigma_s2;
    }

    fn finish(&self, snr_db: f64) -> RatePoint {
        let n = self.n as f64;
        RatePoint {
            snr_db,
            c_awgn: self.c_awgn / n,
            bound_original: self.bound_original / n,
            bound_new: self.bound_new / n,
            asymptote: self.asymptote / n,
            exact_modt: Some(self.exact / n),
            mc_rate: Some(self.mc / n),
            mc_std_error: Some(self.mc_var.sqrt() / n),
            snr_prime_db: Some(self.snr_prime_db / n),
            sigma_s2: Some(self.sigma_s2 / n),
        }
    }
}
