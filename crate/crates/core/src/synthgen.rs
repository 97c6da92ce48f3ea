//! Seeded synthetic universes with planted cointegrated pairs.
//!
//! All draws come from one `ChaCha8Rng` seeded with `seed_from_u64(seed)`.
//! Uniforms take the top 53 bits of `next_u64`; normals use Box–Muller and
//! consume both outputs of each transform. Draw order is fixed: per-stock
//! start prices and base volumes, the shuffle choosing low-liquidity and
//! gapped stocks, then each stock's path in ticker order (log-price
//! increments, then volumes). Planted pairs draw the `X` walk, then the
//! spread innovations.

use std::fmt::Write as _;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::marketdata::{PricePanel, Quote};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    ConfigInvalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_stocks: usize,
    pub n_planted_pairs: usize,
    /// Trading days (weekdays from `start_date`).
    pub days: usize,
    /// Per planted pair; empty means 1 and a single value applies to all.
    pub hedge_ratios: Vec<f64>,
    /// Spread mean-reversion speed per day.
    pub ou_theta: f64,
    /// Spread innovation volatility per day.
    pub ou_sigma: f64,
    /// Daily log-price volatility of every random walk.
    pub walk_sigma: f64,
    pub seed: u64,
    pub start_date: NaiveDate,
    /// Non-planted stocks missing every `gap_every`-th day.
    pub gapped_stocks: usize,
    pub gap_every: usize,
    /// Equal-weight index over all stocks, emitted under this ticker.
    pub benchmark_ticker: Option<String>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_stocks: 40,
            n_planted_pairs: 3,
            days: 1500,
            hedge_ratios: Vec::new(),
            ou_theta: 0.2,
            ou_sigma: 0.01,
            walk_sigma: 0.015,
            seed: 0,
            start_date: NaiveDate::from_ymd_opt(1990, 1, 2).expect("valid date"),
            gapped_stocks: 0,
            gap_every: 50,
            benchmark_ticker: Some("MKT".into()),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::ConfigInvalid(m));
        if self.n_stocks < 2 {
            return bad("need at least 2 stocks".into());
        }
        if 2 * self.n_planted_pairs > self.n_stocks {
            return bad(format!("{} planted pairs need {} stocks", self.n_planted_pairs, 2 * self.n_planted_pairs));
        }
        if self.days < 2 {
            return bad("need at least 2 days".into());
        }
        if !(self.ou_theta > 0.0 && self.ou_theta < 1.0) {
            return bad(format!("ou_theta {} outside (0, 1)", self.ou_theta));
        }
        for (name, v) in [("ou_sigma", self.ou_sigma), ("walk_sigma", self.walk_sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !matches!(self.hedge_ratios.len(), 0 | 1) && self.hedge_ratios.len() != self.n_planted_pairs {
            return bad(format!("{} hedge ratios for {} planted pairs", self.hedge_ratios.len(), self.n_planted_pairs));
        }
        if self.hedge_ratios.iter().any(|b| !(b.is_finite() && *b != 0.0)) {
            return bad("hedge ratios must be finite and non-zero".into());
        }
        if self.gapped_stocks > 0 && self.gap_every < 2 {
            return bad("gap_every must be at least 2".into());
        }
        if self.benchmark_ticker.as_deref().is_some_and(|b| b.is_empty() || b.starts_with('S')) {
            return bad("benchmark ticker must be non-empty and not start with S".into());
        }
        Ok(())
    }

    fn hedge_ratio(&self, pair: usize) -> f64 {
        match self.hedge_ratios.len() {
            0 => 1.0,
            1 => self.hedge_ratios[0],
            _ => self.hedge_ratios[pair],
        }
    }
}

/// `log leg_a = alpha + beta * log leg_b + s`, with `s` the planted spread.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPair {
    pub leg_a: String,
    pub leg_b: String,
    pub beta: f64,
    pub alpha: f64,
    pub theta: f64,
    pub sigma: f64,
    /// The spread path `s_t`, starting at 0.
    pub spread: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthManifest {
    pub pairs: Vec<PlantedPair>,
    /// Stocks with volumes scaled down by 10^4.
    pub illiquid: Vec<String>,
    pub gapped: Vec<String>,
    pub benchmark: Option<String>,
}

pub const MANIFEST_HEADER: &str = "leg_a,leg_b,beta,alpha,theta,sigma";

impl SynthManifest {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for p in &self.pairs {
            let _ = writeln!(out, "{},{},{},{},{},{}", p.leg_a, p.leg_b, p.beta, p.alpha, p.theta, p.sigma);
        }
        out
    }
}

struct Draws {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Draws {
    fn new(seed: u64) -> Self {
        Draws { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    /// Uniform on [0, 1).
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * phi.sin());
        r * phi.cos()
    }

    fn between(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Weekdays from `start` (inclusive), `n` of them.
pub fn weekday_calendar(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn ticker_name(i: usize, n: usize) -> String {
    let width = (n.max(2) - 1).to_string().len().max(3);
    format!("S{i:0width$}")
}

/// Generates the panel and the ground-truth manifest.
///
/// Planted pair `k` is `(S{2k}, S{2k+1})` with `S{2k}` the dependent leg.
/// Other stocks are independent driftless geometric random walks. The
/// lowest-liquidity decile (`floor(n_stocks / 10)` stocks, drawn from the
/// non-planted ones) trades at 1/10^4 of the usual volume.
pub fn gen_universe(cfg: &SynthConfig) -> Result<(PricePanel, SynthManifest), SynthError> {
    cfg.validate()?;
    let n = cfg.n_stocks;
    let dates = weekday_calendar(cfg.start_date, cfg.days);
    let tickers: Vec<String> = (0..n).map(|i| ticker_name(i, n)).collect();
    let mut draws = Draws::new(cfg.seed);

    let start_prices: Vec<f64> = (0..n).map(|_| draws.between(20.0, 100.0)).collect();
    let base_volumes: Vec<f64> = (0..n).map(|_| draws.between(1e5, 1e6)).collect();

    let mut others: Vec<usize> = (2 * cfg.n_planted_pairs..n).collect();
    others.shuffle(&mut draws.rng);
    let n_illiquid = (n / 10).min(others.len());
    let mut illiquid: Vec<usize> = others[..n_illiquid].to_vec();
    let mut gapped: Vec<usize> = others[n_illiquid..].iter().copied().take(cfg.gapped_stocks).collect();
    illiquid.sort_unstable();
    gapped.sort_unstable();

    let walk = |draws: &mut Draws, start: f64| -> Vec<f64> {
        let mut x = start.ln();
        (0..cfg.days)
            .map(|t| {
                if t > 0 {
                    x += cfg.walk_sigma * draws.normal();
                }
                x
            })
            .collect()
    };

    let mut log_prices: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut volumes: Vec<Vec<u64>> = vec![Vec::new(); n];
    let mut pairs = Vec::with_capacity(cfg.n_planted_pairs);
    let draw_volumes = |draws: &mut Draws, i: usize| -> Vec<u64> {
        let scale = if illiquid.contains(&i) { 1e-4 } else { 1.0 };
        (0..cfg.days).map(|_| ((base_volumes[i] * scale * (0.3 * draws.normal()).exp()).round() as u64).max(1)).collect()
    };
    for i in 0..n {
        if i < 2 * cfg.n_planted_pairs {
            if i % 2 == 1 {
                continue;
            }
            let k = i / 2;
            let log_x = walk(&mut draws, start_prices[i + 1]);
            let mut spread = Vec::with_capacity(cfg.days);
            let mut s = 0.0;
            for t in 0..cfg.days {
                if t > 0 {
                    s = (1.0 - cfg.ou_theta) * s + cfg.ou_sigma * draws.normal();
                }
                spread.push(s);
            }
            let beta = cfg.hedge_ratio(k);
            let alpha = start_prices[i].ln() - beta * log_x[0];
            log_prices[i] = log_x.iter().zip(&spread).map(|(x, s)| alpha + beta * x + s).collect();
            log_prices[i + 1] = log_x;
            volumes[i] = draw_volumes(&mut draws, i);
            volumes[i + 1] = draw_volumes(&mut draws, i + 1);
            pairs.push(PlantedPair {
                leg_a: tickers[i].clone(),
                leg_b: tickers[i + 1].clone(),
                beta,
                alpha,
                theta: cfg.ou_theta,
                sigma: cfg.ou_sigma,
                spread,
            });
        } else {
            log_prices[i] = walk(&mut draws, start_prices[i]);
            volumes[i] = draw_volumes(&mut draws, i);
        }
    }

    let mut all_tickers = tickers.clone();
    let mut quotes: Vec<Vec<Option<Quote>>> = (0..n)
        .map(|i| {
            (0..cfg.days)
                .map(|t| {
                    let missing = gapped.contains(&i) && t % cfg.gap_every == cfg.gap_every - 1;
                    (!missing).then(|| Quote { close: log_prices[i][t].exp(), volume: volumes[i][t] })
                })
                .collect()
        })
        .collect();
    if let Some(bench) = &cfg.benchmark_ticker {
        let index: Vec<Option<Quote>> = (0..cfg.days)
            .map(|t| {
                let mean = (0..n).map(|i| log_prices[i][t] - log_prices[i][0]).sum::<f64>() / n as f64;
                Some(Quote { close: 100.0 * mean.exp(), volume: 1_000_000_000 })
            })
            .collect();
        let pos = all_tickers.partition_point(|t| t < bench);
        all_tickers.insert(pos, bench.clone());
        quotes.insert(pos, index);
    }
    let panel = PricePanel::new(dates, all_tickers, quotes)
        .map_err(|e| SynthError::ConfigInvalid(format!("generated panel rejected: {e}")))?;
    let manifest = SynthManifest {
        pairs,
        illiquid: illiquid.iter().map(|&i| tickers[i].clone()).collect(),
        gapped: gapped.iter().map(|&i| tickers[i].clone()).collect(),
        benchmark: cfg.benchmark_ticker.clone(),
    };
    Ok((panel, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_panel() {
        let cfg = SynthConfig { n_stocks: 12, days: 60, seed: 9, ..SynthConfig::default() };
        let (a, ma) = gen_universe(&cfg).unwrap();
        let (b, mb) = gen_universe(&cfg).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(ma, mb);
        let (c, _) = gen_universe(&SynthConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.to_csv_string(), c.to_csv_string());
    }

    #[test]
    fn planted_relation_holds() {
        let cfg = SynthConfig { n_stocks: 10, n_planted_pairs: 2, days: 30, hedge_ratios: vec![2.0, 0.5], ..SynthConfig::default() };
        let (panel, manifest) = gen_universe(&cfg).unwrap();
        for p in &manifest.pairs {
            let (ia, ib) = (panel.ticker_index(&p.leg_a).unwrap(), panel.ticker_index(&p.leg_b).unwrap());
            for t in 0..cfg.days {
                let (a, b) = (panel.close(ia, t).unwrap().ln(), panel.close(ib, t).unwrap().ln());
                assert!((a - p.alpha - p.beta * b - p.spread[t]).abs() < 1e-9);
            }
        }
        assert_eq!(manifest.pairs[1].beta, 0.5);
    }

    #[test]
    fn illiquid_decile_and_gaps() {
        let cfg = SynthConfig { n_stocks: 30, days: 20, gapped_stocks: 2, gap_every: 5, ..SynthConfig::default() };
        let (panel, manifest) = gen_universe(&cfg).unwrap();
        assert_eq!(manifest.illiquid.len(), 3);
        assert_eq!(manifest.gapped.len(), 2);
        assert!(manifest.illiquid.iter().all(|t| t.as_str() >= "S006"));
        let g = panel.ticker_index(&manifest.gapped[0]).unwrap();
        assert!(panel.quote(g, 4).is_none() && panel.quote(g, 3).is_some());
        assert_eq!(panel.tickers()[0], "MKT");
        assert_eq!(panel.n_tickers(), 31);
    }

    #[test]
    fn config_checks() {
        let bad = [
            SynthConfig { n_planted_pairs: 30, ..SynthConfig::default() },
            SynthConfig { ou_theta: 1.0, ..SynthConfig::default() },
            SynthConfig { ou_sigma: 0.0, ..SynthConfig::default() },
            SynthConfig { hedge_ratios: vec![1.0, 2.0], ..SynthConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(gen_universe(&cfg), Err(SynthError::ConfigInvalid(_))));
        }
    }

    #[test]
    fn calendar_skips_weekends() {
        let cal = weekday_calendar(NaiveDate::from_ymd_opt(2024, 1, 5).unwrap(), 3);
        assert_eq!(cal[1], NaiveDate::from_ymd_opt(2024, 1, 8).unwrap());
    }
}
