//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::Path;

use chrono::NaiveDate;
use pairtrade::marketdata::{PriceBar, PricePanel};
use pairtrade::synthgen::{gen_universe, weekday_calendar, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Gaussian random walk of `n` points starting at 0.
pub fn random_walk(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|t| {
            if t > 0 {
                x += sigma * normal(rng);
            }
            x
        })
        .collect()
}

/// AR(1) `s_t = (1 - theta) s_{t-1} + sigma e_t` from 0.
pub fn ou(rng: &mut ChaCha8Rng, n: usize, theta: f64, sigma: f64) -> Vec<f64> {
    let mut s = 0.0;
    (0..n)
        .map(|t| {
            if t > 0 {
                s = (1.0 - theta) * s + sigma * normal(rng);
            }
            s
        })
        .collect()
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Synthetic universe with the benchmark removed.
pub fn synth(cfg: &SynthConfig) -> PricePanel {
    let (panel, manifest) = gen_universe(cfg).unwrap();
    match manifest.benchmark {
        Some(b) => panel.split_off(&b).0,
        None => panel,
    }
}

/// Panel of `n_tickers` independent geometric random walks on weekdays.
pub fn walk_panel(seed: u64, n_tickers: usize, days: usize) -> PricePanel {
    let mut r = rng(seed);
    let dates = weekday_calendar(date(2000, 1, 3), days);
    let mut bars = Vec::new();
    for i in 0..n_tickers {
        let walk = random_walk(&mut r, days, 0.02);
        for (t, x) in walk.iter().enumerate() {
            bars.push(PriceBar {
                date: dates[t],
                ticker: format!("T{i:03}"),
                close: 50.0 * x.exp(),
                volume: 1_000 + r.random_range(0..1_000_000),
            });
        }
    }
    PricePanel::from_bars(bars).unwrap()
}

/// Rescales every close and volume strictly after date index `after` by a
/// random factor.
pub fn mutate_after(panel: &PricePanel, after: usize, seed: u64) -> PricePanel {
    let mut r = rng(seed);
    let cut = panel.dates()[after];
    let bars: Vec<PriceBar> = panel
        .bars()
        .map(|mut bar| {
            if bar.date > cut {
                bar.close *= (0.1 * normal(&mut r)).exp();
                bar.volume = r.random_range(1..10_000_000);
            }
            bar
        })
        .collect();
    PricePanel::from_bars(bars).unwrap()
}

pub fn relative_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Runs the command-line front end in-process, returning (exit code,
/// stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pairtrade").chain(args.iter().copied());
    let code = pairtrade::cli::run_command(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Every regular file under `root`, as (relative path, bytes), sorted.
pub fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}
