//! Repeated-query timing.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::embeddings::Threshold;
use crate::engine::Engine;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchSample {
    pub soften: Duration,
    pub matching: Duration,
}

impl BenchSample {
    pub fn total(&self) -> Duration {
        self.soften + self.matching
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub corpus_len: usize,
    pub samples: Vec<BenchSample>,
    pub candidates: u64,
    pub hits: usize,
    pub median_soften: Duration,
    pub median_match: Duration,
    pub median_total: Duration,
}

pub fn median(values: &mut [Duration]) -> Duration {
    if values.is_empty() {
        return Duration::ZERO;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2
    }
}

/// Runs the matcher `repeat` times (at least once) and reports medians.
pub fn bench_query<S: AsRef<str>>(engine: &Engine, pattern: &[S], alpha: Threshold, repeat: usize) -> BenchReport {
    let mut samples = Vec::with_capacity(repeat.max(1));
    let mut candidates = 0;
    let mut hits = 0;
    for _ in 0..repeat.max(1) {
        let out = engine.match_pattern(pattern, alpha);
        candidates = out.matches.candidates;
        hits = out.matches.len();
        samples.push(BenchSample {
            soften: out.soften_time,
            matching: out.match_time,
        });
    }
    let mut soften: Vec<Duration> = samples.iter().map(|s| s.soften).collect();
    let mut matching: Vec<Duration> = samples.iter().map(|s| s.matching).collect();
    let mut total: Vec<Duration> = samples.iter().map(BenchSample::total).collect();
    BenchReport {
        corpus_len: engine.corpus().len(),
        median_soften: median(&mut soften),
        median_match: median(&mut matching),
        median_total: median(&mut total),
        samples,
        candidates,
        hits,
    }
}

/// Median time of Step 1 alone over `repeat` back-to-back runs.
pub fn bench_soften<S: AsRef<str>>(engine: &Engine, pattern: &[S], alpha: Threshold, repeat: usize) -> Duration {
    let mut times: Vec<Duration> = (0..repeat.max(1))
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(engine.soften(pattern, alpha));
            t.elapsed()
        })
        .collect();
    median(&mut times)
}
