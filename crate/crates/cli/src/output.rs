use std::io::{self, Write};

use serde::Serialize;
use softmatcha_core::bench::BenchReport;
use softmatcha_core::{SearchResponse, SearchStats};

/// `doc:offset  left [match] right  (score score ...)`
pub fn search_human(out: &mut impl Write, resp: &SearchResponse) -> io::Result<()> {
    for m in &resp.matches {
        let scores: Vec<String> = m.tokens.iter().map(|t| format!("{:.3}", t.score)).collect();
        let mut line = format!("{}:{}\t", m.doc_id, m.start_offset);
        if !m.left.is_empty() {
            line.push_str(&m.left);
            line.push(' ');
        }
        line.push('[');
        line.push_str(&m.text());
        line.push(']');
        if !m.right.is_empty() {
            line.push(' ');
            line.push_str(&m.right);
        }
        writeln!(out, "{line}\t({})", scores.join(" "))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    total_hits: usize,
    oov_words: &'a [String],
    stats: &'a SearchStats,
}

/// One JSON object per match, then a summary line.
pub fn search_json(out: &mut impl Write, resp: &SearchResponse) -> io::Result<()> {
    for m in &resp.matches {
        serde_json::to_writer(&mut *out, m)?;
        writeln!(out)?;
    }
    let summary = Summary {
        total_hits: resp.total_hits,
        oov_words: &resp.oov_words,
        stats: &resp.stats,
    };
    serde_json::to_writer(&mut *out, &summary)?;
    writeln!(out)
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn bench_header(out: &mut impl Write, csv: bool) -> io::Result<()> {
    if csv {
        writeln!(out, "fraction,tokens,candidates,hits,soften_ms,match_ms,total_ms")
    } else {
        writeln!(
            out,
            "{:>8} {:>12} {:>12} {:>9} {:>10} {:>10} {:>10}",
            "fraction", "tokens", "K", "hits", "soften_ms", "match_ms", "total_ms"
        )
    }
}

pub fn bench_row(out: &mut impl Write, csv: bool, fraction: f64, r: &BenchReport) -> io::Result<()> {
    if csv {
        writeln!(
            out,
            "{},{},{},{},{:.4},{:.4},{:.4}",
            fraction,
            r.corpus_len,
            r.candidates,
            r.hits,
            ms(r.median_soften),
            ms(r.median_match),
            ms(r.median_total)
        )
    } else {
        writeln!(
            out,
            "{:>8} {:>12} {:>12} {:>9} {:>10.3} {:>10.3} {:>10.3}",
            fraction,
            r.corpus_len,
            r.candidates,
            r.hits,
            ms(r.median_soften),
            ms(r.median_match),
            ms(r.median_total)
        )
    }
}
