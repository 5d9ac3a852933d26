//! Aggregation and export of per-region verification results.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::refinement::RegionResult;
use crate::spatial_index::SpatialIndex;

/// Regions whose bound is strictly below `p_safe`.
pub fn safe_set(results: &[RegionResult], p_safe: f64) -> Vec<HyperBox> {
    results
        .iter()
        .filter(|r| r.upper_bound < p_safe)
        .map(|r| r.region.clone())
        .collect()
}

pub fn safe_volume(results: &[RegionResult], p_safe: f64) -> f64 {
    safe_set(results, p_safe).iter().map(HyperBox::volume).sum()
}

/// Largest bound over regions overlapping `query` beyond a shared face. Fails with `Uncovered` if
/// part of `query` lies outside every region.
pub fn worst_case(results: &[RegionResult], query: &HyperBox) -> Result<f64> {
    let mut index = SpatialIndex::new(query.dim());
    for r in results {
        if r.region.dim() != query.dim() {
            return Err(Error::dims(query.dim(), r.region.dim()));
        }
        index.insert(r.region.clone(), r.upper_bound)?;
    }
    if !index.coverage_gaps(query)?.is_empty() {
        return Err(Error::Uncovered);
    }
    Ok(index
        .window_query(query)?
        .iter()
        .filter(|r| query.overlaps_interior(&r.region))
        .map(|r| r.payload)
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub volume: f64,
}

/// Region volume per bound bin. Bins are `[e_i, e_{i+1})` except the last,
/// which is closed.
pub fn volume_histogram(results: &[RegionResult], edges: &[f64]) -> Result<Vec<HistogramBin>> {
    if edges.len() < 2 {
        return Err(Error::BadBins("need at least two edges".into()));
    }
    if edges
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::BadBins("edges must be strictly increasing".into()));
    }
    if edges[0] > 0.0 || edges[edges.len() - 1] < 1.0 {
        return Err(Error::BadBins("edges must cover [0, 1]".into()));
    }
    let mut bins: Vec<HistogramBin> = edges
        .windows(2)
        .map(|w| HistogramBin {
            lo: w[0],
            hi: w[1],
            volume: 0.0,
        })
        .collect();
    let last = bins.len() - 1;
    for r in results {
        let b = r.upper_bound;
        let i = edges[1..].partition_point(|&e| e <= b).min(last);
        bins[i].volume += r.region.volume();
    }
    Ok(bins)
}

pub fn to_csv(results: &[RegionResult]) -> String {
    let dim = results.first().map_or(0, |r| r.region.dim());
    let mut out = String::new();
    for d in 0..dim {
        let _ = write!(out, "dim{d}_lo,dim{d}_hi,");
    }
    out.push_str("upper_bound,verdict,generation\n");
    for r in results {
        for iv in r.region.intervals() {
            let _ = write!(out, "{},{},", iv.lo(), iv.hi());
        }
        let _ = writeln!(
            out,
            "{},{},{}",
            r.upper_bound,
            r.verdict.as_str(),
            r.generation
        );
    }
    out
}

pub fn to_json(results: &[RegionResult]) -> String {
    serde_json::to_string_pretty(results).expect("results serialise")
}

const SVG_SIZE: f64 = 600.0;

/// Heatmap of 2-D regions coloured by bound.
pub fn to_svg(results: &[RegionResult], axis_names: [&str; 2]) -> Result<String> {
    let Some(first) = results.first() else {
        return Err(Error::Uncovered);
    };
    if first.region.dim() != 2 {
        return Err(Error::dims(2, first.region.dim()));
    }
    let mut extent = first.region.clone();
    for r in results {
        extent = extent.hull(&r.region)?;
    }
    let (x, y) = (extent.interval(0), extent.interval(1));
    let sx = SVG_SIZE / x.width().max(f64::MIN_POSITIVE);
    let sy = SVG_SIZE / y.width().max(f64::MIN_POSITIVE);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = SVG_SIZE + 80.0,
        h = SVG_SIZE + 60.0
    );
    let _ = writeln!(
        out,
        "<!-- colour = rgb(255*b, 0, 255*(1-b)) for upper bound b, linear from 0 (blue) to 1 (red). \
         x: {} in [{}, {}], y: {} in [{}, {}] -->",
        axis_names[0],
        x.lo(),
        x.hi(),
        axis_names[1],
        y.lo(),
        y.hi()
    );
    let _ = writeln!(out, "<g transform=\"translate(60,10)\">");
    for r in results {
        let (rx, ry) = (r.region.interval(0), r.region.interval(1));
        let b = r.upper_bound.clamp(0.0, 1.0);
        let _ = writeln!(
            out,
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"rgb({},0,{})\" stroke=\"black\" stroke-width=\"0.2\"><title>{:.6}</title></rect>",
            (rx.lo() - x.lo()) * sx,
            (y.hi() - ry.hi()) * sy,
            rx.width() * sx,
            ry.width() * sy,
            (255.0 * b).round() as u8,
            (255.0 * (1.0 - b)).round() as u8,
            r.upper_bound
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        60.0 + SVG_SIZE / 2.0,
        SVG_SIZE + 45.0,
        axis_names[0]
    );
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>",
        10.0 + SVG_SIZE / 2.0,
        10.0 + SVG_SIZE / 2.0,
        axis_names[1]
    );
    out.push_str("</svg>\n");
    Ok(out)
}
