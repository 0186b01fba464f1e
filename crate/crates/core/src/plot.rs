//! Curve data for figures: sampled series with inflection and fixed-point
//! markers, written as CSV (and optionally a bare-bones SVG).

use std::io::{self, Write};

use crate::analysis::{self, fixed_point, inflection_pair, inflection_single};
use crate::chain::Chain;
use crate::exceedance::{ExceedanceSpec, UnitInterval};
use crate::numfmt::sig17;
use crate::scan::grid;
use crate::search::{cubic_composition, cubic_composition_inflections, cubic_inflections, Cubic};

pub const DEFAULT_SAMPLES: usize = 501;

/// Grid used for marker scans on chains of three or more stages.
const MARKER_GRID: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerKind {
    Inflection,
    FixedPoint,
}

impl MarkerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkerKind::Inflection => "inflection",
            MarkerKind::FixedPoint => "fixed_point",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub p: f64,
    pub value: f64,
    pub kind: MarkerKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    /// `(p, value)`, strictly increasing in `p`.
    pub rows: Vec<(f64, f64)>,
    pub markers: Vec<Marker>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// `F_{6,m}` for m = 1..6.
    Fig1,
    /// `F_{3,m1}(F_{4,m2})` for every (m1, m2).
    Fig2,
    /// The cubics g1, g2 and their composition.
    Fig3,
}

fn sample<F: Fn(f64) -> f64>(f: F, samples: usize) -> Vec<(f64, f64)> {
    grid(0.0, 1.0, samples.max(2)).map(|p| (p, f(p))).collect()
}

fn at(p: f64) -> UnitInterval {
    UnitInterval::saturating(p)
}

/// Series for one chain. Inflection markers come from the length-based
/// dispatch in the analysis module; fixed points are added on request.
pub fn chain_series(chain: &Chain, samples: usize, with_fixed_point: bool) -> PlotSeries {
    let points = match chain.len() {
        1 => inflection_single(&chain.specs()[0]).points,
        2 => inflection_pair(chain).expect("two stages").points,
        _ => analysis::inflection_scan(chain, MARKER_GRID).points,
    };
    let mut markers: Vec<Marker> = points
        .into_iter()
        .map(|p| Marker { p, value: chain.eval(at(p)).get(), kind: MarkerKind::Inflection })
        .collect();
    if with_fixed_point {
        if let Some(p) = fixed_point(chain).point {
            markers.push(Marker { p, value: chain.eval(at(p)).get(), kind: MarkerKind::FixedPoint });
        }
    }
    PlotSeries {
        label: chain.label(),
        rows: sample(|p| chain.eval(at(p)).get(), samples),
        markers,
    }
}

fn cubic_series<F: Fn(f64) -> f64>(label: &str, f: F, points: Vec<f64>, samples: usize) -> PlotSeries {
    PlotSeries {
        label: label.to_string(),
        markers: points
            .into_iter()
            .map(|p| Marker { p, value: f(p), kind: MarkerKind::Inflection })
            .collect(),
        rows: sample(f, samples),
    }
}

pub fn figure_series(figure: Figure, samples: usize) -> Vec<PlotSeries> {
    match figure {
        Figure::Fig1 => (1..=6)
            .map(|m| chain_series(&ExceedanceSpec::new(6, m).unwrap().into(), samples, false))
            .collect(),
        Figure::Fig2 => (1..=3)
            .flat_map(|m1| (1..=4).map(move |m2| (m1, m2)))
            .map(|(m1, m2)| chain_series(&Chain::from_pairs(&[(3, m1), (4, m2)]).unwrap(), samples, false))
            .collect(),
        Figure::Fig3 => {
            let mut out: Vec<PlotSeries> = [Cubic::G1, Cubic::G2]
                .into_iter()
                .map(|c| {
                    let pts = cubic_inflections(c, MARKER_GRID).points;
                    cubic_series(c.label(), |p| c.eval(at(p)).get(), pts, samples)
                })
                .collect();
            let pts = cubic_composition_inflections(MARKER_GRID).points;
            out.push(cubic_series("g1(g2)", |p| cubic_composition(at(p)).get(), pts, samples));
            out
        }
    }
}

/// `series_label,p,value,marker_kind`; plain samples leave `marker_kind` empty.
pub fn write_csv<W: Write>(series: &[PlotSeries], mut w: W) -> io::Result<()> {
    writeln!(w, "series_label,p,value,marker_kind")?;
    for s in series {
        for &(p, v) in &s.rows {
            writeln!(w, "{},{},{},", s.label, sig17(p), sig17(v))?;
        }
        for m in &s.markers {
            writeln!(w, "{},{},{},{}", s.label, sig17(m.p), sig17(m.value), m.kind.as_str())?;
        }
    }
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Unit square plotted into a 500x500 box with a 50px margin.
pub fn write_svg<W: Write>(series: &[PlotSeries], mut w: W) -> io::Result<()> {
    let (size, margin) = (500.0, 50.0);
    let tx = |p: f64| margin + p * size;
    let ty = |v: f64| margin + (1.0 - v) * size;
    let full = size + 2.0 * margin;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#)?;
    writeln!(w, r#"<rect x="{margin}" y="{margin}" width="{size}" height="{size}" fill="none" stroke="black"/>"#)?;
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.rows.iter().map(|&(p, v)| format!("{:.2},{:.2}", tx(p), ty(v))).collect();
        writeln!(w, r#"<polyline fill="none" stroke="{colour}" points="{}"><title>{}</title></polyline>"#, pts.join(" "), s.label)?;
        for m in &s.markers {
            let fill = match m.kind {
                MarkerKind::Inflection => colour,
                MarkerKind::FixedPoint => "white",
            };
            writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}" stroke="{colour}"/>"#, tx(m.p), ty(m.value))?;
        }
    }
    writeln!(w, "</svg>")
}
