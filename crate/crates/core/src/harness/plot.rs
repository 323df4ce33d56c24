//! Self-contained SVG figures rendered from the episode CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::metrics::{aggregate, metrics_from_rows, AggregateSeries};
use super::run::EpisodeRow;
use super::spec::{SweepParam, SweepPoint};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotMode {
    /// Average return per task, one curve per agent with SE bands.
    PerTaskReturn,
    /// Total return against DND capacity.
    CapacitySweep,
    /// Total return against neighbour count.
    NeighbourSweep,
    /// Per-task curves of agents run with and without learned weights.
    LearnW,
}

impl PlotMode {
    pub const ALL: [PlotMode; 4] = [
        PlotMode::PerTaskReturn,
        PlotMode::CapacitySweep,
        PlotMode::NeighbourSweep,
        PlotMode::LearnW,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotMode::PerTaskReturn => "per_task_return",
            PlotMode::CapacitySweep => "capacity_sweep",
            PlotMode::NeighbourSweep => "neighbour_sweep",
            PlotMode::LearnW => "learn_w",
        }
    }

    fn sweep_param(self) -> Option<SweepParam> {
        match self {
            PlotMode::PerTaskReturn => None,
            PlotMode::CapacitySweep => Some(SweepParam::Capacity),
            PlotMode::NeighbourSweep => Some(SweepParam::Neighbours),
            PlotMode::LearnW => Some(SweepParam::LearnW),
        }
    }
}

impl FromStr for PlotMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown plot mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Style {
    Band,
    ErrorBars,
}

#[derive(Clone, Debug)]
struct ChartSeries {
    name: String,
    /// (x, mean, se)
    points: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug)]
struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    x_ticks: Option<Vec<(f64, String)>>,
    style: Style,
    series: Vec<ChartSeries>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= count as f64)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

impl Chart {
    fn render(&self) -> String {
        let (w, h) = (760.0, 460.0);
        let (ml, mr, mt, mb) = (70.0, 170.0, 40.0, 55.0);
        let (pw, ph) = (w - ml - mr, h - mt - mb);

        let all = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, m, se) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(m - se);
            y1 = y1.max(m + se);
        }
        if x0 > x1 {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            (x0, x1) = (x0 - 0.5, x1 + 0.5);
        }
        if y1 - y0 < 1e-12 {
            (y0, y1) = (y0 - 0.5, y1 + 0.5);
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            ml + pw / 2.0,
            escape(&self.title)
        );
        // axes and grid
        for t in nice_ticks(y0, y1, 6) {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                ml + pw,
                ml - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let x_ticks: Vec<(f64, String)> = match &self.x_ticks {
            Some(t) => t.clone(),
            None => nice_ticks(x0, x1, 10).into_iter().map(|t| (t, fmt_tick(t))).collect(),
        };
        for (t, label) in x_ticks {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                mt + ph,
                mt + ph + 5.0,
                mt + ph + 19.0,
                escape(&label)
            );
        }
        let _ = writeln!(
            s,
            r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            h - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            mt + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            match self.style {
                Style::Band if series.points.len() > 1 => {
                    let upper = series.points.iter().map(|&(x, m, e)| (sx(x), sy(m + e)));
                    let lower = series.points.iter().rev().map(|&(x, m, e)| (sx(x), sy(m - e)));
                    let pts: Vec<String> = upper
                        .chain(lower)
                        .map(|(x, y)| format!("{x:.2},{y:.2}"))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                        pts.join(" ")
                    );
                }
                _ => {
                    for &(x, m, e) in &series.points {
                        let _ = writeln!(
                            s,
                            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/><circle cx="{0:.2}" cy="{3:.2}" r="3" fill="{color}"/>"#,
                            sx(x),
                            sy(m - e),
                            sy(m + e),
                            sy(m)
                        );
                    }
                }
            }
            let line: Vec<String> = series
                .points
                .iter()
                .map(|&(x, m, _)| format!("{:.2},{:.2}", sx(x), sy(m)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                line.join(" ")
            );
            let ly = mt + 14.0 + 20.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{ly:.2}" x2="{1:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{2:.2}" y="{3:.2}">{4}</text>"#,
                ml + pw + 12.0,
                ml + pw + 36.0,
                ml + pw + 42.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    fn backing_csv(&self) -> String {
        let mut out = String::from("series,x,mean,se\n");
        for series in &self.series {
            for &(x, m, e) in &series.points {
                let _ = writeln!(out, "{},{x},{m},{e}", series.name);
            }
        }
        out
    }
}

fn fmt_tick(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 1e9 {
        format!("{}", t as i64)
    } else {
        format!("{t:.2}")
    }
}

/// Splits `name:param=value` experiment labels.
fn sweep_of(experiment: &str) -> Option<SweepPoint> {
    let (_, label) = experiment.split_once(':')?;
    let (param, value) = label.split_once('=')?;
    SweepPoint::parse(param.parse().ok()?, value).ok()
}

fn per_task_chart(title: &str, series: &[(String, &AggregateSeries)]) -> Chart {
    Chart {
        title: title.to_string(),
        x_label: "task".into(),
        y_label: "average return per task".into(),
        x_ticks: None,
        style: Style::Band,
        series: series
            .iter()
            .map(|(name, a)| ChartSeries {
                name: name.clone(),
                points: a
                    .tasks
                    .iter()
                    .zip(a.mean.iter().zip(&a.se))
                    .map(|(&t, (&m, &e))| ((t + 1) as f64, m, e))
                    .collect(),
            })
            .collect(),
    }
}

fn sweep_chart(mode: PlotMode, param: SweepParam, aggs: &[AggregateSeries]) -> Result<Chart> {
    // x positions are categorical, ordered by value with "all" last
    let mut by_agent: BTreeMap<String, Vec<(SweepPoint, f64, f64)>> = BTreeMap::new();
    for a in aggs {
        if let Some(p) = sweep_of(&a.experiment).filter(|p| p.param() == param) {
            by_agent
                .entry(a.agent.to_string())
                .or_default()
                .push((p, a.total_mean, a.total_se));
        }
    }
    if by_agent.is_empty() {
        return Err(Error::PlotShape {
            mode: mode.as_str().into(),
            reason: format!("no experiments labelled with `{}=`", param.as_str()),
        });
    }
    let order = |p: &SweepPoint| -> (u8, usize) {
        match *p {
            SweepPoint::Capacity(c) => (0, c),
            SweepPoint::Neighbours(k) => match k {
                crate::agents::Neighbours::Count(k) => (0, k),
                crate::agents::Neighbours::All => (1, 0),
            },
            SweepPoint::LearnW(b) => (0, b as usize),
        }
    };
    let mut values: Vec<SweepPoint> = by_agent.values().flatten().map(|v| v.0).collect();
    values.sort_by_key(order);
    values.dedup();
    let pos = |p: &SweepPoint| values.iter().position(|v| v == p).expect("collected above") as f64;
    let series = by_agent
        .into_iter()
        .map(|(name, mut pts)| {
            pts.sort_by_key(|p| order(&p.0));
            ChartSeries {
                name,
                points: pts.iter().map(|(p, m, e)| (pos(p), *m, *e)).collect(),
            }
        })
        .collect();
    Ok(Chart {
        title: format!("total return vs {}", param.as_str()),
        x_label: param.as_str().into(),
        y_label: "total return".into(),
        x_ticks: Some(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| (i as f64, v.value_string()))
                .collect(),
        ),
        style: Style::ErrorBars,
        series,
    })
}

/// Renders `<mode>.svg` and its backing `<mode>.csv` into `out_dir`.
pub fn render_plots(rows: &[EpisodeRow], mode: PlotMode, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let aggs = aggregate(&metrics_from_rows(rows))?;
    if aggs.is_empty() {
        return Err(Error::PlotShape {
            mode: mode.as_str().into(),
            reason: "no completed episodes".into(),
        });
    }
    let chart = match mode {
        PlotMode::PerTaskReturn => {
            let experiments: std::collections::BTreeSet<&str> =
                aggs.iter().map(|a| a.experiment.as_str()).collect();
            let named: Vec<(String, &AggregateSeries)> = aggs
                .iter()
                .map(|a| {
                    let name = if experiments.len() > 1 {
                        format!("{} [{}]", a.agent, a.experiment)
                    } else {
                        a.agent.to_string()
                    };
                    (name, a)
                })
                .collect();
            per_task_chart("average return per task", &named)
        }
        PlotMode::LearnW => {
            let named: Vec<(String, &AggregateSeries)> = aggs
                .iter()
                .filter_map(|a| match sweep_of(&a.experiment) {
                    Some(p @ SweepPoint::LearnW(_)) => Some((format!("{} {p}", a.agent), a)),
                    _ => None,
                })
                .collect();
            if named.is_empty() {
                return Err(Error::PlotShape {
                    mode: mode.as_str().into(),
                    reason: "no experiments labelled with `learn_w=`".into(),
                });
            }
            per_task_chart("average return per task, given vs learned w", &named)
        }
        PlotMode::CapacitySweep | PlotMode::NeighbourSweep => {
            sweep_chart(mode, mode.sweep_param().expect("sweep mode"), &aggs)?
        }
    };
    std::fs::create_dir_all(out_dir)?;
    let svg = out_dir.join(format!("{}.svg", mode.as_str()));
    let csv = out_dir.join(format!("{}.csv", mode.as_str()));
    std::fs::write(&svg, chart.render())?;
    std::fs::write(&csv, chart.backing_csv())?;
    Ok(vec![svg, csv])
}
