//! SVG figures rendered from a results CSV.
//!
//! Output is plain SVG 1.1 with fixed number formatting, so regenerating a
//! figure from the same CSV reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::sweep::{read_rows, ResultRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
const LOG_FLOOR: f64 = 1e-30;

/// Total order on axis values with `inf` last.
#[derive(Debug, Clone, Copy)]
struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn axis_label(x: f64) -> String {
    if x == f64::INFINITY {
        "\u{221e}".into()
    } else if x == f64::NEG_INFINITY {
        "-\u{221e}".into()
    } else {
        format!("{}", (x * 1e6).round() / 1e6)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Debug, Clone)]
struct Series {
    label: String,
    points: Vec<(usize, f64)>,
}

/// Categorical x positions with a linear or log10 y scale.
struct Figure {
    title: String,
    x_name: String,
    y_name: String,
    x_labels: Vec<String>,
    log_y: bool,
    series: Vec<Series>,
}

impl Figure {
    fn y_range(&self) -> (f64, f64) {
        let ys = self.series.iter().flat_map(|s| s.points.iter().map(|p| self.y_value(p.1)));
        let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        if self.log_y {
            (lo.floor(), hi.ceil().max(lo.floor() + 1.0))
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    }

    fn y_value(&self, y: f64) -> f64 {
        if self.log_y {
            y.max(LOG_FLOOR).log10()
        } else {
            y
        }
    }

    fn render(&self) -> String {
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let n = self.x_labels.len().max(1);
        let px = |i: usize| LEFT + plot_w * (i as f64 + 0.5) / n as f64;
        let (y0, y1) = self.y_range();
        let py = |y: f64| TOP + plot_h * (1.0 - (self.y_value(y) - y0) / (y1 - y0));
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect class="frame" x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
        );
        for (i, label) in self.x_labels.iter().enumerate() {
            let x = px(i);
            let _ =
                writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + plot_h, TOP + plot_h + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + plot_h + 20.0, escape(label));
        }
        let ticks = if self.log_y { (y1 - y0) as usize } else { 5 };
        let step = if self.log_y && ticks > 8 { ticks.div_ceil(8) } else { 1 };
        for t in (0..=ticks).step_by(step) {
            let v = y0 + (y1 - y0) * t as f64 / ticks as f64;
            let y = TOP + plot_h * (1.0 - t as f64 / ticks as f64);
            let label = if self.log_y { format!("1e{}", v.round() as i64) } else { format!("{v:.3}") };
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0);
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_name)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_name)
        );
        for (j, series) in self.series.iter().enumerate() {
            let color = COLORS[j % COLORS.len()];
            let coords: Vec<String> = series.points.iter().map(|&(i, y)| format!("{:.2},{:.2}", px(i), py(y))).collect();
            let _ = writeln!(s, r#"<g class="series" stroke="{color}" fill="{color}">"#);
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke-width="2"/>"#, coords.join(" "));
            for &(i, y) in &series.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5"/>"#, px(i), py(y));
            }
            let ly = TOP + 10.0 + 18.0 * j as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke-width="2"/>"#, lx + 20.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" stroke="none" fill="black">{}</text>"#,
                lx + 26.0,
                ly + 4.0,
                escape(&series.label)
            );
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }
}

const AXES: [&str; 5] = ["esn0_db", "tau_max", "phi_max", "amp_sigma", "k_active"];

fn axis_value(row: &ResultRow, axis: &str) -> f64 {
    match axis {
        "esn0_db" => row.esn0_db,
        "tau_max" => row.tau_max,
        "phi_max" => row.phi_max,
        "amp_sigma" => row.amp_sigma.unwrap_or(0.0),
        _ => row.k_active as f64,
    }
}

/// The first column that takes more than one value, `esn0_db` otherwise.
fn swept_axis(rows: &[ResultRow]) -> &'static str {
    AXES.into_iter()
        .find(|a| {
            let first = axis_value(&rows[0], a);
            rows.iter().any(|r| axis_value(r, a).total_cmp(&first).is_ne())
        })
        .unwrap_or("esn0_db")
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-estimator means of `value` at each x category, in first-seen estimator order.
fn by_category(
    rows: &[&ResultRow],
    xs: &BTreeMap<Key, usize>,
    x_of: impl Fn(&ResultRow) -> f64,
    value: impl Fn(&ResultRow) -> Option<f64>,
) -> Vec<Series> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for row in rows {
        if !order.contains(&row.estimator) {
            order.push(row.estimator.clone());
        }
        if let Some(v) = value(row).filter(|v| v.is_finite()) {
            acc.entry((row.estimator.clone(), xs[&Key(x_of(row))])).or_default().push(v);
        }
    }
    order
        .into_iter()
        .map(|est| Series { points: (0..xs.len()).filter_map(|i| acc.get(&(est.clone(), i)).map(|v| (i, mean(v)))).collect(), label: est })
        .collect()
}

fn categories(values: impl Iterator<Item = f64>) -> BTreeMap<Key, usize> {
    let mut keys: Vec<Key> = values.map(Key).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
}

fn write(dir: &Path, name: &str, figure: &Figure, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, figure.render()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    written.push(path);
    Ok(())
}

/// Renders every figure the rows support into `out_dir`:
/// symbol MSE against the swept axis (log scale) for slot results, and
/// final accuracy against the axis plus accuracy against round for
/// learning results.
pub fn emit_plots(rows: &[ResultRow], source: &str, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if rows.is_empty() {
        return Err(CliError::EmptyCsv(source.to_string()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let axis = swept_axis(rows);
    let x_of = |r: &ResultRow| axis_value(r, axis);
    let xs = categories(rows.iter().map(x_of));
    let x_labels: Vec<String> = xs.keys().map(|k| axis_label(k.0)).collect();
    let mut written = Vec::new();
    let slot: Vec<&ResultRow> = rows.iter().filter(|r| r.round.is_none()).collect();
    if !slot.is_empty() {
        let figure = Figure {
            title: format!("Symbol MSE vs {axis}"),
            x_name: axis.into(),
            y_name: "symbol MSE".into(),
            x_labels: x_labels.clone(),
            log_y: true,
            series: by_category(&slot, &xs, x_of, |r| r.symbol_mse),
        };
        write(out_dir, &format!("mse_vs_{axis}.svg"), &figure, &mut written)?;
    }
    let feel: Vec<&ResultRow> = rows.iter().filter(|r| r.round.is_some()).collect();
    if !feel.is_empty() {
        let mut last: BTreeMap<(&str, &str), &ResultRow> = BTreeMap::new();
        for r in &feel {
            let e = last.entry((r.run_id.as_str(), r.estimator.as_str())).or_insert(r);
            if r.round > e.round {
                *e = r;
            }
        }
        let mut finals: Vec<&ResultRow> = last.into_values().collect();
        finals.sort_by_key(|r| feel.iter().position(|f| std::ptr::eq(*f, *r)));
        let figure = Figure {
            title: format!("Final test accuracy vs {axis}"),
            x_name: axis.into(),
            y_name: "test accuracy".into(),
            x_labels,
            log_y: false,
            series: by_category(&finals, &xs, x_of, |r| r.test_accuracy),
        };
        write(out_dir, &format!("accuracy_vs_{axis}.svg"), &figure, &mut written)?;

        let rounds = categories(feel.iter().map(|r| r.round.unwrap_or(0) as f64));
        let mut series = Vec::new();
        for k in xs.keys() {
            let at: Vec<&ResultRow> = feel.iter().copied().filter(|r| x_of(r).total_cmp(&k.0).is_eq()).collect();
            for mut s in by_category(&at, &rounds, |r| r.round.unwrap_or(0) as f64, |r| r.test_accuracy) {
                if xs.len() > 1 {
                    s.label = format!("{} {axis}={}", s.label, axis_label(k.0));
                }
                series.push(s);
            }
        }
        let figure = Figure {
            title: "Test accuracy vs round".into(),
            x_name: "round".into(),
            y_name: "test accuracy".into(),
            x_labels: rounds.keys().map(|k| axis_label(k.0)).collect(),
            log_y: false,
            series,
        };
        write(out_dir, "accuracy_vs_round.svg", &figure, &mut written)?;
    }
    Ok(written)
}

/// Reads a results CSV and renders its figures next to `out_dir`.
pub fn plot_csv(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = read_rows(csv_path)?;
    emit_plots(&rows, &csv_path.display().to_string(), out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_axis_label() {
        assert_eq!(axis_label(f64::INFINITY), "\u{221e}");
        assert_eq!(axis_label(-12.0), "-12");
        assert_eq!(axis_label(0.5), "0.5");
    }

    #[test]
    fn infinity_sorts_last() {
        let c = categories([f64::INFINITY, -20.0, -12.0, -20.0].into_iter());
        assert_eq!(c.keys().map(|k| k.0).collect::<Vec<_>>(), vec![-20.0, -12.0, f64::INFINITY]);
    }
}
