//! Minimal static SVG renderings of the plot CSVs. The CSVs are the
//! canonical output; these are for a quick look.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const W: f64 = 480.0;
const H: f64 = 360.0;
const M: f64 = 48.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Joined by a polyline instead of dots.
    pub line: bool,
    pub color: &'a str,
}

fn extent(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter/line chart with axes, tick labels at the extremes and a legend.
pub fn svg_scatter(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (x0, x1) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut s = header(title);
    let _ = writeln!(
        s,
        r#"<path d="M{M} {M} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = H - M,
        r = W - M
    );
    let _ = writeln!(s, r#"<text x="{M}" y="{}" text-anchor="middle">{x0:.3}</text>"#, H - M + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x1:.3}</text>"#, W - M, H - M + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#, M - 4.0, H - M);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#, M - 4.0, M + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        if ser.line {
            let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                pts.join(" "),
                ser.color
            );
        } else {
            for &(x, y) in &ser.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{}"/>"#, px(x), py(y), ser.color);
            }
        }
        let ly = M + 14.0 * k as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#, W - M - 90.0, ly - 9.0, ser.color);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, W - M - 76.0, escape(ser.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Grid of cells colored blue (negative) to red (positive), scaled by the
/// largest magnitude. Rows may differ in length.
pub fn svg_heatmap(title: &str, rows: &[(String, Vec<f64>)]) -> String {
    let max = rows
        .iter()
        .flat_map(|r| r.1.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    let cols = rows.iter().map(|r| r.1.len()).max().unwrap_or(1).max(1);
    let cw = (W - 2.0 * M) / cols as f64;
    let ch = ((H - 2.0 * M) / rows.len().max(1) as f64).min(24.0);
    let mut s = header(title);
    for (i, (label, vals)) in rows.iter().enumerate() {
        let y = M + i as f64 * ch;
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="9">{}</text>"#, M - 4.0, y + ch * 0.7, escape(label));
        for (j, &v) in vals.iter().enumerate() {
            let t = (v / max).clamp(-1.0, 1.0);
            let (r, g, b) = if t >= 0.0 {
                (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
            } else {
                (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({:.0},{:.0},{:.0})"/>"#,
                M + j as f64 * cw,
                y,
                cw,
                ch,
                r,
                g,
                b
            );
        }
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">|max| = {max:.4}</text>"#, W / 2.0, H - 12.0);
    s.push_str("</svg>\n");
    s
}

fn read_rows(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records().collect::<std::result::Result<_, _>>().map_err(Into::into)
}

fn num(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<f64> {
    rec.get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Config(format!("{}: column {i} is not numeric", path.display())))
}

/// Neurons per population drawn in the raster.
const RASTER_NEURONS: usize = 40;

/// Renders every recognized CSV in `dir` into `dir/plots/*.svg`; returns
/// the written paths in a stable order.
pub fn render_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().and_then(|e| e.file_name().into_string().ok()))
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let mut written = Vec::new();
    for name in names {
        let path = dir.join(&name);
        let stem = name.trim_end_matches(".csv");
        let svg = if let Some(tag) = stem.strip_prefix("epp_comparison_") {
            let rows = read_rows(&path)?;
            let pts = rows
                .iter()
                .map(|r| Ok((num(r, 1, &path)?, num(r, 2, &path)?)))
                .collect::<Result<Vec<_>>>()?;
            let diag = vec![(0.0, 0.0), (1.0, 1.0)];
            Some(svg_scatter(
                &format!("EPP comparison ({tag})"),
                "true EPP",
                "generated EPP",
                &[
                    Series { label: "samples", points: pts, line: false, color: "#1f77b4" },
                    Series { label: "identity", points: diag, line: true, color: "#999999" },
                ],
            ))
        } else if let Some(tag) = stem.strip_prefix("heatmap_") {
            let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
            for r in read_rows(&path)? {
                let label = format!("{}[{}]", r.get(0).unwrap_or("?"), r.get(1).unwrap_or("?"));
                let v = num(&r, 3, &path)?;
                match rows.last_mut() {
                    Some((l, vals)) if *l == label => vals.push(v),
                    _ => rows.push((label, vec![v])),
                }
            }
            Some(svg_heatmap(&format!("BEL weights ({tag})"), &rows))
        } else if stem == "loss_history" {
            let pts = read_rows(&path)?
                .iter()
                .map(|r| Ok((num(r, 0, &path)?, num(r, 1, &path)?)))
                .collect::<Result<Vec<_>>>()?;
            Some(svg_scatter(
                "Training loss",
                "epoch",
                "MSE",
                &[Series { label: "train MSE", points: pts, line: true, color: "#d62728" }],
            ))
        } else if stem == "spike_raster" {
            let colors = [("PYR", "#d62728"), ("PV", "#1f77b4"), ("SOM", "#2ca02c")];
            let mut series: Vec<Series<'_>> = colors
                .iter()
                .map(|&(label, color)| Series { label, points: Vec::new(), line: false, color })
                .collect();
            for r in read_rows(&path)? {
                let pop = r.get(0).unwrap_or("");
                let Some(k) = colors.iter().position(|c| c.0 == pop) else { continue };
                let idx = num(&r, 1, &path)?;
                if idx < RASTER_NEURONS as f64 {
                    series[k].points.push((num(&r, 2, &path)?, (k * RASTER_NEURONS) as f64 + idx));
                }
            }
            Some(svg_scatter("Spike raster", "time (ms)", "neuron", &series))
        } else {
            None
        };
        if let Some(svg) = svg {
            let out = plots.join(format!("{stem}.svg"));
            std::fs::write(&out, svg).map_err(|e| Error::io(&out, e))?;
            written.push(out);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_well_formed() {
        let s = svg_scatter(
            "t <1>",
            "x",
            "y",
            &[Series { label: "a", points: vec![(0.0, 0.0), (1.0, 2.0)], line: false, color: "red" }],
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("t &lt;1&gt;"));
    }

    #[test]
    fn heatmap_cell_count() {
        let s = svg_heatmap("h", &[("V".into(), vec![1.0, -1.0, 0.0]), ("U".into(), vec![0.5])]);
        assert_eq!(s.matches("<rect").count(), 1 + 4);
    }

    #[test]
    fn renders_known_csvs_only() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("epp_comparison_avf.csv"), "id,epp_true,epp_gen\np1,0.2,0.3\n").unwrap();
        std::fs::write(dir.path().join("loss_history.csv"), "epoch,mse\n10,0.5\n20,0.25\n").unwrap();
        std::fs::write(dir.path().join("ablation.csv"), "variant,Precision\nx,1\n").unwrap();
        let out = render_plots(dir.path()).unwrap();
        let names: Vec<_> = out.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert_eq!(names, vec!["epp_comparison_avf.svg", "loss_history.svg"]);
    }
}
