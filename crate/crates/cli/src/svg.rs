//! Static SVG summaries. Every number drawn as text is the exact string
//! written to the corresponding CSV cell.

use std::fmt::Write;

use disperse::harness::CSV_COLUMNS;

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn cell<'a>(cells: &'a [String], column: &str) -> &'a str {
    let i = CSV_COLUMNS.iter().position(|c| *c == column).expect("known column");
    &cells[i]
}

struct Canvas {
    body: String,
    height: f64,
}

impl Canvas {
    fn new() -> Self {
        Canvas { body: String::new(), height: 0.0 }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            escape(s)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="{fill}"/>"#);
    }

    /// Bar chart with one labelled bar per `(name, label)`; `label` parses
    /// to the bar height, empty labels draw no bar.
    fn bars(&mut self, title: &str, bars: &[(String, String)], fill: &str) {
        let top = self.height + 30.0;
        self.text(MARGIN, top - 10.0, "start", 14, title);
        let values: Vec<f64> = bars.iter().map(|(_, l)| l.parse::<f64>().unwrap_or(0.0)).collect();
        let max = values.iter().copied().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        let plot_h = PANEL_H - 60.0;
        let slot = (WIDTH - 2.0 * MARGIN) / bars.len().max(1) as f64;
        let base = top + plot_h;
        for (i, ((name, label), v)) in bars.iter().zip(&values).enumerate() {
            let x = MARGIN + i as f64 * slot;
            let h = plot_h * v / max;
            if !label.is_empty() {
                self.rect(x + slot * 0.15, base - h, slot * 0.7, h, fill);
                self.text(x + slot / 2.0, base - h - 4.0, "middle", 11, label);
            }
            self.text(x + slot / 2.0, base + 14.0, "middle", 11, name);
        }
        self.height += PANEL_H;
    }

    fn finish(self, title: &str, config_toml: &str) -> String {
        let height = self.height + 40.0;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
             viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\">\n\
             <metadata><![CDATA[\n{config_toml}]]></metadata>\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{MARGIN}\" y=\"24\" font-size=\"16\">{}</text>\n\
             <g transform=\"translate(0,20)\">\n{}</g>\n</svg>\n",
            escape(title),
            self.body
        )
    }
}

fn quantile_bars(cells: &[String], prefix: &str) -> Vec<(String, String)> {
    ["min", "p25", "p50", "p75", "p95", "max"]
        .iter()
        .map(|q| (q.to_string(), cell(cells, &format!("{prefix}_{q}")).to_string()))
        .collect()
}

/// Summary of one batch: `d_disp` histogram, quantile charts, fraction.
pub fn run_summary(title: &str, cells: &[String], d_disp: &[u64], config_toml: &str) -> String {
    let mut c = Canvas::new();
    let mut hist: std::collections::BTreeMap<u64, u64> = std::collections::BTreeMap::new();
    for &d in d_disp {
        *hist.entry(d).or_default() += 1;
    }
    let hist_bars: Vec<(String, String)> = hist.iter().map(|(d, n)| (d.to_string(), n.to_string())).collect();
    c.bars("d_disp histogram (dispersed runs)", &hist_bars, "#4c78a8");
    c.bars("t_disp quantiles", &quantile_bars(cells, "t_disp"), "#f58518");
    c.bars("d_disp quantiles", &quantile_bars(cells, "d_disp"), "#54a24b");
    let line = format!(
        "dispersal_fraction {} [{}, {}], boundary_hits {}",
        cell(cells, "dispersal_fraction"),
        cell(cells, "ci_lo"),
        cell(cells, "ci_hi"),
        cell(cells, "boundary_hits")
    );
    c.text(MARGIN, c.height + 20.0, "start", 12, &line);
    c.height += 30.0;
    c.finish(title, config_toml)
}

/// Summary of a scan: per grid value, fraction dispersed and median time.
pub fn scan_summary(title: &str, rows: &[Vec<String>], config_toml: &str) -> String {
    let mut c = Canvas::new();
    let frac: Vec<(String, String)> = rows
        .iter()
        .map(|r| (cell(r, "value").to_string(), cell(r, "dispersal_fraction").to_string()))
        .collect();
    c.bars("dispersal_fraction by grid value", &frac, "#4c78a8");
    let t50: Vec<(String, String)> = rows
        .iter()
        .map(|r| (cell(r, "value").to_string(), cell(r, "t_disp_p50").to_string()))
        .collect();
    c.bars("t_disp_p50 by grid value", &t50, "#f58518");
    let d50: Vec<(String, String)> = rows
        .iter()
        .map(|r| (cell(r, "value").to_string(), cell(r, "d_disp_p50").to_string()))
        .collect();
    c.bars("d_disp_p50 by grid value", &d50, "#54a24b");
    c.finish(title, config_toml)
}
