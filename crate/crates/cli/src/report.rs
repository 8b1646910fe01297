//! CSV and SVG emission for the statistics the library computes.

use std::io::Write;

use topics_lab::epoch::{StabilityRow, UniquenessRow};

/// `from_week,to_week,common_topics,count,proportion` in long format.
pub fn write_stability_csv(w: impl Write, rows: &[StabilityRow]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["from_week", "to_week", "common_topics", "count", "proportion"])?;
    for row in rows {
        let proportions = row.proportions();
        for (common, (&count, proportion)) in row.counts.iter().zip(&proportions).enumerate() {
            writer.write_record([
                row.from_week.to_string(),
                row.to_week.to_string(),
                common.to_string(),
                count.to_string(),
                format!("{proportion:.6}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// `week,users,distinct_topics,unique_profiles`.
pub fn write_uniqueness_csv(w: impl Write, rows: &[UniquenessRow]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["week", "users", "distinct_topics", "unique_profiles"])?;
    for row in rows {
        writer.write_record([
            row.week.to_string(),
            row.users.to_string(),
            row.distinct_topics.to_string(),
            row.unique_profiles.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `domain_count,cum_fraction`.
pub fn write_ecdf_csv(w: impl Write, points: &[(u32, f64)]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["domain_count", "cum_fraction"])?;
    for (count, fraction) in points {
        writer.write_record([count.to_string(), format!("{fraction:.6}")])?;
    }
    writer.flush()?;
    Ok(())
}

const PLOT_WIDTH: f64 = 640.0;
const PLOT_HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// Self-contained SVG step plot: one polyline per named series. Purely
/// textual and deterministic.
pub fn step_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|(x, _)| *x))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|(_, y)| *y))
        .collect();
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);

    let inner_w = PLOT_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let inner_h = PLOT_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min).max(f64::MIN_POSITIVE) * inner_w;
    let sy = |y: f64| MARGIN_TOP + inner_h - (y - y_min) / (y_max - y_min).max(f64::MIN_POSITIVE) * inner_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_WIDTH}\" height=\"{PLOT_HEIGHT}\" \
         viewBox=\"0 0 {PLOT_WIDTH} {PLOT_HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        PLOT_WIDTH / 2.0,
        escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        MARGIN_TOP + inner_h,
        MARGIN_LEFT + inner_w,
        MARGIN_TOP + inner_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{MARGIN_TOP:.1}\" x2=\"{MARGIN_LEFT:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        MARGIN_TOP + inner_h
    ));
    // axis labels and extreme ticks
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + inner_w / 2.0,
        PLOT_HEIGHT - 12.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        MARGIN_TOP + inner_h / 2.0,
        MARGIN_TOP + inner_h / 2.0,
        escape(y_label)
    ));
    for (value, x) in [(x_min, MARGIN_LEFT), (x_max, MARGIN_LEFT + inner_w)] {
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{value:.4}</text>\n",
            MARGIN_TOP + inner_h + 18.0
        ));
    }
    for (value, y) in [(y_min, MARGIN_TOP + inner_h), (y_max, MARGIN_TOP)] {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{value:.4}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 4.0
        ));
    }

    for (index, (name, points)) in series.iter().enumerate() {
        if points.is_empty() {
            continue;
        }
        let color = SERIES_COLORS[index % SERIES_COLORS.len()];
        let mut path = String::new();
        let mut previous_y = None;
        for (i, (x, y)) in points.iter().enumerate() {
            let (px, py) = (sx(*x), sy(*y));
            if i == 0 {
                path.push_str(&format!("{px:.2},{py:.2}"));
            } else {
                // horizontal then vertical: a right-continuous step
                path.push_str(&format!(" {px:.2},{:.2} {px:.2},{py:.2}", previous_y.unwrap()));
            }
            previous_y = Some(py);
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{path}\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>\n",
            MARGIN_LEFT + inner_w - 110.0,
            MARGIN_TOP + 16.0 * (index as f64 + 1.0),
            escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min.is_finite() && max.is_finite() {
        if (max - min).abs() < f64::MIN_POSITIVE {
            (min, min + 1.0)
        } else {
            (min, max)
        }
    } else {
        (0.0, 1.0)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
