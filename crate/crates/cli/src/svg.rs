//! Minimal hand-rolled SVG bar charts. Output bytes are a pure function of
//! the inputs.

const PALETTE: [&str; 8] = [
    "#4472c4", "#ed7d31", "#70ad47", "#9e4fa8", "#c00000", "#2aa198", "#b58900", "#555555",
];

pub struct BarSeries {
    pub name: String,
    values: Vec<Option<f64>>,
}

impl BarSeries {
    pub fn new(name: String) -> Self {
        BarSeries {
            name,
            values: Vec::new(),
        }
    }

    pub fn set(&mut self, category_index: usize, value: f64) {
        if self.values.len() <= category_index {
            self.values.resize(category_index + 1, None);
        }
        self.values[category_index] = Some(value);
    }

    fn get(&self, category_index: usize) -> Option<f64> {
        self.values.get(category_index).copied().flatten()
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Grouped bars over a [-1, 1] axis with a zero baseline; one group per
/// category, one bar per series.
pub fn grouped_bar_chart(title: &str, categories: &[String], series: &[BarSeries]) -> String {
    let margin_left = 50.0;
    let margin_right = 20.0;
    let margin_top = 40.0;
    let margin_bottom = 40.0;
    let bar_w = 18.0;
    let bar_gap = 4.0;
    let group_gap = 24.0;
    let plot_h = 260.0;
    let legend_h = 18.0 * series.len() as f64;

    let group_w = series.len() as f64 * (bar_w + bar_gap) + group_gap;
    let plot_w = categories.len() as f64 * group_w;
    let width = margin_left + plot_w + margin_right;
    let height = margin_top + plot_h + margin_bottom + legend_h;

    // y in [-1, 1] mapped onto the plot band.
    let y_of = |v: f64| margin_top + (1.0 - v.clamp(-1.0, 1.0)) / 2.0 * plot_h;
    let zero_y = y_of(0.0);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    ));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        fmt(width / 2.0),
        xml_escape(title)
    ));

    // Axis ticks at -1, -0.5, 0, 0.5, 1.
    for tick in [-1.0f64, -0.5, 0.0, 0.5, 1.0] {
        let y = y_of(tick);
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(margin_left),
            fmt(y),
            fmt(margin_left + plot_w),
            fmt(y)
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            fmt(margin_left - 6.0),
            fmt(y + 4.0),
            fmt(tick)
        ));
    }
    out.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>\n",
        fmt(margin_left),
        fmt(zero_y),
        fmt(margin_left + plot_w),
        fmt(zero_y)
    ));

    for (ci, category) in categories.iter().enumerate() {
        let group_x = margin_left + ci as f64 * group_w + group_gap / 2.0;
        for (si, s) in series.iter().enumerate() {
            let Some(v) = s.get(ci) else { continue };
            let x = group_x + si as f64 * (bar_w + bar_gap);
            let y_val = y_of(v);
            let (y, h) = if v >= 0.0 {
                (y_val, zero_y - y_val)
            } else {
                (zero_y, y_val - zero_y)
            };
            out.push_str(&format!(
                "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\">\
                 <title>{}: {}</title></rect>\n",
                fmt(x),
                fmt(y),
                fmt(bar_w),
                fmt(h.max(0.5)),
                PALETTE[si % PALETTE.len()],
                xml_escape(&s.name),
                v
            ));
        }
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt(group_x + (series.len() as f64 * (bar_w + bar_gap)) / 2.0),
            fmt(margin_top + plot_h + 18.0),
            xml_escape(category)
        ));
    }

    for (si, s) in series.iter().enumerate() {
        let y = margin_top + plot_h + margin_bottom + si as f64 * 18.0;
        out.push_str(&format!(
            "  <rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            fmt(margin_left),
            fmt(y - 10.0),
            PALETTE[si % PALETTE.len()]
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\">{}</text>\n",
            fmt(margin_left + 18.0),
            fmt(y),
            xml_escape(&s.name)
        ));
    }

    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
