//! Plain SVG drawings of sampled curves in a chart that avoids them.

use mutkit_core::limit_set::Chart;
use mutkit_core::SpherePoint;

pub struct Layer<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub points: &'a [SpherePoint<f64>],
}

pub fn curves_svg(layers: &[Layer<'_>]) -> String {
    let all: Vec<[f64; 3]> = layers
        .iter()
        .flat_map(|l| l.points.iter().map(|p| p.to_unit_vector()))
        .collect();
    let chart = Chart::avoiding(&all);
    let planar: Vec<Vec<(f64, f64)>> = layers
        .iter()
        .map(|l| {
            l.points
                .iter()
                .filter_map(|p| chart.coords(p))
                .map(|z| (z.re, -z.im))
                .collect()
        })
        .collect();
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in planar.iter().flatten() {
        lo_x = lo_x.min(x);
        lo_y = lo_y.min(y);
        hi_x = hi_x.max(x);
        hi_y = hi_y.max(y);
    }
    let size = 800.0;
    let pad = 40.0;
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-12);
    let scale = (size - 2.0 * pad) / span;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, (layer, pts)) in layers.iter().zip(&planar).enumerate() {
        let coords: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.3},{:.3}", pad + (x - lo_x) * scale, pad + (y - lo_y) * scale))
            .collect();
        let dash = if layer.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash}/>\n",
            coords.join(" "),
            layer.color
        ));
        out.push_str(&format!(
            "<text x=\"10\" y=\"{}\" font-family=\"monospace\" font-size=\"14\" fill=\"{}\">{}</text>\n",
            20 + 18 * i,
            layer.color,
            layer.label
        ));
    }
    out.push_str("</svg>\n");
    out
}
