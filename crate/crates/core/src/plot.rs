//! Minimal SVG output for persistence diagrams and 2-D/3-D scatter plots.

use std::fmt::Write as _;

use crate::cloud::PointCloud;
use crate::persistence::PersistenceDiagram;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const NOISE_COLOR: &str = "#bbbbbb";

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
            if hi > lo {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        }
        Frame {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn open(svg: &mut String, title: &str, frame: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/><line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/></g>"#
    );
    for (v, anchor, x, y) in [
        (frame.x.0, "start", x0, y0 + 16.0),
        (frame.x.1, "end", x1, y0 + 16.0),
    ] {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{v:.3}</text>"#
        );
    }
    for (v, y) in [(frame.y.0, y0), (frame.y.1, y1)] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.3}</text>"#,
            x0 - 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn marker(svg: &mut String, dim: usize, x: f64, y: f64, color: &str) {
    let _ = match dim {
        0 => writeln!(
            svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
        ),
        1 => writeln!(
            svg,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
            x,
            y - 4.0,
            x - 3.5,
            y + 2.5,
            x + 3.5,
            y + 2.5
        ),
        _ => writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="{color}"/>"#,
            x - 3.0,
            y - 3.0
        ),
    };
}

/// Birth against death, one marker shape per homology dimension. Essential
/// classes sit on a dashed line above the largest finite death.
pub fn diagram_svg(diagram: &PersistenceDiagram, title: &str) -> String {
    let finite_max = diagram
        .pairs
        .iter()
        .flat_map(|p| [p.birth, if p.is_essential() { p.birth } else { p.death }])
        .fold(0.0f64, f64::max);
    let top = if finite_max > 0.0 {
        finite_max * 1.1
    } else {
        1.0
    };
    let frame = Frame::new((0.0, top), (0.0, top));
    let mut svg = String::new();
    open(&mut svg, title, &frame, "birth", "death");
    let (a, b) = (frame.px(0.0), frame.py(0.0));
    let (c, d) = (frame.px(top), frame.py(top));
    let _ = writeln!(
        svg,
        r##"<line class="diagonal" x1="{a:.2}" y1="{b:.2}" x2="{c:.2}" y2="{d:.2}" stroke="#888888"/>"##
    );
    let inf_y = frame.py(top);
    let _ = writeln!(
        svg,
        r##"<line class="infinity" x1="{a:.2}" y1="{inf_y:.2}" x2="{c:.2}" y2="{inf_y:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##
    );
    let _ = writeln!(svg, r#"<g class="points">"#);
    for p in diagram.pairs.iter().filter(|p| !p.is_zero_persistence()) {
        let y = if p.is_essential() {
            inf_y
        } else {
            frame.py(p.death)
        };
        marker(
            &mut svg,
            p.dim,
            frame.px(p.birth),
            y,
            PALETTE[p.dim % PALETTE.len()],
        );
    }
    let _ = writeln!(svg, "</g>");
    for dim in 0..=diagram.max_dim {
        let y = MARGIN + 14.0 * dim as f64;
        marker(
            &mut svg,
            dim,
            WIDTH - MARGIN - 40.0,
            y,
            PALETTE[dim % PALETTE.len()],
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">H{dim}</text>"#,
            WIDTH - MARGIN - 30.0,
            y + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Scatter of the first two coordinates; a third coordinate, when present,
/// sets the marker radius. `groups` colors points by cluster (`-1` = noise).
pub fn scatter_svg(cloud: &PointCloud, groups: Option<&[i64]>, title: &str) -> String {
    let range = |k: usize| -> (f64, f64) {
        if cloud.dim() <= k || cloud.is_empty() {
            return (0.0, 0.0);
        }
        cloud
            .points()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[k]), hi.max(p[k]))
            })
    };
    let frame = Frame::new(range(0), range(1));
    let (z_lo, z_hi) = range(2);
    let mut svg = String::new();
    open(&mut svg, title, &frame, "component 1", "component 2");
    let _ = writeln!(svg, r#"<g class="points" fill-opacity="0.7">"#);
    for (i, p) in cloud.points().enumerate() {
        let x = frame.px(p.first().copied().unwrap_or(0.0));
        let y = frame.py(p.get(1).copied().unwrap_or(0.0));
        let r = match p.get(2) {
            Some(&z) if z_hi > z_lo => 1.0 + 3.0 * (z - z_lo) / (z_hi - z_lo),
            _ => 2.0,
        };
        let color = match groups.and_then(|g| g.get(i)) {
            Some(&g) if g < 0 => NOISE_COLOR,
            Some(&g) => PALETTE[g as usize % PALETTE.len()],
            None => PALETTE[0],
        };
        let _ = writeln!(
            svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{color}"/>"#
        );
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::PersistencePair;

    #[test]
    fn diagram_has_one_marker_per_visible_pair() {
        let diagram = PersistenceDiagram {
            pairs: vec![
                PersistencePair {
                    dim: 0,
                    birth: 0.0,
                    death: f64::INFINITY,
                },
                PersistencePair {
                    dim: 0,
                    birth: 0.0,
                    death: 1.0,
                },
                PersistencePair {
                    dim: 1,
                    birth: 1.0,
                    death: 1.0,
                },
                PersistencePair {
                    dim: 1,
                    birth: 1.2,
                    death: 2.0,
                },
            ],
            max_dim: 1,
            threshold: f64::INFINITY,
        };
        let svg = diagram_svg(&diagram, "a < b");
        let body = &svg[svg.find(r#"<g class="points">"#).unwrap()..];
        let body = &body[..body.find("</g>").unwrap()];
        assert_eq!(body.matches("<circle").count(), 2);
        assert_eq!(body.matches("<polygon").count(), 1);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains(r#"class="diagonal""#));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn scatter_sizes_follow_third_coordinate() {
        let cloud = PointCloud::from_rows(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
        let svg = scatter_svg(&cloud, Some(&[0, -1]), "s");
        assert!(svg.contains(r#"r="1.00""#));
        assert!(svg.contains(r#"r="4.00""#));
        assert!(svg.contains(NOISE_COLOR));
    }

    #[test]
    fn empty_inputs_still_render() {
        let svg = scatter_svg(&PointCloud::empty(2), None, "");
        assert!(svg.starts_with("<svg"));
        let d = PersistenceDiagram {
            pairs: vec![],
            max_dim: 1,
            threshold: 1.0,
        };
        assert!(diagram_svg(&d, "").contains("</svg>"));
    }
}
