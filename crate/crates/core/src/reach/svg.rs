//! Minimal deterministic SVG plots: the same inputs give the same bytes.

use std::fmt::Write;

use super::Polyline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Circle,
    Cross,
}

#[derive(Debug, Clone, PartialEq)]
enum Layer {
    Lines {
        lines: Vec<Polyline>,
        stroke: String,
        dashed: bool,
    },
    Rect {
        lower: [f64; 2],
        upper: [f64; 2],
        stroke: String,
    },
    Path {
        points: Vec<[f64; 2]>,
        stroke: String,
    },
    Markers {
        points: Vec<[f64; 2]>,
        marker: Marker,
        stroke: String,
    },
    Legend {
        label: String,
        stroke: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgPlot {
    pub width: f64,
    pub height: f64,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    layers: Vec<Layer>,
}

const MARGIN: f64 = 50.0;

impl SvgPlot {
    pub fn new(x_range: [f64; 2], y_range: [f64; 2]) -> Self {
        Self {
            width: 480.0,
            height: 480.0,
            x_range,
            y_range,
            title: String::new(),
            x_label: "x".into(),
            y_label: "y".into(),
            layers: Vec::new(),
        }
    }

    pub fn labels(mut self, title: &str, x: &str, y: &str) -> Self {
        self.title = title.into();
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }

    pub fn contours(&mut self, lines: Vec<Polyline>, stroke: &str, dashed: bool) {
        self.layers.push(Layer::Lines {
            lines,
            stroke: stroke.into(),
            dashed,
        });
    }

    pub fn rect(&mut self, lower: [f64; 2], upper: [f64; 2], stroke: &str) {
        self.layers.push(Layer::Rect {
            lower,
            upper,
            stroke: stroke.into(),
        });
    }

    pub fn path(&mut self, points: Vec<[f64; 2]>, stroke: &str) {
        self.layers.push(Layer::Path {
            points,
            stroke: stroke.into(),
        });
    }

    pub fn markers(&mut self, points: Vec<[f64; 2]>, marker: Marker, stroke: &str) {
        self.layers.push(Layer::Markers {
            points,
            marker,
            stroke: stroke.into(),
        });
    }

    pub fn legend(&mut self, label: &str, stroke: &str) {
        self.layers.push(Layer::Legend {
            label: label.into(),
            stroke: stroke.into(),
        });
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let w = self.width - 2.0 * MARGIN;
        let h = self.height - 2.0 * MARGIN;
        let sx = (p[0] - self.x_range[0]) / (self.x_range[1] - self.x_range[0]);
        let sy = (p[1] - self.y_range[0]) / (self.y_range[1] - self.y_range[0]);
        (MARGIN + sx * w, self.height - MARGIN - sy * h)
    }

    fn points_attr(&self, pts: &[[f64; 2]]) -> String {
        let mut s = String::new();
        for (k, &p) in pts.iter().enumerate() {
            let (x, y) = self.px(p);
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.2},{y:.2}");
        }
        s
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let (w, h) = (self.width, self.height);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let (x0, y0) = self.px([self.x_range[0], self.y_range[0]]);
        let (x1, y1) = self.px([self.x_range[1], self.y_range[1]]);
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for (k, v) in [self.x_range[0], self.x_range[1]].iter().enumerate() {
            let x = if k == 0 { x0 } else { x1 };
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{v}</text>"#,
                y0 + 15.0
            );
        }
        for (k, v) in [self.y_range[0], self.y_range[1]].iter().enumerate() {
            let y = if k == 0 { y0 } else { y1 };
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{v}</text>"#,
                x0 - 5.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            w / 2.0,
            h - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        );
        if !self.title.is_empty() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
                w / 2.0,
                escape(&self.title)
            );
        }

        let mut legend_row = 0;
        for layer in &self.layers {
            match layer {
                Layer::Lines {
                    lines,
                    stroke,
                    dashed,
                } => {
                    let dash = if *dashed {
                        r#" stroke-dasharray="5,3""#
                    } else {
                        ""
                    };
                    for l in lines {
                        let tag = if l.closed { "polygon" } else { "polyline" };
                        let _ = writeln!(
                            out,
                            r#"<{tag} points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"{dash}/>"#,
                            self.points_attr(&l.points)
                        );
                    }
                }
                Layer::Rect {
                    lower,
                    upper,
                    stroke,
                } => {
                    let (ax, ay) = self.px(*lower);
                    let (bx, by) = self.px(*upper);
                    let _ = writeln!(
                        out,
                        r#"<rect x="{ax:.2}" y="{by:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
                        bx - ax,
                        ay - by
                    );
                }
                Layer::Path { points, stroke } => {
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="0.8" opacity="0.7"/>"#,
                        self.points_attr(points)
                    );
                }
                Layer::Markers {
                    points,
                    marker,
                    stroke,
                } => {
                    for &p in points {
                        let (x, y) = self.px(p);
                        match marker {
                            Marker::Circle => {
                                let _ = writeln!(
                                    out,
                                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="none" stroke="{stroke}"/>"#
                                );
                            }
                            Marker::Cross => {
                                let _ = writeln!(
                                    out,
                                    r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{stroke}"/>"#,
                                    x - 4.0,
                                    y - 4.0,
                                    x + 4.0,
                                    y + 4.0,
                                    x - 4.0,
                                    y + 4.0,
                                    x + 4.0,
                                    y - 4.0
                                );
                            }
                        }
                    }
                }
                Layer::Legend { label, stroke } => {
                    let y = MARGIN + 14.0 * legend_row as f64;
                    let x = w - MARGIN - 120.0;
                    let _ = writeln!(
                        out,
                        r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{stroke}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                        x + 16.0,
                        x + 20.0,
                        y + 4.0,
                        escape(label)
                    );
                    legend_row += 1;
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_deterministic() {
        let build = || {
            let mut p = SvgPlot::new([0.0, 1.0], [0.0, 1.0]).labels("t", "z", "y");
            p.rect([0.4, 0.4], [0.6, 0.6], "green");
            p.markers(vec![[0.1, 0.2]], Marker::Cross, "red");
            p.contours(
                vec![Polyline {
                    points: vec![[0.0, 0.0], [1.0, 1.0]],
                    closed: false,
                }],
                "blue",
                true,
            );
            p.render()
        };
        let a = build();
        assert_eq!(a, build());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("stroke-dasharray"));
    }
}
