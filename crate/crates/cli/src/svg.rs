//! Static SVG plots with fixed number formatting.

use std::fmt::Write;

use arithclass_core::io::schema_line;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn header(out: &mut String, kind: &str, title: &str) {
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    )
    .unwrap();
    writeln!(out, "<!-- {} -->", schema_line(kind).trim_start_matches("# ")).unwrap();
    writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        escape(title)
    )
    .unwrap();
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot of `(log10 r, density_lb)`.
pub fn density_plot(points: &[(f64, f64)], title: &str) -> String {
    let mut out = String::new();
    header(&mut out, "density-svg", title);
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, &x| (a.0.min(x), a.1.max(x)));
    let (xmin, xmax) = if xmax > xmin { (xmin, xmax) } else { (xmin - 1.0, xmax + 1.0) };
    let px = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - y.clamp(0.0, 1.0) * (H - 2.0 * MARGIN);
    writeln!(
        out,
        "<path d=\"M{:.2} {:.2} H{:.2} M{:.2} {:.2} V{:.2}\" stroke=\"black\" fill=\"none\"/>",
        MARGIN,
        H - MARGIN,
        W - MARGIN,
        MARGIN,
        H - MARGIN,
        MARGIN
    )
    .unwrap();
    for (label, y) in [("0", 0.0), ("0.5", 0.5), ("1", 1.0)] {
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{label}</text>",
            MARGIN - 6.0,
            py(y) + 4.0
        )
        .unwrap();
    }
    for x in &xs {
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e{:.0}</text>",
            px(*x),
            H - MARGIN + 16.0,
            x
        )
        .unwrap();
    }
    let path: Vec<String> = xs
        .iter()
        .zip(points)
        .map(|(x, p)| format!("{:.2},{:.2}", px(*x), py(p.1)))
        .collect();
    writeln!(
        out,
        "<polyline points=\"{}\" stroke=\"#1f5fa8\" stroke-width=\"2\" fill=\"none\"/>",
        path.join(" ")
    )
    .unwrap();
    for (x, p) in xs.iter().zip(points) {
        writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f5fa8\"/>",
            px(*x),
            py(p.1)
        )
        .unwrap();
    }
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">radius r</text>",
        W / 2.0,
        H - 12.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// A band `|(β, i)| <= w` in the plane.
pub struct PlaneBand {
    pub i: [f64; 2],
    pub w: f64,
}

/// Clips the line `{β : (β, i) = 0}` to the box, Liang-Barsky style.
fn clip_line(i: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> Option<([f64; 2], [f64; 2])> {
    let norm = (i[0] * i[0] + i[1] * i[1]).sqrt();
    let dir = [-i[1] / norm, i[0] / norm];
    let reach = (lo[0].abs().max(hi[0].abs()) + lo[1].abs().max(hi[1].abs())) * 2.0;
    let (mut t0, mut t1) = (-reach, reach);
    for axis in 0..2 {
        if dir[axis] == 0.0 {
            if 0.0 < lo[axis] || 0.0 > hi[axis] {
                return None;
            }
            continue;
        }
        let a = lo[axis] / dir[axis];
        let b = hi[axis] / dir[axis];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 < t1).then(|| {
        (
            [t0 * dir[0], t0 * dir[1]],
            [t1 * dir[0], t1 * dir[1]],
        )
    })
}

/// The ball `B(α, r)` with the bands that cross the surrounding window.
pub fn band_picture(alpha: [f64; 2], r: f64, bands: &[PlaneBand], title: &str) -> String {
    let mut out = String::new();
    header(&mut out, "bands-svg", title);
    let half = 1.5 * r;
    let lo = [alpha[0] - half, alpha[1] - half];
    let hi = [alpha[0] + half, alpha[1] + half];
    let side = (H - 2.0 * MARGIN).min(W - 2.0 * MARGIN);
    let x0 = (W - side) / 2.0;
    let scale = side / (2.0 * half);
    let px = |x: f64| x0 + (x - lo[0]) * scale;
    let py = |y: f64| H - MARGIN - (y - lo[1]) * scale;
    writeln!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#999\"/>",
        x0, MARGIN, side, side
    )
    .unwrap();
    let mut drawn = 0usize;
    for b in bands {
        if let Some((p, q)) = clip_line(b.i, lo, hi) {
            let norm = (b.i[0] * b.i[0] + b.i[1] * b.i[1]).sqrt();
            let width = (2.0 * b.w / norm * scale).max(0.6);
            writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#c0392b\" stroke-opacity=\"0.6\" stroke-width=\"{:.2}\"/>",
                px(p[0]),
                py(p[1]),
                px(q[0]),
                py(q[1]),
                width
            )
            .unwrap();
            drawn += 1;
        }
    }
    writeln!(
        out,
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"#1f5fa8\" fill-opacity=\"0.15\" stroke=\"#1f5fa8\"/>",
        px(alpha[0]),
        py(alpha[1]),
        r * scale
    )
    .unwrap();
    writeln!(
        out,
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"black\"/>",
        px(alpha[0]),
        py(alpha[1])
    )
    .unwrap();
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{} of {} candidate bands cross the window</text>",
        W / 2.0,
        H - 14.0,
        drawn,
        bands.len()
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}
