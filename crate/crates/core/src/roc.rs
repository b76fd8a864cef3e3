//! Procedures as points of ROC space and the rotated "procedure diamond".
//!
//! A point is `(h, k)` with `h = P(U=0|J=0)` on the true-positive axis and
//! `k = P(U=0|J=1)` on the false-positive axis. Rotating the unit square by
//! 45 degrees puts the free-for-all point `O = (0,0)` at the bottom, the
//! all-in-jail point `Q = (1,1)` at the top, the perfect procedure
//! `A = (1,0)` on the right and its mirror `B = (0,1)` on the left. The
//! vertical segment `O-Q` holds the merit-agnostic procedures.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{Probability, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RocPoint {
    pub h: Probability,
    pub k: Probability,
}

impl RocPoint {
    pub fn new(h: Probability, k: Probability) -> Self {
        RocPoint { h, k }
    }

    pub fn from_f64(h: f64, k: f64) -> Result<Self> {
        Ok(RocPoint {
            h: Probability::from_f64(h)?,
            k: Probability::from_f64(k)?,
        })
    }

    /// `(h, k) -> (k, h)`: mirror image across the merit-agnostic segment.
    pub fn reflected(&self) -> Self {
        RocPoint {
            h: self.k.clone(),
            k: self.h.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ProcedureClass {
    PerfectlyJust,
    EveryoneConvicted,
    EveryoneAcquitted,
    PerfectForGuilty,
    PerfectForInnocent,
    MeritAgnostic,
    ImperfectlyJust,
    PerfectlyUnjust,
    UnreasonablyUnjust,
}

impl ProcedureClass {
    pub const ALL: [ProcedureClass; 9] = [
        ProcedureClass::PerfectlyJust,
        ProcedureClass::EveryoneConvicted,
        ProcedureClass::EveryoneAcquitted,
        ProcedureClass::PerfectForGuilty,
        ProcedureClass::PerfectForInnocent,
        ProcedureClass::MeritAgnostic,
        ProcedureClass::ImperfectlyJust,
        ProcedureClass::PerfectlyUnjust,
        ProcedureClass::UnreasonablyUnjust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProcedureClass::PerfectlyJust => "PerfectlyJust",
            ProcedureClass::EveryoneConvicted => "EveryoneConvicted",
            ProcedureClass::EveryoneAcquitted => "EveryoneAcquitted",
            ProcedureClass::PerfectForGuilty => "PerfectForGuilty",
            ProcedureClass::PerfectForInnocent => "PerfectForInnocent",
            ProcedureClass::MeritAgnostic => "MeritAgnostic",
            ProcedureClass::ImperfectlyJust => "ImperfectlyJust",
            ProcedureClass::PerfectlyUnjust => "PerfectlyUnjust",
            ProcedureClass::UnreasonablyUnjust => "UnreasonablyUnjust",
        }
    }

    /// Conviction probability does not depend on merit. The degenerate
    /// vertices are special cases of merit agnosticism.
    pub fn is_merit_agnostic(self) -> bool {
        matches!(
            self,
            ProcedureClass::MeritAgnostic | ProcedureClass::EveryoneConvicted | ProcedureClass::EveryoneAcquitted
        )
    }

    /// The class of the mirrored point `(k, h)`, for classes off the
    /// segment `k = h`.
    pub fn mirror(self) -> Option<ProcedureClass> {
        match self {
            ProcedureClass::PerfectlyJust => Some(ProcedureClass::PerfectlyUnjust),
            ProcedureClass::PerfectlyUnjust => Some(ProcedureClass::PerfectlyJust),
            ProcedureClass::ImperfectlyJust => Some(ProcedureClass::UnreasonablyUnjust),
            ProcedureClass::UnreasonablyUnjust => Some(ProcedureClass::ImperfectlyJust),
            _ => None,
        }
    }
}

impl fmt::Display for ProcedureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifies `p` with tolerance `eps` (`0 <= eps < 1/4`).
///
/// Vertices take precedence over edges, and edges over the interior, so
/// overlapping tolerance bands resolve deterministically.
pub fn classify(p: &RocPoint, eps: f64) -> Result<ProcedureClass> {
    if !(0.0..0.25).contains(&eps) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let eps = Rational::from_f64(eps).expect("finite");
    let (h, k) = (p.h.value(), p.k.value());
    let (zero, one) = (Rational::zero(), Rational::one());
    let near = |a: &Rational, b: &Rational| (a - b).abs() <= eps;

    let class = match (near(h, &one), near(h, &zero), near(k, &one), near(k, &zero)) {
        (true, _, _, true) => ProcedureClass::PerfectlyJust,
        (true, _, true, _) => ProcedureClass::EveryoneConvicted,
        (_, true, _, true) => ProcedureClass::EveryoneAcquitted,
        (_, true, true, _) => ProcedureClass::PerfectlyUnjust,
        (true, _, _, _) => ProcedureClass::PerfectForGuilty,
        (_, _, _, true) => ProcedureClass::PerfectForInnocent,
        _ if near(h, k) => ProcedureClass::MeritAgnostic,
        _ if h > k => ProcedureClass::ImperfectlyJust,
        _ => ProcedureClass::UnreasonablyUnjust,
    };
    Ok(class)
}

/// Rotates `(h, k)` by 45 degrees: `x = (h - k)/√2`, `y = (h + k)/√2`.
pub fn to_diamond(p: &RocPoint) -> (f64, f64) {
    diamond_coords(p.h.to_f64(), p.k.to_f64())
}

pub fn diamond_coords(h: f64, k: f64) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ((h - k) * s, (h + k) * s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagramFormat {
    Svg,
    Csv,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub label: String,
    pub point: RocPoint,
}

impl LabeledPoint {
    pub fn new(label: impl Into<String>, point: RocPoint) -> Self {
        LabeledPoint {
            label: label.into(),
            point,
        }
    }
}

/// Reads `label,h,k` rows (probabilities as decimals or `a/b`).
pub fn load_points<R: std::io::Read>(source: R) -> Result<Vec<LabeledPoint>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| Error::Parse { line, message: msg };
        if record.len() != 3 {
            return Err(bad("expected label,h,k".into()));
        }
        let h: Probability = record[1].parse().map_err(|e: Error| bad(e.to_string()))?;
        let k: Probability = record[2].parse().map_err(|e: Error| bad(e.to_string()))?;
        out.push(LabeledPoint::new(&record[0], RocPoint::new(h, k)));
    }
    Ok(out)
}

pub fn export_diagram(points: &[LabeledPoint], format: DiagramFormat) -> Result<String> {
    let mut seen = HashSet::new();
    for p in points {
        if !seen.insert(p.label.as_str()) {
            return Err(Error::DuplicateLabel(p.label.clone()));
        }
    }
    match format {
        DiagramFormat::Csv => diagram_csv(points),
        DiagramFormat::Svg => Ok(diagram_svg(points)),
    }
}

fn diagram_csv(points: &[LabeledPoint]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["label", "h", "k", "x", "y", "class"]).map_err(io)?;
    for p in points {
        let (x, y) = to_diamond(&p.point);
        let class = classify(&p.point, 0.0)?;
        w.write_record([
            p.label.clone(),
            format!("{:.8}", p.point.h.to_f64()),
            format!("{:.8}", p.point.k.to_f64()),
            format!("{:.8}", x),
            format!("{:.8}", y),
            class.name().to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

pub const SVG_SIZE: f64 = 600.0;
const SVG_SCALE: f64 = 360.0;
const SVG_BASELINE: f64 = 555.0;

/// Pixel position of diamond coordinates in the 600×600 viewport.
pub fn svg_position(x: f64, y: f64) -> (f64, f64) {
    (SVG_SIZE / 2.0 + x * SVG_SCALE, SVG_BASELINE - y * SVG_SCALE)
}

fn pixel(h: f64, k: f64) -> (f64, f64) {
    let (x, y) = diamond_coords(h, k);
    svg_position(x, y)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn polygon(corners: &[(f64, f64)]) -> String {
    corners
        .iter()
        .map(|&(h, k)| {
            let (px, py) = pixel(h, k);
            format!("{px:.2},{py:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn diagram_svg(points: &[LabeledPoint]) -> String {
    let (o, a, b, q) = (pixel(0.0, 0.0), pixel(1.0, 0.0), pixel(0.0, 1.0), pixel(1.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="600" height="600" viewBox="0 0 600 600">"#
    );
    let _ = writeln!(s, r#"  <rect x="0" y="0" width="600" height="600" fill="white"/>"#);
    // S1: h >= k, right half. S2: its mirror.
    let _ = writeln!(
        s,
        r##"  <polygon id="region-S1" points="{}" fill="#d9d9d9" stroke="none"/>"##,
        polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])
    );
    let _ = writeln!(
        s,
        r##"  <polygon id="region-S2" points="{}" fill="#f2d7d5" stroke="none"/>"##,
        polygon(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    );
    let _ = writeln!(
        s,
        r#"  <polygon id="diamond" points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    );
    let _ = writeln!(
        s,
        r#"  <line id="segment-a" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5" stroke-dasharray="2,4"/>"#,
        o.0, o.1, q.0, q.1
    );
    // Axes run along the lower edges of the diamond.
    let _ = writeln!(
        s,
        r#"  <text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-45 {:.2} {:.2})">P(U=0|J=0) (true positive rate)</text>"#,
        (o.0 + a.0) / 2.0 + 12.0,
        (o.1 + a.1) / 2.0 + 12.0,
        (o.0 + a.0) / 2.0 + 12.0,
        (o.1 + a.1) / 2.0 + 12.0
    );
    let _ = writeln!(
        s,
        r#"  <text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(45 {:.2} {:.2})">P(U=0|J=1) (false positive rate)</text>"#,
        (o.0 + b.0) / 2.0 - 12.0,
        (o.1 + b.1) / 2.0 + 12.0,
        (o.0 + b.0) / 2.0 - 12.0,
        (o.1 + b.1) / 2.0 + 12.0
    );
    for (name, (px, py), dx, dy) in [
        ("O", o, 0.0, 20.0),
        ("A", a, 14.0, 4.0),
        ("B", b, -14.0, 4.0),
        ("Q", q, 0.0, -10.0),
    ] {
        let _ = writeln!(
            s,
            r#"  <text class="vertex" x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{name}</text>"#,
            px + dx,
            py + dy
        );
    }
    let (s1x, s1y) = pixel(0.75, 0.25);
    let (s2x, s2y) = pixel(0.25, 0.75);
    let _ = writeln!(
        s,
        r#"  <text x="{s1x:.2}" y="{s1y:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">S1</text>"#
    );
    let _ = writeln!(
        s,
        r#"  <text x="{s2x:.2}" y="{s2y:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">S2</text>"#
    );
    let (ax, ay) = pixel(0.5, 0.5);
    let _ = writeln!(
        s,
        r#"  <text x="{:.2}" y="{ay:.2}" font-family="sans-serif" font-size="12" font-style="italic">a</text>"#,
        ax + 6.0
    );

    for p in points {
        let (px, py) = pixel(p.point.h.to_f64(), p.point.k.to_f64());
        let label = escape(&p.label);
        let _ = writeln!(
            s,
            r##"  <g class="point"><circle cx="{px:.2}" cy="{py:.2}" r="4" fill="#1f4e79"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{label}</text></g>"##,
            px + 7.0,
            py - 7.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(h: &str, k: &str) -> RocPoint {
        RocPoint::new(h.parse().unwrap(), k.parse().unwrap())
    }

    #[test]
    fn named_cases() {
        let cases = [
            (("1", "0"), ProcedureClass::PerfectlyJust),
            (("1", "1"), ProcedureClass::EveryoneConvicted),
            (("0", "0"), ProcedureClass::EveryoneAcquitted),
            (("1", "1/3"), ProcedureClass::PerfectForGuilty),
            (("2/3", "0"), ProcedureClass::PerfectForInnocent),
            (("1/2", "1/2"), ProcedureClass::MeritAgnostic),
            (("3/4", "1/10"), ProcedureClass::ImperfectlyJust),
            (("0", "1"), ProcedureClass::PerfectlyUnjust),
            (("1/10", "3/4"), ProcedureClass::UnreasonablyUnjust),
        ];
        for ((h, k), want) in cases {
            assert_eq!(classify(&pt(h, k), 0.0).unwrap(), want, "({h},{k})");
        }
    }

    #[test]
    fn tolerance_bands() {
        assert_eq!(
            classify(&pt("0.99", "0.01"), 0.02).unwrap(),
            ProcedureClass::PerfectlyJust
        );
        assert_eq!(
            classify(&pt("0.99", "0.01"), 0.0).unwrap(),
            ProcedureClass::ImperfectlyJust
        );
        assert_eq!(
            classify(&pt("0.5", "0.51"), 0.02).unwrap(),
            ProcedureClass::MeritAgnostic
        );
        assert_eq!(
            classify(&pt("0.99", "0.5"), 0.02).unwrap(),
            ProcedureClass::PerfectForGuilty
        );
        assert!(matches!(
            classify(&pt("0", "0"), 0.25),
            Err(Error::EpsilonOutOfRange(_))
        ));
        assert!(matches!(
            classify(&pt("0", "0"), -0.1),
            Err(Error::EpsilonOutOfRange(_))
        ));
        assert!(classify(&pt("0", "0"), f64::NAN).is_err());
    }

    #[test]
    fn degenerate_vertices_are_merit_agnostic() {
        assert!(ProcedureClass::EveryoneConvicted.is_merit_agnostic());
        assert!(ProcedureClass::EveryoneAcquitted.is_merit_agnostic());
        assert!(!ProcedureClass::PerfectForGuilty.is_merit_agnostic());
    }

    #[test]
    fn diamond_corners() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(to_diamond(&pt("0", "0")), (0.0, 0.0));
        let (x, y) = to_diamond(&pt("1", "0"));
        assert!((x - r).abs() < 1e-12 && (y - r).abs() < 1e-12);
        let (x, y) = to_diamond(&pt("1", "1"));
        assert!(x.abs() < 1e-12 && (y - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_rows() {
        let out = export_diagram(&[LabeledPoint::new("ex1", pt("3/4", "1/10"))], DiagramFormat::Csv).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "label,h,k,x,y,class");
        assert_eq!(
            lines[1],
            "ex1,0.75000000,0.10000000,0.45961941,0.60104076,ImperfectlyJust"
        );
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn svg_skeleton_and_points() {
        let empty = export_diagram(&[], DiagramFormat::Svg).unwrap();
        assert!(empty.contains(r#"id="diamond""#));
        assert!(empty.contains(r#"id="segment-a""#));
        assert!(empty.contains("stroke-dasharray"));
        assert!(!empty.contains(r#"class="point""#));

        let one = export_diagram(&[LabeledPoint::new("A<1>", pt("1", "0"))], DiagramFormat::Svg).unwrap();
        let (px, py) = svg_position(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
        assert!(one.contains(&format!(r#"cx="{px:.2}" cy="{py:.2}""#)));
        assert!(one.contains("A&lt;1&gt;"));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let pts = [
            LabeledPoint::new("p", pt("1", "0")),
            LabeledPoint::new("p", pt("0", "0")),
        ];
        assert!(matches!(
            export_diagram(&pts, DiagramFormat::Csv),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn points_file() {
        let pts = load_points("label,h,k\nex1,3/4,0.1\nA,1,0\n".as_bytes()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].point, pt("3/4", "1/10"));
        assert!(load_points("label,h,k\nbad,2,0\n".as_bytes()).is_err());
    }
}
