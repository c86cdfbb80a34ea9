//! Stage sequences along a schedule, their diagnostics, and spot checks of
//! the conditions under which normalized values converge.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::StageReport;
use crate::error::Result;
use crate::group::{GroupElement, Window};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub stages: Vec<StageReport>,
}

impl ConvergenceTrace {
    pub fn new(stages: Vec<StageReport>) -> Self {
        ConvergenceTrace { stages }
    }

    /// Least normalized upper value: for subadditive quantities every stage
    /// bounds the limit from above.
    pub fn best_upper_bound(&self) -> Option<f64> {
        self.stages.iter().map(|s| s.normalized().1).min_by(f64::total_cmp)
    }

    /// Indices where the normalized upper value increases over the previous stage.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        (1..self.stages.len())
            .filter(|&i| self.stages[i].normalized().1 > self.stages[i - 1].normalized().1 + 1e-12)
            .collect()
    }

    /// Pairs `(i, j)` of box stages where the box of `j` is tiled exactly by
    /// translates of the box of `i` and yet the normalized value at `j`
    /// certainly exceeds the one at `i`.
    pub fn fekete_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.stages.iter().enumerate() {
            for (j, b) in self.stages.iter().enumerate() {
                let (Some((_, sa)), Some((_, sb))) = (a.window.as_box(), b.window.as_box()) else { continue };
                if i == j || sa.len() != sb.len() || !sa.iter().zip(&sb).all(|(x, y)| y % x == 0) {
                    continue;
                }
                let (na, nb) = (a.window.len() as i64, b.window.len() as i64);
                if b.lower / nb > a.upper / na {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// `size,raw,normalized,witness,exact`. Brackets print as `lo..hi`.
    pub fn to_csv(&self, witness_prefix: &str) -> String {
        let mut s = String::from("size,raw,normalized,witness,exact\n");
        for (i, st) in self.stages.iter().enumerate() {
            let raw = if st.settled() { st.lower.to_string() } else { format!("{}..{}", st.lower, st.upper) };
            let (lo, hi) = st.normalized();
            let norm = if st.settled() { format!("{lo:.6}") } else { format!("{lo:.6}..{hi:.6}") };
            let _ = writeln!(s, "{},{raw},{norm},{witness_prefix}{i},{}", st.window.len(), st.exact);
        }
        s
    }

    /// A line chart of the normalized upper value against `|F|`.
    pub fn to_svg(&self, title: &str) -> String {
        let (w, h, pad) = (480.0, 300.0, 40.0);
        let pts: Vec<(f64, f64)> = self.stages.iter().map(|s| (s.window.len() as f64, s.normalized().1)).collect();
        let xmax = pts.iter().map(|p| p.0).fold(1.0, f64::max);
        let ymax = pts.iter().map(|p| p.1).filter(|y| y.is_finite()).fold(1.0, f64::max);
        let sx = |x: f64| pad + x / xmax * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - y / ymax * (h - 2.0 * pad);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        let _ = writeln!(s, "<text x=\"{pad}\" y=\"20\" font-size=\"12\">{}</text>", escape(title));
        let _ = writeln!(
            s,
            "<path d=\"M{pad} {b} H{r} M{pad} {b} V{pad}\" stroke=\"black\" fill=\"none\"/>",
            b = h - pad,
            r = w - pad
        );
        let path: Vec<String> =
            pts.iter().enumerate().map(|(i, p)| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, sx(p.0), sy(p.1))).collect();
        let _ = writeln!(s, "<path d=\"{}\" stroke=\"steelblue\" fill=\"none\"/>", path.join(" "));
        for p in &pts {
            let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>", sx(p.0), sy(p.1));
        }
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"10\">|F| max {xmax}</text>", w - 2.0 * pad, h - 10.0);
        let _ = writeln!(s, "<text x=\"4\" y=\"{}\" font-size=\"10\">{ymax:.3}</text>", pad);
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Stage values on an `ε × F` grid with the double-limit diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTrace {
    pub epsilons: Vec<f64>,
    /// `rows[i]` runs over the schedule at `epsilons[i]`.
    pub rows: Vec<ConvergenceTrace>,
}

impl MetricTrace {
    /// Running max over the computed stages of each row (empirical limsup).
    pub fn inner(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.stages.iter().map(|s| s.normalized().0).fold(f64::MIN, f64::max)).collect()
    }

    /// Running min of the row values over decreasing ε (empirical liminf).
    pub fn outer(&self) -> Vec<f64> {
        let mut best = f64::MAX;
        self.inner()
            .into_iter()
            .map(|v| {
                best = best.min(v);
                best
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OwSummary {
    pub bound: Option<f64>,
    #[serde(with = "opt_rational")]
    pub bound_exact: Option<Rational>,
    pub invariant: bool,
    pub monotone: bool,
    pub subadditive: bool,
    pub violations: Vec<String>,
}

impl OwSummary {
    pub fn conditions_hold(&self) -> bool {
        self.invariant && self.monotone && self.subadditive
    }
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => rational::serde_str::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| rational::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
            .transpose()
    }
}

/// The best bound `min φ(F)/|F|` over the windows, with spot checks of
/// invariance under the translates, monotonicity on nested pairs and
/// subadditivity on all pairs.
pub fn ow_limit(
    mut phi: impl FnMut(&Window) -> Result<Rational>,
    windows: &[Window],
    translates: &[GroupElement],
) -> Result<OwSummary> {
    let mut out = OwSummary {
        bound: None,
        bound_exact: None,
        invariant: true,
        monotone: true,
        subadditive: true,
        violations: Vec::new(),
    };
    let values = windows.iter().map(&mut phi).collect::<Result<Vec<_>>>()?;
    for (f, v) in windows.iter().zip(&values) {
        let n = *v / Rational::from_integer(f.len() as i64);
        if out.bound_exact.is_none_or(|b| n < b) {
            out.bound_exact = Some(n);
        }
        for s in translates {
            let w = phi(&f.translate(s))?;
            if w != *v {
                out.invariant = false;
                out.violations.push(format!("phi({f:?} + {s:?}) = {w} != {v}"));
            }
        }
    }
    for (i, a) in windows.iter().enumerate() {
        for (j, b) in windows.iter().enumerate() {
            if i != j && a.is_subset(b) && values[i] > values[j] {
                out.monotone = false;
                out.violations.push(format!("phi({a:?}) = {} > phi({b:?}) = {}", values[i], values[j]));
            }
            if i < j {
                let u = phi(&a.union(b))?;
                if u > values[i] + values[j] {
                    out.subadditive = false;
                    out.violations.push(format!("phi({a:?} ∪ {b:?}) = {u} > {} + {}", values[i], values[j]));
                }
            }
        }
    }
    out.bound = out.bound_exact.map(rational::to_f64);
    Ok(out)
}
