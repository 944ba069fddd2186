use super::Profile;

/// Qualitative shape of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// Constant profile, `G ≡ 2` up to scaling.
    Trivial,
    /// Maxima toward both endpoints around an interior minimum in `(1/2, 1)`.
    Subcritical,
    /// A single interior maximum in `(1/2, 1)` and no interior minimum.
    Supercritical,
    Unknown,
}

impl Shape {
    pub fn as_str(&self) -> &'static str {
        match self {
            Shape::Trivial => "trivial",
            Shape::Subcritical => "subcritical",
            Shape::Supercritical => "supercritical",
            Shape::Unknown => "unknown",
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative spread below which a profile counts as constant.
pub const SHAPE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Extremum {
    Max(f64),
    Min(f64),
}

/// Interior local extrema of the sampled values; differences below a
/// relative noise floor count as flat.
fn interior_extrema(ys: &[f64], g: &[f64]) -> Vec<Extremum> {
    let scale = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = 1e-12 * scale;
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for k in 0..g.len().saturating_sub(1) {
        let diff = g[k + 1] - g[k];
        if diff.abs() <= floor {
            continue;
        }
        let sign = diff.signum();
        if let Some(s) = prev {
            if s > 0.0 && sign < 0.0 {
                out.push(Extremum::Max(ys[k]));
            } else if s < 0.0 && sign > 0.0 {
                out.push(Extremum::Min(ys[k]));
            }
        }
        prev = Some(sign);
    }
    out
}

pub fn shape_classify(p: &Profile) -> Shape {
    classify_samples(&p.ys, &p.g_vals, p.delta)
}

/// [`shape_classify`] for bare samples on `[δ, 1-δ]`, e.g. a rescaled
/// box-model snapshot.
pub fn classify_samples(ys: &[f64], g: &[f64], delta: f64) -> Shape {
    if g.len() < 16 || g.len() != ys.len() {
        return Shape::Unknown;
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let spread = g.iter().fold(0.0_f64, |a, v| a.max((v - mean).abs()));
    if spread < SHAPE_TOL * mean.abs() {
        return Shape::Trivial;
    }

    let upper = 1.0 - delta;
    let in_right_half = |y: f64| y > 0.5 && y < upper;
    let extrema = interior_extrema(ys, g);
    let maxima: Vec<f64> = extrema
        .iter()
        .filter_map(|e| match e {
            Extremum::Max(y) => Some(*y),
            _ => None,
        })
        .collect();
    let minima: Vec<f64> = extrema
        .iter()
        .filter_map(|e| match e {
            Extremum::Min(y) => Some(*y),
            _ => None,
        })
        .collect();

    if minima.is_empty() && maxima.len() == 1 && in_right_half(maxima[0]) {
        return Shape::Supercritical;
    }
    let sub = minima.iter().any(|&ymin| {
        in_right_half(ymin)
            && maxima.iter().any(|&y| y < ymin)
            && maxima.iter().any(|&y| y > ymin)
    });
    if sub {
        Shape::Subcritical
    } else {
        Shape::Unknown
    }
}
