//! Pass/fail assertions over experiment outputs, shared by the CLI.

use std::fmt;

use super::config::FeatureKind;
use super::noise::SHUFFLED_CONTROL;
use super::results::ResultRow;
use super::{PrCurve, VerifyReport};

pub const NOISE_QUAD_MIN: f64 = 0.90;
pub const NOISE_PIXELS_MAX: f64 = 0.60;
pub const SHUFFLED_RANGE: (f64, f64) = (0.45, 0.55);
/// Allowed accuracy drop of quad features per step up in training size.
pub const QUAD_SLACK: f64 = 0.02;
/// Largest HOG accuracy change between the two biggest training sizes.
pub const HOG_SATURATION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn missing(name: &str) -> Self {
        Self::new(name, false, "no matching result row")
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    !checks.is_empty() && checks.iter().all(|c| c.passed)
}

fn find<'a>(rows: &'a [ResultRow], experiment: &str, feature: FeatureKind) -> Option<&'a ResultRow> {
    rows.iter()
        .find(|r| r.experiment == experiment && r.feature == feature.name())
}

pub fn noise_checks(rows: &[ResultRow]) -> Vec<Check> {
    let main = "noise_vs_structured";
    let quad = match find(rows, main, FeatureKind::Quad) {
        Some(r) => Check::new(
            "quad accuracy",
            r.test_accuracy >= NOISE_QUAD_MIN,
            format!("{:.4} >= {NOISE_QUAD_MIN}", r.test_accuracy),
        ),
        None => Check::missing("quad accuracy"),
    };
    let pixels = match find(rows, main, FeatureKind::Pixels) {
        Some(r) => Check::new(
            "pixel accuracy",
            r.test_accuracy <= NOISE_PIXELS_MAX,
            format!("{:.4} <= {NOISE_PIXELS_MAX}", r.test_accuracy),
        ),
        None => Check::missing("pixel accuracy"),
    };
    let (lo, hi) = SHUFFLED_RANGE;
    let control = match find(rows, SHUFFLED_CONTROL, FeatureKind::Quad) {
        Some(r) => Check::new(
            "shuffled-label control",
            (lo..=hi).contains(&r.test_accuracy),
            format!("{:.4} in [{lo}, {hi}]", r.test_accuracy),
        ),
        None => Check::missing("shuffled-label control"),
    };
    vec![quad, pixels, control]
}

/// Accuracy by training size for each RMS level of one feature, both in
/// ascending order.
fn curves(rows: &[ResultRow], feature: FeatureKind) -> Vec<(f64, Vec<(usize, f64)>)> {
    let mut out: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    for r in rows.iter().filter(|r| r.feature == feature.name()) {
        match out.iter_mut().find(|(rms, _)| *rms == r.rms_level) {
            Some((_, pts)) => pts.push((r.train_size, r.test_accuracy)),
            None => out.push((r.rms_level, vec![(r.train_size, r.test_accuracy)])),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, pts) in &mut out {
        pts.sort_by_key(|p| p.0);
    }
    out
}

/// Quad: accuracy never drops by more than [`QUAD_SLACK`] from one training
/// size to the next. HOG: the two largest sizes differ by at most
/// [`HOG_SATURATION`]. Rows of other features are not checked; an empty
/// result is returned when neither feature is present.
pub fn sweep_checks(rows: &[ResultRow]) -> Vec<Check> {
    let mut checks = Vec::new();
    for (rms, pts) in curves(rows, FeatureKind::Quad) {
        let worst = pts.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::INFINITY, f64::min);
        let name = format!("quad non-decreasing at rms {rms}");
        if pts.len() < 2 {
            checks.push(Check::new(name, false, "needs at least two training sizes"));
        } else {
            checks.push(Check::new(
                name,
                worst >= -QUAD_SLACK,
                format!("smallest step {worst:+.4} >= -{QUAD_SLACK}"),
            ));
        }
    }
    for (rms, pts) in curves(rows, FeatureKind::HogBaseline) {
        let name = format!("hog saturated at rms {rms}");
        match pts.as_slice() {
            [.., a, b] => {
                let change = (b.1 - a.1).abs();
                checks.push(Check::new(
                    name,
                    change <= HOG_SATURATION,
                    format!("|{:.4} - {:.4}| = {change:.4} <= {HOG_SATURATION}", b.1, a.1),
                ));
            }
            _ => checks.push(Check::new(name, false, "needs at least two training sizes")),
        }
    }
    checks
}

/// Break-even error ordering `hog_baseline <= quad <= pixels`.
pub fn detect_checks(curves: &[PrCurve]) -> Vec<Check> {
    let eer = |k: FeatureKind| curves.iter().find(|c| c.feature == k.name()).map(|c| c.eer);
    let (Some(hog), Some(quad), Some(pixels)) = (
        eer(FeatureKind::HogBaseline),
        eer(FeatureKind::Quad),
        eer(FeatureKind::Pixels),
    ) else {
        return vec![Check::missing("eer ordering")];
    };
    vec![
        Check::new("hog eer <= quad eer", hog <= quad, format!("{hog:.4} <= {quad:.4}")),
        Check::new(
            "quad eer <= pixel eer",
            quad <= pixels,
            format!("{quad:.4} <= {pixels:.4}"),
        ),
    ]
}

pub fn verify_checks(reports: &[VerifyReport]) -> Vec<Check> {
    reports
        .iter()
        .map(|r| {
            Check::new(
                r.suite,
                r.passed(),
                format!(
                    "{} cases, max deviation {:.3e} <= {:.0e}",
                    r.cases, r.max_deviation, r.tolerance
                ),
            )
        })
        .collect()
}
