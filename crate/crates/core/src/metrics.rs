//! Imperceptibility and misclassification metrics over batches of
//! (original, adversarial) pairs, with table/CSV formatting.
//!
//! The speed metric is the absolute deviation norm normalized by
//! `intervals * samples * joints`, which intentionally differs in form from
//! the relative speed loss term; both definitions live side by side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{AttackMode, EPS_DEN};
use crate::motion::{bone_angles, bone_lengths, joint_speeds, SkeletonMotion};

/// Per-sample imperceptibility values plus the success flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub dbb: f64,
    pub daa: f64,
    pub dss: f64,
    pub l2: f64,
    pub success: bool,
}

impl SampleMetrics {
    /// Measure one pair. `success` is supplied by the caller (it depends on
    /// the classifier, not the geometry).
    pub fn measure(x: &SkeletonMotion, x_adv: &SkeletonMotion, success: bool) -> Result<Self> {
        let pair = [(x, x_adv)];
        Ok(Self {
            dbb: delta_b_over_b(&pair)?,
            daa: delta_a_over_a(&pair)?,
            dss: delta_s_over_s(&pair)?,
            l2: l2_metric(&pair)?,
            success,
        })
    }
}

/// One prediction outcome; the unit `success_rate` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionOutcome {
    pub true_label: usize,
    pub predicted_label: usize,
    pub target_label: Option<usize>,
}

/// Batch aggregates in the paper-table layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub model: String,
    pub mode: String,
    pub gamma: f64,
    pub dbb: f64,
    pub daa: f64,
    pub dss: f64,
    pub sr: f64,
    pub l2: f64,
    pub n: usize,
}

/// Report context echoed into every aggregate row.
#[derive(Debug, Clone)]
pub struct ReportContext {
    pub model: String,
    pub mode: String,
    pub gamma: f64,
}

fn check_pairs(pairs: &[(&SkeletonMotion, &SkeletonMotion)]) -> Result<()> {
    for (x, x_adv) in pairs {
        crate::loss::check_pair(x, x_adv)?;
    }
    Ok(())
}

/// Mean relative bone-length deviation over samples, frames and bones.
pub fn delta_b_over_b(pairs: &[(&SkeletonMotion, &SkeletonMotion)]) -> Result<f64> {
    check_pairs(pairs)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, x_adv) in pairs {
        let orig = bone_lengths(x);
        let adv = bone_lengths(x_adv);
        for (o, a) in orig.iter().zip(adv.iter()) {
            sum += (o - a).abs() / o.max(EPS_DEN);
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Mean relative bone-angle deviation, by analogy with `delta_b_over_b`.
pub fn delta_a_over_a(pairs: &[(&SkeletonMotion, &SkeletonMotion)]) -> Result<f64> {
    check_pairs(pairs)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, x_adv) in pairs {
        let orig = bone_angles(x);
        let adv = bone_angles(x_adv);
        for (o, a) in orig.iter().zip(adv.iter()) {
            sum += (o - a).abs() / o.max(EPS_DEN);
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Speed deviation exactly as printed: per sample the l2 norm of the whole
/// speed-deviation vector, summed and divided by
/// `intervals * samples * joints`.
pub fn delta_s_over_s(pairs: &[(&SkeletonMotion, &SkeletonMotion)]) -> Result<f64> {
    check_pairs(pairs)?;
    let mut sum = 0.0;
    let mut denominator = 0.0;
    for (x, x_adv) in pairs {
        let orig = joint_speeds(x)?;
        let adv = joint_speeds(x_adv)?;
        let norm: f64 = orig
            .iter()
            .zip(adv.iter())
            .map(|(o, a)| (o - a) * (o - a))
            .sum::<f64>()
            .sqrt();
        sum += norm;
        let (intervals, joints) = orig.dim();
        denominator += (intervals * joints) as f64;
    }
    Ok(if denominator == 0.0 { 0.0 } else { sum / denominator })
}

/// Coordinate l2 distance: per-frame deviation norms averaged over frames
/// and samples.
pub fn l2_metric(pairs: &[(&SkeletonMotion, &SkeletonMotion)]) -> Result<f64> {
    check_pairs(pairs)?;
    let mut sum = 0.0;
    let mut frames = 0usize;
    for (x, x_adv) in pairs {
        let po = x.positions();
        let pa = x_adv.positions();
        for (fo, fa) in po.outer_iter().zip(pa.outer_iter()) {
            let norm: f64 = fo
                .iter()
                .zip(fa.iter())
                .map(|(o, a)| (o - a) * (o - a))
                .sum::<f64>()
                .sqrt();
            sum += norm;
            frames += 1;
        }
    }
    Ok(if frames == 0 { 0.0 } else { sum / frames as f64 })
}

/// Fraction of outcomes achieving the attack goal: any wrong label
/// (untargeted) or exactly the target label (targeted).
pub fn success_rate(outcomes: &[PredictionOutcome], mode: AttackMode) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("success rate over zero outcomes".into()));
    }
    let mut hits = 0usize;
    for o in outcomes {
        let hit = match mode {
            AttackMode::Untargeted => o.predicted_label != o.true_label,
            AttackMode::Targeted => {
                let target = o.target_label.ok_or_else(|| {
                    Error::InvalidConfig("targeted success rate needs target labels".into())
                })?;
                o.predicted_label == target
            }
        };
        hits += usize::from(hit);
    }
    Ok(hits as f64 / outcomes.len() as f64)
}

/// Aggregate per-sample values into one report row. Aggregates are plain
/// means; SR is the mean of the success flags.
pub fn build_report(samples: &[SampleMetrics], context: &ReportContext) -> BatchReport {
    let n = samples.len();
    let mean = |f: fn(&SampleMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            samples.iter().map(f).sum::<f64>() / n as f64
        }
    };
    BatchReport {
        model: context.model.clone(),
        mode: context.mode.clone(),
        gamma: context.gamma,
        dbb: mean(|s| s.dbb),
        daa: mean(|s| s.daa),
        dss: mean(|s| s.dss),
        sr: mean(|s| f64::from(u8::from(s.success))),
        l2: mean(|s| s.l2),
        n,
    }
}

fn percent(v: f64) -> String {
    format!("{:.1}%", v * 100.0)
}

fn percent_sr(v: f64) -> String {
    let p = v * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{p:.0}%")
    } else {
        format!("{p:.1}%")
    }
}

impl BatchReport {
    pub const CSV_HEADER: &'static str = "model,mode,gamma,dBB,dAA,dSS,SR,l2,N";

    /// Raw-precision CSV row matching [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.model, self.mode, self.gamma, self.dbb, self.daa, self.dss, self.sr, self.l2, self.n
        )
    }

    /// Human-readable row with the paper's percentage formatting.
    pub fn table_row(&self) -> String {
        format!(
            "{} / {} / {} / {} / {:.2}",
            percent(self.dbb),
            percent(self.daa),
            percent(self.dss),
            percent_sr(self.sr),
            self.l2
        )
    }
}

/// Multi-row comparison table (gamma sweeps, ablations).
pub fn render_table(rows: &[(String, BatchReport)]) -> String {
    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(5);
    let mut out = format!(
        "{:label_width$}  {:>7}  {:>7}  {:>7}  {:>6}  {:>6}\n",
        "row", "dB/B", "dA/A", "dS/S", "SR", "l2"
    );
    for (label, r) in rows {
        out.push_str(&format!(
            "{:label_width$}  {:>7}  {:>7}  {:>7}  {:>6}  {:>6.2}\n",
            label,
            percent(r.dbb),
            percent(r.daa),
            percent(r.dss),
            percent_sr(r.sr),
            r.l2
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::SkeletonTopology;
    use ndarray::Array3;
    use std::sync::Arc;

    fn motion_from(frames: Vec<Vec<[f64; 3]>>, topo: Arc<SkeletonTopology>) -> SkeletonMotion {
        let t = frames.len();
        let j = frames[0].len();
        let mut pos = Array3::zeros((t, j, 3));
        for (ti, frame) in frames.iter().enumerate() {
            for (ji, p) in frame.iter().enumerate() {
                for c in 0..3 {
                    pos[[ti, ji, c]] = p[c];
                }
            }
        }
        SkeletonMotion::new(topo, pos, None, None).unwrap()
    }

    #[test]
    fn identical_pairs_are_all_zero() {
        let topo = Arc::new(SkeletonTopology::chain(3).unwrap());
        let m = motion_from(
            vec![
                vec![[0.0; 3], [0.3, 0.0, 0.0], [0.3, 0.4, 0.0]],
                vec![[0.1, 0.0, 0.0], [0.4, 0.1, 0.0], [0.4, 0.5, 0.1]],
            ],
            topo,
        );
        let pairs = [(&m, &m)];
        assert_eq!(delta_b_over_b(&pairs).unwrap(), 0.0);
        assert_eq!(delta_a_over_a(&pairs).unwrap(), 0.0);
        assert_eq!(delta_s_over_s(&pairs).unwrap(), 0.0);
        assert_eq!(l2_metric(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn bone_metric_direct_value() {
        let topo = Arc::new(SkeletonTopology::chain(2).unwrap());
        let x = motion_from(vec![vec![[0.0; 3], [2.0, 0.0, 0.0]]], topo.clone());
        let x_adv = motion_from(vec![vec![[0.0; 3], [1.9, 0.0, 0.0]]], topo);
        assert!((delta_b_over_b(&[(&x, &x_adv)]).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn angle_metric_direct_value() {
        let topo = Arc::new(SkeletonTopology::star(3).unwrap());
        let x = motion_from(vec![vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]], topo.clone());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x_adv = motion_from(vec![vec![[0.0; 3], [1.0, 0.0, 0.0], [h, h, 0.0]]], topo);
        assert!((delta_a_over_a(&[(&x, &x_adv)]).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn speed_metric_direct_value() {
        // 1 sample, 1 joint, 1 interval: |0.2 - 0.1| / (1*1*1) = 0.1.
        let topo = Arc::new(SkeletonTopology::new(1, vec![]).unwrap());
        let x = motion_from(vec![vec![[0.0; 3]], vec![[0.2, 0.0, 0.0]]], topo.clone());
        let x_adv = motion_from(vec![vec![[0.0; 3]], vec![[0.1, 0.0, 0.0]]], topo);
        assert!((delta_s_over_s(&[(&x, &x_adv)]).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn l2_metric_single_coordinate() {
        let topo = Arc::new(SkeletonTopology::new(1, vec![]).unwrap());
        let x = motion_from(vec![vec![[0.5, 0.5, 0.5]]], topo.clone());
        let x_adv = motion_from(vec![vec![[0.8, 0.5, 0.5]]], topo);
        assert!((l2_metric(&[(&x, &x_adv)]).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn metrics_permutation_invariant_over_samples() {
        let topo = Arc::new(SkeletonTopology::chain(3).unwrap());
        let mk = |shift: f64| {
            let a = motion_from(
                vec![
                    vec![[0.0; 3], [0.3, 0.0, 0.0], [0.3, 0.4, 0.0]],
                    vec![[0.1, 0.0, 0.0], [0.4, 0.1, 0.0], [0.4, 0.5, 0.1]],
                ],
                topo.clone(),
            );
            let pos = a.positions().mapv(|v| v + shift);
            let b = a.with_positions(pos).unwrap();
            (a, b)
        };
        let (a1, b1) = mk(0.01);
        let (a2, b2) = mk(0.04);
        let forward = [(&a1, &b1), (&a2, &b2)];
        let reversed = [(&a2, &b2), (&a1, &b1)];
        for f in [delta_b_over_b, delta_a_over_a, delta_s_over_s, l2_metric] {
            assert!((f(&forward).unwrap() - f(&reversed).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn rigid_translation_of_both_members_keeps_bone_and_angle_metrics() {
        let topo = Arc::new(SkeletonTopology::chain(3).unwrap());
        let x = motion_from(
            vec![vec![[0.0; 3], [0.3, 0.0, 0.0], [0.3, 0.4, 0.0]]],
            topo.clone(),
        );
        let x_adv = motion_from(
            vec![vec![[0.02, 0.0, 0.0], [0.33, 0.01, 0.0], [0.3, 0.42, 0.02]]],
            topo,
        );
        let translate = |m: &SkeletonMotion| m.with_positions(m.positions().mapv(|v| v + 5.0)).unwrap();
        let (tx, tx_adv) = (translate(&x), translate(&x_adv));
        let before = [(&x, &x_adv)];
        let after = [(&tx, &tx_adv)];
        assert!((delta_b_over_b(&before).unwrap() - delta_b_over_b(&after).unwrap()).abs() < 1e-12);
        assert!((delta_a_over_a(&before).unwrap() - delta_a_over_a(&after).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn success_rate_counts() {
        let mk = |t, p| PredictionOutcome { true_label: t, predicted_label: p, target_label: Some(2) };
        let outcomes = [mk(0, 1), mk(0, 0), mk(1, 2), mk(1, 0)];
        assert!((success_rate(&outcomes, AttackMode::Untargeted).unwrap() - 0.75).abs() < 1e-15);
        // Targeted counts only predictions equal to the target class 2.
        assert!((success_rate(&outcomes, AttackMode::Targeted).unwrap() - 0.25).abs() < 1e-15);
        assert!(success_rate(&[], AttackMode::Untargeted).is_err());
    }

    #[test]
    fn report_row_formatting() {
        let samples = vec![
            SampleMetrics { dbb: 0.0, daa: 0.0, dss: 0.0, l2: 0.0, success: true },
            SampleMetrics { dbb: 0.0, daa: 0.0, dss: 0.0, l2: 0.0, success: true },
        ];
        let report = build_report(
            &samples,
            &ReportContext { model: "mlp".into(), mode: "untargeted".into(), gamma: 1.0 },
        );
        assert_eq!(report.table_row(), "0.0% / 0.0% / 0.0% / 100% / 0.00");
        assert_eq!(report.n, 2);
        assert_eq!(report.csv_row(), "mlp,untargeted,1,0,0,0,1,0,2");
    }

    #[test]
    fn report_means_match_hand_computation() {
        let samples = vec![
            SampleMetrics { dbb: 0.01, daa: 0.06, dss: 0.03, l2: 0.2, success: true },
            SampleMetrics { dbb: 0.02, daa: 0.02, dss: 0.05, l2: 0.1, success: false },
            SampleMetrics { dbb: 0.03, daa: 0.04, dss: 0.01, l2: 0.3, success: true },
        ];
        let report = build_report(
            &samples,
            &ReportContext { model: "m".into(), mode: "untargeted".into(), gamma: 0.1 },
        );
        assert!((report.dbb - 0.02).abs() < 1e-15);
        assert!((report.daa - 0.04).abs() < 1e-15);
        assert!((report.dss - 0.03).abs() < 1e-15);
        assert!((report.l2 - 0.2).abs() < 1e-15);
        assert!((report.sr - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_preserves_report() {
        let report = BatchReport {
            model: "mlp".into(),
            mode: "targeted".into(),
            gamma: 10.0,
            dbb: 0.0123456789012345,
            daa: 0.2,
            dss: 1.0 / 3.0,
            sr: 0.98,
            l2: 0.21,
            n: 50,
        };
        let json = serde_json::to_string(&report).unwrap();
        let back: BatchReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
