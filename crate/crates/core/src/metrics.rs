//! Group-wise error rates and disparity measures.
//!
//! Rates are fractions over the group's confusion cells: FPR/FNR over the
//! true-label denominators, FDR/FOR over the predicted-label denominators,
//! OMR over the group size. Every disparity is the z=0 value minus the z=1
//! value. A rate whose denominator cell is empty is carried as absent
//! (`None`), never as zero.

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::error::{Error, Result};

/// Confusion cells and rates for one sensitive group.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupStats {
    pub n: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub omr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub fdr: Option<f64>,
    pub for_: Option<f64>,
    pub positive_rate: Option<f64>,
}

/// Full per-group error report plus disparities and overall accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupErrorReport {
    /// Indexed by sensitive value: `groups[0]` is z=0.
    pub groups: [GroupStats; 2],
    pub accuracy: f64,
    pub d_omr: Option<f64>,
    pub d_fpr: Option<f64>,
    pub d_fnr: Option<f64>,
    pub d_fdr: Option<f64>,
    pub d_for: Option<f64>,
    /// Disparate-impact gap: P(ŷ=1 | z=0) − P(ŷ=1 | z=1).
    pub d_impact: Option<f64>,
}

fn rate(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

fn check_symbols(truth: &[i8], pred: &[i8], sensitive: &[u8]) -> Result<()> {
    if truth.len() != pred.len() || truth.len() != sensitive.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len().min(sensitive.len()),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("empty label vectors".into()));
    }
    for &y in truth.iter().chain(pred) {
        if y != 1 && y != -1 {
            return Err(Error::InvalidInput(format!("label {y} is not in {{-1,+1}}")));
        }
    }
    for &z in sensitive {
        if z > 1 {
            return Err(Error::InvalidInput(format!("sensitive value {z} is not in {{0,1}}")));
        }
    }
    Ok(())
}

/// Compute the group-wise error report for predictions against ground truth.
pub fn error_report(truth: &[i8], pred: &[i8], sensitive: &[u8]) -> Result<GroupErrorReport> {
    check_symbols(truth, pred, sensitive)?;

    let mut groups = [GroupStats::default(), GroupStats::default()];
    let mut correct = 0usize;
    for i in 0..truth.len() {
        let g = &mut groups[sensitive[i] as usize];
        g.n += 1;
        match (truth[i], pred[i]) {
            (1, 1) => g.tp += 1,
            (1, -1) => g.fn_ += 1,
            (-1, 1) => g.fp += 1,
            (-1, -1) => g.tn += 1,
            _ => unreachable!(),
        }
        if truth[i] == pred[i] {
            correct += 1;
        }
    }
    for g in &mut groups {
        g.omr = rate(g.fp + g.fn_, g.n);
        g.fpr = rate(g.fp, g.fp + g.tn);
        g.fnr = rate(g.fn_, g.fn_ + g.tp);
        g.fdr = rate(g.fp, g.fp + g.tp);
        g.for_ = rate(g.fn_, g.fn_ + g.tn);
        g.positive_rate = rate(g.tp + g.fp, g.n);
    }

    Ok(GroupErrorReport {
        accuracy: correct as f64 / truth.len() as f64,
        d_omr: diff(groups[0].omr, groups[1].omr),
        d_fpr: diff(groups[0].fpr, groups[1].fpr),
        d_fnr: diff(groups[0].fnr, groups[1].fnr),
        d_fdr: diff(groups[0].fdr, groups[1].fdr),
        d_for: diff(groups[0].for_, groups[1].for_),
        d_impact: diff(groups[0].positive_rate, groups[1].positive_rate),
        groups,
    })
}

/// P(ŷ=1 | z=0) − P(ŷ=1 | z=1); `None` when either group is empty.
pub fn disparate_impact_gap(pred: &[i8], sensitive: &[u8]) -> Result<Option<f64>> {
    check_symbols(pred, pred, sensitive)?;
    let mut pos = [0usize; 2];
    let mut n = [0usize; 2];
    for (&p, &z) in pred.iter().zip(sensitive) {
        n[z as usize] += 1;
        if p == 1 {
            pos[z as usize] += 1;
        }
    }
    Ok(diff(rate(pos[0], n[0]), rate(pos[1], n[1])))
}

impl GroupErrorReport {
    /// The report as the documented flat JSON object (fixed key set; absent
    /// rates serialize as `null`).
    pub fn flat_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization cannot fail")
    }
}

impl Serialize for GroupErrorReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        for (z, g) in self.groups.iter().enumerate() {
            map.serialize_entry(&format!("n_z{z}"), &g.n)?;
            map.serialize_entry(&format!("tp_z{z}"), &g.tp)?;
            map.serialize_entry(&format!("fp_z{z}"), &g.fp)?;
            map.serialize_entry(&format!("fn_z{z}"), &g.fn_)?;
            map.serialize_entry(&format!("tn_z{z}"), &g.tn)?;
            map.serialize_entry(&format!("omr_z{z}"), &g.omr)?;
            map.serialize_entry(&format!("fpr_z{z}"), &g.fpr)?;
            map.serialize_entry(&format!("fnr_z{z}"), &g.fnr)?;
            map.serialize_entry(&format!("fdr_z{z}"), &g.fdr)?;
            map.serialize_entry(&format!("for_z{z}"), &g.for_)?;
            map.serialize_entry(&format!("pos_rate_z{z}"), &g.positive_rate)?;
        }
        map.serialize_entry("accuracy", &self.accuracy)?;
        map.serialize_entry("d_omr", &self.d_omr)?;
        map.serialize_entry("d_fpr", &self.d_fpr)?;
        map.serialize_entry("d_fnr", &self.d_fnr)?;
        map.serialize_entry("d_fdr", &self.d_fdr)?;
        map.serialize_entry("d_for", &self.d_for)?;
        map.serialize_entry("d_impact", &self.d_impact)?;
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Figure-1 fixture, row order M1,M2,M3,F1,F2,F3; males are z=1.
    const TRUTH: [i8; 6] = [1, 1, -1, 1, -1, 1];
    const Z: [u8; 6] = [1, 1, 1, 0, 0, 0];
    const C1: [i8; 6] = [1, 1, 1, 1, 1, -1];
    const C2: [i8; 6] = [1, 1, -1, -1, 1, 1];
    const C3: [i8; 6] = [1, -1, 1, 1, 1, -1];

    #[test]
    fn figure1_c1() {
        let r = error_report(&TRUTH, &C1, &Z).unwrap();
        assert_eq!(r.groups[1].fnr, Some(0.0));
        assert_eq!(r.groups[0].fnr, Some(0.5));
        assert_eq!(r.groups[1].fpr, Some(1.0));
        assert_eq!(r.groups[0].fpr, Some(1.0));
        assert_eq!(r.groups[1].positive_rate, Some(1.0));
        assert_eq!(r.groups[0].positive_rate, Some(2.0 / 3.0));
        assert_eq!(r.d_impact, Some(2.0 / 3.0 - 1.0));
    }

    #[test]
    fn figure1_c2() {
        let r = error_report(&TRUTH, &C2, &Z).unwrap();
        assert_eq!((r.groups[1].fpr, r.groups[0].fpr), (Some(0.0), Some(1.0)));
        assert_eq!((r.groups[1].fnr, r.groups[0].fnr), (Some(0.0), Some(0.5)));
    }

    #[test]
    fn figure1_c3_no_mistreatment() {
        let r = error_report(&TRUTH, &C3, &Z).unwrap();
        assert_eq!(r.d_fpr, Some(0.0));
        assert_eq!(r.d_fnr, Some(0.0));
    }

    #[test]
    fn perfect_predictions() {
        let r = error_report(&TRUTH, &TRUTH, &Z).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for g in &r.groups {
            assert_eq!(g.omr, Some(0.0));
            assert_eq!(g.fpr, Some(0.0));
            assert_eq!(g.fnr, Some(0.0));
            assert_eq!(g.fdr, Some(0.0));
            assert_eq!(g.for_, Some(0.0));
        }
        assert_eq!(r.d_omr, Some(0.0));
        assert_eq!(r.d_impact, Some(0.0));
    }

    #[test]
    fn degenerate_group_is_absent() {
        let r = error_report(&[1, -1], &[1, 1], &[0, 0]).unwrap();
        assert_eq!(r.groups[1].omr, None);
        assert_eq!(r.d_fpr, None);
        assert_eq!(r.d_impact, None);
        assert_eq!(disparate_impact_gap(&[1, 1], &[0, 0]).unwrap(), None);

        // all predictions positive, both groups present: gap 0
        assert_eq!(disparate_impact_gap(&[1, 1, 1], &[0, 1, 1]).unwrap(), Some(0.0));
    }

    #[test]
    fn flat_json_keys_are_fixed() {
        let r = error_report(&TRUTH, &C1, &Z).unwrap();
        let v = r.flat_json();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), 29);
        for key in ["omr_z0", "fpr_z1", "d_fpr", "d_impact", "accuracy", "tn_z0", "pos_rate_z1"] {
            assert!(obj.contains_key(key), "missing {key}");
        }
    }

    #[test]
    fn invalid_symbols_rejected() {
        assert!(error_report(&[1, 0], &[1, 1], &[0, 1]).is_err());
        assert!(error_report(&[1, 1], &[1, 1], &[0, 2]).is_err());
        assert!(error_report(&[1, 1, 1], &[1, 1], &[0, 1]).is_err());
    }
}
