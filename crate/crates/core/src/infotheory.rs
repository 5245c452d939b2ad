//! Entropy, mutual information, and the two bounds the protocol must obey:
//! the ξ²-attenuation of a biased readout and the one-bit total for one bit
//! of communication. All information is in bits (base-2 logarithms).

use serde::{Deserialize, Serialize};

use crate::error::{CracError, Result};
use crate::protocol::ChannelStats;

/// Inputs may wobble out of [0, 1] by at most this before being rejected.
const PROB_GUARD: f64 = 1e-12;

/// A 2×2 joint probability table over (x, g), x indexing rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    table: [[f64; 2]; 2],
}

impl JointDistribution {
    /// Validates: no cell below −1e−12 (tiny negatives are clamped), total
    /// within 1e−9 of one.
    pub fn new(table: [[f64; 2]; 2]) -> Result<Self> {
        let mut clean = [[0.0; 2]; 2];
        let mut sum = 0.0;
        for x in 0..2 {
            for g in 0..2 {
                let c = table[x][g];
                if !c.is_finite() || c < -PROB_GUARD {
                    return Err(CracError::contract(format!(
                        "joint cell ({x},{g}) = {c} is negative"
                    )));
                }
                clean[x][g] = c.max(0.0);
                sum += clean[x][g];
            }
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CracError::contract(format!(
                "joint table sums to {sum}, not 1"
            )));
        }
        Ok(JointDistribution { table: clean })
    }

    /// Empirical frequencies from outcome counts.
    pub fn from_counts(counts: [[u64; 2]; 2]) -> Result<Self> {
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            return Err(CracError::EmptyRun("joint table from zero counts".into()));
        }
        let mut table = [[0.0; 2]; 2];
        for x in 0..2 {
            for g in 0..2 {
                table[x][g] = counts[x][g] as f64 / total as f64;
            }
        }
        JointDistribution::new(table)
    }

    pub fn cell(&self, x: usize, g: usize) -> f64 {
        self.table[x][g]
    }

    pub fn marginal_x(&self) -> [f64; 2] {
        [
            self.table[0][0] + self.table[0][1],
            self.table[1][0] + self.table[1][1],
        ]
    }

    pub fn marginal_g(&self) -> [f64; 2] {
        [
            self.table[0][0] + self.table[1][0],
            self.table[0][1] + self.table[1][1],
        ]
    }

    /// P(g = x), the success probability of the channel.
    pub fn success_probability(&self) -> f64 {
        self.table[0][0] + self.table[1][1]
    }
}

/// Binary entropy H(p) in bits, with 0·log 0 = 0.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !p.is_finite() || !(-PROB_GUARD..=1.0 + PROB_GUARD).contains(&p) {
        return Err(CracError::contract(format!(
            "entropy argument {p} outside [0, 1]"
        )));
    }
    let p = p.clamp(0.0, 1.0);
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// I(x : g) = Σ p(x,g) log₂ p(x,g)/(p(x)p(g)), nonnegative.
pub fn mutual_information(j: &JointDistribution) -> f64 {
    let px = j.marginal_x();
    let pg = j.marginal_g();
    let mut i = 0.0;
    for (x, &px_x) in px.iter().enumerate() {
        for (g, &pg_g) in pg.iter().enumerate() {
            let p = j.cell(x, g);
            if p > 0.0 {
                i += p * (p / (px_x * pg_g)).log2();
            }
        }
    }
    debug_assert!(i > -1e-12, "mutual information {i} went negative");
    i.max(0.0)
}

/// The attenuation bound for a readout of bias ξ: information through the
/// chain is at most ξ² of the bit that went in.
pub fn evans_schulman_bound(xi: f64) -> Result<f64> {
    if !xi.is_finite() || !(-PROB_GUARD..=1.0 + PROB_GUARD).contains(&xi) {
        return Err(CracError::contract(format!("bias {xi} outside [0, 1]")));
    }
    let xi = xi.clamp(0.0, 1.0);
    Ok(xi * xi)
}

/// The channel biases ξ_A, ξ_B of one protocol configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasParameters {
    pub xi_a: f64,
    pub xi_b: f64,
}

impl BiasParameters {
    pub fn new(xi_a: f64, xi_b: f64) -> Result<Self> {
        for xi in [xi_a, xi_b] {
            if !xi.is_finite() || !(0.0..=1.0 + PROB_GUARD).contains(&xi) {
                return Err(CracError::contract(format!("bias {xi} outside [0, 1]")));
            }
        }
        Ok(BiasParameters { xi_a, xi_b })
    }

    pub fn xi_sq_sum(&self) -> f64 {
        self.xi_a * self.xi_a + self.xi_b * self.xi_b
    }
}

/// Per-channel and total information gain of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InformationGain {
    pub i_a: f64,
    pub i_b: f64,
    pub total: f64,
}

pub fn information_gain(stats: &ChannelStats) -> InformationGain {
    let i_a = mutual_information(&stats.joint_a);
    let i_b = mutual_information(&stats.joint_b);
    InformationGain {
        i_a,
        i_b,
        total: i_a + i_b,
    }
}

/// Margins of the information bounds for one run; every margin must be
/// ≥ −tolerance for the run to be conforming.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundLedger {
    /// ξ_A² − i_a
    pub margin_a: f64,
    /// ξ_B² − i_b
    pub margin_b: f64,
    /// (ξ_A² + ξ_B²) − total
    pub margin_total_vs_xi: f64,
    /// 1 − total
    pub margin_total_vs_one: f64,
    pub within_bounds: bool,
}

pub fn audit_bounds(gain: &InformationGain, bias: &BiasParameters, tol: f64) -> BoundLedger {
    let margin_a = bias.xi_a * bias.xi_a - gain.i_a;
    let margin_b = bias.xi_b * bias.xi_b - gain.i_b;
    let margin_total_vs_xi = bias.xi_sq_sum() - gain.total;
    let margin_total_vs_one = 1.0 - gain.total;
    let within_bounds = margin_a >= -tol
        && margin_b >= -tol
        && margin_total_vs_xi >= -tol
        && margin_total_vs_one >= -tol;
    BoundLedger {
        margin_a,
        margin_b,
        margin_total_vs_xi,
        margin_total_vs_one,
        within_bounds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bsc(success: f64) -> JointDistribution {
        JointDistribution::new([
            [success / 2.0, (1.0 - success) / 2.0],
            [(1.0 - success) / 2.0, success / 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn entropy_fixtures() {
        assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(0.0).unwrap(), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(binary_entropy(1.0).unwrap(), 0.0, epsilon = 0.0);
        // −0.75·log₂ 0.75 − 0.25·log₂ 0.25
        assert_abs_diff_eq!(binary_entropy(0.75).unwrap(), 0.811278, epsilon = 1e-6);
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn mutual_information_fixtures() {
        let perfect = JointDistribution::new([[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert_abs_diff_eq!(mutual_information(&perfect), 1.0, epsilon = 1e-12);
        let independent = JointDistribution::new([[0.25, 0.25], [0.25, 0.25]]).unwrap();
        assert_abs_diff_eq!(mutual_information(&independent), 0.0, epsilon = 1e-12);
        // Symmetric channel at success 3/4: I = 1 − H(3/4).
        assert_abs_diff_eq!(mutual_information(&bsc(0.75)), 0.188722, epsilon = 1e-6);
    }

    #[test]
    fn evans_schulman_fixtures() {
        assert_abs_diff_eq!(evans_schulman_bound(0.0).unwrap(), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(evans_schulman_bound(1.0).unwrap(), 1.0, epsilon = 0.0);
        let bound = evans_schulman_bound(0.5).unwrap();
        assert_abs_diff_eq!(bound, 0.25, epsilon = 0.0);
        let info = mutual_information(&bsc(0.75));
        assert!(info <= bound, "BSC(3/4) info {info} exceeds ξ² = {bound}");
        assert!(evans_schulman_bound(1.5).is_err());
    }

    /// The numeric witness of the attenuation bound on a fine grid:
    /// 1 − H((1+ξ)/2) ≤ ξ², equality only at the endpoints.
    #[test]
    fn attenuation_bound_holds_on_grid() {
        for k in 0..=1000 {
            let xi = k as f64 / 1000.0;
            let info = 1.0 - binary_entropy((1.0 + xi) / 2.0).unwrap();
            let margin = xi * xi - info;
            assert!(margin >= 0.0, "margin {margin} < 0 at ξ = {xi}");
            if k != 0 && k != 1000 {
                assert!(margin > 1e-9, "interior equality at ξ = {xi}");
            } else {
                assert!(margin < 1e-9);
            }
        }
    }

    #[test]
    fn joint_validation() {
        assert!(JointDistribution::new([[0.5, 0.5], [0.5, 0.5]]).is_err());
        assert!(JointDistribution::new([[-0.1, 0.6], [0.25, 0.25]]).is_err());
        assert!(JointDistribution::from_counts([[0, 0], [0, 0]]).is_err());
        let j = JointDistribution::from_counts([[3, 1], [1, 3]]).unwrap();
        assert_abs_diff_eq!(j.success_probability(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn bound_ledger_flags_violations() {
        let gain = InformationGain {
            i_a: 0.3,
            i_b: 0.0,
            total: 0.3,
        };
        let bias = BiasParameters::new(0.5, 0.0).unwrap();
        let ledger = audit_bounds(&gain, &bias, 1e-9);
        assert!(!ledger.within_bounds);
        assert!(ledger.margin_a < 0.0);
        let honest = InformationGain {
            i_a: 0.18,
            i_b: 0.0,
            total: 0.18,
        };
        assert!(audit_bounds(&honest, &bias, 1e-9).within_bounds);
    }

    proptest! {
        /// Relabeling x and/or g independently leaves I unchanged.
        #[test]
        fn relabel_invariance(
            a in 0.01..1.0f64,
            b in 0.01..1.0f64,
            c in 0.01..1.0f64,
            d in 0.01..1.0f64,
        ) {
            let raw = [[a, b], [c, d]];
            let sum: f64 = raw.iter().flatten().sum();
            let t = |x: usize, g: usize| raw[x][g] / sum;
            let j = JointDistribution::new([[t(0, 0), t(0, 1)], [t(1, 0), t(1, 1)]]).unwrap();
            let fx = JointDistribution::new([[t(1, 0), t(1, 1)], [t(0, 0), t(0, 1)]]).unwrap();
            let fg = JointDistribution::new([[t(0, 1), t(0, 0)], [t(1, 1), t(1, 0)]]).unwrap();
            let i = mutual_information(&j);
            prop_assert!((i - mutual_information(&fx)).abs() < 1e-12);
            prop_assert!((i - mutual_information(&fg)).abs() < 1e-12);
        }

        /// Entropy is symmetric and peaks at 1/2.
        #[test]
        fn entropy_shape(p in 0.0..=1.0f64) {
            let h = binary_entropy(p).unwrap();
            prop_assert!((h - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
        }
    }
}
