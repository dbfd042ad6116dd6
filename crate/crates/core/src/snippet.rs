//! Snippet-focused subdominance.
//!
//! Both trajectories are cut into `N` prefix snippets of a common horizon `T`,
//! all starting at the first step and ending at `T/N, 2T/N, …, T`. For every
//! demonstration snippet the imitator snippet with the smallest subdominance is
//! kept, and the demonstration snippet whose best imitator response is worst is
//! selected (a max–min over the `N²` pairs).

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::features::CostFeatures;
use crate::subdom::{subdom_pair, HingeSlopes, SubdomConfig};

/// The selected snippet pair. Indices are prefix numbers in `0..N`; snippet `i`
/// covers steps `0..(i + 1) T / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnippetChoice {
    pub value: f64,
    pub imitator_snippet: usize,
    pub demo_snippet: usize,
    pub imitator_len: usize,
    pub demo_len: usize,
}

/// Cumulative feature totals at the `n` prefix boundaries.
pub fn prefix_totals(steps: &[CostFeatures], n: usize) -> Result<Vec<CostFeatures>> {
    let horizon = steps.len();
    if n == 0 || horizon < n {
        return Err(invalid!("horizon {horizon} cannot hold {n} snippets"));
    }
    if horizon % n != 0 {
        return Err(invalid!("snippet count {n} does not divide horizon {horizon}"));
    }
    let width = horizon / n;
    let mut out = Vec::with_capacity(n);
    let mut acc = CostFeatures::zeros(steps[0].dim());
    for (t, f) in steps.iter().enumerate() {
        if f.dim() != acc.dim() {
            return Err(invalid!("feature dimension mismatch inside trajectory"));
        }
        acc.add_assign(f);
        if (t + 1) % width == 0 {
            out.push(acc.clone());
        }
    }
    Ok(out)
}

/// Max–min snippet subdominance between an imitator and a demonstration segment
/// of equal length.
pub fn snippet_subdom(
    imitator: &[CostFeatures],
    demo: &[CostFeatures],
    slopes: &HingeSlopes,
    n_snippets: usize,
    cfg: &SubdomConfig,
) -> Result<SnippetChoice> {
    if imitator.len() != demo.len() {
        return Err(invalid!(
            "snippet horizons differ: imitator {} vs demonstration {}",
            imitator.len(),
            demo.len()
        ));
    }
    let imit = prefix_totals(imitator, n_snippets)?;
    let dem = prefix_totals(demo, n_snippets)?;
    let width = imitator.len() / n_snippets;

    let mut best: Option<SnippetChoice> = None;
    for (d, fd) in dem.iter().enumerate() {
        let mut response: Option<(usize, f64)> = None;
        for (i, fi) in imit.iter().enumerate() {
            let v = subdom_pair(fi, fd, slopes, cfg)?;
            if response.is_none_or(|(_, r)| v < r) {
                response = Some((i, v));
            }
        }
        let (i, v) = response.expect("at least one snippet");
        if best.is_none_or(|b| v > b.value) {
            best = Some(SnippetChoice {
                value: v,
                imitator_snippet: i,
                demo_snippet: d,
                imitator_len: (i + 1) * width,
                demo_len: (d + 1) * width,
            });
        }
    }
    Ok(best.expect("at least one snippet"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn seq(v: &[f64]) -> Vec<CostFeatures> {
        v.iter().map(|x| CostFeatures::new(vec![*x]).unwrap()).collect()
    }

    #[test]
    fn hand_enumerated_example() {
        let s = HingeSlopes::new(vec![1.0], 0.0).unwrap();
        let c = snippet_subdom(&seq(&[1.0; 4]), &seq(&[3.0, 0.0, 0.0, 0.0]), &s, 2, &SubdomConfig::default()).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.imitator_snippet, 0);
        assert_eq!(c.imitator_len, 2);
    }

    #[test]
    fn identical_trajectories_keep_unit_margin() {
        let s = HingeSlopes::new(vec![1.0], 0.0).unwrap();
        let t = seq(&[0.5, 1.5, 0.25, 2.0, 0.0, 1.0]);
        let c = snippet_subdom(&t, &t, &s, 3, &SubdomConfig::default()).unwrap();
        assert_eq!(c.value, 1.0);
    }

    #[test]
    fn dominant_imitator_scores_zero() {
        let s = HingeSlopes::new(vec![1.0], 0.0).unwrap();
        let c = snippet_subdom(&seq(&[0.0; 6]), &seq(&[2.0; 6]), &s, 3, &SubdomConfig::default()).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn rejects_bad_horizons() {
        let s = HingeSlopes::new(vec![1.0], 0.0).unwrap();
        let cfg = SubdomConfig::default();
        assert!(snippet_subdom(&seq(&[1.0; 3]), &seq(&[1.0; 3]), &s, 4, &cfg).is_err());
        assert!(snippet_subdom(&seq(&[1.0; 5]), &seq(&[1.0; 5]), &s, 2, &cfg).is_err());
        assert!(snippet_subdom(&seq(&[1.0; 4]), &seq(&[1.0; 6]), &s, 2, &cfg).is_err());
    }
}
