//! Orbit membership for affine families via tangent containment and constant
//! orbit dimension, checked at seeded sample points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::AffineFamily;
use crate::germs::{Multigerm, MultigermJson};
use crate::sampling::Sampler;
use crate::tangent::{tangent_space, GroupFilter, JetSpaceBasis};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatherReport {
    pub level: u32,
    pub filter: GroupFilter,
    pub seed: u64,
    pub contained: bool,
    pub constant_rank: bool,
    pub ranks: Vec<usize>,
    /// Parameter values of each sample.
    pub samples: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_vector: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_sample: Option<usize>,
    pub domain: String,
    /// Always "evidence": sampling stands in for generic points.
    pub status: &'static str,
}

impl MatherReport {
    pub fn passed(&self) -> bool {
        self.contained && self.constant_rank
    }
}

pub fn mather_check(
    family: &AffineFamily,
    m: u32,
    filter: GroupFilter,
    samples: usize,
    seed: u64,
) -> Result<MatherReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument("at least 2 samples are required".into()));
    }
    family.check_independent(m)?;
    let basis = JetSpaceBasis::new(m, family.components(), family.ambient_dim());
    let dirs = family.direction_vectors(m);
    let mut sampler = Sampler::new(seed);
    let mut ranks = Vec::with_capacity(samples);
    let mut params_out = Vec::with_capacity(samples);
    let mut witness = None;
    for s in 0..samples {
        let params = family.sample(&mut sampler);
        let x = family.at(&params)?;
        let t = tangent_space(&x, m, filter)?;
        if witness.is_none() {
            if let Some(d) = dirs.iter().find(|d| !t.echelon().contains(d)) {
                witness = Some((s, basis.render(d)));
            }
        }
        ranks.push(t.rank());
        params_out.push(params.iter().map(|p| p.to_string()).collect());
    }
    let constant_rank = ranks.windows(2).all(|w| w[0] == w[1]);
    Ok(MatherReport {
        level: m,
        filter,
        seed,
        contained: witness.is_none(),
        constant_rank,
        ranks,
        samples: params_out,
        witness_sample: witness.as_ref().map(|w| w.0),
        witness_vector: witness.map(|w| w.1),
        domain: family.domain.clone(),
        status: "evidence",
    })
}

/// Result of trying to remove the parameter of a one-parameter family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MergeOutcome {
    Merged {
        value: String,
        jet: MultigermJson,
        report: MatherReport,
    },
    Refused {
        witness: String,
        report: MatherReport,
    },
}

impl MergeOutcome {
    pub fn merged(&self) -> Option<Multigerm> {
        match self {
            MergeOutcome::Merged { jet, .. } => Multigerm::from_json(jet).ok(),
            MergeOutcome::Refused { .. } => None,
        }
    }

    pub fn report(&self) -> &MatherReport {
        match self {
            MergeOutcome::Merged { report, .. } | MergeOutcome::Refused { report, .. } => report,
        }
    }
}

/// Collapse a one-parameter family onto its canonical parameter value when
/// the orbit conditions hold at every sample.
pub fn merge_parameter(
    family: &AffineFamily,
    m: u32,
    filter: GroupFilter,
    samples: usize,
    seed: u64,
) -> Result<MergeOutcome> {
    if family.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "merging needs a one-parameter family, got {} directions",
            family.dim()
        )));
    }
    let report = mather_check(family, m, filter, samples, seed)?;
    if report.passed() {
        let value = family.canonical_value();
        let jet = family.at(std::slice::from_ref(&value))?.with_truncation(m);
        Ok(MergeOutcome::Merged {
            value: value.to_string(),
            jet: jet.to_json(),
            report,
        })
    } else {
        let witness = match &report.witness_vector {
            Some(w) => w.clone(),
            None => format!("orbit ranks vary across samples: {:?}", report.ranks),
        };
        Ok(MergeOutcome::Refused { witness, report })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::int;

    fn mg(c: &[&[&str]], n: u32) -> Multigerm {
        Multigerm::parse(c, n).unwrap()
    }

    #[test]
    fn e6_like_parameter_is_removable() {
        let fam = AffineFamily::new(mg(&[&["t^3", "t^5 + t^6"]], 9), vec![mg(&[&["0", "t^9"]], 9)])
            .unwrap()
            .allowing_zero();
        let out = merge_parameter(&fam, 9, GroupFilter::FullA, 5, 42).unwrap();
        assert_eq!(out.merged().unwrap(), mg(&[&["t^3", "t^5 + t^6"]], 9));
    }

    #[test]
    fn cusp_pair_slope_is_a_modulus() {
        let fam = AffineFamily::new(
            mg(&[&["t^2", "t^3"], &["t^2", "0"]], 3),
            vec![mg(&[&["0", "0"], &["0", "t^3"]], 3)],
        )
        .unwrap()
        .excluding(&[int(0), int(1)], "alpha not in {0, 1}");
        let r = mather_check(&fam, 3, GroupFilter::FullA, 5, 42).unwrap();
        assert!(!r.contained);
        assert_eq!(r.witness_vector.as_deref(), Some("((0, 0), (0, t^3))"));
        assert!(matches!(
            merge_parameter(&fam, 3, GroupFilter::FullA, 5, 42).unwrap(),
            MergeOutcome::Refused { .. }
        ));
    }

    #[test]
    fn single_points_pass() {
        let fam = AffineFamily::point(Multigerm::axes(2, 3));
        let r = mather_check(&fam, 2, GroupFilter::FullA, 3, 1).unwrap();
        assert!(r.contained && r.constant_rank);
        assert!(mather_check(&fam, 2, GroupFilter::FullA, 1, 1).is_err());
    }
}
