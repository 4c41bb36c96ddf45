//! Affine families of jets: a base point plus a span of directions.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germs::{Multigerm, MultigermJson};
use crate::jet::Rational;
use crate::linalg::{Echelon, SparseVec};
use crate::sampling::Sampler;

/// `{ base + Σ a_i d_i }`, with `a_i` ranging over a domain described by a
/// note and a list of excluded parameter values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineFamily {
    pub base: Multigerm,
    pub directions: Vec<Multigerm>,
    /// Whether parameters must be nonzero.
    pub nonzero: bool,
    /// Individual parameter values the family must avoid.
    pub excluded: Vec<Rational>,
    pub domain: String,
}

impl AffineFamily {
    pub fn new(base: Multigerm, directions: Vec<Multigerm>) -> Result<Self> {
        for d in &directions {
            if d.len() != base.len() || d.ambient_dim() != base.ambient_dim() {
                return Err(Error::Malformed(
                    "family directions must share the base's shape".into(),
                ));
            }
        }
        let directions = directions
            .into_iter()
            .map(|d| d.with_truncation(base.truncation()))
            .collect();
        Ok(AffineFamily {
            base,
            directions,
            nonzero: true,
            excluded: Vec::new(),
            domain: "all parameters nonzero".into(),
        })
    }

    pub fn point(base: Multigerm) -> Self {
        AffineFamily {
            base,
            directions: Vec::new(),
            nonzero: false,
            excluded: Vec::new(),
            domain: "single point".into(),
        }
    }

    /// Allow zero parameters.
    pub fn allowing_zero(mut self) -> Self {
        self.nonzero = false;
        self.domain = "all parameters".into();
        self
    }

    pub fn excluding(mut self, values: &[Rational], note: &str) -> Self {
        self.excluded.extend(values.iter().cloned());
        self.domain = note.to_string();
        self
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn components(&self) -> usize {
        self.base.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }

    pub fn direction_vectors(&self, m: u32) -> Vec<SparseVec> {
        self.directions.iter().map(|d| d.to_vector(m)).collect()
    }

    /// Refuse dependent directions at level `m`.
    pub fn check_independent(&self, m: u32) -> Result<()> {
        let dim = self.components() * self.ambient_dim() * m as usize;
        let mut e = Echelon::new(dim);
        for (i, v) in self.direction_vectors(m).into_iter().enumerate() {
            if e.insert(v).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "family direction {} depends on the previous ones at level {m}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn at(&self, params: &[Rational]) -> Result<Multigerm> {
        if params.len() != self.directions.len() {
            return Err(Error::DimensionMismatch {
                expected: self.directions.len(),
                got: params.len(),
            });
        }
        let mut x = self.base.clone();
        for (p, d) in params.iter().zip(&self.directions) {
            if !p.is_zero() {
                x = x.add(&d.scale(p))?;
            }
        }
        Ok(x)
    }

    pub fn admits(&self, value: &Rational) -> bool {
        !(self.nonzero && value.is_zero()) && !self.excluded.contains(value)
    }

    /// The parameter value used when collapsing a one-parameter family:
    /// 0 when admissible, else 1, else the first admissible small integer.
    pub fn canonical_value(&self) -> Rational {
        let mut v = Rational::zero();
        while !self.admits(&v) {
            v += Rational::one();
        }
        v
    }

    /// Seeded random admissible parameters.
    pub fn sample(&self, sampler: &mut Sampler) -> Vec<Rational> {
        (0..self.dim())
            .map(|_| loop {
                let v = sampler.signed_nonzero();
                if self.admits(&v) {
                    break v;
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> FamilyJson {
        FamilyJson {
            base: self.base.to_json(),
            directions: self.directions.iter().map(Multigerm::to_json).collect(),
            nonzero: self.nonzero,
            excluded: self.excluded.iter().map(|v| v.to_string()).collect(),
            domain: self.domain.clone(),
        }
    }

    pub fn from_json(json: &FamilyJson) -> Result<Self> {
        let base = Multigerm::from_json(&json.base)?;
        let directions = json
            .directions
            .iter()
            .map(Multigerm::from_json)
            .collect::<Result<Vec<_>>>()?;
        let mut fam = AffineFamily::new(base, directions)?;
        fam.nonzero = json.nonzero;
        fam.excluded = json
            .excluded
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<Rational>()
                    .map_err(|_| Error::Parse(format!("bad excluded value {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        fam.domain = json.domain.clone();
        Ok(fam)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: FamilyJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        AffineFamily::from_json(&json)
    }
}

/// Wire format for affine families.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub base: MultigermJson,
    #[serde(default)]
    pub directions: Vec<MultigermJson>,
    #[serde(default = "default_true")]
    pub nonzero: bool,
    #[serde(default)]
    pub excluded: Vec<String>,
    #[serde(default)]
    pub domain: String,
}

fn default_true() -> bool {
    true
}
