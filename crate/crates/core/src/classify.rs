//! End-to-end recognition of multigerms against the catalog, and evidence of
//! non-simplicity when no normal form fits.
//!
//! A verdict is graded evidence, not a proof. `Simple` means that the input
//! shares every computed invariant with exactly one catalog instance (branch
//! semigroups, orbit dimensions, the transversal dimension at every level up to
//! the instance's determinacy degree) and that its own jet passes the same
//! determinacy scan. `NotSimpleEvidence` comes from a rule screen or from a
//! family of jets through the input whose generic points meet the orbit
//! tangent space in too few dimensions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::catalog::{branch_key, compare_ids, fingerprint, BranchKey, Catalog, CatalogInstance, Params};
use crate::error::{Error, Result};
use crate::family::AffineFamily;
use crate::germs::{ComponentGerm, Multigerm, MultigermJson, Separation};
use crate::jet::{int, Rational};
use crate::linalg::SparseVec;
use crate::sampling::Sampler;
use crate::tangent::{orbit_dim_sequence, 
    family_deficiency, intersection_dim, tangent_space, DeficiencyReport, DeficiencyVerdict,
    GroupFilter, JetSpaceBasis,
};
use crate::transversal::{complete_transversal, transversal_scan, Transversal, TransversalReport};

/// Levels scanned past a determinacy degree.
pub const SCAN_AHEAD: u32 = 4;
/// Depth of the orbit-dimension part of the fingerprint used for matching.
const ORBIT_DEPTH: u32 = 6;
/// Component matchings tried by the segment check.
const MAX_MATCHINGS: usize = 24;
/// How far past its largest exponent a determinacy degree is searched for.
const DETERMINACY_SEARCH: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClassifyOptions {
    /// Highest jet level the engine may rely on.
    pub max_level: u32,
    pub seed: u64,
    /// Sample points per tangent-space check.
    pub samples: usize,
}

impl ClassifyOptions {
    pub fn new(max_level: u32, seed: u64) -> Self {
        ClassifyOptions {
            max_level,
            seed,
            samples: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Simple { id: String, params: Params },
    NotSimpleEvidence { rule: String, witness: String },
    Unknown { reason: String },
}

impl Verdict {
    pub fn is_simple(&self) -> bool {
        matches!(self, Verdict::Simple { .. })
    }

    /// `id(params)` for simple verdicts.
    pub fn label(&self) -> Option<String> {
        match self {
            Verdict::Simple { id, params } if params.is_empty() => Some(id.clone()),
            Verdict::Simple { id, params } => Some(format!("{id}({params})")),
            _ => None,
        }
    }
}

/// One entry of the classification trail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    Embedding {
        ambient_dim: usize,
        embedding_dim: usize,
        kept_coordinates: Vec<usize>,
    },
    Separation {
        verified: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        pair: Option<(usize, usize)>,
    },
    Screens {
        #[serde(skip_serializing_if = "Option::is_none")]
        fired: Option<String>,
    },
    Invariants {
        components: usize,
        embedding_dim: usize,
        branches: Vec<BranchKey>,
    },
    Candidates {
        stage: &'static str,
        count: usize,
        labels: Vec<String>,
    },
    Determinacy {
        candidate: String,
        degree: u32,
        source: &'static str,
    },
    Budget {
        candidate: String,
        needed_level: u32,
    },
    Transversal {
        level: u32,
        dim: usize,
        basis: Vec<String>,
    },
    TrailComparison {
        candidate: String,
        through_level: u32,
        matched: bool,
    },
    Mather {
        candidate: String,
        merged: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        matching: Option<Vec<usize>>,
        ranks: Vec<usize>,
    },
    Tie {
        candidates: Vec<String>,
    },
    Deficiency {
        level: u32,
        dim_family: usize,
        max_intersection: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Effort {
    /// Highest transversal level computed for the input.
    pub levels_scanned: u32,
    /// Sample points evaluated by tangent-space checks.
    pub samples_used: usize,
    pub candidates_examined: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassificationReport {
    pub input: MultigermJson,
    pub max_level: u32,
    pub seed: u64,
    pub samples: usize,
    pub verdict: Verdict,
    pub trail: Vec<Step>,
    pub effort: Effort,
    /// Always "evidence".
    pub status: &'static str,
}

// ---------------------------------------------------------------------------
// Rule screens

/// A rule screen that fired, with a human-readable witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScreenHit {
    pub rule: &'static str,
    pub witness: String,
}

/// Projective class of the leading coefficient vector of a branch.
fn tangent_line(c: &ComponentGerm) -> Option<Vec<Rational>> {
    let p = c.order().finite()?;
    let v = c.coefficient_vector(p);
    let lead = v.iter().find(|x| !x.is_zero())?.clone();
    Some(v.into_iter().map(|x| x / &lead).collect())
}

fn distinct_lines<'a>(comps: impl Iterator<Item = &'a ComponentGerm>) -> usize {
    let mut lines: Vec<Vec<Rational>> = Vec::new();
    for l in comps.filter_map(tangent_line) {
        if !lines.contains(&l) {
            lines.push(l);
        }
    }
    lines.len()
}

/// Gcd of the exponents carrying nonzero coefficients.
fn exponent_gcd(c: &ComponentGerm) -> u32 {
    c.coords()
        .iter()
        .flat_map(|j| j.terms().map(|(e, _)| e).collect::<Vec<_>>())
        .fold(0, |g, e| g.gcd(&e))
}

/// Cheap obstructions, checked on a multigerm in its minimal embedding.
pub fn rule_screens(f: &Multigerm) -> Option<ScreenHit> {
    let n = f.ambient_dim();
    let singular: Vec<usize> = f
        .components()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.order().finite().is_some_and(|p| p >= 2))
        .map(|(i, _)| i + 1)
        .collect();
    if singular.len() >= 3 {
        return Some(ScreenHit {
            rule: "three-singular-components",
            witness: format!("components {singular:?} all have multiplicity at least 2"),
        });
    }
    if n == 2 {
        let lines = distinct_lines(f.components().iter());
        if lines >= 4 {
            return Some(ScreenHit {
                rule: "cross-ratio",
                witness: format!("{lines} distinct tangent lines in the plane carry a cross-ratio"),
            });
        }
    }
    if n >= 2 {
        let regular = f
            .components()
            .iter()
            .filter(|c| c.order().finite() == Some(1));
        let lines = distinct_lines(regular);
        if lines > n + 1 {
            return Some(ScreenHit {
                rule: "too-many-regular-branches",
                witness: format!(
                    "{lines} regular branches with distinct tangent lines in dimension {n} (at most {} allowed)",
                    n + 1
                ),
            });
        }
    }
    for (i, c) in f.components().iter().enumerate() {
        let g = exponent_gcd(c);
        if g > 1 {
            return Some(ScreenHit {
                rule: "non-primitive-branch",
                witness: format!(
                    "component {} is a series in t^{g} up to order {}, so the germ is not finitely determined",
                    i + 1,
                    f.truncation()
                ),
            });
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Determinacy evidence

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeterminacyEvidence {
    pub claimed: u32,
    pub scan_to: u32,
    /// Transversals at levels `claimed + 1..=scan_to` are all trivial.
    pub necessary_ok: bool,
    pub levels: Vec<TransversalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_nontrivial: Option<u32>,
    pub note: String,
}

/// Scan the fixed jet `j^d f` at levels `d + 1..=scan_to`.
pub fn verify_determinacy(f: &Multigerm, d: u32, scan_to: u32) -> Result<DeterminacyEvidence> {
    if d == 0 {
        return Err(Error::InvalidArgument("the claimed degree must be at least 1".into()));
    }
    if scan_to <= d {
        return Err(Error::InvalidArgument(format!(
            "scan_to ({scan_to}) must exceed the claimed degree ({d})"
        )));
    }
    let jet = f.jet_of(d)?;
    let scan = transversal_scan(&jet, d + 1, scan_to)?;
    let first_nontrivial = scan.iter().find(|t| !t.is_trivial()).map(|t| t.level);
    let note = match first_nontrivial {
        None => format!("verified through level {scan_to}"),
        Some(l) => format!("nontrivial transversal at level {l}"),
    };
    Ok(DeterminacyEvidence {
        claimed: d,
        scan_to,
        necessary_ok: first_nontrivial.is_none(),
        levels: scan.iter().map(Transversal::report).collect(),
        first_nontrivial,
        note,
    })
}

// ---------------------------------------------------------------------------
// Classification

struct Candidate {
    instance: CatalogInstance,
    /// The instance carried at the input's truncation.
    germ: Multigerm,
    /// Branch keys in component order.
    keys: Vec<BranchKey>,
    sorted_keys: Vec<BranchKey>,
}

impl Candidate {
    fn label(&self) -> String {
        self.instance.label()
    }
}

type Pool = Arc<Vec<Candidate>>;

/// Classifier over one catalog, caching candidate pools and determinacy
/// degrees across calls.
pub struct Classifier<'a> {
    catalog: &'a Catalog,
    pools: Mutex<HashMap<(u32, usize), Pool>>,
    degrees: Mutex<HashMap<String, Option<(u32, &'static str)>>>,
}

impl<'a> Classifier<'a> {
    pub fn new(catalog: &'a Catalog) -> Self {
        Classifier {
            catalog,
            pools: Mutex::new(HashMap::new()),
            degrees: Mutex::new(HashMap::new()),
        }
    }

    pub fn builtin() -> &'static Classifier<'static> {
        static CLASSIFIER: OnceLock<Classifier<'static>> = OnceLock::new();
        CLASSIFIER.get_or_init(|| Classifier::new(Catalog::builtin()))
    }

    pub fn catalog(&self) -> &Catalog {
        self.catalog
    }

    /// Catalog instances with `k` branches whose exponents fit in truncation `t`.
    fn pool(&self, t: u32, k: usize) -> Arc<Vec<Candidate>> {
        let mut pools = self.pools.lock().unwrap();
        pools
            .entry((t, k))
            .or_insert_with(|| {
                let mut out = Vec::new();
                for e in self.catalog.entries() {
                    for instance in e.instances_within(t, k) {
                        let germ = instance.germ.with_truncation(t);
                        let Ok(keys) = germ.components().iter().map(branch_key).collect::<Result<Vec<_>>>()
                        else {
                            continue;
                        };
                        let mut sorted_keys = keys.clone();
                        sorted_keys.sort();
                        out.push(Candidate {
                            instance,
                            germ,
                            keys,
                            sorted_keys,
                        });
                    }
                }
                Arc::new(out)
            })
            .clone()
    }

    /// Stated determinacy degree, or the smallest degree from the largest
    /// exponent on whose fixed jet the next levels are all trivial.
    fn determinacy(&self, inst: &CatalogInstance) -> Result<Option<(u32, &'static str)>> {
        let label = inst.label();
        if let Some(d) = self.degrees.lock().unwrap().get(&label) {
            return Ok(*d);
        }
        let found = match inst.determinacy {
            Some(d) => Some((d, "stated")),
            None => {
                let lo = inst.max_exponent.max(1);
                let mut found = None;
                for d in lo..=lo + DETERMINACY_SEARCH {
                    let g = inst.germ.with_truncation(d);
                    if verify_determinacy(&g, d, d + SCAN_AHEAD)?.necessary_ok {
                        found = Some((d, "scan"));
                        break;
                    }
                }
                found
            }
        };
        self.degrees.lock().unwrap().insert(label, found);
        Ok(found)
    }

    /// Determinacy degree used for a catalog instance, with its source
    /// (`"stated"` or `"scan"`); `None` when the scan found none.
    pub fn required_level(&self, inst: &CatalogInstance) -> Result<Option<(u32, &'static str)>> {
        self.determinacy(inst)
    }

    pub fn classify(&self, f: &Multigerm, opts: &ClassifyOptions) -> Result<ClassificationReport> {
        f.check_nondegenerate()?;
        if opts.max_level == 0 {
            return Err(Error::InvalidArgument("max_level must be at least 1".into()));
        }
        if f.truncation() < opts.max_level + 1 {
            return Err(Error::LevelTooHigh {
                level: opts.max_level + 1,
                truncation: f.truncation(),
            });
        }
        if opts.samples == 0 {
            return Err(Error::InvalidArgument("samples must be positive".into()));
        }
        let mut run = Run {
            trail: Vec::new(),
            effort: Effort::default(),
            input_scan: Vec::new(),
            input_ranks: Vec::new(),
        };
        let verdict = self.run(f, opts, &mut run)?;
        Ok(ClassificationReport {
            input: f.to_json(),
            max_level: opts.max_level,
            seed: opts.seed,
            samples: opts.samples,
            verdict,
            trail: run.trail,
            effort: run.effort,
            status: "evidence",
        })
    }

    fn run(&self, f: &Multigerm, opts: &ClassifyOptions, run: &mut Run) -> Result<Verdict> {
        let t = f.truncation();
        let (g, kept) = f.reduce_embedding();
        run.trail.push(Step::Embedding {
            ambient_dim: f.ambient_dim(),
            embedding_dim: g.ambient_dim(),
            kept_coordinates: kept,
        });
        let sep = g.separate_images_check();
        let pair = match sep {
            Separation::Verified => None,
            Separation::Unverified { pair } => Some(pair),
        };
        run.trail.push(Step::Separation {
            verified: pair.is_none(),
            pair,
        });
        if let Some((a, b)) = pair {
            return Ok(Verdict::Unknown {
                reason: format!(
                    "the images of components {a} and {b} could not be separated up to order {t}"
                ),
            });
        }
        if let Some(hit) = rule_screens(&g) {
            run.trail.push(Step::Screens {
                fired: Some(hit.rule.to_string()),
            });
            return Ok(Verdict::NotSimpleEvidence {
                rule: hit.rule.to_string(),
                witness: hit.witness,
            });
        }
        run.trail.push(Step::Screens { fired: None });

        let keys = g
            .components()
            .iter()
            .map(branch_key)
            .collect::<Result<Vec<_>>>()?;
        let mut sorted_keys = keys.clone();
        sorted_keys.sort();
        run.trail.push(Step::Invariants {
            components: g.len(),
            embedding_dim: g.ambient_dim(),
            branches: sorted_keys.clone(),
        });

        let pool = self.pool(t, g.len());
        let stage1: Vec<&Candidate> = pool
            .iter()
            .filter(|c| c.germ.ambient_dim() == g.ambient_dim() && c.sorted_keys == sorted_keys)
            .collect();
        run.effort.candidates_examined = stage1.len();
        run.trail.push(candidates_step("branch invariants", &stage1));

        let mut matched: Vec<(&Candidate, u32)> = Vec::new();
        let mut refused: Vec<(String, u32)> = Vec::new();
        if !stage1.is_empty() {
            let depth = ORBIT_DEPTH.min(t);
            let fp = fingerprint(&g, depth)?;
            let mut stage2 = Vec::new();
            for c in stage1 {
                if fingerprint(&c.germ, depth)? == fp {
                    stage2.push(c);
                }
            }
            run.trail.push(candidates_step("orbit dimensions", &stage2));
            for c in stage2 {
                let Some((d, source)) = self.determinacy(&c.instance)? else {
                    run.trail.push(Step::Budget {
                        candidate: c.label(),
                        needed_level: c.instance.max_exponent + DETERMINACY_SEARCH + 1,
                    });
                    refused.push((c.label(), c.instance.max_exponent + DETERMINACY_SEARCH + 1));
                    continue;
                };
                run.trail.push(Step::Determinacy {
                    candidate: c.label(),
                    degree: d,
                    source,
                });
                if d > opts.max_level {
                    run.trail.push(Step::Budget {
                        candidate: c.label(),
                        needed_level: d,
                    });
                    refused.push((c.label(), d));
                    continue;
                }
                let ok = self.trails_agree(&g, c, d, run)?;
                run.trail.push(Step::TrailComparison {
                    candidate: c.label(),
                    through_level: d + SCAN_AHEAD,
                    matched: ok,
                });
                if ok {
                    matched.push((c, d));
                }
            }
        }
        self.record_scan(run);

        if !matched.is_empty() {
            let mut ranked = Vec::new();
            for (c, d) in matched {
                let merged = segment_check(&g, &keys, c, d, opts, run)?;
                ranked.push((c, merged));
            }
            ranked.sort_by(|(a, ma), (b, mb)| {
                mb.cmp(ma)
                    .then_with(|| compare_ids(&a.instance.id, &b.instance.id))
                    .then_with(|| a.instance.params.cmp(&b.instance.params))
            });
            if ranked.len() > 1 {
                run.trail.push(Step::Tie {
                    candidates: ranked.iter().map(|(c, _)| c.label()).collect(),
                });
            }
            let best = &ranked[0].0.instance;
            return Ok(Verdict::Simple {
                id: best.id.clone(),
                params: best.params.clone(),
            });
        }
        if let Some((label, level)) = refused.first() {
            return Ok(Verdict::Unknown {
                reason: format!(
                    "candidate {label} needs level {level}, beyond max level {} or truncation {t}",
                    opts.max_level
                ),
            });
        }
        self.deficiency_search(&g, opts, run)
    }

    /// Compare orbit and transversal dimensions level by level through the
    /// candidate's determinacy degree, then check that the input's own `d`-jet has
    /// trivial transversals just as the candidate's does.
    fn trails_agree(&self, g: &Multigerm, c: &Candidate, d: u32, run: &mut Run) -> Result<bool> {
        run.extend_ranks(g, d)?;
        let theirs = orbit_dim_sequence(&c.germ, d)?;
        if run.input_ranks[..d as usize] != theirs[..] {
            return Ok(false);
        }
        if d >= 2 {
            run.extend_scan(g, d)?;
            let theirs = transversal_scan(&c.germ, 2, d)?;
            for (mine, theirs) in run.input_scan.iter().zip(&theirs) {
                if mine.dim() != theirs.dim() {
                    return Ok(false);
                }
            }
        }
        let ahead = verify_determinacy(g, d, d + SCAN_AHEAD)?;
        run.effort.levels_scanned = run.effort.levels_scanned.max(d + SCAN_AHEAD);
        Ok(ahead.necessary_ok)
    }

    fn record_scan(&self, run: &mut Run) {
        let steps: Vec<Step> = run
            .input_scan
            .iter()
            .map(|tr| Step::Transversal {
                level: tr.level,
                dim: tr.dim(),
                basis: tr.basis_strings(),
            })
            .collect();
        run.trail.extend(steps);
    }

    /// Look for a modulus in the family of jets obtained by adding the
    /// complete transversal at some level to the input's lower jet.
    fn deficiency_search(&self, g: &Multigerm, opts: &ClassifyOptions, run: &mut Run) -> Result<Verdict> {
        let top_mult = g.multiplicities()?.into_iter().max().unwrap_or(1);
        for level in (top_mult + 1).max(2)..=opts.max_level {
            let tr = complete_transversal(g, level - 1)?;
            run.effort.levels_scanned = run.effort.levels_scanned.max(level);
            if tr.is_trivial() {
                continue;
            }
            let base = g.jet_of(level - 1)?.with_truncation(level);
            let fam = AffineFamily::new(base, tr.basis())?;
            let report = family_deficiency(&fam, level, GroupFilter::FullA, opts.samples, opts.seed)?;
            run.effort.samples_used += opts.samples;
            run.trail.push(Step::Deficiency {
                level,
                dim_family: report.dim_family,
                max_intersection: report.max_intersection,
            });
            if report.verdict == DeficiencyVerdict::NotSimpleEvidence {
                return Ok(Verdict::NotSimpleEvidence {
                    rule: "transversal-family-deficiency".into(),
                    witness: format!(
                        "at level {level} the {}-dimensional transversal family through the {}-jet meets the orbit tangent space in at most {} dimensions",
                        report.dim_family,
                        level - 1,
                        report.max_intersection
                    ),
                });
            }
        }
        Ok(Verdict::Unknown {
            reason: format!(
                "no catalog normal form matches and no transversal family up to level {} shows a modulus",
                opts.max_level
            ),
        })
    }
}

struct Run {
    trail: Vec<Step>,
    effort: Effort,
    /// Transversals of the input at levels `2, 3, ...`.
    input_scan: Vec<Transversal>,
    /// Orbit tangent ranks of the input at levels `1, 2, ...`.
    input_ranks: Vec<usize>,
}

impl Run {
    fn extend_ranks(&mut self, g: &Multigerm, to: u32) -> Result<()> {
        for m in self.input_ranks.len() as u32 + 1..=to {
            self.input_ranks.push(tangent_space(g, m, GroupFilter::FullA)?.rank());
        }
        Ok(())
    }

    fn extend_scan(&mut self, g: &Multigerm, to: u32) -> Result<()> {
        let have = self.input_scan.len() as u32 + 1;
        if to > have {
            self.input_scan.extend(transversal_scan(g, have + 1, to)?);
        }
        self.effort.levels_scanned = self.effort.levels_scanned.max(to);
        Ok(())
    }
}

fn candidates_step(stage: &'static str, cands: &[&Candidate]) -> Step {
    Step::Candidates {
        stage,
        count: cands.len(),
        labels: cands.iter().map(|c| c.label()).collect(),
    }
}

/// Component matchings `p` with `keys[p[i]] == c.keys[i]`, at most `limit`.
fn matchings(keys: &[BranchKey], target: &[BranchKey], limit: usize) -> Vec<Vec<usize>> {
    fn go(
        keys: &[BranchKey],
        target: &[BranchKey],
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        if cur.len() == target.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..keys.len() {
            if !used[j] && keys[j] == target[cur.len()] {
                used[j] = true;
                cur.push(j);
                go(keys, target, used, cur, out, limit);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(keys, target, &mut vec![false; keys.len()], &mut Vec::new(), &mut out, limit);
    out
}

/// Whether the straight segment from the candidate's `d`-jet to the input's
/// (for some matching of components) stays in one orbit: the direction lies
/// in the orbit tangent space, with the same rank, at both ends and at
/// sampled interior points.
fn segment_check(
    g: &Multigerm,
    keys: &[BranchKey],
    c: &Candidate,
    d: u32,
    opts: &ClassifyOptions,
    run: &mut Run,
) -> Result<bool> {
    let base = c.germ.jet_of(d)?;
    let b = JetSpaceBasis::of(&base, d);
    let mut sampler = Sampler::new(opts.seed);
    let mut last_ranks = Vec::new();
    for p in matchings(keys, &c.keys, MAX_MATCHINGS) {
        let x = g.permute_components(&p).jet_of(d)?;
        let dir = x.to_vector(d).sub(&base.to_vector(d));
        if dir.is_zero() {
            run.trail.push(Step::Mather {
                candidate: c.label(),
                merged: true,
                matching: Some(p),
                ranks: Vec::new(),
            });
            return Ok(true);
        }
        let dir_germ = Multigerm::from_vector(&dir, b.components, b.ambient_dim, d);
        let mut params = vec![Rational::zero(), Rational::one()];
        params.extend((0..opts.samples).map(|_| sampler.signed_nonzero()));
        let mut ranks = Vec::new();
        let mut ok = true;
        for s in &params {
            let point = base.add(&dir_germ.scale(s))?;
            if point.check_nondegenerate().is_err() {
                ok = false;
                break;
            }
            let t = tangent_space(&point, d, GroupFilter::FullA)?;
            run.effort.samples_used += 1;
            ranks.push(t.rank());
            if intersection_dim(&t, std::slice::from_ref(&dir)) != 1 {
                ok = false;
                break;
            }
        }
        ok = ok && ranks.windows(2).all(|w| w[0] == w[1]);
        if ok {
            run.trail.push(Step::Mather {
                candidate: c.label(),
                merged: true,
                matching: Some(p),
                ranks,
            });
            return Ok(true);
        }
        last_ranks = ranks;
    }
    run.trail.push(Step::Mather {
        candidate: c.label(),
        merged: false,
        matching: None,
        ranks: last_ranks,
    });
    Ok(false)
}

/// Classify against the built-in catalog with default sampling.
pub fn classify(f: &Multigerm, max_level: u32, seed: u64) -> Result<ClassificationReport> {
    Classifier::builtin().classify(f, &ClassifyOptions::new(max_level, seed))
}

// ---------------------------------------------------------------------------
// Library of obstruction families

/// Upper bound on `dim(T_x X ∩ T_x(orbit))` at generic points of a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum IntersectionBound {
    AtMost(usize),
    LessThan(usize),
}

impl IntersectionBound {
    pub fn holds(&self, v: usize) -> bool {
        match *self {
            IntersectionBound::AtMost(b) => v <= b,
            IntersectionBound::LessThan(b) => v < b,
        }
    }
}

/// A named family of jets whose generic points carry a modulus.
#[derive(Clone, Debug)]
pub struct LibraryFamily {
    pub key: &'static str,
    pub description: &'static str,
    pub family: AffineFamily,
    pub level: u32,
    pub bound: IntersectionBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LibraryReplay {
    pub key: String,
    pub description: String,
    pub level: u32,
    pub dim_family: usize,
    pub bound: IntersectionBound,
    pub holds: bool,
    pub report: DeficiencyReport,
}

impl LibraryFamily {
    pub fn replay(&self, samples: usize, seed: u64) -> Result<LibraryReplay> {
        let report = family_deficiency(&self.family, self.level, GroupFilter::FullA, samples, seed)?;
        Ok(LibraryReplay {
            key: self.key.to_string(),
            description: self.description.to_string(),
            level: self.level,
            dim_family: self.family.dim(),
            bound: self.bound,
            holds: self.bound.holds(report.max_intersection),
            report,
        })
    }
}

/// Homogeneous directions `t^e` in coordinate `j` of component `i`.
fn units(k: usize, n: usize, level: u32, slots: &[(usize, usize, u32)]) -> Vec<Multigerm> {
    let b = JetSpaceBasis::new(level, k, n);
    slots
        .iter()
        .map(|&(i, j, e)| Multigerm::from_vector(&SparseVec::unit(b.index(i, j, e)), k, n, level))
        .collect()
}

/// Every `t^e`, `e` in `lo..=hi`, in coordinate `j` of component `i`.
fn span(i: usize, j: usize, lo: u32, hi: u32) -> Vec<(usize, usize, u32)> {
    (lo..=hi).map(|e| (i, j, e)).collect()
}

fn library_entry(
    key: &'static str,
    description: &'static str,
    base: &[&[&str]],
    level: u32,
    slots: Vec<(usize, usize, u32)>,
    bound: IntersectionBound,
) -> LibraryFamily {
    let base = Multigerm::parse(base, level).expect("library base parses");
    let dirs = units(base.len(), base.ambient_dim(), level, &slots);
    LibraryFamily {
        key,
        description,
        family: AffineFamily::new(base, dirs).expect("library directions fit the base"),
        level,
        bound,
    }
}

/// The obstruction families, each with its level and intersection bound.
pub fn nonsimple_library() -> Vec<LibraryFamily> {
    use IntersectionBound::*;
    let mut out = Vec::new();

    let mut s = span(1, 0, 3, 8);
    s.extend(span(1, 1, 6, 8));
    s.extend(span(1, 2, 7, 8));
    out.push(library_entry(
        "line+t3-t6-t7",
        "regular branch and a branch with 8-jet near (t^3, t^6, t^7)",
        &[&["t", "0", "0"], &["0", "0", "0"]],
        8,
        s,
        AtMost(10),
    ));

    let s = (0..3).flat_map(|j| span(1, j, 4, 7)).collect();
    out.push(library_entry(
        "line+quartic-7-jets",
        "regular branch and a branch whose 7-jet has order 4 in every coordinate",
        &[&["t", "0", "0"], &["0", "0", "0"]],
        7,
        s,
        AtMost(11),
    ));

    let mut s = span(1, 0, 8, 9);
    s.extend(span(1, 1, 5, 9));
    s.extend(span(1, 2, 6, 9));
    s.extend(span(1, 3, 7, 9));
    out.push(library_entry(
        "line+t8-t5-t6-t7",
        "regular branch and a branch with 9-jet near (t^8, t^5, t^6, t^7)",
        &[&["t", "0", "0", "0"], &["0", "0", "0", "0"]],
        9,
        s,
        LessThan(14),
    ));

    let mut fam = library_entry(
        "cusp-pair-slope",
        "two cusps (t^2, t^3) and (t^2, a t^3) with a != 0, 1, -1",
        &[&["t^2", "t^3"], &["t^2", "0"]],
        3,
        vec![(1, 1, 3)],
        AtMost(0),
    );
    fam.family = fam
        .family
        .excluding(&[int(0), int(1), int(-1)], "a not in {0, 1, -1}");
    out.push(fam);

    let mut fam = library_entry(
        "cusp+t5-t4-t3",
        "(t^2, t^3, 0) and (t^5, t^4 + a t^5, t^3)",
        &[&["t^2", "t^3", "0"], &["t^5", "t^4", "t^3"]],
        5,
        vec![(1, 1, 5)],
        AtMost(0),
    );
    fam.family = fam.family.allowing_zero();
    out.push(fam);

    let mut fam = library_entry(
        "line+parabola-pair",
        "(t, 0), (t, t^2) and (t, a t^2) with a != 0, 1",
        &[&["t", "0"], &["t", "t^2"], &["t", "0"]],
        2,
        vec![(2, 1, 2)],
        AtMost(0),
    );
    fam.family = fam.family.excluding(&[int(0), int(1)], "a not in {0, 1}");
    out.push(fam);

    let s = (0..3).flat_map(|j| span(3, j, 2, 3)).collect();
    out.push(library_entry(
        "axes3+conic-3-jets",
        "the three axes of C^3 and a branch with 3-jet a t^2 + b t^3 in every coordinate",
        &[&["t", "0", "0"], &["0", "t", "0"], &["0", "0", "t"], &["0", "0", "0"]],
        3,
        s,
        AtMost(5),
    ));

    let s = (0..3).flat_map(|j| span(2, j, 3, 5)).collect();
    out.push(library_entry(
        "axes2+cubic-5-jets",
        "two axes in C^3 and a branch with 5-jet of order 3 in every coordinate",
        &[&["t", "0", "0"], &["0", "t", "0"], &["0", "0", "0"]],
        5,
        s,
        AtMost(8),
    ));

    let s = (0..4).flat_map(|j| span(2, j, 4, 7)).collect();
    out.push(library_entry(
        "axes2+quartic-7-jets",
        "two axes in C^4 and a branch with 7-jet of order 4 in every coordinate",
        &[&["t", "0", "0", "0"], &["0", "t", "0", "0"], &["0", "0", "0", "0"]],
        7,
        s,
        AtMost(14),
    ));

    let s = (1..3)
        .flat_map(|i| (0..3).flat_map(move |j| span(i, j, 2, 3)))
        .collect();
    out.push(library_entry(
        "line+two-conic-3-jets",
        "regular branch and two branches with 3-jets a t^2 + b t^3 in every coordinate",
        &[&["t", "0", "0"], &["0", "0", "0"], &["0", "0", "0"]],
        3,
        s,
        AtMost(11),
    ));
    out
}

pub fn library_family(key: &str) -> Result<LibraryFamily> {
    nonsimple_library()
        .into_iter()
        .find(|f| f.key == key)
        .ok_or_else(|| {
            let keys: Vec<&str> = nonsimple_library().iter().map(|f| f.key).collect();
            Error::InvalidArgument(format!("unknown library family {key:?}; known: {}", keys.join(", ")))
        })
}
