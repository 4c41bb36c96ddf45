//! Whole-table checks: every instance classifies back to itself, no rule
//! screen fires on it, its determinacy degree survives a transversal scan,
//! and fingerprints separate the instances of each part.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

use crate::catalog::{CatalogInstance, Fingerprint, Params};
use crate::classify::{rule_screens, verify_determinacy, ClassifyOptions, Classifier, Verdict, SCAN_AHEAD};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub samples: usize,
    /// Worker threads; results keep the input order regardless.
    #[serde(skip)]
    pub threads: usize,
}

impl VerifyOptions {
    pub fn new(seed: u64) -> Self {
        VerifyOptions {
            seed,
            samples: 3,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// `f` applied to every item on a pool of scoped threads, in input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut tagged: Vec<(usize, R)> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(item) = items.get(i) else { break };
                        out.push((i, f(item)));
                    }
                    out
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("worker panicked"))
            .collect()
    });
    tagged.sort_by_key(|(i, _)| *i);
    tagged.into_iter().map(|(_, r)| r).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceCheck {
    pub label: String,
    pub id: String,
    pub params: Params,
    pub weight: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub determinacy: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub determinacy_source: Option<&'static str>,
    /// The `SCAN_AHEAD` transversals above the degree are trivial.
    pub determinacy_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screen_fired: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    pub round_trip_ok: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Round trip, screens and determinacy scan for one instance, at the
/// smallest truncation its determinacy degree allows.
pub fn check_instance(cl: &Classifier<'_>, inst: &CatalogInstance, opts: &VerifyOptions) -> InstanceCheck {
    let mut check = InstanceCheck {
        label: inst.label(),
        id: inst.id.clone(),
        params: inst.params.clone(),
        weight: inst.weight,
        determinacy: None,
        determinacy_source: None,
        determinacy_ok: false,
        screen_fired: None,
        verdict: None,
        round_trip_ok: false,
        passed: false,
        error: None,
    };
    if let Err(e) = fill_check(cl, inst, opts, &mut check) {
        check.error = Some(e.to_string());
    }
    check.passed = check.error.is_none()
        && check.determinacy_ok
        && check.screen_fired.is_none()
        && check.round_trip_ok;
    check
}

fn fill_check(
    cl: &Classifier<'_>,
    inst: &CatalogInstance,
    opts: &VerifyOptions,
    check: &mut InstanceCheck,
) -> Result<()> {
    let Some((d, source)) = cl.required_level(inst)? else {
        check.error = Some("no determinacy degree found by the scan".into());
        return Ok(());
    };
    check.determinacy = Some(d);
    check.determinacy_source = Some(source);
    let germ = inst.germ.with_truncation(d + SCAN_AHEAD + 1);
    check.determinacy_ok = verify_determinacy(&germ, d, d + SCAN_AHEAD)?.necessary_ok;
    check.screen_fired = rule_screens(&germ).map(|h| h.rule.to_string());
    let mut copts = ClassifyOptions::new(d, opts.seed);
    copts.samples = opts.samples;
    let verdict = cl.classify(&germ, &copts)?.verdict;
    check.round_trip_ok = matches!(
        &verdict,
        Verdict::Simple { id, params } if *id == inst.id && *params == inst.params
    );
    check.verdict = Some(verdict);
    Ok(())
}

pub fn check_instances(
    cl: &Classifier<'_>,
    instances: &[CatalogInstance],
    opts: &VerifyOptions,
) -> Vec<InstanceCheck> {
    par_map(instances, opts.threads, |i| check_instance(cl, i, opts))
}

/// Two instances whose fingerprints agree at every depth tried.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tie {
    pub first: String,
    pub second: String,
    pub depth: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartDistinctness {
    pub part: String,
    pub instances: usize,
    /// Deepest orbit level that had to be computed to separate ties.
    pub depth_reached: u32,
    pub ties: Vec<Tie>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    pub passed: bool,
}

/// Compare fingerprints within each part, starting at `start_depth` and
/// deepening only the groups that still tie, up to `max_depth`.
pub fn fingerprint_distinctness(
    instances: &[CatalogInstance],
    start_depth: u32,
    max_depth: u32,
    threads: usize,
) -> Vec<PartDistinctness> {
    let mut parts: BTreeMap<String, Vec<&CatalogInstance>> = BTreeMap::new();
    for i in instances {
        let part = i.id.split('.').next().unwrap_or(&i.id).to_string();
        parts.entry(part).or_default().push(i);
    }
    parts
        .into_iter()
        .map(|(part, members)| part_distinctness(part, &members, start_depth, max_depth, threads))
        .collect()
}

fn part_distinctness(
    part: String,
    members: &[&CatalogInstance],
    start_depth: u32,
    max_depth: u32,
    threads: usize,
) -> PartDistinctness {
    let mut errors = Vec::new();
    let mut groups: Vec<Vec<&CatalogInstance>> = vec![members.to_vec()];
    let mut depth = start_depth;
    loop {
        let prints: Vec<Vec<Result<Fingerprint>>> = groups
            .iter()
            .map(|g| par_map(g, threads, |i| i.fingerprint(depth)))
            .collect();
        let mut next = Vec::new();
        for (g, fps) in groups.iter().zip(prints) {
            let mut by_print: BTreeMap<Fingerprint, Vec<&CatalogInstance>> = BTreeMap::new();
            for (i, fp) in g.iter().zip(fps) {
                match fp {
                    Ok(fp) => by_print.entry(fp).or_default().push(i),
                    Err(e) => errors.push(format!("{}: {e}", i.label())),
                }
            }
            next.extend(by_print.into_values().filter(|v| v.len() > 1));
        }
        groups = next;
        if groups.is_empty() || depth >= max_depth {
            break;
        }
        depth += 1;
    }
    let mut ties = Vec::new();
    for g in &groups {
        for (a, i) in g.iter().enumerate() {
            for j in &g[a + 1..] {
                ties.push(Tie {
                    first: i.label(),
                    second: j.label(),
                    depth,
                });
            }
        }
    }
    PartDistinctness {
        part,
        instances: members.len(),
        depth_reached: depth,
        passed: ties.is_empty() && errors.is_empty(),
        ties,
        errors,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EntryVerification {
    pub id: String,
    pub instances: Vec<InstanceCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CatalogVerification {
    pub weight_bound: u32,
    pub seed: u64,
    /// Number of entries checked in each part.
    pub entries_per_part: BTreeMap<String, usize>,
    pub instances_checked: usize,
    pub entries: Vec<EntryVerification>,
    pub distinctness: Vec<PartDistinctness>,
    pub passed: bool,
}

/// First fingerprint depth tried by [`verify_catalog`].
pub const START_DEPTH: u32 = 4;
/// Deepest fingerprint tried before a tie is reported.
pub const MAX_DEPTH: u32 = 12;

/// Check every entry whose id starts with `filter` at all instances of weight
/// at most `weight_bound`. Entries without such an instance are checked at
/// their smallest assignment instead and left out of the distinctness check.
pub fn verify_catalog(
    cl: &Classifier<'_>,
    weight_bound: u32,
    filter: Option<&str>,
    opts: &VerifyOptions,
) -> CatalogVerification {
    let matches = |id: &str| match filter {
        None => true,
        Some(f) => id == f || id.starts_with(&format!("{f}.")),
    };
    let mut plan: Vec<(String, Vec<CatalogInstance>, Option<String>)> = Vec::new();
    let mut weighted = Vec::new();
    let mut entries_per_part: BTreeMap<String, usize> = BTreeMap::new();
    for e in cl.catalog().entries().iter().filter(|e| matches(&e.id)) {
        *entries_per_part.entry(e.part().to_string()).or_default() += 1;
        let insts = e.enumerate(weight_bound);
        if insts.is_empty() {
            let fallback = e
                .smallest_assignments(1)
                .iter()
                .filter_map(|p| e.instantiate(p).ok())
                .collect();
            plan.push((
                e.id.clone(),
                fallback,
                Some(format!("no instance of weight <= {weight_bound}; smallest assignment used")),
            ));
        } else {
            weighted.extend(insts.iter().cloned());
            plan.push((e.id.clone(), insts, None));
        }
    }
    let all: Vec<CatalogInstance> = plan.iter().flat_map(|(_, v, _)| v.iter().cloned()).collect();
    let mut checks = check_instances(cl, &all, opts).into_iter();
    let entries: Vec<EntryVerification> = plan
        .into_iter()
        .map(|(id, insts, note)| {
            let instances: Vec<InstanceCheck> = checks.by_ref().take(insts.len()).collect();
            let passed = !instances.is_empty() && instances.iter().all(|c| c.passed);
            EntryVerification {
                id,
                instances,
                note,
                passed,
            }
        })
        .collect();
    let distinctness = fingerprint_distinctness(&weighted, START_DEPTH, MAX_DEPTH, opts.threads);
    let passed = entries.iter().all(|e| e.passed) && distinctness.iter().all(|d| d.passed);
    CatalogVerification {
        weight_bound,
        seed: opts.seed,
        entries_per_part,
        instances_checked: all.len(),
        entries,
        distinctness,
        passed,
    }
}
