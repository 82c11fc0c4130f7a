//! Staged exact solver: exclusion fixpoint, fixed-share assignment, base
//! adjustment (inflation or proportional return), and integer base
//! correction so every heir's allotment is a whole count of units.

pub mod profile;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{
    Adjustment, BlockedHeir, CaseCategory, CaseInput, EligibleHeir, HeirKind,
    HeirKind::*, InputViolation, PostTasil, ShareBasis, SolvedCase, TraceRecord, TraceStage,
};
use crate::rational::{gcd_u64, lcm_of_dens, lcm_u64, Frac, RationalError};
use profile::RuleProfile;

/// Failures while solving a case.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid case input: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidInput(Vec<InputViolation>),
    #[error("heir kind `{kind}` is not in the profile roster")]
    UnknownHeir { kind: HeirKind },
    #[error("exclusion rules did not reach a fixpoint")]
    BlockingDidNotConverge,
    #[error("no eligible heirs remain after exclusion")]
    NoEligibleHeirs,
    #[error(transparent)]
    Arithmetic(#[from] RationalError),
}

/// The residuary line for one case: member kinds with their per-head weights
/// (two for males sharing with females, one otherwise).
#[derive(Debug, Clone)]
pub struct ResiduaryTake {
    pub members: Vec<(HeirKind, u32)>,
    /// The member also holds a fixed share (father or grandfather with a
    /// female descendant).
    pub with_fard: bool,
}

/// One awarded fixed share with the rule label that granted it.
#[derive(Debug, Clone)]
pub struct FardGrant {
    pub share: Frac,
    pub label: String,
}

/// Output of the share-assignment stage, before base adjustment.
#[derive(Debug, Clone)]
pub struct ShareAssignment {
    pub counts: BTreeMap<HeirKind, u32>,
    pub fards: BTreeMap<HeirKind, FardGrant>,
    pub taker: Option<ResiduaryTake>,
}

impl ShareAssignment {
    fn in_taker(&self, kind: HeirKind) -> bool {
        self.taker
            .as_ref()
            .is_some_and(|t| t.members.iter().any(|&(m, _)| m == kind))
    }
}

/// Applies the profile's exclusion rules to a fixpoint, returning the
/// eligible kinds with their counts and the excluded heirs with reasons.
///
/// Each round re-derives the excluded set from the previous round's eligible
/// set, so an heir excluded by rule cannot exclude others. The default rule
/// table is stratified (descendants > ascendants > siblings), so the loop
/// settles within one pass per rule; the bound exists to fail loudly on a
/// miswritten profile rather than spin.
pub fn determine_blocking(
    input: &CaseInput,
    profile: &RuleProfile,
) -> Result<(BTreeMap<HeirKind, u32>, Vec<BlockedHeir>), SolverError> {
    let mut present: BTreeMap<HeirKind, u32> = BTreeMap::new();
    for (&kind, &count) in &input.heirs {
        if !profile.roster.contains(&kind) {
            return Err(SolverError::UnknownHeir { kind });
        }
        if count > 0 {
            present.insert(kind, count);
        }
    }

    let mut blocked: BTreeMap<HeirKind, String> = BTreeMap::new();
    for _ in 0..=profile.blocking.len() + 1 {
        let mut next: BTreeMap<HeirKind, String> = BTreeMap::new();
        {
            let eligible = |k: HeirKind| present.contains_key(&k) && !blocked.contains_key(&k);
            for rule in &profile.blocking {
                if present.get(&rule.blocker).copied().unwrap_or(0) < rule.min_count
                    || blocked.contains_key(&rule.blocker)
                    || !present.contains_key(&rule.blocked)
                {
                    continue;
                }
                if !rule.requires_any.is_empty() && !rule.requires_any.iter().any(|&k| eligible(k))
                {
                    continue;
                }
                if rule.unless_any.iter().any(|&k| eligible(k)) {
                    continue;
                }
                next.entry(rule.blocked)
                    .or_insert_with(|| rule.reason.clone());
            }
        }
        if next == blocked {
            let eligible = present
                .iter()
                .filter(|(k, _)| !blocked.contains_key(k))
                .map(|(&k, &c)| (k, c))
                .collect();
            let blocked_list = blocked
                .into_iter()
                .map(|(kind, reason)| BlockedHeir { kind, reason })
                .collect();
            return Ok((eligible, blocked_list));
        }
        blocked = next;
    }
    Err(SolverError::BlockingDidNotConverge)
}

/// Awards fixed shares and selects the residuary line for the eligible heirs.
///
/// The original input is consulted for counts that matter even when the heirs
/// in question are excluded: the mother's reduction counts all siblings of
/// the deceased, inheriting or not.
pub fn assign_shares(
    eligible: &BTreeMap<HeirKind, u32>,
    input: &CaseInput,
    profile: &RuleProfile,
) -> ShareAssignment {
    let has = |k: HeirKind| eligible.contains_key(&k);
    let count = |k: HeirKind| eligible.get(&k).copied().unwrap_or(0);
    let has_desc = eligible.keys().any(|k| k.is_descendant());
    let has_female_desc = has(Daughter) || has(SonsDaughter);
    let input_siblings: u32 = input
        .heirs
        .iter()
        .filter(|(k, _)| k.is_sibling())
        .map(|(_, &c)| c)
        .sum();

    let mut taker: Option<ResiduaryTake> = None;
    for class in &profile.residuary {
        if let Some(m) = class.male {
            if has(m) {
                let mut members = vec![(m, 2u32)];
                if let Some(f) = class.female {
                    if has(f) {
                        members.push((f, 1));
                    }
                }
                let with_fard = matches!(m, Father | PaternalGrandfather) && has_desc;
                taker = Some(ResiduaryTake { members, with_fard });
                break;
            }
        } else if let Some(f) = class.female {
            if class.female_with_descendants && has(f) && has_female_desc {
                taker = Some(ResiduaryTake { members: vec![(f, 1)], with_fard: false });
                break;
            }
        }
    }

    let spouse_kind = if has(Husband) {
        Some(Husband)
    } else if has(Wife) {
        Some(Wife)
    } else {
        None
    };
    // Mother's third of the remainder: heirs are exactly one spouse and both
    // parents, and the deceased left fewer than two siblings of any relation.
    let umariyya = profile.umariyya
        && eligible.len() == 3
        && spouse_kind.is_some()
        && has(Father)
        && has(Mother)
        && input_siblings < 2;

    let maternal_total = count(MaternalHalfBrother) + count(MaternalHalfSister);
    let grandmother_kinds =
        u32::from(has(PaternalGrandmother)) + u32::from(has(MaternalGrandmother));

    let s = &profile.shares;
    let mut fards: BTreeMap<HeirKind, FardGrant> = BTreeMap::new();
    let taker_with_fard = taker.as_ref().is_some_and(|t| t.with_fard);
    let in_taker = |k: HeirKind| {
        taker
            .as_ref()
            .is_some_and(|t| t.members.iter().any(|&(m, _)| m == k))
    };

    for (&kind, &n) in eligible {
        if in_taker(kind) && !(taker_with_fard && matches!(kind, Father | PaternalGrandfather)) {
            continue;
        }
        let (share, label): (Frac, String) = match kind {
            Husband => {
                if has_desc {
                    (s.husband_with_descendant, "husband's quarter alongside a descendant".into())
                } else {
                    (s.husband_no_descendant, "husband's half with no descendant".into())
                }
            }
            Wife => {
                if has_desc {
                    (s.wife_with_descendant, "wives' eighth alongside a descendant".into())
                } else {
                    (s.wife_no_descendant, "wives' quarter with no descendant".into())
                }
            }
            Father | PaternalGrandfather => (
                s.parent_with_descendant,
                format!("{kind}'s sixth alongside a descendant"),
            ),
            Mother => {
                if umariyya {
                    let spouse_fard = if spouse_kind == Some(Husband) {
                        s.husband_no_descendant
                    } else {
                        s.wife_no_descendant
                    };
                    (
                        (Frac::ONE - spouse_fard) * s.mother_base,
                        "mother's third of the remainder after the spouse".into(),
                    )
                } else if has_desc || input_siblings >= 2 {
                    (
                        s.mother_reduced,
                        "mother's sixth (descendant or plural siblings)".into(),
                    )
                } else {
                    (s.mother_base, "mother's third".into())
                }
            }
            PaternalGrandmother | MaternalGrandmother => (
                s.grandmother / Frac::from_int(grandmother_kinds as i64),
                "grandmothers' sixth shared equally".into(),
            ),
            Daughter => {
                if n == 1 {
                    (s.single_female, "daughter's half".into())
                } else {
                    (s.plural_female, "daughters' two thirds".into())
                }
            }
            SonsDaughter => {
                if !has(Daughter) {
                    if n == 1 {
                        (s.single_female, "son's daughter's half".into())
                    } else {
                        (s.plural_female, "son's daughters' two thirds".into())
                    }
                } else if count(Daughter) == 1 {
                    (
                        s.completion,
                        "son's daughter's sixth completing the two thirds".into(),
                    )
                } else {
                    unreachable!("son's daughter alongside two daughters must be excluded")
                }
            }
            FullSister => {
                if n == 1 {
                    (s.single_female, "full sister's half".into())
                } else {
                    (s.plural_female, "full sisters' two thirds".into())
                }
            }
            PaternalHalfSister => {
                if !has(FullSister) {
                    if n == 1 {
                        (s.single_female, "paternal half sister's half".into())
                    } else {
                        (s.plural_female, "paternal half sisters' two thirds".into())
                    }
                } else if count(FullSister) == 1 {
                    (
                        s.completion,
                        "paternal half sister's sixth completing the two thirds".into(),
                    )
                } else {
                    unreachable!("paternal half sister alongside two full sisters must be excluded")
                }
            }
            MaternalHalfBrother | MaternalHalfSister => {
                let total_fard = if maternal_total == 1 {
                    s.maternal_single
                } else {
                    s.maternal_plural
                };
                let slice = total_fard * Frac::from_int(n as i64)
                    / Frac::from_int(maternal_total as i64);
                (slice, "maternal siblings' share divided equally per head".into())
            }
            Son | SonsSon | FullBrother | PaternalHalfBrother => {
                unreachable!("male residuary kinds always join the residuary line when eligible")
            }
        };
        fards.insert(kind, FardGrant { share, label });
    }

    ShareAssignment { counts: eligible.clone(), fards, taker }
}

/// Collapses jointly held shares before base computation: maternal siblings
/// hold their third (or sixth) as a single share, and co-present grandmothers
/// hold their sixth as a single share. The per-head split of those pools only
/// matters at the integer-correction stage, so bases must be computed from
/// the pooled values or they come out needlessly large.
fn pooled(values: impl Iterator<Item = (HeirKind, Frac)>) -> Vec<Frac> {
    let mut maternal = Frac::ZERO;
    let mut grandmothers = Frac::ZERO;
    let mut out = Vec::new();
    for (kind, value) in values {
        match kind {
            MaternalHalfBrother | MaternalHalfSister => maternal = maternal + value,
            PaternalGrandmother | MaternalGrandmother => grandmothers = grandmothers + value,
            _ => out.push(value),
        }
    }
    if !maternal.is_zero() {
        out.push(maternal);
    }
    if !grandmothers.is_zero() {
        out.push(grandmothers);
    }
    out
}

/// Head and unit counts for the residuary line: weighted two-to-one when
/// males and females share, plain heads otherwise.
fn taker_units(taker: &ResiduaryTake, counts: &BTreeMap<HeirKind, u32>) -> u64 {
    if taker.members.len() == 1 {
        let (kind, _) = taker.members[0];
        counts.get(&kind).copied().unwrap_or(0) as u64
    } else {
        taker
            .members
            .iter()
            .map(|&(kind, w)| w as u64 * counts.get(&kind).copied().unwrap_or(0) as u64)
            .sum()
    }
}

/// Resolves the fixed shares and residue into final group shares summing to
/// one, classifying the case as simple, base inflation, or return.
/// Also returns a one-line explanation for the trace.
pub fn compute_adjustment(
    assign: &ShareAssignment,
    profile: &RuleProfile,
) -> Result<(Adjustment, BTreeMap<HeirKind, Frac>, String), SolverError> {
    let fard_sum: Frac = assign.fards.values().map(|g| g.share).sum();
    let residue = Frac::ONE - fard_sum;

    let fard_shares = pooled(assign.fards.iter().map(|(&k, g)| (k, g.share)));
    let original_base = if fard_shares.is_empty() {
        match &assign.taker {
            Some(t) => taker_units(t, &assign.counts).max(1),
            None => return Err(SolverError::NoEligibleHeirs),
        }
    } else {
        lcm_of_dens(&fard_shares)?
    };

    let mut shares: BTreeMap<HeirKind, Frac> =
        assign.fards.iter().map(|(&k, g)| (k, g.share)).collect();

    let (kind, adjusted_base, note) = match &assign.taker {
        Some(taker) if residue > Frac::ZERO => {
            let weighted: Vec<(HeirKind, u64)> = taker
                .members
                .iter()
                .map(|&(k, w)| {
                    let c = assign.counts.get(&k).copied().unwrap_or(0) as u64;
                    (k, if taker.members.len() == 1 { c } else { w as u64 * c })
                })
                .collect();
            let total: u64 = weighted.iter().map(|&(_, u)| u).sum();
            for (k, u) in weighted {
                let part = residue * Frac::new(u as i64, total as i64)?;
                let entry = shares.entry(k).or_insert(Frac::ZERO);
                *entry = *entry + part;
            }
            let note = if fard_sum.is_zero() {
                "no fixed shares; the whole estate passes to the residuary line".to_string()
            } else {
                format!("fixed shares total {fard_sum}; residue {residue} passes to the residuary line")
            };
            (CaseCategory::Simple, original_base, note)
        }
        Some(taker) => {
            // Residue is zero or negative: residuary members stay eligible
            // with nothing to take.
            for &(k, _) in &taker.members {
                shares.entry(k).or_insert(Frac::ZERO);
            }
            if residue.is_zero() {
                (
                    CaseCategory::Simple,
                    original_base,
                    "fixed shares exactly exhaust the estate; the residuary line takes nothing"
                        .to_string(),
                )
            } else {
                let adjusted = inflate(&mut shares, &assign.fards, original_base)?;
                (
                    CaseCategory::Awl,
                    adjusted,
                    format!(
                        "fixed shares total {fard_sum}, exceeding the whole; base inflated from {original_base} to {adjusted}"
                    ),
                )
            }
        }
        None if residue.is_zero() => (
            CaseCategory::Simple,
            original_base,
            "fixed shares exactly exhaust the estate".to_string(),
        ),
        None if residue > Frac::ZERO => {
            let spouse: Option<(HeirKind, Frac)> = [Husband, Wife]
                .into_iter()
                .find_map(|k| assign.fards.get(&k).map(|g| (k, g.share)));
            match (profile.radd_excludes_spouse, spouse) {
                (true, Some((spouse_kind, spouse_share))) => {
                    let others_sum = fard_sum - spouse_share;
                    if others_sum.is_zero() {
                        // No other sharer exists to receive the surplus; it
                        // returns to the spouse so the estate stays whole.
                        shares.insert(spouse_kind, Frac::ONE);
                    } else {
                        let scale = (Frac::ONE - spouse_share).try_div(others_sum)?;
                        for (&k, v) in shares.iter_mut() {
                            if k != spouse_kind {
                                *v = *v * scale;
                            }
                        }
                    }
                }
                _ => {
                    let scale = Frac::ONE.try_div(fard_sum)?;
                    for v in shares.values_mut() {
                        *v = *v * scale;
                    }
                }
            }
            let adjusted = lcm_of_dens(&pooled(shares.iter().map(|(&k, &v)| (k, v))))?;
            (
                CaseCategory::Radd,
                adjusted,
                format!(
                    "fixed shares total {fard_sum}; surplus returned pro rata to the sharers{}; base adjusted from {original_base} to {adjusted}",
                    if profile.radd_excludes_spouse && spouse.is_some() {
                        " (spouse keeps the fixed share)"
                    } else {
                        ""
                    }
                ),
            )
        }
        None => {
            let adjusted = inflate(&mut shares, &assign.fards, original_base)?;
            (
                CaseCategory::Awl,
                adjusted,
                format!(
                    "fixed shares total {fard_sum}, exceeding the whole; base inflated from {original_base} to {adjusted}"
                ),
            )
        }
    };

    let total: Frac = shares.values().copied().sum();
    assert_eq!(total, Frac::ONE, "group shares must sum to one");

    Ok((
        Adjustment { kind, original_base, adjusted_base },
        shares,
        note,
    ))
}

/// Base inflation: the fixed shares' units over the original base sum past
/// it, and that sum becomes the adjusted base. Every fixed share is rescaled
/// by original/adjusted so proportions are kept; residuary members get zero.
fn inflate(
    shares: &mut BTreeMap<HeirKind, Frac>,
    fards: &BTreeMap<HeirKind, FardGrant>,
    original_base: u64,
) -> Result<u64, SolverError> {
    let fard_sum: Frac = fards.values().map(|g| g.share).sum();
    let units = fard_sum * Frac::from_int(original_base as i64);
    debug_assert_eq!(units.denom(), 1, "the base must clear the pooled share denominators");
    let total = units.numer();
    let scale = Frac::new(original_base as i64, total)?;
    for (k, v) in shares.iter_mut() {
        *v = match fards.get(k) {
            Some(g) => g.share * scale,
            None => Frac::ZERO,
        };
    }
    Ok(total as u64)
}

/// Finds the minimal integer base on which every group's allotment is a
/// whole number divisible by its head count, and the per-head percentages.
pub fn tasil(
    shares: &BTreeMap<HeirKind, Frac>,
    counts: &BTreeMap<HeirKind, u32>,
) -> Result<(u64, BTreeMap<HeirKind, PostTasil>), SolverError> {
    if shares.is_empty() {
        return Err(SolverError::NoEligibleHeirs);
    }
    let values: Vec<Frac> = shares.values().copied().collect();
    let b0 = lcm_of_dens(&values)?;
    let mut factor: u64 = 1;
    for (kind, share) in shares {
        let count = counts.get(kind).copied().unwrap_or(1).max(1) as u64;
        let units = *share * Frac::from_int(b0 as i64);
        debug_assert_eq!(units.denom(), 1);
        let siham = units.numer() as u64;
        if siham > 0 && count > 1 {
            factor = lcm_u64(factor, count / gcd_u64(siham, count))?;
        }
    }
    let final_base = b0.checked_mul(factor).ok_or(RationalError::Overflow)?;

    let mut post = BTreeMap::new();
    let mut allotted: u64 = 0;
    for (&kind, share) in shares {
        let count = counts.get(&kind).copied().unwrap_or(1).max(1);
        let units = *share * Frac::from_int(final_base as i64);
        debug_assert_eq!(units.denom(), 1);
        let siham = units.numer() as u64;
        allotted += siham;
        let percent = *share * Frac::from_int(100) / Frac::from_int(count as i64);
        post.insert(kind, PostTasil { siham, percent, count });
    }
    debug_assert_eq!(allotted, final_base, "allotments must exhaust the base");
    Ok((final_base, post))
}

/// Solves one case end to end, producing the full record with a stage trace.
pub fn solve_case(input: &CaseInput, profile: &RuleProfile) -> Result<SolvedCase, SolverError> {
    let violations = input.validate();
    if !violations.is_empty() {
        return Err(SolverError::InvalidInput(violations));
    }

    let (eligible_counts, blocked) = determine_blocking(input, profile)?;
    if eligible_counts.is_empty() {
        return Err(SolverError::NoEligibleHeirs);
    }
    let assignment = assign_shares(&eligible_counts, input, profile);
    let (adjustment, shares, adjustment_note) = compute_adjustment(&assignment, profile)?;
    let (final_base, post_tasil) = tasil(&shares, &eligible_counts)?;

    let mut trace = Vec::with_capacity(4);
    trace.push(TraceRecord {
        stage: TraceStage::Blocking,
        detail: if blocked.is_empty() {
            "no heir is excluded".to_string()
        } else {
            blocked
                .iter()
                .map(|b| format!("{} {}", b.kind, b.reason))
                .collect::<Vec<_>>()
                .join("; ")
        },
    });
    let mut share_parts: Vec<String> = assignment
        .fards
        .iter()
        .map(|(k, g)| format!("{k} takes {} ({})", g.share, g.label))
        .collect();
    if let Some(t) = &assignment.taker {
        let names: Vec<String> = t.members.iter().map(|&(k, _)| k.to_string()).collect();
        share_parts.push(format!("{} take the residue as residuary heirs", names.join(" and ")));
    }
    trace.push(TraceRecord { stage: TraceStage::Shares, detail: share_parts.join("; ") });
    trace.push(TraceRecord { stage: TraceStage::Adjustment, detail: adjustment_note });
    trace.push(TraceRecord {
        stage: TraceStage::Tasil,
        detail: format!(
            "final base {final_base}: {}",
            post_tasil
                .iter()
                .map(|(k, p)| format!("{k} {} ({} heads)", p.siham, p.count))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    });

    let eligible = eligible_counts
        .iter()
        .map(|(&kind, &count)| {
            let has_fard = assignment.fards.contains_key(&kind);
            let in_taker = assignment.in_taker(kind);
            let basis = match (has_fard, in_taker) {
                (true, true) => ShareBasis::FixedResiduary,
                (true, false) => ShareBasis::Fixed,
                _ => ShareBasis::Residuary,
            };
            EligibleHeir { kind, count, basis }
        })
        .collect();

    Ok(SolvedCase {
        input: input.clone(),
        eligible,
        blocked,
        shares,
        adjustment,
        final_base,
        post_tasil,
        trace,
    })
}
