//! Jurisprudence profile: the data-driven rule tables the solver consumes.
//!
//! A profile bundles the exclusion (blocking) rules, the fixed-share
//! fractions, and a handful of doctrinal switches. The default profile
//! follows the majority Sunni rules, adopting the Hanafi positions that the
//! paternal grandfather excludes all siblings and that, in the shared-estate
//! configuration, full brothers remain eligible with a zero residue.

use thiserror::Error;

use crate::model::HeirKind::{self, *};
use crate::rational::Frac;

/// One exclusion rule: `blocker` (when eligible with at least `min_count`
/// members) excludes `blocked`. `requires_any` gates the rule on some other
/// kind being eligible; `unless_any` suppresses it when one is.
#[derive(Debug, Clone)]
pub struct BlockRule {
    pub blocker: HeirKind,
    pub min_count: u32,
    pub blocked: HeirKind,
    pub requires_any: Vec<HeirKind>,
    pub unless_any: Vec<HeirKind>,
    pub reason: String,
}

impl BlockRule {
    fn simple(blocker: HeirKind, blocked: HeirKind, reason: &str) -> BlockRule {
        BlockRule {
            blocker,
            min_count: 1,
            blocked,
            requires_any: Vec::new(),
            unless_any: Vec::new(),
            reason: reason.to_string(),
        }
    }
}

/// The fixed Quranic fractions, named by the rule that awards them.
/// Every field must hold one of the six canonical values
/// (1/2, 1/4, 1/8, 2/3, 1/3, 1/6).
#[derive(Debug, Clone)]
pub struct FixedShares {
    pub husband_no_descendant: Frac,
    pub husband_with_descendant: Frac,
    pub wife_no_descendant: Frac,
    pub wife_with_descendant: Frac,
    /// Father or grandfather alongside a descendant.
    pub parent_with_descendant: Frac,
    pub mother_base: Frac,
    pub mother_reduced: Frac,
    /// Shared equally among unexcluded grandmothers.
    pub grandmother: Frac,
    /// A single daughter, son's daughter, or sister of either full or
    /// paternal relation when she stands alone.
    pub single_female: Frac,
    /// Two or more of the above.
    pub plural_female: Frac,
    /// The completing sixth: son's daughters with one daughter, or paternal
    /// half sisters with one full sister.
    pub completion: Frac,
    pub maternal_single: Frac,
    pub maternal_plural: Frac,
}

/// Ranked residuary class: a male taker and the female kind he converts
/// into a co-residuary, or a female kind taking alone with descendants.
#[derive(Debug, Clone)]
pub struct ResiduaryClass {
    pub male: Option<HeirKind>,
    pub female: Option<HeirKind>,
    /// Female inherits the residue alone when a female descendant is present.
    pub female_with_descendants: bool,
}

/// Problems detected in a profile's rule tables.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("rule makes {0} exclude itself")]
    SelfBlocking(HeirKind),
    #[error("fixed share {0} is not one of the six canonical fractions")]
    NonCanonicalShare(String),
    #[error("profile roster is empty")]
    EmptyRoster,
}

/// A complete, self-consistent rule set for solving cases.
#[derive(Debug, Clone)]
pub struct RuleProfile {
    pub id: String,
    /// Heir kinds this profile knows how to place.
    pub roster: Vec<HeirKind>,
    pub blocking: Vec<BlockRule>,
    pub shares: FixedShares,
    /// Residuary classes in priority order.
    pub residuary: Vec<ResiduaryClass>,
    /// Award the mother a third of the remainder when the heirs are exactly
    /// one spouse and both parents.
    pub umariyya: bool,
    /// Spouses do not participate in the proportional return of surplus.
    pub radd_excludes_spouse: bool,
}

impl RuleProfile {
    /// The default majority-Sunni profile described in the module docs.
    pub fn default_majority() -> RuleProfile {
        let mut blocking = Vec::new();

        blocking.push(BlockRule::simple(Son, SonsSon, "excluded by the son"));
        blocking.push(BlockRule::simple(Son, SonsDaughter, "excluded by the son"));
        blocking.push(BlockRule {
            blocker: Daughter,
            min_count: 2,
            blocked: SonsDaughter,
            requires_any: Vec::new(),
            unless_any: vec![SonsSon],
            reason: "excluded by two or more daughters".to_string(),
        });

        blocking.push(BlockRule::simple(Father, PaternalGrandfather, "excluded by the father"));
        blocking.push(BlockRule::simple(Father, PaternalGrandmother, "excluded by the father"));
        blocking.push(BlockRule::simple(Mother, PaternalGrandmother, "excluded by the mother"));
        blocking.push(BlockRule::simple(Mother, MaternalGrandmother, "excluded by the mother"));

        // Full and paternal siblings fall to male descendants and male ascendants.
        for (blocker, label) in [
            (Son, "excluded by the son"),
            (SonsSon, "excluded by the son's son"),
            (Father, "excluded by the father"),
            (PaternalGrandfather, "excluded by the grandfather"),
        ] {
            for blocked in [FullBrother, FullSister, PaternalHalfBrother, PaternalHalfSister] {
                blocking.push(BlockRule::simple(blocker, blocked, label));
            }
        }
        blocking.push(BlockRule::simple(
            FullBrother,
            PaternalHalfBrother,
            "excluded by the full brother",
        ));
        blocking.push(BlockRule::simple(
            FullBrother,
            PaternalHalfSister,
            "excluded by the full brother",
        ));
        // A full sister taking the residue alongside a daughter stands in the
        // full brother's rank and excludes the paternal half siblings.
        for blocked in [PaternalHalfBrother, PaternalHalfSister] {
            blocking.push(BlockRule {
                blocker: FullSister,
                min_count: 1,
                blocked,
                requires_any: vec![Daughter, SonsDaughter],
                unless_any: Vec::new(),
                reason: "excluded by the full sister inheriting alongside a daughter".to_string(),
            });
        }
        // Two full sisters exhaust the sisters' two thirds; paternal half
        // sisters drop out unless a paternal half brother converts them.
        blocking.push(BlockRule {
            blocker: FullSister,
            min_count: 2,
            blocked: PaternalHalfSister,
            requires_any: Vec::new(),
            unless_any: vec![PaternalHalfBrother],
            reason: "excluded by two or more full sisters".to_string(),
        });

        // Maternal siblings inherit only when no descendant or male ascendant survives.
        for (blocker, label) in [
            (Son, "excluded by the son"),
            (Daughter, "excluded by the daughter"),
            (SonsSon, "excluded by the son's son"),
            (SonsDaughter, "excluded by the son's daughter"),
            (Father, "excluded by the father"),
            (PaternalGrandfather, "excluded by the grandfather"),
        ] {
            for blocked in [MaternalHalfBrother, MaternalHalfSister] {
                blocking.push(BlockRule::simple(blocker, blocked, label));
            }
        }

        let shares = FixedShares {
            husband_no_descendant: Frac::new(1, 2).unwrap(),
            husband_with_descendant: Frac::new(1, 4).unwrap(),
            wife_no_descendant: Frac::new(1, 4).unwrap(),
            wife_with_descendant: Frac::new(1, 8).unwrap(),
            parent_with_descendant: Frac::new(1, 6).unwrap(),
            mother_base: Frac::new(1, 3).unwrap(),
            mother_reduced: Frac::new(1, 6).unwrap(),
            grandmother: Frac::new(1, 6).unwrap(),
            single_female: Frac::new(1, 2).unwrap(),
            plural_female: Frac::new(2, 3).unwrap(),
            completion: Frac::new(1, 6).unwrap(),
            maternal_single: Frac::new(1, 6).unwrap(),
            maternal_plural: Frac::new(1, 3).unwrap(),
        };

        let residuary = vec![
            ResiduaryClass { male: Some(Son), female: Some(Daughter), female_with_descendants: false },
            ResiduaryClass {
                male: Some(SonsSon),
                female: Some(SonsDaughter),
                female_with_descendants: false,
            },
            ResiduaryClass { male: Some(Father), female: None, female_with_descendants: false },
            ResiduaryClass {
                male: Some(PaternalGrandfather),
                female: None,
                female_with_descendants: false,
            },
            ResiduaryClass {
                male: Some(FullBrother),
                female: Some(FullSister),
                female_with_descendants: false,
            },
            ResiduaryClass { male: None, female: Some(FullSister), female_with_descendants: true },
            ResiduaryClass {
                male: Some(PaternalHalfBrother),
                female: Some(PaternalHalfSister),
                female_with_descendants: false,
            },
            ResiduaryClass {
                male: None,
                female: Some(PaternalHalfSister),
                female_with_descendants: true,
            },
        ];

        RuleProfile {
            id: "sunni-majority-v1".to_string(),
            roster: HeirKind::ALL.to_vec(),
            blocking,
            shares,
            residuary,
            umariyya: true,
            radd_excludes_spouse: true,
        }
    }

    /// Checks internal consistency of the rule tables.
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.roster.is_empty() {
            return Err(ProfileError::EmptyRoster);
        }
        for rule in &self.blocking {
            if rule.blocker == rule.blocked {
                return Err(ProfileError::SelfBlocking(rule.blocker));
            }
        }
        let canonical = [
            Frac::new(1, 2).unwrap(),
            Frac::new(1, 4).unwrap(),
            Frac::new(1, 8).unwrap(),
            Frac::new(2, 3).unwrap(),
            Frac::new(1, 3).unwrap(),
            Frac::new(1, 6).unwrap(),
        ];
        let s = &self.shares;
        for (name, value) in [
            ("husband_no_descendant", s.husband_no_descendant),
            ("husband_with_descendant", s.husband_with_descendant),
            ("wife_no_descendant", s.wife_no_descendant),
            ("wife_with_descendant", s.wife_with_descendant),
            ("parent_with_descendant", s.parent_with_descendant),
            ("mother_base", s.mother_base),
            ("mother_reduced", s.mother_reduced),
            ("grandmother", s.grandmother),
            ("single_female", s.single_female),
            ("plural_female", s.plural_female),
            ("completion", s.completion),
            ("maternal_single", s.maternal_single),
            ("maternal_plural", s.maternal_plural),
        ] {
            if !canonical.contains(&value) {
                return Err(ProfileError::NonCanonicalShare(format!("{name}={value}")));
            }
        }
        Ok(())
    }
}

impl Default for RuleProfile {
    fn default() -> Self {
        RuleProfile::default_majority()
    }
}
