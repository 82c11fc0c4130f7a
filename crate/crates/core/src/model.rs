//! Domain types for inheritance cases: heir kinds, case inputs, and the
//! fully solved case record with its serialized canonical field layout.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::rational::Frac;
use crate::text::normalize;

/// The seventeen heir kinds handled by the solver, in canonical order.
/// The order drives deterministic serialization and tie-breaking.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum HeirKind {
    Husband,
    Wife,
    Son,
    Daughter,
    SonsSon,
    SonsDaughter,
    Father,
    Mother,
    PaternalGrandfather,
    PaternalGrandmother,
    MaternalGrandmother,
    FullBrother,
    FullSister,
    PaternalHalfBrother,
    PaternalHalfSister,
    MaternalHalfBrother,
    MaternalHalfSister,
}

pub use HeirKind::*;

impl HeirKind {
    pub const ALL: [HeirKind; 17] = [
        Husband,
        Wife,
        Son,
        Daughter,
        SonsSon,
        SonsDaughter,
        Father,
        Mother,
        PaternalGrandfather,
        PaternalGrandmother,
        MaternalGrandmother,
        FullBrother,
        FullSister,
        PaternalHalfBrother,
        PaternalHalfSister,
        MaternalHalfBrother,
        MaternalHalfSister,
    ];

    /// Canonical snake_case name, matching the serialized form.
    pub fn name(self) -> &'static str {
        match self {
            Husband => "husband",
            Wife => "wife",
            Son => "son",
            Daughter => "daughter",
            SonsSon => "sons_son",
            SonsDaughter => "sons_daughter",
            Father => "father",
            Mother => "mother",
            PaternalGrandfather => "paternal_grandfather",
            PaternalGrandmother => "paternal_grandmother",
            MaternalGrandmother => "maternal_grandmother",
            FullBrother => "full_brother",
            FullSister => "full_sister",
            PaternalHalfBrother => "paternal_half_brother",
            PaternalHalfSister => "paternal_half_sister",
            MaternalHalfBrother => "maternal_half_brother",
            MaternalHalfSister => "maternal_half_sister",
        }
    }

    pub fn is_male(self) -> bool {
        matches!(
            self,
            Husband | Son | SonsSon | Father | PaternalGrandfather | FullBrother
                | PaternalHalfBrother
                | MaternalHalfBrother
        )
    }

    pub fn is_spouse(self) -> bool {
        matches!(self, Husband | Wife)
    }

    /// Son, daughter, or their children through the male line.
    pub fn is_descendant(self) -> bool {
        matches!(self, Son | Daughter | SonsSon | SonsDaughter)
    }

    pub fn is_male_descendant(self) -> bool {
        matches!(self, Son | SonsSon)
    }

    pub fn is_female_descendant(self) -> bool {
        matches!(self, Daughter | SonsDaughter)
    }

    pub fn is_sibling(self) -> bool {
        matches!(
            self,
            FullBrother
                | FullSister
                | PaternalHalfBrother
                | PaternalHalfSister
                | MaternalHalfBrother
                | MaternalHalfSister
        )
    }

    pub fn is_maternal_sibling(self) -> bool {
        matches!(self, MaternalHalfBrother | MaternalHalfSister)
    }

    pub fn is_grandmother(self) -> bool {
        matches!(self, PaternalGrandmother | MaternalGrandmother)
    }

    /// Upper bound on how many heirs of this kind one estate can have.
    pub fn max_count(self) -> u32 {
        match self {
            Husband | Father | Mother | PaternalGrandfather | PaternalGrandmother
            | MaternalGrandmother => 1,
            Wife => 4,
            // Unbounded in principle; capped to keep exact arithmetic in range.
            _ => 10_000,
        }
    }
}

impl fmt::Display for HeirKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeirKind {
    type Err = String;
    fn from_str(s: &str) -> Result<HeirKind, String> {
        heir_from_name(s).ok_or_else(|| format!("unknown heir kind `{s}`"))
    }
}

/// Arabic noun forms for one heir kind (singular, dual, plural).
pub struct ArabicNoun {
    pub singular: &'static str,
    pub dual: &'static str,
    pub plural: &'static str,
}

/// Arabic terms used when rendering and when resolving names back to kinds.
pub fn arabic_noun(kind: HeirKind) -> &'static ArabicNoun {
    match kind {
        Husband => &ArabicNoun { singular: "زوج", dual: "زوجان", plural: "أزواج" },
        Wife => &ArabicNoun { singular: "زوجة", dual: "زوجتان", plural: "زوجات" },
        Son => &ArabicNoun { singular: "ابن", dual: "ابنان", plural: "أبناء" },
        Daughter => &ArabicNoun { singular: "بنت", dual: "بنتان", plural: "بنات" },
        SonsSon => &ArabicNoun { singular: "ابن ابن", dual: "ابنا ابن", plural: "أبناء ابن" },
        SonsDaughter => &ArabicNoun { singular: "بنت ابن", dual: "بنتا ابن", plural: "بنات ابن" },
        Father => &ArabicNoun { singular: "أب", dual: "أبوان", plural: "آباء" },
        Mother => &ArabicNoun { singular: "أم", dual: "أمان", plural: "أمهات" },
        PaternalGrandfather => &ArabicNoun { singular: "جد لأب", dual: "جدان لأب", plural: "أجداد لأب" },
        PaternalGrandmother => &ArabicNoun { singular: "جدة لأب", dual: "جدتان لأب", plural: "جدات لأب" },
        MaternalGrandmother => &ArabicNoun { singular: "جدة لأم", dual: "جدتان لأم", plural: "جدات لأم" },
        FullBrother => &ArabicNoun { singular: "أخ شقيق", dual: "أخوان شقيقان", plural: "إخوة أشقاء" },
        FullSister => &ArabicNoun { singular: "أخت شقيقة", dual: "أختان شقيقتان", plural: "أخوات شقيقات" },
        PaternalHalfBrother => &ArabicNoun { singular: "أخ لأب", dual: "أخوان لأب", plural: "إخوة لأب" },
        PaternalHalfSister => &ArabicNoun { singular: "أخت لأب", dual: "أختان لأب", plural: "أخوات لأب" },
        MaternalHalfBrother => &ArabicNoun { singular: "أخ لأم", dual: "أخوان لأم", plural: "إخوة لأم" },
        MaternalHalfSister => &ArabicNoun { singular: "أخت لأم", dual: "أختان لأم", plural: "أخوات لأم" },
    }
}

/// Renders a count of heirs of one kind in Arabic ("زوجة", "بنتان", "3 بنات").
pub fn arabic_count(kind: HeirKind, count: u32) -> String {
    let noun = arabic_noun(kind);
    match count {
        0 | 1 => noun.singular.to_string(),
        2 => noun.dual.to_string(),
        n => format!("{n} {}", noun.plural),
    }
}

/// Resolves an heir name in English (snake_case or spaced, with common
/// variants) or Arabic (any grammatical number, with or without diacritics
/// and the definite article) to its kind. Returns `None` for unknown names.
pub fn heir_from_name(raw: &str) -> Option<HeirKind> {
    let mut key = normalize(raw)
        .replace(['_', '-', '\''], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    // Strip a leading Arabic definite article on the first word.
    if let Some(rest) = key.strip_prefix("ال") {
        key = rest.to_string();
    }
    for kind in HeirKind::ALL {
        if key == normalize(kind.name()).replace('_', " ") {
            return Some(kind);
        }
        let noun = arabic_noun(kind);
        for form in [noun.singular, noun.dual, noun.plural] {
            let mut norm = normalize(form);
            if key == norm {
                return Some(kind);
            }
            // "الجدة لأم" normalizes with the article on the head noun only.
            if let Some(rest) = norm.strip_prefix("ال") {
                norm = rest.to_string();
            }
            if key == norm {
                return Some(kind);
            }
        }
    }
    // Frequent English variants that do not match the canonical names.
    match key.as_str() {
        "sons son" | "son s son" | "grandson" => Some(SonsSon),
        "sons daughter" | "son s daughter" | "granddaughter" => Some(SonsDaughter),
        "grandfather" | "paternal grandfather agnatic" => Some(PaternalGrandfather),
        "brother" => Some(FullBrother),
        "sister" => Some(FullSister),
        _ => None,
    }
}

/// Structural problems found in a [`CaseInput`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InputViolation {
    NoHeirs,
    SpouseConflict,
    ZeroCount { heir: HeirKind },
    CountExceedsLimit { heir: HeirKind, count: u32, limit: u32 },
    ZeroEstate,
}

impl fmt::Display for InputViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputViolation::NoHeirs => write!(f, "case has no heirs"),
            InputViolation::SpouseConflict => {
                write!(f, "husband and wife cannot both survive the deceased")
            }
            InputViolation::ZeroCount { heir } => write!(f, "{heir} listed with count 0"),
            InputViolation::CountExceedsLimit { heir, count, limit } => {
                write!(f, "{heir} count {count} exceeds limit {limit}")
            }
            InputViolation::ZeroEstate => write!(f, "estate must be positive when given"),
        }
    }
}

/// One inheritance problem: surviving heirs with counts and an optional
/// estate amount (used only for narrative rendering).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseInput {
    pub heirs: BTreeMap<HeirKind, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estate: Option<u64>,
}

impl CaseInput {
    pub fn new(heirs: impl IntoIterator<Item = (HeirKind, u32)>) -> CaseInput {
        CaseInput {
            heirs: heirs.into_iter().collect(),
            estate: None,
        }
    }

    pub fn count(&self, kind: HeirKind) -> u32 {
        self.heirs.get(&kind).copied().unwrap_or(0)
    }

    pub fn has(&self, kind: HeirKind) -> bool {
        self.count(kind) > 0
    }

    /// Returns all structural violations; an empty vector means valid.
    pub fn validate(&self) -> Vec<InputViolation> {
        let mut out = Vec::new();
        if self.heirs.is_empty() {
            out.push(InputViolation::NoHeirs);
        }
        if self.has(Husband) && self.has(Wife) {
            out.push(InputViolation::SpouseConflict);
        }
        for (&kind, &count) in &self.heirs {
            if count == 0 {
                out.push(InputViolation::ZeroCount { heir: kind });
            } else if count > kind.max_count() {
                out.push(InputViolation::CountExceedsLimit {
                    heir: kind,
                    count,
                    limit: kind.max_count(),
                });
            }
        }
        if self.estate == Some(0) {
            out.push(InputViolation::ZeroEstate);
        }
        out
    }

    /// Stable hex fingerprint of the heir configuration (estate excluded),
    /// used for corpus deduplication.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (&kind, &count) in &self.heirs {
            if count > 0 {
                hasher.update(kind.name().as_bytes());
                hasher.update(b"=");
                hasher.update(count.to_string().as_bytes());
                hasher.update(b";");
            }
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Why an eligible heir receives a share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareBasis {
    /// Receives one of the six fixed Quranic fractions.
    Fixed,
    /// Takes (a share of) the residue after fixed shares.
    Residuary,
    /// Fixed fraction plus the residue (the father with only female descendants).
    FixedResiduary,
}

/// An heir who participates in the division.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibleHeir {
    pub kind: HeirKind,
    pub count: u32,
    pub basis: ShareBasis,
}

/// An heir excluded from the division, with the rule label that excluded them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockedHeir {
    pub kind: HeirKind,
    pub reason: String,
}

/// Case outcome category: whether fixed shares exactly fit the estate,
/// oversubscribed it (base inflation), or undersubscribed it (return).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseCategory {
    Simple,
    Awl,
    Radd,
}

impl CaseCategory {
    pub const ALL: [CaseCategory; 3] = [CaseCategory::Simple, CaseCategory::Awl, CaseCategory::Radd];

    pub fn name(self) -> &'static str {
        match self {
            CaseCategory::Simple => "simple",
            CaseCategory::Awl => "awl",
            CaseCategory::Radd => "radd",
        }
    }
}

impl fmt::Display for CaseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the share base was adjusted after fixed-share assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjustment {
    pub kind: CaseCategory,
    /// Base implied by the fixed shares before any adjustment.
    pub original_base: u64,
    /// Base after inflation or return; equals `original_base` for simple cases.
    pub adjusted_base: u64,
}

/// Final integer allotment for one heir group after base correction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostTasil {
    /// Integer units of the final base allotted to the whole group.
    pub siham: u64,
    /// Exact percentage of the estate per individual heir of this kind.
    pub percent: Frac,
    pub count: u32,
}

/// Solver stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStage {
    Blocking,
    Shares,
    Adjustment,
    Tasil,
}

/// One explained solver step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: TraceStage,
    pub detail: String,
}

/// A fully solved case. Serializes with the canonical field names used by
/// every downstream consumer (`heirs`, `blocked`, `shares`, `awl_or_radd`,
/// `original_base`, `tasil_stage`, `final_base`, `post_tasil`, `trace`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SolvedCaseRepr", into = "SolvedCaseRepr")]
pub struct SolvedCase {
    pub input: CaseInput,
    pub eligible: Vec<EligibleHeir>,
    pub blocked: Vec<BlockedHeir>,
    /// Exact group share per eligible kind, after any adjustment; sums to 1.
    pub shares: BTreeMap<HeirKind, Frac>,
    pub adjustment: Adjustment,
    /// Minimal integer base on which every group's allotment is integral and
    /// divisible by its head count.
    pub final_base: u64,
    pub post_tasil: BTreeMap<HeirKind, PostTasil>,
    pub trace: Vec<TraceRecord>,
}

impl SolvedCase {
    /// Case category; identical to the adjustment kind by construction.
    pub fn category(&self) -> CaseCategory {
        self.adjustment.kind
    }
}

#[derive(Serialize, Deserialize, Clone)]
struct SolvedCaseRepr {
    input: CaseInput,
    heirs: Vec<EligibleHeir>,
    blocked: Vec<BlockedHeir>,
    shares: BTreeMap<HeirKind, Frac>,
    awl_or_radd: CaseCategory,
    original_base: u64,
    tasil_stage: u64,
    final_base: u64,
    post_tasil: BTreeMap<HeirKind, PostTasil>,
    trace: Vec<TraceRecord>,
}

impl From<SolvedCaseRepr> for SolvedCase {
    fn from(r: SolvedCaseRepr) -> SolvedCase {
        SolvedCase {
            input: r.input,
            eligible: r.heirs,
            blocked: r.blocked,
            shares: r.shares,
            adjustment: Adjustment {
                kind: r.awl_or_radd,
                original_base: r.original_base,
                adjusted_base: r.tasil_stage,
            },
            final_base: r.final_base,
            post_tasil: r.post_tasil,
            trace: r.trace,
        }
    }
}

impl From<SolvedCase> for SolvedCaseRepr {
    fn from(c: SolvedCase) -> SolvedCaseRepr {
        SolvedCaseRepr {
            input: c.input,
            heirs: c.eligible,
            blocked: c.blocked,
            shares: c.shares,
            awl_or_radd: c.adjustment.kind,
            original_base: c.adjustment.original_base,
            tasil_stage: c.adjustment.adjusted_base,
            final_base: c.final_base,
            post_tasil: c.post_tasil,
            trace: c.trace,
        }
    }
}
