//! Synthetic Arabic corpus generation: samples heir configurations steered
//! toward a target category mix, solves them exactly, and renders each solved
//! case as four aligned views (problem statement, QA pair, reasoning trace,
//! structured record). Fingerprint deduplication guarantees every emitted
//! case is a distinct heir configuration.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    arabic_count, arabic_noun, CaseCategory, CaseInput, HeirKind, HeirKind::*, ShareBasis,
    SolvedCase, TraceStage,
};
use crate::rational::Frac;
use crate::solver::{profile::RuleProfile, solve_case, SolverError};

/// Target proportions of the three case categories; must sum to one.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CategoryMix {
    pub simple: f64,
    pub awl: f64,
    pub radd: f64,
}

impl CategoryMix {
    pub fn new(simple: f64, awl: f64, radd: f64) -> Result<CategoryMix, GenError> {
        let mix = CategoryMix { simple, awl, radd };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let parts = [self.simple, self.awl, self.radd];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p) || !p.is_finite()) {
            return Err(GenError::InvalidMix(format!(
                "proportions must lie in [0, 1], got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GenError::InvalidMix(format!(
                "proportions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    pub fn proportion(&self, category: CaseCategory) -> f64 {
        match category {
            CaseCategory::Simple => self.simple,
            CaseCategory::Awl => self.awl,
            CaseCategory::Radd => self.radd,
        }
    }
}

impl Default for CategoryMix {
    /// The shipped corpus mix: 93.8% simple, 4.9% base-inflation, 1.4% return.
    fn default() -> CategoryMix {
        CategoryMix {
            simple: 5531.0 / 5900.0,
            awl: 288.0 / 5900.0,
            radd: 81.0 / 5900.0,
        }
    }
}

/// Target proportions of the four difficulty buckets (soft steering only).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DifficultyMix {
    pub basic: f64,
    pub intermediate: f64,
    pub advanced: f64,
    pub expert: f64,
}

impl Default for DifficultyMix {
    fn default() -> DifficultyMix {
        DifficultyMix { basic: 0.305, intermediate: 0.335, advanced: 0.165, expert: 0.195 }
    }
}

/// Difficulty bucket derived from the heuristic difficulty score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifficultyBucket {
    Basic,
    Intermediate,
    Advanced,
    Expert,
}

/// Where a document came from; generated documents are always `Synthetic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Synthetic,
    Textbook,
    Web,
}

/// Generation request: how many cases, which mixes, and the RNG seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub target_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub category_mix: CategoryMix,
    #[serde(default)]
    pub difficulty_mix: DifficultyMix,
    /// Probability that a case carries a concrete estate amount.
    pub estate_probability: f64,
}

impl Default for GenSpec {
    fn default() -> GenSpec {
        GenSpec {
            target_count: 1000,
            seed: 7,
            category_mix: CategoryMix::default(),
            difficulty_mix: DifficultyMix::default(),
            estate_probability: 0.7,
        }
    }
}

/// One corpus entry: the four views plus labels used downstream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub category: CaseCategory,
    pub difficulty: DifficultyBucket,
    pub source_tag: SourceTag,
    pub problem_text: String,
    pub qa_text: String,
    pub reasoning_text: String,
    pub structured_output: SolvedCase,
}

/// Generation failures.
#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid category mix: {0}")]
    InvalidMix(String),
    #[error(
        "could not produce enough distinct {category} cases: got {produced} of {requested}"
    )]
    Capacity { category: CaseCategory, produced: usize, requested: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Which of the rendering templates to use for each view.
#[derive(Debug, Clone, Copy)]
pub struct TemplateChoice {
    pub problem: usize,
    pub qa: usize,
    pub reasoning: usize,
    pub female_deceased: bool,
}

/// The three narrative views rendered for one solved case.
#[derive(Debug, Clone)]
pub struct Views {
    pub problem: String,
    pub qa: String,
    pub reasoning: String,
}

pub const TEMPLATES_PER_VIEW: usize = 3;

/// Exact percentage as a short decimal string, rounded to two places
/// ("100", "12.5", "28.57").
pub fn percent_string(percent: Frac) -> String {
    let num = percent.numer() as i128;
    let den = percent.denom() as i128;
    let cents = (num * 100 + den / 2) / den;
    let whole = cents / 100;
    let frac = (cents % 100).unsigned_abs();
    if frac == 0 {
        format!("{whole}")
    } else if frac % 10 == 0 {
        format!("{whole}.{}", frac / 10)
    } else {
        format!("{whole}.{frac:02}")
    }
}

fn heir_list_arabic(input: &CaseInput) -> String {
    let parts: Vec<String> = input
        .heirs
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(&k, &c)| arabic_count(k, c))
        .collect();
    parts.join(" و")
}

fn share_name_arabic(share: Frac) -> String {
    match (share.numer(), share.denom()) {
        (1, 2) => "النصف".to_string(),
        (1, 4) => "الربع".to_string(),
        (1, 8) => "الثمن".to_string(),
        (2, 3) => "الثلثان".to_string(),
        (1, 3) => "الثلث".to_string(),
        (1, 6) => "السدس".to_string(),
        (0, _) => "لا شيء".to_string(),
        (n, d) => format!("{n}/{d}"),
    }
}

fn category_arabic(category: CaseCategory) -> &'static str {
    match category {
        CaseCategory::Simple => "لا عول ولا رد",
        CaseCategory::Awl => "عول",
        CaseCategory::Radd => "رد",
    }
}

fn problem_text(case: &SolvedCase, choice: &TemplateChoice) -> String {
    let heirs = heir_list_arabic(&case.input);
    let f = choice.female_deceased;
    let estate = case.input.estate.map(|e| {
        if f {
            format!(" وتركت {e} دينارًا")
        } else {
            format!(" وترك {e} دينارًا")
        }
    });
    let estate = estate.unwrap_or_default();
    match choice.problem % TEMPLATES_PER_VIEW {
        0 => {
            if f {
                format!("توفيت امرأة عن {heirs}{estate}. كيف تقسم التركة بين الورثة؟")
            } else {
                format!("توفي رجل عن {heirs}{estate}. كيف تقسم التركة بين الورثة؟")
            }
        }
        1 => {
            if f {
                format!("ماتت امرأة وخلفت {heirs}{estate}. ما نصيب كل وارث من التركة؟")
            } else {
                format!("مات رجل وخلف {heirs}{estate}. ما نصيب كل وارث من التركة؟")
            }
        }
        _ => {
            if f {
                format!("هلكت هالكة عن {heirs}{estate}. بيّن أنصبة الورثة في هذه المسألة.")
            } else {
                format!("هلك هالك عن {heirs}{estate}. بيّن أنصبة الورثة في هذه المسألة.")
            }
        }
    }
}

fn answer_text(case: &SolvedCase) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (kind, entry) in &case.post_tasil {
        let noun = arabic_noun(*kind).singular;
        let pct = percent_string(entry.percent);
        if entry.count > 1 {
            parts.push(format!("نصيب كل {noun}: {pct}%"));
        } else {
            parts.push(format!("نصيب ال{noun}: {pct}%"));
        }
    }
    let mut answer = parts.join("، ");
    if !case.blocked.is_empty() {
        let names: Vec<&str> = case.blocked.iter().map(|b| arabic_noun(b.kind).singular).collect();
        answer.push_str(&format!("، والمحجوب: {}", names.join(" و")));
    }
    answer.push_str(&format!(
        "، الحالة: {}، وتصح المسألة من {}",
        category_arabic(case.category()),
        case.final_base
    ));
    answer
}

fn qa_text(case: &SolvedCase, choice: &TemplateChoice) -> String {
    let question = problem_text(case, choice);
    let answer = answer_text(case);
    match choice.qa % TEMPLATES_PER_VIEW {
        0 => format!("س: {question} ج: {answer}."),
        1 => format!("سؤال: {question} الجواب: {answer}."),
        _ => format!("المسألة: {question} الحل: {answer}."),
    }
}

fn reasoning_text(case: &SolvedCase, choice: &TemplateChoice) -> String {
    let mut lines: Vec<String> = Vec::new();
    for record in &case.trace {
        let line = match record.stage {
            TraceStage::Blocking => {
                if case.blocked.is_empty() {
                    "الحجب: لا يوجد محجوبون في المسألة.".to_string()
                } else {
                    let names: Vec<&str> =
                        case.blocked.iter().map(|b| arabic_noun(b.kind).singular).collect();
                    format!("الحجب: حُجب {}.", names.join(" و"))
                }
            }
            TraceStage::Shares => {
                let mut parts: Vec<String> = Vec::new();
                for heir in &case.eligible {
                    let noun = arabic_noun(heir.kind).singular;
                    let share = case.shares[&heir.kind];
                    match heir.basis {
                        ShareBasis::Fixed => {
                            parts.push(format!("لل{noun} {}", share_name_arabic(share)))
                        }
                        ShareBasis::Residuary => {
                            parts.push(format!("ال{noun} عصبة يأخذ الباقي"))
                        }
                        ShareBasis::FixedResiduary => parts.push(format!(
                            "لل{noun} {} مع الباقي تعصيبًا",
                            share_name_arabic(crate::rational::Frac::new(1, 6).unwrap())
                        )),
                    }
                }
                format!("الأنصبة: {}.", parts.join("، "))
            }
            TraceStage::Adjustment => match case.category() {
                CaseCategory::Simple => "لا عول ولا رد في هذه المسألة.".to_string(),
                CaseCategory::Awl => format!(
                    "العول: عالت المسألة من {} إلى {}.",
                    case.adjustment.original_base, case.adjustment.adjusted_base
                ),
                CaseCategory::Radd => format!(
                    "الرد: رُدّ الفائض على أصحاب الفروض، وتعدل الأصل من {} إلى {}.",
                    case.adjustment.original_base, case.adjustment.adjusted_base
                ),
            },
            TraceStage::Tasil => {
                let parts: Vec<String> = case
                    .post_tasil
                    .iter()
                    .map(|(k, p)| format!("{} {}", arabic_noun(*k).singular, p.siham))
                    .collect();
                format!(
                    "التأصيل والتصحيح: تصح المسألة من {}؛ الأسهم: {}.",
                    case.final_base,
                    parts.join("، ")
                )
            }
        };
        lines.push(line);
    }
    match choice.reasoning % TEMPLATES_PER_VIEW {
        0 => lines.join(" "),
        1 => format!("خطوات الحل: {}", lines.join(" ثم ")),
        _ => lines
            .iter()
            .enumerate()
            .map(|(i, l)| format!("({}) {}", i + 1, l))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

/// Renders the three narrative views for a solved case with fixed template
/// choices. The reasoning view walks the solver trace in stage order, one
/// sentence per stage.
pub fn render_views(case: &SolvedCase, choice: &TemplateChoice) -> Views {
    Views {
        problem: problem_text(case, choice),
        qa: qa_text(case, choice),
        reasoning: reasoning_text(case, choice),
    }
}

/// Heuristic difficulty in [0, 10]: rewards distinct heir kinds, extra
/// heads, exclusions, base adjustment, and special share bases.
pub fn difficulty_score(case: &SolvedCase) -> f64 {
    let kinds = case.eligible.len() as f64;
    let heads: u32 = case.eligible.iter().map(|e| e.count).sum();
    let blocked = case.blocked.len() as f64;
    let adjustment = match case.category() {
        CaseCategory::Simple => 0.0,
        CaseCategory::Awl => 2.2,
        CaseCategory::Radd => 1.8,
    };
    let specials = case
        .eligible
        .iter()
        .filter(|e| e.basis == ShareBasis::FixedResiduary)
        .count()
        + case.shares.values().filter(|s| s.is_zero()).count();
    let score =
        1.1 * kinds + 0.25 * (heads as f64 - kinds) + 1.4 * blocked + adjustment
            + 1.2 * specials as f64;
    score.clamp(0.0, 10.0)
}

pub fn difficulty_bucket(score: f64) -> DifficultyBucket {
    if score >= 6.5 {
        DifficultyBucket::Expert
    } else if score >= 4.5 {
        DifficultyBucket::Advanced
    } else if score >= 2.5 {
        DifficultyBucket::Intermediate
    } else {
        DifficultyBucket::Basic
    }
}

fn pick_category(mix: &CategoryMix, rng: &mut impl Rng) -> CaseCategory {
    let roll: f64 = rng.random();
    if roll < mix.simple {
        CaseCategory::Simple
    } else if roll < mix.simple + mix.awl {
        CaseCategory::Awl
    } else {
        CaseCategory::Radd
    }
}

fn pick_tier(mix: &DifficultyMix, rng: &mut impl Rng) -> usize {
    let roll: f64 = rng.random();
    if roll < mix.basic {
        0
    } else if roll < mix.basic + mix.intermediate {
        1
    } else if roll < mix.basic + mix.intermediate + mix.advanced {
        2
    } else {
        3
    }
}

/// Count range scaled by difficulty tier.
fn jitter(rng: &mut impl Rng, tier: usize) -> u32 {
    let hi = [2, 4, 7, 10][tier.min(3)];
    rng.random_range(1..=hi)
}

fn sample_simple(rng: &mut impl Rng, tier: usize) -> CaseInput {
    let mut heirs: Vec<(HeirKind, u32)> = Vec::new();
    match rng.random_range(0..10u32) {
        0 => heirs.push((Son, jitter(rng, tier))),
        1 => {
            heirs.push((Son, jitter(rng, tier)));
            heirs.push((Daughter, jitter(rng, tier)));
        }
        2 => {
            heirs.push((Husband, 1));
            heirs.push((Son, jitter(rng, tier)));
            if rng.random_bool(0.5) {
                heirs.push((Daughter, jitter(rng, tier)));
            }
        }
        3 => {
            heirs.push((Wife, rng.random_range(1..=4)));
            heirs.push((Son, jitter(rng, tier)));
            if rng.random_bool(0.4) {
                heirs.push((Daughter, jitter(rng, tier)));
            }
        }
        4 => {
            heirs.push((Father, 1));
            heirs.push((Mother, 1));
            heirs.push((Son, jitter(rng, tier)));
        }
        5 => {
            // Spouse and both parents: the remainder-third configuration.
            heirs.push(if rng.random_bool(0.5) { (Husband, 1) } else { (Wife, 1) });
            heirs.push((Father, 1));
            heirs.push((Mother, 1));
        }
        6 => {
            heirs.push((Daughter, jitter(rng, tier)));
            heirs.push((FullBrother, jitter(rng, tier)));
            if rng.random_bool(0.4) {
                heirs.push((FullSister, jitter(rng, tier)));
            }
        }
        7 => {
            heirs.push((Wife, rng.random_range(1..=2)));
            heirs.push((Father, 1));
            heirs.push((Mother, 1));
            heirs.push((Son, jitter(rng, tier)));
            if rng.random_bool(0.5) {
                heirs.push((Daughter, jitter(rng, tier)));
            }
        }
        8 => {
            heirs.push((SonsSon, jitter(rng, tier)));
            if rng.random_bool(0.5) {
                heirs.push((SonsDaughter, jitter(rng, tier)));
            }
            if rng.random_bool(0.4) {
                heirs.push((Wife, rng.random_range(1..=2)));
            }
        }
        _ => {
            heirs.push((PaternalGrandfather, 1));
            heirs.push((FullBrother, jitter(rng, tier)));
            if rng.random_bool(0.4) {
                heirs.push((Mother, 1));
            }
        }
    }
    let has = |hs: &[(HeirKind, u32)], k: HeirKind| hs.iter().any(|&(h, _)| h == k);
    // Higher tiers add excluded relatives and extra fixed-share heirs; with a
    // male descendant or a residuary ascendant present these cannot flip the
    // category.
    if tier >= 2 && (has(&heirs, Son) || has(&heirs, SonsSon)) {
        if rng.random_bool(0.6) {
            heirs.push((FullBrother, jitter(rng, tier)));
        }
        if rng.random_bool(0.4) {
            heirs.push((MaternalHalfSister, jitter(rng, tier)));
        }
        if rng.random_bool(0.4) && !has(&heirs, Mother) {
            heirs.push((MaternalGrandmother, 1));
        }
        if rng.random_bool(0.3) && !has(&heirs, Father) {
            heirs.push((PaternalGrandfather, 1));
        }
    }
    CaseInput::new(heirs)
}

fn sample_awl(rng: &mut impl Rng, tier: usize) -> CaseInput {
    let mut heirs: Vec<(HeirKind, u32)> = Vec::new();
    match rng.random_range(0..8u32) {
        0 => {
            // Husband with plural full sisters.
            heirs.push((Husband, 1));
            heirs.push((FullSister, rng.random_range(2..=9)));
            if rng.random_bool(0.4) {
                heirs.push((MaternalHalfBrother, jitter(rng, tier)));
                heirs.push((Mother, 1));
            }
        }
        1 => {
            // Husband, one full sister, mother (optionally a completing half sister).
            heirs.push((Husband, 1));
            heirs.push((FullSister, 1));
            heirs.push((Mother, 1));
            if rng.random_bool(0.5) {
                heirs.push((PaternalHalfSister, jitter(rng, tier)));
            }
        }
        2 => {
            // Husband, plural sisters, a grandmother instead of the mother.
            heirs.push((Husband, 1));
            heirs.push((FullSister, rng.random_range(2..=9)));
            heirs.push(if rng.random_bool(0.5) {
                (MaternalGrandmother, 1)
            } else {
                (PaternalGrandmother, 1)
            });
        }
        3 => {
            // Husband, sisters, maternal siblings, mother: deep inflation.
            heirs.push((Husband, 1));
            heirs.push((FullSister, rng.random_range(2..=8)));
            heirs.push((MaternalHalfBrother, rng.random_range(1..=6)));
            if rng.random_bool(0.6) {
                heirs.push((MaternalHalfSister, rng.random_range(1..=6)));
            }
            heirs.push((Mother, 1));
        }
        4 => {
            // Wife or wives, plural daughters, both parents.
            heirs.push((Wife, rng.random_range(1..=4)));
            heirs.push((Daughter, rng.random_range(2..=9)));
            heirs.push((Mother, 1));
            heirs.push((Father, 1));
        }
        5 => {
            // Husband, plural daughters, mother.
            heirs.push((Husband, 1));
            heirs.push((Daughter, rng.random_range(2..=9)));
            heirs.push((Mother, 1));
            if tier >= 2 && rng.random_bool(0.5) {
                heirs.push((MaternalHalfBrother, jitter(rng, tier)));
            }
        }
        6 => {
            // Wife, plural full sisters, mother, optional maternal siblings.
            heirs.push((Wife, rng.random_range(1..=4)));
            heirs.push((FullSister, rng.random_range(2..=8)));
            heirs.push((Mother, 1));
            if rng.random_bool(0.5) {
                heirs.push((MaternalHalfSister, rng.random_range(1..=5)));
            }
        }
        _ => {
            // Husband, daughter, son's daughter completing, mother.
            heirs.push((Husband, 1));
            heirs.push((Daughter, 1));
            heirs.push((SonsDaughter, rng.random_range(1..=6)));
            heirs.push((Mother, 1));
        }
    }
    let has = |hs: &[(HeirKind, u32)], k: HeirKind| hs.iter().any(|&(h, _)| h == k);
    // Excluded relatives widen the configuration space without touching the
    // eligible set or the inflated base: maternal siblings fall to any
    // descendant, grandmothers to the mother.
    if tier >= 1 && (has(&heirs, Daughter) || has(&heirs, SonsDaughter)) {
        if rng.random_bool(0.5) && !has(&heirs, MaternalHalfBrother) {
            heirs.push((MaternalHalfBrother, jitter(rng, tier)));
        }
        if rng.random_bool(0.4) && !has(&heirs, MaternalHalfSister) {
            heirs.push((MaternalHalfSister, jitter(rng, tier)));
        }
    }
    if has(&heirs, Mother) {
        if rng.random_bool(0.35) {
            heirs.push((PaternalGrandmother, 1));
        }
        if rng.random_bool(0.3) {
            heirs.push((MaternalGrandmother, 1));
        }
    }
    CaseInput::new(heirs)
}

fn sample_radd(rng: &mut impl Rng, tier: usize) -> CaseInput {
    let mut heirs: Vec<(HeirKind, u32)> = Vec::new();
    match rng.random_range(0..9u32) {
        0 => {
            heirs.push((Daughter, jitter(rng, tier)));
            heirs.push((Mother, 1));
        }
        1 => {
            heirs.push((Wife, rng.random_range(1..=4)));
            heirs.push((Daughter, jitter(rng, tier)));
            heirs.push((Mother, 1));
        }
        2 => heirs.push((Daughter, jitter(rng, tier))),
        3 => {
            heirs.push((SonsDaughter, jitter(rng, tier)));
            if rng.random_bool(0.5) {
                heirs.push((Mother, 1));
            }
        }
        4 => {
            heirs.push((Daughter, 1));
            heirs.push((SonsDaughter, jitter(rng, tier)));
        }
        5 => {
            heirs.push((Mother, 1));
            heirs.push((MaternalHalfBrother, rng.random_range(1..=5)));
            if rng.random_bool(0.5) {
                heirs.push((MaternalHalfSister, rng.random_range(1..=5)));
            }
        }
        6 => {
            heirs.push((Husband, 1));
            heirs.push((Daughter, jitter(rng, tier)));
        }
        7 => {
            heirs.push((FullSister, jitter(rng, tier)));
            if rng.random_bool(0.4) {
                heirs.push((MaternalGrandmother, 1));
            }
        }
        _ => {
            heirs.push((Wife, rng.random_range(1..=4)));
            heirs.push((Mother, 1));
            if rng.random_bool(0.3) {
                heirs.push((MaternalHalfSister, 1));
            }
        }
    }
    let has = |hs: &[(HeirKind, u32)], k: HeirKind| hs.iter().any(|&(h, _)| h == k);
    // Excluded relatives widen the configuration space without touching the
    // eligible set: maternal siblings under a descendant, grandmothers under
    // the mother.
    if tier >= 1 {
        let has_desc = has(&heirs, Daughter) || has(&heirs, SonsDaughter);
        if has_desc && rng.random_bool(0.5) {
            heirs.push((MaternalHalfBrother, jitter(rng, tier)));
        }
        if has_desc && rng.random_bool(0.3) {
            heirs.push((MaternalHalfSister, jitter(rng, tier)));
        }
        if has(&heirs, Mother) && rng.random_bool(0.4) {
            heirs.push((PaternalGrandmother, 1));
        }
        if has(&heirs, Mother) && rng.random_bool(0.3) {
            heirs.push((MaternalGrandmother, 1));
        }
    }
    CaseInput::new(heirs)
}

/// Samples one heir configuration, steered toward the spec's category and
/// difficulty mixes. The structural samplers guarantee the intended category
/// for the overwhelming majority of draws; callers that need certainty
/// should verify against the solved case.
pub fn sample_config(spec: &GenSpec, rng: &mut impl Rng) -> CaseInput {
    let category = pick_category(&spec.category_mix, rng);
    let tier = pick_tier(&spec.difficulty_mix, rng);
    let mut input = match category {
        CaseCategory::Simple => sample_simple(rng, tier),
        CaseCategory::Awl => sample_awl(rng, tier),
        CaseCategory::Radd => sample_radd(rng, tier),
    };
    if rng.random_bool(spec.estate_probability) {
        input.estate = Some(rng.random_range(4..=400) * 2500);
    }
    input
}

const MAX_TRIES_PER_CASE: usize = 5000;

struct CorpusGen {
    spec: GenSpec,
    profile: RuleProfile,
    rng: ChaCha8Rng,
    remaining: [usize; 3],
    seen: HashSet<String>,
    produced: usize,
    failed: bool,
}

impl CorpusGen {
    fn sample_for(&mut self, category: CaseCategory, tier: usize) -> CaseInput {
        let mut input = match category {
            CaseCategory::Simple => sample_simple(&mut self.rng, tier),
            CaseCategory::Awl => sample_awl(&mut self.rng, tier),
            CaseCategory::Radd => sample_radd(&mut self.rng, tier),
        };
        if self.rng.random_bool(self.spec.estate_probability) {
            input.estate = Some(self.rng.random_range(4..=400) * 2500);
        }
        input
    }
}

impl Iterator for CorpusGen {
    type Item = Result<Document, GenError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let total_remaining: usize = self.remaining.iter().sum();
        if total_remaining == 0 {
            return None;
        }
        // Weighted draw over remaining quotas keeps the stream interleaved.
        let mut roll = self.rng.random_range(0..total_remaining);
        let mut slot = 0;
        for (i, &q) in self.remaining.iter().enumerate() {
            if roll < q {
                slot = i;
                break;
            }
            roll -= q;
        }
        let category = CaseCategory::ALL[slot];

        for _ in 0..MAX_TRIES_PER_CASE {
            let tier = pick_tier(&self.spec.difficulty_mix, &mut self.rng);
            let input = self.sample_for(category, tier);
            let fingerprint = input.fingerprint();
            if self.seen.contains(&fingerprint) {
                continue;
            }
            let case = match solve_case(&input, &self.profile) {
                Ok(case) => case,
                Err(err) => {
                    self.failed = true;
                    return Some(Err(GenError::Solver(err)));
                }
            };
            if case.category() != category {
                continue;
            }
            self.seen.insert(fingerprint.clone());
            self.remaining[slot] -= 1;
            self.produced += 1;

            let choice = TemplateChoice {
                problem: self.rng.random_range(0..TEMPLATES_PER_VIEW),
                qa: self.rng.random_range(0..TEMPLATES_PER_VIEW),
                reasoning: self.rng.random_range(0..TEMPLATES_PER_VIEW),
                female_deceased: if case.input.has(Husband) {
                    true
                } else if case.input.has(Wife) {
                    false
                } else {
                    self.rng.random_bool(0.5)
                },
            };
            let views = render_views(&case, &choice);
            let score = difficulty_score(&case);
            return Some(Ok(Document {
                id: format!("c{}", &fingerprint[..16]),
                category,
                difficulty: difficulty_bucket(score),
                source_tag: SourceTag::Synthetic,
                problem_text: views.problem,
                qa_text: views.qa,
                reasoning_text: views.reasoning,
                structured_output: case,
            }));
        }
        self.failed = true;
        Some(Err(GenError::Capacity {
            category,
            produced: self.produced,
            requested: self.spec.target_count,
        }))
    }
}

/// Streams `spec.target_count` unique documents matching the category mix
/// exactly (largest-remainder apportionment). Fails with a capacity error
/// if a category's distinct configuration space is exhausted.
pub fn generate_corpus(
    spec: &GenSpec,
    profile: &RuleProfile,
) -> Result<impl Iterator<Item = Result<Document, GenError>>, GenError> {
    spec.category_mix.validate()?;

    // Largest-remainder apportionment of the target across categories.
    let target = spec.target_count;
    let exact: Vec<f64> = CaseCategory::ALL
        .iter()
        .map(|&c| spec.category_mix.proportion(c) * target as f64)
        .collect();
    let mut quotas: Vec<usize> = exact.iter().map(|&e| e.floor() as usize).collect();
    let mut shortfall = target - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .partial_cmp(&(exact[a] - exact[a].floor()))
            .unwrap()
    });
    for &i in &order {
        if shortfall == 0 {
            break;
        }
        quotas[i] += 1;
        shortfall -= 1;
    }

    Ok(CorpusGen {
        spec: spec.clone(),
        profile: profile.clone(),
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        remaining: [quotas[0], quotas[1], quotas[2]],
        seen: HashSet::new(),
        produced: 0,
        failed: false,
    })
}
