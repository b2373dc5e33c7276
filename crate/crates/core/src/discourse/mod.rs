//! Cognitive-level assignment and discourse-level aggregates.
//!
//! Two labeling paths exist: imported sidecar labels (the fidelity path, see
//! [`crate::ingest::apply_sidecar_labels`]) and the shipped keyword lexicon
//! (the self-contained path). The lexicon is a deterministic stand-in for an
//! external classifier: an ordered list of case-insensitive phrases where the
//! first match wins, ordered from higher-order levels down so that e.g.
//! "design" outranks "test".

pub mod tsne;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ActorKind, CognitiveLevel, SessionLog};

pub use tsne::{tsne_project, PointLabel, ProjectedPoint, Projection2D, TsneConfig, TsneError};

/// One ordered classification rule: a case-insensitive phrase and the level
/// it maps to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexRule {
    pub pattern: String,
    pub level: CognitiveLevel,
}

/// Ordered phrase→level table; the first matching rule wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<LexRule>", into = "Vec<LexRule>")]
pub struct Lexicon {
    rules: Vec<LexRule>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon rule {0} has an empty pattern")]
    EmptyPattern(usize),
    #[error("lexicon does not parse: {0}")]
    Malformed(#[from] serde_json::Error),
}

const DEFAULT_LEXICON_JSON: &str = include_str!("../../data/bloom_lexicon.json");

impl Lexicon {
    pub fn new(rules: Vec<LexRule>) -> Result<Lexicon, LexiconError> {
        for (i, r) in rules.iter().enumerate() {
            if r.pattern.is_empty() {
                return Err(LexiconError::EmptyPattern(i));
            }
        }
        Ok(Lexicon {
            rules: rules
                .into_iter()
                .map(|r| LexRule {
                    pattern: r.pattern.to_lowercase(),
                    level: r.level,
                })
                .collect(),
        })
    }

    /// The lexicon shipped with the engine (~20 phrases per Bloom level from
    /// standard Bloom verb lists).
    pub fn shipped() -> Lexicon {
        Lexicon::from_json(DEFAULT_LEXICON_JSON).expect("shipped lexicon is valid")
    }

    pub fn from_json(text: &str) -> Result<Lexicon, LexiconError> {
        let rules: Vec<LexRule> = serde_json::from_str(text)?;
        Lexicon::new(rules)
    }

    pub fn rules(&self) -> &[LexRule] {
        &self.rules
    }
}

impl TryFrom<Vec<LexRule>> for Lexicon {
    type Error = LexiconError;

    fn try_from(rules: Vec<LexRule>) -> Result<Self, Self::Error> {
        Lexicon::new(rules)
    }
}

impl From<Lexicon> for Vec<LexRule> {
    fn from(l: Lexicon) -> Vec<LexRule> {
        l.rules
    }
}

/// Classify one utterance text. Returns the level of the first matching rule
/// with confidence 1.0, or `(Unclassified, 0.0)` when the text is empty or
/// nothing matches.
pub fn classify_utterance(text: &str, lex: &Lexicon) -> (CognitiveLevel, f64) {
    if text.is_empty() {
        return (CognitiveLevel::Unclassified, 0.0);
    }
    let lowered = text.to_lowercase();
    for rule in &lex.rules {
        if lowered.contains(&rule.pattern) {
            return (rule.level, 1.0);
        }
    }
    (CognitiveLevel::Unclassified, 0.0)
}

/// Label every utterance in a log with the lexicon classifier. Utterances
/// that already carry a label (e.g. from a sidecar) are left untouched.
pub fn label_utterances(log: &mut SessionLog, lex: &Lexicon) {
    for u in &mut log.utterances {
        if u.level == CognitiveLevel::Unclassified && u.confidence == 0.0 {
            let (level, confidence) = classify_utterance(&u.text, lex);
            u.level = level;
            u.confidence = confidence;
        }
    }
}

/// Per-actor-kind counts of utterances per cognitive level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CognitiveDistribution {
    pub teacher: BTreeMap<CognitiveLevel, u64>,
    pub student: BTreeMap<CognitiveLevel, u64>,
    pub teacher_total: u64,
    pub student_total: u64,
    pub total: u64,
}

impl CognitiveDistribution {
    pub fn count(&self, kind: ActorKind, level: CognitiveLevel) -> u64 {
        let map = match kind {
            ActorKind::Teacher => &self.teacher,
            ActorKind::Student => &self.student,
        };
        map.get(&level).copied().unwrap_or(0)
    }

    fn bloom_count(&self, lower_only: bool) -> u64 {
        CognitiveLevel::BLOOM
            .iter()
            .filter(|l| !lower_only || l.is_lower_order())
            .map(|l| self.count(ActorKind::Teacher, *l) + self.count(ActorKind::Student, *l))
            .sum()
    }

    /// Share of Remembering + Understanding among Bloom-labeled utterances
    /// (both actor kinds); `None` when nothing is Bloom-labeled.
    pub fn lower_order_share(&self) -> Option<f64> {
        let labeled = self.bloom_count(false);
        (labeled > 0).then(|| self.bloom_count(true) as f64 / labeled as f64)
    }

    /// A corpus dominated by lower-order levels (share > 0.5) is flagged as
    /// recall-oriented in the report.
    pub fn recall_oriented(&self) -> bool {
        self.lower_order_share().is_some_and(|s| s > 0.5)
    }
}

/// Exact per-level, per-actor-kind counts over all utterances in all logs.
pub fn cognitive_distribution(logs: &[SessionLog]) -> CognitiveDistribution {
    let zeroed = || {
        CognitiveLevel::ALL
            .iter()
            .map(|l| (*l, 0u64))
            .collect::<BTreeMap<_, _>>()
    };
    let mut dist = CognitiveDistribution {
        teacher: zeroed(),
        student: zeroed(),
        teacher_total: 0,
        student_total: 0,
        total: 0,
    };
    for log in logs {
        for u in &log.utterances {
            let (map, total) = match u.actor.kind() {
                ActorKind::Teacher => (&mut dist.teacher, &mut dist.teacher_total),
                ActorKind::Student => (&mut dist.student, &mut dist.student_total),
            };
            *map.get_mut(&u.level).unwrap() += 1;
            *total += 1;
            dist.total += 1;
        }
    }
    dist
}
