//! Domain types shared by the whole pipeline and the behavior-code grammar.
//!
//! All types are immutable value types: analyses never mutate a parsed
//! [`SessionLog`], they derive new data from it, so everything here is safe to
//! share across worker threads.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Students' concentration level configured for the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLevel {
    Low,
    Medium,
    High,
}

/// Session-level context shown in the report header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub subject: String,
    pub duration_ms: u64,
    pub learning_objectives: Vec<String>,
    pub class_level: ClassLevel,
}

/// Who produced a record: the teacher or one identified student avatar.
///
/// Serializes as `"teacher"` or `{"student": "<id>"}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Teacher,
    Student(String),
}

impl Actor {
    pub fn kind(&self) -> ActorKind {
        match self {
            Actor::Teacher => ActorKind::Teacher,
            Actor::Student(_) => ActorKind::Student,
        }
    }

    pub fn student_id(&self) -> Option<&str> {
        match self {
            Actor::Teacher => None,
            Actor::Student(id) => Some(id),
        }
    }
}

/// Actor with identity erased; all transition statistics operate on kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    Teacher,
    Student,
}

/// The six Bloom levels in low-to-high order, plus `Unclassified` for
/// utterances no rule or sidecar has labeled.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum CognitiveLevel {
    Remembering,
    Understanding,
    Applying,
    Analyzing,
    Evaluating,
    Creating,
    #[default]
    Unclassified,
}

impl CognitiveLevel {
    /// The six Bloom levels, low to high, excluding `Unclassified`.
    pub const BLOOM: [CognitiveLevel; 6] = [
        CognitiveLevel::Remembering,
        CognitiveLevel::Understanding,
        CognitiveLevel::Applying,
        CognitiveLevel::Analyzing,
        CognitiveLevel::Evaluating,
        CognitiveLevel::Creating,
    ];

    /// All seven values in display order.
    pub const ALL: [CognitiveLevel; 7] = [
        CognitiveLevel::Remembering,
        CognitiveLevel::Understanding,
        CognitiveLevel::Applying,
        CognitiveLevel::Analyzing,
        CognitiveLevel::Evaluating,
        CognitiveLevel::Creating,
        CognitiveLevel::Unclassified,
    ];

    /// Lowercase name, matching the wire format and code suffixes.
    pub fn name(&self) -> &'static str {
        match self {
            CognitiveLevel::Remembering => "remembering",
            CognitiveLevel::Understanding => "understanding",
            CognitiveLevel::Applying => "applying",
            CognitiveLevel::Analyzing => "analyzing",
            CognitiveLevel::Evaluating => "evaluating",
            CognitiveLevel::Creating => "creating",
            CognitiveLevel::Unclassified => "unclassified",
        }
    }

    fn from_suffix(s: &str) -> Option<CognitiveLevel> {
        Self::BLOOM.into_iter().find(|l| l.name() == s)
    }

    /// Remembering and Understanding form the lower-order band.
    pub fn is_lower_order(&self) -> bool {
        matches!(
            self,
            CognitiveLevel::Remembering | CognitiveLevel::Understanding
        )
    }
}

/// One transcribed utterance. `level`/`confidence` start as
/// `Unclassified`/0.0 and are assigned by the lexicon classifier or an
/// imported label sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub t_start_ms: u64,
    pub t_end_ms: u64,
    pub actor: Actor,
    pub text: String,
    #[serde(default)]
    pub level: CognitiveLevel,
    #[serde(default)]
    pub confidence: f64,
}

impl Utterance {
    pub fn duration_ms(&self) -> u64 {
        self.t_end_ms.saturating_sub(self.t_start_ms)
    }
}

/// Intensity suffix carried by student behavior codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intensity {
    Low,
    High,
}

impl Intensity {
    pub fn name(&self) -> &'static str {
        match self {
            Intensity::Low => "low",
            Intensity::High => "high",
        }
    }
}

/// Final field of a behavior code: a Bloom level for teacher codes, an
/// intensity for student codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodeSuffix {
    Bloom(CognitiveLevel),
    Intensity(Intensity),
}

impl CodeSuffix {
    pub fn name(&self) -> &'static str {
        match self {
            CodeSuffix::Bloom(l) => l.name(),
            CodeSuffix::Intensity(i) => i.name(),
        }
    }
}

/// Error raised when a raw string does not parse as a behavior code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeParseError {
    /// First field is neither `t` nor `s`.
    #[error("unknown actor prefix in behavior code {0:?}")]
    UnknownActorPrefix(String),
    /// Suffix is not valid for the actor prefix (e.g. a `t` code ending in
    /// `high`, or an `s` code ending in a Bloom level).
    #[error("suffix not valid for actor prefix in behavior code {0:?}")]
    BadSuffixForActor(String),
    /// Wrong field count or a move that is not a lowercase identifier.
    #[error("malformed behavior code {0:?}")]
    MalformedCode(String),
}

/// Parsed `{actor}_{move}_{level}` behavior code, e.g. `t_focal_understanding`
/// or `s_creative_high`.
///
/// Teacher codes carry one of the six Bloom levels as suffix; student codes
/// carry `low` or `high`. Moves are an open vocabulary of lowercase
/// identifiers, so new coding schemes need no code change. Parsing is
/// case-insensitive and the canonical form round-trips losslessly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BehaviorCode {
    actor_kind: ActorKind,
    move_name: String,
    suffix: CodeSuffix,
}

impl BehaviorCode {
    /// Parse a raw code string against the `{t|s}_{move}_{suffix}` grammar.
    pub fn parse(raw: &str) -> Result<BehaviorCode, CodeParseError> {
        let lowered = raw.to_lowercase();
        let fields: Vec<&str> = lowered.split('_').collect();
        if fields.len() != 3 {
            return Err(CodeParseError::MalformedCode(raw.to_string()));
        }
        let (prefix, move_name, suffix) = (fields[0], fields[1], fields[2]);
        let actor_kind = match prefix {
            "t" => ActorKind::Teacher,
            "s" => ActorKind::Student,
            _ => return Err(CodeParseError::UnknownActorPrefix(raw.to_string())),
        };
        if move_name.is_empty()
            || !move_name.chars().next().unwrap().is_ascii_lowercase()
            || !move_name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        {
            return Err(CodeParseError::MalformedCode(raw.to_string()));
        }
        let suffix = match actor_kind {
            ActorKind::Teacher => CognitiveLevel::from_suffix(suffix)
                .map(CodeSuffix::Bloom)
                .ok_or_else(|| CodeParseError::BadSuffixForActor(raw.to_string()))?,
            ActorKind::Student => match suffix {
                "low" => CodeSuffix::Intensity(Intensity::Low),
                "high" => CodeSuffix::Intensity(Intensity::High),
                _ => return Err(CodeParseError::BadSuffixForActor(raw.to_string())),
            },
        };
        Ok(BehaviorCode {
            actor_kind,
            move_name: move_name.to_string(),
            suffix,
        })
    }

    /// Build a teacher code from parts. Returns `MalformedCode` for an
    /// invalid move identifier.
    pub fn teacher(move_name: &str, level: CognitiveLevel) -> Result<BehaviorCode, CodeParseError> {
        if matches!(level, CognitiveLevel::Unclassified) {
            return Err(CodeParseError::BadSuffixForActor(format!(
                "t_{move_name}_unclassified"
            )));
        }
        Self::parse(&format!("t_{move_name}_{}", level.name()))
    }

    /// Build a student code from parts.
    pub fn student(move_name: &str, intensity: Intensity) -> Result<BehaviorCode, CodeParseError> {
        Self::parse(&format!("s_{move_name}_{}", intensity.name()))
    }

    pub fn actor_kind(&self) -> ActorKind {
        self.actor_kind
    }

    pub fn move_name(&self) -> &str {
        &self.move_name
    }

    pub fn suffix(&self) -> CodeSuffix {
        self.suffix
    }

    /// Bloom level of a teacher code; `None` for student codes.
    pub fn bloom_level(&self) -> Option<CognitiveLevel> {
        match self.suffix {
            CodeSuffix::Bloom(l) => Some(l),
            CodeSuffix::Intensity(_) => None,
        }
    }

    /// Canonical `{prefix}_{move}_{suffix}` string form.
    pub fn canonical(&self) -> String {
        let prefix = match self.actor_kind {
            ActorKind::Teacher => 't',
            ActorKind::Student => 's',
        };
        format!("{prefix}_{}_{}", self.move_name, self.suffix.name())
    }
}

impl fmt::Display for BehaviorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for BehaviorCode {
    type Err = CodeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BehaviorCode::parse(s)
    }
}

impl TryFrom<String> for BehaviorCode {
    type Error = CodeParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        BehaviorCode::parse(&s)
    }
}

impl From<BehaviorCode> for String {
    fn from(c: BehaviorCode) -> String {
        c.canonical()
    }
}

/// One timestamped coded action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorEvent {
    pub t_ms: u64,
    pub actor: Actor,
    pub code: BehaviorCode,
}

/// One gaze sensor frame: head position in meters, gaze direction unit
/// vector (normalized on ingest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeFrame {
    pub t_ms: u64,
    pub head_pos: [f64; 3],
    pub gaze_dir: [f64; 3],
}

/// Bounding sphere of one student avatar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentAvatar {
    pub id: String,
    pub center: [f64; 3],
    pub radius: f64,
}

/// Classroom floor rectangle onto which attention heatmaps are rasterized.
///
/// `origin` is the rectangle corner; the plane spans `[0, extent_u]` x
/// `[0, extent_v]` meters along a deterministic in-plane basis derived from
/// `normal` (see `gaze::geom::plane_basis`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorPlane {
    pub origin: [f64; 3],
    pub normal: [f64; 3],
    pub extent_u: f64,
    pub extent_v: f64,
}

/// Static scene geometry: student avatars and the floor plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub students: Vec<StudentAvatar>,
    pub floor_plane: FloorPlane,
}

impl SceneLayout {
    pub fn student_ids(&self) -> impl Iterator<Item = &str> {
        self.students.iter().map(|s| s.id.as_str())
    }

    pub fn has_student(&self, id: &str) -> bool {
        self.students.iter().any(|s| s.id == id)
    }
}

/// Actor-kind pair of a transition: T→T, T→S, S→T or S→S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InteractionType {
    TT,
    TS,
    ST,
    SS,
}

impl InteractionType {
    pub const ALL: [InteractionType; 4] = [
        InteractionType::TT,
        InteractionType::TS,
        InteractionType::ST,
        InteractionType::SS,
    ];

    pub fn from_kinds(prev: ActorKind, next: ActorKind) -> InteractionType {
        match (prev, next) {
            (ActorKind::Teacher, ActorKind::Teacher) => InteractionType::TT,
            (ActorKind::Teacher, ActorKind::Student) => InteractionType::TS,
            (ActorKind::Student, ActorKind::Teacher) => InteractionType::ST,
            (ActorKind::Student, ActorKind::Student) => InteractionType::SS,
        }
    }

    /// Arrow form used in displays, e.g. `T→S`.
    pub fn arrow(&self) -> &'static str {
        match self {
            InteractionType::TT => "T→T",
            InteractionType::TS => "T→S",
            InteractionType::ST => "S→T",
            InteractionType::SS => "S→S",
        }
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InteractionType::TT => "TT",
            InteractionType::TS => "TS",
            InteractionType::ST => "ST",
            InteractionType::SS => "SS",
        })
    }
}

/// Interaction type of two adjacent records. Student identity is ignored:
/// only the actor kind matters.
pub fn interaction_type(prev: &Actor, next: &Actor) -> InteractionType {
    InteractionType::from_kinds(prev.kind(), next.kind())
}

/// One fully parsed simulation session: metadata plus the three record
/// streams, each sorted by start timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub meta: SessionMeta,
    pub utterances: Vec<Utterance>,
    pub events: Vec<BehaviorEvent>,
    pub gaze: Vec<GazeFrame>,
    pub scene: SceneLayout,
}
