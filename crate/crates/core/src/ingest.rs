//! Parsing, validation and normalization of session files and sidecars.
//!
//! Session files are line-delimited JSON (`*.session.jsonl`): one record per
//! line, discriminated by a `kind` field in {meta, utterance, event, gaze,
//! scene}. Records may appear in any order; exactly one `meta` and one
//! `scene` record are required. Label and embedding sidecars decouple model
//! inference from the engine: the engine never loads a neural model.
//!
//! Parsing is strict about structure (record shape, meta/scene uniqueness,
//! gaze-direction magnitude, negative timestamps) and leaves semantic range
//! checks (timestamps beyond the session duration, actor/code mismatches) to
//! [`validate`], which reports them as data rather than failing.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Actor, ActorKind, BehaviorCode, BehaviorEvent, ClassLevel, CognitiveLevel, FloorPlane,
    GazeFrame, SceneLayout, SessionLog, SessionMeta, Utterance,
};

/// Gaze-direction magnitudes inside this band are normalized silently
/// (sensor scale drift); outside it the frame is rejected as corrupt.
pub const GAZE_NORM_MIN: f64 = 0.5;
pub const GAZE_NORM_MAX: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("no meta record in stream")]
    MissingMeta,
    #[error("no scene record in stream")]
    MissingScene,
    #[error("duplicate meta record at line {0}")]
    DuplicateMeta(usize),
    #[error("duplicate scene record at line {0}")]
    DuplicateScene(usize),
    #[error("malformed record at line {line}: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error("gaze direction magnitude {magnitude} outside [{GAZE_NORM_MIN}, {GAZE_NORM_MAX}] at line {line}")]
    ZeroGazeDirection { line: usize, magnitude: f64 },
    #[error("negative timestamp at line {0}")]
    TimestampOutOfRange(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error("utterance index {0} out of range ({1} utterances)")]
    IndexOutOfRange(usize, usize),
    #[error("duplicate utterance index {0}")]
    DuplicateIndex(usize),
}

/// Wire records of a `*.session.jsonl` stream.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Meta {
        session_id: String,
        subject: String,
        duration_ms: u64,
        learning_objectives: Vec<String>,
        class_level: ClassLevel,
    },
    Scene {
        students: Vec<WireStudent>,
        floor_plane: FloorPlane,
    },
    Utterance {
        t_start_ms: i64,
        t_end_ms: i64,
        actor: Actor,
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<CognitiveLevel>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        confidence: Option<f64>,
    },
    Event {
        t_ms: i64,
        actor: Actor,
        code: BehaviorCode,
    },
    Gaze {
        t_ms: i64,
        head_pos: [f64; 3],
        gaze_dir: [f64; 3],
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct WireStudent {
    id: String,
    center: [f64; 3],
    radius: f64,
}

fn non_negative(t: i64, line: usize) -> Result<u64, ParseError> {
    u64::try_from(t).map_err(|_| ParseError::TimestampOutOfRange(line))
}

fn normalize_gaze_dir(dir: [f64; 3], line: usize) -> Result<[f64; 3], ParseError> {
    let mag = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if !(GAZE_NORM_MIN..=GAZE_NORM_MAX).contains(&mag) {
        return Err(ParseError::ZeroGazeDirection {
            line,
            magnitude: mag,
        });
    }
    // Already-unit vectors pass through bit-identically so that
    // parse(serialize(log)) round-trips exactly.
    if (mag - 1.0).abs() <= 1e-9 {
        return Ok(dir);
    }
    Ok([dir[0] / mag, dir[1] / mag, dir[2] / mag])
}

/// Parse one session from line-delimited JSON text.
pub fn parse_session(stream: &str) -> Result<SessionLog, ParseError> {
    let mut meta: Option<SessionMeta> = None;
    let mut scene: Option<SceneLayout> = None;
    let mut utterances: Vec<Utterance> = Vec::new();
    let mut events: Vec<BehaviorEvent> = Vec::new();
    let mut gaze: Vec<GazeFrame> = Vec::new();

    for (idx, raw_line) in stream.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(trimmed).map_err(|e| ParseError::MalformedRecord {
                line,
                detail: e.to_string(),
            })?;
        match record {
            Record::Meta {
                session_id,
                subject,
                duration_ms,
                learning_objectives,
                class_level,
            } => {
                if meta.is_some() {
                    return Err(ParseError::DuplicateMeta(line));
                }
                meta = Some(SessionMeta {
                    session_id,
                    subject,
                    duration_ms,
                    learning_objectives,
                    class_level,
                });
            }
            Record::Scene {
                students,
                floor_plane,
            } => {
                if scene.is_some() {
                    return Err(ParseError::DuplicateScene(line));
                }
                scene = Some(SceneLayout {
                    students: students
                        .into_iter()
                        .map(|s| crate::model::StudentAvatar {
                            id: s.id,
                            center: s.center,
                            radius: s.radius,
                        })
                        .collect(),
                    floor_plane,
                });
            }
            Record::Utterance {
                t_start_ms,
                t_end_ms,
                actor,
                text,
                level,
                confidence,
            } => {
                utterances.push(Utterance {
                    t_start_ms: non_negative(t_start_ms, line)?,
                    t_end_ms: non_negative(t_end_ms, line)?,
                    actor,
                    text,
                    level: level.unwrap_or(CognitiveLevel::Unclassified),
                    confidence: confidence.unwrap_or(0.0),
                });
            }
            Record::Event { t_ms, actor, code } => {
                events.push(BehaviorEvent {
                    t_ms: non_negative(t_ms, line)?,
                    actor,
                    code,
                });
            }
            Record::Gaze {
                t_ms,
                head_pos,
                gaze_dir,
            } => {
                gaze.push(GazeFrame {
                    t_ms: non_negative(t_ms, line)?,
                    head_pos,
                    gaze_dir: normalize_gaze_dir(gaze_dir, line)?,
                });
            }
        }
    }

    let meta = meta.ok_or(ParseError::MissingMeta)?;
    let scene = scene.ok_or(ParseError::MissingScene)?;

    // Stable sorts keep input order for equal timestamps.
    utterances.sort_by_key(|u| u.t_start_ms);
    events.sort_by_key(|e| e.t_ms);
    gaze.sort_by_key(|g| g.t_ms);

    Ok(SessionLog {
        meta,
        utterances,
        events,
        gaze,
        scene,
    })
}

/// Serialize a session back to line-delimited JSON: meta, scene, then the
/// utterance/event/gaze lists in their stored order. `parse_session` of the
/// output reproduces the input exactly.
pub fn serialize_session(log: &SessionLog) -> String {
    let mut out = String::new();
    let mut push = |record: &Record| {
        writeln!(out, "{}", serde_json::to_string(record).expect("record serializes")).unwrap();
    };
    push(&Record::Meta {
        session_id: log.meta.session_id.clone(),
        subject: log.meta.subject.clone(),
        duration_ms: log.meta.duration_ms,
        learning_objectives: log.meta.learning_objectives.clone(),
        class_level: log.meta.class_level,
    });
    push(&Record::Scene {
        students: log
            .scene
            .students
            .iter()
            .map(|s| WireStudent {
                id: s.id.clone(),
                center: s.center,
                radius: s.radius,
            })
            .collect(),
        floor_plane: log.scene.floor_plane.clone(),
    });
    for u in &log.utterances {
        let labeled = u.level != CognitiveLevel::Unclassified || u.confidence != 0.0;
        push(&Record::Utterance {
            t_start_ms: u.t_start_ms as i64,
            t_end_ms: u.t_end_ms as i64,
            actor: u.actor.clone(),
            text: u.text.clone(),
            level: labeled.then_some(u.level),
            confidence: labeled.then_some(u.confidence),
        });
    }
    for e in &log.events {
        push(&Record::Event {
            t_ms: e.t_ms as i64,
            actor: e.actor.clone(),
            code: e.code.clone(),
        });
    }
    for g in &log.gaze {
        push(&Record::Gaze {
            t_ms: g.t_ms as i64,
            head_pos: g.head_pos,
            gaze_dir: g.gaze_dir,
        });
    }
    out
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the offending record within its list (0 for session-level
    /// violations).
    pub record_index: usize,
    pub rule: String,
    pub detail: String,
}

/// Result of validating a parsed log. Violations are data, not errors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub fatal: bool,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Rule classes that do not block analysis.
const NON_FATAL_RULES: [&str; 1] = ["empty_text_labeled"];

/// Check every session-model invariant and collect violations.
///
/// An empty violations list implies `fatal = false`; `fatal` is set when any
/// violation belongs to a fatal rule class (all rules except labeling
/// oddities like `empty_text_labeled`).
pub fn validate(log: &SessionLog) -> ValidationReport {
    let mut v: Vec<Violation> = Vec::new();
    let mut report = |index: usize, rule: &str, detail: String| {
        v.push(Violation {
            record_index: index,
            rule: rule.to_string(),
            detail,
        });
    };

    if log.meta.session_id.is_empty() {
        report(0, "session_id_empty", "meta.session_id is empty".into());
    }

    let dur = log.meta.duration_ms;
    let known_student = |actor: &Actor| match actor {
        Actor::Teacher => true,
        Actor::Student(id) => log.scene.has_student(id),
    };

    // scene invariants
    let mut seen = BTreeSet::new();
    for (i, s) in log.scene.students.iter().enumerate() {
        if !seen.insert(s.id.as_str()) {
            report(i, "duplicate_student_id", format!("student {:?}", s.id));
        }
        if s.radius <= 0.0 {
            report(
                i,
                "nonpositive_radius",
                format!("student {:?} radius {}", s.id, s.radius),
            );
        }
    }
    if log.scene.floor_plane.extent_u <= 0.0 || log.scene.floor_plane.extent_v <= 0.0 {
        report(0, "nonpositive_extent", "floor plane extent must be > 0".into());
    }

    // utterances
    for (i, u) in log.utterances.iter().enumerate() {
        if u.t_start_ms > u.t_end_ms {
            report(
                i,
                "utterance_time_inverted",
                format!("utterance {i}: {} > {}", u.t_start_ms, u.t_end_ms),
            );
        }
        if u.t_end_ms.max(u.t_start_ms) > dur {
            report(
                i,
                "timestamp_out_of_range",
                format!("utterance {i} ends at {} > duration {dur}", u.t_end_ms),
            );
        }
        if u.text.is_empty() && u.level != CognitiveLevel::Unclassified {
            report(
                i,
                "empty_text_labeled",
                format!("utterance {i} has empty text but level {:?}", u.level),
            );
        }
        if !known_student(&u.actor) {
            report(
                i,
                "unknown_student",
                format!("utterance {i} actor {:?} not in scene", u.actor),
            );
        }
        if i > 0 && log.utterances[i - 1].t_start_ms > u.t_start_ms {
            report(i, "records_unsorted", format!("utterance {i} out of order"));
        }
    }

    // events
    for (i, e) in log.events.iter().enumerate() {
        if e.t_ms > dur {
            report(
                i,
                "timestamp_out_of_range",
                format!("event {i} at {} > duration {dur}", e.t_ms),
            );
        }
        if e.actor.kind() != e.code.actor_kind() {
            report(
                i,
                "actor_code_mismatch",
                format!("event {i}: actor {:?} vs code {}", e.actor, e.code),
            );
        }
        if !known_student(&e.actor) {
            report(
                i,
                "unknown_student",
                format!("event {i} actor {:?} not in scene", e.actor),
            );
        }
        if i > 0 && log.events[i - 1].t_ms > e.t_ms {
            report(i, "records_unsorted", format!("event {i} out of order"));
        }
    }

    // gaze frames
    for (i, g) in log.gaze.iter().enumerate() {
        if g.t_ms > dur {
            report(
                i,
                "timestamp_out_of_range",
                format!("gaze frame {i} at {} > duration {dur}", g.t_ms),
            );
        }
        let mag =
            (g.gaze_dir[0].powi(2) + g.gaze_dir[1].powi(2) + g.gaze_dir[2].powi(2)).sqrt();
        if (mag - 1.0).abs() > 1e-3 {
            report(
                i,
                "gaze_dir_not_unit",
                format!("gaze frame {i} |dir| = {mag}"),
            );
        }
        if i > 0 && log.gaze[i - 1].t_ms > g.t_ms {
            report(i, "records_unsorted", format!("gaze frame {i} out of order"));
        }
    }

    let fatal = v.iter().any(|x| !NON_FATAL_RULES.contains(&x.rule.as_str()));
    ValidationReport {
        violations: v,
        fatal,
    }
}

/// Externally produced cognitive labels for a session's utterances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub entries: Vec<LabelEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelEntry {
    pub utterance_index: usize,
    pub level: CognitiveLevel,
    pub confidence: f64,
}

/// Externally produced embedding vectors for a session's utterances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingSidecar {
    pub dim: usize,
    pub entries: Vec<EmbeddingEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingEntry {
    pub utterance_index: usize,
    pub vector: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum SidecarLoadError {
    #[error("sidecar does not parse: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("embedding for utterance {index} has length {got}, sidecar dim is {dim}")]
    DimensionMismatch { index: usize, got: usize, dim: usize },
    #[error("duplicate utterance index {0} in sidecar")]
    DuplicateIndex(usize),
    #[error("sidecar dim must be > 0")]
    ZeroDim,
}

/// Parse a `*.labels.json` sidecar.
pub fn load_label_sidecar(text: &str) -> Result<LabelSidecar, SidecarLoadError> {
    let sidecar: LabelSidecar = serde_json::from_str(text)?;
    let mut seen = BTreeSet::new();
    for e in &sidecar.entries {
        if !seen.insert(e.utterance_index) {
            return Err(SidecarLoadError::DuplicateIndex(e.utterance_index));
        }
    }
    Ok(sidecar)
}

/// Parse a `*.embeddings.json` sidecar, enforcing its invariants.
pub fn load_embedding_sidecar(text: &str) -> Result<EmbeddingSidecar, SidecarLoadError> {
    let sidecar: EmbeddingSidecar = serde_json::from_str(text)?;
    if sidecar.dim == 0 {
        return Err(SidecarLoadError::ZeroDim);
    }
    let mut seen = BTreeSet::new();
    for e in &sidecar.entries {
        if !seen.insert(e.utterance_index) {
            return Err(SidecarLoadError::DuplicateIndex(e.utterance_index));
        }
        if e.vector.len() != sidecar.dim {
            return Err(SidecarLoadError::DimensionMismatch {
                index: e.utterance_index,
                got: e.vector.len(),
                dim: sidecar.dim,
            });
        }
    }
    Ok(sidecar)
}

/// Apply sidecar labels onto the referenced utterances. Untouched utterances
/// keep their prior level; applying the same sidecar twice is a no-op.
pub fn apply_sidecar_labels(
    mut log: SessionLog,
    labels: &LabelSidecar,
) -> Result<SessionLog, SidecarError> {
    let mut seen = BTreeSet::new();
    for e in &labels.entries {
        if !seen.insert(e.utterance_index) {
            return Err(SidecarError::DuplicateIndex(e.utterance_index));
        }
        if e.utterance_index >= log.utterances.len() {
            return Err(SidecarError::IndexOutOfRange(
                e.utterance_index,
                log.utterances.len(),
            ));
        }
    }
    for e in &labels.entries {
        let u = &mut log.utterances[e.utterance_index];
        u.level = e.level;
        u.confidence = e.confidence;
    }
    Ok(log)
}


#[cfg(test)]
mod tests {
    use super::test_fixtures::*;
    use super::*;

    const META: &str = r#"{"kind":"meta","session_id":"s","subject":"math","duration_ms":10000,"learning_objectives":["lo"],"class_level":"medium"}"#;
    const SCENE: &str = r#"{"kind":"scene","students":[{"id":"s1","center":[0,1,2],"radius":0.5}],"floor_plane":{"origin":[0,0,0],"normal":[0,1,0],"extent_u":8.0,"extent_v":6.0}}"#;

    fn stream(extra: &[&str]) -> String {
        let mut lines = vec![META.to_string(), SCENE.to_string()];
        lines.extend(extra.iter().map(|s| s.to_string()));
        lines.join("\n")
    }

    #[test]
    fn sorts_out_of_order_records() {
        let s = stream(&[
            r#"{"kind":"utterance","t_start_ms":5000,"t_end_ms":6000,"actor":"teacher","text":"b"}"#,
            r#"{"kind":"utterance","t_start_ms":1000,"t_end_ms":2000,"actor":"teacher","text":"a"}"#,
        ]);
        let log = parse_session(&s).unwrap();
        assert_eq!(log.utterances[0].text, "a");
        assert_eq!(log.utterances[1].text, "b");
    }

    #[test]
    fn normalizes_scaled_gaze_direction() {
        let s = stream(&[r#"{"kind":"gaze","t_ms":0,"head_pos":[0,0,0],"gaze_dir":[0,0,2]}"#]);
        let log = parse_session(&s).unwrap();
        assert_eq!(log.gaze[0].gaze_dir, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_out_of_band_gaze_magnitude() {
        let s = stream(&[r#"{"kind":"gaze","t_ms":0,"head_pos":[0,0,0],"gaze_dir":[0,0,0.01]}"#]);
        assert!(matches!(
            parse_session(&s),
            Err(ParseError::ZeroGazeDirection { .. })
        ));
        let s = stream(&[r#"{"kind":"gaze","t_ms":0,"head_pos":[0,0,0],"gaze_dir":[0,0,5]}"#]);
        assert!(matches!(
            parse_session(&s),
            Err(ParseError::ZeroGazeDirection { .. })
        ));
    }

    #[test]
    fn missing_meta_is_an_error() {
        assert!(matches!(
            parse_session(SCENE),
            Err(ParseError::MissingMeta)
        ));
        assert!(matches!(
            parse_session(META),
            Err(ParseError::MissingScene)
        ));
    }

    #[test]
    fn duplicate_meta_is_an_error() {
        let s = [META, SCENE, META].join("\n");
        assert!(matches!(parse_session(&s), Err(ParseError::DuplicateMeta(3))));
    }

    #[test]
    fn malformed_record_reports_line_number() {
        let s = [META, SCENE, "{\"kind\":\"event\""].join("\n");
        match parse_session(&s) {
            Err(ParseError::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected MalformedRecord, got {other:?}"),
        }
    }

    #[test]
    fn negative_timestamp_is_out_of_range() {
        let s = stream(&[r#"{"kind":"event","t_ms":-5,"actor":"teacher","code":"t_focal_applying"}"#]);
        assert!(matches!(
            parse_session(&s),
            Err(ParseError::TimestampOutOfRange(3))
        ));
    }

    #[test]
    fn validate_flags_timestamp_beyond_duration() {
        let mut log = minimal_log();
        log.events.push(BehaviorEvent {
            t_ms: 70_000,
            actor: Actor::Teacher,
            code: BehaviorCode::parse("t_focal_applying").unwrap(),
        });
        let report = validate(&log);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, "timestamp_out_of_range");
        assert!(report.fatal);
    }

    #[test]
    fn validate_passes_consistent_log() {
        let report = validate(&minimal_log());
        assert!(report.is_clean());
        assert!(!report.fatal);
    }

    #[test]
    fn validate_flags_actor_code_mismatch() {
        let mut log = minimal_log();
        log.events.push(BehaviorEvent {
            t_ms: 1000,
            actor: Actor::Teacher,
            code: BehaviorCode::parse("s_disagreement_low").unwrap(),
        });
        let report = validate(&log);
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule == "actor_code_mismatch"));
    }

    #[test]
    fn validate_flags_unknown_student() {
        let mut log = minimal_log();
        log.utterances.push(Utterance {
            t_start_ms: 0,
            t_end_ms: 100,
            actor: Actor::Student("ghost".into()),
            text: "hi".into(),
            level: CognitiveLevel::Unclassified,
            confidence: 0.0,
        });
        let report = validate(&log);
        assert!(report.violations.iter().any(|v| v.rule == "unknown_student"));
    }

    #[test]
    fn empty_text_with_label_is_non_fatal() {
        let mut log = minimal_log();
        log.utterances.push(Utterance {
            t_start_ms: 0,
            t_end_ms: 100,
            actor: Actor::Teacher,
            text: String::new(),
            level: CognitiveLevel::Applying,
            confidence: 1.0,
        });
        let report = validate(&log);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, "empty_text_labeled");
        assert!(!report.fatal);
    }

    #[test]
    fn sidecar_labels_apply_and_are_idempotent() {
        let mut log = minimal_log();
        log.utterances.push(Utterance {
            t_start_ms: 0,
            t_end_ms: 100,
            actor: Actor::Teacher,
            text: "why".into(),
            level: CognitiveLevel::Unclassified,
            confidence: 0.0,
        });
        let sidecar = LabelSidecar {
            entries: vec![LabelEntry {
                utterance_index: 0,
                level: CognitiveLevel::Analyzing,
                confidence: 0.9,
            }],
        };
        let once = apply_sidecar_labels(log, &sidecar).unwrap();
        assert_eq!(once.utterances[0].level, CognitiveLevel::Analyzing);
        assert_eq!(once.utterances[0].confidence, 0.9);
        let twice = apply_sidecar_labels(once.clone(), &sidecar).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn empty_sidecar_leaves_log_unchanged() {
        let log = minimal_log();
        let out = apply_sidecar_labels(log.clone(), &LabelSidecar { entries: vec![] }).unwrap();
        assert_eq!(out, log);
    }

    #[test]
    fn sidecar_index_out_of_range() {
        let log = minimal_log(); // zero utterances
        let sidecar = LabelSidecar {
            entries: vec![LabelEntry {
                utterance_index: 5,
                level: CognitiveLevel::Applying,
                confidence: 1.0,
            }],
        };
        assert!(matches!(
            apply_sidecar_labels(log, &sidecar),
            Err(SidecarError::IndexOutOfRange(5, 0))
        ));
    }

    #[test]
    fn embedding_sidecar_checks_dimensions() {
        let ok = r#"{"dim":2,"entries":[{"utterance_index":0,"vector":[1.0,2.0]}]}"#;
        assert!(load_embedding_sidecar(ok).is_ok());
        let bad = r#"{"dim":2,"entries":[{"utterance_index":0,"vector":[1.0]}]}"#;
        assert!(matches!(
            load_embedding_sidecar(bad),
            Err(SidecarLoadError::DimensionMismatch { .. })
        ));
        let dup = r#"{"dim":1,"entries":[{"utterance_index":0,"vector":[1.0]},{"utterance_index":0,"vector":[2.0]}]}"#;
        assert!(matches!(
            load_embedding_sidecar(dup),
            Err(SidecarLoadError::DuplicateIndex(0))
        ));
    }

    #[test]
    fn serialize_parse_roundtrip_on_labeled_log() {
        let mut log = minimal_log();
        log.utterances.push(Utterance {
            t_start_ms: 100,
            t_end_ms: 900,
            actor: Actor::Student("s1".into()),
            text: "because it floats".into(),
            level: CognitiveLevel::Evaluating,
            confidence: 0.75,
        });
        log.events.push(BehaviorEvent {
            t_ms: 500,
            actor: Actor::Teacher,
            code: BehaviorCode::parse("t_funnel_analyzing").unwrap(),
        });
        log.gaze.push(GazeFrame {
            t_ms: 200,
            head_pos: [0.0, 1.6, 0.0],
            gaze_dir: [0.0, 0.0, 1.0],
        });
        let text = serialize_session(&log);
        let back = parse_session(&text).unwrap();
        assert_eq!(back, log);
        // and the round trip is byte-stable
        assert_eq!(serialize_session(&back), text);
    }
}
