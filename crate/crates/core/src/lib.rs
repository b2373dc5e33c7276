//! Analytics engine for immersive teaching-simulation session logs.
//!
//! The engine turns recorded simulation sessions (utterances, coded behavior
//! events, gaze frames) into post-session analytics:
//!
//! - cognitive-level distributions of classroom discourse ([`discourse`])
//! - 2-D semantic-space projections of utterance embeddings ([`discourse::tsne`])
//! - lag-sequential transition statistics and significance networks ([`sequence`])
//! - gaze resolution, fixation/saccade detection, dwell, equity metrics and
//!   attention heatmaps ([`gaze`])
//! - a deterministic dashboard bundle with rule-based feedback ([`report`])
//! - a seeded synthetic-session generator used as a statistical oracle
//!   ([`synth`])
//!
//! Sessions are exchanged as line-delimited JSON (`*.session.jsonl`, see
//! [`ingest`]); classifier labels and embedding vectors arrive through sidecar
//! files so the engine itself never loads a model.

pub mod discourse;
pub mod gaze;
pub mod ingest;
pub mod model;
pub mod report;
pub mod sequence;
pub mod synth;

pub use model::{
    Actor, ActorKind, BehaviorCode, BehaviorEvent, ClassLevel, CognitiveLevel, GazeFrame,
    InteractionType, SceneLayout, SessionLog, SessionMeta, Utterance,
};
