//! Lag-sequential analysis of behavior-code streams.
//!
//! Sequences are built from behavior events only (utterances feed the
//! discourse analyses instead) and never cross a session boundary. The
//! significance statistic is the Allison–Liker adjusted residual
//!
//! ```text
//! z_ij = (O_ij − E_ij) / sqrt(E_ij (1 − rowsum_i/N)(1 − colsum_j/N)),
//! E_ij = rowsum_i · colsum_j / N
//! ```
//!
//! the standard choice in behavioral LSA. Cells whose denominator is zero
//! report a null z rather than ±∞. Alternative residuals can be swapped in
//! behind [`allison_liker_z`] without touching callers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Actor, ActorKind, BehaviorCode, InteractionType, SessionLog};

/// Default two-sided 5% significance cut.
pub const DEFAULT_Z_THRESHOLD: f64 = 1.96;
/// Default strong-edge cut for the sequential network.
pub const DEFAULT_NETWORK_Z: f64 = 10.0;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("transition matrix has {0} transitions; at least 2 are required")]
    EmptyMatrix(u64),
}

/// One session's behavior codes in timestamp order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSequence {
    pub session_id: String,
    pub items: Vec<SequenceItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceItem {
    pub t_ms: u64,
    pub code: BehaviorCode,
    pub actor: Actor,
}

/// One sequence per session, events in timestamp order. Empty sessions keep
/// an empty sequence (they contribute zero transitions).
pub fn extract_sequences(logs: &[SessionLog]) -> Vec<CodeSequence> {
    logs.iter()
        .map(|log| CodeSequence {
            session_id: log.meta.session_id.clone(),
            items: log
                .events
                .iter()
                .map(|e| SequenceItem {
                    t_ms: e.t_ms,
                    code: e.code.clone(),
                    actor: e.actor.clone(),
                })
                .collect(),
        })
        .collect()
}

/// Transition counts at a fixed lag. Rows are antecedents, columns are
/// consequents; the vocabulary is sorted by canonical code string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub codes: Vec<BehaviorCode>,
    /// Row-major |codes|×|codes| counts.
    pub counts: Vec<u64>,
    /// The lag the matrix was built at.
    pub lag: usize,
    /// Total transitions (sum of all cells).
    pub n: u64,
}

impl TransitionMatrix {
    pub fn size(&self) -> usize {
        self.codes.len()
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.codes.len() + j]
    }

    pub fn index_of(&self, code: &BehaviorCode) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    pub fn row_sums(&self) -> Vec<u64> {
        let k = self.size();
        (0..k).map(|i| (0..k).map(|j| self.count(i, j)).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let k = self.size();
        (0..k).map(|j| (0..k).map(|i| self.count(i, j)).sum()).collect()
    }
}

/// Count code pairs exactly `lag` positions apart within each session.
/// No pair spans a session boundary.
pub fn transition_counts(seqs: &[CodeSequence], lag: usize) -> TransitionMatrix {
    assert!(lag >= 1, "lag must be at least 1");
    let vocab: BTreeSet<BehaviorCode> = seqs
        .iter()
        .flat_map(|s| s.items.iter().map(|i| i.code.clone()))
        .collect();
    let mut codes: Vec<BehaviorCode> = vocab.into_iter().collect();
    codes.sort_by(|a, b| a.canonical().cmp(&b.canonical()));
    let index: BTreeMap<&BehaviorCode, usize> =
        codes.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let k = codes.len();
    let mut counts = vec![0u64; k * k];
    let mut n = 0u64;
    for seq in seqs {
        if seq.items.len() <= lag {
            continue;
        }
        for w in 0..(seq.items.len() - lag) {
            let i = index[&seq.items[w].code];
            let j = index[&seq.items[w + lag].code];
            counts[i * k + j] += 1;
            n += 1;
        }
    }
    TransitionMatrix {
        codes,
        counts,
        lag,
        n,
    }
}

/// Statistics of one antecedent→consequent cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagResult {
    pub antecedent: BehaviorCode,
    pub consequent: BehaviorCode,
    pub observed: u64,
    pub expected: f64,
    /// Allison–Liker adjusted residual; `None` when the denominator is zero.
    pub z: Option<f64>,
    pub itype: InteractionType,
}

/// Allison–Liker z for every cell of the matrix.
pub fn allison_liker_z(m: &TransitionMatrix) -> Result<Vec<LagResult>, SequenceError> {
    if m.n < 2 {
        return Err(SequenceError::EmptyMatrix(m.n));
    }
    let k = m.size();
    let rows = m.row_sums();
    let cols = m.col_sums();
    let n = m.n as f64;
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let expected = rows[i] as f64 * cols[j] as f64 / n;
            let denom_sq =
                expected * (1.0 - rows[i] as f64 / n) * (1.0 - cols[j] as f64 / n);
            let observed = m.count(i, j);
            let z = if denom_sq > 0.0 {
                Some((observed as f64 - expected) / denom_sq.sqrt())
            } else {
                None
            };
            out.push(LagResult {
                antecedent: m.codes[i].clone(),
                consequent: m.codes[j].clone(),
                observed,
                expected,
                z,
                itype: InteractionType::from_kinds(
                    m.codes[i].actor_kind(),
                    m.codes[j].actor_kind(),
                ),
            });
        }
    }
    Ok(out)
}

/// Cells with a defined z at or above the threshold, sorted by z descending,
/// ties broken by (antecedent, consequent) canonical order.
pub fn significant_patterns(results: &[LagResult], z_threshold: f64) -> Vec<LagResult> {
    let mut patterns: Vec<LagResult> = results
        .iter()
        .filter(|r| r.z.is_some_and(|z| z >= z_threshold))
        .cloned()
        .collect();
    patterns.sort_by(|a, b| {
        b.z.unwrap()
            .total_cmp(&a.z.unwrap())
            .then_with(|| a.antecedent.canonical().cmp(&b.antecedent.canonical()))
            .then_with(|| a.consequent.canonical().cmp(&b.consequent.canonical()))
    });
    patterns
}

/// How the percentage denominator of a [`TypeBreakdown`] is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorPolicy {
    /// All significant patterns, regardless of type.
    AllSignificant,
    /// The sum of the per-type counts present in the breakdown.
    SumOfReportedTypes,
}

/// Per-type pattern counts with percentages of a stated denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeBreakdown {
    /// Count and percentage (1-decimal) per interaction type; types with no
    /// patterns are omitted.
    pub per_type: BTreeMap<InteractionType, TypeShare>,
    pub denominator: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeShare {
    pub count: u64,
    pub percentage: f64,
}

fn percentage(count: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        return 0.0;
    }
    (1000.0 * count as f64 / denominator as f64).round() / 10.0
}

impl TypeBreakdown {
    /// Build from explicit per-type counts and a stated denominator.
    pub fn from_counts(counts: &BTreeMap<InteractionType, u64>, denominator: u64) -> TypeBreakdown {
        TypeBreakdown {
            per_type: counts
                .iter()
                .filter(|(_, &c)| c > 0)
                .map(|(&t, &count)| {
                    (
                        t,
                        TypeShare {
                            count,
                            percentage: percentage(count, denominator),
                        },
                    )
                })
                .collect(),
            denominator,
        }
    }

    /// Display line for one type, e.g. `69 patterns; 34.8%`.
    pub fn display_line(&self, t: InteractionType) -> Option<String> {
        self.per_type
            .get(&t)
            .map(|s| format!("{} patterns; {:.1}%", s.count, s.percentage))
    }
}

/// Group significant patterns by interaction type.
pub fn type_breakdown(patterns: &[LagResult], policy: DenominatorPolicy) -> TypeBreakdown {
    let mut counts: BTreeMap<InteractionType, u64> = BTreeMap::new();
    for p in patterns {
        *counts.entry(p.itype).or_insert(0) += 1;
    }
    let denominator = match policy {
        DenominatorPolicy::AllSignificant => patterns.len() as u64,
        DenominatorPolicy::SumOfReportedTypes => counts.values().sum(),
    };
    TypeBreakdown::from_counts(&counts, denominator)
}

/// Five-number summary of a z-score sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    // linear interpolation between order statistics
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Five-number summaries of defined z-scores grouped by interaction type;
/// types with no results are omitted.
pub fn zscore_distribution(results: &[LagResult]) -> BTreeMap<InteractionType, ZSummary> {
    let mut grouped: BTreeMap<InteractionType, Vec<f64>> = BTreeMap::new();
    for r in results {
        if let Some(z) = r.z {
            grouped.entry(r.itype).or_default().push(z);
        }
    }
    grouped
        .into_iter()
        .map(|(t, mut zs)| {
            zs.sort_by(f64::total_cmp);
            (
                t,
                ZSummary {
                    min: zs[0],
                    q1: quantile(&zs, 0.25),
                    median: quantile(&zs, 0.5),
                    q3: quantile(&zs, 0.75),
                    max: zs[zs.len() - 1],
                    count: zs.len(),
                },
            )
        })
        .collect()
}

/// Directed graph of strong transitions. A node may carry many out-edges;
/// the branching is the point of the visualization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialNetwork {
    pub nodes: Vec<NetworkNode>,
    pub edges: Vec<LagResult>,
    pub z_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub code: BehaviorCode,
    pub actor_kind: ActorKind,
}

/// Keep patterns with z ≥ z_min (inclusive cut); nodes are the endpoint
/// codes of the surviving edges, sorted by canonical code string.
pub fn build_network(patterns: &[LagResult], z_min: f64) -> SequentialNetwork {
    let edges: Vec<LagResult> = patterns
        .iter()
        .filter(|p| p.z.is_some_and(|z| z >= z_min))
        .cloned()
        .collect();
    let mut codes: BTreeSet<BehaviorCode> = BTreeSet::new();
    for e in &edges {
        codes.insert(e.antecedent.clone());
        codes.insert(e.consequent.clone());
    }
    let mut nodes: Vec<NetworkNode> = codes
        .into_iter()
        .map(|code| NetworkNode {
            actor_kind: code.actor_kind(),
            code,
        })
        .collect();
    nodes.sort_by(|a, b| a.code.canonical().cmp(&b.code.canonical()));
    SequentialNetwork {
        nodes,
        edges,
        z_min,
    }
}

/// Machine-readable `lsa.json` payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LsaExport {
    pub vocabulary: Vec<BehaviorCode>,
    pub lag: usize,
    pub n_transitions: u64,
    /// Row-major counts over the vocabulary.
    pub counts: Vec<u64>,
    pub cells: Vec<LagResult>,
    pub significant: Vec<LagResult>,
    pub z_threshold: f64,
    pub breakdown: TypeBreakdown,
    pub z_distribution: BTreeMap<InteractionType, ZSummary>,
    pub network: SequentialNetwork,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::test_fixtures::minimal_log;
    use crate::model::BehaviorEvent;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn code(s: &str) -> BehaviorCode {
        BehaviorCode::parse(s).unwrap()
    }

    fn seq(id: &str, codes: &[&str]) -> CodeSequence {
        CodeSequence {
            session_id: id.into(),
            items: codes
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let code = code(c);
                    let actor = match code.actor_kind() {
                        ActorKind::Teacher => Actor::Teacher,
                        ActorKind::Student => Actor::Student("s1".into()),
                    };
                    SequenceItem {
                        t_ms: i as u64 * 1000,
                        code,
                        actor,
                    }
                })
                .collect(),
        }
    }

    const A: &str = "t_focal_understanding";
    const B: &str = "t_funnel_analyzing";
    const C: &str = "s_disagreement_low";
    const D: &str = "s_creative_high";

    #[test]
    fn extracts_one_sequence_per_session_events_only() {
        let mut log = minimal_log();
        log.events = vec![
            BehaviorEvent {
                t_ms: 10,
                actor: Actor::Teacher,
                code: code(A),
            },
            BehaviorEvent {
                t_ms: 20,
                actor: Actor::Teacher,
                code: code(B),
            },
            BehaviorEvent {
                t_ms: 30,
                actor: Actor::Teacher,
                code: code(A),
            },
        ];
        log.utterances.push(crate::model::Utterance {
            t_start_ms: 0,
            t_end_ms: 5,
            actor: Actor::Teacher,
            text: "ignored by sequences".into(),
            level: crate::model::CognitiveLevel::Unclassified,
            confidence: 0.0,
        });
        let empty = minimal_log();
        let seqs = extract_sequences(&[log, empty]);
        assert_eq!(seqs.len(), 2);
        assert_eq!(
            seqs[0].items.iter().map(|i| i.code.canonical()).collect::<Vec<_>>(),
            vec![A, B, A]
        );
        assert!(seqs[1].items.is_empty());
    }

    #[test]
    fn counts_adjacent_pairs_in_one_session() {
        let m = transition_counts(&[seq("s", &[A, B, A, B, A, B])], 1);
        let (ia, ib) = (m.index_of(&code(A)).unwrap(), m.index_of(&code(B)).unwrap());
        assert_eq!(m.count(ia, ib), 3);
        assert_eq!(m.count(ib, ia), 2);
        assert_eq!(m.n, 5);
    }

    #[test]
    fn no_pair_spans_a_session_boundary() {
        let m = transition_counts(&[seq("x", &[A, B]), seq("y", &[B, A])], 1);
        let (ia, ib) = (m.index_of(&code(A)).unwrap(), m.index_of(&code(B)).unwrap());
        assert_eq!(m.count(ia, ib), 1);
        assert_eq!(m.count(ib, ia), 1);
        assert_eq!(m.n, 2);
    }

    #[test]
    fn single_event_session_yields_empty_matrix() {
        let m = transition_counts(&[seq("s", &[A])], 1);
        assert_eq!(m.n, 0);
        assert!(m.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn lag_two_counts_skip_one_position() {
        let m = transition_counts(&[seq("s", &[A, B, A, B, A])], 2);
        let ia = m.index_of(&code(A)).unwrap();
        assert_eq!(m.count(ia, ia), 3); // positions (0,2) (2,4) and (1,3) is B,B
        assert_eq!(m.n, 3);
    }

    #[test]
    fn toy_sequence_z_matches_hand_formula() {
        let m = transition_counts(&[seq("s", &[A, B, A, B, A, B])], 1);
        let results = allison_liker_z(&m).unwrap();
        let ab = results
            .iter()
            .find(|r| r.antecedent == code(A) && r.consequent == code(B))
            .unwrap();
        assert_eq!(ab.observed, 3);
        assert!((ab.expected - 1.8).abs() < 1e-12);
        // (3 − 1.8)/sqrt(1.8·0.4·0.4) = sqrt(5)
        assert!((ab.z.unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert!((ab.z.unwrap() - 2.236).abs() < 0.001);
        assert_eq!(ab.itype, InteractionType::TT);
    }

    #[test]
    fn observed_equal_expected_gives_zero_z() {
        // uniform 2-cycle over A,B plus the reverse makes all cells equal
        let m = transition_counts(&[seq("s", &[A, B, A]), seq("t", &[B, A, B])], 1);
        let results = allison_liker_z(&m).unwrap();
        for r in results {
            if r.observed as f64 == r.expected {
                if let Some(z) = r.z {
                    assert_eq!(z, 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_denominator_reports_null_z() {
        // every transition leaves A and enters B: row B and column A are empty
        let m = transition_counts(&[seq("s", &[A, B])], 1);
        let results = allison_liker_z(&m);
        // N = 1 < 2 → EmptyMatrix instead
        assert!(matches!(results, Err(SequenceError::EmptyMatrix(1))));

        let m = transition_counts(&[seq("s", &[A, B]), seq("t", &[A, B])], 1);
        let results = allison_liker_z(&m).unwrap();
        let ba = results
            .iter()
            .find(|r| r.antecedent == code(B) && r.consequent == code(A))
            .unwrap();
        assert_eq!(ba.z, None);
        // full rows/columns also zero the denominator: column B holds all mass
        let ab = results
            .iter()
            .find(|r| r.antecedent == code(A) && r.consequent == code(B))
            .unwrap();
        assert_eq!(ab.z, None);
    }

    #[test]
    fn significant_patterns_filter_and_sort() {
        let mk = |a: &str, b: &str, z: f64| LagResult {
            antecedent: code(a),
            consequent: code(b),
            observed: 1,
            expected: 0.5,
            z: Some(z),
            itype: InteractionType::from_kinds(code(a).actor_kind(), code(b).actor_kind()),
        };
        let results = vec![mk(A, B, 2.5), mk(B, A, 1.0), mk(C, D, 3.1)];
        let sig = significant_patterns(&results, 1.96);
        assert_eq!(sig.len(), 2);
        assert_eq!(sig[0].z, Some(3.1));
        assert_eq!(sig[1].z, Some(2.5));

        let strong = significant_patterns(
            &[mk(A, B, 12.0), mk(B, A, 9.0), mk(C, D, 15.0)],
            10.0,
        );
        assert_eq!(strong.len(), 2);

        assert!(significant_patterns(&[], 1.96).is_empty());

        // threshold is inclusive, ties break on code order
        let tied = significant_patterns(&[mk(B, A, 2.0), mk(A, B, 2.0)], 2.0);
        assert_eq!(tied[0].antecedent, code(A));
    }

    #[test]
    fn breakdown_percentages_over_chosen_denominator() {
        let mk = |a: &str, b: &str| LagResult {
            antecedent: code(a),
            consequent: code(b),
            observed: 1,
            expected: 0.5,
            z: Some(2.5),
            itype: InteractionType::from_kinds(code(a).actor_kind(), code(b).actor_kind()),
        };
        // TT ×2, SS ×1, ST ×1
        let patterns = vec![mk(A, B), mk(B, A), mk(C, D), mk(D, A)];
        let b = type_breakdown(&patterns, DenominatorPolicy::AllSignificant);
        assert_eq!(b.denominator, 4);
        assert_eq!(b.per_type[&InteractionType::TT].percentage, 50.0);
        assert_eq!(b.per_type[&InteractionType::SS].percentage, 25.0);
        assert_eq!(b.per_type[&InteractionType::ST].percentage, 25.0);
        assert!(!b.per_type.contains_key(&InteractionType::TS));

        let empty = type_breakdown(&[], DenominatorPolicy::SumOfReportedTypes);
        assert_eq!(empty.denominator, 0);
        assert!(empty.per_type.is_empty());
    }

    #[test]
    fn breakdown_reproduces_published_display_shape() {
        let counts: BTreeMap<InteractionType, u64> = [
            (InteractionType::TT, 69),
            (InteractionType::SS, 110),
            (InteractionType::ST, 16),
        ]
        .into_iter()
        .collect();
        let b = TypeBreakdown::from_counts(&counts, 198);
        assert_eq!(
            b.display_line(InteractionType::TT).unwrap(),
            "69 patterns; 34.8%"
        );
        assert_eq!(
            b.display_line(InteractionType::SS).unwrap(),
            "110 patterns; 55.6%"
        );
        assert_eq!(
            b.display_line(InteractionType::ST).unwrap(),
            "16 patterns; 8.1%"
        );
    }

    #[test]
    fn quantiles_use_linear_interpolation() {
        let mk = |z: f64| LagResult {
            antecedent: code(C),
            consequent: code(D),
            observed: 1,
            expected: 0.5,
            z: Some(z),
            itype: InteractionType::SS,
        };
        let results: Vec<LagResult> = [1.0, 2.0, 3.0, 4.0, 5.0].map(mk).to_vec();
        let summary = &zscore_distribution(&results)[&InteractionType::SS];
        assert_eq!(summary.q1, 2.0);
        assert_eq!(summary.median, 3.0);
        assert_eq!(summary.q3, 4.0);
        assert_eq!(summary.min, 1.0);
        assert_eq!(summary.max, 5.0);
        assert_eq!(summary.count, 5);

        let one = zscore_distribution(&[mk(2.5)]);
        let s = &one[&InteractionType::SS];
        assert_eq!((s.min, s.median, s.max), (2.5, 2.5, 2.5));
        assert!(!one.contains_key(&InteractionType::TT));
    }

    #[test]
    fn network_keeps_branching_and_self_loops() {
        let mk = |a: &str, b: &str, z: f64| LagResult {
            antecedent: code(a),
            consequent: code(b),
            observed: 1,
            expected: 0.5,
            z: Some(z),
            itype: InteractionType::from_kinds(code(a).actor_kind(), code(b).actor_kind()),
        };
        let net = build_network(&[mk(A, B, 12.0), mk(A, C, 11.0), mk(B, D, 9.0)], 10.0);
        assert_eq!(net.edges.len(), 2);
        let out_degree = net
            .edges
            .iter()
            .filter(|e| e.antecedent == code(A))
            .count();
        assert_eq!(out_degree, 2);
        assert_eq!(net.nodes.len(), 3); // A, B, C — D's edge fell below the cut

        let empty = build_network(&[mk(A, B, 5.0)], 10.0);
        assert!(empty.edges.is_empty());
        assert!(empty.nodes.is_empty());

        let looped = build_network(&[mk(A, A, 20.0)], 10.0);
        assert_eq!(looped.edges.len(), 1);
        assert_eq!(looped.nodes.len(), 1);
    }

    // Independent oracle: exhaustive pair enumeration plus the z formula
    // written out from scratch.
    fn oracle_counts(seqs: &[Vec<usize>], k: usize, lag: usize) -> Vec<Vec<u64>> {
        let mut m = vec![vec![0u64; k]; k];
        for s in seqs {
            for w in 0..s.len() {
                if w + lag < s.len() {
                    m[s[w]][s[w + lag]] += 1;
                }
            }
        }
        m
    }

    fn oracle_z(m: &[Vec<u64>]) -> Vec<Vec<Option<f64>>> {
        let k = m.len();
        let n: u64 = m.iter().flatten().sum();
        let rows: Vec<f64> = (0..k).map(|i| m[i].iter().sum::<u64>() as f64).collect();
        let cols: Vec<f64> = (0..k).map(|j| (0..k).map(|i| m[i][j]).sum::<u64>() as f64).collect();
        let nf = n as f64;
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let e = rows[i] * cols[j] / nf;
                        let d = e * (1.0 - rows[i] / nf) * (1.0 - cols[j] / nf);
                        (d > 0.0).then(|| (m[i][j] as f64 - e) / d.sqrt())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_oracle_on_random_sequences() {
        let codes = [code(A), code(B), code(C), code(D)];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let k = rng.gen_range(2..=4);
            let len = rng.gen_range(2..=20);
            let raw: Vec<usize> = (0..len).map(|_| rng.gen_range(0..k)).collect();
            let sequence = CodeSequence {
                session_id: "r".into(),
                items: raw
                    .iter()
                    .map(|&c| SequenceItem {
                        t_ms: 0,
                        code: codes[c].clone(),
                        actor: Actor::Teacher,
                    })
                    .collect(),
            };
            let m = transition_counts(&[sequence], 1);
            // map vocabulary order back to raw indices
            let used: Vec<usize> = m
                .codes
                .iter()
                .map(|c| codes.iter().position(|x| x == c).unwrap())
                .collect();
            let oracle_m = oracle_counts(&[raw.clone()], 4, 1);
            for (mi, &ci) in used.iter().enumerate() {
                for (mj, &cj) in used.iter().enumerate() {
                    assert_eq!(m.count(mi, mj), oracle_m[ci][cj]);
                }
            }
            if m.n >= 2 {
                let dense: Vec<Vec<u64>> = used
                    .iter()
                    .map(|_| vec![0u64; used.len()])
                    .collect::<Vec<_>>();
                let mut dense = dense;
                for i in 0..used.len() {
                    for j in 0..used.len() {
                        dense[i][j] = m.count(i, j);
                    }
                }
                let zo = oracle_z(&dense);
                let results = allison_liker_z(&m).unwrap();
                for r in &results {
                    let i = m.index_of(&r.antecedent).unwrap();
                    let j = m.index_of(&r.consequent).unwrap();
                    match (r.z, zo[i][j]) {
                        (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                        (None, None) => {}
                        other => panic!("z definedness mismatch: {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn marginals_conserve_total() {
        let m = transition_counts(
            &[seq("s", &[A, B, C, D, A, C, B]), seq("t", &[D, D, A])],
            1,
        );
        assert_eq!(m.row_sums().iter().sum::<u64>(), m.n);
        assert_eq!(m.col_sums().iter().sum::<u64>(), m.n);
    }

    #[test]
    fn raising_threshold_never_adds_patterns() {
        let m = transition_counts(&[seq("s", &[A, B, A, C, A, B, D, A, B, C])], 1);
        let results = allison_liker_z(&m).unwrap();
        let mut prev = usize::MAX;
        for t in [0.0, 0.5, 1.0, 1.96, 3.0, 10.0] {
            let n = significant_patterns(&results, t).len();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn appending_empty_session_changes_nothing() {
        let base = vec![seq("s", &[A, B, A, B, C])];
        let mut extended = base.clone();
        extended.push(seq("empty", &[]));
        let m1 = transition_counts(&base, 1);
        let m2 = transition_counts(&extended, 1);
        assert_eq!(m1, m2);
    }

    #[test]
    fn permutation_null_flags_about_five_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let base: Vec<usize> = (0..500).map(|_| rng.gen_range(0..4)).collect();
        let codes = [code(A), code(B), code(C), code(D)];
        let to_seq = |raw: &[usize]| CodeSequence {
            session_id: "p".into(),
            items: raw
                .iter()
                .map(|&c| SequenceItem {
                    t_ms: 0,
                    code: codes[c].clone(),
                    actor: Actor::Teacher,
                })
                .collect(),
        };
        let mut flags = 0u32;
        let shuffles = 10_000;
        let mut work = base.clone();
        for _ in 0..shuffles {
            work.shuffle(&mut rng);
            let m = transition_counts(&[to_seq(&work)], 1);
            let results = allison_liker_z(&m).unwrap();
            let cell = results
                .iter()
                .find(|r| r.antecedent == codes[0] && r.consequent == codes[1])
                .unwrap();
            if cell.z.is_some_and(|z| z.abs() >= 1.96) {
                flags += 1;
            }
        }
        let rate = flags as f64 / shuffles as f64;
        assert!(
            (0.03..=0.07).contains(&rate),
            "null flag rate {rate} outside 5% ± 2%"
        );
    }
}
