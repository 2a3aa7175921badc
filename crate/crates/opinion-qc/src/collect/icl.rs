//! In-context-learning prompt construction: random or nearest-neighbor
//! example selection over a pool of human-labeled claims.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stats::RngStream;

use super::{ChatPrompt, CollectError, Persona};

/// System message used for every in-context prompt.
pub const ICL_SYSTEM_MESSAGE: &str =
    "You are a calibrated social science assistant, helping with an experiment. Return only a number.";

/// A labeled pool claim with per-condition mean ratings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IclExample {
    pub claim_id: String,
    pub text: String,
    pub man: f64,
    pub woman: f64,
    pub average: f64,
}

/// Claim-id-keyed embedding vectors for nearest-neighbor selection.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EmbeddingStore {
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn insert(&mut self, claim_id: impl Into<String>, vector: Vec<f64>) {
        self.vectors.insert(claim_id.into(), vector);
    }

    pub fn get(&self, claim_id: &str) -> Option<&[f64]> {
        self.vectors.get(claim_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Cosine similarity; zero-norm vectors rank below everything.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return -1.0;
    }
    dot / (na * nb)
}

/// How in-context examples are chosen.
pub enum IclSelector<'a> {
    /// k examples drawn uniformly without replacement.
    Random(&'a mut RngStream),
    /// Top-k pool claims by cosine similarity to the target, ties broken
    /// by pool order.
    Nearest(&'a EmbeddingStore),
}

fn example_block(ex: &IclExample) -> String {
    format!(
        "Claim: {}\nMan: {:.1}\nWoman: {:.1}\nAverage: {:.1}",
        ex.text, ex.man, ex.woman, ex.average
    )
}

/// Select the k in-context examples; exposed for testing the ranking.
pub fn select_icl_examples<'p>(
    selector: &mut IclSelector,
    k: usize,
    pool: &'p [IclExample],
    target_claim_id: &str,
) -> Result<Vec<&'p IclExample>, CollectError> {
    // The target claim never appears among its own examples.
    let eligible: Vec<&IclExample> = pool
        .iter()
        .filter(|e| e.claim_id != target_claim_id)
        .collect();
    if eligible.len() < k {
        return Err(CollectError::PoolTooSmall {
            available: eligible.len(),
            requested: k,
        });
    }
    match selector {
        IclSelector::Random(rng) => {
            let mut indices: Vec<usize> = (0..eligible.len()).collect();
            // Partial Fisher-Yates: the first k slots are a uniform sample.
            for i in 0..k {
                let j = i + rng.random_range(0..indices.len() - i);
                indices.swap(i, j);
            }
            Ok(indices[..k].iter().map(|&i| eligible[i]).collect())
        }
        IclSelector::Nearest(store) => {
            let target = store
                .get(target_claim_id)
                .ok_or_else(|| CollectError::MissingEmbedding(target_claim_id.to_string()))?;
            let mut scored: Vec<(usize, f64)> = Vec::with_capacity(eligible.len());
            for (i, ex) in eligible.iter().enumerate() {
                let vector = store
                    .get(&ex.claim_id)
                    .ok_or_else(|| CollectError::MissingEmbedding(ex.claim_id.clone()))?;
                scored.push((i, cosine_similarity(target, vector)));
            }
            // Stable sort keeps pool order among equal similarities.
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
            Ok(scored[..k].iter().map(|&(i, _)| eligible[i]).collect())
        }
    }
}

/// Build the full in-context prompt for a target claim and persona.
pub fn build_icl_prompt(
    selector: &mut IclSelector,
    k: usize,
    pool: &[IclExample],
    target_claim_id: &str,
    target_text: &str,
    persona: Persona,
) -> Result<ChatPrompt, CollectError> {
    let examples = select_icl_examples(selector, k, pool, target_claim_id)?;
    let mut user = String::new();
    for ex in examples {
        user.push_str(&example_block(ex));
        user.push_str("\n\n");
    }
    user.push_str(&format!("Claim: {target_text}\n{}:", persona.icl_label()));
    Ok(ChatPrompt {
        system: Some(ICL_SYSTEM_MESSAGE.to_string()),
        user,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::derive_rng;

    fn pool() -> Vec<IclExample> {
        (0..5)
            .map(|i| IclExample {
                claim_id: format!("p{i}"),
                text: format!("pool claim {i}"),
                man: 4.9,
                woman: 6.0,
                average: 5.1,
            })
            .collect()
    }

    #[test]
    fn random_selection_is_seed_deterministic() {
        let pool = pool();
        let pick = |seed: u64| {
            let mut rng = derive_rng(seed, &["icl"]);
            let mut sel = IclSelector::Random(&mut rng);
            select_icl_examples(&mut sel, 3, &pool, "target")
                .unwrap()
                .iter()
                .map(|e| e.claim_id.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(pick(1), pick(1));
        // Distinct examples, target excluded.
        let ids = pick(1);
        let unique: std::collections::BTreeSet<_> = ids.iter().collect();
        assert_eq!(unique.len(), 3);
    }

    #[test]
    fn identical_embedding_ranks_first() {
        let pool = pool();
        let mut store = EmbeddingStore::default();
        store.insert("target", vec![1.0, 0.0]);
        store.insert("p0", vec![0.0, 1.0]);
        store.insert("p1", vec![1.0, 0.0]);
        store.insert("p2", vec![0.7, 0.7]);
        store.insert("p3", vec![-1.0, 0.0]);
        store.insert("p4", vec![0.9, 0.1]);
        let mut sel = IclSelector::Nearest(&store);
        let picked = select_icl_examples(&mut sel, 2, &pool, "target").unwrap();
        assert_eq!(picked[0].claim_id, "p1");
    }

    #[test]
    fn nearest_ranking_matches_brute_force() {
        // 10 deterministic pseudo-random vectors, ranked by an independent
        // argmax loop instead of the sort used by the selector.
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let pool: Vec<IclExample> = (0..10)
            .map(|i| IclExample {
                claim_id: format!("p{i}"),
                text: format!("claim {i}"),
                man: 1.0,
                woman: 1.0,
                average: 1.0,
            })
            .collect();
        let mut store = EmbeddingStore::default();
        let target: Vec<f64> = (0..8).map(|_| next()).collect();
        store.insert("target", target.clone());
        let mut vectors = Vec::new();
        for i in 0..10 {
            let v: Vec<f64> = (0..8).map(|_| next()).collect();
            store.insert(format!("p{i}"), v.clone());
            vectors.push(v);
        }

        let mut sims: Vec<(usize, f64)> = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, cosine_similarity(&target, v)))
            .collect();
        let mut expected = Vec::new();
        for _ in 0..4 {
            let best = sims
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
                .map(|(slot, _)| slot)
                .unwrap();
            expected.push(format!("p{}", sims[best].0));
            sims.remove(best);
        }

        let mut sel = IclSelector::Nearest(&store);
        let picked: Vec<String> = select_icl_examples(&mut sel, 4, &pool, "target")
            .unwrap()
            .iter()
            .map(|e| e.claim_id.clone())
            .collect();
        assert_eq!(picked, expected);
    }

    #[test]
    fn pool_of_k_uses_all_in_similarity_order() {
        let pool: Vec<IclExample> = pool().into_iter().take(3).collect();
        let mut store = EmbeddingStore::default();
        store.insert("target", vec![1.0, 0.0]);
        store.insert("p0", vec![0.5, 0.5]);
        store.insert("p1", vec![1.0, 0.1]);
        store.insert("p2", vec![0.0, 1.0]);
        let mut sel = IclSelector::Nearest(&store);
        let picked: Vec<String> = select_icl_examples(&mut sel, 3, &pool, "target")
            .unwrap()
            .iter()
            .map(|e| e.claim_id.clone())
            .collect();
        assert_eq!(picked, vec!["p1", "p0", "p2"]);
    }

    #[test]
    fn pool_too_small_and_missing_embeddings_error() {
        let pool = pool();
        let mut rng = derive_rng(1, &["icl"]);
        let mut sel = IclSelector::Random(&mut rng);
        assert!(matches!(
            select_icl_examples(&mut sel, 6, &pool, "p0"),
            Err(CollectError::PoolTooSmall { available: 4, requested: 6 })
        ));
        let store = EmbeddingStore::default();
        let mut sel = IclSelector::Nearest(&store);
        assert!(matches!(
            select_icl_examples(&mut sel, 2, &pool, "target"),
            Err(CollectError::MissingEmbedding(_))
        ));
    }

    #[test]
    fn prompt_format_matches_block_layout() {
        let pool = pool();
        let mut rng = derive_rng(3, &["icl"]);
        let mut sel = IclSelector::Random(&mut rng);
        let prompt =
            build_icl_prompt(&mut sel, 2, &pool, "target", "target claim", Persona::Woman)
                .unwrap();
        assert_eq!(prompt.system.as_deref(), Some(ICL_SYSTEM_MESSAGE));
        assert!(prompt.user.contains("Man: 4.9\nWoman: 6.0\nAverage: 5.1"));
        assert!(prompt.user.ends_with("Claim: target claim\nWoman:"));
        let base = build_icl_prompt(
            &mut IclSelector::Nearest(&{
                let mut s = EmbeddingStore::default();
                for i in 0..5 {
                    s.insert(format!("p{i}"), vec![i as f64, 1.0]);
                }
                s.insert("target", vec![1.0, 1.0]);
                s
            }),
            2,
            &pool,
            "target",
            "target claim",
            Persona::Base,
        )
        .unwrap();
        assert!(base.user.ends_with("Claim: target claim\nAverage:"));
    }
}
