//! Passage retrieval: sparse BM25, dense adapters and oracle passage sets.

pub mod bm25;
pub mod dense;
pub mod oracle_set;

pub use bm25::{Bm25Index, Bm25Params};
pub use dense::{cosine, rerank_candidates, similarity_order, EmbedError, Embedder, HashingEmbedder, RemoteEmbedder};
pub use oracle_set::{build_oracle_set, passage_set_recall, OracleSet};

use crate::dataset::{parse_passage, read_records, DataError};
use crate::model::Passage;
use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("duplicate passage id `{0}` in corpus")]
    DuplicateId(String),
    #[error("need at least {needed} candidate passages, have {have}")]
    TooFewPassages { needed: usize, have: usize },
    #[error("retriever was built for {built} passages but corpus has {actual}")]
    IndexMismatch { built: usize, actual: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
}

/// The passage collection searched by retrievers.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    passages: Vec<Passage>,
}

impl Corpus {
    pub fn new(passages: Vec<Passage>) -> Result<Self, RetrievalError> {
        let mut ids = HashSet::with_capacity(passages.len());
        for p in &passages {
            if !ids.insert(p.id.as_str()) {
                return Err(RetrievalError::DuplicateId(p.id.clone()));
            }
        }
        Ok(Corpus { passages })
    }

    /// Loads `{"id","title","text"}` records, one per line.
    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let records = read_records(path)?;
        let passages = records
            .iter()
            .enumerate()
            .map(|(index, r)| {
                parse_passage(r).map_err(|message| DataError::Record { index, message })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Corpus::new(passages)
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }
}

pub enum Retriever {
    SparseBm25(Bm25Index),
    Dense {
        embedder: Arc<dyn Embedder>,
        vectors: Vec<Vec<f32>>,
    },
}

impl Retriever {
    pub fn bm25(corpus: &Corpus) -> Self {
        Retriever::SparseBm25(Bm25Index::build(corpus.passages(), Bm25Params::default()))
    }

    /// Embeds the whole corpus up front.
    pub fn dense(corpus: &Corpus, embedder: Arc<dyn Embedder>) -> Result<Self, RetrievalError> {
        let texts: Vec<&str> = corpus.passages().iter().map(|p| p.text.as_str()).collect();
        let vectors = if texts.is_empty() {
            Vec::new()
        } else {
            embedder.embed(&texts)?
        };
        Ok(Retriever::Dense { embedder, vectors })
    }

    fn indexed(&self) -> usize {
        match self {
            Retriever::SparseBm25(ix) => ix.len(),
            Retriever::Dense { vectors, .. } => vectors.len(),
        }
    }

    /// Top-`k` passages by descending score, ties by ascending passage id.
    pub fn retrieve(
        &self,
        query: &str,
        corpus: &Corpus,
        k: usize,
    ) -> Result<Vec<Passage>, RetrievalError> {
        if corpus.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        if self.indexed() != corpus.len() {
            return Err(RetrievalError::IndexMismatch {
                built: self.indexed(),
                actual: corpus.len(),
            });
        }
        let scores: Vec<f64> = match self {
            Retriever::SparseBm25(ix) => ix.scores(query),
            Retriever::Dense { embedder, vectors } => {
                let mut s = vec![0.0; vectors.len()];
                for (i, sim) in dense::order_by_vectors(query, vectors, embedder.as_ref())? {
                    s[i] = sim;
                }
                s
            }
        };
        let passages = corpus.passages();
        let mut order: Vec<usize> = (0..passages.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| passages[a].id.cmp(&passages[b].id))
        });
        Ok(order
            .into_iter()
            .take(k)
            .map(|i| passages[i].clone().with_score(scores[i]))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> Corpus {
        Corpus::new(vec![
            Passage::new("p1", "Revolution", "the colonies declared independence in 1776"),
            Passage::new("p2", "Treaty", "the treaty of paris ended the war"),
            Passage::new("p3", "Colonies", "thirteen colonies on the atlantic coast"),
        ])
        .unwrap()
    }

    /// BM25 computed by hand from the textbook formula.
    fn hand_bm25(query: &[&str], docs: &[Vec<&str>], k1: f64, b: f64) -> Vec<f64> {
        let n = docs.len() as f64;
        let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
        docs.iter()
            .map(|d| {
                query
                    .iter()
                    .map(|t| {
                        let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
                        let tf = d.iter().filter(|x| *x == t).count() as f64;
                        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avg))
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn bm25_matches_hand_computation() {
        let docs = vec![
            vec!["revolution", "colonies", "declared", "independence", "in", "1776"],
            vec!["treaty", "treaty", "of", "paris", "ended", "war"],
            vec!["colonies", "thirteen", "colonies", "on", "atlantic", "coast"],
        ];
        let expected = hand_bm25(&["independence", "colonies"], &docs, 0.9, 0.4);
        let got = Retriever::bm25(&toy());
        let Retriever::SparseBm25(ix) = &got else { unreachable!() };
        let scores = ix.scores("independence colonies");
        for (a, b) in scores.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{scores:?} vs {expected:?}");
        }
        // "independence" occurs only in p1 and outweighs p3's double "colonies".
        let top = got.retrieve("independence colonies", &toy(), 3).unwrap();
        assert_eq!(top[0].id, "p1");
        assert_eq!(ix.scores("quantum")[1], 0.0);
    }

    #[test]
    fn k_clamps_to_corpus_and_is_deterministic() {
        let c = toy();
        let r = Retriever::bm25(&c);
        let a = r.retrieve("treaty", &c, 100).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|p| p.score.is_some()));
        assert_eq!(a, r.retrieve("treaty", &c, 100).unwrap());
        assert_eq!(a[0].id, "p2");
        // p1 and p3 both score 0; ascending id breaks the tie.
        assert_eq!((a[1].id.as_str(), a[2].id.as_str()), ("p1", "p3"));
    }

    #[test]
    fn errors() {
        let empty = Corpus::default();
        assert!(matches!(
            Retriever::bm25(&empty).retrieve("x", &empty, 3),
            Err(RetrievalError::EmptyCorpus)
        ));
        let c = toy();
        assert!(matches!(Retriever::bm25(&c).retrieve("x", &c, 0), Err(RetrievalError::ZeroK)));
        let dup = vec![Passage::new("a", "t", "x"), Passage::new("a", "t", "y")];
        assert!(matches!(Corpus::new(dup), Err(RetrievalError::DuplicateId(_))));
    }

    #[test]
    fn dense_stub_finds_exact_text() {
        let c = toy();
        let r = Retriever::dense(&c, Arc::new(HashingEmbedder::default())).unwrap();
        let top = r.retrieve("the treaty of paris ended the war", &c, 1).unwrap();
        assert_eq!(top[0].id, "p2");
        assert!((top[0].score.unwrap() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn prefix_stable(words in proptest::collection::vec("[a-e]{1,2}", 1..8), k in 1usize..12, extra in 0usize..5) {
            let passages: Vec<Passage> = (0..12)
                .map(|i| Passage::new(format!("d{i:02}"), "t", format!("{} {}", ["a", "b", "c", "d", "e"][i % 5], "x".repeat(i % 3 + 1))))
                .collect();
            let c = Corpus::new(passages).unwrap();
            let q = words.join(" ");
            for r in [Retriever::bm25(&c), Retriever::dense(&c, Arc::new(HashingEmbedder::default())).unwrap()] {
                let short = r.retrieve(&q, &c, k).unwrap();
                let long = r.retrieve(&q, &c, k + extra).unwrap();
                prop_assert_eq!(&long[..short.len()], &short[..]);
            }
        }
    }
}
