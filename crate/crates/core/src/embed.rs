//! Initial node features.
//!
//! Each node's code is tokenized C-style (punctuation kept), every token is
//! mapped to a vector, and the node's feature row is the mean of its token
//! vectors. Token vectors come from a skip-gram model with negative sampling
//! trained on the corpus itself, or from a hashing embedder when training is
//! not wanted.

use std::collections::HashMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::CodeStructureGraph;

/// Feature matrix, row `i` = node `i`.
pub type NodeMatrix = Array2<f64>;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot fit embeddings on an empty corpus")]
    EmptyCorpus,
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("invalid embedding table: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

const MULTI_CHAR_OPS: [&str; 24] = [
    ">>=", "<<=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=",
    "/=", "%=", "&=", "^=", "|=", "::", "##",
];

/// Splits C/C++ code into identifiers, numbers, string/char literals and
/// operators. Whitespace is discarded; nothing else is dropped.
pub fn tokenize_code(code: &str) -> Vec<String> {
    let chars: Vec<char> = code.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(chars[start..i].iter().collect());
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exponent_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E' | 'p' | 'P');
                if d.is_alphanumeric() || d == '.' || d == '_' || exponent_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(chars[start..i].iter().collect());
        } else if c == '"' || c == '\'' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != c {
                if chars[i] == '\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(chars.len());
            tokens.push(chars[start..i].iter().collect());
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            let op = MULTI_CHAR_OPS.iter().find(|op| rest.starts_with(*op));
            let len = op.map_or(1, |op| op.chars().count());
            tokens.push(chars[i..i + len].iter().collect());
            i += len;
        }
    }
    tokens
}

/// Source of token vectors.
pub trait TokenEmbedder {
    fn dim(&self) -> usize;
    /// Writes the vector of `token` into `out` (length `dim()`).
    fn write_vector(&self, token: &str, out: &mut [f64]);
    /// Vector used for nodes without tokens.
    fn empty_vector(&self) -> Vec<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig { window: 5, negatives: 5, epochs: 5, learning_rate: 0.025 }
    }
}

/// Learned token vectors; `oov` is the mean of all rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr")]
pub struct TokenEmbeddingTable {
    pub d: usize,
    pub vocab: Vec<String>,
    /// Row-major `|vocab| x d`.
    pub vectors: Vec<f64>,
    pub oov: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct TableRepr {
    d: usize,
    vocab: Vec<String>,
    vectors: Vec<f64>,
    #[serde(default)]
    oov: Vec<f64>,
}

impl TryFrom<TableRepr> for TokenEmbeddingTable {
    type Error = EmbedError;

    fn try_from(raw: TableRepr) -> Result<Self, EmbedError> {
        let mut table = Self::new(raw.d, raw.vocab, raw.vectors)?;
        if raw.oov.len() == table.d {
            table.oov = raw.oov;
        }
        Ok(table)
    }
}

impl TokenEmbeddingTable {
    pub fn new(d: usize, vocab: Vec<String>, vectors: Vec<f64>) -> Result<Self, EmbedError> {
        if d == 0 {
            return Err(EmbedError::ZeroDimension);
        }
        if vectors.len() != vocab.len() * d {
            return Err(EmbedError::Invalid(format!(
                "{} values for {} tokens of dimension {d}",
                vectors.len(),
                vocab.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::Invalid("non-finite vector entry".into()));
        }
        let mut oov = vec![0.0; d];
        if !vocab.is_empty() {
            for row in vectors.chunks(d) {
                for (o, v) in oov.iter_mut().zip(row) {
                    *o += v;
                }
            }
            oov.iter_mut().for_each(|o| *o /= vocab.len() as f64);
        }
        let index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(TokenEmbeddingTable { d, vocab, vectors, oov, index })
    }

    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| &self.vectors[i * self.d..(i + 1) * self.d])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serializes")
    }

    pub fn from_json(text: &[u8]) -> Result<Self, EmbedError> {
        Ok(serde_json::from_slice(text)?)
    }

    /// Multiplies every vector (and the OOV vector) by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut t = self.clone();
        t.vectors.iter_mut().for_each(|v| *v *= c);
        t.oov.iter_mut().for_each(|v| *v *= c);
        t
    }
}

impl TokenEmbedder for TokenEmbeddingTable {
    fn dim(&self) -> usize {
        self.d
    }

    fn write_vector(&self, token: &str, out: &mut [f64]) {
        out.copy_from_slice(self.lookup(token).unwrap_or(&self.oov));
    }

    fn empty_vector(&self) -> Vec<f64> {
        self.oov.clone()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Token sequence of one graph: node tokens concatenated in node order.
pub fn graph_tokens(g: &CodeStructureGraph) -> Vec<String> {
    g.nodes().iter().flat_map(|n| tokenize_code(&n.code)).collect()
}

/// Trains skip-gram vectors with negative sampling over the token streams of
/// all graphs. Deterministic for a fixed seed.
pub fn fit_token_embeddings<'a, I>(
    graphs: I,
    d: usize,
    seed: u64,
    cfg: &SkipGramConfig,
) -> Result<TokenEmbeddingTable, EmbedError>
where
    I: IntoIterator<Item = &'a CodeStructureGraph>,
{
    if d == 0 {
        return Err(EmbedError::ZeroDimension);
    }
    let streams: Vec<Vec<String>> = graphs.into_iter().map(graph_tokens).filter(|s| !s.is_empty()).collect();
    if streams.is_empty() {
        return Err(EmbedError::EmptyCorpus);
    }

    // vocabulary by descending frequency, ties lexicographic
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in &streams {
        for t in s {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut by_freq: Vec<(&str, u64)> = counts.into_iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let vocab: Vec<String> = by_freq.iter().map(|(t, _)| t.to_string()).collect();
    let index: HashMap<&str, usize> = by_freq.iter().enumerate().map(|(i, (t, _))| (*t, i)).collect();
    let sentences: Vec<Vec<usize>> =
        streams.iter().map(|s| s.iter().map(|t| index[t.as_str()]).collect()).collect();

    // unigram^0.75 noise distribution as a cumulative table
    let weights: Vec<f64> = by_freq.iter().map(|(_, c)| (*c as f64).powf(0.75)).collect();
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }

    let v = vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut input: Vec<f64> = (0..v * d).map(|_| (rng.gen::<f64>() - 0.5) / d as f64).collect();
    let mut output = vec![0.0; v * d];
    let mut grad = vec![0.0; d];

    let total_steps = (cfg.epochs * sentences.iter().map(Vec::len).sum::<usize>()).max(1);
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let lr = (cfg.learning_rate * (1.0 - step as f64 / total_steps as f64)).max(cfg.learning_rate * 1e-4);
                step += 1;
                let reach = rng.gen_range(1..=cfg.window.max(1));
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sentence.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = sentence[ctx_pos];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let ci = center * d;
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let r: f64 = rng.gen();
                            let t = cumulative.partition_point(|&c| c < r).min(v - 1);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let ti = target * d;
                        let dot: f64 = (0..d).map(|j| input[ci + j] * output[ti + j]).sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for j in 0..d {
                            grad[j] += g * output[ti + j];
                            output[ti + j] += g * input[ci + j];
                        }
                    }
                    for j in 0..d {
                        input[ci + j] += grad[j];
                    }
                }
            }
        }
    }
    TokenEmbeddingTable::new(d, vocab, input)
}

/// Token -> pseudo-random unit vector derived from a stable hash of the token.
#[derive(Clone, Debug, PartialEq)]
pub struct HashingEmbedder {
    pub d: usize,
    pub salt: u64,
}

impl HashingEmbedder {
    pub fn new(d: usize) -> Self {
        HashingEmbedder { d, salt: 0 }
    }
}

fn fnv1a(bytes: &[u8], salt: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ salt;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl TokenEmbedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.d
    }

    fn write_vector(&self, token: &str, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes(), self.salt));
        for o in out.iter_mut() {
            *o = rng.gen::<f64>() * 2.0 - 1.0;
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|x| *x /= norm);
        }
    }

    fn empty_vector(&self) -> Vec<f64> {
        vec![0.0; self.d]
    }
}

/// Row `i` is the mean token vector of node `i`.
pub fn initial_node_matrix<E: TokenEmbedder + ?Sized>(g: &CodeStructureGraph, embedder: &E) -> NodeMatrix {
    let d = embedder.dim();
    let mut m = NodeMatrix::zeros((g.num_nodes(), d));
    let mut buf = vec![0.0; d];
    for (i, node) in g.nodes().iter().enumerate() {
        let tokens = tokenize_code(&node.code);
        let mut row = m.row_mut(i);
        if tokens.is_empty() {
            row.assign(&ndarray::ArrayView1::from(&embedder.empty_vector()));
            continue;
        }
        for t in &tokens {
            embedder.write_vector(t, &mut buf);
            for (r, b) in row.iter_mut().zip(&buf) {
                *r += b;
            }
        }
        let n = tokens.len() as f64;
        row.iter_mut().for_each(|r| *r /= n);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, RawNode};

    fn toks(s: &str) -> Vec<String> {
        tokenize_code(s)
    }

    #[test]
    fn tokenizer_examples() {
        assert!(toks("").is_empty());
        assert_eq!(toks("scanf(\"%s\",str);"), ["scanf", "(", "\"%s\"", ",", "str", ")", ";"]);
        assert_eq!(toks("char str [ 15 ]"), toks("char str[15]"));
        assert_eq!(toks("p->next != NULL"), ["p", "->", "next", "!=", "NULL"]);
        assert_eq!(toks("x+=1.5e-3;"), ["x", "+=", "1.5e-3", ";"]);
        assert_eq!(toks("c = '\\'';"), ["c", "=", "'\\''", ";"]);
        assert_eq!(toks("\"unterminated"), ["\"unterminated"]);
    }

    fn one_node_graph(code: &str) -> CodeStructureGraph {
        build_graph(vec![RawNode::new(0, "Identifier", code)], vec![], "f", None).unwrap()
    }

    #[test]
    fn singleton_vocabulary() {
        let g = one_node_graph("x");
        let t = fit_token_embeddings([&g], 8, 1, &SkipGramConfig::default()).unwrap();
        assert_eq!(t.vocab, ["x"]);
        assert_eq!(t.lookup("x").unwrap().len(), 8);
    }

    #[test]
    fn fit_errors() {
        let g = one_node_graph("");
        assert!(matches!(
            fit_token_embeddings([&g], 8, 1, &SkipGramConfig::default()),
            Err(EmbedError::EmptyCorpus)
        ));
        assert!(matches!(
            fit_token_embeddings([&one_node_graph("x")], 0, 1, &SkipGramConfig::default()),
            Err(EmbedError::ZeroDimension)
        ));
    }

    #[test]
    fn averaging() {
        let table = TokenEmbeddingTable::new(2, vec!["a".into(), "b".into()], vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        let g = build_graph(
            vec![
                RawNode::new(0, "N", "a"),
                RawNode::new(1, "N", "a a"),
                RawNode::new(2, "N", "a b"),
                RawNode::new(3, "N", ""),
                RawNode::new(4, "N", "zzz"),
            ],
            vec![],
            "f",
            None,
        )
        .unwrap();
        let m = initial_node_matrix(&g, &table);
        assert_eq!(m.row(0).to_vec(), [1.0, 2.0]);
        assert_eq!(m.row(1).to_vec(), [1.0, 2.0]);
        assert_eq!(m.row(2).to_vec(), [2.0, 4.0]);
        assert_eq!(m.row(3).to_vec(), [2.0, 4.0]); // oov = mean of rows
        assert_eq!(m.row(4).to_vec(), [2.0, 4.0]);
    }

    #[test]
    fn hashing_vectors_are_unit_and_stable() {
        let h = HashingEmbedder::new(16);
        let mut a = vec![0.0; 16];
        let mut b = vec![0.0; 16];
        h.write_vector("strcpy", &mut a);
        h.write_vector("strcpy", &mut b);
        assert_eq!(a, b);
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        h.write_vector("strncpy", &mut b);
        assert_ne!(a, b);
    }

    #[test]
    fn table_json_round_trip() {
        let g = one_node_graph("a = b + c ;");
        let t = fit_token_embeddings([&g], 4, 3, &SkipGramConfig::default()).unwrap();
        let back = TokenEmbeddingTable::from_json(t.to_json().as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.lookup("b"), t.lookup("b"));
    }
}
