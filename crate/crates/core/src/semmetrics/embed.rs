//! Sample embeddings.
//!
//! The builtin provider is a deterministic latent-semantic embedding: the
//! TF-IDF matrix is reduced with a seeded randomized SVD (range finder with
//! two power iterations) and each document is represented by its coordinates
//! on the top right-singular vectors, then L2-normalized. The external
//! provider speaks a small JSON protocol over HTTP:
//!
//! ```text
//! POST <endpoint>/embed   {"texts": ["...", ...]}          (at most 64 texts)
//! 200                     {"vectors": [[f, ...], ...], "dim": d}
//! ```

use std::hash::Hash;
use std::io::Read;
use std::time::Duration;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::cosine::normalize;
use super::tfidf::{tfidf_fit_transform, SparseVector};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// Largest batch the external protocol accepts.
pub const MAX_BATCH: usize = 64;

const OVERSAMPLE: usize = 10;
const POWER_ITERATIONS: usize = 2;
/// Singular values below this fraction of the largest are treated as zero.
const RELATIVE_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    BuiltinSvd,
    ExternalHttp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProviderSpec {
    pub kind: EmbedderKind,
    pub endpoint: Option<String>,
    pub svd_rank: usize,
    pub seed: u64,
    /// Use the builtin provider when the external one fails.
    pub fallback_to_builtin: bool,
}

impl Default for EmbeddingProviderSpec {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::BuiltinSvd,
            endpoint: None,
            svd_rank: 256,
            seed: 0,
            fallback_to_builtin: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub dimension: usize,
    pub vectors: Vec<Vec<f64>>,
    pub provider: EmbedderKind,
}

/// Embeds samples given both their raw texts (external provider) and tokens
/// (builtin provider).
pub fn embed<T, S>(texts: &[&str], tokens: &[S], spec: &EmbeddingProviderSpec) -> Result<Embeddings>
where
    T: Hash + Eq + Clone + Sync,
    S: AsRef<[T]> + Sync,
{
    match spec.kind {
        EmbedderKind::BuiltinSvd => builtin(tokens, spec),
        EmbedderKind::ExternalHttp => {
            let endpoint = spec
                .endpoint
                .as_deref()
                .ok_or_else(|| Error::Config("http embedder needs an endpoint url".into()))?;
            match external(texts, endpoint) {
                Ok(e) => Ok(e),
                Err(_) if spec.fallback_to_builtin => builtin(tokens, spec),
                Err(e) => Err(e),
            }
        }
    }
}

fn builtin<T, S>(tokens: &[S], spec: &EmbeddingProviderSpec) -> Result<Embeddings>
where
    T: Hash + Eq + Clone + Sync,
    S: AsRef<[T]> + Sync,
{
    let n = tokens.len();
    if n < 2 {
        return Err(Error::undefined("cos_embed", "fewer than two samples"));
    }
    if spec.svd_rank == 0 {
        return Err(Error::Config("svd rank must be positive".into()));
    }
    let model = tfidf_fit_transform(tokens)?;
    let vocab = model.vocabulary_size();
    let rank = spec.svd_rank.min(vocab).min(n - 1);
    let coords = randomized_svd_coordinates(&model.documents, vocab, rank, spec.seed);
    let vectors = (0..n)
        .map(|i| normalize(&coords.row(i).iter().copied().collect::<Vec<_>>()))
        .collect();
    Ok(Embeddings {
        dimension: rank,
        vectors,
        provider: EmbedderKind::BuiltinSvd,
    })
}

/// Sparse rows times a dense `cols x k` matrix.
fn sparse_mul(rows: &[SparseVector], dense: &DMatrix<f64>) -> DMatrix<f64> {
    let k = dense.ncols();
    let mut out = DMatrix::zeros(rows.len(), k);
    for (i, r) in rows.iter().enumerate() {
        for (&c, &v) in r.indices.iter().zip(&r.values) {
            for j in 0..k {
                out[(i, j)] += v * dense[(c, j)];
            }
        }
    }
    out
}

/// Transposed sparse rows times a dense `rows x k` matrix.
fn sparse_t_mul(rows: &[SparseVector], cols: usize, dense: &DMatrix<f64>) -> DMatrix<f64> {
    let k = dense.ncols();
    let mut out = DMatrix::zeros(cols, k);
    for (i, r) in rows.iter().enumerate() {
        for (&c, &v) in r.indices.iter().zip(&r.values) {
            for j in 0..k {
                out[(c, j)] += v * dense[(i, j)];
            }
        }
    }
    out
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Document coordinates `X v_k` on the top `rank` right-singular vectors of
/// the sparse matrix `X`, with each `v_k` signed so its largest-magnitude
/// entry is positive.
fn randomized_svd_coordinates(
    rows: &[SparseVector],
    cols: usize,
    rank: usize,
    seed: u64,
) -> DMatrix<f64> {
    let n = rows.len();
    let width = (rank + OVERSAMPLE).min(n).min(cols);
    let mut rng = SplitMix64::new(derive_seed(seed, "svd-init", 0));
    // Column-major fill, one uniform draw in [-1, 1) per entry.
    let mut omega = DMatrix::zeros(cols, width);
    for j in 0..width {
        for i in 0..cols {
            omega[(i, j)] = 2.0 * rng.next_f64() - 1.0;
        }
    }
    let mut q = orthonormal_basis(sparse_mul(rows, &omega));
    for _ in 0..POWER_ITERATIONS {
        let z = orthonormal_basis(sparse_t_mul(rows, cols, &q));
        q = orthonormal_basis(sparse_mul(rows, &z));
    }
    // B = Q^T X, handled through its transpose M = X^T Q (cols x width).
    let m = sparse_t_mul(rows, cols, &q);
    let gram = m.transpose() * &m;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let top = order
        .first()
        .map_or(0.0, |&i| eig.eigenvalues[i].max(0.0).sqrt());
    let mut coords = DMatrix::zeros(n, rank);
    for (k, &idx) in order.iter().take(rank).enumerate() {
        let sigma = eig.eigenvalues[idx].max(0.0).sqrt();
        if sigma == 0.0 || sigma <= top * RELATIVE_RANK_TOL {
            continue;
        }
        let w = eig.eigenvectors.column(idx);
        let mut v: Vec<f64> = (&m * w).iter().map(|x| x / sigma).collect();
        let mut best = 0;
        for i in 1..v.len() {
            if v[i].abs() > v[best].abs() {
                best = i;
            }
        }
        if v[best] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        // Projecting each row directly keeps identical documents bit-identical.
        for (i, row) in rows.iter().enumerate() {
            coords[(i, k)] = row.dot_dense(&v);
        }
    }
    coords
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

/// Decodes one `/embed` response body holding `expected` vectors. Returns
/// the dimension and the L2-normalized vectors.
pub fn decode_response(body: &[u8], expected: usize) -> Result<(usize, Vec<Vec<f64>>)> {
    let body: EmbedResponse = serde_json::from_slice(body)
        .map_err(|e| Error::Provider(format!("bad response body: {e}")))?;
    if body.vectors.len() != expected {
        return Err(Error::Provider(format!(
            "sent {expected} texts, received {} vectors",
            body.vectors.len()
        )));
    }
    if body.dim == 0 {
        return Err(Error::Provider("response dimension is 0".into()));
    }
    let mut vectors = Vec::with_capacity(expected);
    for v in body.vectors {
        if v.len() != body.dim {
            return Err(Error::Provider(format!(
                "vector of length {} in a dim-{} response",
                v.len(),
                body.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Provider("non-finite vector value".into()));
        }
        vectors.push(normalize(&v));
    }
    Ok((body.dim, vectors))
}

fn external(texts: &[&str], endpoint: &str) -> Result<Embeddings> {
    if texts.is_empty() {
        return Err(Error::Provider("no texts to embed".into()));
    }
    let url = if endpoint.trim_end_matches('/').ends_with("/embed") {
        endpoint.to_string()
    } else {
        format!("{}/embed", endpoint.trim_end_matches('/'))
    };
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_secs(120))
        .build();
    let mut vectors = Vec::with_capacity(texts.len());
    let mut dimension = None;
    for batch in texts.chunks(MAX_BATCH) {
        let response = agent
            .post(&url)
            .send_json(EmbedRequest { texts: batch })
            .map_err(|e| match e {
                ureq::Error::Status(code, _) => {
                    Error::Provider(format!("{url} answered HTTP {code}"))
                }
                other => Error::Provider(format!("{url} unreachable: {other}")),
            })?;
        let mut body = Vec::new();
        response
            .into_reader()
            .read_to_end(&mut body)
            .map_err(|e| Error::Provider(format!("reading response from {url}: {e}")))?;
        let (dim, batch_vectors) = decode_response(&body, batch.len())
            .map_err(|e| Error::Provider(format!("{url}: {e}")))?;
        let first = *dimension.get_or_insert(dim);
        if dim != first {
            return Err(Error::Provider(format!(
                "{url}: dimension changed from {first} to {dim}"
            )));
        }
        vectors.extend(batch_vectors);
    }
    Ok(Embeddings {
        dimension: dimension.unwrap_or(0),
        vectors,
        provider: EmbedderKind::ExternalHttp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semmetrics::mean_pairwise_cosine;

    fn toks(list: &[&str]) -> Vec<Vec<String>> {
        list.iter()
            .map(|d| d.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    fn spec() -> EmbeddingProviderSpec {
        EmbeddingProviderSpec {
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn identical_texts_identical_vectors() {
        let t = toks(&["a b c", "d e", "a b c"]);
        let e = embed(&[""; 3], &t, &spec()).unwrap();
        assert_eq!(e.vectors[0], e.vectors[2]);
        assert_eq!(e.dimension, 2);
    }

    #[test]
    fn deterministic_bits() {
        let t = toks(&["a b c", "d e f a", "c c d", "x y", "a x"]);
        let a = embed(&[""; 5], &t, &spec()).unwrap();
        let b = embed(&[""; 5], &t, &spec()).unwrap();
        let bits = |e: &Embeddings| -> Vec<u64> {
            e.vectors.iter().flatten().map(|x| x.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn rank_one_corpus_is_collinear() {
        let t = toks(&["the same sentence again"; 30]);
        let e = embed(&[""; 30], &t, &spec()).unwrap();
        assert!((mean_pairwise_cosine(&e.vectors).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coordinates_preserve_cosines_at_full_rank() {
        // Rank 2 corpus in a 3-term space; keeping every dimension makes the
        // projection an isometry of the row space.
        let t = toks(&["a b", "a b", "c", "c", "a b c"]);
        let model = tfidf_fit_transform(&t).unwrap();
        let e = embed(&[""; 5], &t, &spec()).unwrap();
        assert_eq!(e.dimension, 3);
        let exact = model.mean_pairwise_cosine().unwrap();
        let approx = mean_pairwise_cosine(&e.vectors).unwrap();
        assert!((exact - approx).abs() < 1e-10, "{exact} vs {approx}");
    }

    #[test]
    fn decodes_and_checks_responses() {
        let (dim, v) = decode_response(br#"{"vectors": [[3, 4], [0, 2]], "dim": 2}"#, 2).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(v, vec![vec![0.6, 0.8], vec![0.0, 1.0]]);
        for bad in [
            &br#"{"vectors": [[1, 2]], "dim": 2}"#[..],
            br#"{"vectors": [[1, 2], [1]], "dim": 2}"#,
            br#"{"vectors": [[], []], "dim": 0}"#,
            br#"{"vectors": [[1, 2], [3, 4]]}"#,
            b"not json",
        ] {
            assert!(decode_response(bad, 2).is_err());
        }
    }

    #[test]
    fn external_needs_endpoint() {
        let s = EmbeddingProviderSpec {
            kind: EmbedderKind::ExternalHttp,
            ..Default::default()
        };
        assert!(matches!(
            embed(&["a", "b"], &toks(&["a", "b"]), &s),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unreachable_provider_falls_back_when_asked() {
        let mut s = EmbeddingProviderSpec {
            kind: EmbedderKind::ExternalHttp,
            endpoint: Some("http://127.0.0.1:9".into()),
            ..Default::default()
        };
        let t = toks(&["a b", "c d"]);
        assert!(matches!(
            embed(&["a b", "c d"], &t, &s),
            Err(Error::Provider(_))
        ));
        s.fallback_to_builtin = true;
        let e = embed(&["a b", "c d"], &t, &s).unwrap();
        assert_eq!(e.provider, EmbedderKind::BuiltinSvd);
    }
}
