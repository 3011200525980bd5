use crate::normalize::rouge_tokens;

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_l_single(cand: &[String], reference: &[String]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(cand, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / cand.len() as f64;
    let r = lcs / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// ROUGE-L F1 against the best-matching reference, on a 0-100 scale.
/// Returns 0 when there are no references.
pub fn rouge_l(output: &str, references: &[String]) -> f64 {
    let cand = rouge_tokens(output);
    references
        .iter()
        .map(|r| rouge_l_single(&cand, &rouge_tokens(r)))
        .fold(0.0, f64::max)
        * 100.0
}
