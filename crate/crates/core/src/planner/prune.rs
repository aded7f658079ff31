//! Removal of α-vectors that never attain the upper surface over the
//! particle simplex (duplicates, pointwise domination, then Lark's LP filter).

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::alpha::dot;

const DUPLICATE_TOL: f64 = 1e-12;

fn margin_tol(vectors: &[&[f64]]) -> f64 {
    let scale = vectors
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    1e-10 * (1.0 + scale)
}

fn same(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DUPLICATE_TOL)
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Best margin by which `alpha` beats every vector in `others` at some point
/// of the simplex, with the witness weights. `None` means no LP answer.
fn witness(alpha: &[f64], others: &[&[f64]]) -> Option<(f64, Vec<f64>)> {
    let n = alpha.len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let w: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let bound = 1e6 * (1.0 + margin_tol(&[alpha]) * 1e10);
    let delta = lp.add_var(1.0, (-bound, bound));
    let simplex: Vec<_> = w.iter().map(|&x| (x, 1.0)).collect();
    lp.add_constraint(simplex.as_slice(), ComparisonOp::Eq, 1.0);
    for other in others {
        let mut row: Vec<_> = w
            .iter()
            .zip(alpha.iter().zip(other.iter()))
            .map(|(&x, (a, b))| (x, a - b))
            .collect();
        row.push((delta, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let solution = lp.solve().ok()?.into_solution().ok()?;
    let weights = w.iter().map(|&x| solution.var_value(x)).collect();
    Some((solution.objective(), weights))
}

/// Indices (into `vectors`) of a parsimonious subset with the same upper
/// surface over all weight vectors in the simplex. Order of first appearance
/// is preserved.
pub fn prune_indices(vectors: &[&[f64]]) -> Vec<usize> {
    // duplicates and pointwise-dominated vectors
    let mut candidates: Vec<usize> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        if candidates.iter().any(|&k| same(vectors[k], v)) {
            continue;
        }
        candidates.push(i);
    }
    let candidates: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| {
            !candidates
                .iter()
                .any(|&k| k != i && dominates(vectors[k], vectors[i]) && !same(vectors[k], vectors[i]))
        })
        .collect();
    if candidates.len() <= 1 {
        return candidates;
    }

    let tol = margin_tol(vectors);
    let n = vectors[candidates[0]].len();
    let mut frontier = candidates;
    let mut kept: Vec<usize> = Vec::new();
    while let Some(&first) = frontier.first() {
        let weights = if kept.is_empty() {
            Some(vec![1.0 / n as f64; n])
        } else {
            let others: Vec<&[f64]> = kept.iter().map(|&k| vectors[k]).collect();
            match witness(vectors[first], &others) {
                Some((margin, w)) if margin > tol => Some(w),
                Some(_) => None,
                // LP failure: keep the vector rather than risk losing value
                None => {
                    kept.push(first);
                    frontier.remove(0);
                    continue;
                }
            }
        };
        match weights {
            None => {
                frontier.remove(0);
            }
            Some(w) => {
                // lexicographic tie-break keeps the winner on the true surface
                let mut best = 0;
                for pos in 1..frontier.len() {
                    let (a, b) = (vectors[frontier[pos]], vectors[frontier[best]]);
                    let (va, vb) = (dot(a, &w), dot(b, &w));
                    let better = va > vb + tol
                        || ((va - vb).abs() <= tol
                            && a.partial_cmp(b) == Some(std::cmp::Ordering::Greater));
                    if better {
                        best = pos;
                    }
                }
                kept.push(frontier.remove(best));
            }
        }
    }
    kept.sort_unstable();
    kept
}
