//! Convex-hull intersection of two finite point sets, decided by a phase-one
//! simplex on `sum a_i p_i = sum b_k q_k`, `sum a_i = sum b_k = 1`, `a, b >= 0`.

use alloc::vec;
use alloc::vec::Vec;

const TOL: f64 = 1e-9;

/// Drops points that are midpoints of two other points of the set along some
/// axis; such points are never extreme.
pub(crate) fn extreme_candidates(points: &[&[i64]], contains: impl Fn(&[i64]) -> bool) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut probe = Vec::new();
    'outer: for p in points {
        for axis in 0..p.len() {
            probe.clear();
            probe.extend_from_slice(p);
            probe[axis] += 1;
            let up = contains(&probe);
            probe[axis] -= 2;
            let down = contains(&probe);
            if up && down {
                continue 'outer;
            }
        }
        out.push(p.to_vec());
    }
    out
}

/// `true` when the convex hulls of `a` and `b` share a point.
pub(crate) fn hulls_intersect(a: &[Vec<i64>], b: &[Vec<i64>]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let dim = a[0].len();
    let rows = dim + 2;
    let cols = a.len() + b.len();
    let width = cols + rows + 1;
    let mut t = vec![0.0f64; rows * width];
    for (k, p) in a.iter().enumerate() {
        for i in 0..dim {
            t[i * width + k] = p[i] as f64;
        }
        t[dim * width + k] = 1.0;
    }
    for (k, q) in b.iter().enumerate() {
        let c = a.len() + k;
        for i in 0..dim {
            t[i * width + c] = -(q[i] as f64);
        }
        t[(dim + 1) * width + c] = 1.0;
    }
    for r in 0..rows {
        t[r * width + cols + r] = 1.0;
    }
    t[dim * width + width - 1] = 1.0;
    t[(dim + 1) * width + width - 1] = 1.0;

    let mut basis: Vec<usize> = (cols..cols + rows).collect();
    let mut obj = vec![0.0f64; width];
    for r in 0..rows {
        for c in 0..cols {
            obj[c] -= t[r * width + c];
        }
        obj[width - 1] -= t[r * width + width - 1];
    }

    for _ in 0..10_000 {
        let Some(enter) = (0..cols + rows).find(|&c| obj[c] < -TOL) else { break };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..rows {
            let a_rc = t[r * width + enter];
            if a_rc > TOL {
                let ratio = t[r * width + width - 1] / a_rc;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - TOL || (ratio <= best + TOL && basis[r] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(pr) = leave else { break };
        let piv = t[pr * width + enter];
        for c in 0..width {
            t[pr * width + c] /= piv;
        }
        for r in 0..rows {
            if r != pr {
                let f = t[r * width + enter];
                if f != 0.0 {
                    for c in 0..width {
                        t[r * width + c] -= f * t[pr * width + c];
                    }
                }
            }
        }
        let f = obj[enter];
        for c in 0..width {
            obj[c] -= f * t[pr * width + c];
        }
        basis[pr] = enter;
    }
    -obj[width - 1] <= TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_crossing_and_apart() {
        let a = vec![vec![0, 0], vec![2, 2]];
        let b = vec![vec![0, 2], vec![2, 0]];
        assert!(hulls_intersect(&a, &b));
        let c = vec![vec![3, 0], vec![4, 1]];
        assert!(!hulls_intersect(&a, &c));
    }

    #[test]
    fn point_inside_triangle() {
        let tri = vec![vec![0, 0], vec![4, 0], vec![0, 4]];
        assert!(hulls_intersect(&tri, &[vec![1, 1]]));
        assert!(!hulls_intersect(&tri, &[vec![3, 3]]));
        assert!(hulls_intersect(&tri, &[vec![2, 2]]));
    }
}
