//! Fast sweeping for `|∇d| = 1` with a fixed set of known nodes.
//!
//! Godunov upwind update, Gauss–Seidel sweeps in all `2^n` axis orderings.
//! First-order accurate away from the fixed band.

use super::grid::Grid;

const MAX_ROUNDS: usize = 12;

/// Solves for unsigned distances. `dist[i]` is kept for `fixed[i]`; every
/// other node is overwritten.
pub fn fast_sweep(grid: &Grid, dist: &mut [f64], fixed: &[bool]) {
    let n = grid.dim();
    for (d, f) in dist.iter_mut().zip(fixed) {
        if !*f {
            *d = f64::INFINITY;
        }
    }
    let h = grid.spacing().to_vec();
    let inv_h2: Vec<f64> = h.iter().map(|x| 1.0 / (x * x)).collect();
    let tol = 1e-12 * grid.min_spacing();
    let counts = grid.counts().to_vec();
    let strides = grid.strides().to_vec();
    let mut idx = vec![0usize; n];
    let mut neigh = vec![0.0; n];
    for _round in 0..MAX_ROUNDS {
        let mut max_change: f64 = 0.0;
        for order in 0..(1usize << n) {
            // odometer over all nodes; axis k runs backwards when bit k is set
            for k in 0..n {
                idx[k] = if (order >> k) & 1 == 1 { counts[k] - 1 } else { 0 };
            }
            'nodes: loop {
                let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                if !fixed[flat] {
                    for k in 0..n {
                        let lo = if idx[k] > 0 { dist[flat - strides[k]] } else { f64::INFINITY };
                        let hi = if idx[k] + 1 < counts[k] {
                            dist[flat + strides[k]]
                        } else {
                            f64::INFINITY
                        };
                        neigh[k] = lo.min(hi);
                    }
                    let cand = godunov(&neigh, &inv_h2);
                    if cand < dist[flat] {
                        let old = dist[flat];
                        dist[flat] = cand;
                        let change = if old.is_finite() { old - cand } else { f64::INFINITY };
                        max_change = max_change.max(change);
                    }
                }
                // advance odometer, last axis fastest
                let mut k = n;
                loop {
                    if k == 0 {
                        break 'nodes;
                    }
                    k -= 1;
                    let back = (order >> k) & 1 == 1;
                    if back {
                        if idx[k] > 0 {
                            idx[k] -= 1;
                            break;
                        }
                        idx[k] = counts[k] - 1;
                    } else {
                        if idx[k] + 1 < counts[k] {
                            idx[k] += 1;
                            break;
                        }
                        idx[k] = 0;
                    }
                }
            }
        }
        if max_change <= tol {
            break;
        }
    }
}

/// Largest root of `Σ_k ((u − a_k)⁺)² / h_k² = 1` using only the smallest
/// neighbour values that stay below the root.
fn godunov(a: &[f64], inv_h2: &[f64]) -> f64 {
    let n = a.len();
    let mut order: [usize; 4] = [0, 1, 2, 3];
    let order = &mut order[..n];
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
    if !a[order[0]].is_finite() {
        return f64::INFINITY;
    }
    let (mut sa, mut sb, mut sc) = (0.0, 0.0, 0.0);
    let mut u = f64::INFINITY;
    for (j, &k) in order.iter().enumerate() {
        let ak = a[k];
        if !ak.is_finite() || (j > 0 && u <= ak) {
            break;
        }
        sa += inv_h2[k];
        sb += ak * inv_h2[k];
        sc += ak * ak * inv_h2[k];
        let disc = sb * sb - sa * (sc - 1.0);
        u = (sb + disc.max(0.0).sqrt()) / sa;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn godunov_one_and_two_terms() {
        assert_eq!(godunov(&[0.0, f64::INFINITY], &[1.0, 1.0]), 1.0);
        let u = godunov(&[0.0, 0.0], &[1.0, 1.0]);
        assert!((u - 0.5f64.sqrt()).abs() < 1e-15);
        // second term ignored once the root stays below it
        assert_eq!(godunov(&[0.0, 5.0], &[1.0, 1.0]), 1.0);
    }

    #[test]
    fn distance_from_a_single_node_is_within_first_order() {
        let g = Grid::cube(2, 1.0, 41).unwrap();
        let mut d = vec![0.0; g.len()];
        let mut fixed = vec![false; g.len()];
        let c = g.flat(&[20, 20]);
        fixed[c] = true;
        fast_sweep(&g, &mut d, &fixed);
        for i in 0..g.len() {
            let p = g.node_flat(i);
            let exact = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(d[i] >= exact - 1e-12);
            assert!(d[i] - exact < 0.1);
        }
        // axis-aligned nodes are exact
        assert!((d[g.flat(&[20, 40])] - 1.0).abs() < 1e-12);
    }
}
