/// Finite-difference weights for the `order`-th derivative at `z` from
/// samples at `nodes` (Fornberg's recursion). Works for arbitrary, possibly
/// one-sided, node sets.
pub fn fd_weights(z: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Five-point first-derivative stencils on integer offsets `shift-2..=shift+2`
/// for `shift` in `-2..=2`, indexed by `shift + 2`.
pub fn five_point_first_derivative() -> [[f64; 5]; 5] {
    let mut out = [[0.0; 5]; 5];
    for (k, row) in out.iter_mut().enumerate() {
        let shift = k as f64 - 2.0;
        let nodes: Vec<f64> = (-2..=2).map(|o| shift + o as f64).collect();
        row.copy_from_slice(&fd_weights(0.0, &nodes, 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_five_point() {
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn one_sided_is_exact_on_quartics() {
        let nodes = [0.0, 1.0, 2.0, 3.0, 4.0];
        let w = fd_weights(0.0, &nodes, 1);
        let f = |t: f64| 3.0 * t.powi(4) - t.powi(3) + 2.0 * t - 5.0;
        let d: f64 = nodes.iter().zip(&w).map(|(t, w)| w * f(*t)).sum();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn second_derivative_weights() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
    }
}
