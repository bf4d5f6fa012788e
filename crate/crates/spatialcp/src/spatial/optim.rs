//! Derivative-free Nelder-Mead simplex minimizer used for the covariance
//! parameter search in log space.

/// Result of a simplex search.
#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `init`, with the simplex initialized at
/// `init + step` along each axis. Stops when the simplex diameter (max
/// coordinate spread) drops below `diameter_tol` or after `max_iter`
/// iterations. Standard coefficients (reflect 1, expand 2, contract 0.5,
/// shrink 0.5).
pub(crate) fn nelder_mead<F>(
    mut f: F,
    init: &[f64],
    step: f64,
    diameter_tol: f64,
    max_iter: usize,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = init.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(init.to_vec());
    for i in 0..dim {
        let mut v = init.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        if diameter(&simplex) < diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        // Centroid of all vertices except the worst.
        let mut centroid = vec![0.0; dim];
        for &idx in order.iter().take(dim) {
            for (c, v) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += v;
            }
        }
        for c in &mut centroid {
            *c /= dim as f64;
        }

        let reflected = blend(&centroid, &simplex[worst], 2.0, -1.0);
        let f_reflected = f(&reflected);

        if f_reflected < values[best] {
            let expanded = blend(&centroid, &simplex[worst], 3.0, -2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }

        let contracted = blend(&centroid, &simplex[worst], 0.5, 0.5);
        let f_contracted = f(&contracted);
        if f_contracted < values[worst] {
            simplex[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }

        // Shrink toward the best vertex.
        let best_vertex = simplex[best].clone();
        for idx in 0..=dim {
            if idx == best {
                continue;
            }
            simplex[idx] = blend(&best_vertex, &simplex[idx], 0.5, 0.5);
            values[idx] = f(&simplex[idx]);
        }
    }

    let (arg_best, &best_value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    SimplexResult {
        best: simplex[arg_best].clone(),
        best_value,
        iterations,
        converged,
    }
}

fn blend(a: &[f64], b: &[f64], wa: f64, wb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..simplex.len() {
        for j in i + 1..simplex.len() {
            for k in 0..simplex[i].len() {
                d = d.max((simplex[i][k] - simplex[j][k]).abs());
            }
        }
    }
    d
}
