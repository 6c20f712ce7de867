//! Eigenvalues of `diag(d) + c 1 1^T` from the secular equation
//! `1 = c sum_k 1 / (mu - d_k)`.
//!
//! Repeated diagonal entries are deflated first: a value shared by `m`
//! entries is an eigenvalue of multiplicity `m - 1`, and the group enters the
//! reduced equation with weight `m`. The remaining roots are found with
//! Aberth-Ehrlich simultaneous iteration on the characteristic polynomial
//! `prod_G (mu - d_G) * (1 - c sum_G m_G / (mu - d_G))`, evaluated through its
//! logarithmic derivative so no coefficients are ever formed.

use num_complex::Complex64;

const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone)]
pub(crate) struct SecularRoots {
    pub roots: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Group {
    value: Complex64,
    count: usize,
}

/// Clusters entries closer than `tol`, averaging each cluster.
fn deflate(d: &[Complex64], tol: f64) -> Vec<Group> {
    let mut sums: Vec<(Complex64, Complex64, usize)> = Vec::new();
    for &x in d {
        match sums.iter_mut().find(|(rep, _, _)| (rep - x).norm() <= tol) {
            Some((_, sum, count)) => {
                *sum += x;
                *count += 1;
            }
            None => sums.push((x, x, 1)),
        }
    }
    sums.into_iter()
        .map(|(_, sum, count)| Group {
            value: sum / count as f64,
            count,
        })
        .collect()
}

/// `chi'/chi` of the reduced characteristic polynomial at `mu`, or `None`
/// when `mu` is an exact root.
fn log_derivative(groups: &[Group], c: f64, mu: Complex64) -> Option<Complex64> {
    let mut plain = Complex64::new(0.0, 0.0);
    let mut weighted = Complex64::new(0.0, 0.0);
    let mut weighted_sq = Complex64::new(0.0, 0.0);
    for g in groups {
        let inv = (mu - g.value).inv();
        plain += inv;
        weighted += inv * g.count as f64;
        weighted_sq += inv * inv * g.count as f64;
    }
    let secular = Complex64::new(1.0, 0.0) - weighted * c;
    if secular.norm() == 0.0 {
        return None;
    }
    Some(plain + weighted_sq * c / secular)
}

fn initial_guesses(groups: &[Group], c: f64, scale: f64) -> Vec<Complex64> {
    let total: usize = groups.iter().map(|g| g.count).sum();
    let centroid = groups
        .iter()
        .map(|g| g.value * g.count as f64)
        .sum::<Complex64>()
        / total as f64;
    // Large-coupling limit: one root near centroid + c n, the rest between the poles.
    let mut seeds = vec![centroid + c * total as f64];

    let mut sorted: Vec<Complex64> = groups.iter().map(|g| g.value).collect();
    sorted.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    for (k, pair) in sorted.windows(2).enumerate() {
        let mid = (pair[0] + pair[1]) * 0.5;
        let gap = (pair[1] - pair[0]).norm().max(1e-3 * scale);
        // Generic rotation so no seed sits on a symmetry axis of the spectrum.
        let angle = 0.7 + 2.399_963 * k as f64;
        seeds.push(mid + Complex64::from_polar(0.1 * gap, angle));
    }
    seeds
}

pub(crate) fn rank_one_update_eigenvalues(d: &[Complex64], c: f64) -> SecularRoots {
    let n = d.len();
    let max_d = d.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let scale = (c.abs() * n as f64).max(max_d).max(f64::MIN_POSITIVE);
    if c == 0.0 || n == 0 {
        return SecularRoots {
            roots: d.to_vec(),
            iterations: 0,
            converged: true,
        };
    }

    let groups = deflate(d, 1e-13 * scale);
    let mut roots: Vec<Complex64> = groups
        .iter()
        .flat_map(|g| std::iter::repeat_n(g.value, g.count - 1))
        .collect();

    if groups.len() == 1 {
        let g = groups[0];
        roots.push(g.value + c * g.count as f64);
        return SecularRoots {
            roots,
            iterations: 0,
            converged: true,
        };
    }

    let mut z = initial_guesses(&groups, c, scale);
    let m = z.len();
    let tol = 1e-15 * scale;
    let mut settled = vec![false; m];
    let mut iterations = 0;
    let mut converged = false;
    // One extra sweep after every root settles.
    let mut polish = 1;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut all_settled = true;
        for i in 0..m {
            let Some(ratio) = log_derivative(&groups, c, z[i]) else {
                settled[i] = true;
                continue;
            };
            let newton = ratio.inv();
            let repulsion: Complex64 = (0..m)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = newton / (Complex64::new(1.0, 0.0) - newton * repulsion);
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            settled[i] = step.norm() <= tol.max(4.0 * f64::EPSILON * z[i].norm());
            all_settled &= settled[i];
        }
        if all_settled {
            if polish == 0 {
                converged = true;
                break;
            }
            polish -= 1;
        }
    }
    converged &= z.iter().all(|x| x.is_finite());
    roots.extend(z);
    SecularRoots {
        roots,
        iterations,
        converged,
    }
}
