//! Small dense minimizers for the fitting loop: BFGS with an Armijo
//! backtracking line search, a Nelder-Mead simplex as a derivative-free
//! alternative, and the central-difference gradient both share. Objectives
//! signal an infeasible point by returning a non-finite value; such steps are
//! simply rejected.

/// Outcome of a minimization run. `history` holds the accepted objective
/// value per iteration, starting with the initial point.
#[derive(Debug, Clone)]
pub struct Minimization {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Central-difference gradient with per-coordinate steps scaled to the
/// coordinate's magnitude. A non-finite one-sided value falls back to the
/// other side (forward/backward difference) so a feasibility cliff next to
/// the point does not poison the whole gradient.
pub fn gradient<F>(f: &F, x: &[f64], fx: f64, step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = step * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        g[i] = match (up.is_finite(), down.is_finite()) {
            (true, true) => (up - down) / (2.0 * h),
            (true, false) => (up - fx) / h,
            (false, true) => (fx - down) / h,
            (false, false) => 0.0,
        };
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Quasi-Newton minimization with the inverse-Hessian BFGS update. The line
/// search only needs sufficient decrease (Armijo, c1 = 1e-4) because the
/// curvature condition is enforced by skipping updates with a non-positive
/// `s . y`. Stops at `max_iters`, when the gradient drops below `grad_tol`,
/// or when no step of any length makes progress.
pub fn bfgs<F>(f: &F, x0: Vec<f64>, max_iters: usize, grad_step: f64, grad_tol: f64) -> Minimization
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    let mut history = vec![fx];
    if n == 0 || !fx.is_finite() {
        return Minimization { x, value: fx, iterations: 0, converged: false, history };
    }
    let mut g = gradient(f, &x, fx, grad_step);
    let mut h = identity(n);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        if inf_norm(&g) <= grad_tol {
            converged = true;
            break;
        }
        let mut d: Vec<f64> = matvec(&h, &g).iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // The approximation has lost positive definiteness; restart from
            // steepest descent.
            h = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let ft = f(&xt);
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((xt, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // No usable step along this direction; treat the point as final.
            break;
        };
        iterations += 1;
        let g_new = gradient(f, &x_new, f_new, grad_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let s_norm = dot(&s, &s).sqrt();
        let y_norm = dot(&y, &y).sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            // H <- (I - r s y^T) H (I - r y s^T) + r s s^T, r = 1/sy.
            let r = 1.0 / sy;
            let hy = matvec(&h, &y);
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -r * (s[i] * hy[j] + hy[i] * s[j])
                        + (r * r * yhy + r) * s[i] * s[j];
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
    }
    if iterations == 0 && !converged {
        // Zero accepted steps: report convergence only if the gradient says
        // we started at a minimum.
        converged = inf_norm(&g) <= grad_tol;
    }
    Minimization { x, value: fx, iterations, converged, history }
}

/// Nelder-Mead simplex with the standard reflection, expansion, contraction,
/// and shrink coefficients. Converges when the simplex's objective spread
/// collapses; robust to noisy or kinked objectives where BFGS stalls.
pub fn nelder_mead<F>(f: &F, x0: Vec<f64>, max_iters: usize) -> Minimization
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let f0 = f(&x0);
    if n == 0 || !f0.is_finite() {
        return Minimization {
            x: x0,
            value: f0,
            iterations: 0,
            converged: false,
            history: vec![f0],
        };
    }
    let big = |v: f64| if v.is_finite() { v } else { f64::MAX };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), big(f0)));
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += 0.05 * (1.0 + v[i].abs());
        let fv = big(f(&v));
        simplex.push((v, fv));
    }
    let mut history = vec![f0];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        // Objective spread alone is not enough: on a locally linear patch
        // every vertex can share one value while the simplex is still huge,
        // so the vertices must have collapsed too.
        let f_tight = (worst - best).abs() <= 1e-12 * (best.abs() + 1e-12);
        let x_tight = simplex[1..].iter().all(|(v, _)| {
            v.iter()
                .zip(&simplex[0].0)
                .all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + b.abs()))
        });
        if f_tight && x_tight {
            converged = true;
            break;
        }
        iterations += 1;
        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }
        let at = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };
        let reflected = at(1.0);
        let fr = big(f(&reflected));
        let mut shrink = false;
        if fr < simplex[0].1 {
            let expanded = at(2.0);
            let fe = big(f(&expanded));
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else if fr < simplex[n].1 {
            // Outside contraction: halfway between centroid and reflected.
            let contracted = at(0.5);
            let fc = big(f(&contracted));
            if fc <= fr {
                simplex[n] = (contracted, fc);
            } else {
                shrink = true;
            }
        } else {
            // Inside contraction: halfway between centroid and worst.
            let contracted = at(-0.5);
            let fc = big(f(&contracted));
            if fc < simplex[n].1 {
                simplex[n] = (contracted, fc);
            } else {
                shrink = true;
            }
        }
        if shrink {
            // Shrink everything toward the best vertex.
            let anchor = simplex[0].0.clone();
            for (v, fv) in simplex.iter_mut().skip(1) {
                for i in 0..n {
                    v[i] = anchor[i] + 0.5 * (v[i] - anchor[i]);
                }
                *fv = big(f(v));
            }
        }
        let cur_best = simplex.iter().map(|s| s.1).fold(f64::MAX, f64::min);
        history.push(cur_best);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimization { x, value, iterations, converged, history }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }

    #[test]
    fn gradient_matches_analytic() {
        let f = |x: &[f64]| x[0] * x[0] * x[1] + x[1].sin();
        let x = [1.3, -0.4];
        let g = gradient(&f, &x, f(&x), 1e-6);
        assert!((g[0] - 2.0 * x[0] * x[1]).abs() < 1e-7);
        assert!((g[1] - (x[0] * x[0] + x[1].cos())).abs() < 1e-7);
    }

    #[test]
    fn bfgs_solves_a_quadratic_quickly() {
        let f = |x: &[f64]| 2.0 * (x[0] - 3.0).powi(2) + 7.0 * (x[1] + 1.0).powi(2) + 0.5;
        let m = bfgs(&f, vec![0.0, 0.0], 100, 1e-6, 1e-9);
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-6);
        assert!((m.x[1] + 1.0).abs() < 1e-6);
        assert!(m.iterations < 30);
        assert!((m.value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bfgs_handles_rosenbrock() {
        let m = bfgs(&rosenbrock, vec![-1.2, 1.0], 500, 1e-7, 1e-8);
        assert!((m.x[0] - 1.0).abs() < 1e-3, "x = {:?}", m.x);
        assert!((m.x[1] - 1.0).abs() < 1e-3);
        // History is monotone non-increasing: only accepted steps count.
        for w in m.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn bfgs_respects_infeasible_regions() {
        let f = |x: &[f64]| {
            if x[0].abs() > 2.0 {
                f64::INFINITY
            } else {
                (x[0] - 1.5).powi(2)
            }
        };
        let m = bfgs(&f, vec![-1.0], 200, 1e-6, 1e-10);
        assert!((m.x[0] - 1.5).abs() < 1e-5);
    }

    #[test]
    fn bfgs_at_the_minimum_stops_immediately() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2);
        let m = bfgs(&f, vec![1.0], 100, 1e-7, 1e-6);
        assert!(m.converged);
        assert_eq!(m.iterations, 0);
    }

    #[test]
    fn nelder_mead_handles_rosenbrock() {
        let m = nelder_mead(&rosenbrock, vec![-1.2, 1.0], 2000);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-3, "x = {:?}", m.x);
        assert!((m.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_handles_a_kinked_objective() {
        let f = |x: &[f64]| (x[0] - 0.7).abs() + (x[1] + 0.3).abs();
        let m = nelder_mead(&f, vec![5.0, 5.0], 2000);
        assert!((m.x[0] - 0.7).abs() < 1e-4);
        assert!((m.x[1] + 0.3).abs() < 1e-4);
    }

    #[test]
    fn empty_problem_is_a_no_op() {
        let f = |_: &[f64]| 4.2;
        let m = bfgs(&f, vec![], 10, 1e-6, 1e-6);
        assert_eq!(m.value, 4.2);
        assert_eq!(m.iterations, 0);
    }
}
