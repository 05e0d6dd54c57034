//! ε-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved in its 2n-variable form
//! `min ½ αᵀQα + pᵀα  s.t. 0 ≤ α ≤ C, Σ y_t α_t = 0`
//! with `y = (+1…, −1…)`, `Q_ts = y_t y_s k(x_t, x_s)`, `p = (ε − z, ε + z)`,
//! by two-coordinate updates on the maximal violating pair.

use serde::{Deserialize, Serialize};

use super::{Dataset, ModelError, Standardizer};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64, gamma: f64) -> SvrParams {
        SvrParams {
            c,
            epsilon,
            gamma,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("C", self.c),
            ("epsilon", self.epsilon),
            ("gamma", self.gamma),
            ("tol", self.tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::Params(format!(
                    "svr {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub scaler: Standardizer,
    pub gamma: f64,
    /// Standardized support vectors.
    pub support: Vec<Vec<f64>>,
    /// `α_i − α*_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Value of the minimised dual objective at the solution.
    pub dual_objective: f64,
    pub iterations: usize,
}

pub(crate) fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

impl SvrModel {
    pub fn decision(&self, z: &[f64]) -> f64 {
        self.bias
            + self
                .support
                .iter()
                .zip(&self.dual_coef)
                .map(|(s, c)| c * rbf(self.gamma, s, z))
                .sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.decision(&self.scaler.apply(row))
    }
}

/// Solution of the dual for a precomputed kernel matrix.
pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
}

pub(crate) fn solve_dual(
    k: &[Vec<f64>],
    z: &[f64],
    params: &SvrParams,
) -> Result<DualSolution, ModelError> {
    let l = z.len();
    let n = 2 * l;
    let c = params.c;
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let q = |t: usize, s: usize| sign(t) * sign(s) * k[t % l][s % l];
    let p: Vec<f64> = (0..n)
        .map(|t| {
            if t < l {
                params.epsilon - z[t]
            } else {
                params.epsilon + z[t - l]
            }
        })
        .collect();
    let mut alpha = vec![0.0; n];
    let mut grad = p.clone();
    let up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        let (mut gmax, mut i) = (f64::NEG_INFINITY, usize::MAX);
        let (mut gmin, mut j) = (f64::INFINITY, usize::MAX);
        for t in 0..n {
            let y = sign(t);
            let v = -y * grad[t];
            if up(alpha[t], y) && v > gmax {
                gmax = v;
                i = t;
            }
            if low(alpha[t], y) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.tol {
            break;
        }
        if iterations >= params.max_iter {
            return Err(ModelError::NotConverged {
                method: "svr",
                iterations,
                detail: format!("maximal violation {:.3e}", gmax - gmin),
            });
        }
        iterations += 1;

        let (yi, yj) = (sign(i), sign(j));
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (q(i, i) + q(j, j) - 2.0 * yi * yj * q(i, j)).max(1e-12);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // offset from free variables, or the midpoint of the feasible interval
    let (mut ub, mut lb, mut sum_free, mut n_free) =
        (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = sign(t) * grad[t];
        if alpha[t] >= c {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let objective = 0.5 * (0..n).map(|t| alpha[t] * (grad[t] + p[t])).sum::<f64>();
    Ok(DualSolution {
        alpha,
        rho,
        objective,
        iterations,
    })
}

pub fn fit_svr(data: &Dataset, params: &SvrParams) -> Result<SvrModel, ModelError> {
    params.check()?;
    let scaler = Standardizer::fit(&data.x);
    let z: Vec<Vec<f64>> = data.x.rows.iter().map(|r| scaler.apply(r)).collect();
    let l = z.len();
    let mut k = vec![vec![0.0; l]; l];
    for a in 0..l {
        k[a][a] = 1.0;
        for b in 0..a {
            let v = rbf(params.gamma, &z[a], &z[b]);
            k[a][b] = v;
            k[b][a] = v;
        }
    }
    let sol = solve_dual(&k, data.y(), params)?;
    let (mut support, mut dual_coef) = (vec![], vec![]);
    for i in 0..l {
        let coef = sol.alpha[i] - sol.alpha[i + l];
        if coef != 0.0 {
            support.push(z[i].clone());
            dual_coef.push(coef);
        }
    }
    Ok(SvrModel {
        scaler,
        gamma: params.gamma,
        support,
        dual_coef,
        bias: -sol.rho,
        dual_objective: sol.objective,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;
    use rand::Rng;

    fn toy(n: usize, seed: u64) -> Dataset {
        let mut rng = rng_from(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)])
            .collect();
        let y = rows
            .iter()
            .map(|r| r[0].sin() + 0.5 * r[1] + rng.random_range(-0.1..0.1))
            .collect();
        Dataset::from_rows(&["a", "b"], rows, y, vec![1; n]).unwrap()
    }

    /// Independent route: accelerated projected gradient on the same QP. The
    /// projection onto the box ∩ hyperplane is found by bisection on the
    /// multiplier of the equality constraint.
    fn qp_oracle(k: &[Vec<f64>], z: &[f64], c: f64, eps: f64) -> f64 {
        let l = z.len();
        let n = 2 * l;
        let y: Vec<f64> = (0..n).map(|t| if t < l { 1.0 } else { -1.0 }).collect();
        let qm = |t: usize, s: usize| y[t] * y[s] * k[t % l][s % l];
        let p: Vec<f64> = (0..n)
            .map(|t| if t < l { eps - z[t] } else { eps + z[t - l] })
            .collect();
        let obj = |a: &[f64]| {
            let mut v = 0.0;
            for t in 0..n {
                v += p[t] * a[t];
                for s in 0..n {
                    v += 0.5 * a[t] * qm(t, s) * a[s];
                }
            }
            v
        };
        let project = |v: &[f64]| {
            let at = |lam: f64| -> Vec<f64> {
                v.iter()
                    .zip(&y)
                    .map(|(x, yy)| (x - lam * yy).clamp(0.0, c))
                    .collect()
            };
            let h = |lam: f64| at(lam).iter().zip(&y).map(|(a, yy)| a * yy).sum::<f64>();
            let (mut lo, mut hi) = (-1e6, 1e6);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if h(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            at(0.5 * (lo + hi))
        };
        let step = 1.0 / (2.0 * l as f64);
        let mut x = vec![0.0; n];
        let mut yk = x.clone();
        let mut tk = 1.0f64;
        for _ in 0..100_000 {
            let g: Vec<f64> = (0..n)
                .map(|t| p[t] + (0..n).map(|s| qm(t, s) * yk[s]).sum::<f64>())
                .collect();
            let nx = project(
                &yk.iter()
                    .zip(&g)
                    .map(|(a, b)| a - step * b)
                    .collect::<Vec<_>>(),
            );
            let nt = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
            yk = nx
                .iter()
                .zip(&x)
                .map(|(a, b)| a + (tk - 1.0) / nt * (a - b))
                .collect();
            x = nx;
            tk = nt;
        }
        obj(&x)
    }

    #[test]
    fn dual_objective_matches_qp_oracle() {
        let d = toy(10, 1);
        let params = SvrParams::new(2.0, 0.1, 0.5);
        let m = fit_svr(&d, &params).unwrap();
        let z: Vec<Vec<f64>> = d.x.rows.iter().map(|r| m.scaler.apply(r)).collect();
        let k: Vec<Vec<f64>> = z
            .iter()
            .map(|a| z.iter().map(|b| rbf(0.5, a, b)).collect())
            .collect();
        let oracle = qp_oracle(&k, d.y(), 2.0, 0.1);
        assert!(
            (m.dual_objective - oracle).abs() < 1e-5,
            "{} vs {oracle}",
            m.dual_objective
        );
    }

    #[test]
    fn constant_target_stays_in_tube() {
        let mut d = toy(30, 2);
        d.y.values = vec![3.0; 30];
        let m = fit_svr(&d, &SvrParams::new(1.0, 0.2, 0.3)).unwrap();
        for r in &d.x.rows {
            assert!((m.predict_row(r) - 3.0).abs() <= 0.2 + 1e-6);
        }
    }

    #[test]
    fn representer_form_and_box() {
        let d = toy(60, 3);
        let params = SvrParams::new(1.5, 0.05, 0.4);
        let m = fit_svr(&d, &params).unwrap();
        assert!(m.dual_coef.iter().all(|c| c.abs() <= params.c + 1e-12));
        assert!(m.dual_coef.iter().sum::<f64>().abs() < 1e-9);
        let r = &d.x.rows[7];
        let z = m.scaler.apply(r);
        let manual = m.bias
            + m.support
                .iter()
                .zip(&m.dual_coef)
                .map(|(s, c)| {
                    c * (-0.4 * s.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp()
                })
                .sum::<f64>();
        assert!((manual - m.predict_row(r)).abs() < 1e-12);
    }

    #[test]
    fn duplicating_an_interior_point_changes_nothing() {
        let d = toy(25, 4);
        let params = SvrParams::new(1.0, 0.3, 0.5);
        let m = fit_svr(&d, &params).unwrap();
        // a training point strictly inside the tube is not a support vector
        let inside = (0..25)
            .find(|&i| (m.predict_row(&d.x.rows[i]) - d.y()[i]).abs() < 0.3 - 0.05)
            .expect("an interior point");
        let mut rows = d.x.rows.clone();
        let mut y = d.y().to_vec();
        rows.push(rows[inside].clone());
        y.push(y[inside]);
        // solve with the original scaling so only the duplicate differs
        let dup = Dataset::from_rows(&["a", "b"], rows, y, vec![1; 26]).unwrap();
        let m2_direct = {
            let z: Vec<Vec<f64>> = dup.x.rows.iter().map(|r| m.scaler.apply(r)).collect();
            let k: Vec<Vec<f64>> = z
                .iter()
                .map(|a| z.iter().map(|b| rbf(0.5, a, b)).collect())
                .collect();
            solve_dual(&k, dup.y(), &params).unwrap()
        };
        let zs: Vec<Vec<f64>> = dup.x.rows.iter().map(|r| m.scaler.apply(r)).collect();
        for r in &d.x.rows {
            let z = m.scaler.apply(r);
            let f2 = -m2_direct.rho
                + (0..26)
                    .map(|i| (m2_direct.alpha[i] - m2_direct.alpha[i + 26]) * rbf(0.5, &zs[i], &z))
                    .sum::<f64>();
            assert!(
                (f2 - m.decision(&z)).abs() < 1e-6,
                "{f2} vs {}",
                m.decision(&z)
            );
        }
    }

    #[test]
    fn parameters_are_validated() {
        let d = toy(5, 5);
        assert!(fit_svr(&d, &SvrParams::new(0.0, 0.1, 0.1)).is_err());
        assert!(fit_svr(&d, &SvrParams::new(1.0, -0.1, 0.1)).is_err());
    }
}
