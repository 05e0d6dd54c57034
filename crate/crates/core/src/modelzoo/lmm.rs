//! Linear mixed model with per-user random intercept and slopes.
//!
//! `y_j = X_j β + Z_j u_j + ε_j`, `u_j ~ N(0, D)` with diagonal `D`,
//! `ε_j ~ N(0, σ² I)`. Fitted by EM on the marginal likelihood: β by
//! generalised least squares, then the conditional moments of `u_j` update
//! `D` and `σ²`. With `S = D^{1/2}` every per-group inverse goes through
//! `M_j = I + S Z_jᵀ Z_j S / σ²`, so zero variances need no special case.
//! Plain EM crawls when variances head for zero; the loop extrapolates with
//! SQUAREM and keeps an extrapolated step only if it does not lower the
//! likelihood.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{rank_repair, Dataset, ModelError};
use crate::corpus::UserId;
use crate::features::Group;

/// Columns that get a fixed effect only; a trailing `*` matches a prefix.
pub const DEFAULT_FIXED_ONLY: [&str; 9] = [
    "period",
    "period_missing",
    "weekdays",
    "hour_*",
    "season_*",
    "caption_topic_event",
    "color_G",
    "color_BG",
    "time_difference",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmSpec {
    pub fixed_only: Vec<String>,
    /// Random slopes for the non-fixed-only columns; otherwise a random
    /// intercept only.
    pub random_slopes: bool,
    /// Hold every random-effect variance at zero.
    pub zero_variance: bool,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LmmSpec {
    fn default() -> Self {
        LmmSpec {
            fixed_only: DEFAULT_FIXED_ONLY.iter().map(|s| s.to_string()).collect(),
            random_slopes: true,
            zero_variance: false,
            tol: 1e-8,
            max_iter: 50_000,
        }
    }
}

impl LmmSpec {
    pub fn random_intercept() -> LmmSpec {
        LmmSpec {
            random_slopes: false,
            ..LmmSpec::default()
        }
    }

    fn is_fixed_only(&self, name: &str) -> bool {
        self.fixed_only.iter().any(|p| match p.strip_suffix('*') {
            Some(prefix) => name.starts_with(prefix),
            None => name == p,
        })
    }

    fn check(&self) -> Result<(), ModelError> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(ModelError::Params(
                "lmm needs tol > 0 and max_iter ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmModel {
    /// Input column index of each fixed effect after the intercept.
    pub fixed_cols: Vec<usize>,
    /// Input column index of each random slope after the random intercept.
    pub random_cols: Vec<usize>,
    pub beta: Vec<f64>,
    /// Random-effect variances, intercept first.
    pub d: Vec<f64>,
    pub sigma2: f64,
    /// Posterior mean of each training group's random effects. Stored as a
    /// pair list because the model sits inside a tagged enum, where integer
    /// map keys do not survive a JSON round trip.
    #[serde(with = "pairs")]
    pub blup: BTreeMap<UserId, Vec<f64>>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub dropped: Vec<String>,
}

mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::corpus::UserId;

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<UserId, Vec<f64>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        m.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<UserId, Vec<f64>>, D::Error> {
        Ok(Vec::<(UserId, Vec<f64>)>::deserialize(d)?
            .into_iter()
            .collect())
    }
}

/// Per-group sufficient statistics; every EM step works in these terms.
struct Groups {
    ids: Vec<UserId>,
    n: Vec<f64>,
    xtx: Vec<DMatrix<f64>>,
    xty: Vec<DVector<f64>>,
    ztz: Vec<DMatrix<f64>>,
    ztx: Vec<DMatrix<f64>>,
    zty: Vec<DVector<f64>>,
    yty: Vec<f64>,
}

fn design(rows: &[&Vec<f64>], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            rows[i][cols[j - 1]]
        }
    })
}

fn split_groups(data: &Dataset, fixed: &[usize], random: &[usize]) -> Groups {
    let mut by: BTreeMap<UserId, Vec<usize>> = BTreeMap::new();
    for (i, &g) in data.x.group_labels.iter().enumerate() {
        by.entry(g).or_default().push(i);
    }
    let mut out = Groups {
        ids: vec![],
        n: vec![],
        xtx: vec![],
        xty: vec![],
        ztz: vec![],
        ztx: vec![],
        zty: vec![],
        yty: vec![],
    };
    for (g, idx) in by {
        let rows: Vec<&Vec<f64>> = idx.iter().map(|&i| &data.x.rows[i]).collect();
        let x = design(&rows, fixed);
        let z = design(&rows, random);
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| data.y.values[i]));
        out.ids.push(g);
        out.n.push(idx.len() as f64);
        out.xtx.push(x.transpose() * &x);
        out.xty.push(x.transpose() * &y);
        out.ztz.push(z.transpose() * &z);
        out.ztx.push(z.transpose() * &x);
        out.zty.push(z.transpose() * &y);
        out.yty.push(y.norm_squared());
    }
    out
}

/// Per-group quantities under the current variance parameters.
struct GroupSolve {
    /// S M⁻¹ S, the conditional covariance of u_j.
    cov: DMatrix<f64>,
    logdet_m: f64,
}

fn group_solve(ztz: &DMatrix<f64>, s: &DVector<f64>, sigma2: f64) -> GroupSolve {
    let q = ztz.ncols();
    let m = DMatrix::from_fn(q, q, |a, b| {
        f64::from(u8::from(a == b)) + s[a] * ztz[(a, b)] * s[b] / sigma2
    });
    let chol = m.cholesky().expect("I + S ZᵀZ S / σ² is positive definite");
    let logdet_m = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let minv = chol.inverse();
    let cov = DMatrix::from_fn(q, q, |a, b| s[a] * minv[(a, b)] * s[b]);
    GroupSolve { cov, logdet_m }
}

/// One pass over the groups at (β, D, σ²): log-likelihood, the GLS system for
/// the next β, and the EM moments for the next D and σ².
struct Pass {
    ll: f64,
    gls_a: DMatrix<f64>,
    gls_b: DVector<f64>,
    blup: Vec<DVector<f64>>,
    d_moment: DVector<f64>,
    sse: f64,
}

fn pass(g: &Groups, beta: &DVector<f64>, s: &DVector<f64>, sigma2: f64) -> Pass {
    let (p, q) = (g.xtx[0].ncols(), g.ztz[0].ncols());
    let mut out = Pass {
        ll: 0.0,
        gls_a: DMatrix::zeros(p, p),
        gls_b: DVector::zeros(p),
        blup: Vec::with_capacity(g.ids.len()),
        d_moment: DVector::zeros(q),
        sse: 0.0,
    };
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    for j in 0..g.ids.len() {
        let gs = group_solve(&g.ztz[j], s, sigma2);
        let c_ztx = &gs.cov * &g.ztx[j];
        out.gls_a += (&g.xtx[j] - g.ztx[j].transpose() * &c_ztx / sigma2) / sigma2;
        out.gls_b += (&g.xty[j] - c_ztx.transpose() * &g.zty[j] / sigma2) / sigma2;

        let rtr = g.yty[j] - 2.0 * beta.dot(&g.xty[j]) + beta.dot(&(&g.xtx[j] * beta));
        let ztr = &g.zty[j] - &g.ztx[j] * beta;
        let u = &gs.cov * &ztr / sigma2;
        let quad = (rtr - ztr.dot(&u)) / sigma2;
        out.ll += -0.5 * (g.n[j] * ln2pi + g.n[j] * sigma2.ln() + gs.logdet_m + quad);

        out.sse +=
            rtr - 2.0 * u.dot(&ztr) + u.dot(&(&g.ztz[j] * &u)) + (&gs.cov * &g.ztz[j]).trace();
        for k in 0..q {
            out.d_moment[k] += u[k] * u[k] + gs.cov[(k, k)];
        }
        out.blup.push(u);
    }
    out
}

fn log_likelihood(g: &Groups, beta: &DVector<f64>, s: &DVector<f64>, sigma2: f64) -> f64 {
    pass(g, beta, s, sigma2).ll
}

fn solve_gls(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
    a.cholesky()
        .map(|c| c.solve(b))
        .ok_or_else(|| ModelError::RankDeficient(vec!["fixed-effect design".into()]))
}

/// Fixed effects and variance components.
#[derive(Clone, PartialEq)]
struct Theta {
    beta: DVector<f64>,
    d: DVector<f64>,
    sigma2: f64,
}

impl Theta {
    fn sub(&self, o: &Theta) -> Theta {
        Theta {
            beta: &self.beta - &o.beta,
            d: &self.d - &o.d,
            sigma2: self.sigma2 - o.sigma2,
        }
    }

    /// `self + a · o`
    fn axpy(&self, a: f64, o: &Theta) -> Theta {
        Theta {
            beta: &self.beta + &o.beta * a,
            d: &self.d + &o.d * a,
            sigma2: self.sigma2 + a * o.sigma2,
        }
    }

    fn norm(&self) -> f64 {
        (self.beta.norm_squared() + self.d.norm_squared() + self.sigma2 * self.sigma2).sqrt()
    }

    fn feasible(&self) -> bool {
        self.sigma2 > 1e-12
            && self.d.iter().all(|&v| v >= 0.0)
            && self.beta.iter().all(|v| v.is_finite())
    }
}

struct EmMap<'a> {
    g: &'a Groups,
    n: f64,
    zero_variance: bool,
}

impl EmMap<'_> {
    /// GLS for β at the current variances, then the EM update of the
    /// variances given the new β. Also returns the pass at (new β, old
    /// variances), whose log-likelihood drives the stopping rule.
    fn apply(&self, t: &Theta) -> Result<(Theta, Pass), ModelError> {
        let s = t.d.map(f64::sqrt);
        let at = pass(self.g, &t.beta, &s, t.sigma2);
        let beta = solve_gls(at.gls_a, &at.gls_b)?;
        let em = pass(self.g, &beta, &s, t.sigma2);
        let sigma2 = (em.sse / self.n).max(1e-12);
        let d = if self.zero_variance {
            t.d.clone()
        } else {
            &em.d_moment / self.g.ids.len() as f64
        };
        Ok((Theta { beta, d, sigma2 }, em))
    }
}

pub fn fit_lmm(data: &Dataset, spec: &LmmSpec) -> Result<LmmModel, ModelError> {
    spec.check()?;
    let n_groups = data
        .x
        .group_labels
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if n_groups < 2 {
        return Err(ModelError::Data(
            "mixed model needs at least two groups".into(),
        ));
    }
    // user dummies are replaced by the random intercept
    let candidates: Vec<usize> = (0..data.p())
        .filter(|&j| data.x.columns[j].group != Group::User)
        .collect();
    let (fixed, dropped) = rank_repair(&data.x, &candidates);
    let random: Vec<usize> = if spec.random_slopes {
        fixed
            .iter()
            .copied()
            .filter(|&j| !spec.is_fixed_only(&data.x.columns[j].name))
            .collect()
    } else {
        vec![]
    };
    let g = split_groups(data, &fixed, &random);
    let q = random.len() + 1;
    let n = data.n() as f64;

    // start from the least-squares fit
    let x_all = DMatrix::from_fn(data.n(), fixed.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            data.x.rows[i][fixed[j - 1]]
        }
    });
    let y_all = DVector::from_column_slice(data.y());
    let beta = super::ols::qr_solve(x_all.clone(), &y_all).map_err(|bad| {
        ModelError::RankDeficient(
            bad.iter()
                .map(|&j| {
                    if j == 0 {
                        "(intercept)".into()
                    } else {
                        data.x.columns[fixed[j - 1]].name.clone()
                    }
                })
                .collect(),
        )
    })?;
    let res = &y_all - &x_all * &beta;
    let sigma2 = (res.norm_squared() / n).max(1e-12);
    let d = if spec.zero_variance {
        DVector::zeros(q)
    } else {
        DVector::from_element(q, 0.1 * sigma2)
    };

    let em = EmMap {
        g: &g,
        n,
        zero_variance: spec.zero_variance,
    };
    let mut theta = Theta { beta, d, sigma2 };
    let mut ll = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    // One EM map per call; stops once the log-likelihood settles.
    let step = |from: &Theta,
                ll: &mut f64,
                iterations: &mut usize|
     -> Result<(Theta, f64, bool), ModelError> {
        *iterations += 1;
        let (next, at) = em.apply(from)?;
        let change = (at.ll - *ll).abs() / at.ll.abs().max(1.0);
        *ll = at.ll;
        Ok((next, at.ll, change < spec.tol))
    };
    'outer: while iterations < spec.max_iter {
        let (t1, _, done) = step(&theta, &mut ll, &mut iterations)?;
        if done {
            theta.beta = t1.beta;
            converged = true;
            break 'outer;
        }
        let (t2, ll2, done) = step(&t1, &mut ll, &mut iterations)?;
        if done {
            theta = Theta {
                beta: t2.beta,
                ..t1
            };
            converged = true;
            break 'outer;
        }
        // SQUAREM extrapolation along the last two EM steps, pulled back
        // toward the plain step until the variances stay non-negative
        let r = t1.sub(&theta);
        let v = t2.sub(&t1).sub(&r);
        let (rn, vn) = (r.norm(), v.norm());
        let mut next = t2.clone();
        if vn > 0.0 && rn > 0.0 {
            let mut alpha = -(rn / vn).max(1.0);
            while alpha < -1.0 {
                let cand = theta.axpy(-2.0 * alpha, &r).axpy(alpha * alpha, &v);
                if cand.feasible() {
                    next = cand;
                    break;
                }
                alpha = (alpha - 1.0) / 2.0;
                if alpha > -1.0 - 1e-12 {
                    alpha = -1.0;
                }
            }
        }
        if next == t2 || iterations >= spec.max_iter {
            theta = t2;
            continue;
        }
        let (t3, ll3, done) = step(&next, &mut ll, &mut iterations)?;
        if ll3 >= ll2 {
            if done {
                theta = Theta {
                    beta: t3.beta,
                    ..next
                };
                converged = true;
                break 'outer;
            }
            theta = t3;
        } else {
            // extrapolation lost ground; resume plain EM from the last step
            ll = ll2;
            theta = t2;
        }
    }
    let Theta { beta, d, sigma2 } = theta;
    if !converged {
        return Err(ModelError::NotConverged {
            method: "lmm",
            iterations,
            detail: format!("log-likelihood {ll:.6}, sigma2 {sigma2:.6}"),
        });
    }
    let s = d.map(f64::sqrt);
    let fin = pass(&g, &beta, &s, sigma2);
    let blup = g
        .ids
        .iter()
        .zip(&fin.blup)
        .map(|(&id, u)| (id, u.iter().copied().collect()))
        .collect();
    Ok(LmmModel {
        fixed_cols: fixed,
        random_cols: random,
        beta: beta.iter().copied().collect(),
        d: d.iter().copied().collect(),
        sigma2,
        blup,
        log_likelihood: fin.ll,
        iterations,
        dropped,
    })
}

impl LmmModel {
    /// Fixed part plus the group's random effects when the group was seen in
    /// training.
    pub fn predict_row(&self, row: &[f64], group: UserId) -> f64 {
        let mut y = self.beta[0]
            + self
                .fixed_cols
                .iter()
                .zip(&self.beta[1..])
                .map(|(&j, b)| row[j] * b)
                .sum::<f64>();
        if let Some(u) = self.blup.get(&group) {
            y += u[0]
                + self
                    .random_cols
                    .iter()
                    .zip(&u[1..])
                    .map(|(&j, b)| row[j] * b)
                    .sum::<f64>();
        }
        y
    }

    /// Marginal log-likelihood of `data` under the fitted parameters.
    pub fn marginal_log_likelihood(&self, data: &Dataset) -> f64 {
        let g = split_groups(data, &self.fixed_cols, &self.random_cols);
        let s = DVector::from_iterator(self.d.len(), self.d.iter().map(|v| v.sqrt()));
        log_likelihood(&g, &DVector::from_column_slice(&self.beta), &s, self.sigma2)
    }

    /// Same as [`Self::marginal_log_likelihood`] with explicit parameters.
    pub fn log_likelihood_at(&self, data: &Dataset, beta: &[f64], d: &[f64], sigma2: f64) -> f64 {
        let g = split_groups(data, &self.fixed_cols, &self.random_cols);
        let s = DVector::from_iterator(d.len(), d.iter().map(|v| v.sqrt()));
        log_likelihood(&g, &DVector::from_column_slice(beta), &s, sigma2)
    }
}
