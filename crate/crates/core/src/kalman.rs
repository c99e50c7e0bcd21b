//! Linear-Gaussian state-space filter shared by the ARMA likelihood and the
//! structural models.
//!
//! State:       x(t) = T·x(t-1) + w(t),   w ~ N(0, Q)
//! Observation: y(t) = Z·x(t)   + v(t),   v ~ N(0, h)
//!
//! Matrices are dense and row-major; state dimensions here never exceed six,
//! so nothing fancier is warranted.

/// Innovation variances at or below this are treated as singular.
pub(crate) const SINGULAR_VARIANCE: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StateModel {
    pub dim: usize,
    pub transition: Vec<f64>,
    pub design: Vec<f64>,
    pub state_cov: Vec<f64>,
    pub obs_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Singular {
    pub time: usize,
    pub variance: f64,
}

/// One observation's contribution to the prediction-error decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Innovation {
    pub time: usize,
    pub value: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct FilterRun {
    pub innovations: Vec<Innovation>,
    /// Posterior means and covariances per time, when requested.
    pub means: Vec<Vec<f64>>,
    pub covs: Vec<Vec<f64>>,
    pub final_mean: Vec<f64>,
    pub final_cov: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct FilterOptions {
    pub store_states: bool,
    /// Freeze the gain once the innovation variance stops changing by more
    /// than this relative amount. Only valid without missing observations.
    pub steady_state_tol: Option<f64>,
}

pub(crate) fn mat_vec(m: &[f64], v: &[f64], dim: usize) -> Vec<f64> {
    (0..dim).map(|i| (0..dim).map(|j| m[i * dim + j] * v[j]).sum()).collect()
}

fn mat_vec_into(m: &[f64], v: &[f64], dim: usize, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..dim).map(|j| m[i * dim + j] * v[j]).sum();
    }
}

/// `M·P·Mᵀ` for square `dim × dim` matrices.
pub(crate) fn sandwich(m: &[f64], p: &[f64], dim: usize) -> Vec<f64> {
    let mut mp = vec![0.0; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let a = m[i * dim + k];
            if a == 0.0 {
                continue;
            }
            for j in 0..dim {
                mp[i * dim + j] += a * p[k * dim + j];
            }
        }
    }
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                s += mp[i * dim + k] * m[j * dim + k];
            }
            out[i * dim + j] = s;
        }
    }
    out
}

impl StateModel {
    pub fn predict(&self, mean: &[f64], cov: &[f64], control: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim;
        let mut m = mat_vec(&self.transition, mean, dim);
        if let Some(u) = control {
            for (mi, ui) in m.iter_mut().zip(u) {
                *mi += ui;
            }
        }
        let mut p = sandwich(&self.transition, cov, dim);
        for (pi, qi) in p.iter_mut().zip(&self.state_cov) {
            *pi += qi;
        }
        symmetrize(&mut p, dim);
        (m, p)
    }

    /// Measurement update. Returns the posterior plus (innovation, variance).
    pub fn update(
        &self,
        mean: &[f64],
        cov: &[f64],
        y: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, f64, f64), f64> {
        let dim = self.dim;
        let z = &self.design;
        // P·Zᵀ
        let pz: Vec<f64> = (0..dim).map(|i| (0..dim).map(|j| cov[i * dim + j] * z[j]).sum()).collect();
        let f = z.iter().zip(&pz).map(|(a, b)| a * b).sum::<f64>() + self.obs_var;
        if !(f > SINGULAR_VARIANCE) {
            return Err(f);
        }
        let predicted = z.iter().zip(mean).map(|(a, b)| a * b).sum::<f64>();
        let v = y - predicted;
        let gain: Vec<f64> = pz.iter().map(|x| x / f).collect();
        // Written as (a - K·ŷ) + K·y so that a unit gain reproduces y exactly.
        let m: Vec<f64> = mean.iter().zip(&gain).map(|(a, k)| (a - k * predicted) + k * y).collect();
        let mut p = cov.to_vec();
        for i in 0..dim {
            for j in 0..dim {
                p[i * dim + j] -= gain[i] * pz[j];
            }
        }
        symmetrize(&mut p, dim);
        Ok((m, p, v, f))
    }

    /// Runs the filter from the posterior `(mean, cov)` at time zero.
    pub fn filter(
        &self,
        init_mean: &[f64],
        init_cov: &[f64],
        observations: &[Option<f64>],
        opts: FilterOptions,
    ) -> Result<FilterRun, Singular> {
        let mut run = FilterRun::default();
        run.innovations.reserve(observations.len());
        let mut mean = init_mean.to_vec();
        let mut cov = init_cov.to_vec();
        let mut prev_f: Option<f64> = None;
        // Frozen (gain, innovation variance) once steady.
        let mut steady: Option<(Vec<f64>, f64)> = None;
        let mut pred = vec![0.0; self.dim];

        for (t, obs) in observations.iter().enumerate() {
            if let (Some((gain, f)), Some(y)) = (&steady, obs) {
                mat_vec_into(&self.transition, &mean, self.dim, &mut pred);
                let v = y - self.design.iter().zip(&pred).map(|(a, b)| a * b).sum::<f64>();
                for ((m, a), k) in mean.iter_mut().zip(&pred).zip(gain) {
                    *m = a + k * v;
                }
                run.innovations.push(Innovation { time: t, value: v, variance: *f });
                if opts.store_states {
                    run.means.push(mean.clone());
                    run.covs.push(cov.clone());
                }
                continue;
            }
            let (pm, pc) = self.predict(&mean, &cov, None);
            match obs {
                Some(y) => {
                    let (m, p, v, f) =
                        self.update(&pm, &pc, *y).map_err(|variance| Singular { time: t, variance })?;
                    if let (Some(tol), Some(pf)) = (opts.steady_state_tol, prev_f) {
                        if (f - pf).abs() <= tol * f {
                            let z = &self.design;
                            let gain: Vec<f64> = (0..self.dim)
                                .map(|i| (0..self.dim).map(|j| pc[i * self.dim + j] * z[j]).sum::<f64>() / f)
                                .collect();
                            steady = Some((gain, f));
                        }
                    }
                    prev_f = Some(f);
                    mean = m;
                    cov = p;
                    run.innovations.push(Innovation { time: t, value: v, variance: f });
                }
                None => {
                    mean = pm;
                    cov = pc;
                    prev_f = None;
                }
            }
            if opts.store_states {
                run.means.push(mean.clone());
                run.covs.push(cov.clone());
            }
        }
        run.final_mean = mean;
        run.final_cov = cov;
        Ok(run)
    }
}

fn symmetrize(p: &mut [f64], dim: usize) {
    for i in 0..dim {
        for j in (i + 1)..dim {
            let avg = 0.5 * (p[i * dim + j] + p[j * dim + i]);
            p[i * dim + j] = avg;
            p[j * dim + i] = avg;
        }
    }
}

/// Gaussian log-likelihood from the prediction-error decomposition, skipping
/// innovations before `skip_until` (diffuse start-up period).
pub(crate) fn loglik(innovations: &[Innovation], skip_until: usize) -> f64 {
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    innovations
        .iter()
        .filter(|i| i.time >= skip_until)
        .map(|i| -0.5 * (ln2pi + i.variance.ln() + i.value * i.value / i.variance))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(q: f64, r: f64) -> StateModel {
        StateModel { dim: 1, transition: vec![1.0], design: vec![1.0], state_cov: vec![q], obs_var: r }
    }

    #[test]
    fn scalar_conjugate_update() {
        let m = level(0.0, 1.0);
        let (pm, pc) = m.predict(&[0.0], &[1.0], None);
        let (mean, cov, v, f) = m.update(&pm, &pc, 2.0).unwrap();
        assert_eq!((mean[0], cov[0], v, f), (1.0, 0.5, 2.0, 2.0));
    }

    #[test]
    fn gaps_only_predict() {
        let m = level(0.5, 1.0);
        let run = m.filter(&[3.0], &[2.0], &[None], FilterOptions { store_states: true, ..Default::default() }).unwrap();
        assert!(run.innovations.is_empty());
        assert_eq!(run.final_mean, vec![3.0]);
        assert_eq!(run.final_cov, vec![2.5]);
    }

    #[test]
    fn singular_reported() {
        let m = level(0.0, 0.0);
        let err = m.filter(&[0.0], &[0.0], &[Some(1.0)], FilterOptions::default()).unwrap_err();
        assert_eq!(err.time, 0);
    }

    #[test]
    fn sandwich_matches_manual() {
        let t = [1.0, 1.0, 0.0, 1.0];
        let p = [2.0, 0.5, 0.5, 1.0];
        // T P Tᵀ for the local-trend transition.
        assert_eq!(sandwich(&t, &p, 2), vec![4.0, 1.5, 1.5, 1.0]);
    }
}
