use super::{halton, Domain, GpError, HyperPoint};
use crate::numerics::{self, CholeskyFactor, Matrix, SpdMatrix};

/// Squared-exponential kernel `v·exp(−½ Σ (Δ_k/ℓ_k)²)` plus observation
/// noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub variance: f64,
    pub noise: f64,
}

impl KernelParams {
    pub fn new(lengthscales: Vec<f64>, variance: f64, noise: f64) -> Result<Self, GpError> {
        let k = Self { lengthscales, variance, noise };
        k.validate()?;
        Ok(k)
    }

    fn validate(&self) -> Result<(), GpError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if self.lengthscales.is_empty() || !self.lengthscales.iter().all(|&l| pos(l)) || !pos(self.variance) {
            return Err(GpError::InvalidKernel("lengthscales and variance must be positive".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(GpError::InvalidKernel(format!("noise must be >= 0, got {}", self.noise)));
        }
        Ok(())
    }

    fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a.iter().zip(b).zip(&self.lengthscales).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
        self.variance * (-0.5 * r2).exp()
    }
}

/// Conditioned GP. Inputs are affinely rescaled (to the unit box when built
/// with [`gp_condition_in`]) before the kernel sees them, and targets are
/// centered by their mean.
#[derive(Debug, Clone)]
pub struct GpSurrogate {
    x_obs: Matrix,
    scaled: Matrix,
    y_obs: Vec<f64>,
    y_mean: f64,
    params: KernelParams,
    offset: Vec<f64>,
    width: Vec<f64>,
    gram_chol: CholeskyFactor,
    alpha: Vec<f64>,
}

fn rescale(x: &Matrix, offset: &[f64], width: &[f64]) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for (k, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = (*v - offset[k]) / width[k];
        }
    }
    out
}

fn gram(scaled: &Matrix, params: &KernelParams) -> Matrix {
    let t = scaled.rows();
    let mut g = Matrix::zeros(t, t);
    for i in 0..t {
        for j in 0..=i {
            let v = params.k(scaled.row(i), scaled.row(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g[(i, i)] += params.noise;
    }
    g
}

fn condition(x_obs: &Matrix, y_obs: &[f64], params: &KernelParams, offset: Vec<f64>, width: Vec<f64>) -> Result<GpSurrogate, GpError> {
    params.validate()?;
    if x_obs.rows() == 0 {
        return Err(GpError::NoObservations);
    }
    if y_obs.len() != x_obs.rows() {
        return Err(GpError::DimensionMismatch { expected: x_obs.rows(), got: y_obs.len() });
    }
    if params.lengthscales.len() != x_obs.cols() {
        return Err(GpError::DimensionMismatch { expected: x_obs.cols(), got: params.lengthscales.len() });
    }
    let scaled = rescale(x_obs, &offset, &width);
    let y_mean = y_obs.iter().sum::<f64>() / y_obs.len() as f64;
    let centered: Vec<f64> = y_obs.iter().map(|y| y - y_mean).collect();
    let gram_chol = numerics::cholesky(&SpdMatrix::new(gram(&scaled, params))?)?;
    let alpha = numerics::solve_spd(&gram_chol, &centered)?;
    Ok(GpSurrogate {
        x_obs: x_obs.clone(),
        scaled,
        y_obs: y_obs.to_vec(),
        y_mean,
        params: params.clone(),
        offset,
        width,
        gram_chol,
        alpha,
    })
}

/// Conditions on observations in their own coordinates (no rescaling).
pub fn gp_condition(x_obs: &Matrix, y_obs: &[f64], params: &KernelParams) -> Result<GpSurrogate, GpError> {
    let d = x_obs.cols();
    condition(x_obs, y_obs, params, vec![0.0; d], vec![1.0; d])
}

/// Conditions on observations from `domain`, with lengthscales measured in
/// unit-box coordinates.
pub fn gp_condition_in(domain: &Domain, x_obs: &Matrix, y_obs: &[f64], params: &KernelParams) -> Result<GpSurrogate, GpError> {
    if domain.dim() != x_obs.cols() {
        return Err(GpError::DimensionMismatch { expected: domain.dim(), got: x_obs.cols() });
    }
    let width = (0..domain.dim()).map(|k| domain.upper()[k] - domain.lower()[k]).collect();
    condition(x_obs, y_obs, params, domain.lower().to_vec(), width)
}

impl GpSurrogate {
    pub fn x_obs(&self) -> &Matrix {
        &self.x_obs
    }

    pub fn y_obs(&self) -> &[f64] {
        &self.y_obs
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn gram_chol(&self) -> &CholeskyFactor {
        &self.gram_chol
    }

    pub fn n_obs(&self) -> usize {
        self.y_obs.len()
    }

    pub(crate) fn scale_point(&self, coords: &[f64]) -> Vec<f64> {
        coords.iter().enumerate().map(|(k, c)| (c - self.offset[k]) / self.width[k]).collect()
    }

    /// Posterior mean and sd at a point already in the rescaled coordinates.
    pub(crate) fn posterior_scaled(&self, u: &[f64]) -> (f64, f64) {
        let kstar: Vec<f64> = (0..self.scaled.rows()).map(|i| self.params.k(self.scaled.row(i), u)).collect();
        let mu = self.y_mean + numerics::dot(&kstar, &self.alpha);
        let v = self.gram_chol.forward_solve(&kstar).expect("dimension fixed at construction");
        let var = self.params.variance - numerics::dot(&v, &v);
        (mu, var.max(0.0).sqrt())
    }
}

/// Posterior mean and standard deviation of the latent function at `theta`.
pub fn gp_posterior(s: &GpSurrogate, theta: &HyperPoint) -> (f64, f64) {
    s.posterior_scaled(&s.scale_point(&theta.coords))
}

/// Log marginal likelihood of centered targets under `params`, inputs already
/// rescaled. `-inf` when the Gram matrix cannot be factored.
pub fn log_marginal_likelihood(scaled: &Matrix, y: &[f64], params: &KernelParams) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let Ok(spd) = SpdMatrix::new(gram(scaled, params)) else { return f64::NEG_INFINITY };
    let Ok(chol) = numerics::cholesky(&spd) else { return f64::NEG_INFINITY };
    let Ok(alpha) = numerics::solve_spd(&chol, &centered) else { return f64::NEG_INFINITY };
    let t = y.len() as f64;
    -0.5 * numerics::dot(&centered, &alpha) - 0.5 * chol.log_det() - 0.5 * t * (2.0 * std::f64::consts::PI).ln()
}

const LOG_LENGTHSCALE: (f64, f64) = (-2.995_732_273_553_991, std::f64::consts::LN_2); // ln 0.05, ln 2
const LOG_VARIANCE: (f64, f64) = (-9.210_340_371_976_182, 1.386_294_361_119_890_6); // ln 1e-4, ln 4
const LOG_NOISE: (f64, f64) = (-13.815_510_557_964_274, 0.0); // ln 1e-6, ln 1
const KERNEL_STARTS: u64 = 8;

fn params_from_log(z: &[f64]) -> KernelParams {
    let d = z.len() - 2;
    KernelParams { lengthscales: z[..d].iter().map(|v| v.exp()).collect(), variance: z[d].exp(), noise: z[d + 1].exp() }
}

/// Maximizes the log marginal likelihood over log-lengthscales, log-variance
/// and log-noise inside fixed boxes, by pattern search from a centre start
/// and Halton-spread starts. Inputs are taken in `domain`'s unit-box
/// coordinates. Deterministic.
pub fn fit_kernel(domain: &Domain, x_obs: &Matrix, y_obs: &[f64]) -> Result<KernelParams, GpError> {
    if x_obs.rows() == 0 {
        return Err(GpError::NoObservations);
    }
    if domain.dim() != x_obs.cols() {
        return Err(GpError::DimensionMismatch { expected: domain.dim(), got: x_obs.cols() });
    }
    let width: Vec<f64> = (0..domain.dim()).map(|k| domain.upper()[k] - domain.lower()[k]).collect();
    let scaled = rescale(x_obs, domain.lower(), &width);
    let d = domain.dim();
    let bounds: Vec<(f64, f64)> =
        std::iter::repeat_n(LOG_LENGTHSCALE, d).chain([LOG_VARIANCE, LOG_NOISE]).collect();
    let lml = |z: &[f64]| log_marginal_likelihood(&scaled, y_obs, &params_from_log(z));

    let mut starts: Vec<Vec<f64>> = vec![bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()];
    let zero_shift = vec![0.0; bounds.len()];
    for i in 1..KERNEL_STARTS {
        let u = halton::halton_point(i, &zero_shift);
        starts.push(bounds.iter().zip(&u).map(|((lo, hi), v)| lo + v * (hi - lo)).collect());
    }

    let mut best = (f64::NEG_INFINITY, starts[0].clone());
    for start in starts {
        let (v, z) = pattern_search(&lml, start, &bounds);
        if v > best.0 {
            best = (v, z);
        }
    }
    Ok(params_from_log(&best.1))
}

/// Compass search maximizing `f` inside `bounds`; steps start at a quarter of
/// each range and halve down to 1e-3 of it.
fn pattern_search(f: &dyn Fn(&[f64]) -> f64, mut z: Vec<f64>, bounds: &[(f64, f64)]) -> (f64, Vec<f64>) {
    let mut fz = f(&z);
    let mut rel = 0.25;
    while rel >= 1e-3 {
        let mut improved = false;
        for k in 0..z.len() {
            let (lo, hi) = bounds[k];
            let step = rel * (hi - lo);
            for dir in [1.0, -1.0] {
                let mut cand = z.clone();
                cand[k] = (z[k] + dir * step).clamp(lo, hi);
                if cand[k] == z[k] {
                    continue;
                }
                let fc = f(&cand);
                if fc > fz {
                    z = cand;
                    fz = fc;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            rel *= 0.5;
        }
    }
    (fz, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: f64, v: f64, noise: f64) -> KernelParams {
        KernelParams::new(vec![l], v, noise).unwrap()
    }

    #[test]
    fn single_point_interpolation() {
        let s = gp_condition(&Matrix::from_rows(&[[0.4]]), &[2.5], &params(0.3, 1.0, 0.0)).unwrap();
        let (mu, sd) = gp_posterior(&s, &HyperPoint::new(vec![0.4]));
        assert!((mu - 2.5).abs() < 1e-12);
        assert!(sd * sd <= 1e-10);
        let (mu, sd) = gp_posterior(&s, &HyperPoint::new(vec![50.0]));
        assert_eq!((mu, sd), (2.5, 1.0));
    }

    #[test]
    fn distant_points_decorrelate() {
        let s = gp_condition(&Matrix::from_rows(&[[0.0], [10.0]]), &[1.0, -1.0], &params(0.5, 2.0, 0.0)).unwrap();
        let (_, sd) = gp_posterior(&s, &HyperPoint::new(vec![5.0]));
        assert!((sd * sd - 2.0).abs() < 1e-6);
    }

    #[test]
    fn kernel_validation() {
        assert!(KernelParams::new(vec![0.0], 1.0, 0.0).is_err());
        assert!(KernelParams::new(vec![1.0], 1.0, -1e-3).is_err());
        let p = params(1.0, 1.0, 0.0);
        assert_eq!(gp_condition(&Matrix::zeros(0, 1), &[], &p).unwrap_err(), GpError::NoObservations);
    }

    #[test]
    fn kernel_fit_stays_in_bounds() {
        let x = Matrix::from_rows(&[[0.1], [0.3], [0.5], [0.7], [0.9]]);
        let y: Vec<f64> = [0.1f64, 0.3, 0.5, 0.7, 0.9].iter().map(|v| (6.0 * v).sin()).collect();
        let k = fit_kernel(&Domain::unit(1), &x, &y).unwrap();
        assert!((0.05..=2.0 + 1e-12).contains(&k.lengthscales[0]));
        assert!((1e-4..=4.0 + 1e-12).contains(&k.variance));
        assert!((1e-6 - 1e-18..=1.0).contains(&k.noise));
    }
}
