use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Constant,
    RandomHighContrast,
    Checkerboard,
}

impl FieldKind {
    pub fn code(self) -> u32 {
        match self {
            FieldKind::Constant => 1,
            FieldKind::RandomHighContrast => 2,
            FieldKind::Checkerboard => 3,
        }
    }

    pub fn from_code(c: u32) -> Option<Self> {
        match c {
            1 => Some(FieldKind::Constant),
            2 => Some(FieldKind::RandomHighContrast),
            3 => Some(FieldKind::Checkerboard),
            _ => None,
        }
    }
}

impl std::str::FromStr for FieldKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" | "1" => Ok(FieldKind::Constant),
            "random" | "random-high-contrast" | "2" => Ok(FieldKind::RandomHighContrast),
            "checkerboard" | "3" => Ok(FieldKind::Checkerboard),
            other => Err(format!("unknown field kind '{other}'")),
        }
    }
}

impl std::fmt::Display for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FieldKind::Constant => "constant",
            FieldKind::RandomHighContrast => "random-high-contrast",
            FieldKind::Checkerboard => "checkerboard",
        })
    }
}

const LOW: f64 = 0.1;
const HIGH: f64 = 1000.0;
const B_VALUE: f64 = 0.1;

/// Point values of `a` and `b` on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub n: usize,
    pub kind: FieldKind,
    pub seed: u64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CoefficientField {
    pub fn new(spec: &GridSpec, kind: FieldKind, seed: u64) -> Self {
        match kind {
            FieldKind::Constant => Self::constant(spec),
            FieldKind::RandomHighContrast => Self::random_high_contrast(spec, seed),
            FieldKind::Checkerboard => Self::checkerboard(spec),
        }
    }

    pub fn constant(spec: &GridSpec) -> Self {
        let n3 = spec.num_dofs();
        CoefficientField { n: spec.n, kind: FieldKind::Constant, seed: 0, a: vec![1.0; n3], b: vec![B_VALUE; n3] }
    }

    /// Uniform noise smoothed by a periodic unit-width Gaussian, then
    /// thresholded at one half.
    pub fn random_high_contrast(spec: &GridSpec, seed: u64) -> Self {
        let n = spec.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u: Vec<f64> = (0..spec.num_dofs()).map(|_| rng.gen::<f64>()).collect();
        let kernel = gaussian_kernel(1.0, 4);
        for axis in 0..3 {
            u = convolve_axis(&u, n, axis, &kernel);
        }
        let a = u.into_iter().map(|v| if v <= 0.5 { LOW } else { HIGH }).collect();
        CoefficientField { n, kind: FieldKind::RandomHighContrast, seed, a, b: vec![B_VALUE; spec.num_dofs()] }
    }

    /// `a = 1000` where `Σ floor(x_i·n/7)` is even, `0.1` otherwise.
    pub fn checkerboard(spec: &GridSpec) -> Self {
        let n = spec.n;
        let a = (0..spec.num_dofs())
            .map(|i| {
                let p = spec.coords(i);
                // x_i·n/7 = j_i/7 for x_i = j_i·h.
                let s: usize = p.iter().map(|&j| j / 7).sum();
                if s % 2 == 0 {
                    HIGH
                } else {
                    LOW
                }
            })
            .collect();
        CoefficientField { n, kind: FieldKind::Checkerboard, seed: 0, a, b: vec![B_VALUE; spec.num_dofs()] }
    }

    /// Conductivity on the edge from `p` to its periodic `+axis` neighbor `q`.
    #[inline]
    pub fn edge(&self, p: usize, q: usize) -> f64 {
        0.5 * (self.a[p] + self.a[q])
    }
}

fn gaussian_kernel(sigma: f64, radius_sigmas: usize) -> Vec<f64> {
    let r = (radius_sigmas as f64 * sigma).ceil() as i64;
    let w: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn convolve_axis(u: &[f64], n: usize, axis: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let stride = [n * n, n, 1][axis];
    let mut out = vec![0.0; u.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let c = (i / stride) % n;
        let base = i - c * stride;
        let mut s = 0.0;
        for (k, &w) in kernel.iter().enumerate() {
            let off = k as i64 - r;
            let cc = (c as i64 + off).rem_euclid(n as i64) as usize;
            s += w * u[base + cc * stride];
        }
        *o = s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkerboard_values() {
        let s7 = GridSpec { n: 7, m: 7, levels: 0 };
        assert_eq!(CoefficientField::checkerboard(&s7).a[0], 1000.0);
        let s14 = GridSpec::with_leaf(14, 7).unwrap();
        let f = CoefficientField::checkerboard(&s14);
        assert_eq!(f.a[s14.linear([7, 0, 0])], 0.1);
        assert_eq!(f.a[s14.linear([7, 7, 0])], 1000.0);
    }

    #[test]
    fn random_field_is_deterministic_and_balanced() {
        let spec = GridSpec::new(32).unwrap();
        let f1 = CoefficientField::random_high_contrast(&spec, 7);
        let f2 = CoefficientField::random_high_contrast(&spec, 7);
        assert_eq!(f1, f2);
        let high = f1.a.iter().filter(|&&v| v == 1000.0).count() as f64 / f1.a.len() as f64;
        assert!(high > 0.3 && high < 0.7, "{high}");
        assert!(f1.a.iter().all(|&v| v == 0.1 || v == 1000.0));
    }

    #[test]
    fn kernel_is_normalized() {
        let k = gaussian_kernel(1.0, 4);
        assert_eq!(k.len(), 9);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
