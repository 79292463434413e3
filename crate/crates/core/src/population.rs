//! Population moments of the count kernel under a graphon: exact block sums
//! for small block models, nested Monte Carlo otherwise.

use crate::error::{Error, Result};
use crate::expansion::{CoeffSource, EdgeworthCoefficients};
use crate::graph::{GraphonKind, GraphonSpec};
use crate::motif::{IsoSet, Motif};
use crate::rng::{domain, substream};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest block count and motif size handled by exact enumeration.
pub const EXACT_MAX_BLOCKS: usize = 4;
pub const EXACT_MAX_R: usize = 4;

/// Nested Monte Carlo sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSizes {
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
    /// Use Monte Carlo even when exact block enumeration applies.
    pub force_mc: bool,
}

impl Default for McSizes {
    fn default() -> Self {
        McSizes { outer: 20_000, inner: 200, seed: 0, force_mc: false }
    }
}

/// Standard errors of the population moments (all zero for exact enumeration).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentErrors {
    pub theta: f64,
    pub tau: f64,
    pub m3: f64,
    pub m112: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationMoments {
    pub theta: f64,
    pub tau: f64,
    pub m3: f64,
    pub m112: f64,
    pub exact: bool,
    pub errors: MomentErrors,
}

impl PopulationMoments {
    pub fn coefficients(&self, n: usize, r: usize) -> EdgeworthCoefficients<f64> {
        EdgeworthCoefficients {
            n,
            r,
            tau: self.tau,
            m3: self.m3,
            m112: self.m112,
            source: CoeffSource::Population,
            errors: Some(self.errors),
        }
    }
}

/// `h(x_1..x_r) = Σ_{M ≅ R} Π_{pairs} (p or 1−p)` for edge probabilities `p`.
fn kernel(masks: &[u32], r: usize, probs: &[f64]) -> f64 {
    let pairs = r * (r - 1) / 2;
    masks
        .iter()
        .map(|&m| {
            let mut prod = 1.0;
            for (b, &p) in probs.iter().enumerate().take(pairs) {
                prod *= if m >> b & 1 == 1 { p } else { 1.0 - p };
            }
            prod
        })
        .sum()
}

fn pair_probs(spec: &GraphonSpec, r: usize, w: impl Fn(usize, usize) -> f64, out: &mut [f64]) {
    let mut k = 0;
    for a in 0..r {
        for b in a + 1..r {
            out[k] = spec.rho * w(a, b);
            k += 1;
        }
    }
}

/// Conditional kernel averages on a block model: `θ`, `g1(a)` and `g̃2(a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockKernel {
    pub r: usize,
    pub pi: Vec<f64>,
    pub theta: f64,
    pub g1: Vec<f64>,
    /// Row-major `K × K`.
    pub g2_tilde: Vec<f64>,
}

impl BlockKernel {
    pub fn new(spec: &GraphonSpec, motif: &Motif) -> Result<BlockKernel> {
        spec.validate()?;
        let GraphonKind::Sbm { b, pi } = &spec.kind else {
            return Err(Error::Unsupported("exact enumeration needs a block model".into()));
        };
        let k = pi.len();
        let r = motif.r();
        if k > EXACT_MAX_BLOCKS || r > EXACT_MAX_R {
            return Err(Error::TooLarge { what: "block enumeration".into(), bound: (EXACT_MAX_BLOCKS * 10 + EXACT_MAX_R) as u64 });
        }
        let iso = IsoSet::new(motif);
        let masks = iso.masks();
        let mut theta = 0.0;
        let mut g1 = vec![0.0; k];
        let mut g2 = vec![0.0; k * k];
        let mut labels = vec![0usize; r];
        let mut probs = vec![0.0; r * (r - 1) / 2];
        let total = k.pow(r as u32);
        for code in 0..total {
            let mut c = code;
            for l in labels.iter_mut() {
                *l = c % k;
                c /= k;
            }
            pair_probs(spec, r, |x, y| b[labels[x]][labels[y]], &mut probs);
            let h = kernel(masks, r, &probs);
            let w_rest: f64 = labels[2.min(r)..].iter().map(|&l| pi[l]).product();
            let w1 = pi[labels[1]] * w_rest;
            theta += pi[labels[0]] * w1 * h;
            g1[labels[0]] += w1 * h;
            g2[labels[0] * k + labels[1]] += w_rest * h;
        }
        g1.iter_mut().for_each(|x| *x -= theta);
        g2.iter_mut().for_each(|x| *x -= theta);
        Ok(BlockKernel { r, pi: pi.clone(), theta, g1, g2_tilde: g2 })
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn moments(&self) -> PopulationMoments {
        let k = self.k();
        let mut t2 = 0.0;
        let mut m3 = 0.0;
        let mut m112 = 0.0;
        for a in 0..k {
            t2 += self.pi[a] * self.g1[a].powi(2);
            m3 += self.pi[a] * self.g1[a].powi(3);
            for c in 0..k {
                m112 += self.pi[a] * self.pi[c] * self.g1[a] * self.g1[c] * self.g2_tilde[a * k + c];
            }
        }
        PopulationMoments {
            theta: self.theta,
            tau: t2.max(0.0).sqrt(),
            m3,
            m112,
            exact: true,
            errors: MomentErrors::default(),
        }
    }
}

/// Joint population moments of several motifs on one block model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossMoments {
    pub theta: Vec<f64>,
    /// `E g1⁽ⁱ⁾ g1⁽ʲ⁾`
    pub lambda: Vec<Vec<f64>>,
    /// `E g1⁽ⁱ⁾ g1⁽ʲ⁾ g1⁽ᵏ⁾`, flattened `d³`
    pub lambda3: Vec<f64>,
    /// `E g1⁽ⁱ⁾(X1) g1⁽ʲ⁾(X2) g̃2⁽ᵏ⁾(X1, X2)`, flattened `d³`
    pub kappa: Vec<f64>,
}

pub fn population_cross_moments(spec: &GraphonSpec, motifs: &[Motif]) -> Result<CrossMoments> {
    let ks: Vec<BlockKernel> = motifs.iter().map(|m| BlockKernel::new(spec, m)).collect::<Result<_>>()?;
    let d = ks.len();
    let kb = ks.first().map_or(0, |k| k.k());
    let pi = ks.first().map_or(vec![], |k| k.pi.clone());
    let mut lambda = vec![vec![0.0; d]; d];
    let mut lambda3 = vec![0.0; d * d * d];
    let mut kappa = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for a in 0..kb {
                lambda[i][j] += pi[a] * ks[i].g1[a] * ks[j].g1[a];
            }
            for l in 0..d {
                let idx = (i * d + j) * d + l;
                for a in 0..kb {
                    lambda3[idx] += pi[a] * ks[i].g1[a] * ks[j].g1[a] * ks[l].g1[a];
                    for c in 0..kb {
                        kappa[idx] += pi[a] * pi[c] * ks[i].g1[a] * ks[j].g1[c] * ks[l].g2_tilde[a * kb + c];
                    }
                }
            }
        }
    }
    Ok(CrossMoments { theta: ks.iter().map(|k| k.theta).collect(), lambda, lambda3, kappa })
}

/// Nested Monte Carlo: independent inner averages for each factor keep the
/// products unbiased given the outer latents.
pub fn nested_mc(spec: &GraphonSpec, motif: &Motif, mc: &McSizes) -> Result<PopulationMoments> {
    spec.validate()?;
    if mc.outer < 2 || mc.inner == 0 {
        return Err(Error::InvalidArgument("need outer >= 2 and inner >= 1".into()));
    }
    let r = motif.r();
    let iso = IsoSet::new(motif);
    let masks = iso.masks();
    let seed = mc.seed ^ domain::POPULATION;
    // (a1, b1, c1, a2, g2) per outer draw
    let draws: Vec<[f64; 5]> = (0..mc.outer)
        .into_par_iter()
        .map(|o| {
            let mut rng = substream(seed, o as u64, 0);
            let x1: f64 = rng.random();
            let x2: f64 = rng.random();
            let mut xs = vec![0.0; r];
            let mut probs = vec![0.0; r * (r - 1) / 2];
            let mut inner = |fixed: &[f64], rng: &mut rand_chacha::ChaCha8Rng| {
                let mut acc = 0.0;
                for _ in 0..mc.inner {
                    xs[..fixed.len()].copy_from_slice(fixed);
                    for x in xs[fixed.len()..].iter_mut() {
                        *x = rng.random();
                    }
                    pair_probs(spec, r, |a, b| spec.w(xs[a], xs[b]), &mut probs);
                    acc += kernel(masks, r, &probs);
                }
                acc / mc.inner as f64
            };
            let a1 = inner(&[x1], &mut rng);
            let b1 = inner(&[x1], &mut rng);
            let c1 = inner(&[x1], &mut rng);
            let a2 = inner(&[x2], &mut rng);
            let g2 = inner(&[x1, x2], &mut rng);
            [a1, b1, c1, a2, g2]
        })
        .collect();
    let m = mc.outer as f64;
    let mean_se = |v: &[f64]| {
        let mu = v.iter().sum::<f64>() / m;
        let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (m - 1.0);
        (mu, (var / m).sqrt())
    };
    let th: Vec<f64> = draws.iter().map(|d| d[0]).collect();
    let (theta, theta_se) = mean_se(&th);
    let t2v: Vec<f64> = draws.iter().map(|d| (d[0] - theta) * (d[1] - theta)).collect();
    let m3v: Vec<f64> = draws.iter().map(|d| (d[0] - theta) * (d[1] - theta) * (d[2] - theta)).collect();
    let m112v: Vec<f64> = draws.iter().map(|d| (d[0] - theta) * (d[3] - theta) * (d[4] - theta)).collect();
    let (t2, t2_se) = mean_se(&t2v);
    let (m3, m3_se) = mean_se(&m3v);
    let (m112, m112_se) = mean_se(&m112v);
    let tau = t2.max(0.0).sqrt();
    let tau_se = if tau > 0.0 { t2_se / (2.0 * tau) } else { t2_se.sqrt() };
    Ok(PopulationMoments {
        theta,
        tau,
        m3,
        m112,
        exact: false,
        errors: MomentErrors { theta: theta_se, tau: tau_se, m3: m3_se, m112: m112_se },
    })
}

/// Exact enumeration for small block models, nested Monte Carlo otherwise.
pub fn population_moments(spec: &GraphonSpec, motif: &Motif, mc: &McSizes) -> Result<PopulationMoments> {
    if let GraphonKind::Sbm { pi, .. } = &spec.kind {
        if !mc.force_mc && pi.len() <= EXACT_MAX_BLOCKS && motif.r() <= EXACT_MAX_R {
            return Ok(BlockKernel::new(spec, motif)?.moments());
        }
    }
    nested_mc(spec, motif, mc)
}

pub fn population_coefficients(
    spec: &GraphonSpec,
    motif: &Motif,
    n: usize,
    mc: &McSizes,
) -> Result<EdgeworthCoefficients<f64>> {
    Ok(population_moments(spec, motif, mc)?.coefficients(n, motif.r()))
}
