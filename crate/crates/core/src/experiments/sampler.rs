//! Seeded generation of admissible admittivity pairs.

use crate::admittivity::{Admittivity, AffineComplex};
use crate::error::{Error, Result};
use crate::experiments::config::SamplerSpec;
use crate::geometry::{AprioriData, LayeredDomain};
use crate::scalar::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rejections allowed before giving up.
pub const MAX_REJECTIONS: usize = 10_000;

/// Relative margin kept from the ellipticity and conductivity bounds.
pub const MARGIN: f64 = 0.1;

/// A base admittivity and a perturbation direction; the pair at scale `t`
/// is `(first, first + t·direction)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDraw {
    pub first: Admittivity,
    pub direction: Vec<AffineComplex>,
}

impl PairDraw {
    pub fn at(&self, t: f64) -> Admittivity {
        let mut a = self.first.clone();
        for (g, d) in a.gammas.iter_mut().zip(&self.direction) {
            *g = g.add(&d.scale(t));
        }
        a
    }

    /// Direction `second − first` of a fixed pair.
    pub fn from_pair(first: &Admittivity, second: &Admittivity) -> Self {
        Self {
            first: first.clone(),
            direction: second.gammas.iter().zip(&first.gammas).map(|(b, a)| b.sub(a)).collect(),
        }
    }
}

/// A-priori data shrunk by [`MARGIN`] on the bounds and ellipticity constants.
pub fn with_margin(apriori: &AprioriData) -> AprioriData {
    AprioriData {
        gamma_bar: apriori.gamma_bar * (1.0 - MARGIN),
        lambda: apriori.lambda * (1.0 - MARGIN),
        ..apriori.clone()
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

fn symmetric(rng: &mut ChaCha8Rng, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        rng.random_range(-b..b)
    }
}

fn vec3(rng: &mut ChaCha8Rng, b: f64) -> Vec3 {
    Vec3::new(symmetric(rng, b), symmetric(rng, b), symmetric(rng, b))
}

/// Draw number `index` of the stream seeded by `seed`, valid with margin at
/// scales `0` and `t_max` (hence at every scale in between).
pub fn draw_admissible(
    apriori: &AprioriData,
    domain: &LayeredDomain,
    sampler: &SamplerSpec,
    seed: u64,
    index: u64,
    t_max: f64,
) -> Result<PairDraw> {
    if !(t_max >= 0.0) {
        return Err(Error::InvalidInput("perturbation scale must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let anisotropy = crate::admittivity::AdmittivitySpec { gammas: vec![], anisotropy: sampler.anisotropy.clone() }
        .build::<f64>()
        .anisotropy;
    let strict = with_margin(apriori);
    let layers = domain.n_layers() + 1;
    for _ in 0..MAX_REJECTIONS {
        let gammas: Vec<AffineComplex> = (0..layers)
            .map(|_| AffineComplex {
                s_r: uniform(&mut rng, sampler.s_r),
                s_i: uniform(&mut rng, sampler.s_i),
                g_r: vec3(&mut rng, sampler.gradient),
                g_i: vec3(&mut rng, sampler.gradient),
            })
            .collect();
        let direction: Vec<AffineComplex> = (0..layers)
            .map(|_| AffineComplex {
                s_r: symmetric(&mut rng, sampler.perturbation),
                s_i: symmetric(&mut rng, sampler.perturbation),
                g_r: vec3(&mut rng, sampler.perturbation),
                g_i: vec3(&mut rng, sampler.perturbation),
            })
            .collect();
        let draw = PairDraw { first: Admittivity::new(gammas, anisotropy), direction };
        let ok = draw.first.validate_apriori(&strict, domain, &[]).passed()
            && draw.at(t_max).validate_apriori(&strict, domain, &[]).passed();
        if ok {
            return Ok(draw);
        }
    }
    Err(Error::SamplingExhausted(MAX_REJECTIONS))
}

/// `(σ⁽¹⁾, σ⁽²⁾)` with `σ⁽²⁾ = σ⁽¹⁾ + t·δ`, both admissible with margin.
pub fn sample_admissible_pair(
    apriori: &AprioriData,
    domain: &LayeredDomain,
    sampler: &SamplerSpec,
    seed: u64,
    index: u64,
    t: f64,
) -> Result<(Admittivity, Admittivity)> {
    let d = draw_admissible(apriori, domain, sampler, seed, index, t)?;
    let second = d.at(t);
    Ok((d.first, second))
}
