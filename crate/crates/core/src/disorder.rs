//! Gaussian disorder: creation, Ornstein-Uhlenbeck coupling and subset resampling.
//!
//! Every vector carries the [`SeedRecord`] it was drawn from. Randomness comes
//! from ChaCha8 keyed by `seed` with the 64-bit stream id selecting an
//! independent substream, so `g`, `g'` and `g''` never share a stream.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the Gaussian generator, echoed into every output artifact.
pub const GAUSSIAN_METHOD: &str = "ziggurat (rand_distr::StandardNormal over ChaCha8)";

/// Times at or beyond this are treated as `t = inf` (e^-50 < 2e-22).
pub const T_INFINITY: f64 = 50.0;

/// Reproducible address of a random stream: a ChaCha key plus a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub stream: u64,
}

impl SeedRecord {
    pub fn new(seed: u64) -> Self {
        SeedRecord { seed, stream: 0 }
    }

    /// Deterministic child stream. Children of distinct tags (or of distinct
    /// parents) land on distinct streams with overwhelming probability.
    pub fn child(&self, tag: u64) -> SeedRecord {
        SeedRecord {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Flat array of couplings for one model instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderVector {
    values: Vec<f64>,
    seed: Option<SeedRecord>,
}

impl DisorderVector {
    /// Wraps caller-supplied couplings (crafted tests, replays). Entries must be finite.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSize("disorder vector must be nonempty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("coupling {i} is not finite")));
        }
        Ok(DisorderVector { values, seed: None })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_values(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<SeedRecord> {
        self.seed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DisorderJson {
            values: &self.values,
            seed: self.seed,
            gaussian: GAUSSIAN_METHOD,
        })
        .expect("disorder vector serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Owned {
            values: Vec<f64>,
            seed: Option<SeedRecord>,
        }
        let o: Owned = serde_json::from_str(s)
            .map_err(|e| Error::invalid("disorder", e.to_string()))?;
        let mut v = Self::from_values(o.values)?;
        v.seed = o.seed;
        Ok(v)
    }

    /// Little-endian binary layout:
    /// `b"SGDV"`, u8 has_seed, seed u64, stream u64, n u64, n x f64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(29 + 8 * self.values.len());
        out.extend_from_slice(BINARY_MAGIC);
        let (flag, seed) = match self.seed {
            Some(s) => (1u8, s),
            None => (0u8, SeedRecord::new(0)),
        };
        out.push(flag);
        out.extend_from_slice(&seed.seed.to_le_bytes());
        out.extend_from_slice(&seed.stream.to_le_bytes());
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |why: &str| Error::invalid("disorder", format!("binary decode: {why}"));
        if bytes.len() < 29 || &bytes[..4] != BINARY_MAGIC {
            return Err(bad("missing header"));
        }
        let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let n = word(21) as usize;
        if bytes.len() != 29 + 8 * n {
            return Err(bad("length does not match header"));
        }
        let values = bytes[29..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut v = Self::from_values(values)?;
        if bytes[4] == 1 {
            v.seed = Some(SeedRecord {
                seed: word(5),
                stream: word(13),
            });
        }
        Ok(v)
    }
}

const BINARY_MAGIC: &[u8; 4] = b"SGDV";

#[derive(Serialize)]
struct DisorderJson<'a> {
    values: &'a [f64],
    seed: Option<SeedRecord>,
    gaussian: &'static str,
}

/// `n` i.i.d. standard Gaussians drawn from `seed`'s stream.
pub fn fresh_disorder(n: usize, seed: SeedRecord) -> Result<DisorderVector> {
    if n == 0 {
        return Err(Error::InvalidSize("coupling count must be at least 1".into()));
    }
    let mut rng = seed.rng();
    let values = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Ok(DisorderVector {
        values,
        seed: Some(seed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// `g` together with two independent fresh copies, for the two-sided flow
/// `g^{+t}` and `g^{-t}`.
#[derive(Debug, Clone)]
pub struct CoupledDisorder {
    pub base: DisorderVector,
    pub fresh_plus: DisorderVector,
    pub fresh_minus: DisorderVector,
    pub t: f64,
}

impl CoupledDisorder {
    /// Draws `g`, `g'`, `g''` from three distinct children of `seed`.
    pub fn draw(n: usize, t: f64, seed: SeedRecord) -> Result<Self> {
        check_time(t)?;
        Ok(CoupledDisorder {
            base: fresh_disorder(n, seed.child(0))?,
            fresh_plus: fresh_disorder(n, seed.child(1))?,
            fresh_minus: fresh_disorder(n, seed.child(2))?,
            t,
        })
    }

    pub fn with_time(&self, t: f64) -> Self {
        CoupledDisorder { t, ..self.clone() }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}

/// Mixing weights `(e^{-t}, sqrt(1 - e^{-2t}))`, with `t >= 50` snapped to `(0, 1)`.
pub fn ou_weights(t: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    if t >= T_INFINITY {
        return Ok((0.0, 1.0));
    }
    let a = (-t).exp();
    Ok((a, (-(-2.0 * t).exp_m1()).sqrt()))
}

/// `a*x + b*y` componentwise; the building block of every Gaussian interpolation.
pub fn mix(x: &DisorderVector, y: &DisorderVector, a: f64, b: f64) -> Result<DisorderVector> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: y.len(),
        });
    }
    let values = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(u, v)| a * u + b * v)
        .collect();
    Ok(DisorderVector { values, seed: None })
}

/// `e^{-t} g + sqrt(1 - e^{-2t}) g'` (or `g''` for [`Sign::Minus`]).
pub fn ou_perturb(coupled: &CoupledDisorder, sign: Sign) -> Result<DisorderVector> {
    let (a, b) = ou_weights(coupled.t)?;
    let fresh = match sign {
        Sign::Plus => &coupled.fresh_plus,
        Sign::Minus => &coupled.fresh_minus,
    };
    if a == 1.0 {
        return Ok(coupled.base.clone());
    }
    if a == 0.0 {
        return Ok(fresh.clone());
    }
    mix(&coupled.base, fresh, a, b)
}

/// A set of coupling indices to be resampled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResampleMask {
    indices: Vec<usize>,
    n: usize,
}

impl ResampleMask {
    pub fn new(n: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("mask", "indices must be distinct"));
        }
        if let Some(&i) = indices.last() {
            if i >= n {
                return Err(Error::invalid("mask", format!("index {i} out of range 0..{n}")));
            }
        }
        Ok(ResampleMask { indices, n })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Uniformly random size-`k` subset of `0..n`.
pub fn random_mask(n: usize, k: usize, seed: SeedRecord) -> Result<ResampleMask> {
    let mut rng = seed.rng();
    random_mask_with(n, k, &mut rng)
}

pub(crate) fn random_mask_with<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<ResampleMask> {
    if k > n {
        return Err(Error::invalid("k", format!("subset size {k} exceeds n = {n}")));
    }
    let indices = index::sample(rng, n, k).into_vec();
    ResampleMask::new(n, indices)
}

/// `g` with the components in `mask` replaced by those of `g_fresh`.
pub fn resample_subset(
    g: &DisorderVector,
    g_fresh: &DisorderVector,
    mask: &ResampleMask,
) -> Result<DisorderVector> {
    if g.len() != g_fresh.len() {
        return Err(Error::Shape {
            expected: g.len(),
            got: g_fresh.len(),
        });
    }
    if mask.n != g.len() {
        return Err(Error::Shape {
            expected: g.len(),
            got: mask.n,
        });
    }
    let mut values = g.values.clone();
    for &i in &mask.indices {
        values[i] = g_fresh.values[i];
    }
    Ok(DisorderVector { values, seed: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DisorderVector {
        DisorderVector::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn fresh_is_deterministic() {
        let s = SeedRecord::new(7);
        assert_eq!(fresh_disorder(4, s).unwrap(), fresh_disorder(4, s).unwrap());
        assert_ne!(
            fresh_disorder(4, s).unwrap().values(),
            fresh_disorder(4, s.child(1)).unwrap().values()
        );
    }

    #[test]
    fn zero_size_rejected() {
        assert!(matches!(
            fresh_disorder(0, SeedRecord::new(1)),
            Err(Error::InvalidSize(_))
        ));
    }

    #[test]
    fn ou_endpoints() {
        let c = CoupledDisorder::draw(16, 0.0, SeedRecord::new(3)).unwrap();
        assert_eq!(ou_perturb(&c, Sign::Plus).unwrap().values(), c.base.values());
        let far = c.with_time(60.0);
        assert_eq!(ou_perturb(&far, Sign::Plus).unwrap().values(), c.fresh_plus.values());
        assert_eq!(ou_perturb(&far, Sign::Minus).unwrap().values(), c.fresh_minus.values());
        assert!(matches!(
            ou_perturb(&c.with_time(-0.1), Sign::Plus),
            Err(Error::InvalidTime(_))
        ));
    }

    #[test]
    fn resample_cases() {
        let g = dv(&[1.0, 2.0, 3.0, 4.0]);
        let h = dv(&[-1.0, -2.0, -3.0, -4.0]);
        let empty = ResampleMask::new(4, vec![]).unwrap();
        assert_eq!(resample_subset(&g, &h, &empty).unwrap().values(), g.values());
        let full = ResampleMask::new(4, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(resample_subset(&g, &h, &full).unwrap().values(), h.values());
        let odd = ResampleMask::new(4, vec![3, 1]).unwrap();
        let once = resample_subset(&g, &h, &odd).unwrap();
        assert_eq!(once.values(), &[1.0, -2.0, 3.0, -4.0]);
        assert_eq!(resample_subset(&once, &h, &odd).unwrap(), once);
        assert!(matches!(
            resample_subset(&g, &dv(&[0.0]), &empty),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn mask_validation() {
        assert!(ResampleMask::new(3, vec![0, 0]).is_err());
        assert!(ResampleMask::new(3, vec![3]).is_err());
        assert!(random_mask(3, 4, SeedRecord::new(0)).is_err());
        assert_eq!(random_mask(5, 0, SeedRecord::new(0)).unwrap().k(), 0);
        assert_eq!(random_mask(5, 5, SeedRecord::new(0)).unwrap().indices(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn serialization_round_trip() {
        let g = fresh_disorder(5, SeedRecord { seed: 9, stream: 4 }).unwrap();
        assert_eq!(DisorderVector::from_json(&g.to_json()).unwrap(), g);
        assert_eq!(DisorderVector::from_bytes(&g.to_bytes()).unwrap(), g);
        assert!(g.to_json().contains("ziggurat"));
        assert!(DisorderVector::from_bytes(&g.to_bytes()[..30]).is_err());
    }
}
