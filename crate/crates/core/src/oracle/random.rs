use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analyze::Pencil;
use crate::convert::dh_to_monotone;
use crate::models::four_block_representations;
use crate::numkernel::{block_diag, Mat, TolerancePolicy};
use crate::structures::{DHSystem, DiracPair, ExtendedHDAE, LagrangePair, MonotoneAnnihilatorSystem, MonotonePair};

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let qr = gaussian(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `(X, X^{-1})` with singular values of `X` in `[1/2, 2]`.
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> (Mat, Mat) {
    let q1 = random_orthogonal(rng, n);
    let q2 = random_orthogonal(rng, n);
    let d: Vec<f64> = (0..n).map(|_| 2f64.powf(rng.random_range(-1.0..1.0))).collect();
    let dm = Mat::from_diagonal(&DVector::from_vec(d.clone()));
    let di = Mat::from_diagonal(&DVector::from_vec(d.iter().map(|v| 1.0 / v).collect()));
    (&q1 * dm * &q2, q2.transpose() * di * q1.transpose())
}

/// Random split of `n` into `parts` nonnegative sizes.
fn composition(rng: &mut ChaCha8Rng, n: usize, parts: usize) -> Vec<usize> {
    let mut out = vec![0; parts];
    for _ in 0..n {
        out[rng.random_range(0..parts)] += 1;
    }
    out
}

fn id(n: usize) -> Mat {
    Mat::identity(n, n)
}

fn diag_signs(sizes: &[(usize, f64)]) -> Mat {
    let v: Vec<f64> = sizes.iter().flat_map(|&(k, s)| std::iter::repeat_n(s, k)).collect();
    Mat::from_diagonal(&DVector::from_vec(v))
}

fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let g = gaussian(rng, n, n);
    (&g - g.transpose()) * 0.5
}

/// `G G^T` with `G` of random rank.
fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Mat {
    let g = gaussian(rng, n, rank);
    &g * g.transpose()
}

/// Transformations preserving the Dirac and Lagrange structures:
/// `K -> U^T K V`, `L -> U^T L V^{-T}`, `P -> V^{-1} P W`, `S -> V^T S W`.
#[derive(Debug, Clone)]
pub struct Equivalence {
    pub ut: Mat,
    pub v: Mat,
    pub v_inv: Mat,
    pub w: Mat,
}

impl Equivalence {
    pub fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let (ut, _) = random_invertible(rng, n);
        let (v, v_inv) = random_invertible(rng, n);
        let (w, _) = random_invertible(rng, n);
        Equivalence { ut, v, v_inv, w }
    }

    pub fn lagrange(&self, l: &LagrangePair) -> LagrangePair {
        LagrangePair::new(&self.v_inv * &l.p * &self.w, self.v.transpose() * &l.s * &self.w)
    }

    pub fn dirac(&self, d: &DiracPair) -> DiracPair {
        DiracPair::new(&self.ut * &d.k * &self.v, &self.ut * &d.l * self.v_inv.transpose())
    }

    pub fn extended(&self, s: &ExtendedHDAE) -> ExtendedHDAE {
        let d = self.dirac(&s.dirac());
        let l = self.lagrange(&s.lagrange());
        ExtendedHDAE::new(d.k, d.l, l.p, l.s)
    }

    /// `[C D] -> X [C V, D V^{-T}]`, `P -> V^{-1} P W`, `S -> V^T S W`.
    pub fn monotone_system(&self, m: &MonotoneAnnihilatorSystem) -> MonotoneAnnihilatorSystem {
        let l = self.lagrange(&LagrangePair::new(m.p.clone(), m.s.clone()));
        MonotoneAnnihilatorSystem::new(&self.ut * &m.c * &self.v, &self.ut * &m.d * self.v_inv.transpose(), l.p, l.s)
    }
}

pub fn structured_equivalence(rng: &mut ChaCha8Rng, n: usize) -> Equivalence {
    Equivalence::random(rng, n)
}

/// Square maximal Lagrange pair from `diag(I, I, I, 0)`, `diag(I, -I, 0, I)`.
pub fn random_lagrange(rng: &mut ChaCha8Rng, n: usize) -> LagrangePair {
    let s = composition(rng, n, 4);
    random_lagrange_sized(rng, [s[0], s[1], s[2], s[3]])
}

/// Lagrange pair with canonical block sizes `[m1, m2, m3, m4]`.
pub fn random_lagrange_sized(rng: &mut ChaCha8Rng, s: [usize; 4]) -> LagrangePair {
    let n = s.iter().sum();
    let p = diag_signs(&[(s[0], 1.0), (s[1], 1.0), (s[2], 1.0), (s[3], 0.0)]);
    let q = diag_signs(&[(s[0], 1.0), (s[1], -1.0), (s[2], 0.0), (s[3], 1.0)]);
    Equivalence::random(rng, n).lagrange(&LagrangePair::new(p, q))
}

/// Square maximal Dirac pair from the skew canonical form.
pub fn random_dirac(rng: &mut ChaCha8Rng, n: usize) -> DiracPair {
    let mut s = composition(rng, n, 4);
    let l1 = s[0] / 2;
    s[2] += s[0] % 2;
    let (l3, l4) = (s[2] + s[1], s[3]);
    let k = block_diag(&[&id(2 * l1), &id(l3), &Mat::zeros(l4, l4)]);
    let mut j = Mat::zeros(2 * l1, 2 * l1);
    for i in 0..l1 {
        j[(i, l1 + i)] = 1.0;
        j[(l1 + i, i)] = -1.0;
    }
    let l = block_diag(&[&j, &Mat::zeros(l3, l3), &id(l4)]);
    Equivalence::random(rng, n).dirac(&DiracPair::new(k, l))
}

/// Maximal monotone pair with image `[N^T; M^T] = [diag(I, 0); diag(B, I)]`,
/// `B + B^T >= 0`, moved by `f -> V f`, `e -> V^{-T} e`.
pub fn random_monotone(rng: &mut ChaCha8Rng, n: usize) -> MonotonePair {
    let a = rng.random_range(0..=n);
    let c = n - a;
    let rank = rng.random_range(0..=a);
    let b = random_skew(rng, a) + random_psd(rng, a, rank);
    let nt = block_diag(&[&id(a), &Mat::zeros(c, c)]);
    let mt = block_diag(&[&b, &id(c)]);
    let (v, v_inv) = random_invertible(rng, n);
    let (w, _) = random_invertible(rng, n);
    let nt = &v * nt * &w;
    let mt = v_inv.transpose() * mt * &w;
    MonotonePair::new(mt.transpose(), nt.transpose())
}

/// `E = Q^{-T} G` with `G >= 0` of random rank, random skew `J`, `R >= 0`.
pub fn random_dh(rng: &mut ChaCha8Rng, n: usize) -> DHSystem {
    let rg = rng.random_range(0..=n);
    let rr = rng.random_range(0..=n);
    let g = random_psd(rng, n, rg);
    let (q, q_inv) = random_invertible(rng, n);
    let e = q_inv.transpose() * g;
    DHSystem::new(e, random_skew(rng, n), random_psd(rng, n, rr), q)
}

/// Monotone annihilator system of a random regular dH system, moved by an
/// equivalence.
pub fn random_monotone_system(rng: &mut ChaCha8Rng, n: usize) -> MonotoneAnnihilatorSystem {
    let tol = TolerancePolicy::default();
    let mut dh = random_dh(rng, n);
    for _ in 0..50 {
        let p = Pencil::try_from(&dh).expect("square");
        if super::shift_regular(&p, 11, &tol).unwrap_or(false) {
            break;
        }
        dh = random_dh(rng, n);
    }
    let m = dh_to_monotone(&dh, &TolerancePolicy::default()).expect("random dH system is valid");
    Equivalence::random(rng, n).monotone_system(&m)
}

/// Regular extended system: direct sum of the canonical block
/// representations moved by a random structured equivalence.
pub fn random_extended_regular(rng: &mut ChaCha8Rng, n: usize) -> ExtendedHDAE {
    let s = composition(rng, n, 4);
    let n1 = s[0] / 2;
    let n2 = s[1] / 2;
    let n3 = s[2] + s[0] % 2 + s[1] % 2;
    let n4 = s[3];
    let x = gaussian(rng, n3, n3);
    let e33 = &x * x.transpose() + id(n3) * 0.5;
    let a33 = random_skew(rng, n3) * 2.0;
    let reps = four_block_representations(n1, n2, &e33, &a33, n4).expect("canonical blocks are valid");
    let pick = |label: &str| reps.iter().find(|r| r.label == label).expect("block present").system.clone();
    let b2 = if rng.random_bool(0.5) { pick("2a") } else { pick("2b") };
    let parts = [pick("1"), b2, pick("3"), pick("4")];
    let cat = |f: fn(&ExtendedHDAE) -> &Mat| {
        let ms: Vec<&Mat> = parts.iter().map(f).collect();
        block_diag(&ms)
    };
    let base = ExtendedHDAE::new(cat(|s| &s.k), cat(|s| &s.l), cat(|s| &s.p), cat(|s| &s.s));
    Equivalence::random(rng, n).extended(&base)
}

/// Regular pencil `X (lambda diag(I, N) - diag(F, I)) Y` with nilpotent
/// Jordan blocks of the listed sizes.
#[derive(Debug, Clone)]
pub struct WeierstrassPencil {
    pub pencil: Pencil,
    pub finite_dim: usize,
    pub nilpotent_blocks: Vec<usize>,
}

impl WeierstrassPencil {
    pub fn index(&self) -> usize {
        self.nilpotent_blocks.iter().copied().max().unwrap_or(0)
    }
}

pub fn weierstrass_from(rng: &mut ChaCha8Rng, f: &Mat, nilpotent_blocks: &[usize]) -> WeierstrassPencil {
    let nf = f.nrows();
    let ni: usize = nilpotent_blocks.iter().sum();
    let n = nf + ni;
    let mut nil = Mat::zeros(ni, ni);
    let mut off = 0;
    for &k in nilpotent_blocks {
        for i in 0..k.saturating_sub(1) {
            nil[(off + i, off + i + 1)] = 1.0;
        }
        off += k;
    }
    let e = block_diag(&[&id(nf), &nil]);
    let a = block_diag(&[f, &id(ni)]);
    let (x, _) = random_invertible(rng, n);
    let (y, _) = random_invertible(rng, n);
    WeierstrassPencil {
        pencil: Pencil::new(&x * e * &y, &x * a * &y).expect("square"),
        finite_dim: nf,
        nilpotent_blocks: nilpotent_blocks.to_vec(),
    }
}

/// Random regular pencil of size `n` with nilpotent blocks of size at most
/// `max_block`.
pub fn random_weierstrass(rng: &mut ChaCha8Rng, n: usize, max_block: usize) -> WeierstrassPencil {
    let ni = rng.random_range(0..=n);
    let mut blocks = Vec::new();
    let mut left = ni;
    while left > 0 {
        let k = rng.random_range(1..=max_block.max(1)).min(left);
        blocks.push(k);
        left -= k;
    }
    let f = gaussian(rng, n - ni, n - ni);
    weierstrass_from(rng, &f, &blocks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomKind {
    Lagrange,
    Dirac,
    Monotone,
    MonotoneSystem,
    Dh,
    Extended,
}

#[derive(Debug, Clone)]
pub enum RandomInstance {
    Lagrange(LagrangePair),
    Dirac(DiracPair),
    Monotone(MonotonePair),
    MonotoneSystem(MonotoneAnnihilatorSystem),
    Dh(DHSystem),
    Extended(ExtendedHDAE),
}

impl RandomInstance {
    pub fn validate(&self, tol: &TolerancePolicy) -> crate::Result<crate::structures::ValidationReport> {
        match self {
            RandomInstance::Lagrange(x) => x.validate(tol),
            RandomInstance::Dirac(x) => x.validate(tol),
            RandomInstance::Monotone(x) => x.validate(tol),
            RandomInstance::MonotoneSystem(x) => x.validate(tol),
            RandomInstance::Dh(x) => x.validate(tol),
            RandomInstance::Extended(x) => x.validate(tol),
        }
    }
}

/// Seeded random valid instance of the given kind.
pub fn random_structured(kind: RandomKind, n: usize, seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        RandomKind::Lagrange => RandomInstance::Lagrange(random_lagrange(&mut rng, n)),
        RandomKind::Dirac => RandomInstance::Dirac(random_dirac(&mut rng, n)),
        RandomKind::Monotone => RandomInstance::Monotone(random_monotone(&mut rng, n)),
        RandomKind::MonotoneSystem => RandomInstance::MonotoneSystem(random_monotone_system(&mut rng, n)),
        RandomKind::Dh => RandomInstance::Dh(random_dh(&mut rng, n)),
        RandomKind::Extended => RandomInstance::Extended(random_extended_regular(&mut rng, n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::regularity;

    #[test]
    fn instances_validate() {
        let tol = TolerancePolicy::default();
        for kind in [
            RandomKind::Lagrange,
            RandomKind::Dirac,
            RandomKind::Monotone,
            RandomKind::MonotoneSystem,
            RandomKind::Dh,
            RandomKind::Extended,
        ] {
            for n in [0, 1, 4, 7] {
                for seed in 0..5 {
                    let inst = random_structured(kind, n, seed);
                    assert!(inst.validate(&tol).unwrap().valid, "{kind:?} n={n} seed={seed}");
                }
            }
        }
    }

    #[test]
    fn dirac_residual_tiny() {
        let RandomInstance::Dirac(d) = random_structured(RandomKind::Dirac, 4, 1) else { unreachable!() };
        let g = &d.k * d.l.transpose();
        assert!((&g + g.transpose()).norm() <= 1e-14 * d.k.norm().max(1.0) * d.l.norm().max(1.0));
    }

    #[test]
    fn extended_is_regular() {
        let RandomInstance::Extended(s) = random_structured(RandomKind::Extended, 6, 3) else { unreachable!() };
        let p = Pencil::try_from(&s).unwrap();
        assert!(regularity(&p, &TolerancePolicy::default()).unwrap().regular);
    }
}
