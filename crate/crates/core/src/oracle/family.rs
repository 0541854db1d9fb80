use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{weierstrass_from, WeierstrassPencil};
use crate::analyze::DHVariant;
use crate::numkernel::{block_diag, Mat};

/// Weierstrass building block with known spectral data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    /// Real Jordan block of the given size.
    Real { lambda: f64, size: usize },
    /// Real Jordan block for the pair `re +- i im`, `im > 0`.
    Pair { re: f64, im: f64, size: usize },
    /// Nilpotent block of the given size.
    Nilpotent(usize),
}

impl Component {
    fn matrix(&self) -> Mat {
        match *self {
            Component::Real { lambda, size } => {
                Mat::from_fn(size, size, |i, j| if i == j { lambda } else if j == i + 1 { 1.0 } else { 0.0 })
            }
            Component::Pair { re, im, size } => Mat::from_fn(2 * size, 2 * size, |i, j| {
                let (bi, bj) = (i / 2, j / 2);
                if bi == bj {
                    match (i % 2, j % 2) {
                        (0, 0) | (1, 1) => re,
                        (0, 1) => im,
                        _ => -im,
                    }
                } else if bj == bi + 1 && i % 2 == j % 2 {
                    1.0
                } else {
                    0.0
                }
            }),
            Component::Nilpotent(_) => Mat::zeros(0, 0),
        }
    }
}

/// A pencil of the stability family with its hand-derived verdicts.
#[derive(Debug, Clone)]
pub struct FamilyCase {
    pub label: String,
    pub components: Vec<Component>,
    pub pencil: WeierstrassPencil,
}

impl FamilyCase {
    /// Truth from the block list alone: closed left half plane, semisimple
    /// nonzero imaginary eigenvalues, index at most two; zero eigenvalue
    /// blocks of size at most two with a general `Q`, semisimple otherwise;
    /// the lossless variant additionally needs a purely imaginary spectrum.
    pub fn expected(&self, variant: DHVariant) -> bool {
        let mut ok = true;
        let mut zero_block = 0;
        let mut zero_count = 0;
        for c in &self.components {
            match *c {
                Component::Nilpotent(k) => ok &= k <= 2,
                Component::Real { lambda, size } => {
                    if lambda > 0.0 {
                        ok = false;
                    } else if lambda < 0.0 {
                        ok &= variant != DHVariant::Lossless;
                    } else {
                        zero_block = zero_block.max(size);
                        zero_count += 1;
                    }
                }
                Component::Pair { re, size, .. } => {
                    if re > 0.0 {
                        ok = false;
                    } else if re < 0.0 {
                        ok &= variant != DHVariant::Lossless;
                    } else {
                        ok &= size == 1;
                    }
                }
            }
        }
        if zero_count > 0 {
            ok &= match variant {
                DHVariant::WithQ => zero_block <= 2,
                _ => zero_block == 1,
            };
        }
        ok
    }
}

fn case(rng: &mut ChaCha8Rng, label: &str, components: &[Component]) -> FamilyCase {
    let finite: Vec<Mat> = components.iter().map(|c| c.matrix()).collect();
    let refs: Vec<&Mat> = finite.iter().collect();
    let f = block_diag(&refs);
    let nil: Vec<usize> = components
        .iter()
        .filter_map(|c| match c {
            Component::Nilpotent(k) => Some(*k),
            _ => None,
        })
        .collect();
    FamilyCase { label: label.to_string(), components: components.to_vec(), pencil: weierstrass_from(rng, &f, &nil) }
}

/// Fixed family of stable, marginal, high index and unstable pencils.
pub fn stability_family(seed: u64) -> Vec<FamilyCase> {
    use Component::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<(&str, Vec<Component>)> = vec![
        ("stable scalar", vec![Real { lambda: -1.0, size: 1 }]),
        ("stable jordan 2", vec![Real { lambda: -1.0, size: 2 }]),
        ("stable jordan 3", vec![Real { lambda: -2.0, size: 3 }]),
        ("stable complex pair", vec![Pair { re: -1.0, im: 2.0, size: 1 }]),
        ("stable complex jordan", vec![Pair { re: -0.5, im: 1.0, size: 2 }]),
        ("imaginary pair", vec![Pair { re: 0.0, im: 1.0, size: 1 }]),
        ("repeated imaginary pair", vec![Pair { re: 0.0, im: 1.5, size: 1 }, Pair { re: 0.0, im: 1.5, size: 1 }]),
        ("imaginary jordan", vec![Pair { re: 0.0, im: 2.0, size: 2 }]),
        ("zero simple", vec![Real { lambda: 0.0, size: 1 }]),
        ("zero jordan 2", vec![Real { lambda: 0.0, size: 2 }]),
        ("zero jordan 3", vec![Real { lambda: 0.0, size: 3 }]),
        ("nilpotent 1", vec![Nilpotent(1), Real { lambda: -1.0, size: 1 }]),
        ("nilpotent 2", vec![Nilpotent(2), Pair { re: 0.0, im: 1.0, size: 1 }]),
        ("nilpotent 3", vec![Nilpotent(3), Real { lambda: -1.0, size: 1 }]),
        ("right half plane", vec![Real { lambda: 1.0, size: 1 }]),
        ("right half plane pair", vec![Pair { re: 0.5, im: 1.0, size: 1 }, Real { lambda: -1.0, size: 1 }]),
        (
            "mixed stable",
            vec![Real { lambda: -1.0, size: 1 }, Pair { re: 0.0, im: 1.0, size: 1 }, Nilpotent(2)],
        ),
        (
            "lossless mix",
            vec![Pair { re: 0.0, im: 1.0, size: 1 }, Real { lambda: 0.0, size: 1 }, Nilpotent(1)],
        ),
        ("zero jordan with index 2", vec![Real { lambda: 0.0, size: 2 }, Nilpotent(2)]),
        (
            "stable with zero and constraints",
            vec![Real { lambda: -3.0, size: 2 }, Real { lambda: 0.0, size: 1 }, Nilpotent(1), Nilpotent(2)],
        ),
        ("purely algebraic", vec![Nilpotent(1), Nilpotent(1)]),
        ("imaginary and unstable", vec![Pair { re: 0.0, im: 0.5, size: 1 }, Real { lambda: 0.2, size: 1 }]),
        ("nilpotent 3 with imaginary", vec![Pair { re: 0.0, im: 1.0, size: 1 }, Nilpotent(3)]),
        ("two imaginary frequencies", vec![Pair { re: 0.0, im: 1.0, size: 1 }, Pair { re: 0.0, im: 3.0, size: 1 }]),
    ];
    specs.into_iter().map(|(l, c)| case(&mut rng, l, &c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_table_spot_checks() {
        let fam = stability_family(1);
        assert!(fam.len() >= 20);
        let get = |l: &str| fam.iter().find(|c| c.label == l).unwrap();
        assert!(get("zero jordan 2").expected(DHVariant::WithQ));
        assert!(!get("zero jordan 2").expected(DHVariant::QIdentity));
        assert!(get("lossless mix").expected(DHVariant::Lossless));
        assert!(!get("stable scalar").expected(DHVariant::Lossless));
        assert!(!get("nilpotent 3").expected(DHVariant::WithQ));
        let pair = Component::Pair { re: 0.0, im: 2.0, size: 2 }.matrix();
        assert_eq!(pair[(0, 2)], 1.0);
        assert_eq!(pair[(1, 0)], -2.0);
    }
}
