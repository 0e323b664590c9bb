//! Hamiltonian segments: the disordered interaction and the swap layers.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use faer::{c64, Mat};

use super::{DisorderRealization, DriveMode, ModelConfig};
use crate::basis::{permutation_network, spin_of, PermutationMode};
use crate::error::{Error, Result};
use crate::linalg::{cis, expm_hermitian, CMat, ZERO};

/// E_int(z) = Σ_{i<j} J_ij z_i z_j + Σ_i h_i z_i, evaluated site by site.
pub fn interaction_energy(r: &DisorderRealization, bits: u64) -> f64 {
    let l = r.sites;
    let mut e = 0.0;
    for i in 0..l {
        let zi = spin_of(bits, i);
        e += r.fields[i] * zi;
        for j in i + 1..l {
            e += r.coupling(i, j) * zi * spin_of(bits, j);
        }
    }
    e
}

/// Diagonal of the Z part of H_int over the whole basis, accumulated term by term.
pub fn interaction_diagonal(r: &DisorderRealization) -> Vec<f64> {
    let l = r.sites;
    let dim = 1usize << l;
    let mut diag = vec![0.0; dim];
    for i in 0..l {
        let h = r.fields[i];
        let stride = 1usize << i;
        for (z, d) in diag.iter_mut().enumerate() {
            *d += if z & stride == 0 { h } else { -h };
        }
        for j in i + 1..l {
            let jij = r.coupling(i, j);
            if jij == 0.0 {
                continue;
            }
            let both = stride | (1usize << j);
            for (z, d) in diag.iter_mut().enumerate() {
                let parity = (z & both).count_ones() & 1;
                *d += if parity == 0 { jij } else { -jij };
            }
        }
    }
    diag
}

/// Dense H_int including the transverse single-spin flips.
pub fn build_h_int(r: &DisorderRealization) -> CMat {
    let diag = interaction_diagonal(r);
    let dim = diag.len();
    let mut h = Mat::from_fn(dim, dim, |a, b| if a == b { c64::new(diag[a], 0.0) } else { ZERO });
    for (i, &ex) in r.transverse.iter().enumerate() {
        if ex == 0.0 {
            continue;
        }
        for z in 0..dim {
            h[(z ^ (1 << i), z)] += c64::new(ex, 0.0);
        }
    }
    h
}

/// e^{−iH_int t₃}, kept diagonal when there is no transverse field.
#[derive(Clone, Debug)]
pub enum InteractionUnitary {
    Diagonal(Vec<c64>),
    Dense(CMat),
}

impl InteractionUnitary {
    /// m ← U_int · m.
    pub fn apply_left(&self, m: &CMat) -> CMat {
        match self {
            InteractionUnitary::Diagonal(d) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)]),
            InteractionUnitary::Dense(u) => u * m,
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            InteractionUnitary::Diagonal(d) => {
                Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { ZERO })
            }
            InteractionUnitary::Dense(u) => u.clone(),
        }
    }
}

/// Builds e^{−iH_int t}.
pub fn interaction_unitary(r: &DisorderRealization, t: f64) -> Result<InteractionUnitary> {
    if r.transverse.iter().all(|&x| x == 0.0) {
        let d = interaction_diagonal(r).into_iter().map(|e| cis(-e * t)).collect();
        Ok(InteractionUnitary::Diagonal(d))
    } else {
        Ok(InteractionUnitary::Dense(expm_hermitian(build_h_int(r).as_ref(), t)?))
    }
}

/// One Heisenberg bond term `coefficient · (SWAP_ab − 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapBond {
    pub a: usize,
    pub b: usize,
    pub coefficient: f64,
}

/// A layer of disjoint bond terms acting for `duration`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapLayer {
    pub sites: usize,
    pub bonds: Vec<SwapBond>,
    pub duration: f64,
}

impl SwapLayer {
    /// Dense Σ c (SWAP − 1).
    pub fn hamiltonian(&self) -> CMat {
        let dim = 1usize << self.sites;
        let mut h = CMat::zeros(dim, dim);
        for bond in &self.bonds {
            let (ma, mb) = (1usize << bond.a, 1usize << bond.b);
            for z in 0..dim {
                if ((z & ma) == 0) != ((z & mb) == 0) {
                    h[(z ^ ma ^ mb, z)] += c64::new(bond.coefficient, 0.0);
                    h[(z, z)] -= c64::new(bond.coefficient, 0.0);
                }
            }
        }
        h
    }

    /// Per-bond mixing amplitudes (stay, hop) of e^{−iφ(SWAP−1)}.
    fn gate_amplitudes(&self) -> Vec<(usize, usize, c64, c64)> {
        self.bonds
            .iter()
            .map(|b| {
                let phi = b.coefficient * self.duration;
                let g = cis(phi);
                (b.a, b.b, g * phi.cos(), g * c64::new(0.0, -phi.sin()))
            })
            .collect()
    }

    /// m ← e^{−iH t} m using the exact 4 × 4 bond exponentials.
    pub fn apply_left(&self, m: &mut CMat) {
        let dim = m.nrows();
        for (a, b, stay, hop) in self.gate_amplitudes() {
            let (ma, mb) = (1usize << a, 1usize << b);
            let pairs: Vec<(usize, usize)> =
                (0..dim).filter(|z| z & ma != 0 && z & mb == 0).map(|z| (z, z ^ ma ^ mb)).collect();
            for col in 0..m.ncols() {
                let mut c = m.col_mut(col);
                for &(z, w) in &pairs {
                    let (x, y) = (c[z], c[w]);
                    c[z] = stay * x + hop * y;
                    c[w] = hop * x + stay * y;
                }
            }
        }
    }

    /// v ← e^{−iH t} v.
    pub fn apply_to_vector(&self, v: &mut [c64]) {
        for (a, b, stay, hop) in self.gate_amplitudes() {
            let (ma, mb) = (1usize << a, 1usize << b);
            for z in 0..v.len() {
                if z & ma != 0 && z & mb == 0 {
                    let w = z ^ ma ^ mb;
                    let (x, y) = (v[z], v[w]);
                    v[z] = stay * x + hop * y;
                    v[w] = hop * x + stay * y;
                }
            }
        }
    }

    /// Dense e^{−iH t}.
    pub fn unitary(&self) -> CMat {
        let dim = 1usize << self.sites;
        let mut u = CMat::identity(dim, dim);
        self.apply_left(&mut u);
        u
    }
}

fn tuple_weights(n: usize, sites: usize, weight: f64, acc: &mut [BTreeMap<(usize, usize), f64>; 2]) -> Result<()> {
    let net = permutation_network(PermutationMode::Tuple(n), sites)?;
    for (layer, bonds) in net.layers().iter().enumerate() {
        for &bond in bonds {
            *acc[layer].entry(bond).or_insert(0.0) += weight;
        }
    }
    Ok(())
}

fn layers_from_weights(config: &ModelConfig, weights: [BTreeMap<(usize, usize), f64>; 2]) -> (SwapLayer, SwapLayer) {
    let scale = [
        PI / (2.0 * config.t1) * (1.0 - config.eps1()),
        PI / (2.0 * config.t2) * (1.0 - config.eps2()),
    ];
    let durations = [config.t1, config.t2];
    let mut out = weights.into_iter().enumerate().map(|(k, w)| SwapLayer {
        sites: config.sites,
        bonds: w
            .into_iter()
            .filter(|&(_, w)| w != 0.0)
            .map(|((a, b), w)| SwapBond { a, b, coefficient: scale[k] * w })
            .collect(),
        duration: durations[k],
    });
    let first = out.next().expect("two layers");
    let second = out.next().expect("two layers");
    (first, second)
}

/// The two swap layers of an n-tuple or transition drive.
///
/// Imperfections ε₁, ε₂ are taken from `config`.
pub fn swap_layers(config: &ModelConfig) -> Result<(SwapLayer, SwapLayer)> {
    config.validate()?;
    let mut weights = [BTreeMap::new(), BTreeMap::new()];
    match config.drive {
        DriveMode::Tuple { n } => tuple_weights(n, config.sites, 1.0, &mut weights)?,
        DriveMode::Transition { n1, n2, s } => {
            permutation_network(PermutationMode::Transition { n1, n2 }, config.sites)?;
            tuple_weights(n1, config.sites, 1.0 - s, &mut weights)?;
            tuple_weights(n2, config.sites, s, &mut weights)?;
        }
        DriveMode::KickedIsing => {
            return Err(Error::Config("the kicked Ising drive has no swap layers".into()));
        }
    }
    Ok(layers_from_weights(config, weights))
}

/// Dense (H₁, H₂) of the n-tuple drive.
pub fn build_swap_hamiltonians(config: &ModelConfig) -> Result<(CMat, CMat)> {
    if !matches!(config.drive, DriveMode::Tuple { .. }) {
        return Err(Error::Config("expected an n-tuple drive".into()));
    }
    let (a, b) = swap_layers(config)?;
    Ok((a.hamiltonian(), b.hamiltonian()))
}

/// Dense (H₁(s), H₂(s)) of the transition drive.
pub fn build_transition_hamiltonians(config: &ModelConfig) -> Result<(CMat, CMat)> {
    if !matches!(config.drive, DriveMode::Transition { .. }) {
        return Err(Error::Config("expected a transition drive".into()));
    }
    let (a, b) = swap_layers(config)?;
    Ok((a.hamiltonian(), b.hamiltonian()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_error, max_abs_diff};
    use crate::model::sample_disorder;

    #[test]
    fn single_site_h_int() {
        let r = DisorderRealization::from_parts(vec![0.0], vec![2.0], vec![0.5]);
        let h = build_h_int(&r);
        let expect = [[2.0, 0.5], [0.5, -2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(h[(i, j)], c64::new(expect[i][j], 0.0));
            }
        }
    }

    #[test]
    fn diagonal_paths_agree() {
        let c = ModelConfig::tuple(4, 8, 0.0);
        let r = sample_disorder(&c, 11, 0);
        let diag = interaction_diagonal(&r);
        for z in (0..256u64).step_by(3).take(100) {
            assert!((diag[z as usize] - interaction_energy(&r, z)).abs() < 1e-12);
        }
        let h = build_h_int(&r);
        assert!(max_abs_diff(h.as_ref(), crate::linalg::real_diagonal(&diag).as_ref()) == 0.0);
    }

    #[test]
    fn h_int_hermitian() {
        let r = sample_disorder(&ModelConfig::tuple(2, 6, 0.3), 1, 0);
        assert!(hermiticity_error(build_h_int(&r).as_ref()) < 1e-12);
    }

    #[test]
    fn layer_gates_match_full_exponential() {
        for config in [
            ModelConfig::tuple(4, 8, 0.02),
            ModelConfig::tuple(3, 6, 0.1),
            ModelConfig::transition(2, 4, 0.6, 8, 0.05),
        ] {
            let (l1, l2) = swap_layers(&config).unwrap();
            for layer in [l1, l2] {
                let h = layer.hamiltonian();
                assert!(hermiticity_error(h.as_ref()) < 1e-12);
                let full = expm_hermitian(h.as_ref(), layer.duration).unwrap();
                assert!(max_abs_diff(full.as_ref(), layer.unitary().as_ref()) < 1e-10);
            }
        }
    }

    #[test]
    fn perfect_layer_swaps_two_sites() {
        let (l1, _) = swap_layers(&ModelConfig::tuple(2, 2, 0.0)).unwrap();
        let u = l1.unitary();
        assert!((u[(0b10, 0b01)].norm() - 1.0).abs() < 1e-14);
        let u2 = &u * &u;
        assert!(max_abs_diff(u2.as_ref(), CMat::identity(4, 4).as_ref()) < 1e-14);
    }

    #[test]
    fn imperfect_layer_deviation_is_linear() {
        let ideal = swap_layers(&ModelConfig::tuple(2, 4, 0.0)).unwrap().0.unitary();
        let dev = |lambda: f64| {
            let u = swap_layers(&ModelConfig::tuple(2, 4, lambda)).unwrap().0.unitary();
            crate::linalg::operator_norm((&u - &ideal).as_ref()).unwrap()
        };
        let (a, b) = (dev(0.02), dev(0.01));
        assert!((a / b - 2.0).abs() < 0.01, "ratio {}", a / b);
    }

    #[test]
    fn transition_endpoints() {
        let end0 = swap_layers(&ModelConfig::transition(2, 4, 0.0, 8, 0.02)).unwrap();
        let pure2 = swap_layers(&ModelConfig::tuple(2, 8, 0.02)).unwrap();
        assert_eq!(end0, pure2);
        let end1 = swap_layers(&ModelConfig::transition(2, 4, 1.0, 8, 0.02)).unwrap();
        let pure4 = swap_layers(&ModelConfig::tuple(4, 8, 0.02)).unwrap();
        assert_eq!(end1, pure4);
    }
}
