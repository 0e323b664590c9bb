//! Computational basis states, swap networks and orbit classification.
//!
//! Sites are numbered from 0 and site `i` lives in bit `i` of the index.
//! A set bit means spin down (σ^z = −1).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain for which the full basis is enumerated by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 14;

/// Largest chain representable in a 64-bit index.
pub const MAX_SITES: usize = 62;

/// A Z-basis configuration of `len` spins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    bits: u64,
    len: usize,
}

impl BasisState {
    /// Builds a state from its bit pattern.
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&len) {
            return Err(Error::Config(format!("chain length {len} outside 2..={MAX_SITES}")));
        }
        if bits >> len != 0 {
            return Err(Error::Config(format!("bits {bits:#x} exceed {len} sites")));
        }
        Ok(Self { bits, len })
    }

    /// All spins up.
    pub fn all_up(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    /// Builds a state from per-site flags, `true` meaning spin down.
    pub fn from_downs(downs: &[bool]) -> Result<Self> {
        let bits = downs
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &d)| acc | ((d as u64) << i));
        Self::new(bits, downs.len())
    }

    /// Parses arrows (`↑`/`↓`), `u`/`d` or `0`/`1`, site 0 first.
    pub fn parse(text: &str) -> Result<Self> {
        let downs = text
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                '↑' | 'u' | 'U' | '0' => Ok(false),
                '↓' | 'd' | 'D' | '1' => Ok(true),
                other => Err(Error::Config(format!("unrecognised spin symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_downs(&downs)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index into a 2^L state vector.
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn is_down(&self, site: usize) -> bool {
        (self.bits >> site) & 1 == 1
    }

    /// σ^z eigenvalue at `site`.
    pub fn spin(&self, site: usize) -> f64 {
        spin_of(self.bits, site)
    }

    /// Flips every spin.
    pub fn complement(&self) -> Self {
        Self { bits: !self.bits & mask(self.len), len: self.len }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.is_down(i) { "↓" } else { "↑" })?;
        }
        Ok(())
    }
}

/// σ^z eigenvalue of `site` in the basis index `bits`.
#[inline]
pub fn spin_of(bits: u64, site: usize) -> f64 {
    if (bits >> site) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

#[inline]
fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Which unperturbed drive a swap network realises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PermutationMode {
    /// The n-tuple drive.
    Tuple(usize),
    /// The n₁ → n₂ transition, whose permutation skeleton is that of lcm(n₁, n₂).
    Transition { n1: usize, n2: usize },
}

impl PermutationMode {
    /// Period of the underlying site permutation (n or n_L).
    pub fn permutation_period(&self) -> usize {
        match *self {
            PermutationMode::Tuple(n) => n,
            PermutationMode::Transition { n1, n2 } => lcm(n1, n2),
        }
    }

    /// Period of the charges that oscillate (n or n_G).
    pub fn charge_period(&self) -> usize {
        match *self {
            PermutationMode::Tuple(n) => n,
            PermutationMode::Transition { n1, n2 } => gcd(n1, n2),
        }
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Sites spanned by one repeating block of the n-tuple network.
pub fn unit_length(n: usize) -> usize {
    if n % 2 == 0 {
        n
    } else {
        2 * n
    }
}

/// Two layers of disjoint swaps whose composition is one drive period.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapNetwork {
    sites: usize,
    mode: PermutationMode,
    layers: Vec<Vec<(usize, usize)>>,
    forward: Vec<usize>,
}

impl SwapNetwork {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn mode(&self) -> PermutationMode {
        self.mode
    }

    /// Layers in application order; the first comes from H₁, the second from H₂.
    pub fn layers(&self) -> &[Vec<(usize, usize)>] {
        &self.layers
    }

    /// Period of the site permutation.
    pub fn period(&self) -> usize {
        self.mode.permutation_period()
    }

    /// `forward()[p]` is where the spin sitting on `p` ends up after one period.
    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn backward(&self) -> Vec<usize> {
        let mut inv = vec![0; self.sites];
        for (p, &q) in self.forward.iter().enumerate() {
            inv[q] = p;
        }
        inv
    }

    /// Applies one period of swaps to a basis index.
    pub fn apply_bits(&self, bits: u64) -> u64 {
        let mut out = 0u64;
        for (p, &q) in self.forward.iter().enumerate() {
            out |= ((bits >> p) & 1) << q;
        }
        out
    }

    /// Applies one period of swaps to a state.
    pub fn apply(&self, state: BasisState) -> BasisState {
        BasisState { bits: self.apply_bits(state.bits), len: state.len }
    }

    /// Site cycles of the permutation, each listed in conjugation order.
    ///
    /// Cycle `c` starts at its smallest site `s₀` and continues with
    /// `s_{j+1} = backward(s_j)`, so that U†σ^z_{s_j}U = σ^z_{s_{j+1}} at λ=0.
    pub fn site_cycles(&self) -> Vec<Vec<usize>> {
        let back = self.backward();
        let mut seen = vec![false; self.sites];
        let mut cycles = Vec::new();
        for start in 0..self.sites {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut s = back[start];
            while s != start {
                seen[s] = true;
                cycle.push(s);
                s = back[s];
            }
            cycles.push(cycle);
        }
        cycles
    }
}

/// Layers of the n-tuple swap network on `sites` sites.
fn tuple_layers(n: usize, sites: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    if n == 0 {
        return Err(Error::Config("permutation period must be at least 1".into()));
    }
    let unit = unit_length(n);
    if sites % unit != 0 || sites < 2 {
        let need = if n % 2 == 0 { "n" } else { "2n" };
        return Err(Error::Config(format!(
            "chain length {sites} is not a multiple of {need} = {unit} for n = {n}"
        )));
    }
    let odd = n % 2 == 1;
    let first = (0..sites / 2)
        .map(|k| (2 * k, 2 * k + 1))
        .filter(|&(a, _)| !(odd && (a + 1) % unit == n))
        .collect();
    let second = (0..sites / 2)
        .map(|k| (2 * k + 1, 2 * k + 2))
        .filter(|&(_, b)| b < sites && b % unit != 0)
        .collect();
    Ok(vec![first, second])
}

fn compose(sites: usize, layers: &[Vec<(usize, usize)>]) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..sites).collect();
    for layer in layers {
        let mut swap: Vec<usize> = (0..sites).collect();
        for &(a, b) in layer {
            swap[a] = b;
            swap[b] = a;
        }
        for p in pos.iter_mut() {
            *p = swap[*p];
        }
    }
    pos
}

/// Builds the unperturbed swap network for a drive on `sites` sites.
pub fn permutation_network(mode: PermutationMode, sites: usize) -> Result<SwapNetwork> {
    if sites > MAX_SITES {
        return Err(Error::Size(format!("{sites} sites exceed {MAX_SITES}")));
    }
    let n = match mode {
        PermutationMode::Tuple(n) => n,
        PermutationMode::Transition { n1, n2 } => {
            if n1 == 0 || n2 == 0 {
                return Err(Error::Config("transition periods must be positive".into()));
            }
            lcm(n1, n2)
        }
    };
    let layers = tuple_layers(n, sites)?;
    let forward = compose(sites, &layers);
    Ok(SwapNetwork { sites, mode, layers, forward })
}

/// Smallest k ≥ 1 with networkᵏ(state) = state.
pub fn state_period(state: BasisState, network: &SwapNetwork) -> usize {
    let mut cur = network.apply_bits(state.bits);
    let mut k = 1;
    while cur != state.bits {
        cur = network.apply_bits(cur);
        k += 1;
    }
    k
}

/// Smallest cyclic shift period of `pattern` (length divides into it).
fn rotation_period<T: PartialEq>(pattern: &[T]) -> usize {
    let len = pattern.len();
    (1..=len)
        .filter(|k| len % k == 0)
        .find(|&k| (0..len).all(|i| pattern[i] == pattern[(i + k) % len]))
        .unwrap_or(len)
}

/// A cycle of basis states under the unperturbed drive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbit {
    /// `states[m+1]` is the image of `states[m]` after one period.
    pub states: Vec<BasisState>,
    pub period: usize,
    /// Number of permutation units whose local configuration has the full period.
    pub l_alpha: usize,
    pub sector_id: usize,
}

/// Number of units of `state` whose local pattern has period exactly `n`.
///
/// In tuple mode a unit is one site cycle of the network and its pattern is the
/// spin sequence along the cycle. In transition mode the pattern is the
/// n_G-component charge configuration of the unit.
pub fn count_full_period_units(state: BasisState, network: &SwapNetwork, n: usize) -> usize {
    let groups = match network.mode {
        PermutationMode::Tuple(_) => 1,
        PermutationMode::Transition { n1, n2 } => gcd(n1, n2),
    };
    network
        .site_cycles()
        .iter()
        .filter(|cycle| {
            let period = if groups == 1 && matches!(network.mode, PermutationMode::Tuple(_)) {
                let pattern: Vec<bool> = cycle.iter().map(|&s| state.is_down(s)).collect();
                rotation_period(&pattern)
            } else {
                let q: Vec<i64> = (0..groups)
                    .map(|j| cycle.iter().skip(j).step_by(groups).map(|&s| state.spin(s) as i64).sum())
                    .collect();
                rotation_period(&q)
            };
            period == n
        })
        .count()
}

/// Partitions the full basis into orbits, with the default enumeration cap.
pub fn decompose_orbits(network: &SwapNetwork, n: usize) -> Result<Vec<Orbit>> {
    decompose_orbits_capped(network, n, DEFAULT_ENUMERATION_CAP)
}

/// Partitions the full basis into orbits; fails when the chain exceeds `cap` sites.
pub fn decompose_orbits_capped(network: &SwapNetwork, n: usize, cap: usize) -> Result<Vec<Orbit>> {
    let sites = network.sites;
    if sites > cap {
        return Err(Error::Size(format!("orbit enumeration over {sites} sites exceeds cap {cap}")));
    }
    let dim = 1usize << sites;
    let mut seen = vec![false; dim];
    let mut orbits = Vec::new();
    for start in 0..dim {
        if seen[start] {
            continue;
        }
        let mut states = Vec::new();
        let mut cur = start as u64;
        loop {
            seen[cur as usize] = true;
            states.push(BasisState { bits: cur, len: sites });
            cur = network.apply_bits(cur);
            if cur == start as u64 {
                break;
            }
        }
        let l_alpha = count_full_period_units(states[0], network, n);
        orbits.push(Orbit { period: states.len(), states, l_alpha, sector_id: orbits.len() });
    }
    Ok(orbits)
}

/// Orbits generated from an explicit list of seed states (no enumeration cap).
pub fn orbits_from_seeds(network: &SwapNetwork, n: usize, seeds: &[BasisState]) -> Vec<Orbit> {
    let mut seen = std::collections::HashSet::new();
    let mut orbits = Vec::new();
    for &seed in seeds {
        if seen.contains(&seed.bits) {
            continue;
        }
        let mut states = Vec::new();
        let mut cur = seed;
        loop {
            seen.insert(cur.bits);
            states.push(cur);
            cur = network.apply(cur);
            if cur == seed {
                break;
            }
        }
        let l_alpha = count_full_period_units(states[0], network, n);
        orbits.push(Orbit { period: states.len(), states, l_alpha, sector_id: orbits.len() });
    }
    orbits
}

/// C(k): number of single-unit configurations with minimal period exactly k, for every k | n.
pub fn count_min_period_states(n: usize) -> BTreeMap<usize, u64> {
    assert!((1..64).contains(&n), "unit period must lie in 1..64");
    let divisors: Vec<usize> = (1..=n).filter(|k| n % k == 0).collect();
    let mut table = BTreeMap::new();
    for &k in &divisors {
        let lower: u64 = divisors
            .iter()
            .filter(|&&d| d < k && k % d == 0)
            .map(|d| table[d])
            .sum();
        table.insert(k, (1u64 << k) - lower);
    }
    table
}

/// All states with exactly one down spin in each block of `unit_len` sites.
pub fn one_down_per_unit(sites: usize, unit_len: usize) -> Result<Vec<BasisState>> {
    if unit_len == 0 || sites % unit_len != 0 {
        return Err(Error::Config(format!("unit length {unit_len} does not divide {sites}")));
    }
    let units = sites / unit_len;
    let total = unit_len.checked_pow(units as u32).ok_or_else(|| Error::Size("too many initial states".into()))?;
    (0..total)
        .map(|mut code| {
            let mut bits = 0u64;
            for u in 0..units {
                bits |= 1u64 << (u * unit_len + code % unit_len);
                code /= unit_len;
            }
            BasisState::new(bits, sites)
        })
        .collect()
}

/// Number of `unit_len`-site blocks on which two states differ.
pub fn unit_hamming_distance(z1: BasisState, z2: BasisState, unit_len: usize) -> usize {
    assert_eq!(z1.len, z2.len, "states must have equal length");
    assert!(unit_len > 0 && z1.len % unit_len == 0, "unit length must divide the chain");
    let diff = z1.bits ^ z2.bits;
    let block = mask(unit_len);
    (0..z1.len / unit_len)
        .filter(|u| (diff >> (u * unit_len)) & block != 0)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(n: usize, l: usize) -> SwapNetwork {
        permutation_network(PermutationMode::Tuple(n), l).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        let z = BasisState::parse("↓↑↑↑").unwrap();
        assert_eq!(z.bits(), 1);
        assert_eq!(z.to_string(), "↓↑↑↑");
        assert_eq!(BasisState::parse("dudu").unwrap().bits(), 0b0101);
        assert!(BasisState::parse("↑").is_err());
        assert!(BasisState::new(0b100, 2).is_err());
    }

    #[test]
    fn two_tuple_layers() {
        let net = tuple(2, 4);
        assert_eq!(net.layers()[0], vec![(0, 1), (2, 3)]);
        assert!(net.layers()[1].is_empty());
        for bits in 0..16u64 {
            assert_eq!(net.apply_bits(net.apply_bits(bits)), bits);
        }
    }

    #[test]
    fn three_tuple_mirrors_halves() {
        let net = tuple(3, 6);
        assert_eq!(net.layers()[0], vec![(0, 1), (4, 5)]);
        assert_eq!(net.layers()[1], vec![(1, 2), (3, 4)]);
        let cycles = net.site_cycles();
        assert_eq!(cycles.len(), 2);
        assert!(cycles.iter().all(|c| c.len() == 3));
        assert!(cycles[0].iter().all(|&s| s < 3));
    }

    #[test]
    fn four_tuple_cycle() {
        let net = tuple(4, 4);
        assert_eq!(net.forward(), &[2, 0, 3, 1]);
        assert_eq!(net.site_cycles(), vec![vec![0, 1, 3, 2]]);
    }

    #[test]
    fn rejects_indivisible_chains() {
        assert!(matches!(permutation_network(PermutationMode::Tuple(4), 6), Err(Error::Config(_))));
        assert!(matches!(permutation_network(PermutationMode::Tuple(3), 9), Err(Error::Config(_))));
        assert!(permutation_network(PermutationMode::Transition { n1: 2, n2: 3 }, 6).is_ok());
        assert!(permutation_network(PermutationMode::Transition { n1: 3, n2: 5 }, 15).is_err());
    }

    #[test]
    fn paper_periods() {
        let net = tuple(4, 4);
        assert_eq!(state_period(BasisState::parse("↑↓↓↑").unwrap(), &net), 2);
        assert_eq!(state_period(BasisState::parse("↑↑↑↑").unwrap(), &net), 1);
        assert_eq!(state_period(BasisState::parse("↓↑↑↑").unwrap(), &net), 4);
    }

    #[test]
    fn exhaustive_return_after_n() {
        for (n, l) in [(2, 8), (3, 6), (3, 12), (4, 8), (4, 12), (5, 10), (6, 12)] {
            let net = tuple(n, l);
            for bits in 0..(1u64 << l) {
                let mut cur = bits;
                for _ in 0..n {
                    cur = net.apply_bits(cur);
                }
                assert_eq!(cur, bits, "n={n} L={l}");
                let z = BasisState::new(bits, l).unwrap();
                assert_eq!(n % state_period(z, &net), 0);
            }
        }
    }

    #[test]
    fn small_orbit_decomposition() {
        let orbits = decompose_orbits(&tuple(2, 2), 2).unwrap();
        assert_eq!(orbits.len(), 3);
        let periods: Vec<usize> = orbits.iter().map(|o| o.period).collect();
        assert_eq!(periods, vec![1, 2, 1]);
        let orbits = decompose_orbits(&tuple(4, 4), 4).unwrap();
        assert_eq!(orbits.iter().map(|o| o.period).sum::<usize>(), 16);
    }

    #[test]
    fn l_alpha_one_down_per_unit() {
        let net = tuple(4, 8);
        let z = BasisState::parse("↓↑↑↑↑↓↑↑").unwrap();
        assert_eq!(count_full_period_units(z, &net, 4), 2);
        let orbits = decompose_orbits(&net, 4).unwrap();
        let orbit = orbits.iter().find(|o| o.states.contains(&z)).unwrap();
        assert_eq!(orbit.l_alpha, 2);
        assert_eq!(count_full_period_units(BasisState::parse("↓↑↑↑↑↑↑↑").unwrap(), &net, 4), 1);
    }

    #[test]
    fn orbit_cap() {
        let net = tuple(2, 16);
        assert!(matches!(decompose_orbits(&net, 2), Err(Error::Size(_))));
    }

    #[test]
    fn min_period_counts() {
        assert_eq!(count_min_period_states(1)[&1], 2);
        assert_eq!(count_min_period_states(3)[&3], 6);
        let c4 = count_min_period_states(4);
        assert_eq!(c4[&4], 12);
        assert_eq!(c4.values().sum::<u64>(), 16);
    }

    #[test]
    fn one_down_states() {
        let states = one_down_per_unit(8, 4).unwrap();
        assert_eq!(states.len(), 16);
        assert!(states.iter().all(|z| z.bits().count_ones() == 2));
    }

    #[test]
    fn hamming_examples() {
        let z = BasisState::parse("↓↑↑↑↑↓↑↑").unwrap();
        assert_eq!(unit_hamming_distance(z, z, 4), 0);
        let w = BasisState::new(z.bits() ^ (1 << 2), 8).unwrap();
        assert_eq!(unit_hamming_distance(z, w, 4), 1);
    }

    #[test]
    fn hamming_bounded_by_l_alpha_within_orbit() {
        let net = tuple(4, 8);
        for orbit in decompose_orbits(&net, 4).unwrap().iter().filter(|o| o.period == 4) {
            for (a, za) in orbit.states.iter().enumerate() {
                for zb in orbit.states.iter().skip(a + 1) {
                    assert!(unit_hamming_distance(*za, *zb, 4) >= orbit.l_alpha);
                }
            }
        }
    }
}
