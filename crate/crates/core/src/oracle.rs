//! Exact finite probability models.
//!
//! An [`AtomSystem`] lists the probability of every joint up/down state of
//! `n_el` binary elements (bit `j` of the atom index set means element `j` is
//! down). A cut set occurs when all of its elements are down; the system fails
//! when any cut set occurs. With at most 12 elements the atom space is small
//! enough to sum exhaustively, which makes this the ground truth for checking
//! that every bound really is an upper bound.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ProbabilityMatrix;
use crate::rng::draw_rng;

pub const MAX_ELEMENTS: usize = 12;
const MASS_SLACK: f64 = 1e-12;
const CROSS_CHECK_SLACK: f64 = 1e-10;
const CROSS_CHECK_MAX_EVENTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSystem {
    n_el: usize,
    atom_probs: Vec<f64>,
    cut_masks: Vec<u32>,
}

/// The event "every element of one cut set is down".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutSetEvent(u32);

impl CutSetEvent {
    pub fn occurs(&self, atom: usize) -> bool {
        atom as u32 & self.0 == self.0
    }
}

impl AtomSystem {
    /// Cut sets are 0-based element lists and must be minimal: non-empty and
    /// none containing another.
    pub fn new(n_el: usize, atom_probs: Vec<f64>, cut_sets: Vec<Vec<usize>>) -> Result<Self> {
        let system = Self::from_event_family(n_el, atom_probs, cut_sets)?;
        for (a, &x) in system.cut_masks.iter().enumerate() {
            for (b, &y) in system.cut_masks.iter().enumerate() {
                if a != b && x & y == x {
                    return Err(Error::InvalidSystem(format!(
                        "cut set {} is contained in cut set {}",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(system)
    }

    /// Like [`new`](Self::new) without the minimality check, so arbitrary
    /// (even repeated) element-intersection events are allowed.
    pub fn from_event_family(n_el: usize, atom_probs: Vec<f64>, cut_sets: Vec<Vec<usize>>) -> Result<Self> {
        if n_el > MAX_ELEMENTS {
            return Err(Error::InvalidSystem(format!(
                "{n_el} elements exceeds the cap of {MAX_ELEMENTS}"
            )));
        }
        if atom_probs.len() != 1 << n_el {
            return Err(Error::InvalidSystem(format!(
                "expected {} atom probabilities, got {}",
                1usize << n_el,
                atom_probs.len()
            )));
        }
        if let Some(p) = atom_probs.iter().find(|p| p.is_nan() || **p < 0.0) {
            return Err(Error::InvalidSystem(format!("negative atom probability {p}")));
        }
        let mass: f64 = atom_probs.iter().sum();
        if (mass - 1.0).abs() > MASS_SLACK {
            return Err(Error::InvalidSystem(format!("atom probabilities sum to {mass}")));
        }
        if cut_sets.is_empty() {
            return Err(Error::InvalidSystem("no cut sets".into()));
        }
        let mut cut_masks = Vec::with_capacity(cut_sets.len());
        for (i, set) in cut_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidSystem(format!("cut set {} is empty", i + 1)));
            }
            let mut mask = 0u32;
            for &e in set {
                if e >= n_el {
                    return Err(Error::InvalidSystem(format!(
                        "cut set {} names element {}",
                        i + 1,
                        e + 1
                    )));
                }
                mask |= 1 << e;
            }
            cut_masks.push(mask);
        }
        Ok(Self {
            n_el,
            atom_probs,
            cut_masks,
        })
    }

    pub fn n_el(&self) -> usize {
        self.n_el
    }

    /// Number of cut sets.
    pub fn n(&self) -> usize {
        self.cut_masks.len()
    }

    pub fn atom_probs(&self) -> &[f64] {
        &self.atom_probs
    }

    /// Cut sets as 0-based element lists.
    pub fn cut_sets(&self) -> Vec<Vec<usize>> {
        self.cut_masks
            .iter()
            .map(|&m| (0..self.n_el).filter(|&e| m & (1 << e) != 0).collect())
            .collect()
    }

    pub fn cutset_event(&self, i: usize) -> Result<CutSetEvent> {
        self.cut_masks
            .get(i)
            .map(|&m| CutSetEvent(m))
            .ok_or(Error::IndexOutOfRange {
                index: i + 1,
                n: self.n(),
            })
    }

    fn mass_where(&self, required: u32) -> f64 {
        self.atom_probs
            .iter()
            .enumerate()
            .filter(|&(atom, _)| atom as u32 & required == required)
            .map(|(_, p)| p)
            .sum()
    }

    /// Probability that every listed cut set (0-based) occurs together.
    pub fn joint_probability(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut required = 0u32;
        for &i in subset {
            required |= self.cutset_event(i)?.0;
        }
        Ok(self.mass_where(required))
    }

    /// Probability that at least one cut set occurs, summed over atoms.
    /// For up to 10 cut sets it is also checked against inclusion-exclusion.
    pub fn atom_union_probability(&self) -> Result<f64> {
        let direct = self.covered_mass();
        if self.n() <= CROSS_CHECK_MAX_EVENTS {
            let ie = self.inclusion_exclusion_union();
            if (direct - ie).abs() > CROSS_CHECK_SLACK {
                return Err(Error::OracleMismatch {
                    direct,
                    inclusion_exclusion: ie,
                });
            }
        }
        Ok(direct)
    }

    fn covered_mass(&self) -> f64 {
        self.atom_probs
            .iter()
            .enumerate()
            .filter(|&(atom, _)| self.cut_masks.iter().any(|&m| CutSetEvent(m).occurs(atom)))
            .map(|(_, p)| p)
            .sum()
    }

    /// Full alternating sum over all non-empty subsets of cut sets.
    pub fn inclusion_exclusion_union(&self) -> f64 {
        let n = self.n();
        let mut total = 0.0;
        for subset in 1u64..(1 << n) {
            let required = (0..n)
                .filter(|&i| subset & (1 << i) != 0)
                .fold(0u32, |acc, i| acc | self.cut_masks[i]);
            let term = self.mass_where(required);
            if subset.count_ones() % 2 == 1 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    /// First- and second-order probabilities of the cut sets.
    pub fn project_second_order(&self) -> ProbabilityMatrix {
        ProbabilityMatrix::from_fn(self.n(), |i, j| self.mass_where(self.cut_masks[i] | self.cut_masks[j]))
    }

    pub fn to_document(&self) -> SystemDocument {
        SystemDocument {
            n_el: self.n_el,
            atom_probs: self.atom_probs.clone(),
            cut_sets: self
                .cut_sets()
                .into_iter()
                .map(|s| s.into_iter().map(|e| e + 1).collect())
                .collect(),
        }
    }
}

/// Largest antichain of subsets of `n_el` elements: `C(n_el, floor(n_el/2))`.
fn max_minimal_cut_sets(n_el: usize) -> usize {
    let k = n_el / 2;
    (0..k).fold(1usize, |acc, i| acc * (n_el - i) / (i + 1))
}

/// Random system: atom probabilities uniform on the simplex (normalized
/// exponentials) and `n` random non-empty cut sets; a draw that contains or
/// is contained in an earlier cut set is dropped and redrawn.
pub fn random_system(n_el: usize, n: usize, seed: u64) -> Result<AtomSystem> {
    if n_el == 0 || n_el > MAX_ELEMENTS {
        return Err(Error::InvalidSystem(format!(
            "element count must be in 1..={MAX_ELEMENTS}, got {n_el}"
        )));
    }
    if n == 0 {
        return Err(Error::TooFewEvents { n, min: 1 });
    }
    if n > max_minimal_cut_sets(n_el) {
        return Err(Error::InvalidSystem(format!(
            "{n} minimal cut sets cannot be formed from {n_el} elements"
        )));
    }
    const MAX_ATTEMPTS: usize = 1_000_000;
    const RESTART_AFTER: usize = 500;
    let mut rng = draw_rng(seed, 0);
    let weights: Vec<f64> = (0..1usize << n_el).map(|_| rng.sample(Exp1)).collect();
    let total: f64 = weights.iter().sum();
    let atom_probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let full = (1u32 << n_el) - 1;
    let mut masks: Vec<u32> = Vec::with_capacity(n);
    let (mut attempts, mut rejected) = (0, 0);
    while masks.len() < n {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::InvalidSystem(format!(
                "could not draw {n} minimal cut sets over {n_el} elements"
            )));
        }
        // Early draws can leave no room for the rest; start over.
        if rejected == RESTART_AFTER {
            masks.clear();
            rejected = 0;
        }
        let m = rng.random_range(1..=full);
        if masks.iter().all(|&x| x & m != x && x & m != m) {
            masks.push(m);
            rejected = 0;
        } else {
            rejected += 1;
        }
    }
    let cut_sets = masks
        .iter()
        .map(|&m| (0..n_el).filter(|&e| m & (1 << e) != 0).collect())
        .collect();
    AtomSystem::new(n_el, atom_probs, cut_sets)
}

/// On-disk system format; cut sets list 1-based element indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDocument {
    pub n_el: usize,
    pub atom_probs: Vec<f64>,
    pub cut_sets: Vec<Vec<usize>>,
}

impl SystemDocument {
    pub fn into_system(self) -> Result<AtomSystem> {
        let cut_sets = self
            .cut_sets
            .into_iter()
            .map(|set| {
                set.into_iter()
                    .map(|e| {
                        e.checked_sub(1)
                            .ok_or_else(|| Error::InvalidSystem("element index 0 in 1-based cut set".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        AtomSystem::new(self.n_el, self.atom_probs, cut_sets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent elements with the given down-probabilities.
    fn independent(q: &[f64]) -> Vec<f64> {
        (0..1usize << q.len())
            .map(|atom| {
                q.iter()
                    .enumerate()
                    .map(|(j, &qj)| if atom & (1 << j) != 0 { qj } else { 1.0 - qj })
                    .product()
            })
            .collect()
    }

    #[test]
    fn single_element_cut_set_event() {
        let s = AtomSystem::new(1, vec![0.7, 0.3], vec![vec![0]]).unwrap();
        let ev = s.cutset_event(0).unwrap();
        assert!(!ev.occurs(0));
        assert!(ev.occurs(1));
        assert!(s.cutset_event(1).is_err());
    }

    #[test]
    fn two_element_cut_set_needs_both_down() {
        let s = AtomSystem::new(2, vec![0.25; 4], vec![vec![0, 1]]).unwrap();
        let ev = s.cutset_event(0).unwrap();
        assert!(!ev.occurs(0b01));
        assert!(ev.occurs(0b11));
    }

    #[test]
    fn event_covers_expected_number_of_atoms() {
        for seed in 0..20 {
            let s = random_system(6, 4, seed).unwrap();
            for (i, set) in s.cut_sets().iter().enumerate() {
                let ev = s.cutset_event(i).unwrap();
                let count = (0..64).filter(|&a| ev.occurs(a)).count();
                assert_eq!(count, 1 << (6 - set.len()));
            }
        }
    }

    #[test]
    fn joint_probabilities() {
        let q = [0.1, 0.2, 0.3];
        let s = AtomSystem::new(3, independent(&q), vec![vec![0], vec![1], vec![2]]).unwrap();
        assert!((s.joint_probability(&[1]).unwrap() - 0.2).abs() < 1e-15);
        assert!((s.joint_probability(&[0, 2]).unwrap() - 0.03).abs() < 1e-15);
        assert!((s.joint_probability(&[0, 1, 2]).unwrap() - 0.006).abs() < 1e-15);
        assert_eq!(s.joint_probability(&[]).unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn shared_element_caps_joint_probability() {
        let q = [0.4, 0.5, 0.6, 0.7];
        let s = AtomSystem::new(4, independent(&q), vec![vec![0, 1], vec![0, 2], vec![0, 3]]).unwrap();
        assert!(s.joint_probability(&[0, 1, 2]).unwrap() <= 0.4);
    }

    #[test]
    fn union_of_single_and_disjoint_events() {
        let s = AtomSystem::new(2, vec![0.4, 0.1, 0.2, 0.3], vec![vec![0]]).unwrap();
        assert!((s.atom_union_probability().unwrap() - 0.4).abs() < 1e-15);
        // Elements never fail together: the events are disjoint.
        let s = AtomSystem::new(2, vec![0.6, 0.15, 0.25, 0.0], vec![vec![0], vec![1]]).unwrap();
        assert!((s.atom_union_probability().unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn union_matches_inclusion_exclusion() {
        let s = random_system(5, 4, 11).unwrap();
        let direct = s.atom_union_probability().unwrap();
        assert!((direct - s.inclusion_exclusion_union()).abs() < 1e-12);
    }

    #[test]
    fn projection_under_independence() {
        let q = [0.1, 0.2, 0.3];
        let s = AtomSystem::new(3, independent(&q), vec![vec![0], vec![1], vec![2]]).unwrap();
        let m = s.project_second_order();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { q[i] } else { q[i] * q[j] };
                assert!((m.get(i, j) - expected).abs() < 1e-15);
            }
        }
        assert!(m.validate().is_valid());
    }

    #[test]
    fn identical_events_attain_upper_frechet_bound() {
        let s = AtomSystem::from_event_family(2, vec![0.4, 0.1, 0.2, 0.3], vec![vec![0, 1], vec![0, 1]]).unwrap();
        let m = s.project_second_order();
        assert_eq!(m.get(0, 1), m.get(0, 0));
        assert!(AtomSystem::new(2, vec![0.4, 0.1, 0.2, 0.3], vec![vec![0, 1], vec![0, 1]]).is_err());
    }

    #[test]
    fn invalid_systems_rejected() {
        assert!(AtomSystem::new(1, vec![0.5, 0.6], vec![vec![0]]).is_err());
        assert!(AtomSystem::new(1, vec![1.5, -0.5], vec![vec![0]]).is_err());
        assert!(AtomSystem::new(1, vec![0.5], vec![vec![0]]).is_err());
        assert!(AtomSystem::new(2, vec![0.25; 4], vec![vec![]]).is_err());
        assert!(AtomSystem::new(2, vec![0.25; 4], vec![vec![2]]).is_err());
        assert!(AtomSystem::new(2, vec![0.25; 4], vec![vec![0], vec![0, 1]]).is_err());
        assert!(random_system(13, 1, 0).is_err());
        assert!(random_system(2, 3, 0).is_err());
        assert!(random_system(3, 0, 0).is_err());
    }

    #[test]
    fn random_system_is_deterministic_and_minimal() {
        let a = random_system(6, 5, 77).unwrap();
        assert_eq!(a, random_system(6, 5, 77).unwrap());
        assert_ne!(a, random_system(6, 5, 78).unwrap());
        assert!((a.atom_probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let one = random_system(4, 1, 3).unwrap();
        let p1 = one.joint_probability(&[0]).unwrap();
        assert!((one.atom_union_probability().unwrap() - p1).abs() < 1e-15);
    }

    #[test]
    fn document_round_trip_is_one_based() {
        let s = random_system(4, 3, 5).unwrap();
        let doc = s.to_document();
        assert!(doc.cut_sets.iter().flatten().all(|&e| (1..=4).contains(&e)));
        let json = serde_json::to_string(&doc).unwrap();
        let back: SystemDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_system().unwrap(), s);
    }
}
