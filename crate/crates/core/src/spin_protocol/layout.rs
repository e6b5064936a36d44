//! Boxes, measured spin values and the states built on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::configspace::field::{slot_spins, spin_slot, Spin, SpinorField};
use crate::configspace::grid::GridSpec;
use crate::configspace::init::Orbital;
use crate::configspace::perm::permutations;
use crate::evolution::potential::{PotentialSpec, Region};
use crate::error::{Error, Result};

pub const MIN_WALL_HEIGHT: f64 = 1e6;
/// Boxes must be separated by at least this many grid cells.
pub const MIN_GAP_CELLS: f64 = 2.0;

/// Removal of the wall between two boxes (by index) before `at_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallDrop {
    pub at_step: usize,
    pub boxes: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxLayout {
    /// One single-particle box per particle.
    pub boxes: Vec<Region>,
    /// Measured spin in each box.
    pub spins: Vec<Spin>,
    #[serde(default = "default_height")]
    pub wall_height: f64,
    #[serde(default)]
    pub schedule: Vec<WallDrop>,
}

fn default_height() -> f64 {
    MIN_WALL_HEIGHT
}

impl BoxLayout {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidLayout(m));
        if self.boxes.len() != grid.n_particles || self.spins.len() != grid.n_particles {
            return bad(format!("{} boxes and {} spins for {} particles", self.boxes.len(), self.spins.len(), grid.n_particles));
        }
        if !(self.wall_height >= MIN_WALL_HEIGHT) {
            return bad(format!("wall height {} below {MIN_WALL_HEIGHT}", self.wall_height));
        }
        for (b, r) in self.boxes.iter().enumerate() {
            if r.lo.len() != grid.dim || r.hi.len() != grid.dim {
                return bad(format!("box {b} has the wrong dimension"));
            }
            if (0..grid.dim).any(|d| !(r.lo[d] < r.hi[d]) || r.lo[d] < -grid.extent[d] || r.hi[d] > grid.extent[d]) {
                return bad(format!("box {b} is empty or outside the grid"));
            }
        }
        for a in 0..self.boxes.len() {
            for b in a + 1..self.boxes.len() {
                let (p, q) = (&self.boxes[a], &self.boxes[b]);
                let gap = (0..grid.dim)
                    .map(|d| (q.lo[d] - p.hi[d]).max(p.lo[d] - q.hi[d]) / grid.spacing(d))
                    .fold(f64::NEG_INFINITY, f64::max);
                if gap < MIN_GAP_CELLS {
                    return bad(format!("boxes {a} and {b} are {gap:.2} cells apart"));
                }
            }
        }
        for w in &self.schedule {
            if w.boxes.0 >= self.boxes.len() || w.boxes.1 >= self.boxes.len() || w.boxes.0 == w.boxes.1 {
                return bad(format!("wall drop between {:?} refers to unknown boxes", w.boxes));
            }
        }
        Ok(())
    }

    /// Walls around every box.
    pub fn potential(&self) -> PotentialSpec {
        PotentialSpec::BoxWalls { boxes: self.boxes.clone(), height: self.wall_height }
    }

    /// Walls after merging each listed pair of boxes into their hull.
    pub fn merged_potential(&self, merges: &[(usize, usize)]) -> PotentialSpec {
        let mut group: Vec<usize> = (0..self.boxes.len()).collect();
        for &(a, b) in merges {
            let (ga, gb) = (group[a], group[b]);
            group.iter_mut().filter(|g| **g == gb).for_each(|g| *g = ga);
        }
        let mut boxes: Vec<Region> = Vec::new();
        let mut seen = Vec::new();
        for (i, &g) in group.iter().enumerate() {
            if let Some(k) = seen.iter().position(|&s| s == g) {
                boxes[k] = boxes[k].hull(&self.boxes[i]);
            } else {
                seen.push(g);
                boxes.push(self.boxes[i].clone());
            }
        }
        PotentialSpec::BoxWalls { boxes, height: self.wall_height }
    }

    /// Merges scheduled up to and including `step`.
    pub fn drops_until(&self, step: usize) -> Vec<(usize, usize)> {
        self.schedule.iter().filter(|w| w.at_step <= step).map(|w| w.boxes).collect()
    }

    /// Pairs of boxes holding the same spin.
    pub fn same_spin_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.boxes.len();
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| self.spins[a] == self.spins[b]).collect()
    }

    /// Box holding the single-particle point `x`.
    pub fn box_of(&self, x: &[f64]) -> Option<usize> {
        self.boxes.iter().position(|r| r.contains(x))
    }
}

/// Relative sign of the terms that differ by a permutation of particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Character {
    Symmetric,
    Antisymmetric,
}

fn check_orbitals_in_boxes(grid: &GridSpec, layout: &BoxLayout, orbitals: &[Orbital]) -> Result<()> {
    // sample the single-particle grid of particle 0
    let dim = grid.dim;
    let pts: Vec<usize> = (0..dim).map(|d| grid.points[d]).collect();
    let total: usize = pts.iter().product();
    for (b, o) in orbitals.iter().enumerate() {
        let (mut inside, mut outside) = (0.0f64, 0.0f64);
        for k in 0..total {
            let mut rest = k;
            let mut x = vec![0.0; dim];
            for d in (0..dim).rev() {
                x[d] = grid.coord(d, rest % pts[d]);
                rest /= pts[d];
            }
            let a = o.eval(&x).norm();
            if layout.boxes[b].contains(&x) {
                inside = inside.max(a);
            } else {
                outside = outside.max(a);
            }
        }
        if !(inside > 0.0) || outside > 1e-12 * inside {
            return Err(Error::InvalidLayout(format!("orbital {b} is not confined to its box")));
        }
    }
    Ok(())
}

/// The spinor left after measuring `layout.spins` in the boxes:
/// `sum_P chi(P) prod_i orbitals[P(i)](x_i) |s_P(1) ... s_P(n)>`, grouped by
/// spin sequence, so each distinct sequence is one component.
pub fn build_measured_state(
    grid: &GridSpec,
    layout: &BoxLayout,
    orbitals: &[Orbital],
    character: Character,
) -> Result<SpinorField> {
    layout.validate(grid)?;
    let n = grid.n_particles;
    if orbitals.len() != n {
        return Err(Error::InvalidLayout(format!("{} orbitals for {n} boxes", orbitals.len())));
    }
    check_orbitals_in_boxes(grid, layout, orbitals)?;
    let perms = permutations(n);
    if perms.is_empty() {
        return Err(Error::InvalidLayout("no permutations".into()));
    }
    let dim = grid.dim;
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; 1 << n];
    for (p, sign) in &perms {
        let spins: Vec<Spin> = p.iter().map(|&b| layout.spins[b]).collect();
        let slot = spin_slot(&spins);
        let chi = match character {
            Character::Symmetric => 1.0,
            Character::Antisymmetric => *sign as f64,
        };
        for (k, z) in comps[slot].iter_mut().enumerate() {
            let x = grid.point(k);
            let amp: Complex64 = (0..n).map(|i| orbitals[p[i]].eval(&x[i * dim..(i + 1) * dim])).product();
            *z += chi * amp;
        }
    }
    SpinorField::new(grid.clone(), comps)
}

/// Spin sequences carried by the state (distinct permutations of the
/// measured values).
pub fn distinct_sequences(layout: &BoxLayout) -> Vec<Vec<Spin>> {
    let n = layout.spins.len();
    let mut out: Vec<Vec<Spin>> = Vec::new();
    for (p, _) in permutations(n) {
        let s: Vec<Spin> = p.iter().map(|&b| layout.spins[b]).collect();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out.sort_by_key(|s| spin_slot(s));
    out
}

/// Non-empty components of a spinor, as spin sequences.
pub fn occupied_components(s: &SpinorField, rel: f64) -> Vec<Vec<Spin>> {
    let n = s.grid().n_particles;
    let total = s.norm_sqr();
    (0..s.n_components())
        .filter(|&slot| s.component_weight(slot) > rel * total)
        .map(|slot| slot_spins(slot, n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn layout_1d(spins: Vec<Spin>) -> (GridSpec, BoxLayout, Vec<Orbital>) {
        let n = spins.len();
        let g = GridSpec::uniform(n, 1, 24, 6.0).unwrap();
        let boxes: Vec<Region> = (0..n)
            .map(|b| {
                let lo = -5.5 + 4.0 * b as f64;
                Region { lo: vec![lo], hi: vec![lo + 3.0] }
            })
            .collect();
        let orbitals = boxes
            .iter()
            .map(|r| Orbital::BoxMode { lo: r.lo.clone(), hi: r.hi.clone(), mode: vec![1], momentum: vec![] })
            .collect();
        (g, BoxLayout { boxes, spins, wall_height: 1e6, schedule: vec![] }, orbitals)
    }

    #[test]
    fn component_counts() {
        use Spin::{Down, Up};
        for (spins, want) in [(vec![Up, Up], 1), (vec![Up, Down], 2), (vec![Up, Up, Down], 3)] {
            let (g, l, o) = layout_1d(spins);
            let s = build_measured_state(&g, &l, &o, Character::Symmetric).unwrap();
            assert_eq!(occupied_components(&s, 1e-12).len(), want);
            assert_eq!(distinct_sequences(&l).len(), want);
        }
    }

    #[test]
    fn layout_checks() {
        let (g, mut l, _) = layout_1d(vec![Spin::Up, Spin::Down]);
        l.wall_height = 10.0;
        assert!(l.validate(&g).is_err());
        l.wall_height = 1e6;
        l.boxes[1].lo[0] = l.boxes[0].hi[0] + 0.1;
        assert!(matches!(l.validate(&g), Err(Error::InvalidLayout(_))));
        let (g, l, mut o2) = layout_1d(vec![Spin::Up, Spin::Down]);
        o2[0] = Orbital::Gaussian { center: vec![-4.0], sigma: 1.0, momentum: vec![] };
        assert!(build_measured_state(&g, &l, &o2, Character::Symmetric).is_err());
    }
}
