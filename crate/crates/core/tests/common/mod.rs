#![allow(dead_code)]

pub mod ortho;
pub mod quantiles;

use welfare_bounds::identification::{Atom, DiscreteDistribution};
use welfare_bounds::{Dataset, Support};

/// A group of identical observations: `count` copies of `(y, d, x, z)`.
#[derive(Debug, Clone, Copy)]
pub struct Group {
    pub y: f64,
    pub d: u8,
    pub x: f64,
    pub z: f64,
    pub count: u32,
}

pub fn support() -> Support {
    Support::new(0.0, 20.0).unwrap()
}

/// The empirical distribution of the groups, both as an enumerated
/// population and as a dataset with one row per observation.
pub fn from_groups(groups: &[Group]) -> (DiscreteDistribution, Dataset) {
    let total: u32 = groups.iter().map(|g| g.count).sum();
    let atoms = groups
        .iter()
        .filter(|g| g.count > 0)
        .map(|g| Atom {
            y: g.y,
            d: g.d,
            x: vec![g.x],
            z: Some(g.z),
            prob: g.count as f64 / total as f64,
        })
        .collect();
    let dist = DiscreteDistribution::new(vec!["x".into()], atoms).unwrap();
    let (mut y, mut d, mut x, mut z) = (vec![], vec![], vec![], vec![]);
    for g in groups {
        for _ in 0..g.count {
            y.push(g.y);
            d.push(g.d);
            x.push(g.x);
            z.push(g.z);
        }
    }
    let data = Dataset::new(y, d, vec!["x".into()], x, Some(("z".into(), z)), support()).unwrap();
    (dist, data)
}

/// Threshold-crossing population with `D = 1{U <= p(x, z)}`.
///
/// `U` is uniform on the grid `(j + 0.5) / m`, `p(x, z) = k[x][z] / m`,
/// and the potential outcomes `y1[x][j]`, `y0[x][j]` do not depend on `Z`,
/// which is independent of `(X, U)`. The instrument therefore satisfies
/// mean independence, and with `k[x][1] >= k[x][0]` it shifts treatment
/// monotonically.
#[derive(Debug, Clone)]
pub struct Threshold {
    pub x_mass: Vec<u32>,
    pub z_mass: [u32; 2],
    pub k: Vec<[usize; 2]>,
    pub y1: Vec<Vec<f64>>,
    pub y0: Vec<Vec<f64>>,
}

impl Threshold {
    pub fn groups(&self) -> Vec<Group> {
        let m = self.y1[0].len();
        let mut out = Vec::new();
        for (xi, &xm) in self.x_mass.iter().enumerate() {
            for (zi, &zm) in self.z_mass.iter().enumerate() {
                for j in 0..m {
                    let d = (j < self.k[xi][zi]) as u8;
                    let y = if d == 1 { self.y1[xi][j] } else { self.y0[xi][j] };
                    out.push(Group {
                        y,
                        d,
                        x: xi as f64,
                        z: zi as f64,
                        count: xm * zm,
                    });
                }
            }
        }
        out
    }
}
