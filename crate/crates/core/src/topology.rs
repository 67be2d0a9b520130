//! Worker placement and link-cost models.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Positions of the workers inside a square area, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub positions: Vec<(f64, f64)>,
    pub area_side: f64,
}

impl Placement {
    pub fn new(positions: Vec<(f64, f64)>, area_side: f64) -> Result<Self> {
        if !(area_side > 0.0) {
            return Err(Error::InvalidArgument("area side must be positive"));
        }
        let inside = |v: f64| (0.0..=area_side).contains(&v);
        if positions.iter().any(|&(x, y)| !inside(x) || !inside(y)) {
            return Err(Error::InvalidArgument("position outside the area"));
        }
        Ok(Self { positions, area_side })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (xa, ya) = self.positions[a];
        let (xb, yb) = self.positions[b];
        libm::hypot(xa - xb, ya - yb)
    }
}

/// I.i.d. uniform positions over `[0, area_side]²`, deterministic per seed.
pub fn random_placement(n: usize, area_side: f64, seed: u64) -> Result<Placement> {
    if n < 2 {
        return Err(Error::TooFewWorkers(n));
    }
    if !(area_side > 0.0 && area_side.is_finite()) {
        return Err(Error::InvalidArgument("area side must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n)
        .map(|_| (rng.random::<f64>() * area_side, rng.random::<f64>() * area_side))
        .collect();
    Ok(Placement { positions, area_side })
}

/// Free-space link parameters for the transmit-energy cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub bandwidth_hz: f64,
    pub noise_density: f64,
    pub rate_bps: f64,
}

impl Default for EnergyModel {
    /// 2 MHz bandwidth, noise density 1e-6, 10 Mbps target rate.
    fn default() -> Self {
        Self { bandwidth_hz: 2e6, noise_density: 1e-6, rate_bps: 1e7 }
    }
}

/// Power needed to sustain `rate_bps` over a link of `distance_m`, from
/// `R = B·log2(P / (d²·N0·B))`, i.e. `P = d²·N0·B·2^(R/B)`.
pub fn link_energy_cost(distance_m: f64, bandwidth_hz: f64, noise_density: f64, rate_bps: f64) -> f64 {
    distance_m * distance_m * noise_density * bandwidth_hz * libm::exp2(rate_bps / bandwidth_hz)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    /// Every link costs 1.
    Unit,
    Energy(EnergyModel),
}

impl CostModel {
    fn link(&self, distance: f64) -> f64 {
        match self {
            CostModel::Unit => 1.0,
            CostModel::Energy(m) => link_energy_cost(distance, m.bandwidth_hz, m.noise_density, m.rate_bps),
        }
    }
}

/// Symmetric non-negative link costs with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CommCostMatrix {
    n: usize,
    cost: Vec<f64>,
}

impl CommCostMatrix {
    pub fn unit(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0)
    }

    /// Builds the matrix from the upper triangle of `f`; the diagonal is zero.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut cost = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = f(i, j);
                cost[i * n + j] = c;
                cost[j * n + i] = c;
            }
        }
        Self { n, cost }
    }

    pub fn from_row_major(n: usize, cost: Vec<f64>) -> Result<Self> {
        if cost.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: cost.len() });
        }
        for i in 0..n {
            if cost[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument("cost matrix diagonal must be zero"));
            }
            for j in 0..n {
                let c = cost[i * n + j];
                if c.is_nan() || c < 0.0 || c != cost[j * n + i] {
                    return Err(Error::InvalidArgument("cost matrix must be symmetric and non-negative"));
                }
            }
        }
        Ok(Self { n, cost })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.cost[a * self.n + b]
    }
}

pub fn cost_matrix(placement: &Placement, model: CostModel) -> CommCostMatrix {
    CommCostMatrix::from_fn(placement.len(), |i, j| model.link(placement.distance(i, j)))
}

/// Costs for a star around a parameter server. Node `N` (one past the last
/// worker) is the server, co-located with worker `server_site`. Under the
/// unit model every worker–server link costs 1, including the co-located one.
pub fn star_cost_matrix(placement: &Placement, model: CostModel, server_site: usize) -> CommCostMatrix {
    let n = placement.len();
    CommCostMatrix::from_fn(n + 1, |i, j| {
        let pi = if i == n { server_site } else { i };
        let pj = if j == n { server_site } else { j };
        model.link(placement.distance(pi, pj))
    })
}

/// Worker closest to the middle of the area; ties go to the smaller id.
pub fn center_worker(placement: &Placement) -> usize {
    let c = placement.area_side / 2.0;
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &(x, y)) in placement.positions.iter().enumerate() {
        let d = (x - c) * (x - c) + (y - c) * (y - c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Physical link costs as seen by a running algorithm.
pub trait PhysicalTopology {
    /// Costs in force during iteration `iteration` (0-based).
    fn costs_at(&mut self, iteration: usize) -> &CommCostMatrix;
}

/// Costs that never change.
#[derive(Debug, Clone)]
pub struct StaticTopology {
    costs: CommCostMatrix,
}

impl StaticTopology {
    pub fn new(costs: CommCostMatrix) -> Self {
        Self { costs }
    }

    pub fn unit(n: usize) -> Self {
        Self::new(CommCostMatrix::unit(n))
    }
}

impl PhysicalTopology for StaticTopology {
    fn costs_at(&mut self, _iteration: usize) -> &CommCostMatrix {
        &self.costs
    }
}

/// Workers re-drawn uniformly over the area every `period` iterations.
#[derive(Debug, Clone)]
pub struct MovingTopology {
    n: usize,
    area_side: f64,
    model: CostModel,
    period: usize,
    seed: u64,
    epoch: usize,
    costs: CommCostMatrix,
}

impl MovingTopology {
    pub fn new(n: usize, area_side: f64, model: CostModel, period: usize, seed: u64) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidArgument("topology period must be at least 1"));
        }
        let costs = cost_matrix(&random_placement(n, area_side, epoch_seed(seed, 0))?, model);
        Ok(Self { n, area_side, model, period, seed, epoch: 0, costs })
    }

    pub fn placement_at(&self, epoch: usize) -> Placement {
        random_placement(self.n, self.area_side, epoch_seed(self.seed, epoch)).expect("validated at construction")
    }
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl PhysicalTopology for MovingTopology {
    fn costs_at(&mut self, iteration: usize) -> &CommCostMatrix {
        let epoch = iteration / self.period;
        if epoch != self.epoch {
            self.epoch = epoch;
            self.costs = cost_matrix(&self.placement_at(epoch), self.model);
        }
        &self.costs
    }
}
