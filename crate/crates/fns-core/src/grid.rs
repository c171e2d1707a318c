//! Uniform time grids and trajectories of spectral fields.

use crate::field::SpectralField;

/// Uniform grid on [0, T] with `steps` substeps, hence steps+1 nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Self {
        assert!(horizon > 0.0, "horizon must be positive");
        assert!(steps >= 1, "need at least one substep");
        TimeGrid { horizon, steps }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn num_nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Node j as T * (j/M); the endpoints are exactly 0 and T.
    pub fn node(&self, j: usize) -> f64 {
        assert!(j <= self.steps, "node index {j} beyond grid");
        self.horizon * (j as f64 / self.steps as f64)
    }

    /// Index of a time that is exactly a node value, if any. Times produced
    /// by [`TimeGrid::node`] always resolve; anything else is a mismatch.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return None;
        }
        let j = (t / self.dt()).round() as usize;
        let j = j.min(self.steps);
        (self.node(j) == t).then_some(j)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|j| self.node(j))
    }
}

/// Spectral fields at every node of a time grid, all sharing one
/// truncation radius.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<SpectralField>) -> Self {
        assert_eq!(
            states.len(),
            grid.num_nodes(),
            "one state per grid node required"
        );
        let r = states[0].radius();
        assert!(
            states.iter().all(|s| s.radius() == r),
            "trajectory states must share a truncation radius"
        );
        Trajectory { grid, states }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.states[0].radius()
    }

    pub fn state(&self, j: usize) -> &SpectralField {
        &self.states[j]
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    /// sup over nodes of the phi2 norm; the trajectory-level size measure.
    pub fn sup_phi2(&self) -> f64 {
        self.states.iter().map(|s| s.phi2_norm()).fold(0.0, f64::max)
    }
}
