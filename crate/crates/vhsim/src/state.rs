//! Compartment state, trajectories and the conserved-quantity ledger.

use crate::error::{Error, Result};
use crate::geometry::SpatialDomain;

/// Compartment selector used by exporters and the sensitivity toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    SusceptibleHosts,
    ExposedHosts,
    InfectedHosts,
    SusceptibleVectors,
    InfectedVectors,
}

impl Compartment {
    pub const ALL: [Compartment; 5] = [
        Compartment::SusceptibleHosts,
        Compartment::ExposedHosts,
        Compartment::InfectedHosts,
        Compartment::SusceptibleVectors,
        Compartment::InfectedVectors,
    ];

    /// Short column label used in CSV artifacts.
    pub fn label(self) -> &'static str {
        match self {
            Compartment::SusceptibleHosts => "s_h",
            Compartment::ExposedHosts => "e_h",
            Compartment::InfectedHosts => "i_h",
            Compartment::SusceptibleVectors => "s_v",
            Compartment::InfectedVectors => "i_v",
        }
    }

    pub fn parse(s: &str) -> Option<Compartment> {
        Some(match s {
            "s_h" => Compartment::SusceptibleHosts,
            "e_h" => Compartment::ExposedHosts,
            "i_h" => Compartment::InfectedHosts,
            "s_v" => Compartment::SusceptibleVectors,
            "i_v" => Compartment::InfectedVectors,
            _ => return None,
        })
    }
}

/// The five compartment fields over the domain at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFields {
    pub s_h: Vec<f64>,
    pub e_h: Vec<f64>,
    pub i_h: Vec<f64>,
    pub s_v: Vec<f64>,
    pub i_v: Vec<f64>,
}

impl StateFields {
    pub fn zeros(n: usize) -> StateFields {
        StateFields {
            s_h: vec![0.0; n],
            e_h: vec![0.0; n],
            i_h: vec![0.0; n],
            s_v: vec![0.0; n],
            i_v: vec![0.0; n],
        }
    }

    /// Spatially uniform state.
    pub fn uniform(n: usize, s_h: f64, e_h: f64, i_h: f64, s_v: f64, i_v: f64) -> StateFields {
        StateFields {
            s_h: vec![s_h; n],
            e_h: vec![e_h; n],
            i_h: vec![i_h; n],
            s_v: vec![s_v; n],
            i_v: vec![i_v; n],
        }
    }

    pub fn n_cells(&self) -> usize {
        self.s_h.len()
    }

    pub fn field(&self, c: Compartment) -> &[f64] {
        match c {
            Compartment::SusceptibleHosts => &self.s_h,
            Compartment::ExposedHosts => &self.e_h,
            Compartment::InfectedHosts => &self.i_h,
            Compartment::SusceptibleVectors => &self.s_v,
            Compartment::InfectedVectors => &self.i_v,
        }
    }

    pub fn field_mut(&mut self, c: Compartment) -> &mut Vec<f64> {
        match c {
            Compartment::SusceptibleHosts => &mut self.s_h,
            Compartment::ExposedHosts => &mut self.e_h,
            Compartment::InfectedHosts => &mut self.i_h,
            Compartment::SusceptibleVectors => &mut self.s_v,
            Compartment::InfectedVectors => &mut self.i_v,
        }
    }

    /// Per-cell host total `S_h + E_h + I_h`.
    pub fn host_totals(&self) -> Vec<f64> {
        (0..self.n_cells())
            .map(|i| self.s_h[i] + self.e_h[i] + self.i_h[i])
            .collect()
    }

    /// Domain integral of `S_v + I_v`.
    pub fn vector_integral(&self, domain: &SpatialDomain) -> f64 {
        (0..self.n_cells())
            .map(|i| self.s_v[i] + self.i_v[i])
            .sum::<f64>()
            * domain.cell_area()
    }

    pub fn validate(&self, n_cells: usize) -> Result<()> {
        for (name, f) in [
            ("s_h", &self.s_h),
            ("e_h", &self.e_h),
            ("i_h", &self.i_h),
            ("s_v", &self.s_v),
            ("i_v", &self.i_v),
        ] {
            if f.len() != n_cells {
                return Err(Error::FieldLength {
                    got: f.len(),
                    expected: n_cells,
                });
            }
            if f.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "field {name} contains negative or non-finite values"
                )));
            }
        }
        Ok(())
    }
}

/// Per-snapshot record of the conserved quantities.
#[derive(Debug, Clone, Copy)]
pub struct LedgerEntry {
    pub time: f64,
    /// max over cells of |S_h+E_h+I_h - N(x)| / N(x)
    pub host_total_rel_dev: f64,
    /// domain integral of S_v + I_v
    pub vector_integral: f64,
    /// relative deviation of the vector integral from its reference value
    /// (the initial integral, re-based after each impulse)
    pub vector_rel_dev: f64,
    /// cumulative mass removed by the negative-roundoff clamp so far
    pub clamped_mass: f64,
}

/// Running worst-case audit, updated every step (not only at snapshots).
#[derive(Debug, Clone, Copy, Default)]
pub struct ConservationAudit {
    pub max_host_total_rel_dev: f64,
    pub max_vector_rel_dev: f64,
    pub clamped_mass: f64,
}

/// Time-indexed sequence of state snapshots plus the conserved-quantity
/// ledger. Snapshot times are strictly increasing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<StateFields>,
    pub ledger: Vec<LedgerEntry>,
    pub audit: ConservationAudit,
}

impl Trajectory {
    pub fn new() -> Trajectory {
        Trajectory {
            times: Vec::new(),
            snapshots: Vec::new(),
            ledger: Vec::new(),
            audit: ConservationAudit::default(),
        }
    }

    pub fn push(&mut self, time: f64, state: StateFields, entry: LedgerEntry) {
        debug_assert!(self.times.last().map_or(true, |&t| time > t));
        self.times.push(time);
        self.snapshots.push(state);
        self.ledger.push(entry);
    }

    pub fn last_state(&self) -> &StateFields {
        self.snapshots.last().expect("empty trajectory")
    }

    /// Snapshot at exactly `time` (within rounding slack).
    pub fn at_time(&self, time: f64) -> Option<&StateFields> {
        let idx = self
            .times
            .iter()
            .position(|&t| (t - time).abs() < 1e-9 * time.abs().max(1.0))?;
        Some(&self.snapshots[idx])
    }
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::new()
    }
}
