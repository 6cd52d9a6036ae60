//! Metabolic reaction network (MRN) feeding a growing population.
//!
//! Slow state `z = (p concentration, population, copies of q)`, fast state
//! `y` = metabolite concentrations `m_1..m_N`, controls `u = (m_1 supply,
//! q production)`, disturbance `d_1` = global metabolic efficiency.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::boxset::BoxSet;
use super::model::SpSystem;
use crate::error::{Error, Result};

/// Directed reaction `from -> to`. Node `n_metabolites` is the product `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrnEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrnNetwork {
    pub n_metabolites: usize,
    pub edges: Vec<MrnEdge>,
}

/// Probability of each optional forward shortcut in [`MrnNetwork::random`].
const SHORTCUT_PROBABILITY: f64 = 0.15;

impl MrnNetwork {
    pub fn new(n_metabolites: usize, edges: Vec<MrnEdge>) -> Result<Self> {
        if n_metabolites == 0 {
            return Err(Error::Domain(
                "network needs at least one metabolite".into(),
            ));
        }
        for e in &edges {
            if e.from > n_metabolites || e.to > n_metabolites {
                return Err(Error::Domain(format!(
                    "edge {} -> {} references a node outside 0..={n_metabolites}",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::Domain(format!("self-loop on node {}", e.from)));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::Domain(format!(
                    "edge {} -> {} has invalid weight {}",
                    e.from, e.to, e.weight
                )));
            }
        }
        Ok(Self {
            n_metabolites,
            edges,
        })
    }

    /// Index of the product node `p`.
    pub fn product(&self) -> usize {
        self.n_metabolites
    }

    /// Chain `m_1 -> ... -> m_N -> p` with unit weights.
    pub fn chain(n_metabolites: usize) -> Self {
        let edges = (0..n_metabolites)
            .map(|i| MrnEdge {
                from: i,
                to: i + 1,
                weight: 1.0,
            })
            .collect();
        Self {
            n_metabolites,
            edges,
        }
    }

    /// Seeded random feed-forward network: a backbone `m_i -> m_{i+1}`
    /// (`m_N -> p`) plus random forward shortcuts, all weights i.i.d.
    /// uniform on `(0, 1)`.
    pub fn random(n_metabolites: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n_metabolites {
            edges.push(MrnEdge {
                from: i,
                to: i + 1,
                weight: rng.random::<f64>(),
            });
            for j in (i + 2)..=n_metabolites {
                if rng.random::<f64>() < SHORTCUT_PROBABILITY {
                    edges.push(MrnEdge {
                        from: i,
                        to: j,
                        weight: rng.random::<f64>(),
                    });
                }
            }
        }
        Self::new(n_metabolites, edges)
    }

    /// Weighted adjacency `T` with `T[i][j]` = weight of edge `j -> i`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.n_metabolites + 1;
        let mut t = DMatrix::zeros(n, n);
        for e in &self.edges {
            t[(e.to, e.from)] += e.weight;
        }
        t
    }

    /// First metabolite with no positive-weight path to `p`, if any.
    pub fn disconnected_metabolite(&self) -> Option<usize> {
        let n = self.n_metabolites + 1;
        // Reverse BFS from p.
        let mut reaches = vec![false; n];
        reaches[self.product()] = true;
        let mut queue = VecDeque::from([self.product()]);
        while let Some(node) = queue.pop_front() {
            for e in &self.edges {
                if e.to == node && e.weight > 0.0 && !reaches[e.from] {
                    reaches[e.from] = true;
                    queue.push_back(e.from);
                }
            }
        }
        (0..self.n_metabolites).find(|&i| !reaches[i])
    }

    /// `(A_MRN, C_MRN)`: `A_MRN` is `T` restricted to the metabolites with
    /// each full column sum subtracted from the diagonal; `C_MRN` is `p`'s
    /// row of `T` without its own entry.
    pub fn matrices(&self) -> Result<(DMatrix<f64>, RowDVector<f64>)> {
        if let Some(index) = self.disconnected_metabolite() {
            return Err(Error::MetaboliteNotConnected { index });
        }
        let t = self.adjacency();
        let n = self.n_metabolites;
        let mut a = t.view((0, 0), (n, n)).into_owned();
        for j in 0..n {
            let col_sum: f64 = t.column(j).sum();
            a[(j, j)] -= col_sum;
        }
        let c = RowDVector::from_iterator(n, t.row(n).iter().take(n).copied());
        Ok((a, c))
    }
}

/// Default control set, `[0, 1]^2`.
pub fn mrn_u_set() -> BoxSet {
    BoxSet::cube(2, 0.0, 1.0, 2).expect("valid box")
}

/// Default disturbance set, `[0.9, 1.1]`.
pub fn mrn_d_set() -> BoxSet {
    BoxSet::new(vec![0.9], vec![1.1], 2).expect("valid box")
}

/// MRN system together with the matrices it was built from.
#[derive(Debug, Clone)]
pub struct MrnModel {
    pub network: MrnNetwork,
    pub a_mrn: DMatrix<f64>,
    pub c_mrn: RowDVector<f64>,
    pub system: SpSystem,
}

impl MrnModel {
    /// `C_MRN A_MRN^{-1}` (a row vector).
    pub fn c_a_inv(&self) -> RowDVector<f64> {
        let a_inv = self
            .a_mrn
            .clone()
            .try_inverse()
            .expect("A_MRN verified invertible at construction");
        &self.c_mrn * a_inv
    }

    /// Coefficient of `u_1` in the reduced `z_1'` obtained from `F = f - M g`,
    /// i.e. `-C_MRN A_MRN^{-1} e_1`.
    pub fn reduced_inflow_gain(&self) -> f64 {
        -self.c_a_inv()[0]
    }

    /// The same coefficient with the opposite sign, `+C_MRN A_MRN^{-1} e_1`.
    /// Reported alongside [`Self::reduced_inflow_gain`] in verification output.
    pub fn opposite_sign_inflow_gain(&self) -> f64 {
        self.c_a_inv()[0]
    }
}

/// Builds the MRN game from a network.
pub fn mrn(network: MrnNetwork) -> Result<MrnModel> {
    let (a_mrn, c_mrn) = network.matrices()?;
    let n = network.n_metabolites;
    let a_inv = a_mrn
        .clone()
        .try_inverse()
        .ok_or(Error::Numerical("A_MRN is numerically singular".into()))?;
    let c_a_inv = &c_mrn * a_inv;

    let mut m_mat = DMatrix::zeros(3, n);
    m_mat.row_mut(0).copy_from(&c_a_inv);
    let a_nominal = a_mrn.clone();

    let system = SpSystem::new(
        format!("mrn_{n}"),
        3,
        n,
        Arc::new(|z, u, _d| {
            let sat = z[0] / (z[0] + 1.0);
            DVector::from_vec(vec![-sat * z[0], (sat - z[1]) * z[1], z[1] * u[1]])
        }),
        Arc::new(move |_z, u, _d| {
            let mut g = DVector::zeros(n);
            g[0] = u[0];
            g
        }),
        Arc::new(move |_z| m_mat.clone()),
        Arc::new(move |_z, _u, d| &a_nominal * d[0]),
        mrn_u_set(),
        mrn_d_set(),
    )?;
    Ok(MrnModel {
        network,
        a_mrn,
        c_mrn,
        system,
    })
}
