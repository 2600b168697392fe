//! Multi-objective Bayesian optimization mathematics: GP regression, Pareto
//! dominance and sorting, exact hypervolume, EHVI, and the EHVI/TSEMO
//! samplers.

mod ehvi;
mod gp;
mod pareto;
mod tsemo;

pub use ehvi::{
    ehvi, ehvi_from_posterior, reference_point, sample_ehvi, EhviParams, QmcNormals,
    EHVI_QMC_DRAWS,
};
pub use gp::{gp_fit, gp_predict, GpHyper, GpModel, GpParams};
pub use pareto::{dominates, hypervolume, hypervolume_of, non_dominated_sort, ParetoFront};
pub use tsemo::{sample_tsemo, TsemoParams};
