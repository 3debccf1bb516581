//! The exact oracle backed by a finite [`ThermalSystem`].

use super::{Generator, Letter, TogfOracle};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::system::{Observable, ThermalSystem};
use num_complex::Complex64 as C64;

/// Oracle that evaluates temperature-ordered Green functions through the
/// exact trace of a finite system. Declared norm bounds are the operator
/// norms of the generators.
pub struct FiniteSystemOracle {
    sys: ThermalSystem,
    gens: Vec<Observable>,
    info: Vec<Generator>,
}

impl FiniteSystemOracle {
    /// The generator list must be closed under the star operation up to
    /// labeling: every generator's adjoint must appear in the list.
    pub fn new(sys: ThermalSystem, gens: Vec<Observable>) -> Result<Self> {
        let mut info = Vec::with_capacity(gens.len());
        for (i, g) in gens.iter().enumerate() {
            if g.dim() != sys.dim() {
                return Err(Error::Config(format!(
                    "generator {} has dimension {} but the system has {}",
                    g.label,
                    g.dim(),
                    sys.dim()
                )));
            }
            let adj = g.matrix.adjoint();
            let scale = g.matrix.norm().max(1e-300);
            let star = gens
                .iter()
                .position(|h| (&h.matrix - &adj).norm() <= 1e-10 * scale)
                .ok_or_else(|| {
                    Error::StarClosure(format!("generator {} has no star partner", g.label))
                })?;
            info.push(Generator {
                label: g.label.clone(),
                star,
                norm_bound: g.norm(),
            });
            let _ = i;
        }
        Ok(Self { sys, gens, info })
    }

    pub fn system(&self) -> &ThermalSystem {
        &self.sys
    }

    pub fn observable(&self, g: usize) -> &Observable {
        &self.gens[g]
    }
}

impl TogfOracle for FiniteSystemOracle {
    fn beta(&self) -> f64 {
        self.sys.beta()
    }

    fn generators(&self) -> &[Generator] {
        &self.info
    }

    /// Delegates to the exact trace. Cyclically ordered words reproduce
    /// `ThermalSystem::togf`; arbitrary time tuples evaluate the entire
    /// analytic continuation of the same trace.
    fn eval(&self, word: &[Letter]) -> Result<C64> {
        let z_word: Vec<(&Observable, C64)> = word
            .iter()
            .map(|l| (&self.gens[l.gen], C64::new(0.0, l.tau)))
            .collect();
        Ok(self.sys.green_function_unchecked(&z_word))
    }
}

/// The `d^2` matrix units of a `d`-dimensional system as observables,
/// labeled `e_ij`. This set is star-closed and generates the full algebra.
pub fn matrix_unit_generators(dim: usize) -> Vec<Observable> {
    let mut gens = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut m = CMat::zeros(dim, dim);
            m[(i, j)] = C64::new(1.0, 0.0);
            gens.push(Observable::new(format!("e{i}{j}"), m).expect("matrix unit is square"));
        }
    }
    gens
}

/// Matrix units plus the identity, for generator sets that need an explicit
/// unit element.
pub fn matrix_unit_generators_with_identity(dim: usize) -> Vec<Observable> {
    let mut gens = vec![Observable::identity(dim)];
    gens.extend(matrix_unit_generators(dim));
    gens
}
