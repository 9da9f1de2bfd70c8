//! Conversions between the protocol models.

mod bc_to_gcc;
mod cbc_bc;
mod cbc_ext;
mod cost;
mod dag;
mod ext_to_bc;
mod gcc_to_bc;
mod transport;

pub use bc_to_gcc::bc_to_gcc;
pub use cbc_bc::{
    bc_intermediate_form, bc_intermediate_form_with_budget, cuts_before_choices_bc,
    cuts_before_choices_bc_with_budget, is_cuts_before_choices, is_intermediate_form,
};
pub use cbc_ext::cuts_before_choices_ext;
pub use cost::{conversion_cost, CONVERSIONS};
pub use dag::{dag_to_tree, dag_to_tree_with_budget, dag_trace_to_tree};
pub use ext_to_bc::{bc_to_extended, extended_to_bc, extended_to_bc_with_budget};
pub use gcc_to_bc::{gcc_to_bc, gcc_to_bc_with_budget};
pub use transport::Transporter;

use crate::error::TransformError;
use crate::ir::{NodeId, Protocol};

/// Node count at which the blowup-prone conversions give up.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Source node behind each output node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeMap {
    pub origin: Vec<Option<NodeId>>,
}

impl NodeMap {
    pub fn identity(n: usize) -> Self {
        NodeMap {
            origin: (0..n).map(|i| Some(NodeId::from(i))).collect(),
        }
    }

    /// Output nodes copied from `source`.
    pub fn copies(&self, source: NodeId) -> Vec<NodeId> {
        self.origin
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Some(source))
            .map(|(i, _)| NodeId::from(i))
            .collect()
    }

    /// The relation as source node → copies, for every source node that has one.
    pub fn forward(&self, source_nodes: usize) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); source_nodes];
        for (i, o) in self.origin.iter().enumerate() {
            if let Some(o) = o {
                if o.index() < source_nodes {
                    out[o.index()].push(NodeId::from(i));
                }
            }
        }
        out
    }
}

/// Result of a conversion.
#[derive(Clone, Debug)]
pub struct Conversion<T> {
    pub output: T,
    pub map: NodeMap,
    pub transporter: Transporter,
}

pub(crate) fn check_input(p: &Protocol) -> Result<(), TransformError> {
    let report = p.validate();
    if report.is_valid() {
        Ok(())
    } else {
        Err(TransformError::Invalid(report.summary()))
    }
}
