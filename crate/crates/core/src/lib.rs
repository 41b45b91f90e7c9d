//! Quantum tensor network classifiers for symbol sequences.
//!
//! A token sequence is compiled into a string diagram (a path or a
//! convolutional tree of merge and filter boxes), each box is mapped to a
//! parameterized circuit, and the resulting circuit is simulated either with
//! postselection (pure states) or discarding (density matrices). Gradients are
//! available through reverse-mode differentiation, parameter shifts, central
//! differences and SPSA, and [`train`] wires them into an AdamW loop with early
//! stopping and k-fold validation.
//!
//! ```
//! use protqtn_core::prelude::*;
//!
//! let tokens = Vocabulary::standard().encode("AGSQ");
//! let diagram = build_ptn(&tokens).unwrap();
//! let config = ModelConfig::default();
//! let store = init_params(&config.schema(&[&diagram]), 7, InitScheme::default());
//! let plan = plan(&diagram, &config).unwrap();
//! let outcome = eval_discard(&plan, &store).unwrap();
//! assert!((outcome.p0 + outcome.p1 - 1.0).abs() < 1e-12);
//! ```

pub mod ansatz;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod diagram;
pub mod engine;
pub mod grad;
mod sim;
pub mod train;

mod error;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::ansatz::{
        build_layer, init_params, instantiate_box, param_count, unitary_of, AnsatzFamily, Gate,
        GateKind, GateSequence, InitScheme, ParamKey, ParamSchema, ParamStore, Sharing, Slot,
    };
    pub use crate::config::{BoxAnsatz, ModelConfig, Mode, Topology};
    pub use crate::data::{SequenceRecord, TokenId, Vocabulary};
    pub use crate::diagram::{build_ctn, build_ptn, validate, BoxRole, SchemeDiagram};
    pub use crate::engine::{
        brute_force_density, brute_force_state, eval_discard, eval_postselect, evaluate, plan,
        CircuitPlan, Outcome, Schedule,
    };
    pub use crate::grad::{
        grad_adjoint, grad_finite_diff, grad_param_shift, grad_spsa, Gradient,
    };
    pub use crate::train::{evaluate_split, kfold, train, Metrics, TrainConfig, TrainHistory};
}
