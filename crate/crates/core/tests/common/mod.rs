#![allow(dead_code)]

use protqtn_core::ansatz::Family;
use protqtn_core::config::Schedule;
use protqtn_core::prelude::*;
use rand::Rng;

/// A random model instance: configuration, diagram and bound store.
pub struct Case {
    pub config: ModelConfig,
    pub diagram: SchemeDiagram,
    pub store: ParamStore,
}

impl Case {
    pub fn plan(&self) -> CircuitPlan {
        plan(&self.diagram, &self.config).unwrap()
    }

    pub fn describe(&self) -> String {
        format!(
            "{} {} {} q={} {:?} N={} schedule={:?}",
            self.config.topology,
            self.config.sharing,
            self.config.mode,
            self.config.q,
            self.config.ansatz.merge,
            self.diagram.sequence_length,
            self.config.schedule
        )
    }
}

pub fn random_family(rng: &mut impl Rng) -> Family {
    [Family::Sim14, Family::Sim15, Family::Iqp][rng.gen_range(0..3)]
}

/// Random case with at most `max_len` tokens whose full register has at
/// most `max_qubits` qubits.
pub fn random_case(rng: &mut impl Rng, mode: Mode, max_len: usize, max_qubits: usize) -> Case {
    loop {
        let topology = if rng.gen_bool(0.5) { Topology::Path } else { Topology::Convolutional };
        let n = rng.gen_range(1..=max_len);
        let q = rng.gen_range(1..=2);
        let padded = if topology == Topology::Path { n } else { n.next_power_of_two() };
        if padded * q > max_qubits {
            continue;
        }
        let sharing = if rng.gen_bool(0.5) { Sharing::Uniform } else { Sharing::Hierarchical };
        let mut config = ModelConfig::new(topology, sharing, mode, q, AnsatzFamily::new(random_family(rng), rng.gen_range(1..=2)));
        config.ansatz.classifier = AnsatzFamily::new(random_family(rng), rng.gen_range(1..=2));
        config.ansatz.word = AnsatzFamily::new(random_family(rng), rng.gen_range(1..=2));
        if rng.gen_bool(0.3) {
            config.schedule = Schedule::Lazy;
        }
        let tokens: Vec<TokenId> = (0..n).map(|_| TokenId(rng.gen_range(0..22))).collect();
        let diagram = config.build_diagram(&tokens).unwrap();
        let store = init_params(&config.schema(&[&diagram]), rng.gen(), InitScheme::UniformAngle);
        return Case { config, diagram, store };
    }
}
