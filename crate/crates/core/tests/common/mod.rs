//! Random valid series-parallel systems for property tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use mixsys_core::graph::{InteractionEdge, InteractionGraph, SchedulingConnector, SchedulingGraph, SystemModel};
use mixsys_core::{ComponentSpec, CostAnnotation, Decimal, Kind, PortSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Options {
    pub max_components: usize,
    pub choices: bool,
    pub ports: bool,
}

pub struct Generator {
    rng: ChaCha8Rng,
    opts: Options,
    comps: Vec<ComponentSpec>,
    conns: Vec<SchedulingConnector>,
}

const TAGS: [&str; 3] = ["alpha", "beta", "gamma"];

impl Generator {
    pub fn new(seed: u64, opts: Options) -> Self {
        Generator { rng: ChaCha8Rng::seed_from_u64(seed), opts, comps: Vec::new(), conns: Vec::new() }
    }

    fn leaf(&mut self) -> String {
        let id = format!("c{:02}", self.comps.len());
        let kinds = match self.rng.gen_range(0..4) {
            0 => [Kind::Software].into(),
            1 => [Kind::Hardware].into(),
            _ => [Kind::Software, Kind::Hardware].into(),
        };
        let mut dec = |hi: i64| Decimal::from_micros(self.rng.gen_range(0..=hi) * 1000);
        let costs = CostAnnotation {
            sw_time: dec(9000),
            hw_time: dec(3000),
            hw_area: dec(5000),
            sw_energy: dec(4000),
            hw_energy: dec(2000),
            sw_security: self.rng.gen_range(0..=5),
            hw_security: self.rng.gen_range(0..=5),
        };
        let mut ports = Vec::new();
        if self.opts.ports {
            for i in 0..self.rng.gen_range(0..3) {
                ports.push(PortSpec::input(format!("in{i}"), TAGS[self.rng.gen_range(0..3)]));
            }
            for i in 0..self.rng.gen_range(0..3) {
                ports.push(PortSpec::output(format!("out{i}"), TAGS[self.rng.gen_range(0..3)]));
            }
        }
        self.comps.push(ComponentSpec { id: id.clone(), allowed_kinds: kinds, ports, costs, behavior: "echo".into() });
        id
    }

    fn connector_id(&self) -> String {
        format!("k{}", self.conns.len())
    }

    /// Builds a block of exactly `budget` components; returns (entry, exit).
    fn block(&mut self, budget: usize) -> (String, String) {
        if budget == 1 {
            let id = self.leaf();
            return (id.clone(), id);
        }
        let choice = self.rng.gen_range(0..3);
        if budget >= 4 && choice > 0 {
            let fork = self.leaf();
            let inner = budget - 2;
            let k = self.rng.gen_range(2..=inner.min(3));
            let mut sizes = vec![1; k];
            for _ in 0..inner - k {
                let i = self.rng.gen_range(0..k);
                sizes[i] += 1;
            }
            let branches: Vec<(String, String)> = sizes.into_iter().map(|s| self.block(s)).collect();
            let join = self.leaf();
            let entries: Vec<&str> = branches.iter().map(|b| b.0.as_str()).collect();
            let exits: Vec<&str> = branches.iter().map(|b| b.1.as_str()).collect();
            if choice == 2 && self.opts.choices {
                let spec = self.comps.iter_mut().find(|c| c.id == fork).unwrap();
                spec.behavior = "coin".into();
                spec.ports.push(PortSpec::output("face", "label"));
                let labels = ["heads", "tails", "edge"];
                let pairs: Vec<(&str, &str)> = entries.iter().zip(labels).map(|(t, l)| (*t, l)).collect();
                let mut c = SchedulingConnector::xor(&self.connector_id(), &fork, "face", &pairs);
                if pairs.len() == 3 || self.rng.gen_bool(0.3) {
                    c.default_target = Some(entries[0].to_string());
                }
                self.conns.push(c);
                for exit in exits {
                    let id = self.connector_id();
                    self.conns.push(SchedulingConnector::seq(&id, exit, &join));
                }
            } else {
                let id = self.connector_id();
                self.conns.push(SchedulingConnector::par(&id, &fork, &entries));
                let id = self.connector_id();
                self.conns.push(SchedulingConnector::sync(&id, &exits, &join));
            }
            (fork, join)
        } else {
            let first = self.rng.gen_range(1..budget);
            let (a_in, a_out) = self.block(first);
            let (b_in, b_out) = self.block(budget - first);
            let id = self.connector_id();
            self.conns.push(SchedulingConnector::seq(&id, &a_out, &b_in));
            (a_in, b_out)
        }
    }

    pub fn model(mut self) -> SystemModel {
        let budget = self.rng.gen_range(1..=self.opts.max_components);
        let (initial, last) = self.block(budget);
        let mut edges = Vec::new();
        if self.opts.ports {
            let outs: Vec<_> = self
                .comps
                .iter()
                .flat_map(|c| c.outputs().map(move |p| (c.id.clone(), p.clone())))
                .collect();
            let ins: Vec<_> = self
                .comps
                .iter()
                .flat_map(|c| c.inputs().map(move |p| (c.id.clone(), p.clone())))
                .collect();
            let mut seen = BTreeSet::new();
            for _ in 0..self.rng.gen_range(0..=outs.len().max(1)) {
                if outs.is_empty() || ins.is_empty() {
                    break;
                }
                let (oc, op) = &outs[self.rng.gen_range(0..outs.len())];
                let (ic, ip) = &ins[self.rng.gen_range(0..ins.len())];
                if op.tag == ip.tag && seen.insert((oc, &op.name, ic, &ip.name)) {
                    edges.push(InteractionEdge::new((oc, &op.name), (ic, &ip.name)));
                }
            }
        }
        let mut finals: BTreeSet<String> = [last].into();
        if self.rng.gen_bool(0.2) {
            finals.insert(initial.clone());
        }
        SystemModel {
            name: format!("gen{}", self.comps.len()),
            spg: SchedulingGraph {
                fsc: self.comps.iter().map(|c| c.id.clone()).collect(),
                connectors: self.conns,
                initial,
                finals,
            },
            components: self.comps.into_iter().map(|c| (c.id.clone(), c)).collect(),
            ig: InteractionGraph { edges },
        }
    }
}

pub fn random_model(seed: u64, opts: Options) -> SystemModel {
    Generator::new(seed, opts).model()
}

pub fn fixture(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}
